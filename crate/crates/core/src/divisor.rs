//! The divisor-counting constant `C_eps`: the smallest constant with
//! `divisor_sum(n) <= C_eps * n^eps` over a finite range of `n`. The bounds
//! only ever instantiate the constant at finite arguments, so the exact
//! finite-range maximum replaces the asymptotic, non-constructive constant.

use crate::error::{Error, Result};

/// Number of nonzero divisors of `n` in `[-n, n]`, i.e. twice the number of
/// positive divisors.
pub fn divisor_sum(n: u64) -> u64 {
    assert!(n >= 1, "divisor_sum requires n >= 1");
    let mut count = 0u64;
    let mut i = 1u64;
    while i * i <= n {
        if n % i == 0 {
            count += if i * i == n { 1 } else { 2 };
        }
        i += 1;
    }
    2 * count
}

/// The exact finite-range divisor constant
/// `C_eps(n_max) = max_{1 <= n <= n_max} divisor_sum(n) / n^eps`.
#[derive(Debug, Clone, Copy)]
pub struct DivisorConstant {
    pub epsilon: f64,
    pub n_max: u64,
    pub value: f64,
    /// Argument attaining the maximum (smallest such).
    pub argmax: u64,
}

/// Computes `C_eps(n_max)` by exhaustive scan, using a sieve of divisor
/// counts.
pub fn c_epsilon(eps: f64, n_max: u64) -> Result<DivisorConstant> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    if n_max > 100_000_000 {
        return Err(Error::ResourceLimit(format!(
            "divisor constant scan capped at 10^8, requested {n_max}"
        )));
    }
    let len = n_max as usize;
    let mut counts = vec![0u32; len + 1];
    let mut i = 1usize;
    while i <= len {
        let mut j = i;
        while j <= len {
            counts[j] += 1;
            j += i;
        }
        i += 1;
    }
    let mut best = 0.0f64;
    let mut argmax = 1u64;
    for n in 1..=n_max {
        let v = 2.0 * counts[n as usize] as f64 / (n as f64).powf(eps);
        if v > best {
            best = v;
            argmax = n;
        }
    }
    Ok(DivisorConstant { epsilon: eps, n_max, value: best, argmax })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn divisor_sum_brute(n: i64) -> u64 {
        let mut count = 0;
        for i in -n..=n {
            if i != 0 && n % i == 0 {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn divisor_sum_examples() {
        assert_eq!(divisor_sum(1), 2);
        assert_eq!(divisor_sum(12), divisor_sum_brute(12));
        assert_eq!(divisor_sum(12), 12);
        assert_eq!(divisor_sum(7), 4);
    }

    #[test]
    fn divisor_sum_matches_brute_force() {
        for n in 1..=2000u64 {
            assert_eq!(divisor_sum(n), divisor_sum_brute(n as i64), "n={n}");
        }
    }

    #[test]
    fn c_epsilon_small_ranges() {
        // eps=1, n_max=10: max of {2/1, 4/2, 4/3, 6/4, ...} = 2
        let c = c_epsilon(1.0, 10).unwrap();
        assert_eq!(c.value, 2.0);
        assert_eq!(c.argmax, 1);
        // n_max = 1 always gives 2
        let c = c_epsilon(0.123, 1).unwrap();
        assert_eq!(c.value, 2.0);
    }

    #[test]
    fn c_epsilon_monotone_in_eps() {
        let a = c_epsilon(0.25, 5000).unwrap().value;
        let b = c_epsilon(0.5, 5000).unwrap().value;
        let c = c_epsilon(1.0, 5000).unwrap().value;
        assert!(a >= b && b >= c);
        assert!(c >= 2.0);
    }

    #[test]
    fn golden_value_at_ten_thousand() {
        // Frozen from the exhaustive scan: the maximiser of 2 d(n)/sqrt(n)
        // over n <= 10^4 is n = 12 with 2*6/sqrt(12).
        let c = c_epsilon(0.5, 10_000).unwrap();
        assert_eq!(c.argmax, 12);
        let expected = 12.0 / 12f64.sqrt();
        assert!((c.value - expected).abs() < 1e-14);
    }

    #[test]
    fn bound_holds_on_range() {
        let c = c_epsilon(0.5, 3000).unwrap();
        for n in 1..=3000u64 {
            assert!(divisor_sum(n) as f64 <= c.value * (n as f64).sqrt() + 1e-9);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(c_epsilon(0.0, 10).is_err());
        assert!(c_epsilon(0.5, 0).is_err());
    }
}

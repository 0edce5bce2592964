//! Truncated tail sums of a sigma sequence together with analytic upper
//! bounds on the part outside the finite superset `J`.
//!
//! For a Korobov source the remainders come from closed-form totals: the full
//! sums `sum_h r(h)^{-s}` factor through the zeta function, so the mass
//! outside `J` is the total minus the exactly-summed part of `J`. The
//! index-weighted sum `sum i^{r eps} sigma_i^4` additionally uses the
//! cardinality bound `i <= mu(lambda) r(h_i)^{1/lambda}` to trade the unknown
//! position `i` for the computable value `r(h_i)`, minimised over a small
//! grid of admissible `lambda`.

use crate::error::{Error, Result};
use crate::space::{mu, IndexSet, SigmaSequence, SigmaSource};

/// Absolute accuracy for the zeta evaluations inside tail remainders.
const ZETA_TOL: f64 = 1e-12;

/// Tail sums past index `m`, split into the exactly-summed part over `J`
/// and analytic remainders for everything outside `J`.
#[derive(Debug, Clone, Copy)]
pub struct TailSums {
    /// `sum_{m < i <= |J|} sigma_i^2`
    pub s2: f64,
    /// `sum_{m < i <= |J|} i^{r eps} sigma_i^4`
    pub s4w: f64,
    /// `sum_{m < i <= |J|} sigma_i^4 ||h_i||_inf^eps`
    pub s4h: f64,
    /// upper bound on `sum_{i > |J|} sigma_i^2`
    pub remainder2: f64,
    /// upper bound on `sum_{i > |J|} i^{r eps} sigma_i^4`
    pub remainder4: f64,
    /// upper bound on `sum_{i > |J|} sigma_i^4 ||h_i||_inf^eps`
    pub remainder4h: f64,
}

impl TailSums {
    pub fn total2(&self) -> f64 {
        self.s2 + self.remainder2
    }

    pub fn total4w(&self) -> f64 {
        self.s4w + self.remainder4
    }

    pub fn total4h(&self) -> f64 {
        self.s4h + self.remainder4h
    }
}

/// Grid of `lambda` values inside `(1/2, alpha)` used to minimise remainder
/// bounds.
fn lambda_grid(alpha: f64) -> Vec<f64> {
    [0.1, 0.25, 0.5, 0.75, 0.9]
        .iter()
        .map(|f| 0.5 + (alpha - 0.5) * f)
        .filter(|l| *l > 0.5 && *l < alpha)
        .collect()
}

/// Computes the tail sums past `m` over the superset `J` plus remainders.
///
/// `eps` and `reg_r` are the exponents of the bound being fed (the
/// `i^{reg_r * eps}` and `||h||^eps` weights). Fails if `J` does not start
/// with the first `m` entries of the ordering.
pub fn tail_sums(
    seq: &SigmaSequence,
    m: usize,
    eps: f64,
    reg_r: f64,
    j_set: &IndexSet,
) -> Result<TailSums> {
    if m == 0 {
        return Err(Error::Domain("tail sums require m >= 1".into()));
    }
    if j_set.len() < m {
        return Err(Error::Domain(format!(
            "J has {} entries, fewer than m = {m}",
            j_set.len()
        )));
    }
    let first = seq.first_m(m)?;
    for i in 0..m {
        if first.entry(i).h != j_set.entry(i).h {
            return Err(Error::Domain(format!(
                "J does not contain the first {m} indices (mismatch at position {i})"
            )));
        }
    }

    let mut s2 = 0.0;
    let mut s4w = 0.0;
    let mut s4h = 0.0;
    for (idx, e) in j_set.entries().iter().enumerate().skip(m) {
        let i = (idx + 1) as f64;
        let s_sq = e.sigma * e.sigma;
        let s_4 = s_sq * s_sq;
        s2 += s_sq;
        s4w += i.powf(reg_r * eps) * s_4;
        s4h += s_4 * (e.hinf() as f64).powf(eps);
    }

    let (remainder2, remainder4, remainder4h) = match seq.source() {
        SigmaSource::Table(t) => {
            // Finite source: the part beyond J is an exact finite sum.
            let mut r2 = 0.0;
            let mut r4 = 0.0;
            let mut r4h = 0.0;
            for (idx, e) in t.entries().iter().enumerate().skip(j_set.len()) {
                let i = (idx + 1) as f64;
                let s_sq = e.sigma * e.sigma;
                let s_4 = s_sq * s_sq;
                r2 += s_sq;
                r4 += i.powf(reg_r * eps) * s_4;
                r4h += s_4 * (e.hinf() as f64).powf(eps);
            }
            (r2, r4, r4h)
        }
        SigmaSource::Korobov(p) => {
            let alpha = p.alpha();
            // sum_{h not in J} sigma_h^2 = total - part over J.
            let total2 = seq.sum_sigma_pow(2.0, ZETA_TOL)?;
            let in_j2: f64 = j_set.entries().iter().map(|e| e.sigma * e.sigma).sum();
            let r2 = (total2 - in_j2).max(0.0);

            // ||h||^eps <= r(h)^{eps/alpha}, so the h-weighted fourth-power
            // tail is dominated by sum r^{-(4 - eps/alpha)}.
            let s4 = 4.0 - eps / alpha;
            let total4h = seq.sum_sigma_pow(s4, ZETA_TOL)?;
            let in_j4h: f64 = j_set.entries().iter().map(|e| e.sigma.powf(s4)).sum();
            let r4h = (total4h - in_j4h).max(0.0);

            // i^{r eps} <= (mu(lambda) r(h_i)^{1/lambda})^{r eps}; minimise
            // over the lambda grid.
            let mut r4 = f64::INFINITY;
            for lambda in lambda_grid(alpha) {
                let s = 4.0 - reg_r * eps / lambda;
                if alpha * s <= 1.0 {
                    continue;
                }
                let mu_l = match mu(lambda, p, ZETA_TOL) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                let total = match seq.sum_sigma_pow(s, ZETA_TOL) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                let in_j: f64 = j_set.entries().iter().map(|e| e.sigma.powf(s)).sum();
                let candidate = mu_l.powf(reg_r * eps) * (total - in_j).max(0.0);
                if candidate < r4 {
                    r4 = candidate;
                }
            }
            if !r4.is_finite() {
                return Err(Error::Numerical(
                    "no admissible lambda for the index-weighted tail remainder".into(),
                ));
            }
            (r2, r4, r4h)
        }
    };

    Ok(TailSums { s2, s4w, s4h, remainder2, remainder4, remainder4h })
}

/// Upper bound on `sum_{h : r(h) > R} sigma_h^2` for a Korobov source, via
/// `r^{-2} = r^{-1/lambda} r^{1/lambda - 2} <= R^{1/lambda - 2} r^{-1/lambda}`.
pub fn korobov_far_mass(seq: &SigmaSequence, r_threshold: f64) -> Result<f64> {
    let p = seq
        .korobov_params()
        .ok_or_else(|| Error::Domain("far-mass bound requires a Korobov source".into()))?;
    if r_threshold <= 0.0 {
        return seq.sum_sigma_pow(2.0, ZETA_TOL);
    }
    let mut best = f64::INFINITY;
    for lambda in lambda_grid(p.alpha()) {
        let mu_l = match mu(lambda, p, ZETA_TOL) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let candidate = r_threshold.powf(1.0 / lambda - 2.0) * mu_l;
        if candidate < best {
            best = candidate;
        }
    }
    if !best.is_finite() {
        return Err(Error::Numerical("no admissible lambda for far-mass bound".into()));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{enumerate_cross, KorobovParams, DEFAULT_CROSS_CAP};

    #[test]
    fn table_supported_on_first_m_has_empty_tail() {
        let seq = SigmaSequence::table(1, vec![(vec![0], 1.0), (vec![1], 0.5)]).unwrap();
        let j = seq.first_m(2).unwrap();
        let t = tail_sums(&seq, 2, 0.5, 1.0, &j).unwrap();
        assert_eq!(t.s2, 0.0);
        assert_eq!(t.remainder2, 0.0);
        assert_eq!(t.remainder4, 0.0);
    }

    #[test]
    fn korobov_s2_matches_direct_sum() {
        // d=1, alpha=2, unit weights, m=1, J = cross(M=100):
        // S2 must equal the direct sum over J minus the first entry.
        let p = KorobovParams::unweighted(1, 2.0).unwrap();
        let seq = SigmaSequence::korobov(p.clone());
        let j = enumerate_cross(&p, 100.0, DEFAULT_CROSS_CAP).unwrap();
        let t = tail_sums(&seq, 1, 0.5, 1.0, &j).unwrap();
        let direct: f64 = j
            .entries()
            .iter()
            .skip(1)
            .map(|e| e.sigma * e.sigma)
            .sum();
        assert!((t.s2 - direct).abs() < 1e-14);
        // The remainder must upper-bound the true tail: total = pi^4/45 + 1
        // for d=1 alpha=2 (sum over h != 0 of h^-4 is 2 zeta(4)).
        let true_total = 1.0 + 2.0 * std::f64::consts::PI.powi(4) / 90.0;
        let true_tail = true_total - 1.0 - direct;
        assert!(t.remainder2 >= true_tail - 1e-12);
        assert!(t.remainder2 <= true_tail + 1e-9);
    }

    #[test]
    fn remainders_shrink_as_j_grows() {
        let p = KorobovParams::product(2, 2.0, vec![0.7, 0.7]).unwrap();
        let seq = SigmaSequence::korobov(p.clone());
        let j1 = enumerate_cross(&p, 10.0, DEFAULT_CROSS_CAP).unwrap();
        let j2 = enumerate_cross(&p, 100.0, DEFAULT_CROSS_CAP).unwrap();
        let t1 = tail_sums(&seq, 1, 0.5, 1.0, &j1).unwrap();
        let t2 = tail_sums(&seq, 1, 0.5, 1.0, &j2).unwrap();
        assert!(t1.remainder2 >= t2.remainder2);
        assert!(t1.remainder4 >= t2.remainder4);
        assert!(t1.remainder4h >= t2.remainder4h);
    }

    #[test]
    fn rejects_j_not_containing_first_m() {
        let seq = SigmaSequence::korobov(KorobovParams::unweighted(1, 2.0).unwrap());
        // A J missing the zero frequency cannot contain the first index.
        let bad = SigmaSequence::table(1, vec![(vec![1], 1.0), (vec![2], 0.5)])
            .unwrap()
            .first_m(2)
            .unwrap();
        assert!(tail_sums(&seq, 1, 0.5, 1.0, &bad).is_err());
    }
}

//! Probabilistic generator search: rejection sampling with the two
//! Chebyshev acceptance conditions from the bound proofs, plus deterministic
//! primality utilities for rational moduli.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::bounds::CriteriaThresholds;
use crate::divisor::DivisorConstant;
use crate::error::{Error, Result};
use crate::points::{
    build_generated_set, build_rational_generated_set, ContinuousGenerator, RationalGenerator,
};
use crate::wce::{worst_case_error_exact, SurrogateSpace, WceReport};

/// Deterministic Miller-Rabin, valid for all 64-bit integers with the fixed
/// base set below.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Smallest prime `>= ceil(x)`, for `2 <= x <= 2^62`.
pub fn next_prime_at_least(x: f64) -> Result<u64> {
    if !(x >= 2.0) {
        return Err(Error::Domain(format!("next prime search requires x >= 2, got {x}")));
    }
    if x > (1u64 << 62) as f64 {
        return Err(Error::ResourceLimit(format!(
            "prime search capped at 2^62, requested {x}"
        )));
    }
    let mut candidate = x.ceil() as u64;
    loop {
        if is_prime_u64(candidate) {
            return Ok(candidate);
        }
        candidate += 1;
    }
}

/// The two acceptance thresholds from the Chebyshev argument, precomputed
/// for a fixed `(space, n, m, eps)` instance.
#[derive(Debug, Clone, Copy)]
pub struct AcceptanceCriteria {
    thresholds: CriteriaThresholds,
}

impl AcceptanceCriteria {
    pub fn new(
        space: &SurrogateSpace,
        n: usize,
        m: usize,
        eps: f64,
        c_eps: &DivisorConstant,
    ) -> Result<Self> {
        Ok(Self { thresholds: CriteriaThresholds::compute(space, n, m, eps, c_eps)? })
    }

    pub fn thresholds(&self) -> &CriteriaThresholds {
        &self.thresholds
    }

    pub fn n(&self) -> usize {
        self.thresholds.n
    }

    pub fn m(&self) -> usize {
        self.thresholds.m
    }

    /// Negative minimum-singular-value threshold: that test is vacuous.
    pub fn min_sv_vacuous(&self) -> bool {
        self.thresholds.min_sv_vacuous()
    }
}

/// A candidate generator, continuous or rational.
#[derive(Debug, Clone)]
pub enum GeneratorKind {
    Continuous(ContinuousGenerator),
    Rational(RationalGenerator),
}

/// Outcome of testing (or searching for) a generator.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub generator: GeneratorKind,
    pub accepted: bool,
    pub min_sv_vacuous: bool,
    pub sigma_min_sq: f64,
    pub tail_op_sq: f64,
    pub wce_surrogate: f64,
    pub wce_upper: f64,
    pub bound_theorem: Option<f64>,
    pub trials_used: u64,
}

/// Tests one generator against both acceptance conditions and measures its
/// worst-case error.
pub fn accept(
    generator: &GeneratorKind,
    criteria: &AcceptanceCriteria,
    space: &SurrogateSpace,
    rank_tol: f64,
) -> Result<SearchResult> {
    let n = criteria.n();
    let nodes = match generator {
        GeneratorKind::Continuous(g) => build_generated_set(g, n)?,
        GeneratorKind::Rational(g) => build_rational_generated_set(g, n)?,
    };
    let report: WceReport =
        worst_case_error_exact(&nodes, criteria.m(), space, rank_tol, Some(criteria.thresholds()))?;
    let accepted =
        report.diag.min_sv_pass.unwrap_or(false) && report.diag.tail_pass.unwrap_or(false);
    Ok(SearchResult {
        generator: generator.clone(),
        accepted,
        min_sv_vacuous: criteria.min_sv_vacuous(),
        sigma_min_sq: report.diag.sigma_min_sq,
        tail_op_sq: report.diag.tail_op_sq,
        wce_surrogate: report.wce_surrogate,
        wce_upper: report.wce_upper,
        bound_theorem: report.bound_theorem,
        trials_used: 1,
    })
}

/// Samples continuous generators until one passes both acceptance
/// conditions; on exhaustion the best candidate by worst-case error is
/// returned with `accepted = false`.
pub fn search_continuous(
    criteria: &AcceptanceCriteria,
    space: &SurrogateSpace,
    max_trials: u64,
    seed: u64,
    rank_tol: f64,
) -> Result<SearchResult> {
    if max_trials == 0 {
        return Err(Error::InvalidParameter("max_trials must be at least 1".into()));
    }
    let d = space.seq().d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<SearchResult> = None;
    for trial in 1..=max_trials {
        let zeta: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let gen = GeneratorKind::Continuous(ContinuousGenerator::new(zeta)?);
        let mut result = accept(&gen, criteria, space, rank_tol)?;
        result.trials_used = trial;
        if result.accepted {
            return Ok(result);
        }
        if best
            .as_ref()
            .map(|b| result.wce_surrogate < b.wce_surrogate)
            .unwrap_or(true)
        {
            best = Some(result);
        }
    }
    let mut fallback = best.expect("at least one trial ran");
    fallback.trials_used = max_trials;
    Ok(fallback)
}

/// Samples rational generating vectors `z in {1..N}^d` until acceptance.
/// The modulus must be prime and large enough for the first-`m` frequencies
/// (`N > 4 n ||h_i||` for `i <= m`).
pub fn search_rational(
    n_mod: u64,
    criteria: &AcceptanceCriteria,
    space: &SurrogateSpace,
    max_trials: u64,
    seed: u64,
    rank_tol: f64,
) -> Result<SearchResult> {
    if max_trials == 0 {
        return Err(Error::InvalidParameter("max_trials must be at least 1".into()));
    }
    if !is_prime_u64(n_mod) {
        return Err(Error::NotPrime(n_mod));
    }
    let maxh = space.j_set().max_hinf_prefix(criteria.m());
    if n_mod as f64 <= 4.0 * criteria.n() as f64 * maxh as f64 {
        return Err(Error::Precondition(format!(
            "modulus {n_mod} violates N > 4 n ||h_i|| = {}",
            4.0 * criteria.n() as f64 * maxh as f64
        )));
    }
    let d = space.seq().d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<SearchResult> = None;
    for trial in 1..=max_trials {
        let z: Vec<u64> = (0..d).map(|_| rng.random_range(1..=n_mod)).collect();
        let gen = GeneratorKind::Rational(RationalGenerator::new(z, n_mod)?);
        let mut result = accept(&gen, criteria, space, rank_tol)?;
        result.trials_used = trial;
        if result.accepted {
            return Ok(result);
        }
        if best
            .as_ref()
            .map(|b| result.wce_surrogate < b.wce_surrogate)
            .unwrap_or(true)
        {
            best = Some(result);
        }
    }
    let mut fallback = best.expect("at least one trial ran");
    fallback.trials_used = max_trials;
    Ok(fallback)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::c_epsilon;
    use crate::space::{KorobovParams, SigmaSequence};

    fn korobov_surrogate(d: usize, alpha: f64, j_size: usize) -> SurrogateSpace {
        let params = KorobovParams::unweighted(d, alpha).unwrap();
        let seq = SigmaSequence::korobov(params);
        let j = seq.first_m(j_size).unwrap();
        SurrogateSpace::new(seq, j).unwrap()
    }

    #[test]
    fn primality_basics() {
        let primes = [2u64, 3, 5, 7, 31, 641, 65537, 1_000_003, 2_147_483_647];
        for p in primes {
            assert!(is_prime_u64(p), "{p} should be prime");
        }
        let composites = [1u64, 4, 9, 561, 100, 65536, 1_000_001, 25_326_001];
        for c in composites {
            assert!(!is_prime_u64(c), "{c} should be composite");
        }
    }

    #[test]
    fn next_prime_examples() {
        assert_eq!(next_prime_at_least(2.0).unwrap(), 2);
        assert_eq!(next_prime_at_least(632.46).unwrap(), 641);
        assert_eq!(next_prime_at_least(1e6).unwrap(), 1_000_003);
        assert!(next_prime_at_least(1.0).is_err());
        assert!(next_prime_at_least(1e19).is_err());
    }

    #[test]
    fn constant_column_always_passes_min_sv() {
        // m = 1 keeps only the zero frequency: the column is all ones and
        // sigma_min^2 = n exactly matches the (zero-shifted) threshold.
        let space = korobov_surrogate(1, 2.0, 41);
        let c = c_epsilon(0.5, 64).unwrap();
        let criteria = AcceptanceCriteria::new(&space, 64, 1, 0.5, &c).unwrap();
        assert!(!criteria.min_sv_vacuous());
        let gen = GeneratorKind::Continuous(ContinuousGenerator::new(vec![0.37]).unwrap());
        let result = accept(&gen, &criteria, &space, 1e-10).unwrap();
        assert!(result.sigma_min_sq >= 64.0 - 1e-9);
        assert!(
            result.sigma_min_sq >= criteria.thresholds().threshold_min_sv_sq,
            "constant column must pass the min-sv condition"
        );
    }

    #[test]
    fn degenerate_generator_rejected() {
        // All-zero zeta collapses the nodes; with m >= 2 and a positive
        // threshold the min-sv condition must fail.
        let space = korobov_surrogate(1, 2.0, 81);
        let n = 4096;
        let c = c_epsilon(0.5, n as u64).unwrap();
        let criteria = AcceptanceCriteria::new(&space, n, 2, 0.5, &c).unwrap();
        assert!(
            !criteria.min_sv_vacuous(),
            "instance chosen so the min-sv threshold is positive: {}",
            criteria.thresholds().threshold_min_sv_sq
        );
        let gen = GeneratorKind::Continuous(ContinuousGenerator::new(vec![0.0]).unwrap());
        let result = accept(&gen, &criteria, &space, 1e-10).unwrap();
        assert!(!result.accepted);
        assert!(result.sigma_min_sq < criteria.thresholds().threshold_min_sv_sq);
    }

    #[test]
    fn search_is_deterministic_and_counts_trials() {
        let space = korobov_surrogate(1, 2.0, 41);
        let c = c_epsilon(0.5, 128).unwrap();
        let criteria = AcceptanceCriteria::new(&space, 128, 3, 0.5, &c).unwrap();
        let a = search_continuous(&criteria, &space, 20, 99, 1e-10).unwrap();
        let b = search_continuous(&criteria, &space, 20, 99, 1e-10).unwrap();
        match (&a.generator, &b.generator) {
            (GeneratorKind::Continuous(x), GeneratorKind::Continuous(y)) => {
                assert_eq!(x.components(), y.components());
            }
            _ => panic!("expected continuous generators"),
        }
        assert_eq!(a.trials_used, b.trials_used);
        assert_eq!(a.wce_surrogate.to_bits(), b.wce_surrogate.to_bits());

        // max_trials = 1 returns that candidate even when rejected.
        let single = search_continuous(&criteria, &space, 1, 5, 1e-10).unwrap();
        assert_eq!(single.trials_used, 1);
    }

    #[test]
    fn exhausted_search_returns_best_candidate_unaccepted() {
        // m = 2 splits the tied sigma = 1 shell {0, -1, 1}: a single tail
        // column already has squared norm n sigma_{m+1}^2 = n, which exceeds
        // the tail threshold at this n, so no generator can be accepted.
        let space = korobov_surrogate(1, 2.0, 41);
        let n = 2048;
        let c = c_epsilon(0.5, n as u64).unwrap();
        let criteria = AcceptanceCriteria::new(&space, n, 2, 0.5, &c).unwrap();
        assert!((n as f64) > criteria.thresholds().threshold_tail_op_sq);
        let result = search_continuous(&criteria, &space, 3, 17, 1e-10).unwrap();
        assert!(!result.accepted);
        assert_eq!(result.trials_used, 3);
        assert!(result.wce_surrogate.is_finite());
    }

    #[test]
    fn rational_search_validates_modulus() {
        let space = korobov_surrogate(1, 2.0, 41);
        let c = c_epsilon(0.5, 16).unwrap();
        let criteria = AcceptanceCriteria::new(&space, 16, 3, 0.5, &c).unwrap();
        // composite modulus
        assert!(matches!(
            search_rational(100, &criteria, &space, 5, 1, 1e-10),
            Err(Error::NotPrime(100))
        ));
        // prime but violating N > 4 n ||h||: 4*16*1 = 64 >= 61
        assert!(matches!(
            search_rational(61, &criteria, &space, 5, 1, 1e-10),
            Err(Error::Precondition(_))
        ));
        // large enough prime works
        let res = search_rational(67, &criteria, &space, 50, 1, 1e-10);
        assert!(res.is_ok());
    }
}

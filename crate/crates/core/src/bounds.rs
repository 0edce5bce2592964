//! Theoretical worst-case-error bounds for generated sets: the general and
//! regularity-based forms for continuous generators, the rational-generator
//! form with its congruence corrections, and the Korobov-specific closed
//! forms driven by `mu(lambda)`.
//!
//! Infeasibility (a failed side condition) is a first-class value so that
//! parameter sweeps can tabulate feasibility frontiers instead of aborting.

use crate::divisor::DivisorConstant;
use crate::error::{Error, Result};
use crate::search::next_prime_at_least;
use crate::space::{mu, KorobovParams, SigmaSource, Weights};
use crate::tails::{korobov_far_mass, tail_sums};
use crate::wce::SurrogateSpace;
use crate::zeta::zeta;

const ZETA_TOL: f64 = 1e-12;

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

/// The two Chebyshev thresholds from the acceptance argument, which also
/// determine the general theorem bound `sigma_{m+1} + sqrt(T / D)`.
#[derive(Debug, Clone, Copy)]
pub struct CriteriaThresholds {
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub c_eps_value: f64,
    pub sigma_m_plus_1: f64,
    /// `D = n - sqrt(6 C_eps n^{1+eps} m max_{i<=m} ||h_i||^eps)`; may be
    /// negative, in which case the minimum-singular-value test is vacuous.
    pub threshold_min_sv_sq: f64,
    /// `T = sum_{i>m} sigma_i^2 + sqrt(6 C_eps n^{1+eps} sum_{i>m} sigma_i^4 ||h_i||^eps)`,
    /// with tails taken over `J` plus analytic remainders.
    pub threshold_tail_op_sq: f64,
}

impl CriteriaThresholds {
    pub fn compute(
        space: &SurrogateSpace,
        n: usize,
        m: usize,
        eps: f64,
        c_eps: &DivisorConstant,
    ) -> Result<Self> {
        check_eps(eps)?;
        if m == 0 || m > n {
            return Err(Error::Precondition(format!(
                "thresholds require 1 <= m <= n, got m = {m}, n = {n}"
            )));
        }
        let ts = tail_sums(space.seq(), m, eps, 1.0, space.j_set())?;
        let nf = n as f64;
        let c = c_eps.value;
        let maxh = space.j_set().max_hinf_prefix(m) as f64;
        let spread = 6.0 * c * nf.powf(1.0 + eps);
        let threshold_min_sv_sq = nf - (spread * m as f64 * maxh.powf(eps)).sqrt();
        let threshold_tail_op_sq = ts.total2() + (spread * ts.total4h()).sqrt();
        Ok(Self {
            n,
            m,
            eps,
            c_eps_value: c,
            sigma_m_plus_1: space.sigma_m_plus_1(m)?,
            threshold_min_sv_sq,
            threshold_tail_op_sq,
        })
    }

    pub fn min_sv_vacuous(&self) -> bool {
        self.threshold_min_sv_sq <= 0.0
    }

    /// The general theorem bound; `None` when the denominator radicand is
    /// not positive.
    pub fn theorem_bound(&self) -> Option<f64> {
        if self.threshold_min_sv_sq > 0.0 {
            Some(
                self.sigma_m_plus_1
                    + (self.threshold_tail_op_sq / self.threshold_min_sv_sq).sqrt(),
            )
        } else {
            None
        }
    }
}

/// General continuous-generator bound (no regularity condition).
#[derive(Debug, Clone)]
pub struct GeneralBound {
    pub value: Option<f64>,
    pub feasible: bool,
    pub thresholds: CriteriaThresholds,
}

/// Evaluates the general bound
/// `sigma_{m+1} + sqrt(T) / sqrt(D)` with `T`, `D` as in
/// [`CriteriaThresholds`]; infeasible when `D <= 0`.
pub fn theorem_bound_general(
    n: usize,
    m: usize,
    eps: f64,
    space: &SurrogateSpace,
    c_eps: &DivisorConstant,
) -> Result<GeneralBound> {
    if !space.j_set().zero_in_prefix(m) {
        return Err(Error::Precondition(
            "the zero frequency must be among the first m indices".into(),
        ));
    }
    let thresholds = CriteriaThresholds::compute(space, n, m, eps, c_eps)?;
    let value = thresholds.theorem_bound();
    Ok(GeneralBound { feasible: value.is_some(), value, thresholds })
}

/// Bound under the regularity condition `||h_i|| <= C_1 i^r`.
#[derive(Debug, Clone)]
pub struct RegularBound {
    /// The n-dependent display.
    pub value_n: Option<f64>,
    /// The weaker m-only display (reported alongside).
    pub value_m: Option<f64>,
    pub mbound_ok: bool,
    pub sigma_m_plus_1: f64,
}

fn check_hinf_regularity(space: &SurrogateSpace, c1: f64, r: f64) -> Result<()> {
    for (idx, e) in space.j_set().entries().iter().enumerate() {
        let i = (idx + 1) as f64;
        if (e.hinf() as f64) > c1 * i.powf(r) * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "regularity ||h_i|| <= C1 i^r fails at i = {} (||h|| = {})",
                idx + 1,
                e.hinf()
            )));
        }
    }
    Ok(())
}

/// Whether `n^{1-eps} >= 24 C_eps C_1^eps m^{1+r eps}` holds.
pub fn mbound_holds(n: usize, m: usize, eps: f64, c1: f64, r: f64, c_eps: &DivisorConstant) -> bool {
    (n as f64).powf(1.0 - eps)
        >= 24.0 * c_eps.value * c1.powf(eps) * (m as f64).powf(1.0 + r * eps)
}

/// Largest `m >= 1` satisfying the m-bound at these parameters, if any. At
/// desk scale the 24 C_eps constant often leaves no admissible m; callers
/// typically fall back to `m = 1`.
pub fn largest_m_satisfying_mbound(
    n: usize,
    eps: f64,
    c1: f64,
    r: f64,
    c_eps: &DivisorConstant,
) -> Option<usize> {
    if !mbound_holds(n, 1, eps, c1, r, c_eps) {
        return None;
    }
    let mut m = 1;
    while m < n && mbound_holds(n, m + 1, eps, c1, r, c_eps) {
        m += 1;
    }
    Some(m)
}

pub fn theorem_bound_regular(
    n: usize,
    m: usize,
    eps: f64,
    c1: f64,
    r: f64,
    space: &SurrogateSpace,
    c_eps: &DivisorConstant,
) -> Result<RegularBound> {
    check_eps(eps)?;
    if !(c1 >= 1.0) || !(r > 0.0) {
        return Err(Error::Domain(format!(
            "regularity constants require C1 >= 1 and r > 0, got C1 = {c1}, r = {r}"
        )));
    }
    if m == 0 || m > n {
        return Err(Error::Precondition(format!(
            "requires 1 <= m <= n, got m = {m}, n = {n}"
        )));
    }
    if !space.j_set().zero_in_prefix(m) {
        return Err(Error::Precondition(
            "the zero frequency must be among the first m indices".into(),
        ));
    }
    check_hinf_regularity(space, c1, r)?;
    let sigma_m_plus_1 = space.sigma_m_plus_1(m)?;
    if !mbound_holds(n, m, eps, c1, r, c_eps) {
        return Ok(RegularBound { value_n: None, value_m: None, mbound_ok: false, sigma_m_plus_1 });
    }
    let ts = tail_sums(space.seq(), m, eps, r, space.j_set())?;
    let nf = n as f64;
    let mf = m as f64;
    let c = c_eps.value;
    let value_n = sigma_m_plus_1
        + (2.0 / nf * ts.total2()
            + (24.0 * c * c1.powf(eps) * nf.powf(eps - 1.0) * ts.total4w()).sqrt())
        .sqrt();
    let value_m = sigma_m_plus_1
        + (ts.total2() / mf + (mf.powf(-1.0 - r * eps) * ts.total4w()).sqrt()).sqrt();
    Ok(RegularBound {
        value_n: Some(value_n),
        value_m: Some(value_m),
        mbound_ok: true,
        sigma_m_plus_1,
    })
}

/// `sum over h = N t, t in Z^d, of r(h)^{-s}`: the sigma mass on frequencies
/// divisible by `N` (including the origin).
fn congruence_class_total(params: &KorobovParams, s: f64, n_mod: u64) -> Result<f64> {
    if !(params.alpha() * s > 1.0) {
        return Err(Error::Domain("congruence mass diverges".into()));
    }
    let z = 2.0 * zeta(params.alpha() * s, ZETA_TOL)? * (n_mod as f64).powf(-params.alpha() * s);
    match params.weights() {
        Weights::Product(g) => {
            let mut prod = 1.0;
            for gj in g {
                prod *= 1.0 + gj.powf(s) * z;
            }
            Ok(prod)
        }
        Weights::General(map) => {
            let mut sum = 0.0;
            for (&mask, &gu) in map {
                sum += gu.powf(s) * z.powi(mask.count_ones() as i32);
            }
            Ok(sum)
        }
    }
}

fn h_congruent_zero(h: &[i64], n_mod: u64) -> bool {
    h.iter().all(|&hj| hj.rem_euclid(n_mod as i64) == 0)
}

/// `sum_{i > m, h_i = 0 mod N} sigma_i^2`, exact over `J` with the
/// closed-form mass for the part outside `J`.
pub fn congruence_tail_mass(space: &SurrogateSpace, m: usize, n_mod: u64) -> Result<f64> {
    let j = space.j_set();
    match space.seq().source() {
        SigmaSource::Table(t) => {
            let mut sum = 0.0;
            for e in t.entries().iter().skip(m) {
                if h_congruent_zero(&e.h, n_mod) {
                    sum += e.sigma * e.sigma;
                }
            }
            Ok(sum)
        }
        SigmaSource::Korobov(p) => {
            let total = congruence_class_total(p, 2.0, n_mod)?;
            let mut in_j_all = 0.0;
            let mut in_j_tail = 0.0;
            for (idx, e) in j.entries().iter().enumerate() {
                if h_congruent_zero(&e.h, n_mod) {
                    let sq = e.sigma * e.sigma;
                    in_j_all += sq;
                    if idx >= m {
                        in_j_tail += sq;
                    }
                }
            }
            Ok(in_j_tail + (total - in_j_all).max(0.0))
        }
    }
}

/// Upper bound on `sum_{i > m, 2 n ||h_i|| > N} sigma_i^2`.
pub fn far_norm_tail_mass(
    space: &SurrogateSpace,
    m: usize,
    n: usize,
    n_mod: u64,
) -> Result<f64> {
    let j = space.j_set();
    let cutoff = n_mod as f64 / (2.0 * n as f64);
    let mut in_j = 0.0;
    for e in j.entries().iter().skip(m) {
        if 2.0 * n as f64 * e.hinf() as f64 > n_mod as f64 {
            in_j += e.sigma * e.sigma;
        }
    }
    let outside = match space.seq().source() {
        SigmaSource::Table(t) => {
            let mut sum = 0.0;
            for e in t.entries().iter().skip(j.len()) {
                if 2.0 * n as f64 * e.hinf() as f64 > n_mod as f64 {
                    sum += e.sigma * e.sigma;
                }
            }
            sum
        }
        SigmaSource::Korobov(p) => {
            // ||h|| > N/(2n) forces r(h) > (N/(2n))^alpha since gamma <= 1.
            let far = korobov_far_mass(space.seq(), cutoff.powf(p.alpha()))?;
            far.min(space.tail2())
        }
    };
    Ok(in_j + outside)
}

/// Rational-generator bound with the congruence and far-frequency
/// corrections.
#[derive(Debug, Clone)]
pub struct RationalBound {
    pub value: Option<f64>,
    pub feasible: bool,
    pub mbound_ok: bool,
    pub first_n_bound_ok: bool,
    pub s_cong: f64,
    pub s_pair: f64,
    pub sigma_m_plus_1: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn rational_theorem_bound(
    n: usize,
    m: usize,
    eps: f64,
    c1: f64,
    r: f64,
    n_mod: u64,
    space: &SurrogateSpace,
    c_eps: &DivisorConstant,
) -> Result<RationalBound> {
    check_eps(eps)?;
    if !crate::search::is_prime_u64(n_mod) {
        return Err(Error::NotPrime(n_mod));
    }
    if m == 0 || m > n {
        return Err(Error::Precondition(format!(
            "requires 1 <= m <= n, got m = {m}, n = {n}"
        )));
    }
    if !space.j_set().zero_in_prefix(m) {
        return Err(Error::Precondition(
            "the zero frequency must be among the first m indices".into(),
        ));
    }
    check_hinf_regularity(space, c1, r)?;
    let sigma_m_plus_1 = space.sigma_m_plus_1(m)?;

    // N > 4 n ||h_i|| for i <= m.
    let maxh = space.j_set().max_hinf_prefix(m);
    let first_n_bound_ok = (n_mod as f64) > 4.0 * n as f64 * maxh as f64;
    let mbound_ok = mbound_holds(n, m, eps, c1, r, c_eps);
    if !first_n_bound_ok || !mbound_ok {
        return Ok(RationalBound {
            value: None,
            feasible: false,
            mbound_ok,
            first_n_bound_ok,
            s_cong: f64::NAN,
            s_pair: f64::NAN,
            sigma_m_plus_1,
        });
    }

    let ts = tail_sums(space.seq(), m, eps, r, space.j_set())?;
    let s_cong = congruence_tail_mass(space, m, n_mod)?;
    let s_far = far_norm_tail_mass(space, m, n, n_mod)?;
    let s_pair = ts.total2() * s_far;

    let nf = n as f64;
    let c = c_eps.value;
    let inner = 24.0 * c * c1.powf(eps) * nf.powf(eps - 1.0) * ts.total4w()
        + 24.0 / nf * s_pair;
    let value = sigma_m_plus_1
        + (2.0 * s_cong + 2.0 / nf * ts.total2() + inner.sqrt()).sqrt();
    Ok(RationalBound {
        value: Some(value),
        feasible: true,
        mbound_ok,
        first_n_bound_ok,
        s_cong,
        s_pair,
        sigma_m_plus_1,
    })
}

/// Korobov-space bound with explicit constants.
#[derive(Debug, Clone)]
pub struct KorobovBoundReport {
    /// The cross radius `M` induced by `n`, `eps`, `lambda`.
    pub big_m: f64,
    /// `m = |A_{d,alpha,gamma}(M)|`.
    pub m: u64,
    /// `3 (24 C_eps mu(lambda) n^{-(1-eps)/(1+eps)})^lambda` (continuous) or
    /// the same with constant 4 (rational).
    pub bound: f64,
    /// Whether the size condition `m^lambda mu^{-lambda} > gamma_0^{-1}`
    /// holds; the closed-form value is reported either way.
    pub feasible: bool,
    pub mu_value: f64,
    /// Prime modulus, for the rational variant.
    pub n_mod: Option<u64>,
}

#[allow(clippy::too_many_arguments)]
fn korobov_bound_inner(
    n: usize,
    eps: f64,
    lambda: f64,
    params: &KorobovParams,
    c_eps: &DivisorConstant,
    tol: f64,
    cap: usize,
    constant: f64,
) -> Result<KorobovBoundReport> {
    check_eps(eps)?;
    let mu_value = mu(lambda, params, tol)?;
    let nf = n as f64;
    let c = c_eps.value;
    let big_m = (nf.powf(1.0 - eps) / (24.0 * c)).powf(lambda / (1.0 + eps))
        * mu_value.powf(-lambda);
    let cross = crate::space::enumerate_cross(params, big_m, cap)?;
    let m = cross.len() as u64;
    let feasible =
        (m as f64).powf(lambda) * mu_value.powf(-lambda) > 1.0 / params.gamma_empty();
    let bound = constant
        * (24.0 * c * mu_value * nf.powf(-(1.0 - eps) / (1.0 + eps))).powf(lambda);
    Ok(KorobovBoundReport { big_m, m, bound, feasible, mu_value, n_mod: None })
}

/// Continuous-generator Korobov bound
/// `3 (24 C_eps mu(lambda) n^{-(1-eps)/(1+eps)})^lambda`.
pub fn korobov_bound(
    n: usize,
    eps: f64,
    lambda: f64,
    params: &KorobovParams,
    c_eps: &DivisorConstant,
    tol: f64,
    cap: usize,
) -> Result<KorobovBoundReport> {
    korobov_bound_inner(n, eps, lambda, params, c_eps, tol, cap, 3.0)
}

/// Rational-generator Korobov bound: constant 4 instead of 3, plus the
/// smallest admissible prime modulus
/// `N >= 2 n^{2 + 1/(2 alpha - alpha/lambda)}`.
pub fn korobov_rational_bound(
    n: usize,
    eps: f64,
    lambda: f64,
    params: &KorobovParams,
    c_eps: &DivisorConstant,
    tol: f64,
    cap: usize,
) -> Result<KorobovBoundReport> {
    let mut report = korobov_bound_inner(n, eps, lambda, params, c_eps, tol, cap, 4.0)?;
    let exponent = 2.0 + 1.0 / (2.0 * params.alpha() - params.alpha() / lambda);
    let n_mod = next_prime_at_least(2.0 * (n as f64).powf(exponent))?;
    report.n_mod = Some(n_mod);
    Ok(report)
}

/// Predicted convergence exponent `alpha (1-eps)/(1+r eps)` for slope
/// fitting; the logarithmic factor's exponent is reported back separately.
#[derive(Debug, Clone, Copy)]
pub struct RatePrediction {
    pub exponent: f64,
    pub log_exponent: f64,
}

pub fn sobolev_rate_prediction(alpha: f64, beta: f64, r: f64, eps: f64) -> Result<RatePrediction> {
    if !(alpha > 0.5) {
        return Err(Error::Domain(format!("alpha must exceed 1/2, got {alpha}")));
    }
    check_eps(eps)?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("r must be positive, got {r}")));
    }
    Ok(RatePrediction { exponent: (1.0 - eps) / (1.0 + r * eps) * alpha, log_exponent: beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::c_epsilon;
    use crate::space::{KorobovParams, SigmaSequence, DEFAULT_CROSS_CAP};

    fn korobov_space(d: usize, alpha: f64, j_size: usize) -> SurrogateSpace {
        let params = KorobovParams::unweighted(d, alpha).unwrap();
        let seq = SigmaSequence::korobov(params);
        let j = seq.first_m(j_size).unwrap();
        SurrogateSpace::new(seq, j).unwrap()
    }

    #[test]
    fn general_bound_infeasible_for_small_n() {
        let space = korobov_space(1, 2.0, 41);
        let c = c_epsilon(0.5, 16).unwrap();
        // m = 3 puts ||h|| = 1 in the max, and n = 16 is far too small.
        let b = theorem_bound_general(16, 3, 0.5, &space, &c).unwrap();
        assert!(!b.feasible);
        assert!(b.value.is_none());
    }

    #[test]
    fn general_bound_finite_positive_for_large_n() {
        // n = 2048, m = 2 (maxh = 1) clears the denominator radicand:
        // 2048 - sqrt(6 C 2048^1.5 * 2) ~ 86 > 0.
        let space = korobov_space(1, 2.0, 81);
        let c = c_epsilon(0.5, 2048).unwrap();
        let b = theorem_bound_general(2048, 2, 0.5, &space, &c).unwrap();
        let v = b.value.expect("expected a feasible bound at n = 2048, m = 2");
        assert!(v > 0.0 && v.is_finite());
        // Direct re-evaluation from tail sums.
        let ts = crate::tails::tail_sums(space.seq(), 2, 0.5, 1.0, space.j_set()).unwrap();
        let nf = 2048f64;
        let t = ts.total2() + (6.0 * c.value * nf.powf(1.5) * ts.total4h()).sqrt();
        let d = nf
            - (6.0 * c.value * nf.powf(1.5) * 2.0
                * (space.j_set().max_hinf_prefix(2) as f64).sqrt())
            .sqrt();
        let expected = space.sigma_m_plus_1(2).unwrap() + (t / d).sqrt();
        assert!((v - expected).abs() < 1e-12 * expected.abs());
    }

    #[test]
    fn general_bound_monotone_in_n() {
        let space = korobov_space(1, 2.0, 81);
        let mut last = f64::INFINITY;
        for n in [512usize, 1024, 2048, 4096] {
            let c = c_epsilon(0.5, n as u64).unwrap();
            let b = theorem_bound_general(n, 2, 0.5, &space, &c).unwrap();
            if let Some(v) = b.value {
                assert!(v <= last + 1e-12, "bound grew with n");
                last = v;
            }
        }
        assert!(last.is_finite(), "no feasible n in the grid");
    }

    #[test]
    fn regular_bound_infeasible_when_mbound_fails() {
        let space = korobov_space(1, 2.0, 41);
        let c = c_epsilon(0.5, 256).unwrap();
        let b = theorem_bound_regular(256, 4, 0.5, 1.0, 1.0, &space, &c).unwrap();
        assert!(!b.mbound_ok);
        assert!(b.value_n.is_none());
    }

    #[test]
    fn regular_bound_m_form_dominates_n_form() {
        // Pick eps small so mbound can hold with m = 1.
        let space = korobov_space(1, 2.0, 81);
        let eps = 0.1;
        let c = c_epsilon(eps, 4096).unwrap();
        let b = theorem_bound_regular(4096, 1, eps, 1.0, 1.0, &space, &c).unwrap();
        assert!(b.mbound_ok, "instance should satisfy the m-bound");
        let (vn, vm) = (b.value_n.unwrap(), b.value_m.unwrap());
        assert!(vm >= vn - 1e-12, "m-form {vm} should dominate n-form {vn}");

        // And the general bound is dominated by the regular n-form.
        let g = theorem_bound_general(4096, 1, eps, &space, &c).unwrap();
        let vg = g.value.unwrap();
        assert!(vg <= vn + 1e-12, "general {vg} vs regular {vn}");
    }

    #[test]
    fn general_dominated_by_regular_on_mbound_grid() {
        // Wherever the m-bound holds, the denominator radicand is at least
        // n/2 and the general display is dominated by the regular n-form.
        let space = korobov_space(1, 2.0, 81);
        let mut checked = 0;
        for eps in [0.05, 0.1, 0.15] {
            for n in [2048usize, 4096, 8192] {
                let c = c_epsilon(eps, n as u64).unwrap();
                for m in 1..=3usize {
                    if !mbound_holds(n, m, eps, 1.0, 1.0, &c) {
                        continue;
                    }
                    let general = theorem_bound_general(n, m, eps, &space, &c).unwrap();
                    let regular =
                        theorem_bound_regular(n, m, eps, 1.0, 1.0, &space, &c).unwrap();
                    let vg = general.value.expect("m-bound implies feasibility");
                    let vn = regular.value_n.unwrap();
                    let vm = regular.value_m.unwrap();
                    assert!(vg <= vn * (1.0 + 1e-12), "general {vg} vs regular {vn}");
                    assert!(vn <= vm * (1.0 + 1e-12), "n-form {vn} vs m-form {vm}");
                    checked += 1;
                }
            }
        }
        assert!(checked >= 3, "grid produced too few m-bound-feasible points: {checked}");
    }

    #[test]
    fn rational_bound_preconditions() {
        let space = korobov_space(1, 2.0, 41);
        let c = c_epsilon(0.5, 64).unwrap();
        // Non-prime modulus is an error.
        assert!(matches!(
            rational_theorem_bound(8, 2, 0.5, 1.0, 1.0, 100, &space, &c),
            Err(Error::NotPrime(100))
        ));
        // Tiny modulus violates the first-N bound: infeasible, not an error.
        let b = rational_theorem_bound(8, 2, 0.5, 1.0, 1.0, 13, &space, &c).unwrap();
        assert!(!b.first_n_bound_ok);
        assert!(b.value.is_none());
    }

    #[test]
    fn congruence_masses_match_exhaustive_scan() {
        // d=1, J = {-20..20}, N=23, n=2: the membership sets {h = 0 mod 23}
        // and {2 n ||h|| > 23} from an exhaustive scan match the closed-form
        // accounting.
        let params = KorobovParams::unweighted(1, 2.0).unwrap();
        let seq = SigmaSequence::korobov(params.clone());
        let j = seq.first_m(41).unwrap(); // {0, +-1, ..., +-20}
        let space = SurrogateSpace::new(seq, j).unwrap();
        let m = 1;
        let n = 2;
        let n_mod = 23u64;

        // Exhaustive within J: no h in {-20..20}\{0} is divisible by 23.
        let s_cong = congruence_tail_mass(&space, m, n_mod).unwrap();
        // The closed-form out-of-J mass: sum over h = 23 t, t != 0 of h^-4.
        let expected_out = 2.0 * crate::zeta::zeta(4.0, 1e-14).unwrap() / 23f64.powi(4);
        assert!((s_cong - expected_out).abs() < 1e-12, "s_cong = {s_cong}");

        // Far-norm scan within J: 2*2*|h| > 23 means |h| >= 6.
        let s_far = far_norm_tail_mass(&space, m, n, n_mod).unwrap();
        let exact_in_j: f64 = (6i64..=20)
            .map(|h| 2.0 * ((h as f64).powi(-2)).powi(2))
            .sum();
        assert!(s_far >= exact_in_j, "must include the J part");
        // The out-of-J allowance is bounded by the global tail bound.
        assert!(s_far <= exact_in_j + space.tail2() + 1e-12);
    }

    #[test]
    fn rational_bound_reduces_when_modulus_is_huge() {
        // With N beyond every frequency in sight the congruence terms are
        // dominated by the out-of-J masses, which vanish as J grows.
        let params = KorobovParams::unweighted(1, 2.0).unwrap();
        let seq = SigmaSequence::korobov(params);
        let j = seq.first_m(201).unwrap();
        let space = SurrogateSpace::new(seq, j).unwrap();
        let eps = 0.1;
        let c = c_epsilon(eps, 4096).unwrap();
        let b = rational_theorem_bound(4096, 1, eps, 1.0, 1.0, 1_000_003, &space, &c).unwrap();
        assert!(b.feasible);
        assert!(b.s_cong < 1e-12);
        let cont = theorem_bound_regular(4096, 1, eps, 1.0, 1.0, &space, &c).unwrap();
        let (rv, cv) = (b.value.unwrap(), cont.value_n.unwrap());
        // The extra terms are tiny, so the two bounds nearly coincide.
        assert!((rv - cv).abs() / cv < 0.05, "rational {rv} vs continuous {cv}");
    }

    #[test]
    fn korobov_bound_scaling_in_n() {
        let params = KorobovParams::unweighted(1, 2.0).unwrap();
        let c = c_epsilon(0.5, 8192).unwrap();
        let lambda = 1.5;
        let b1 = korobov_bound(1024, 0.5, lambda, &params, &c, 1e-12, DEFAULT_CROSS_CAP).unwrap();
        let b2 = korobov_bound(2048, 0.5, lambda, &params, &c, 1e-12, DEFAULT_CROSS_CAP).unwrap();
        let expected_ratio = 2f64.powf(-lambda * (1.0 - 0.5) / (1.0 + 0.5));
        assert!(((b2.bound / b1.bound) - expected_ratio).abs() < 1e-12);
    }

    #[test]
    fn korobov_bound_size_condition_infeasible_at_small_n() {
        // The induced cross radius stays below r(0) = 1 until n is enormous,
        // so the size condition fails while the closed-form value remains
        // reported.
        let params = KorobovParams::unweighted(1, 2.0).unwrap();
        let c = c_epsilon(0.5, 64).unwrap();
        let b = korobov_bound(64, 0.5, 1.0, &params, &c, 1e-12, DEFAULT_CROSS_CAP).unwrap();
        assert!(!b.feasible);
        assert_eq!(b.m, 0);
        assert!(b.bound.is_finite() && b.bound > 0.0);
    }

    #[test]
    fn korobov_rational_prime_example() {
        // alpha=2, lambda=1, n=10: exponent 2.5, N = least prime >= 2*10^2.5.
        let params = KorobovParams::unweighted(1, 2.0).unwrap();
        let c = c_epsilon(0.5, 1024).unwrap();
        let b =
            korobov_rational_bound(10, 0.5, 1.0, &params, &c, 1e-12, DEFAULT_CROSS_CAP).unwrap();
        assert_eq!(b.n_mod, Some(641));
        // Constant ratio 4/3 against the continuous form.
        let cont = korobov_bound(10, 0.5, 1.0, &params, &c, 1e-12, DEFAULT_CROSS_CAP).unwrap();
        assert!((b.bound / cont.bound - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn korobov_bound_m_matches_cross_cardinality() {
        let params = KorobovParams::unweighted(1, 2.0).unwrap();
        let c = c_epsilon(0.5, 4096).unwrap();
        let b = korobov_bound(4096, 0.5, 1.5, &params, &c, 1e-12, DEFAULT_CROSS_CAP).unwrap();
        let cross =
            crate::space::enumerate_cross(&params, b.big_m, DEFAULT_CROSS_CAP).unwrap();
        assert_eq!(b.m, cross.len() as u64);
    }

    #[test]
    fn rate_prediction_limits() {
        let p = sobolev_rate_prediction(2.0, 0.0, 1.0, 1e-9).unwrap();
        assert!((p.exponent - 2.0).abs() < 1e-8);
        let p = sobolev_rate_prediction(2.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(p.exponent, 0.0);
        let p = sobolev_rate_prediction(2.0, 2.0, 1.0, 0.3).unwrap();
        assert!((p.exponent - 2.0 * 0.7 / 1.3).abs() < 1e-12);
        assert_eq!(p.log_exponent, 2.0);
    }
}

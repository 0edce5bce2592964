//! Monte Carlo and exhaustive verification of the expectation and variance
//! formulas for the random quadratic forms `||A* t||^2` and `||A t||^2`,
//! where `A = [a_i exp(2 pi i k h_i . zeta)]`.
//!
//! Trials are partitioned into fixed-size blocks; each block draws from its
//! own ChaCha substream derived from `(seed, block index)`, so results do not
//! depend on how many workers run them.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::divisor::DivisorConstant;
use crate::error::{Error, Result};
use crate::C64;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const MC_BLOCK: u64 = 4096;

/// A weighted frequency system: non-increasing weights `a_i` attached to
/// distinct frequencies `h_i`, sampled at `n` row indices `k = 1..n`.
#[derive(Debug, Clone)]
pub struct WeightedSystem {
    entries: Vec<(f64, Vec<i64>)>,
    n: usize,
    d: usize,
}

impl WeightedSystem {
    pub fn new(n: usize, d: usize, entries: Vec<(f64, Vec<i64>)>) -> Result<Self> {
        if n == 0 || d == 0 || entries.is_empty() {
            return Err(Error::InvalidParameter(
                "weighted system needs n >= 1, d >= 1 and at least one entry".into(),
            ));
        }
        for (a, h) in &entries {
            if !(*a >= 0.0) {
                return Err(Error::InvalidParameter(format!("negative weight {a}")));
            }
            if h.len() != d {
                return Err(Error::ShapeMismatch(format!(
                    "frequency of length {} in dimension {d}",
                    h.len()
                )));
            }
        }
        for w in entries.windows(2) {
            if w[0].0 < w[1].0 {
                return Err(Error::InvalidParameter(
                    "weights must be non-increasing".into(),
                ));
            }
        }
        let mut seen = entries.iter().map(|(_, h)| h.clone()).collect::<Vec<_>>();
        seen.sort();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidParameter(format!(
                    "duplicate frequency {:?}",
                    w[0]
                )));
            }
        }
        Ok(Self { entries, n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[(f64, Vec<i64>)] {
        &self.entries
    }

    fn hinf(h: &[i64]) -> f64 {
        h.iter().map(|&x| x.unsigned_abs()).max().unwrap_or(0) as f64
    }
}

/// Which quadratic form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadForm {
    /// `||A^* t||^2` with `t` of length `n`.
    AStarT,
    /// `||A t||^2` with `t` of length `|entries|`.
    AT,
}

/// Evaluates the chosen quadratic form at a concrete generator.
pub fn quad_form(system: &WeightedSystem, zeta: &[f64], t: &[C64], which: QuadForm) -> f64 {
    let phases: Vec<f64> = system
        .entries
        .iter()
        .map(|(_, h)| {
            h.iter()
                .zip(zeta)
                .map(|(&hj, &zj)| hj as f64 * zj)
                .sum::<f64>()
        })
        .collect();
    match which {
        QuadForm::AStarT => {
            // (A* t)_i = a_i sum_k conj(e^{2 pi i k theta_i}) t_k
            let mut total = 0.0;
            for ((a, _), &theta) in system.entries.iter().zip(&phases) {
                let mut acc = C64::new(0.0, 0.0);
                for (k0, tk) in t.iter().enumerate() {
                    let angle = -TWO_PI * ((k0 + 1) as f64 * theta).fract();
                    acc += tk * C64::new(angle.cos(), angle.sin());
                }
                total += a * a * acc.norm_sqr();
            }
            total
        }
        QuadForm::AT => {
            let mut total = 0.0;
            for k in 1..=system.n {
                let mut acc = C64::new(0.0, 0.0);
                for (((a, _), &theta), ti) in
                    system.entries.iter().zip(&phases).zip(t)
                {
                    let angle = TWO_PI * (k as f64 * theta).fract();
                    acc += ti * C64::new(a * angle.cos(), a * angle.sin());
                }
                total += acc.norm_sqr();
            }
            total
        }
    }
}

/// Closed-form expectation of `||A* t||^2` over uniform `zeta`:
/// `sum_i a_i^2 sum_{k,l} t_k conj(t_l) 1(k h_i = l h_i)`; the indicator is 1
/// exactly when `k = l` or `h_i = 0`.
pub fn expected_a_star_t(system: &WeightedSystem, t: &[C64]) -> Result<f64> {
    if t.len() != system.n {
        return Err(Error::ShapeMismatch(format!(
            "t has length {}, expected n = {}",
            t.len(),
            system.n
        )));
    }
    let t_norm_sq: f64 = t.iter().map(|c| c.norm_sqr()).sum();
    let t_sum: C64 = t.iter().sum();
    let mut total = 0.0;
    for (a, h) in &system.entries {
        if h.iter().all(|&x| x == 0) {
            total += a * a * t_sum.norm_sqr();
        } else {
            total += a * a * t_norm_sq;
        }
    }
    Ok(total)
}

/// Closed-form expectation of `||A t||^2`: `n sum_i a_i^2 |t_i|^2`.
pub fn expected_a_t(system: &WeightedSystem, t: &[C64]) -> Result<f64> {
    if t.len() != system.entries.len() {
        return Err(Error::ShapeMismatch(format!(
            "t has length {}, expected |entries| = {}",
            t.len(),
            system.entries.len()
        )));
    }
    Ok(system.n as f64
        * system
            .entries
            .iter()
            .zip(t)
            .map(|((a, _), ti)| a * a * ti.norm_sqr())
            .sum::<f64>())
}

/// Variance bound for `||A* t||^2` at unit `t`:
/// `2 C_eps n^{1+eps} sum_{h_i != 0} a_i^4 ||h_i||^eps`.
pub fn variance_bound_a_star(system: &WeightedSystem, eps: f64, c_eps: &DivisorConstant) -> f64 {
    let sum: f64 = system
        .entries
        .iter()
        .filter(|(_, h)| h.iter().any(|&x| x != 0))
        .map(|(a, h)| a.powi(4) * WeightedSystem::hinf(h).powf(eps))
        .sum();
    2.0 * c_eps.value * (system.n as f64).powf(1.0 + eps) * sum
}

/// Variance bound for `||A t||^2` at unit `t`:
/// `2 C_eps n^{1+eps} (max a_i^2) (sum a_i^2 ||h_i||^{2 eps})^{1/2} (sum a_i^2)^{1/2}`.
pub fn variance_bound_a(system: &WeightedSystem, eps: f64, c_eps: &DivisorConstant) -> f64 {
    let max_a_sq = system
        .entries
        .iter()
        .map(|(a, _)| a * a)
        .fold(0.0, f64::max);
    let s_weighted: f64 = system
        .entries
        .iter()
        .map(|(a, h)| a * a * WeightedSystem::hinf(h).powf(2.0 * eps))
        .sum();
    let s_plain: f64 = system.entries.iter().map(|(a, _)| a * a).sum();
    2.0 * c_eps.value * (system.n as f64).powf(1.0 + eps) * max_a_sq
        * s_weighted.sqrt()
        * s_plain.sqrt()
}

/// Quadratic form at a rational generator `z / N`, with phases reduced in
/// exact integer arithmetic.
fn quad_form_rational(
    system: &WeightedSystem,
    z: &[u64],
    n_mod: u64,
    t: &[C64],
    which: QuadForm,
) -> f64 {
    let nm = n_mod as i128;
    // p_i = h_i . z mod N
    let residues: Vec<i128> = system
        .entries
        .iter()
        .map(|(_, h)| {
            h.iter()
                .zip(z)
                .fold(0i128, |acc, (&hj, &zj)| {
                    (acc + hj as i128 * zj as i128).rem_euclid(nm)
                })
        })
        .collect();
    let root = |phase: i128| -> C64 {
        let angle = TWO_PI * (phase as f64 / n_mod as f64);
        C64::new(angle.cos(), angle.sin())
    };
    match which {
        QuadForm::AStarT => {
            let mut total = 0.0;
            for ((a, _), &p) in system.entries.iter().zip(&residues) {
                let mut acc = C64::new(0.0, 0.0);
                for (k0, tk) in t.iter().enumerate() {
                    let phase = ((k0 as i128 + 1) * p).rem_euclid(nm);
                    acc += tk * root(phase).conj();
                }
                total += a * a * acc.norm_sqr();
            }
            total
        }
        QuadForm::AT => {
            let mut total = 0.0;
            for k in 1..=system.n as i128 {
                let mut acc = C64::new(0.0, 0.0);
                for (((a, _), &p), ti) in system.entries.iter().zip(&residues).zip(t) {
                    let phase = (k * p).rem_euclid(nm);
                    acc += ti * root(phase) * *a;
                }
                total += acc.norm_sqr();
            }
            total
        }
    }
}

/// Exact mean and population variance of the chosen quadratic form over all
/// `z in {1..N}^d` (the uniform rational-generator distribution), with exact
/// integer phase reduction.
pub fn exhaustive_rational_moments(
    system: &WeightedSystem,
    t: &[C64],
    n_mod: u64,
    which: QuadForm,
) -> Result<(f64, f64)> {
    if !crate::search::is_prime_u64(n_mod) {
        return Err(Error::NotPrime(n_mod));
    }
    let expected_len = match which {
        QuadForm::AStarT => system.n,
        QuadForm::AT => system.entries.len(),
    };
    if t.len() != expected_len {
        return Err(Error::ShapeMismatch(format!(
            "t has length {}, expected {expected_len}",
            t.len()
        )));
    }
    let count = (n_mod as f64).powi(system.d as i32);
    if count > 1e7 {
        return Err(Error::ResourceLimit(format!(
            "exhaustive scan over N^d = {count} exceeds the 10^7 cap"
        )));
    }
    let mut z = vec![1u64; system.d];
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    let total = count as u64;
    for _ in 0..total {
        let v = quad_form_rational(system, &z, n_mod, t, which);
        sum += v;
        sum_sq += v * v;
        // lexicographic counter over {1..N}^d
        for slot in z.iter_mut().rev() {
            if *slot == n_mod {
                *slot = 1;
            } else {
                *slot += 1;
                break;
            }
        }
    }
    let mean = sum / count;
    let variance = (sum_sq / count - mean * mean).max(0.0);
    Ok((mean, variance))
}

/// A seeded Monte Carlo estimate of the mean and variance of a quadratic
/// form over uniform `zeta in [0,1)^d`.
#[derive(Debug, Clone, Copy)]
pub struct MomentEstimate {
    pub mean: f64,
    pub variance: f64,
    pub trials: u64,
    pub std_error: f64,
}

/// Runs `trials` samples (at least 100) with a deterministic, platform-stable
/// stream: block `b` uses ChaCha8 stream `b` of the given seed.
pub fn mc_moments(
    system: &WeightedSystem,
    t: &[C64],
    which: QuadForm,
    trials: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 trials, got {trials}"
        )));
    }
    let expected_len = match which {
        QuadForm::AStarT => system.n,
        QuadForm::AT => system.entries.len(),
    };
    if t.len() != expected_len {
        return Err(Error::ShapeMismatch(format!(
            "t has length {}, expected {expected_len}",
            t.len()
        )));
    }
    let blocks = trials.div_ceil(MC_BLOCK);
    let partials: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b + 1);
            let lo = b * MC_BLOCK;
            let hi = ((b + 1) * MC_BLOCK).min(trials);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut zeta = vec![0.0f64; system.d];
            for _ in lo..hi {
                for zj in zeta.iter_mut() {
                    *zj = rng.random::<f64>();
                }
                let v = quad_form(system, &zeta, t, which);
                sum += v;
                sum_sq += v * v;
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let nf = trials as f64;
    let mean = sum / nf;
    let variance = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    let std_error = (variance / nf).sqrt();
    Ok(MomentEstimate { mean, variance, trials, std_error })
}

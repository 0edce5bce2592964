//! Weighted Korobov space data: subset weights, the decay function
//! `r_{alpha,gamma}`, sigma sequences with their deterministic ordering,
//! hyperbolic cross enumeration and space-level sums.
//!
//! The ordering of frequency vectors is total and deterministic: entries are
//! sorted by sigma descending, ties broken by max-norm ascending and then
//! lexicographically on the components. Every index set produced by this
//! module is a prefix of that global ordering (up to the stated boundary-tie
//! rule for crosses).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::zeta::zeta;
use crate::C64;

/// Default cap on enumerated cross cardinality.
pub const DEFAULT_CROSS_CAP: usize = 10_000_000;

/// Subset weights `gamma_u` for `u` a subset of `{1..d}`, encoded as bitmasks.
#[derive(Debug, Clone)]
pub enum Weights {
    /// `gamma_u = prod_{j in u} gamma_j`; the empty product gives `gamma_() = 1`.
    Product(Vec<f64>),
    /// Explicit table over all `2^d` subsets, keyed by bitmask.
    General(BTreeMap<u64, f64>),
}

/// The space definition: dimension, smoothness and subset weights.
#[derive(Debug, Clone)]
pub struct KorobovParams {
    d: usize,
    alpha: f64,
    weights: Weights,
}

impl KorobovParams {
    /// Product-form weights from per-coordinate factors in `(0, 1]`.
    pub fn product(d: usize, alpha: f64, gamma: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(alpha > 0.5) {
            return Err(Error::InvalidParameter(format!(
                "smoothness alpha must exceed 1/2, got {alpha}"
            )));
        }
        if gamma.len() != d {
            return Err(Error::InvalidParameter(format!(
                "expected {d} per-coordinate weights, got {}",
                gamma.len()
            )));
        }
        for (j, g) in gamma.iter().enumerate() {
            if !(*g > 0.0 && *g <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "gamma_{} = {g} outside (0, 1]",
                    j + 1
                )));
            }
        }
        Ok(Self { d, alpha, weights: Weights::Product(gamma) })
    }

    /// Uniform unit weights (the unweighted space).
    pub fn unweighted(d: usize, alpha: f64) -> Result<Self> {
        Self::product(d, alpha, vec![1.0; d])
    }

    /// Fully general subset weights; the map must cover all `2^d` subsets.
    pub fn general(d: usize, alpha: f64, map: BTreeMap<u64, f64>) -> Result<Self> {
        if d == 0 || d > 24 {
            return Err(Error::InvalidParameter(format!(
                "general weights supported for 1 <= d <= 24, got {d}"
            )));
        }
        if !(alpha > 0.5) {
            return Err(Error::InvalidParameter(format!(
                "smoothness alpha must exceed 1/2, got {alpha}"
            )));
        }
        let full = 1u64 << d;
        if map.len() != full as usize {
            return Err(Error::InvalidParameter(format!(
                "general weights must define all {full} subsets, got {}",
                map.len()
            )));
        }
        for (&mask, &g) in &map {
            if mask >= full {
                return Err(Error::InvalidParameter(format!(
                    "subset mask {mask:#b} outside {{1..{d}}}"
                )));
            }
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "gamma for mask {mask:#b} = {g} outside (0, 1]"
                )));
            }
        }
        Ok(Self { d, alpha, weights: Weights::General(map) })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Weight of the subset encoded by `mask`.
    pub fn gamma(&self, mask: u64) -> f64 {
        match &self.weights {
            Weights::Product(g) => {
                let mut prod = 1.0;
                for (j, gj) in g.iter().enumerate() {
                    if mask & (1 << j) != 0 {
                        prod *= gj;
                    }
                }
                prod
            }
            Weights::General(map) => map[&mask],
        }
    }

    pub fn gamma_empty(&self) -> f64 {
        self.gamma(0)
    }

    /// Largest weight over all subsets.
    pub fn gamma_max(&self) -> f64 {
        match &self.weights {
            // Factors lie in (0, 1], so the empty product dominates.
            Weights::Product(_) => 1.0,
            Weights::General(map) => map.values().cloned().fold(0.0, f64::max),
        }
    }
}

/// Support bitmask of a frequency vector.
pub fn support_mask(h: &[i64]) -> u64 {
    let mut mask = 0u64;
    for (j, &hj) in h.iter().enumerate() {
        if hj != 0 {
            mask |= 1 << j;
        }
    }
    mask
}

/// The Korobov decay function
/// `r_{alpha,gamma}(h) = gamma_supp(h)^{-1} * prod_{j in supp(h)} |h_j|^alpha`.
pub fn r_alpha_gamma(h: &[i64], params: &KorobovParams) -> f64 {
    debug_assert_eq!(h.len(), params.d);
    let mut prod = 1.0f64;
    for &hj in h {
        if hj != 0 {
            prod *= (hj.abs() as f64).powf(params.alpha);
        }
    }
    prod / params.gamma(support_mask(h))
}

/// One ordered entry: a frequency vector and its sigma value.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub h: Vec<i64>,
    pub sigma: f64,
}

impl IndexEntry {
    pub fn hinf(&self) -> u64 {
        self.h.iter().map(|&x| x.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().all(|&x| x == 0)
    }
}

/// Total deterministic order: sigma descending, then max-norm ascending,
/// then lexicographic on components.
pub fn entry_order(a: &IndexEntry, b: &IndexEntry) -> Ordering {
    b.sigma
        .total_cmp(&a.sigma)
        .then_with(|| a.hinf().cmp(&b.hinf()))
        .then_with(|| a.h.cmp(&b.h))
}

/// Ordered list of distinct frequency vectors with their sigma values.
#[derive(Debug, Clone)]
pub struct IndexSet {
    d: usize,
    entries: Vec<IndexEntry>,
}

impl IndexSet {
    /// Builds from raw entries: sorts, checks positivity and distinctness.
    pub fn new(d: usize, mut entries: Vec<IndexEntry>) -> Result<Self> {
        for e in &entries {
            if e.h.len() != d {
                return Err(Error::ShapeMismatch(format!(
                    "frequency vector of length {} in dimension {d}",
                    e.h.len()
                )));
            }
            if !(e.sigma > 0.0 && e.sigma.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "sigma must be positive and finite, got {}",
                    e.sigma
                )));
            }
        }
        entries.sort_by(entry_order);
        for w in entries.windows(2) {
            if w[0].h == w[1].h {
                return Err(Error::InvalidParameter(format!(
                    "duplicate frequency vector {:?}",
                    w[0].h
                )));
            }
        }
        Ok(Self { d, entries })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &IndexEntry {
        &self.entries[i]
    }

    /// The first `m` entries as a new set.
    pub fn prefix(&self, m: usize) -> Result<IndexSet> {
        if m > self.len() {
            return Err(Error::Exhausted { requested: m, available: self.len() });
        }
        Ok(IndexSet { d: self.d, entries: self.entries[..m].to_vec() })
    }

    /// The entries past position `m` as a new set.
    pub fn suffix(&self, m: usize) -> Result<IndexSet> {
        if m > self.len() {
            return Err(Error::Exhausted { requested: m, available: self.len() });
        }
        Ok(IndexSet { d: self.d, entries: self.entries[m..].to_vec() })
    }

    /// Largest max-norm among the first `m` entries.
    pub fn max_hinf_prefix(&self, m: usize) -> u64 {
        self.entries[..m.min(self.len())]
            .iter()
            .map(|e| e.hinf())
            .max()
            .unwrap_or(0)
    }

    /// Whether the zero frequency appears among the first `m` entries.
    pub fn zero_in_prefix(&self, m: usize) -> bool {
        self.entries[..m.min(self.len())].iter().any(|e| e.is_zero())
    }

    /// Position of a frequency vector, if present.
    pub fn position(&self, h: &[i64]) -> Option<usize> {
        self.entries.iter().position(|e| e.h == h)
    }

    /// CSV serialization: header `h_1,...,h_d,sigma`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let header: Vec<String> = (1..=self.d).map(|j| format!("h_{j}")).collect();
        writeln!(out, "{},sigma", header.join(","))?;
        for e in &self.entries {
            let comps: Vec<String> = e.h.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{},{:.16e}", comps.join(","), e.sigma)?;
        }
        Ok(())
    }
}

/// Enumerates the weighted hyperbolic cross `{ h : r_{alpha,gamma}(h) <= M }`,
/// sorted by the deterministic ordering.
///
/// Depth-first coordinate recursion; a branch is cut as soon as the partial
/// product of `|h_j|^alpha` exceeds `M * gamma_max`, which every extension of
/// the branch would also do.
pub fn enumerate_cross(params: &KorobovParams, m_bound: f64, cap: usize) -> Result<IndexSet> {
    if !(m_bound >= 0.0) {
        return Err(Error::Domain(format!("cross radius must be nonnegative, got {m_bound}")));
    }
    let limit = m_bound * params.gamma_max();
    let radius = if limit >= 1.0 {
        limit.powf(1.0 / params.alpha).floor() as i64
    } else {
        0
    };
    let mut entries = Vec::new();
    let mut h = vec![0i64; params.d];
    descend(params, m_bound, limit, radius, 0, 1.0, &mut h, &mut entries, cap)?;
    IndexSet::new(params.d, entries)
}

#[allow(clippy::too_many_arguments)]
fn descend(
    params: &KorobovParams,
    m_bound: f64,
    limit: f64,
    radius: i64,
    coord: usize,
    partial: f64,
    h: &mut Vec<i64>,
    entries: &mut Vec<IndexEntry>,
    cap: usize,
) -> Result<()> {
    if coord == params.d {
        let r = r_alpha_gamma(h, params);
        if r <= m_bound {
            if entries.len() >= cap {
                return Err(Error::ResourceLimit(format!(
                    "cross cardinality exceeds cap {cap}"
                )));
            }
            entries.push(IndexEntry { h: h.clone(), sigma: 1.0 / r });
        }
        return Ok(());
    }
    for hj in -radius..=radius {
        let next = if hj == 0 {
            partial
        } else {
            partial * (hj.abs() as f64).powf(params.alpha)
        };
        if next > limit {
            continue;
        }
        h[coord] = hj;
        descend(params, m_bound, limit, radius, coord + 1, next, h, entries, cap)?;
        h[coord] = 0;
    }
    Ok(())
}

/// Cardinality of the unweighted (`alpha = 1`, `gamma = 1`) hyperbolic cross,
/// computed by the recurrence
/// `|A_{d+1}(M)| = |A_d(M)| + 2 * sum_{h=1}^{floor(M)} |A_d(M/h)|`
/// without enumerating any vectors.
pub fn unweighted_cross_cardinality(d: u32, m_bound: f64) -> u64 {
    if m_bound < 1.0 || d == 0 {
        return if d == 0 && m_bound >= 1.0 { 1 } else { 0 };
    }
    if d == 1 {
        return 1 + 2 * (m_bound.floor() as u64);
    }
    let mut total = unweighted_cross_cardinality(d - 1, m_bound);
    let top = m_bound.floor() as u64;
    for h in 1..=top {
        total += 2 * unweighted_cross_cardinality(d - 1, m_bound / h as f64);
    }
    total
}

/// A sigma sequence: either induced by Korobov parameters or an explicit
/// finite table.
#[derive(Debug, Clone)]
pub enum SigmaSource {
    Korobov(KorobovParams),
    Table(IndexSet),
}

#[derive(Debug, Clone)]
pub struct SigmaSequence {
    source: SigmaSource,
}

impl SigmaSequence {
    pub fn korobov(params: KorobovParams) -> Self {
        Self { source: SigmaSource::Korobov(params) }
    }

    /// Explicit table from `(h, sigma)` pairs; sorted on construction.
    pub fn table(d: usize, pairs: Vec<(Vec<i64>, f64)>) -> Result<Self> {
        let entries = pairs
            .into_iter()
            .map(|(h, sigma)| IndexEntry { h, sigma })
            .collect();
        Ok(Self { source: SigmaSource::Table(IndexSet::new(d, entries)?) })
    }

    pub fn source(&self) -> &SigmaSource {
        &self.source
    }

    pub fn d(&self) -> usize {
        match &self.source {
            SigmaSource::Korobov(p) => p.d(),
            SigmaSource::Table(t) => t.d(),
        }
    }

    pub fn korobov_params(&self) -> Option<&KorobovParams> {
        match &self.source {
            SigmaSource::Korobov(p) => Some(p),
            SigmaSource::Table(_) => None,
        }
    }

    /// The first `m` entries of the deterministic ordering.
    pub fn first_m(&self, m: usize) -> Result<IndexSet> {
        match &self.source {
            SigmaSource::Table(t) => {
                if t.len() < m {
                    return Err(Error::Exhausted { requested: m, available: t.len() });
                }
                t.prefix(m)
            }
            SigmaSource::Korobov(p) => {
                if m == 0 {
                    return IndexSet::new(p.d(), Vec::new());
                }
                let mut m_bound = (1.0f64 / p.gamma_empty()).max(1.0) * 2.0;
                loop {
                    let cross = enumerate_cross(p, m_bound, DEFAULT_CROSS_CAP)?;
                    if cross.len() >= m {
                        return cross.prefix(m);
                    }
                    m_bound *= 4.0;
                }
            }
        }
    }

    /// Sigma of the `(m+1)`-th entry; zero when a table is exhausted.
    pub fn sigma_m_plus_1(&self, m: usize) -> Result<f64> {
        match &self.source {
            SigmaSource::Table(t) => {
                Ok(if t.len() <= m { 0.0 } else { t.entry(m).sigma })
            }
            SigmaSource::Korobov(_) => Ok(self.first_m(m + 1)?.entry(m).sigma),
        }
    }

    /// `sum_h r(h)^{-s}` over the whole lattice `Z^d` (Korobov: closed form
    /// via the zeta function; table: finite sum of `sigma^s`).
    pub fn sum_sigma_pow(&self, s: f64, tol: f64) -> Result<f64> {
        match &self.source {
            SigmaSource::Table(t) => {
                Ok(t.entries().iter().map(|e| e.sigma.powf(s)).sum())
            }
            SigmaSource::Korobov(p) => weighted_r_sum(p, s, tol),
        }
    }
}

/// `sum_{h in Z^d} r_{alpha,gamma}(h)^{-s} = sum_u gamma_u^s (2 zeta(alpha s))^{|u|}`,
/// finite for `alpha * s > 1`.
pub fn weighted_r_sum(params: &KorobovParams, s: f64, tol: f64) -> Result<f64> {
    if !(params.alpha * s > 1.0) {
        return Err(Error::Domain(format!(
            "sum of r^(-s) diverges: alpha*s = {} <= 1",
            params.alpha * s
        )));
    }
    let z = 2.0 * zeta(params.alpha * s, tol)?;
    match &params.weights {
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

/// `mu(lambda) = sum_u gamma_u^{1/lambda} (2 zeta(alpha/lambda))^{|u|}`,
/// defined for `1/2 < lambda < alpha`.
pub fn mu(lambda: f64, params: &KorobovParams, tol: f64) -> Result<f64> {
    if !(lambda > 0.5 && lambda < params.alpha) {
        return Err(Error::Domain(format!(
            "mu requires 1/2 < lambda < alpha = {}, got {lambda}",
            params.alpha
        )));
    }
    weighted_r_sum(params, 1.0 / lambda, tol)
}

/// Truncated kernel `sum_i sigma_i^2 exp(2 pi i h_i . (x - y))`.
pub fn kernel_eval(x: &[f64], y: &[f64], index_set: &IndexSet) -> C64 {
    debug_assert_eq!(x.len(), index_set.d());
    debug_assert_eq!(y.len(), index_set.d());
    let mut acc = C64::new(0.0, 0.0);
    for e in index_set.entries() {
        let mut phase = 0.0f64;
        for (j, &hj) in e.h.iter().enumerate() {
            phase += hj as f64 * (x[j] - y[j]);
        }
        phase -= phase.round();
        let angle = 2.0 * std::f64::consts::PI * phase;
        acc += C64::new(angle.cos(), angle.sin()) * (e.sigma * e.sigma);
    }
    acc
}

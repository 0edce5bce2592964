//! Exact worst-case errors of the least-squares algorithm on truncated
//! surrogate spaces.
//!
//! For coefficients supported on a finite superset `J` of the first `m`
//! frequencies, the worst-case `L_2` error over the unit ball equals the
//! largest singular value of `(I - R^T Phi+ Phi_J) D_sigma`, where `R`
//! selects the first `m` coordinates. With a full-rank sampling matrix the
//! first `m` columns of that operator vanish, so the norm reduces to the
//! stacked block `[Phi+ Phi_tail D_tail; D_tail]`. Frequencies outside `J`
//! are accounted for by a Frobenius-norm remainder added on top.

use nalgebra::DMatrix;

use crate::bounds::CriteriaThresholds;
use crate::error::{Error, Result};
use crate::fourier::{assemble, gram_extreme_eigenvalues, pseudo_inverse};
use crate::points::NodeList;
use crate::space::{IndexSet, SigmaSequence};
use crate::C64;

/// Accuracy of zeta evaluations inside tail masses.
const ZETA_TOL: f64 = 1e-12;

/// A sigma sequence truncated to a finite frequency superset `J`, together
/// with the analytic bound `tail2` on the sigma-squared mass outside `J`.
#[derive(Debug, Clone)]
pub struct SurrogateSpace {
    seq: SigmaSequence,
    j_set: IndexSet,
    tail2: f64,
}

impl SurrogateSpace {
    /// Builds the surrogate and computes `tail2`. `j_set` must be a prefix of
    /// the sequence ordering (crosses and `first_m` results always are).
    pub fn new(seq: SigmaSequence, j_set: IndexSet) -> Result<Self> {
        let check = seq.first_m(j_set.len())?;
        for i in 0..j_set.len() {
            if check.entry(i).h != j_set.entry(i).h {
                return Err(Error::Domain(format!(
                    "J is not a prefix of the sigma ordering (mismatch at position {i})"
                )));
            }
        }
        let in_j: f64 = j_set.entries().iter().map(|e| e.sigma * e.sigma).sum();
        let total = seq.sum_sigma_pow(2.0, ZETA_TOL)?;
        let tail2 = (total - in_j).max(0.0);
        Ok(Self { seq, j_set, tail2 })
    }

    pub fn seq(&self) -> &SigmaSequence {
        &self.seq
    }

    pub fn j_set(&self) -> &IndexSet {
        &self.j_set
    }

    /// Upper bound on `sum_{h not in J} sigma_h^2`.
    pub fn tail2(&self) -> f64 {
        self.tail2
    }

    pub fn sigma_m_plus_1(&self, m: usize) -> Result<f64> {
        if self.j_set.len() > m {
            Ok(self.j_set.entry(m).sigma)
        } else {
            self.seq.sigma_m_plus_1(m)
        }
    }
}

/// Measured conditions and (optionally) the thresholds they are compared to.
#[derive(Debug, Clone)]
pub struct ConditionDiag {
    pub sigma_min_sq: f64,
    pub tail_op_sq: f64,
    pub threshold_min_sv_sq: Option<f64>,
    pub threshold_tail_op_sq: Option<f64>,
    pub min_sv_pass: Option<bool>,
    pub tail_pass: Option<bool>,
    /// The min-singular-value test is vacuous when its threshold is negative.
    pub min_sv_vacuous: Option<bool>,
    pub rank_deficient: bool,
}

/// Worst-case error measurement on a surrogate space.
#[derive(Debug, Clone)]
pub struct WceReport {
    /// Exact worst-case error for coefficients supported on `J`.
    pub wce_surrogate: f64,
    /// `wce_surrogate` plus the remainder for frequencies outside `J`.
    pub wce_upper: f64,
    pub sigma_m_plus_1: f64,
    /// Theorem bound built from the same thresholds, when supplied and
    /// feasible.
    pub bound_theorem: Option<f64>,
    pub diag: ConditionDiag,
    /// Coefficients (in the `H_sigma` geometry, over `J`) attaining the
    /// surrogate worst case.
    pub maximizer: Vec<C64>,
}

/// Computes the exact surrogate worst-case error and its full-space upper
/// bound for the least-squares algorithm on the first `m` frequencies.
pub fn worst_case_error_exact(
    nodes: &NodeList,
    m: usize,
    space: &SurrogateSpace,
    rank_tol: f64,
    thresholds: Option<&CriteriaThresholds>,
) -> Result<WceReport> {
    if m == 0 {
        return Err(Error::Domain("worst-case error requires m >= 1".into()));
    }
    let j_len = space.j_set().len();
    if j_len < m {
        return Err(Error::Domain(format!(
            "J has {j_len} entries but must contain the first {m}"
        )));
    }
    let n = nodes.n();
    if n < m {
        return Err(Error::Precondition(format!(
            "worst-case error requires n >= m, got n = {n}, m = {m}"
        )));
    }

    let head = space.j_set().prefix(m)?;
    let tail = space.j_set().suffix(m)?;
    let p = tail.len();

    let phi_m = assemble(nodes, &head)?;
    let (pinv, sigma_min, _sigma_max, rank_deficient) =
        pseudo_inverse(phi_m.values(), rank_tol)?;
    let (gram_min, _) = gram_extreme_eigenvalues(phi_m.values());

    // Tail block Phi_{J \ first m} scaled columnwise by sigma.
    let tail_scaled: DMatrix<C64> = if p > 0 {
        let phi_tail = assemble(nodes, &tail)?;
        let mut t = phi_tail.values().clone();
        for (col, e) in tail.entries().iter().enumerate() {
            let scaled = t.column(col) * C64::new(e.sigma, 0.0);
            t.set_column(col, &scaled);
        }
        t
    } else {
        DMatrix::from_element(n, 0, C64::new(0.0, 0.0))
    };
    let (_, tail_op_sq) = gram_extreme_eigenvalues(&tail_scaled);

    // Error operator. Full rank: only the last p columns are nonzero and the
    // norm is that of the stacked (m+p) x p block [Phi+ T; D_tail].
    let (wce_surrogate, maximizer) = if p == 0 {
        (0.0, vec![C64::new(0.0, 0.0); j_len])
    } else if !rank_deficient {
        let b = &pinv * &tail_scaled;
        let mut stacked = DMatrix::from_element(m + p, p, C64::new(0.0, 0.0));
        stacked.view_mut((0, 0), (m, p)).copy_from(&b);
        for i in 0..p {
            stacked[(m + i, i)] = C64::new(tail.entry(i).sigma, 0.0);
        }
        let (value, vector) = largest_singular_pair(&stacked);
        let mut maximizer = vec![C64::new(0.0, 0.0); j_len];
        maximizer[m..].copy_from_slice(vector.as_slice());
        (value, maximizer)
    } else {
        // Rank-deficient sampling matrix: build the full |J| x |J| operator
        // (I - R^T Phi+ Phi_J) D_sigma.
        let phi_j = assemble(nodes, space.j_set())?;
        let g = &pinv * phi_j.values();
        let mut e = DMatrix::from_element(j_len, j_len, C64::new(0.0, 0.0));
        for (i, entry) in space.j_set().entries().iter().enumerate() {
            e[(i, i)] = C64::new(entry.sigma, 0.0);
        }
        for r in 0..m {
            for c in 0..j_len {
                let sigma = space.j_set().entry(c).sigma;
                e[(r, c)] -= g[(r, c)] * C64::new(sigma, 0.0);
            }
        }
        let (value, vector) = largest_singular_pair(&e);
        (value, vector.as_slice().to_vec())
    };

    let tail2 = space.tail2();
    let remainder = if tail2 > 0.0 {
        ((n as f64) * tail2).sqrt() / sigma_min + tail2.sqrt()
    } else {
        0.0
    };
    let wce_upper = wce_surrogate + remainder;
    let sigma_m_plus_1 = space.sigma_m_plus_1(m)?;

    let diag = match thresholds {
        None => ConditionDiag {
            sigma_min_sq: gram_min,
            tail_op_sq,
            threshold_min_sv_sq: None,
            threshold_tail_op_sq: None,
            min_sv_pass: None,
            tail_pass: None,
            min_sv_vacuous: None,
            rank_deficient,
        },
        Some(t) => ConditionDiag {
            sigma_min_sq: gram_min,
            tail_op_sq,
            threshold_min_sv_sq: Some(t.threshold_min_sv_sq),
            threshold_tail_op_sq: Some(t.threshold_tail_op_sq),
            min_sv_pass: Some(gram_min >= t.threshold_min_sv_sq),
            tail_pass: Some(tail_op_sq <= t.threshold_tail_op_sq),
            min_sv_vacuous: Some(t.min_sv_vacuous()),
            rank_deficient,
        },
    };
    let bound_theorem = thresholds.and_then(|t| t.theorem_bound());

    Ok(WceReport {
        wce_surrogate,
        wce_upper,
        sigma_m_plus_1,
        bound_theorem,
        diag,
        maximizer,
    })
}

/// Largest singular value and the corresponding right singular vector,
/// through the Hermitian eigenproblem of `A^H A`.
fn largest_singular_pair(a: &DMatrix<C64>) -> (f64, nalgebra::DVector<C64>) {
    let gram = a.adjoint() * a;
    let eig = gram.symmetric_eigen();
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let value = eig.eigenvalues[best].max(0.0).sqrt();
    (value, eig.eigenvectors.column(best).into_owned())
}

//! Fourier sampling matrices, the SVD-based least-squares solver and
//! trigonometric polynomial evaluation.
//!
//! The solver goes through a singular value decomposition of the sampling
//! matrix rather than the normal equations; the normal-equation identity is
//! kept as a postcondition check in the tests. Rational node lists get exact
//! integer phase reduction before any floating-point trigonometry.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::points::{NodeList, Provenance};
use crate::space::IndexSet;
use crate::C64;

use std::io::Write;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// The `n x m` sampling matrix with entries `exp(2 pi i h_i . x_k)`.
#[derive(Debug, Clone)]
pub struct FourierMatrix {
    values: DMatrix<C64>,
    index_set: IndexSet,
    provenance: Provenance,
}

impl FourierMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn m(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<C64> {
        &self.values
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// Assembles the sampling matrix for the given nodes and frequencies.
pub fn assemble(nodes: &NodeList, index_set: &IndexSet) -> Result<FourierMatrix> {
    if nodes.d() != index_set.d() {
        return Err(Error::ShapeMismatch(format!(
            "nodes have dimension {}, index set {}",
            nodes.d(),
            index_set.d()
        )));
    }
    let n = nodes.n();
    let m = index_set.len();
    let rows: Vec<Vec<C64>> = match nodes.provenance() {
        Provenance::Rational { z, modulus, .. } => {
            let nm = *modulus as i128;
            (1..=n as u64)
                .into_par_iter()
                .map(|k| {
                    // h . x_k = (sum_j h_j (k z_j mod N)) / N, reduced mod N
                    // in exact integer arithmetic before the exponential.
                    let nums: Vec<i128> = z
                        .iter()
                        .map(|&zj| (k as i128 * zj as i128).rem_euclid(nm))
                        .collect();
                    index_set
                        .entries()
                        .iter()
                        .map(|e| {
                            let mut p: i128 = 0;
                            for (j, &hj) in e.h.iter().enumerate() {
                                p = (p + hj as i128 * nums[j]).rem_euclid(nm);
                            }
                            let angle = TWO_PI * (p as f64 / *modulus as f64);
                            C64::new(angle.cos(), angle.sin())
                        })
                        .collect()
                })
                .collect()
        }
        Provenance::Continuous { .. } => nodes
            .nodes()
            .par_iter()
            .map(|x| {
                index_set
                    .entries()
                    .iter()
                    .map(|e| {
                        let mut phase = 0.0f64;
                        for (j, &hj) in e.h.iter().enumerate() {
                            phase += hj as f64 * x[j];
                        }
                        phase -= phase.round();
                        let angle = TWO_PI * phase;
                        C64::new(angle.cos(), angle.sin())
                    })
                    .collect()
            })
            .collect(),
    };
    let values = DMatrix::from_fn(n, m, |k, i| rows[k][i]);
    Ok(FourierMatrix {
        values,
        index_set: index_set.clone(),
        provenance: nodes.provenance().clone(),
    })
}

/// Thin singular value decomposition `A = U diag(sv) V^H`, singular values
/// descending.
pub(crate) struct SvdParts {
    pub u: DMatrix<C64>,
    pub v_t: DMatrix<C64>,
    pub sv: DVector<f64>,
}

/// SVD through the Hermitian eigendecomposition of the Gram matrix `A^H A`.
///
/// The bidiagonalisation SVD loses several digits on the clustered spectra
/// that unit-modulus sampling matrices produce; the symmetric eigensolver
/// stays at machine precision there. Columns of `U` belonging to singular
/// values near zero are left unnormalised (they are cut off by every rank
/// tolerance downstream); least-squares residual accuracy is restored by
/// iterative refinement in [`solve`].
pub(crate) fn svd_complex(a: &DMatrix<C64>) -> Result<SvdParts> {
    let gram = a.adjoint() * a;
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let m = a.ncols();
    let mut v = DMatrix::zeros(m, m);
    let mut sv = DVector::zeros(m);
    for (col, &src) in order.iter().enumerate() {
        sv[col] = eig.eigenvalues[src].max(0.0).sqrt();
        v.set_column(col, &eig.eigenvectors.column(src));
    }
    if !sv.iter().all(|s| s.is_finite()) {
        return Err(Error::Numerical("eigendecomposition produced non-finite values".into()));
    }
    let sigma_max = sv.max();
    let mut u = a * &v;
    for col in 0..m {
        let s = sv[col];
        if s > sigma_max * 1e-150 {
            let scaled = u.column(col) / C64::new(s, 0.0);
            u.set_column(col, &scaled);
        } else {
            u.set_column(col, &DVector::from_element(a.nrows(), C64::new(0.0, 0.0)));
        }
    }
    Ok(SvdParts { u, v_t: v.adjoint(), sv })
}

/// A finite Fourier expansion: frequencies with complex coefficients.
#[derive(Debug, Clone)]
pub struct FourierPolynomial {
    index_set: IndexSet,
    coeffs: Vec<C64>,
}

impl FourierPolynomial {
    pub fn new(index_set: IndexSet, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != index_set.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for {} frequencies",
                coeffs.len(),
                index_set.len()
            )));
        }
        Ok(Self { index_set, coeffs })
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Squared norm `sum |c_i|^2 / sigma_i^2` in the space whose sigma values
    /// the index set carries.
    pub fn h_sigma_norm_sq(&self) -> f64 {
        self.index_set
            .entries()
            .iter()
            .zip(&self.coeffs)
            .map(|(e, c)| c.norm_sqr() / (e.sigma * e.sigma))
            .sum()
    }

    /// Squared `L_2` norm `sum |c_i|^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// CSV: header `h_1,...,h_d,re,im`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let d = self.index_set.d();
        let header: Vec<String> = (1..=d).map(|j| format!("h_{j}")).collect();
        writeln!(out, "{},re,im", header.join(","))?;
        for (e, c) in self.index_set.entries().iter().zip(&self.coeffs) {
            let comps: Vec<String> = e.h.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{},{:.16e},{:.16e}", comps.join(","), c.re, c.im)?;
        }
        Ok(())
    }
}

/// Evaluates `sum_i c_i exp(2 pi i h_i . x)`.
pub fn evaluate(poly: &FourierPolynomial, x: &[f64]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (e, c) in poly.index_set().entries().iter().zip(poly.coeffs()) {
        let mut phase = 0.0f64;
        for (j, &hj) in e.h.iter().enumerate() {
            phase += hj as f64 * x[j];
        }
        phase -= phase.round();
        let angle = TWO_PI * phase;
        acc += c * C64::new(angle.cos(), angle.sin());
    }
    acc
}

/// Result of a least-squares solve.
#[derive(Debug, Clone)]
pub struct LsResult {
    pub polynomial: FourierPolynomial,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub residual_norm: f64,
    pub rank_deficient: bool,
}

/// Minimises `sum_k |sum_i c_i phi_i(x_k) - samples_k|^2` through the SVD,
/// treating singular values below `rank_tol * sigma_max` as zero.
pub fn solve(matrix: &FourierMatrix, samples: &[C64], rank_tol: f64) -> Result<LsResult> {
    let (n, m) = (matrix.n(), matrix.m());
    if samples.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} samples for {n} rows",
            samples.len()
        )));
    }
    if n < m {
        return Err(Error::Precondition(format!(
            "least squares requires n >= m, got n = {n}, m = {m}"
        )));
    }
    let parts = svd_complex(matrix.values())?;
    let sigma_max = parts.sv.iter().cloned().fold(0.0, f64::max);
    let sigma_min = parts.sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cutoff = rank_tol * sigma_max;
    let rank_deficient = parts.sv.iter().any(|&s| s <= cutoff);

    let apply_pinv = |rhs: &DVector<C64>| -> DVector<C64> {
        let ut_rhs = parts.u.adjoint() * rhs;
        let mut scaled = DVector::from_element(parts.sv.len(), C64::new(0.0, 0.0));
        for i in 0..parts.sv.len() {
            if parts.sv[i] > cutoff {
                scaled[i] = ut_rhs[i] / parts.sv[i];
            }
        }
        parts.v_t.adjoint() * scaled
    };

    let b = DVector::from_column_slice(samples);
    let mut coeffs = apply_pinv(&b);
    // Two sweeps of iterative refinement push the least-squares residual to
    // working precision as long as eps * kappa^2 stays below one.
    for _ in 0..2 {
        let r = &b - matrix.values() * &coeffs;
        coeffs += apply_pinv(&r);
    }
    let residual = (matrix.values() * &coeffs - &b).norm();
    let polynomial = FourierPolynomial::new(
        matrix.index_set().clone(),
        coeffs.iter().cloned().collect(),
    )?;
    Ok(LsResult {
        polynomial,
        sigma_min,
        sigma_max,
        residual_norm: residual,
        rank_deficient,
    })
}

/// Samples a test function exactly from its finite expansion, then solves the
/// least-squares problem on `index_set`.
pub fn approximate(
    f: &FourierPolynomial,
    nodes: &NodeList,
    index_set: &IndexSet,
    rank_tol: f64,
) -> Result<LsResult> {
    let samples: Vec<C64> = nodes.nodes().iter().map(|x| evaluate(f, x)).collect();
    let matrix = assemble(nodes, index_set)?;
    solve(&matrix, &samples, rank_tol)
}

/// Extreme singular values of the sampling matrix, via the full SVD.
pub fn extreme_singular_values(matrix: &FourierMatrix) -> Result<(f64, f64)> {
    let parts = svd_complex(matrix.values())?;
    let max = parts.sv.iter().cloned().fold(0.0, f64::max);
    let min = parts.sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((min, max))
}

/// Moore-Penrose pseudoinverse with the given relative rank cutoff.
pub(crate) fn pseudo_inverse(
    a: &DMatrix<C64>,
    rank_tol: f64,
) -> Result<(DMatrix<C64>, f64, f64, bool)> {
    let parts = svd_complex(a)?;
    let sigma_max = parts.sv.iter().cloned().fold(0.0, f64::max);
    let sigma_min = parts.sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cutoff = rank_tol * sigma_max;
    let rank_deficient = parts.sv.iter().any(|&s| s <= cutoff);
    let r = parts.sv.len();
    let mut inv = DMatrix::from_element(r, r, C64::new(0.0, 0.0));
    for i in 0..r {
        if parts.sv[i] > cutoff {
            inv[(i, i)] = C64::new(1.0 / parts.sv[i], 0.0);
        }
    }
    let pinv = parts.v_t.adjoint() * inv * parts.u.adjoint();
    Ok((pinv, sigma_min, sigma_max, rank_deficient))
}

/// Smallest and largest eigenvalues of the Hermitian Gram matrix `A^H A`.
/// Cheaper than an SVD when only squared singular values are compared
/// against thresholds.
pub(crate) fn gram_extreme_eigenvalues(a: &DMatrix<C64>) -> (f64, f64) {
    if a.ncols() == 0 {
        return (0.0, 0.0);
    }
    let gram = a.adjoint() * a;
    let eig = gram.symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    (min.max(0.0), max.max(0.0))
}

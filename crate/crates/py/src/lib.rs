//! Python bindings: the space/cross machinery, generated node lists, the
//! least-squares pipeline, worst-case errors, bounds and generator search.

use num_complex::Complex;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use genset_core::bounds;
use genset_core::divisor;
use genset_core::error::Error;
use genset_core::fourier;
use genset_core::harness;
use genset_core::points;
use genset_core::search;
use genset_core::space;
use genset_core::wce;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Domain(_) | Error::ShapeMismatch(_)
        | Error::Precondition(_) | Error::Config(_) | Error::NotPrime(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// The weighted Korobov space definition.
#[pyclass(name = "KorobovParams", from_py_object)]
#[derive(Clone)]
struct PyKorobovParams {
    inner: space::KorobovParams,
}

#[pymethods]
impl PyKorobovParams {
    /// Product-form weights; `gamma` defaults to all ones.
    #[new]
    #[pyo3(signature = (d, alpha, gamma=None))]
    fn new(d: usize, alpha: f64, gamma: Option<Vec<f64>>) -> PyResult<Self> {
        let gamma = gamma.unwrap_or_else(|| vec![1.0; d]);
        space::KorobovParams::product(d, alpha, gamma)
            .map(|inner| Self { inner })
            .map_err(to_py_err)
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    /// The decay value `r_{alpha,gamma}(h)`.
    fn r(&self, h: Vec<i64>) -> PyResult<f64> {
        if h.len() != self.inner.d() {
            return Err(PyValueError::new_err("frequency has wrong dimension"));
        }
        Ok(space::r_alpha_gamma(&h, &self.inner))
    }

    fn __repr__(&self) -> String {
        format!("KorobovParams(d={}, alpha={})", self.inner.d(), self.inner.alpha())
    }
}

/// An ordered frequency set with sigma values.
#[pyclass(name = "IndexSet", from_py_object)]
#[derive(Clone)]
struct PyIndexSet {
    inner: space::IndexSet,
}

#[pymethods]
impl PyIndexSet {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Entries as `(h, sigma)` pairs in the deterministic ordering.
    fn entries(&self) -> Vec<(Vec<i64>, f64)> {
        self.inner
            .entries()
            .iter()
            .map(|e| (e.h.clone(), e.sigma))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("IndexSet(len={}, d={})", self.inner.len(), self.inner.d())
    }
}

/// Enumerates the weighted hyperbolic cross of radius `m_bound`.
#[pyfunction]
#[pyo3(signature = (params, m_bound, cap=10_000_000))]
fn enumerate_cross(params: &PyKorobovParams, m_bound: f64, cap: usize) -> PyResult<PyIndexSet> {
    space::enumerate_cross(&params.inner, m_bound, cap)
        .map(|inner| PyIndexSet { inner })
        .map_err(to_py_err)
}

/// Cardinality of the unweighted cross by recurrence, without enumeration.
#[pyfunction]
fn unweighted_cross_cardinality(d: u32, m_bound: f64) -> u64 {
    space::unweighted_cross_cardinality(d, m_bound)
}

/// The first `m` frequencies of the sigma ordering.
#[pyfunction]
fn take_first_m(params: &PyKorobovParams, m: usize) -> PyResult<PyIndexSet> {
    space::SigmaSequence::korobov(params.inner.clone())
        .first_m(m)
        .map(|inner| PyIndexSet { inner })
        .map_err(to_py_err)
}

/// `mu(lambda) = sum_u gamma_u^{1/lambda} (2 zeta(alpha/lambda))^{|u|}`.
#[pyfunction]
#[pyo3(signature = (lam, params, tol=1e-12))]
fn mu(lam: f64, params: &PyKorobovParams, tol: f64) -> PyResult<f64> {
    space::mu(lam, &params.inner, tol).map_err(to_py_err)
}

/// Truncated kernel value `sum_i sigma_i^2 exp(2 pi i h_i . (x - y))`.
#[pyfunction]
fn kernel_eval(x: Vec<f64>, y: Vec<f64>, index_set: &PyIndexSet) -> PyResult<Complex<f64>> {
    if x.len() != index_set.inner.d() || y.len() != index_set.inner.d() {
        return Err(PyValueError::new_err("point has wrong dimension"));
    }
    Ok(space::kernel_eval(&x, &y, &index_set.inner))
}

/// The generated set `{ frac(k zeta) : k = 1..n }`.
#[pyfunction]
fn generated_set(zeta: Vec<f64>, n: usize) -> PyResult<Vec<Vec<f64>>> {
    let gen = points::ContinuousGenerator::new(zeta).map_err(to_py_err)?;
    points::build_generated_set(&gen, n)
        .map(|nl| nl.nodes().to_vec())
        .map_err(to_py_err)
}

/// The rational generated set `{ frac(k z / N) : k = 1..n }` (exact).
#[pyfunction]
fn rational_generated_set(z: Vec<u64>, modulus: u64, n: usize) -> PyResult<Vec<Vec<f64>>> {
    let gen = points::RationalGenerator::new(z, modulus).map_err(to_py_err)?;
    points::build_rational_generated_set(&gen, n)
        .map(|nl| nl.nodes().to_vec())
        .map_err(to_py_err)
}

fn build_nodes(
    zeta: Option<Vec<f64>>,
    z: Option<Vec<u64>>,
    modulus: Option<u64>,
    n: usize,
) -> PyResult<points::NodeList> {
    match (zeta, z) {
        (Some(zeta), None) => {
            let gen = points::ContinuousGenerator::new(zeta).map_err(to_py_err)?;
            points::build_generated_set(&gen, n).map_err(to_py_err)
        }
        (None, Some(z)) => {
            let modulus = modulus
                .ok_or_else(|| PyValueError::new_err("rational generator needs `modulus`"))?;
            let gen = points::RationalGenerator::new(z, modulus).map_err(to_py_err)?;
            points::build_rational_generated_set(&gen, n).map_err(to_py_err)
        }
        _ => Err(PyValueError::new_err("pass exactly one of `zeta` or `z`")),
    }
}

/// Solves the least-squares problem for samples of a function given by
/// `(freqs, coeffs)`, approximating on the first `m` frequencies.
#[pyfunction]
#[pyo3(signature = (params, n, m, coeff_freqs, coeffs, zeta=None, z=None, modulus=None, rank_tol=1e-10))]
#[allow(clippy::too_many_arguments)]
fn approximate<'py>(
    py: Python<'py>,
    params: &PyKorobovParams,
    n: usize,
    m: usize,
    coeff_freqs: Vec<Vec<i64>>,
    coeffs: Vec<Complex<f64>>,
    zeta: Option<Vec<f64>>,
    z: Option<Vec<u64>>,
    modulus: Option<u64>,
    rank_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    if coeff_freqs.len() != coeffs.len() {
        return Err(PyValueError::new_err("freqs and coeffs must have equal length"));
    }
    let pairs: Vec<(Vec<i64>, f64)> = coeff_freqs
        .iter()
        .map(|h| (h.clone(), 1.0 / space::r_alpha_gamma(h, &params.inner)))
        .collect();
    let f_set = space::SigmaSequence::table(params.inner.d(), pairs)
        .and_then(|s| s.first_m(coeff_freqs.len()))
        .map_err(to_py_err)?;
    // Reorder the coefficients to the set's canonical ordering.
    let mut ordered = vec![Complex::new(0.0, 0.0); coeffs.len()];
    for (h, c) in coeff_freqs.iter().zip(&coeffs) {
        let pos = f_set
            .position(h)
            .ok_or_else(|| PyValueError::new_err("duplicate frequency"))?;
        ordered[pos] = *c;
    }
    let f = fourier::FourierPolynomial::new(f_set, ordered).map_err(to_py_err)?;
    let nodes = build_nodes(zeta, z, modulus, n)?;
    let head = space::SigmaSequence::korobov(params.inner.clone())
        .first_m(m)
        .map_err(to_py_err)?;
    let result = fourier::approximate(&f, &nodes, &head, rank_tol).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item(
        "freqs",
        result
            .polynomial
            .index_set()
            .entries()
            .iter()
            .map(|e| e.h.clone())
            .collect::<Vec<_>>(),
    )?;
    out.set_item("coeffs", result.polynomial.coeffs().to_vec())?;
    out.set_item("residual_norm", result.residual_norm)?;
    out.set_item("sigma_min", result.sigma_min)?;
    out.set_item("sigma_max", result.sigma_max)?;
    out.set_item("rank_deficient", result.rank_deficient)?;
    Ok(out)
}

/// Evaluates `sum_i c_i exp(2 pi i h_i . x)`.
#[pyfunction]
fn evaluate(
    freqs: Vec<Vec<i64>>,
    coeffs: Vec<Complex<f64>>,
    x: Vec<f64>,
) -> PyResult<Complex<f64>> {
    if freqs.len() != coeffs.len() {
        return Err(PyValueError::new_err("freqs and coeffs must have equal length"));
    }
    let mut acc = Complex::new(0.0, 0.0);
    for (h, c) in freqs.iter().zip(&coeffs) {
        let mut phase = 0.0f64;
        for (hj, xj) in h.iter().zip(&x) {
            phase += *hj as f64 * xj;
        }
        phase -= phase.round();
        let angle = 2.0 * std::f64::consts::PI * phase;
        acc += c * Complex::new(angle.cos(), angle.sin());
    }
    Ok(acc)
}

fn wce_dict<'py>(
    py: Python<'py>,
    report: &wce::WceReport,
) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("wce_surrogate", report.wce_surrogate)?;
    out.set_item("wce_upper", report.wce_upper)?;
    out.set_item("sigma_m1", report.sigma_m_plus_1)?;
    out.set_item("bound", report.bound_theorem)?;
    out.set_item("feasible", report.bound_theorem.is_some())?;
    out.set_item("sigma_min_sq", report.diag.sigma_min_sq)?;
    out.set_item("tail_op_sq", report.diag.tail_op_sq)?;
    out.set_item(
        "cond_pass",
        report.diag.min_sv_pass.unwrap_or(false) && report.diag.tail_pass.unwrap_or(false),
    )?;
    out.set_item("rank_deficient", report.diag.rank_deficient)?;
    Ok(out)
}

/// Exact surrogate worst-case error of one generator, with acceptance
/// diagnostics.
#[pyfunction]
#[pyo3(signature = (params, n, m, zeta=None, z=None, modulus=None, eps=0.5, j_factor=50.0, j_cap=200_000, rank_tol=1e-10))]
#[allow(clippy::too_many_arguments)]
fn worst_case_error<'py>(
    py: Python<'py>,
    params: &PyKorobovParams,
    n: usize,
    m: usize,
    zeta: Option<Vec<f64>>,
    z: Option<Vec<u64>>,
    modulus: Option<u64>,
    eps: f64,
    j_factor: f64,
    j_cap: usize,
    rank_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let space = harness::build_surrogate(&params.inner, m, j_factor, j_cap).map_err(to_py_err)?;
    let nodes = build_nodes(zeta, z, modulus, n)?;
    let c_eps = divisor::c_epsilon(eps, n as u64).map_err(to_py_err)?;
    let criteria =
        search::AcceptanceCriteria::new(&space, n, m, eps, &c_eps).map_err(to_py_err)?;
    let report = wce::worst_case_error_exact(&nodes, m, &space, rank_tol, Some(criteria.thresholds()))
        .map_err(to_py_err)?;
    wce_dict(py, &report)
}

/// Rejection-sampling search for an accepted generator.
#[pyfunction]
#[pyo3(signature = (params, n, m=None, eps=0.5, generator="continuous", modulus=None, max_trials=100, seed=42, j_factor=50.0, j_cap=200_000, rank_tol=1e-10))]
#[allow(clippy::too_many_arguments)]
fn search_generator<'py>(
    py: Python<'py>,
    params: &PyKorobovParams,
    n: usize,
    m: Option<usize>,
    eps: f64,
    generator: &str,
    modulus: Option<u64>,
    max_trials: u64,
    seed: u64,
    j_factor: f64,
    j_cap: usize,
    rank_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = m.unwrap_or_else(|| harness::choose_m(n, eps, 1.0));
    let space = harness::build_surrogate(&params.inner, m, j_factor, j_cap).map_err(to_py_err)?;
    let c_eps = divisor::c_epsilon(eps, n as u64).map_err(to_py_err)?;
    let criteria =
        search::AcceptanceCriteria::new(&space, n, m, eps, &c_eps).map_err(to_py_err)?;
    let result = match generator {
        "continuous" => {
            search::search_continuous(&criteria, &space, max_trials, seed, rank_tol)
                .map_err(to_py_err)?
        }
        "rational" => {
            let modulus = modulus
                .ok_or_else(|| PyValueError::new_err("rational search needs `modulus`"))?;
            search::search_rational(modulus, &criteria, &space, max_trials, seed, rank_tol)
                .map_err(to_py_err)?
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown generator type `{other}`"
            )))
        }
    };
    let out = PyDict::new(py);
    match &result.generator {
        search::GeneratorKind::Continuous(g) => {
            out.set_item("type", "continuous")?;
            out.set_item("zeta", g.components().to_vec())?;
            out.set_item("N", 0u64)?;
        }
        search::GeneratorKind::Rational(g) => {
            out.set_item("type", "rational")?;
            out.set_item("z", g.z().to_vec())?;
            out.set_item("N", g.modulus())?;
        }
    }
    out.set_item("accepted", result.accepted)?;
    out.set_item("trials_used", result.trials_used)?;
    out.set_item("sigma_min_sq", result.sigma_min_sq)?;
    out.set_item("tail_op_sq", result.tail_op_sq)?;
    out.set_item("wce_surrogate", result.wce_surrogate)?;
    out.set_item("wce_upper", result.wce_upper)?;
    out.set_item("m", m)?;
    Ok(out)
}

/// The general continuous-generator bound; `None` when infeasible.
#[pyfunction]
#[pyo3(signature = (params, n, m, eps=0.5, j_factor=50.0, j_cap=200_000))]
fn theorem_bound_general(
    params: &PyKorobovParams,
    n: usize,
    m: usize,
    eps: f64,
    j_factor: f64,
    j_cap: usize,
) -> PyResult<Option<f64>> {
    let space = harness::build_surrogate(&params.inner, m, j_factor, j_cap).map_err(to_py_err)?;
    let c_eps = divisor::c_epsilon(eps, n as u64).map_err(to_py_err)?;
    bounds::theorem_bound_general(n, m, eps, &space, &c_eps)
        .map(|b| b.value)
        .map_err(to_py_err)
}

fn korobov_dict<'py>(
    py: Python<'py>,
    report: &bounds::KorobovBoundReport,
) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("M", report.big_m)?;
    out.set_item("m", report.m)?;
    out.set_item("bound", report.bound)?;
    out.set_item("feasible", report.feasible)?;
    out.set_item("mu", report.mu_value)?;
    if let Some(n_mod) = report.n_mod {
        out.set_item("N", n_mod)?;
    }
    Ok(out)
}

/// Korobov-space bound with explicit constants (continuous generators).
#[pyfunction]
#[pyo3(signature = (params, n, eps, lam, n_max=None))]
fn korobov_bound<'py>(
    py: Python<'py>,
    params: &PyKorobovParams,
    n: usize,
    eps: f64,
    lam: f64,
    n_max: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let c_eps = divisor::c_epsilon(eps, n_max.unwrap_or(n as u64)).map_err(to_py_err)?;
    let report = bounds::korobov_bound(n, eps, lam, &params.inner, &c_eps, 1e-12, 10_000_000)
        .map_err(to_py_err)?;
    korobov_dict(py, &report)
}

/// Rational variant: constant 4 and the smallest admissible prime modulus.
#[pyfunction]
#[pyo3(signature = (params, n, eps, lam, n_max=None))]
fn korobov_rational_bound<'py>(
    py: Python<'py>,
    params: &PyKorobovParams,
    n: usize,
    eps: f64,
    lam: f64,
    n_max: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let c_eps = divisor::c_epsilon(eps, n_max.unwrap_or(n as u64)).map_err(to_py_err)?;
    let report =
        bounds::korobov_rational_bound(n, eps, lam, &params.inner, &c_eps, 1e-12, 10_000_000)
            .map_err(to_py_err)?;
    korobov_dict(py, &report)
}

/// Number of nonzero divisors of `n` in `[-n, n]`.
#[pyfunction]
fn divisor_sum(n: u64) -> PyResult<u64> {
    if n == 0 {
        return Err(PyValueError::new_err("n must be positive"));
    }
    Ok(divisor::divisor_sum(n))
}

/// Exact finite-range divisor constant `C_eps(n_max)`.
#[pyfunction]
fn c_epsilon(eps: f64, n_max: u64) -> PyResult<f64> {
    divisor::c_epsilon(eps, n_max)
        .map(|c| c.value)
        .map_err(to_py_err)
}

/// Smallest prime `>= ceil(x)`.
#[pyfunction]
fn next_prime_at_least(x: f64) -> PyResult<u64> {
    search::next_prime_at_least(x).map_err(to_py_err)
}

#[pymodule]
fn genset(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKorobovParams>()?;
    m.add_class::<PyIndexSet>()?;
    m.add_function(wrap_pyfunction!(enumerate_cross, m)?)?;
    m.add_function(wrap_pyfunction!(unweighted_cross_cardinality, m)?)?;
    m.add_function(wrap_pyfunction!(take_first_m, m)?)?;
    m.add_function(wrap_pyfunction!(mu, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_eval, m)?)?;
    m.add_function(wrap_pyfunction!(generated_set, m)?)?;
    m.add_function(wrap_pyfunction!(rational_generated_set, m)?)?;
    m.add_function(wrap_pyfunction!(approximate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(worst_case_error, m)?)?;
    m.add_function(wrap_pyfunction!(search_generator, m)?)?;
    m.add_function(wrap_pyfunction!(theorem_bound_general, m)?)?;
    m.add_function(wrap_pyfunction!(korobov_bound, m)?)?;
    m.add_function(wrap_pyfunction!(korobov_rational_bound, m)?)?;
    m.add_function(wrap_pyfunction!(divisor_sum, m)?)?;
    m.add_function(wrap_pyfunction!(c_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(next_prime_at_least, m)?)?;
    Ok(())
}

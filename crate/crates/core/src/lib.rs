//! Least-squares Fourier approximation of multivariate periodic functions
//! sampled on *generated sets* `{ frac(k * zeta) : k = 1..n }`.
//!
//! The crate covers the full pipeline:
//!
//! * [`space`] — weighted Korobov spaces, sigma sequences, hyperbolic cross
//!   enumeration and the space-level quantities (`mu`, kernel, tail sums);
//! * [`points`] — continuous and rational generated node lists;
//! * [`fourier`] — Fourier matrix assembly and the SVD-based least-squares
//!   solver;
//! * [`divisor`] — the divisor-counting constant used by every error bound;
//! * [`wce`] — exact worst-case errors on truncated surrogate spaces;
//! * [`bounds`] — the theoretical error bounds for continuous and rational
//!   generators, including the Korobov-specific forms;
//! * [`moments`] — Monte Carlo / exhaustive verification of the expectation
//!   and variance formulas behind the bounds;
//! * [`search`] — rejection-sampling searches for certified generators plus
//!   primality utilities;
//! * [`harness`] — experiment configuration, orchestration and CSV/JSON
//!   emission for the CLI.
//!
//! ```
//! use genset_core::points::{build_generated_set, ContinuousGenerator};
//! use genset_core::space::{enumerate_cross, KorobovParams, SigmaSequence};
//! use genset_core::wce::{worst_case_error_exact, SurrogateSpace};
//!
//! // The 9-element cross of radius 1.5 in two dimensions.
//! let params = KorobovParams::unweighted(2, 1.0)?;
//! assert_eq!(enumerate_cross(&params, 1.5, 1 << 20)?.len(), 9);
//!
//! // Worst-case error of least squares on the first 3 frequencies of a
//! // smoother space, sampled on a 32-point generated set.
//! let params = KorobovParams::unweighted(1, 2.0)?;
//! let seq = SigmaSequence::korobov(params);
//! let space = SurrogateSpace::new(seq.clone(), seq.first_m(41)?)?;
//! let nodes = build_generated_set(&ContinuousGenerator::new(vec![0.618034])?, 32)?;
//! let report = worst_case_error_exact(&nodes, 3, &space, 1e-10, None)?;
//! assert!(report.wce_surrogate > 0.0 && report.wce_surrogate <= report.wce_upper);
//! # Ok::<(), genset_core::Error>(())
//! ```

pub mod bounds;
pub mod divisor;
pub mod error;
pub mod fourier;
pub mod harness;
pub mod moments;
pub mod points;
pub mod search;
pub mod space;
pub mod tails;
pub mod wce;
pub mod zeta;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex<f64>;

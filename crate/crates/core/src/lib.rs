//! Deterministic numerical kernels for long-range (grazing-collision) kinetics:
//! singular collision cross-sections and their cutoff approximations, periodic
//! spectral velocity grids, direct and Fourier-side evaluation of the bilinear
//! collision operator, a weighted-transform Picard construction of local
//! solutions, and an empirical verification suite for the functional
//! inequalities the solver relies on.
//!
//! The crate is organised by subsystem:
//!
//! * [`kernel`] — cross-section `B = Φ(|v-v*|) b(cosθ)` and angular quadrature
//! * [`grid`] / [`dist`] / [`norms`] — velocity lattices, fields, weighted norms
//! * [`collision`] — the bilinear operator `Q`, its transformed variant `Γ^t`
//! * [`estimates`] — fitted-constant reports for the inequality suite
//! * [`solver`] — Picard mild-form iteration, RK4 cross-check, exact baselines
//! * [`diagnostics`] — conservation, entropy, smoothing and sweep reports
//! * [`config`] / [`runner`] — declarative run configuration and the CLI core

pub mod collision;
pub mod config;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod estimates;
pub mod fft;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod norms;
pub mod parallel;
pub mod quad1d;
pub mod rng;
pub mod runner;
pub mod solver;

pub use error::{Error, Result};

/// Version string recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

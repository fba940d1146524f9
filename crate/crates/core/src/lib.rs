//! Numerical laboratory for maximal L^p regularity and semilinear parabolic
//! problems on the periodic torus.
//!
//! Module map:
//! - [`spectral`]: fields, Fourier multipliers, heat semigroup, Helmholtz projection, nonlinearities
//! - [`norms`]: time grids, trajectories, mixed Bochner norms, heat-extension (Besov) norms,
//!   continuum profiles for scaling tests
//! - [`maxreg`]: Duhamel solver, regularity constants, resolvent, Hörmander, De Simon, R-bounds
//! - [`picard`]: Lipschitz estimation, smallness gate, Picard certificates
//! - [`pde`]: nonlinear heat and Navier–Stokes experiments, criticality, uniqueness bootstrap

pub mod error;
pub mod maxreg;
pub mod norms;
pub mod pde;
pub mod picard;
pub mod quadrature;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use maxreg::{LinearProblem, MaxRegReport, RBoundEstimate};
pub use norms::{MixedNormParams, TimeGrid, Trajectory, WeightParams};
pub use picard::{FixedPointProblem, PicardCertificate};
pub use spectral::{FourierMultiplier, SpectralField, TorusGrid};

pub use num_complex::Complex64;

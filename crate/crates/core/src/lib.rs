//! Forward and inverse spectral solver for non-self-adjoint Sturm-Liouville
//! problems `-y'' + q(x) y = λ y` on `(0, π)` with complex potential and
//! Robin (`y'(0) - h y(0) = 0`, `y'(π) + H y(π) = 0`) or Dirichlet boundary
//! conditions.
//!
//! The pipeline:
//!
//! * [`ode`]: solutions `φ`, `Φ`, the characteristic function, and the kernel `D`;
//! * [`spectral`]: eigenvalues with multiplicities, weights and Weyl coefficients;
//! * [`perturbation`]: partial fractions of the Weyl data and admissibility checks;
//! * [`main_equation`]: the linear main equation and reconstruction of `q̃, h̃, H̃`;
//! * [`exceptional`]: search for potentials with a double eigenvalue.
//!
//! Everything is generic over the real scalar (`f32` or `f64`); the aliases
//! below fix `f64`, which is what the numerical tolerances are tuned for.

pub mod data;
pub mod error;
pub mod exceptional;
pub mod linalg;
pub mod main_equation;
pub mod partial_fraction;
pub mod perturbation;
pub mod ode;
pub mod problem;
pub mod quadrature;
pub mod scalar;
pub mod spectral;

pub use data::SpectralData;
pub use error::{Result, SlError};
pub use problem::{BcKind, BoundaryProblem};
pub use scalar::Real;
pub use spectral::{GeneralizedSpectralData, Spectrum};

pub type C64 = num_complex::Complex<f64>;
pub type Problem = BoundaryProblem<f64>;
pub type Gsd = GeneralizedSpectralData<f64>;
pub type Data = SpectralData<f64>;

//! Donoghue m-functions for singular Sturm–Liouville operators with limit-circle endpoints.
//!
//! The expression `τ = r⁻¹[−(p u′)′ + q u]` on `(a, b)` is handled through
//! generalized boundary values at singular ends, a numerically built deficiency
//! basis and Krein-type resolvent formulas. The generalized Bessel family has
//! closed forms and serves as ground truth.

pub mod bessel;
pub mod deficiency;
pub mod donoghue;
pub mod endpoint;
pub mod error;
pub mod krein;
pub mod linalg;
pub mod ode;
pub mod problem;
pub mod quadrature;
pub mod special;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use linalg::{ComplexMat2, RealMat2};
pub use problem::{Bound, EndpointClass, EndpointKind, ExtensionSpec, Side, SlProblem};

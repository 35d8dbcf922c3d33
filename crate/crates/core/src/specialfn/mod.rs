//! Scalar special functions and quadrature primitives.
//!
//! Everything here is a pure function of its arguments.

mod bessel;
mod gamma;
mod quad;

pub(crate) use bessel::ln_heat_kernel_origin;
pub use bessel::{bessel_i, bessel_i_scaled, heat_kernel_1d};
pub(crate) use gamma::ln_factorial;
pub use gamma::{gamma_abs, log_gamma, LogGamma};
pub use quad::{integrate_adaptive, integrate_with_hints, QuadHints, QuadSpec, Quadrature};

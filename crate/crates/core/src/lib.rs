// quadrature nodes keep their published digits; `!(x > 0.0)` comparisons deliberately reject NaN
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod continuum;
pub mod error;
pub mod ids;
pub mod kernel;
pub mod lattice;
pub mod lifshitz;
pub mod specialfn;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};

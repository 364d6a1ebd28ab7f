//! Numerical laboratory for generalized growth functionals of entire
//! functions and power-series solutions of linear complex ODEs.

pub mod erfloat;
pub mod error;
pub mod growth;
pub mod harness;
pub mod nevanlinna;
pub mod ode;
pub mod scale;
pub mod series;

pub use erfloat::{ExtendedComplex, ExtendedReal};
pub use error::{Error, Result};

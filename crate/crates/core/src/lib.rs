//! Drinfeld modular forms over F_q[T] as truncated u-series, with Hecke,
//! Atkin-Lehner and trace operators and exact old/new space checks.

pub mod algebra;
pub mod error;

pub use error::{Error, Result};
pub mod carlitz;
pub mod forms;
pub mod hecke;
pub mod level;
pub mod spectral;
pub mod suites;
pub mod useries;

pub use algebra::{Field, FieldSpec, Poly, Scalar, XPoly};
pub use useries::USeries;

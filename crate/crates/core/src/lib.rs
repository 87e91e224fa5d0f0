//! Convolution powers of probability measures on ℤ.
//!
//! The crate computes `μⁿ` exactly or through FFT products, evaluates the
//! characteristic function `θ(t) = Σ μ(k) e^{2πikt}` and the diagnostics
//! built from it (strict aperiodicity, angular ratio, Gaussian majorant,
//! the function `φ(t) = |f′(t)/t|`), estimates tail and smoothness
//! exponents, fits the kernel decay and difference bounds that drive the
//! weak (1,1) maximal inequality, and checks that inequality on the
//! integer shift.

pub mod error;
pub mod kernel;
pub mod maximal;
pub mod measure;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod summation;
pub mod tail;
pub mod zoo;

pub use error::{Error, Result};
pub use measure::{LatticeMeasure, PowerMethod};

//! Numerical workbench for PPT states of bipartite systems: entanglement
//! mappings, Tomita cones, cone-distance measures, block positivity and the
//! Cho–Kye–Lee family of positive maps on `M_3`.

pub mod batch;
pub mod cklmaps;
pub mod entangling;
pub mod error;
pub mod io;
pub mod mapspace;
pub mod matcore;
pub mod measures;
pub mod rng;
pub mod scalar;
pub mod states;
pub mod stormer;
pub mod tomita;

pub use error::{Error, Result};
pub use num_complex::Complex;

/// Complex double.
pub type C64 = Complex<f64>;
/// Double-precision matrix used by every module above `matcore`.
pub type CMat = matcore::ComplexMatrix<f64>;
/// Single-precision matrix.
pub type CMat32 = matcore::ComplexMatrix<f32>;

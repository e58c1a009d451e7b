//! Doubling indices, harmonic lifts and nodal-set measurement for Laplace
//! eigenfunctions on the flat tori `T²`, `T³` and the round sphere `S²`.

pub mod calibration;
pub mod cascade;
pub mod doubling;
pub mod eigen;
pub mod error;
pub mod field;
pub mod geometry;
pub mod nodal;
pub mod quad;
pub mod runner;
pub mod wavescale;

pub use eigen::{eigenvalue_list, lift, Eigenfunction, LiftedFunction};
pub use error::{Error, Result};
pub use field::Field;
pub use geometry::{BallSpec, ChartId, CubeSpec, ManifoldId};
pub use quad::QuadratureSpec;

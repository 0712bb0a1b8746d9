//! Numerical toolkit for the torsion, volume and Zograf-product equalities
//! of cusped and Dehn-filled hyperbolic 3-manifolds.

pub mod error;
pub mod fixtures;
pub mod gluing;
pub mod holonomy;
pub mod linalg;
pub mod specfun;
pub mod spectrum;
pub mod torsion;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Numerical toolkit for the sigma_k Yamabe problem on manifolds with boundary.
//!
//! The crate is organised bottom-up:
//! [`symfun`] holds the exact algebra of elementary symmetric functions,
//! [`geom`] evaluates curvature and boundary quantities on charts,
//! [`conformal`] transforms metrics and integrates the boundary functionals,
//! [`variation`] checks the first-variation formulas by finite differences,
//! and [`solver`] runs Newton continuation on the radial reduction.

pub mod conformal;
pub mod error;
pub mod geom;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod symfun;
pub mod tolerances;
pub mod variation;

pub use error::{Error, Result};

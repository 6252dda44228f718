//! Numerical laboratory for generalised interval exchange transformations.
//!
//! The crate is organised bottom-up: [`combinatorics`] holds the Rauzy machine on
//! permutations, [`giet`] the numerical maps, [`renorm`] the renormalisation operator,
//! [`affine`] the finite-dimensional linear picture, and the remaining modules build
//! estimates, shadowing and conjugacy constructions on top.

pub mod affine;
pub mod cohomology;
pub mod combinatorics;
pub mod error;
pub mod estimates;
pub mod fit;
pub mod giet;
pub mod lab;
pub mod linalg;
pub mod renorm;
pub mod shadowing;
pub mod systems;

pub use error::{Error, Result};

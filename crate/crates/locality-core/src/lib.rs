//! Numerical workbench for locality in finite quantum spin systems:
//! Lieb-Robinson light cones, gap-implied correlation decay, exact
//! quasi-adiabatic continuation, Lieb-Schultz-Mattis twists, flux insertion,
//! and (l,ε) topological order, all verified at exact-diagonalization scale.

pub mod blas;
pub mod dynamics;
pub mod error;
pub mod filters;
pub mod lattice;
pub mod models;
pub mod operator;
pub mod protocols;
pub mod qac;
pub mod spectral;

pub use error::{Error, Result};

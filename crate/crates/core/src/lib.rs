//! Truncated Fock-space laboratory.

pub mod approximation;
pub mod error;
pub mod fock;
pub mod lab;
pub mod lattice;
pub mod localization;
pub mod quadrature;
pub mod operators;
pub mod special;
pub mod tolerances;

pub use error::{Error, Result};

//! Boolean hierarchical Tucker network (BHTN) decomposition.
//!
//! A Boolean tensor is decomposed by recursive reshape-and-split. Every split
//! is an alternating Boolean matrix factorization whose column subproblems
//! are posed as higher-order binary polynomials, reduced to QUBO form and
//! handed to a pluggable minimizer.

pub mod bench;
pub mod bmf;
pub mod bool_core;
mod error;
pub mod gen;
pub mod htn;
pub mod hubo;
pub mod seed;
pub mod solvers;

pub use bool_core::{BitMatrix, BitTensor, BitVector};
pub use error::{Error, Result};

//! Exact integer and rational linear algebra: Hermite and Smith normal forms,
//! sublattices of `ℤⁿ`, and solvability of affine systems modulo `ℤⁿ`.
//!
//! Nothing here touches floating point. Every routine is a pure function of
//! immutable inputs.

mod hnf;
mod matrix;
pub mod rational;
mod snf;
mod solve;
mod sublattice;

pub use hnf::{column_hnf_basis, hnf, is_row_hnf};
pub use matrix::{IntegerMatrix, RationalMatrix};
pub use rational::Rat;
pub use snf::{is_smith_form, snf, SmithDecomposition};
pub use solve::{solve_affine_mod_lattice, AffineSolution, Obstruction};
pub use sublattice::{lattice_membership, saturate, Sublattice};

pub(crate) use solve::solve_with_smith;

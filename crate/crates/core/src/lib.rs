//! SU(2)-invariant density-matrix eigenproblems for Heisenberg spin clusters.
//!
//! A rotation- and time-reversal-invariant operator on `N` spins 1/2 is a
//! combination of products of scalar products `σ_i·σ_j` over disjoint pairs.
//! [`multiindex`] enumerates those products, [`algebra`] handles their
//! overlaps and products, and [`sse`] turns `H ρ = E ρ` into a small real
//! eigenproblem on their coefficients. [`oracle`] holds the dense reference
//! implementations everything is checked against.

pub mod algebra;
pub mod dense;
pub mod error;
pub mod io;
pub mod multiindex;
pub mod oracle;
mod permutation;
pub mod rational;
pub mod sse;
pub mod sum_rules;
pub mod system;
pub mod total_spin;

pub use algebra::{InvariantOperator, Gram};
pub use dense::{DenseLimit, DenseOperator};
pub use error::{Error, Result};
pub use multiindex::{BasisCatalog, MultiIndex};
pub use sse::{build_reduced_matrix, solve, ReducedEigenproblem, SolveTolerances};
pub use system::SpinSystem;

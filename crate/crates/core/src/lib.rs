//! Desk-scale numerics for operator-space norms and the inequalities that
//! govern them: minimal tensor norms of Kronecker sums, the conjugate-paired
//! order cone, Λ_p norms of operator-valued functions (commutative, on the
//! torus, and on matrix algebras with normalized trace), martingale square
//! functions, pair-partition combinatorics, and Wick/Ginibre moments.
//!
//! Everything here is exact at small finite dimension: measure spaces are
//! atomic, trigonometric polynomials are integrated by exact quadrature, and
//! pairing sums are enumerated, so every inequality can be checked against
//! hard tolerances rather than sampled error bars.

pub mod cone;
pub mod error;
pub mod lambda;
pub mod linalg;
pub mod martingale;
pub mod nc;
pub mod partitions;
pub mod randmat;
pub mod torus;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, KronSumOperator, C64};

//! Group OWL regularized multi-task learning with dynamic safe screening.
//!
//! Solves
//!
//! ```text
//! min_B  F(B) + Σᵢ λᵢ ‖B₍ᵢ₎,:‖₂
//! ```
//!
//! for the multi-task squared loss and the multinomial logistic loss, where
//! the rows of `B` are penalized in decreasing order of their norms by the
//! non-increasing weights `λ`. Both solvers ([`solve_apgd`] and
//! [`solve_spgd`]) track the duality gap and use it to discard features that
//! are provably zero at the optimum, shrinking the problem as they go.

// `!(x > 0.0)` rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apgd;
pub mod data;
pub mod design;
pub mod duality;
pub mod error;
pub mod loss;
pub mod numeric;
pub mod oracle;
pub mod penalty;
pub mod screening;
pub mod solver;
pub mod spgd;

pub use apgd::{solve_apgd, ApgdConfig};
pub use data::{oscar_weights, synth_correlated, Dataset, OscarSpec, SyntheticProblem, SyntheticSpec};
pub use design::{Design, SparseMatrix};
pub use duality::{DualScores, GapCertificate};
pub use error::{Error, Result};
pub use loss::{LossKind, ProblemData};
pub use penalty::WeightVector;
pub use screening::{ActiveSet, ScreeningEvent};
pub use solver::{ScreeningConfig, Solution, SolverTrace, TraceRow, Warmup};
pub use spgd::{solve_spgd, SpgdConfig};

//! loopwalk disproves almost-sure termination (AST) and positive almost-sure
//! termination (PAST) of probabilistic term rewrite systems.
//!
//! The method: find a loop in the non-probabilistic variant of the system,
//! build the probabilistic rewrite sequence tree along it, count occurrences
//! of the looping term (or multiplicities of a pattern term) in the leaves,
//! and read the termination behavior off the random walk those counts
//! induce. Every verdict comes with a certificate that can be re-checked
//! independently of the search.

pub mod cli;
pub mod counting;
pub mod patterns;
pub mod prover;
pub mod ptrs;
pub mod rst;
pub mod term;
pub mod walks;

pub use prover::{prove, prove_with, verify_certificate, Certificate, Goal, SearchBudget, Verdict, VerdictKind};
pub use ptrs::{parse_ptrs, Ptrs};

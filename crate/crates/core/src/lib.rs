//! Maximum agreement forests of rooted and unrooted binary phylogenetic trees.
//!
//! The entry points are [`solve`], [`solve_min`] and the kind-checking
//! wrappers [`umaf::solve_umaf`] and [`rmaf::solve_rmaf`].

pub mod cli;
pub mod error;
pub mod forest;
pub mod gen;
pub mod oracle;
pub mod phylo;
pub mod rmaf;
pub mod search;
pub mod split_core;
pub mod umaf;

pub use error::{MafError, Result};
pub use search::{solve, solve_min, Algorithm, Outcome, RuleFire, SolveResult, Stats};

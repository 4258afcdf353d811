//! Glue-variable guided CDCL solving.
//!
//! A CDCL SAT solver with EVSIDS branching whose scores are periodically
//! overwritten ("refocused") by a clause-literal graph neural network trained to
//! predict variables that appear in glue clauses. The crate also contains the
//! supporting pipelines: supervised data generation, training (KL objective with
//! averaged SGD, REINFORCE with a value baseline), the episodic RL environment,
//! and a benchmark harness computing PAR-2 and related metrics.
//!
//! Batch workloads (benchmark sweeps, dataset generation, RL rollouts) run on
//! rayon when the `parallel` feature is enabled (the default) and fall back to
//! plain iterators otherwise; see [`par`].

pub mod cnf;
pub mod datagen;
pub mod env;
pub mod error;
pub mod eval;
pub mod extract;
pub mod math;
pub mod net;
pub mod par;
pub mod rng;
pub mod solver;
pub mod train;

pub use cnf::{Clause, Formula, Literal, SparseGraph};
pub use error::{Error, Result};
pub use solver::{SolveResult, Solver, SolverConfig, Status};

//! Graph-constrained dynamic choice with positively α-homogeneous reinforcement.
//!
//! An agent stream walks a constraint graph. At each step the next choice is
//! drawn from the neighbours of the previous one, with weights
//! `(μ̂_j x_j)^α` mixed with a uniform exploration term. The crate provides
//!
//! - [`graph`]: constraint graphs, validation and the experimental topologies,
//! - [`schedule`]: exploration and cooling sequences,
//! - [`walk`]: the reinforced walk itself, fixed or annealed,
//! - [`analysis`]: limit kernels, stationary laws, the potential and the
//!   replicator flow it drives, closed-form and perturbative fixed points,
//! - [`baselines`]: graph-constrained simulated annealing and ε-greedy,
//! - [`harness`]: experiment configs, persistence and summaries behind the CLI.

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod schedule;
pub mod walk;

pub use error::{Error, Result};
pub use graph::Graph;

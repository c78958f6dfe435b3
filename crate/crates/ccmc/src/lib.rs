//! Evolving reliable discriminating instances for the chance-constrained
//! maximum coverage problem.
//!
//! The pipeline, bottom to top:
//! - [`graph`]: undirected graphs and the coverage objective.
//! - [`instance`]: stochastic node costs, Chebyshev feasibility surrogate,
//!   and the penalized inner fitness.
//! - [`solvers`]: five baseline heuristics (EA, RLS, GHC, FGA, SA) that
//!   maximize the penalized fitness under an evaluation budget.
//! - [`ratio`]: paired performance ratios and the plain / discounting
//!   fitness functions over them.
//! - [`evolver`]: the outer (1+1) EA that mutates an instance's cost
//!   parameters to widen the gap between two solvers.
//! - [`experiment`]: batch orchestration, validation passes, and summary
//!   tables.
//!
//! With the default `parallel` feature, solver batches run on rayon; the
//! sequential path (`run_batch_seq`) produces identical results and is always
//! available.

pub mod error;
pub mod evolver;
pub mod experiment;
pub mod graph;
pub mod instance;
pub mod ratio;
pub mod seed;
pub mod solvers;

pub use error::{Error, Result};
pub use evolver::{evolve, EvolverConfig, FitnessKind};
pub use graph::{gen_random_graph, load_edge_list, load_matrix_market, Graph, IndexBase};
pub use instance::{init_random, BitSolution, StochasticInstance};
pub use ratio::{Confidence, RatioStats};
pub use solvers::{run_batch, run_batch_seq, run_solver, Algorithm, SolverConfig};

//! Exact Steiner trees in graphs without a K4-minor rooted at the terminals.
//!
//! The solver works on instances with *virtual edges*: pairs of vertices
//! whose four connection patterns (only `u`, only `v`, joined, both but
//! apart) each carry their own price. Plain Steiner tree is the special case
//! with none. See [`solver::solve`] for the entry point and [`oracle`] for the
//! exhaustive reference solvers used in testing.

pub mod cli;
pub mod cycle;
pub mod dsu;
pub mod gen;
pub mod graph;
pub mod instance;
pub mod intervaldp;
pub mod oracle;
pub mod reduce;
pub mod solver;
pub mod trace;
pub mod weight;

pub use graph::{EdgeId, Vertex};
pub use instance::{validate_solution, Root, VeStatus};
pub use solver::{solve, SolveError, SolveOutput, SolveStats, ROOT_THRESHOLD};
pub use weight::Scalar;

use num_rational::Ratio;

pub type Weight = weight::Weight<i64>;
pub type Multigraph = graph::Multigraph<i64>;
pub type Instance = instance::Instance<i64>;
pub type Solution = instance::Solution<i64>;
pub type VirtualEdge = instance::VirtualEdge<i64>;

pub type RationalWeight = weight::Weight<Ratio<i64>>;
pub type RationalMultigraph = graph::Multigraph<Ratio<i64>>;
pub type RationalInstance = instance::Instance<Ratio<i64>>;
pub type RationalSolution = instance::Solution<Ratio<i64>>;
pub type RationalVirtualEdge = instance::VirtualEdge<Ratio<i64>>;

//! Discrete optimal transport on the unit square with extended-real costs:
//! primal and dual solvers, rectification of the cost by feasible dual
//! pairs, L-negligible sets and block approximation of plans.

pub mod approximator;
pub mod catalog;
pub mod cost;
pub mod error;
pub mod extended;
pub mod geometry;
pub mod grid;
pub mod instance;
pub mod negligibility;
pub mod plan;
pub mod rectifier;
pub mod solver;

pub use cost::{CostDescriptor, CostMatrix, Region, RegionKind, Sampling};
pub use error::{Error, Result};
pub use extended::ExtendedReal;
pub use grid::{DiscreteMeasure, Grid, MarginalSpec};
pub use instance::Instance;
pub use plan::{DualPotentials, TransportPlan};
pub use solver::{solve_dual, solve_partial, solve_primal, SolveReport, SolveStatus};

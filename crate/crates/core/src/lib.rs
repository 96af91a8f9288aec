//! Budget-constrained shortest paths on randomly weighted complete graphs.
//!
//! * [`instance`]: deterministic complete-graph instances and their file format.
//! * [`pareto`]: exact solver via bicriteria Pareto frontiers, plus a
//!   brute-force oracle.
//! * [`dual`]: Lagrangian dual `psi(lambda)`, dual maximization and the
//!   budget-shrink primal heuristic.
//! * [`theory`]: closed-form asymptotics and probability bounds.
//! * [`experiments`]: seeded Monte Carlo harness comparing the two.

pub mod dual;
pub mod experiments;
pub mod instance;
pub mod pareto;
pub mod rng;
pub mod theory;

pub use dual::{budget_shrink_solve, dual_maximize, psi, DualError, DualResult, ShrinkResult, ShrinkStatus};
pub use instance::{DistributionSpec, EdgeWeight, Instance, InstanceError, PathResult, StorageMode};
pub use pareto::{brute_force_csp, min_product, pareto_frontier, solve_csp, CspSolution, CspStatus, ParetoError, ParetoFrontier};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

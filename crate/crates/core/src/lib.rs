//! Rotamer assignment for computational protein design, posed as a
//! quadratic semi-assignment problem
//!
//! ```text
//! minimize ½ xᵀBx + aᵀx   over 0/1 vectors with exactly one 1 per block,
//! ```
//!
//! and solved through continuous relaxations with a spectral projected
//! gradient (SPG) method:
//!
//! * **SCSC** relaxes each block to the probability simplex and runs SPG with
//!   the Euclidean block-simplex projection;
//! * **SCP** moves the block-sum constraints into a quadratic penalty
//!   `σ Σ_i (Σ_r x_r − 1)²` and runs SPG over the nonnegative orthant.
//!
//! Relaxed solutions are turned into assignments by [`rounding::round`].
//! [`drivers::solve_exact`] enumerates small instances and serves as the
//! ground-truth oracle.

pub mod bench;
pub mod drivers;
pub mod energy;
pub mod error;
pub mod io;
pub mod model;
pub mod projection;
pub mod rounding;
pub mod spg;

pub use drivers::{
    multistart, solve, solve_exact, solve_scp, solve_scsc, Algorithm, InitPolicy, MultistartPlan,
    SolveReport, SolverOptions,
};
pub use energy::{
    discrete_energy, gradient, objective, penalized_gradient, penalized_objective, PenaltyParams,
};
pub use error::{Error, Result};
pub use model::{BlockLayout, BlockVector, DiscreteAssignment, InstanceSpec, PairBlock};
pub use projection::{project_block_simplex, project_nonneg, FeasibleSetKind};
pub use rounding::{round, RoundingRule};
pub use spg::{spg_minimize, SpgConfig, SpgOutcome, TerminationReason};

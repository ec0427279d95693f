//! Constrained multi-objective simulation optimization for a plasma-treated
//! adhesive bonding process.
//!
//! The optimizer (MOSK, multi-objective stochastic kriging) scalarizes the
//! two objectives (maximize break strength, minimize cost) with an augmented
//! Tchebycheff function whose weights are redrawn every iteration, models the
//! scalarized response with a heteroscedastic Gaussian process, and picks the
//! next design by maximizing modified expected improvement times a logistic
//! probability of feasibility with a particle swarm. An NSGA-II baseline and a
//! 2-D hypervolume tracker are provided for comparison.
//!
//! Module map:
//!
//! * [`problem`]: design space, synthetic bonding simulator, feasibility rule
//! * [`sampling`]: Latin hypercube designs
//! * [`surrogate`]: stochastic kriging
//! * [`feasibility`]: logistic probability-of-feasibility classifier
//! * [`pareto`]: scalarization, dominance, hypervolume, archive
//! * [`infill`]: MEI, infill criterion, particle swarm
//! * [`baseline`]: NSGA-II
//! * [`driver`]: the optimization loop, experiments, config and CSV output

pub mod baseline;
pub mod driver;
mod error;
pub mod feasibility;
pub mod infill;
pub mod pareto;
pub mod problem;
pub mod sampling;
pub mod surrogate;

pub use error::{Error, Result};

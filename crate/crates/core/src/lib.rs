//! Multiobjective neural fitted Q-iteration for fixed-horizon process
//! control, with transfer of learned vector-valued Q-functions across
//! changing objective weights.
//!
//! - [`env`]: fixed-horizon episodic environment contract.
//! - [`sim`]: analytic deep-drawing surrogate with stochastic friction.
//! - [`neural`]: multi-output MLPs with L-BFGS training.
//! - [`morl`]: scalarization, policies, target construction, task runners.
//! - [`oracle`]: exhaustive schedule enumeration, Pareto fronts, expectation
//!   deviations.

pub mod env;
pub mod neural;
pub mod sim;
pub mod morl;
pub mod oracle;
pub mod seed;

//! Frequency-secured stochastic unit commitment for valuing system inertia.
//!
//! The library schedules a thermal/wind power system over quantile scenario
//! trees with a rolling planning loop, enforcing post-fault frequency
//! security (RoCoF, nadir, quasi-steady-state) as linear constraints on the
//! commitment MILP. On top of the scheduler sit three valuation studies that
//! quantify what an extra MW·s² of system inertia is worth: annual value
//! against wind capacity, instantaneous value over a demand-wind grid, and
//! the marginal value of increasing inertia provision.
//!
//! Modules map onto the pipeline:
//! - [`domain`]: fleet and system data with validation.
//! - [`frequency`]: swing-equation simulator, security floors, nadir cuts.
//! - [`scenario`]: wind process, quantile trees.
//! - [`milp`]: solver-independent model plus a built-in simplex/branch-and-bound solver.
//! - [`scheduler`]: SUC assembly and the rolling run.
//! - [`valuation`]: the three studies and the binding-constraint probe.
//! - [`config`]: file-backed study configuration.

pub mod cli;
pub mod config;
pub mod domain;
pub mod frequency;
pub mod milp;
pub mod scenario;
pub mod scheduler;
pub mod valuation;

pub(crate) mod exec;

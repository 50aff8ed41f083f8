//! Tip pool prediction and simulation for DAG ledgers whose messages fall
//! into classes with distinct visibility delays.
//!
//! The crate has four layers:
//!
//! * [`model`] — closed-form removal-time distribution and mean, plus
//!   bisection solvers for the steady-state tip pool size (general n-class
//!   and the specialized two-class equation with its linearizations and
//!   critical fraction).
//! * [`sim`] — a deterministic discrete-event simulator of DAG growth under
//!   Poisson arrivals, used to validate the model.
//! * [`quarantine`] — the timed opinion pipeline that realizes the value
//!   message delay `h + d_Q`, with a pluggable conflict resolver.
//! * [`controller`] — the moving-average estimator and adaptive
//!   parent-number rule that keep the pool small as the value fraction
//!   drifts.
//!
//! The [`config`], [`experiment`], [`report`] and [`chart`] modules form the
//! experiment harness behind the `tippool` command-line tool.

pub mod chart;
pub mod config;
pub mod controller;
pub mod experiment;
pub mod model;
pub mod quarantine;
pub mod report;
pub mod sim;
pub mod stats;

pub use config::{ConfigError, ExperimentConfig, Mode};
pub use controller::{adaptive_k, AdaptiveParentPolicy, ControllerConfig, FractionEstimator};
pub use model::{
    expected_removal_time, l_minus, l_minus_constant, l_plus, p_star, pool_size_residual,
    removal_time_cdf, solve_pool_size, solve_pool_size_two_class, DelayClass, ModelError,
    ModelParams, TwoClassParams,
};
pub use quarantine::{
    ConflictResolver, LikedWinsResolver, Opinion, Outcome, QuarantineEntry, QuarantinePipeline,
};
pub use sim::{
    empirical_removal_cdf, run_simulation, run_simulation_quarantined, run_simulation_with_policy,
    sweep, sweep_point_seed, sweep_with_policy, SimConfig, SimError, SimResult,
};

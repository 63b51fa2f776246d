//! Scheduling observations over `M` identical nights when only a random
//! number of them turn out observable.
//!
//! The objective is the Expected Total Gain: with `π_m` the probability that
//! exactly the first `m` nights are observable and `g_i` the gain planned for
//! night `i`, `ETG = Σ_m π_m Σ_{i≤m} g_i`. [`solver::solve_stochastic`]
//! maximizes it exactly; [`strategies`] holds the greedy and omniscient
//! baselines, [`reactive`] the rolling re-optimization over the scenario
//! tree, and [`campaign`] the batch statistics.
//!
//! With the default `parallel` feature, independent solves (omniscient
//! curves, scenario subtrees, sweeps, campaigns) run on rayon; every such
//! entry point takes an [`Execution`] so the sequential path stays available.

pub mod campaign;
pub mod error;
pub mod generator;
pub mod model;
pub mod oracle;
pub mod par;
pub mod reactive;
pub mod report;
pub mod single_night;
pub mod solver;
pub mod strategies;

pub use error::Error;
pub use model::{
    etg_from_gains, expected_total_gain, validate_instance, validate_schedule, Instance, NightPlan, Observation,
    ObservationId, PlacedObservation, ProbabilityVector, Schedule, TOLERANCE,
};
pub use par::Execution;
pub use solver::{solve_stochastic, SolveResult, SolveStatus, SolverConfig};

//! Hybrid stock-and-flow simulation of regulatory T-cell subsets over a
//! human lifetime, with a cohort comparison harness.
//!
//! * [`model`]: parameters, regime phases and the flow equations.
//! * [`engine`]: RK4 integration between discrete response events, ensembles
//!   and parameter sweeps.
//! * [`statistics`]: median, sample SD, Mann-Whitney U.
//! * [`validation`]: decade-binned comparison of simulated and laboratory
//!   cross-sections.
//! * [`cli`]: configuration, subcommands and output files.

pub mod cli;
pub mod engine;
pub mod model;
pub mod numfmt;
pub mod parallel;
pub mod rng;
pub mod statistics;
pub mod validation;

pub use engine::{run_ensemble, run_simulation, EngineError, Trajectory};
pub use model::{ConfigError, ScenarioParameters};
pub use parallel::Execution;

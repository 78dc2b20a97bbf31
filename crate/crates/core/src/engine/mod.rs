//! Hybrid simulation: fixed-step integration between discrete events,
//! stochastic response draws, and replicated runs.

mod ensemble;
mod integrator;
mod schedule;
mod simulate;
mod sweep;
mod trajectory;

use thiserror::Error;

use crate::model::{ConfigError, Stocks};

pub use ensemble::{run_ensemble, run_ensemble_with, EnsembleResult};
pub use integrator::{advance_step, StepReport};
pub use schedule::{snap_to_grid, EventSchedule};
pub use simulate::{apply_intervention, next_response, run_simulation, run_with_interventions, DepletionFractions, Intervention};
pub use sweep::{sweep, sweep_with, SweepRow};
pub use trajectory::{EventKind, EventRecord, RunSummary, Sample, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("integration produced a non-finite state in the step starting at t = {t} days: {snapshot:?}")]
    NonFinite { t: f64, snapshot: Vec<Stocks> },
}

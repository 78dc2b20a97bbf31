use crate::model::{ConfigError, ScenarioParameters};
use crate::parallel::{map_ordered, Execution};
use crate::statistics::sample_sd;

use super::{run_simulation, EngineError, Trajectory};

/// Replicated runs plus cross-run spread of each total.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub runs: Vec<Trajectory>,
    /// Sample SD across runs at each sample time, as `[P, R, Q]`.
    pub sd: Vec<[f64; 3]>,
    /// Maximum over time of `sd`, per stock.
    pub max_sd: [f64; 3],
}

pub fn run_ensemble(params: &ScenarioParameters, seeds: &[u64]) -> Result<EnsembleResult, EngineError> {
    run_ensemble_with(params, seeds, Execution::default())
}

pub fn run_ensemble_with(
    params: &ScenarioParameters,
    seeds: &[u64],
    exec: Execution,
) -> Result<EnsembleResult, EngineError> {
    if seeds.len() < 2 {
        return Err(ConfigError::Other(format!("an ensemble needs at least 2 seeds, got {}", seeds.len())).into());
    }
    params.validate()?;
    let runs = map_ordered(seeds, exec, |&seed| run_simulation(params, seed))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let n_samples = runs[0].samples.len();
    let mut sd = Vec::with_capacity(n_samples);
    let mut max_sd = [0.0f64; 3];
    let mut column = vec![0.0; runs.len()];
    for i in 0..n_samples {
        let mut row = [0.0; 3];
        for (k, pick) in [
            (|s: &super::Sample| s.totals.p) as fn(&super::Sample) -> f64,
            |s| s.totals.r,
            |s| s.totals.q,
        ]
        .into_iter()
        .enumerate()
        {
            for (slot, run) in column.iter_mut().zip(&runs) {
                *slot = pick(&run.samples[i]);
            }
            // At least two values are present, so this cannot fail.
            row[k] = sample_sd(&column).unwrap_or(0.0);
            max_sd[k] = max_sd[k].max(row[k]);
        }
        sd.push(row);
    }
    Ok(EnsembleResult { runs, sd, max_sd })
}

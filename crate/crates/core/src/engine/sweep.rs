use crate::model::{ConfigError, ScenarioParameters};
use crate::parallel::{map_ordered, Execution};

use super::{run_simulation, EngineError, RunSummary};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub summary: RunSummary,
}

/// One run per grid value of `name`, all with the same seed.
pub fn sweep(
    base: &ScenarioParameters,
    name: &str,
    grid: &[f64],
    seed: u64,
) -> Result<Vec<SweepRow>, EngineError> {
    sweep_with(base, name, grid, seed, Execution::default())
}

pub fn sweep_with(
    base: &ScenarioParameters,
    name: &str,
    grid: &[f64],
    seed: u64,
    exec: Execution,
) -> Result<Vec<SweepRow>, EngineError> {
    base.get(name)?;
    if grid.is_empty() {
        return Err(ConfigError::Other(format!("sweep grid for `{name}` is empty")).into());
    }
    let variants = grid
        .iter()
        .map(|&v| {
            let mut p = base.clone();
            p.set(name, v)?;
            p.validate()?;
            Ok(p)
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let runs = map_ordered(&variants, exec, |p| run_simulation(p, seed).map(|t| t.summary()));
    grid.iter()
        .zip(runs)
        .map(|(&value, summary)| {
            Ok(SweepRow {
                parameter: name.to_string(),
                value,
                summary: summary?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name_lists_valid_names() {
        let err = sweep(&ScenarioParameters::default(), "gamma", &[1.0], 1).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gamma") && msg.contains("piN"), "{msg}");
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(sweep(&ScenarioParameters::default(), "m", &[], 1).is_err());
    }

    #[test]
    fn invalid_grid_value_rejected() {
        assert!(sweep(&ScenarioParameters::default(), "piN", &[2.0], 1).is_err());
    }
}

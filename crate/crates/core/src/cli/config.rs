//! Run configuration: a TOML file whose every key has a default, overridden
//! by command-line flags.
//!
//! ```toml
//! [scenario]            # any ScenarioParameters field, e.g.
//! sigma0 = 2000.0
//! dR = 0.05
//!
//! [run]
//! seeds = [1, 2, 3]
//! out = "out"
//! format = "text"      # or "csv"
//! plot = false
//!
//! [validation]
//! lab = "donors.csv"
//! pool_replications = false
//! replication = 0
//!
//! [intervention]
//! time_years = 40.0
//! fraction = 0.9       # or precursor / active / quiescent individually
//!
//! [sweep]
//! parameter = "m"
//! values = [0.25, 0.5, 1.0]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{DepletionFractions, Intervention};
use crate::model::{ConfigError, ScenarioParameters};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seeds: Vec<u64>,
    /// When set with a single seed, expands it into this many derived seeds.
    pub replications: Option<usize>,
    pub out: PathBuf,
    pub format: OutputFormat,
    /// Also write an SVG chart of the proportions next to each trajectory.
    pub plot: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seeds: vec![1],
            replications: None,
            out: PathBuf::from("out"),
            format: OutputFormat::Text,
            plot: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSection {
    pub lab: Option<PathBuf>,
    /// Compare against every replication pooled instead of a single one.
    pub pool_replications: bool,
    /// Index into the seed list of the replication compared by default.
    pub replication: usize,
    pub delimiter: Option<char>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionSection {
    pub time_years: f64,
    /// Uniform depletion; per-stock keys take precedence.
    pub fraction: Option<f64>,
    pub precursor: Option<f64>,
    pub active: Option<f64>,
    pub quiescent: Option<f64>,
}

impl InterventionSection {
    pub fn fractions(&self) -> DepletionFractions {
        let base = self.fraction.unwrap_or(0.0);
        DepletionFractions {
            precursor: self.precursor.unwrap_or(base),
            active: self.active.unwrap_or(base),
            quiescent: self.quiescent.unwrap_or(base),
        }
    }

    pub fn to_intervention(&self, days_per_year: f64) -> Intervention {
        Intervention {
            time_days: self.time_years * days_per_year,
            fractions: self.fractions(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioParameters,
    pub run: RunSection,
    pub validation: ValidationSection,
    pub intervention: Option<InterventionSection>,
    pub sweep: Option<SweepSection>,
}

/// Command-line values layered over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub lab: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub set: Vec<(String, f64)>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Other(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Other(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| ConfigError::Other(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn apply(&mut self, o: Overrides) -> Result<(), ConfigError> {
        if !o.seeds.is_empty() {
            self.run.seeds = o.seeds;
        }
        if let Some(out) = o.out {
            self.run.out = out;
        }
        if let Some(lab) = o.lab {
            self.validation.lab = Some(lab);
        }
        if let Some(format) = o.format {
            self.run.format = format;
        }
        for (name, value) in o.set {
            self.scenario.set(&name, value)?;
        }
        Ok(())
    }

    /// Seeds to run, after expanding `replications`.
    pub fn seeds(&self) -> Vec<u64> {
        match (self.run.replications, self.run.seeds.as_slice()) {
            (Some(n), [master]) => (0..n as u64).map(|i| derive_seed(*master, i)).collect(),
            _ => self.run.seeds.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario.validate()?;
        if self.run.seeds.is_empty() {
            return Err(ConfigError::Other("no seeds given".into()));
        }
        if let Some(iv) = &self.intervention {
            iv.fractions().validate()?;
            let horizon = self.scenario.horizon_years;
            if !(iv.time_years >= 0.0 && iv.time_years <= horizon) {
                return Err(ConfigError::Other(format!(
                    "intervention at {} years lies beyond the {horizon}-year horizon",
                    iv.time_years
                )));
            }
        }
        if let Some(sw) = &self.sweep {
            self.scenario.get(&sw.parameter)?;
            if sw.values.is_empty() {
                return Err(ConfigError::Other(format!("sweep grid for `{}` is empty", sw.parameter)));
            }
        }
        if let Some(lab) = &self.validation.lab {
            if !lab.is_file() {
                return Err(ConfigError::Other(format!("lab dataset {} does not exist", lab.display())));
            }
        }
        Ok(())
    }
}

/// Parse `name=value` as given to `--set`.
pub fn parse_assignment(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let value: f64 = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = RunConfig::from_toml_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn sections_parse() {
        let c = RunConfig::from_toml_str(
            r#"
            [scenario]
            dR = 0.1
            piN = 0.2
            clone_selection = "cycle"
            [run]
            seeds = [3, 4]
            [intervention]
            time_years = 40
            fraction = 0.9
            quiescent = 0.5
            [sweep]
            parameter = "m"
            values = [0.1, 0.2]
            "#,
        )
        .unwrap();
        assert_eq!(c.scenario.d_r, 0.1);
        assert_eq!(c.scenario.pi_n, 0.2);
        assert_eq!(c.run.seeds, vec![3, 4]);
        let fr = c.intervention.as_ref().unwrap().fractions();
        assert_eq!((fr.precursor, fr.active, fr.quiescent), (0.9, 0.9, 0.5));
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml_str("[scenario]\nbeta = 1\n").is_err());
        assert!(RunConfig::from_toml_str("[nope]\n").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut c = RunConfig::default();
        c.apply(Overrides {
            seeds: vec![9],
            set: vec![("sigma0".into(), 5.0)],
            ..Default::default()
        })
        .unwrap();
        assert_eq!(c.run.seeds, vec![9]);
        assert_eq!(c.scenario.sigma0, 5.0);
        assert!(c
            .apply(Overrides {
                set: vec![("zzz".into(), 1.0)],
                ..Default::default()
            })
            .is_err());
    }

    #[test]
    fn replications_expand_master_seed() {
        let mut c = RunConfig::default();
        c.run.seeds = vec![7];
        c.run.replications = Some(3);
        let seeds = c.seeds();
        assert_eq!(seeds.len(), 3);
        assert_ne!(seeds[0], seeds[1]);
    }

    #[test]
    fn late_intervention_rejected() {
        let mut c = RunConfig::default();
        c.intervention = Some(InterventionSection {
            time_years: 100.0,
            fraction: Some(0.5),
            precursor: None,
            active: None,
            quiescent: None,
        });
        assert!(c.validate().is_err());
    }

    #[test]
    fn serialized_config_reloads() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }

    #[test]
    fn assignment_parsing() {
        assert_eq!(parse_assignment("m=0.5").unwrap(), ("m".to_string(), 0.5));
        assert!(parse_assignment("m").is_err());
        assert!(parse_assignment("m=x").is_err());
    }
}

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::engine::{
    run_ensemble, run_simulation, run_with_interventions, sweep, DepletionFractions, EngineError, Intervention,
    Trajectory,
};
use crate::model::ConfigError;
use crate::parallel::{map_ordered, Execution};
use crate::validation::{
    cohort_to_csv, compare_cohorts, ingest_cohort, render_table, sample_cross_section, sample_cross_section_pooled,
    table_to_csv, CohortFormat, TableStyle, ValidationError,
};

use super::config::{OutputFormat, RunConfig};
use super::output;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(c) => c.into(),
            other @ EngineError::NonFinite { .. } => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        CliError::Data(e.to_string())
    }
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct CommandReport {
    /// Files written, in write order, including the manifest.
    pub files: Vec<PathBuf>,
    /// Text meant for standard output.
    pub stdout: String,
}

#[derive(Debug, Serialize)]
struct RunEntry {
    seed: u64,
    file: String,
    fingerprint: String,
    clamp_warnings: u64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    status: &'a str,
    error: Option<String>,
    config: &'a RunConfig,
    runs: Vec<RunEntry>,
    files: Vec<String>,
    warnings: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
    runs: Vec<RunEntry>,
    warnings: Vec<String>,
    stdout: String,
}

impl Outputs {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }

    fn write_run(&mut self, cfg: &RunConfig, name: &str, traj: &Trajectory) -> Result<(), CliError> {
        self.write(&format!("{name}.csv"), &output::trajectory_csv(traj))?;
        if cfg.run.plot {
            self.write(&format!("{name}.svg"), &output::proportions_svg(traj))?;
        }
        if traj.clamp_warnings > 0 {
            self.warnings.push(format!(
                "{name}: {} negative undershoots clamped to zero",
                traj.clamp_warnings
            ));
        }
        self.runs.push(RunEntry {
            seed: traj.seed,
            file: format!("{name}.csv"),
            fingerprint: format!("{:016x}", traj.fingerprint),
            clamp_warnings: traj.clamp_warnings,
        });
        Ok(())
    }
}

/// Prepare the output directory, run `body`, and always write the manifest.
fn with_manifest(
    cfg: &RunConfig,
    command: &str,
    body: impl FnOnce(&mut Outputs) -> Result<(), CliError>,
) -> Result<CommandReport, CliError> {
    let dir = cfg.run.out.clone();
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Output {
        path: dir.clone(),
        source,
    })?;
    let mut out = Outputs {
        dir,
        files: Vec::new(),
        runs: Vec::new(),
        warnings: Vec::new(),
        stdout: String::new(),
    };
    let result = cfg.validate().map_err(CliError::from).and_then(|()| body(&mut out));
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        status: if result.is_ok() { "ok" } else { "failed" },
        error: result.as_ref().err().map(ToString::to_string),
        config: cfg,
        runs: std::mem::take(&mut out.runs),
        files: out
            .files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        warnings: out.warnings.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}")) + "\n";
    let written = out.write(MANIFEST_FILE, &json);
    result?;
    written?;
    Ok(CommandReport {
        files: out.files,
        stdout: out.stdout,
    })
}

fn primary_seed(cfg: &RunConfig) -> u64 {
    cfg.seeds().first().copied().unwrap_or(1)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<CommandReport, CliError> {
    with_manifest(cfg, "simulate", |out| {
        let seeds = cfg.seeds();
        let runs = map_ordered(&seeds, Execution::default(), |&s| run_simulation(&cfg.scenario, s))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        let mut summaries = Vec::new();
        for traj in &runs {
            out.write_run(cfg, &format!("trajectory_seed{}", traj.seed), traj)?;
            summaries.push((traj.seed, traj.summary()));
        }
        let table = output::summary_csv(&summaries);
        out.write("summary.csv", &table)?;
        out.stdout = table;
        Ok(())
    })
}

pub fn cmd_ensemble(cfg: &RunConfig) -> Result<CommandReport, CliError> {
    with_manifest(cfg, "ensemble", |out| {
        let seeds = cfg.seeds();
        let ens = run_ensemble(&cfg.scenario, &seeds)?;
        for (i, traj) in ens.runs.iter().enumerate() {
            out.write_run(cfg, &format!("run{i}_seed{}", traj.seed), traj)?;
        }
        out.write("ensemble_sd.csv", &output::ensemble_sd_csv(&ens))?;
        let summary = output::ensemble_summary_csv(&ens);
        out.write("ensemble_summary.csv", &summary)?;
        out.stdout = match cfg.run.format {
            OutputFormat::Csv => summary,
            OutputFormat::Text => format!(
                "max SD across {} runs\n  P_total  {:.6e}\n  R_total  {:.6e}\n  Q_total  {:.6e}\n",
                ens.runs.len(),
                ens.max_sd[0],
                ens.max_sd[1],
                ens.max_sd[2]
            ),
        };
        Ok(())
    })
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<CommandReport, CliError> {
    with_manifest(cfg, "validate", |out| {
        let lab_path = cfg
            .validation
            .lab
            .as_deref()
            .ok_or_else(|| CliError::Config("validate needs a lab dataset (--lab PATH)".into()))?;
        let format = CohortFormat {
            delimiter: cfg.validation.delimiter.map_or(b',', |c| c as u8),
        };
        let cohort = ingest_cohort(lab_path, format)?;
        out.warnings.extend(cohort.warnings.iter().cloned());
        let ages: Vec<f64> = cohort.samples.iter().map(|s| s.age).collect();

        let seeds = cfg.seeds();
        let used: Vec<u64> = if cfg.validation.pool_replications {
            seeds
        } else {
            let seed = *seeds.get(cfg.validation.replication).ok_or_else(|| {
                CliError::Config(format!(
                    "replication index {} out of range for {} seeds",
                    cfg.validation.replication,
                    seeds.len()
                ))
            })?;
            vec![seed]
        };
        // The simulation must reach the oldest donor.
        let mut scenario = cfg.scenario.clone();
        let oldest = ages.iter().copied().fold(0.0, f64::max);
        if oldest > scenario.horizon_years {
            let extended = oldest.ceil();
            out.warnings.push(format!(
                "horizon extended from {} to {extended} years to cover the oldest donor ({oldest})",
                scenario.horizon_years
            ));
            scenario.horizon_years = extended;
        }
        let runs = map_ordered(&used, Execution::default(), |&s| run_simulation(&scenario, s))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        for (i, traj) in runs.iter().enumerate() {
            out.write_run(cfg, &format!("run{i}_seed{}", traj.seed), traj)?;
        }
        let sim = if runs.len() == 1 {
            sample_cross_section(&runs[0], &ages)?
        } else {
            sample_cross_section_pooled(&runs, &ages)?
        };
        out.write("sim_cross_section.csv", &cohort_to_csv(&sim))?;

        let table = compare_cohorts(&cohort.samples, &sim)?;
        let text = render_table(&table, TableStyle::Text);
        let delimited = render_table(&table, TableStyle::Csv);
        out.write("comparison.txt", &text)?;
        out.write("comparison_table.csv", &delimited)?;
        out.write("comparison.csv", &table_to_csv(&table))?;
        out.stdout = match cfg.run.format {
            OutputFormat::Text => text,
            OutputFormat::Csv => delimited,
        };
        Ok(())
    })
}

pub fn cmd_intervene(cfg: &RunConfig) -> Result<CommandReport, CliError> {
    with_manifest(cfg, "intervene", |out| {
        let section = cfg
            .intervention
            .as_ref()
            .ok_or_else(|| CliError::Config("intervene needs an [intervention] section".into()))?;
        let treated_iv = section.to_intervention(cfg.scenario.days_per_year);
        // Zero depletion at the same instant keeps both sample grids aligned.
        let baseline_iv = Intervention {
            fractions: DepletionFractions::default(),
            ..treated_iv
        };
        let seed = primary_seed(cfg);
        let pair = [baseline_iv, treated_iv];
        let runs = map_ordered(&pair, Execution::default(), |iv| {
            run_with_interventions(&cfg.scenario, seed, std::slice::from_ref(iv))
        });
        let mut runs = runs.into_iter();
        let (baseline, treated) = match (runs.next(), runs.next()) {
            (Some(b), Some(t)) => (b?, t?),
            _ => unreachable!("two runs requested"),
        };
        out.write_run(cfg, &format!("baseline_seed{seed}"), &baseline)?;
        out.write_run(cfg, &format!("intervened_seed{seed}"), &treated)?;
        let diff = output::difference_csv(&baseline, &treated);
        out.write("difference.csv", &diff)?;
        let summaries = vec![(seed, baseline.summary()), (seed, treated.summary())];
        let table = output::summary_csv(&summaries);
        out.write("summary.csv", &table)?;
        out.stdout = table;
        Ok(())
    })
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandReport, CliError> {
    with_manifest(cfg, "sweep", |out| {
        let section = cfg
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
        let rows = sweep(&cfg.scenario, &section.parameter, &section.values, primary_seed(cfg))?;
        for r in &rows {
            if r.summary.clamp_warnings > 0 {
                out.warnings.push(format!(
                    "{} = {}: {} negative undershoots clamped",
                    r.parameter, r.value, r.summary.clamp_warnings
                ));
            }
        }
        let table = output::sweep_csv(&rows);
        out.write("sweep.csv", &table)?;
        out.stdout = table;
        Ok(())
    })
}

/// Names accepted by [`run_command`].
pub const COMMANDS: [&str; 5] = ["simulate", "ensemble", "validate", "intervene", "sweep"];

pub fn run_command(name: &str, cfg: &RunConfig) -> Result<CommandReport, CliError> {
    match name {
        "simulate" => cmd_simulate(cfg),
        "ensemble" => cmd_ensemble(cfg),
        "validate" => cmd_validate(cfg),
        "intervene" => cmd_intervene(cfg),
        "sweep" => cmd_sweep(cfg),
        other => Err(CliError::Config(format!("unknown command `{other}`"))),
    }
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(MANIFEST_FILE)
}

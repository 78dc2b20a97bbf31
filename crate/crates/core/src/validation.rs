//! Cross-sectional comparison of simulated and laboratory cohorts.
//!
//! Both cohorts are binned by decade of age (`floor(age / 10)`), group
//! medians are compared per measure, and a two-sided Mann-Whitney test is run
//! per bin. "Mature" is the quiescent proportion throughout.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Trajectory;
use crate::statistics::{mann_whitney, median, MwMode, StatsError};

pub const COHORT_COLUMNS: [&str; 3] = ["age", "precursor_prop", "quiescent_prop"];

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("{path}: cannot read cohort file: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{location}: {message}")]
    Format { location: String, message: String },
    #[error("{location}: row {row}: {message}")]
    Row {
        location: String,
        row: usize,
        message: String,
    },
    #[error("age {age} years lies outside the simulated range [0, {horizon_years}]")]
    AgeOutOfRange { age: f64, horizon_years: f64 },
    #[error("cohort comparison: {0}")]
    Analysis(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Lab,
    Simulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CohortSample {
    pub age: f64,
    pub precursor_prop: f64,
    pub quiescent_prop: f64,
    pub source: Source,
}

impl CohortSample {
    pub fn decade(&self) -> u32 {
        decade_of(self.age)
    }
}

pub fn decade_of(age: f64) -> u32 {
    (age / 10.0).floor() as u32
}

pub fn decade_label(decade: u32) -> String {
    format!("{}-{}", decade * 10, decade * 10 + 9)
}

/// Delimited-text layout of a cohort file.
#[derive(Debug, Clone, Copy)]
pub struct CohortFormat {
    pub delimiter: u8,
}

impl Default for CohortFormat {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub samples: Vec<CohortSample>,
    pub warnings: Vec<String>,
}

pub fn ingest_cohort(path: &Path, format: CohortFormat) -> Result<Cohort, ValidationError> {
    let file = std::fs::File::open(path).map_err(|source| ValidationError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_cohort(file, format, &path.display().to_string())
}

/// Parse cohort records. Extra columns are ignored; the three named columns
/// are required. `location` prefixes error messages (usually the file path).
pub fn parse_cohort<R: Read>(reader: R, format: CohortFormat, location: &str) -> Result<Cohort, ValidationError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let fmt_err = |message: String| ValidationError::Format {
        location: location.to_string(),
        message,
    };
    let headers = rdr.headers().map_err(|e| fmt_err(format!("unreadable header: {e}")))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(fmt_err(format!("missing header; expected `{}`", COHORT_COLUMNS.join(","))));
    }
    let mut idx = [0usize; 3];
    for (slot, name) in idx.iter_mut().zip(COHORT_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| fmt_err(format!("header lacks column `{name}` (found `{}`)", headers.iter().collect::<Vec<_>>().join(","))))?;
    }

    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let line = |rec: &csv::StringRecord| rec.position().map_or(row + 1, |p| p.line() as usize);
        let record = record.map_err(|e| ValidationError::Row {
            location: location.to_string(),
            row,
            message: e.to_string(),
        })?;
        let at = format!("{location}:{}", line(&record));
        let row_err = |message: String| ValidationError::Row {
            location: at.clone(),
            row,
            message,
        };
        let mut values = [0.0f64; 3];
        for (v, (&col, name)) in values.iter_mut().zip(idx.iter().zip(COHORT_COLUMNS)) {
            let raw = record.get(col).ok_or_else(|| row_err(format!("missing `{name}`")))?;
            *v = raw
                .parse::<f64>()
                .map_err(|_| row_err(format!("`{name}` is not a number: `{raw}`")))?;
            if !v.is_finite() {
                return Err(row_err(format!("`{name}` is not finite")));
            }
        }
        let [age, pp, qp] = values;
        if age < 0.0 {
            return Err(row_err(format!("negative age {age}")));
        }
        for (name, p) in [("precursor_prop", pp), ("quiescent_prop", qp)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(row_err(format!("`{name}` = {p} outside [0, 1]")));
            }
        }
        samples.push(CohortSample {
            age,
            precursor_prop: pp,
            quiescent_prop: qp,
            source: Source::Lab,
        });
    }
    let mut warnings = Vec::new();
    if samples.is_empty() {
        warnings.push(format!("{location}: no records after header"));
    }
    Ok(Cohort { samples, warnings })
}

/// Proportions of the trajectory sample nearest each age. Ties go to the
/// earlier sample.
pub fn sample_cross_section(traj: &Trajectory, ages: &[f64]) -> Result<Vec<CohortSample>, ValidationError> {
    let s = &traj.samples;
    let horizon_years = s.last().map_or(0.0, |x| x.t_years);
    ages.iter()
        .map(|&age| {
            if !(age >= 0.0 && age <= horizon_years * (1.0 + 1e-12)) {
                return Err(ValidationError::AgeOutOfRange { age, horizon_years });
            }
            let after = s.partition_point(|x| x.t_years < age);
            let pick = if after == 0 {
                0
            } else if after == s.len() {
                s.len() - 1
            } else {
                let (lo, hi) = (&s[after - 1], &s[after]);
                if hi.t_years - age < age - lo.t_years {
                    after
                } else {
                    after - 1
                }
            };
            Ok(CohortSample {
                age,
                precursor_prop: s[pick].precursor_prop,
                quiescent_prop: s[pick].quiescent_prop,
                source: Source::Simulation,
            })
        })
        .collect()
}

/// Cross-sections of every run, concatenated: one observation per run and age.
pub fn sample_cross_section_pooled(runs: &[Trajectory], ages: &[f64]) -> Result<Vec<CohortSample>, ValidationError> {
    let mut out = Vec::with_capacity(runs.len() * ages.len());
    for run in runs {
        out.extend(sample_cross_section(run, ages)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub decade: u32,
    pub label: String,
    pub n_lab: usize,
    pub n_sim: usize,
    pub median_lab_precursor: Option<f64>,
    pub median_sim_precursor: Option<f64>,
    pub median_lab_quiescent: Option<f64>,
    pub median_sim_quiescent: Option<f64>,
    pub median_diff_precursor: Option<f64>,
    pub median_diff_quiescent: Option<f64>,
    pub p_precursor: Option<f64>,
    pub p_quiescent: Option<f64>,
}

/// Rows cover every decade from the youngest to the oldest bin seen in
/// either cohort; bins missing one side carry `None` (rendered `n/a`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// Rows where both cohorts have data.
    pub fn compared_rows(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.n_lab > 0 && r.n_sim > 0)
    }
}

pub fn compare_cohorts(lab: &[CohortSample], sim: &[CohortSample]) -> Result<ComparisonTable, ValidationError> {
    if lab.is_empty() || sim.is_empty() {
        return Err(ValidationError::Analysis("both cohorts must be non-empty".into()));
    }
    let decades = lab.iter().chain(sim).map(CohortSample::decade);
    let (lo, hi) = decades.fold((u32::MAX, 0), |(lo, hi), d| (lo.min(d), hi.max(d)));

    let mut rows = Vec::new();
    for decade in lo..=hi {
        let pick = |set: &[CohortSample], f: fn(&CohortSample) -> f64| -> Vec<f64> {
            set.iter().filter(|s| s.decade() == decade).map(f).collect()
        };
        let lab_p = pick(lab, |s| s.precursor_prop);
        let lab_q = pick(lab, |s| s.quiescent_prop);
        let sim_p = pick(sim, |s| s.precursor_prop);
        let sim_q = pick(sim, |s| s.quiescent_prop);
        let med = |v: &[f64]| if v.is_empty() { Ok(None) } else { median(v).map(Some) };
        let (mlp, msp, mlq, msq) = (med(&lab_p)?, med(&sim_p)?, med(&lab_q)?, med(&sim_q)?);
        let both = !lab_p.is_empty() && !sim_p.is_empty();
        let (p_precursor, p_quiescent) = if both {
            (
                Some(mann_whitney(&sim_p, &lab_p, MwMode::Auto)?.p_two_sided),
                Some(mann_whitney(&sim_q, &lab_q, MwMode::Auto)?.p_two_sided),
            )
        } else {
            (None, None)
        };
        rows.push(ComparisonRow {
            decade,
            label: decade_label(decade),
            n_lab: lab_p.len(),
            n_sim: sim_p.len(),
            median_lab_precursor: mlp,
            median_sim_precursor: msp,
            median_lab_quiescent: mlq,
            median_sim_quiescent: msq,
            median_diff_precursor: mlp.zip(msp).map(|(a, b)| (a - b).abs()),
            median_diff_quiescent: mlq.zip(msq).map(|(a, b)| (a - b).abs()),
            p_precursor,
            p_quiescent,
        });
    }
    let table = ComparisonTable { rows };
    if table.compared_rows().next().is_none() {
        return Err(ValidationError::Analysis(
            "no decade bin contains both laboratory and simulated samples".into(),
        ));
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableStyle {
    #[default]
    Text,
    Csv,
}

pub fn format_p(p: Option<f64>) -> String {
    match p {
        None => "n/a".into(),
        Some(p) if p < 0.001 => "p<0.001".into(),
        Some(p) => format!("p={p:.3}"),
    }
}

fn format_diff(d: Option<f64>) -> String {
    d.map_or_else(|| "n/a".into(), |d| format!("{d:.4}"))
}

const HEADINGS: [&str; 7] = [
    "Age (Years)",
    "Median Diff Precursors",
    "Median Diff Matures",
    "Mann Whitney Precursors",
    "Mann Whitney Matures",
    "n_lab",
    "n_sim",
];

/// Human-facing rendering with the display conventions for p-values.
pub fn render_table(table: &ComparisonTable, style: TableStyle) -> String {
    let cells: Vec<[String; 7]> = table
        .rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                format_diff(r.median_diff_precursor),
                format_diff(r.median_diff_quiescent),
                format_p(r.p_precursor),
                format_p(r.p_quiescent),
                r.n_lab.to_string(),
                r.n_sim.to_string(),
            ]
        })
        .collect();
    let mut out = String::new();
    match style {
        TableStyle::Csv => {
            out.push_str(&HEADINGS.join(","));
            out.push('\n');
            for row in &cells {
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        TableStyle::Text => {
            let mut widths = HEADINGS.map(str::len);
            for row in &cells {
                for (w, c) in widths.iter_mut().zip(row) {
                    *w = (*w).max(c.len());
                }
            }
            let mut line = |row: &[&str]| {
                let parts: Vec<String> = row
                    .iter()
                    .zip(widths)
                    .enumerate()
                    .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect();
                let _ = writeln!(out, "{}", parts.join("  ").trim_end());
            };
            line(&HEADINGS);
            for row in &cells {
                line(&row.iter().map(String::as_str).collect::<Vec<_>>());
            }
        }
    }
    out
}

fn num(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), crate::numfmt::sci17)
}

/// Machine-readable table: raw values at full precision.
pub fn table_to_csv(table: &ComparisonTable) -> String {
    let mut out = String::from(
        "decade,n_lab,n_sim,median_lab_precursor,median_sim_precursor,median_lab_quiescent,median_sim_quiescent,median_diff_precursor,median_diff_quiescent,p_precursor,p_quiescent\n",
    );
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.label,
            r.n_lab,
            r.n_sim,
            num(r.median_lab_precursor),
            num(r.median_sim_precursor),
            num(r.median_lab_quiescent),
            num(r.median_sim_quiescent),
            num(r.median_diff_precursor),
            num(r.median_diff_quiescent),
            num(r.p_precursor),
            num(r.p_quiescent),
        );
    }
    out
}

/// Cohort export readable by [`ingest_cohort`].
pub fn cohort_to_csv(samples: &[CohortSample]) -> String {
    let mut out = String::from("age,precursor_prop,quiescent_prop,source\n");
    for s in samples {
        let source = match s.source {
            Source::Lab => "lab",
            Source::Simulation => "simulation",
        };
        let _ = writeln!(
            out,
            "{},{},{},{source}",
            crate::numfmt::sci17(s.age),
            crate::numfmt::sci17(s.precursor_prop),
            crate::numfmt::sci17(s.quiescent_prop)
        );
    }
    out
}

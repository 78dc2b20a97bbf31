//! Delimited-text and SVG writers for command outputs.

use std::fmt::Write as _;

use crate::engine::{EnsembleResult, RunSummary, SweepRow, Trajectory};
use crate::numfmt::sci17;

pub const TRAJECTORY_HEADER: &str =
    "time_days,time_years,P_total,R_total,Q_total,precursor_prop,active_prop,quiescent_prop,phase";

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.samples.len() * 200);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &traj.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            sci17(s.t_days),
            sci17(s.t_years),
            sci17(s.totals.p),
            sci17(s.totals.r),
            sci17(s.totals.q),
            sci17(s.precursor_prop),
            sci17(s.active_prop),
            sci17(s.quiescent_prop),
            s.phase.label()
        );
    }
    out
}

/// `treated - baseline` per total, sample by sample.
pub fn difference_csv(baseline: &Trajectory, treated: &Trajectory) -> String {
    let mut out = String::from("time_days,time_years,dP_total,dR_total,dQ_total\n");
    for (b, t) in baseline.samples.iter().zip(&treated.samples) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            sci17(t.t_days),
            sci17(t.t_years),
            sci17(t.totals.p - b.totals.p),
            sci17(t.totals.r - b.totals.r),
            sci17(t.totals.q - b.totals.q)
        );
    }
    out
}

pub fn ensemble_sd_csv(ens: &EnsembleResult) -> String {
    let mut out = String::from("time_days,time_years,sd_P_total,sd_R_total,sd_Q_total\n");
    for (s, sd) in ens.runs[0].samples.iter().zip(&ens.sd) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            sci17(s.t_days),
            sci17(s.t_years),
            sci17(sd[0]),
            sci17(sd[1]),
            sci17(sd[2])
        );
    }
    out
}

pub fn ensemble_summary_csv(ens: &EnsembleResult) -> String {
    let mut out = String::from("stock,max_sd\n");
    for (name, v) in ["P_total", "R_total", "Q_total"].iter().zip(ens.max_sd) {
        let _ = writeln!(out, "{name},{}", sci17(v));
    }
    out
}

pub const SUMMARY_HEADER: &str = "inversion_years,crossings,final_precursor_prop,final_active_prop,final_quiescent_prop,max_P_total,max_R_total,max_Q_total,P_non_increasing,clamp_warnings";

pub fn summary_fields(s: &RunSummary) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        s.inversion_years.map_or_else(|| "n/a".to_string(), sci17),
        s.crossings,
        sci17(s.final_precursor_prop),
        sci17(s.final_active_prop),
        sci17(s.final_quiescent_prop),
        sci17(s.max_p),
        sci17(s.max_r),
        sci17(s.max_q),
        s.p_non_increasing,
        s.clamp_warnings
    )
}

pub fn summary_csv(rows: &[(u64, RunSummary)]) -> String {
    let mut out = format!("seed,{SUMMARY_HEADER}\n");
    for (seed, s) in rows {
        let _ = writeln!(out, "{seed},{}", summary_fields(s));
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("parameter,value,{SUMMARY_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.parameter, sci17(r.value), summary_fields(&r.summary));
    }
    out
}

/// Static SVG line chart of precursor and quiescent proportions against age.
pub fn proportions_svg(traj: &Trajectory) -> String {
    const W: f64 = 720.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    let max_years = traj.samples.last().map_or(1.0, |s| s.t_years.max(1e-9));
    let x = |years: f64| PAD + (W - 2.0 * PAD) * years / max_years;
    let y = |prop: f64| H - PAD - (H - 2.0 * PAD) * prop;
    let line = |pick: fn(&crate::engine::Sample) -> f64| {
        traj.samples
            .iter()
            .map(|s| format!("{:.2},{:.2}", x(s.t_years), y(pick(s))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{0}" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{0}" x2="{1}" y2="{0}" stroke="grey" stroke-dasharray="4"/>"#,
        y(0.5),
        W - PAD
    );
    let _ = writeln!(svg, r#"<polyline fill="none" stroke="steelblue" points="{}"/>"#, line(|s| s.precursor_prop));
    let _ = writeln!(svg, r#"<polyline fill="none" stroke="firebrick" points="{}"/>"#, line(|s| s.quiescent_prop));
    let _ = writeln!(
        svg,
        r#"<text x="{PAD}" y="20" font-size="12">precursor (blue) and quiescent (red) proportion vs age, 0-{max_years:.0} years</text>"#
    );
    svg.push_str("</svg>\n");
    svg
}

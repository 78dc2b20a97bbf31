use crate::model::{PhaseKind, Stocks};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t_days: f64,
    pub t_years: f64,
    pub totals: Stocks,
    pub precursor_prop: f64,
    pub active_prop: f64,
    pub quiescent_prop: f64,
    pub phase: PhaseKind,
}

impl Sample {
    pub fn new(t_days: f64, days_per_year: f64, totals: Stocks, phase: PhaseKind) -> Self {
        let total = totals.total();
        let (pp, ap, qp) = if total > 0.0 {
            (totals.p / total, totals.r / total, totals.q / total)
        } else {
            (0.0, 0.0, 0.0)
        };
        Self {
            t_days,
            t_years: t_days / days_per_year,
            totals,
            precursor_prop: pp,
            active_prop: ap,
            quiescent_prop: qp,
            phase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Onset { primary: bool, clone: usize },
    Contraction { clone: usize },
    Intervention,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub t_days: f64,
    pub kind: EventKind,
}

/// Output of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub fingerprint: u64,
    pub samples: Vec<Sample>,
    pub events: Vec<EventRecord>,
    pub clamp_warnings: u64,
}

impl Trajectory {
    pub fn onset_times(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Onset { .. }))
            .map(|e| e.t_days)
            .collect()
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary::of(self)
    }
}

/// Scalar digest of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// First downward crossing of precursor_prop through 0.5, linearly
    /// interpolated between samples.
    pub inversion_years: Option<f64>,
    /// Number of sample-to-sample sign changes of `precursor_prop - 0.5`.
    pub crossings: usize,
    pub final_precursor_prop: f64,
    pub final_active_prop: f64,
    pub final_quiescent_prop: f64,
    pub max_p: f64,
    pub max_r: f64,
    pub max_q: f64,
    pub p_non_increasing: bool,
    pub clamp_warnings: u64,
}

impl RunSummary {
    pub fn of(traj: &Trajectory) -> Self {
        let s = &traj.samples;
        let mut crossings = 0;
        let mut inversion = None;
        for w in s.windows(2) {
            let (a, b) = (w[0].precursor_prop, w[1].precursor_prop);
            if (a >= 0.5) != (b >= 0.5) {
                crossings += 1;
                if inversion.is_none() && a >= 0.5 {
                    let frac = if a != b { (a - 0.5) / (a - b) } else { 0.0 };
                    inversion = Some(w[0].t_years + frac * (w[1].t_years - w[0].t_years));
                }
            }
        }
        let last = s.last();
        let max = |f: fn(&Sample) -> f64| s.iter().map(f).fold(0.0, f64::max);
        Self {
            inversion_years: inversion,
            crossings,
            final_precursor_prop: last.map_or(0.0, |x| x.precursor_prop),
            final_active_prop: last.map_or(0.0, |x| x.active_prop),
            final_quiescent_prop: last.map_or(0.0, |x| x.quiescent_prop),
            max_p: max(|x| x.totals.p),
            max_r: max(|x| x.totals.r),
            max_q: max(|x| x.totals.q),
            p_non_increasing: s.windows(2).all(|w| w[1].totals.p <= w[0].totals.p),
            clamp_warnings: traj.clamp_warnings,
        }
    }
}

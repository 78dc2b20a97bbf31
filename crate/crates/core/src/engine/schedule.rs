use std::collections::VecDeque;

use super::simulate::Intervention;

/// Index of the first grid point `n * h` at or after `t`.
///
/// Times within a relative 1e-9 of a grid point are treated as on it, so
/// `201.9 / 0.1` lands on step 2019 despite rounding in the division.
pub fn snap_to_grid(t: f64, h: f64) -> u64 {
    let x = t / h;
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * x.abs().max(1.0) {
        nearest.max(0.0) as u64
    } else {
        x.ceil().max(0.0) as u64
    }
}

/// Pending discrete events, all expressed as step-grid indices.
#[derive(Debug, Clone)]
pub struct EventSchedule {
    interval: f64,
    expansion: f64,
    h: f64,
    next_onset_ordinal: u64,
    next_onset: u64,
    pending_switch: Option<u64>,
    interventions: VecDeque<(u64, Intervention)>,
}

impl EventSchedule {
    pub fn new(interval: f64, expansion: f64, h: f64, mut interventions: Vec<Intervention>) -> Self {
        interventions.sort_by(|a, b| a.time_days.total_cmp(&b.time_days));
        let interventions = interventions
            .into_iter()
            .map(|iv| (snap_to_grid(iv.time_days, h), iv))
            .collect();
        Self {
            interval,
            expansion,
            h,
            next_onset_ordinal: 1,
            next_onset: snap_to_grid(interval, h),
            pending_switch: None,
            interventions,
        }
    }

    /// Scheduled (unsnapped) time of the next onset, `k * interval`.
    pub fn next_onset_time(&self) -> f64 {
        self.next_onset_ordinal as f64 * self.interval
    }

    pub fn pending_switch_time(&self) -> Option<f64> {
        self.pending_switch.map(|n| n as f64 * self.h)
    }

    pub fn pending_interventions(&self) -> impl Iterator<Item = &Intervention> {
        self.interventions.iter().map(|(_, iv)| iv)
    }

    pub(crate) fn take_switch(&mut self, step: u64) -> bool {
        if self.pending_switch == Some(step) {
            self.pending_switch = None;
            true
        } else {
            false
        }
    }

    /// Consumes the onset at `step`, if any, and schedules its contraction.
    pub(crate) fn take_onset(&mut self, step: u64) -> bool {
        if step != self.next_onset {
            return false;
        }
        let onset_time = step as f64 * self.h;
        self.pending_switch = Some(snap_to_grid(onset_time + self.expansion, self.h));
        self.next_onset_ordinal += 1;
        self.next_onset = snap_to_grid(self.next_onset_time(), self.h);
        true
    }

    pub(crate) fn take_intervention(&mut self, step: u64) -> Option<Intervention> {
        match self.interventions.front() {
            Some((n, _)) if *n == step => self.interventions.pop_front().map(|(_, iv)| iv),
            _ => None,
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::model::{
    regime_coefficients, CloneSelection, ConfigError, RegimePhase, ScenarioParameters, Stocks, SystemState,
};
use crate::rng::Xoshiro256;

use super::integrator::{advance_in_place, Rk4Workspace};
use super::schedule::{snap_to_grid, EventSchedule};
use super::trajectory::{EventKind, EventRecord, Sample, Trajectory};
use super::EngineError;

/// Share of each stock removed by an intervention, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DepletionFractions {
    pub precursor: f64,
    pub active: f64,
    pub quiescent: f64,
}

impl DepletionFractions {
    pub fn uniform(fraction: f64) -> Self {
        Self {
            precursor: fraction,
            active: fraction,
            quiescent: fraction,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("precursor fraction", self.precursor),
            ("active fraction", self.active),
            ("quiescent fraction", self.quiescent),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::InvalidParameter {
                    name,
                    value,
                    reason: "depletion fractions must lie in [0, 1]",
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intervention {
    pub time_days: f64,
    pub fractions: DepletionFractions,
}

/// Multiply every compartment's stocks by `1 - fraction`. Time is unchanged.
pub fn apply_intervention(state: &SystemState, fractions: &DepletionFractions) -> Result<SystemState, ConfigError> {
    fractions.validate()?;
    let mut next = state.clone();
    deplete(&mut next, fractions);
    Ok(next)
}

fn deplete(state: &mut SystemState, fr: &DepletionFractions) {
    for s in state.compartments.iter_mut() {
        *s = Stocks::new(
            s.p * (1.0 - fr.precursor),
            s.r * (1.0 - fr.active),
            s.q * (1.0 - fr.quiescent),
        );
    }
}

/// Draw the response mounted at the current onset.
///
/// One uniform variate is always consumed for the primary/secondary draw,
/// plus one more for clone choice under [`CloneSelection::Random`]. A
/// secondary draw on a clone with no completed primary is promoted to
/// primary.
pub fn next_response(state: &SystemState, params: &ScenarioParameters, rng: &mut Xoshiro256) -> RegimePhase {
    let u = rng.next_f64();
    let primary_drawn = u < params.primary_probability(state.t);
    let n = state.n_clones() as u64;
    let clone = match params.clone_selection {
        CloneSelection::Fixed => 1,
        CloneSelection::Cycle => (state.responses % n) as usize + 1,
        CloneSelection::Random => rng.below(n) as usize + 1,
    };
    if primary_drawn || !state.primed[clone] {
        RegimePhase::PrimaryExpansion { clone }
    } else {
        RegimePhase::SecondaryExpansion { clone }
    }
}

pub fn run_simulation(params: &ScenarioParameters, seed: u64) -> Result<Trajectory, EngineError> {
    run_with_interventions(params, seed, &[])
}

/// Simulate from t = 0 to the horizon, applying `interventions` at their
/// grid-snapped times. Each intervention adds a sample taken right after the
/// depletion, in addition to the regular output grid.
pub fn run_with_interventions(
    params: &ScenarioParameters,
    seed: u64,
    interventions: &[Intervention],
) -> Result<Trajectory, EngineError> {
    params.validate()?;
    let horizon = params.horizon_days();
    for iv in interventions {
        iv.fractions.validate()?;
        if !(iv.time_days >= 0.0 && iv.time_days <= horizon) {
            return Err(ConfigError::InvalidParameter {
                name: "intervention time",
                value: iv.time_days,
                reason: "must lie within [0, horizon]",
            }
            .into());
        }
    }

    let h = params.step_days;
    let last_step = snap_to_grid(horizon, h);
    let n_outputs = (horizon / params.output_interval_days + 1e-9).floor() as u64;
    let mut next_output = 0u64;
    let mut next_output_step = 0u64;

    let mut rng = Xoshiro256::seed_from_u64(seed);
    let mut schedule = EventSchedule::new(
        params.inter_response_interval,
        params.expansion_duration,
        h,
        interventions.to_vec(),
    );
    let mut state = SystemState::initial(params);
    let mut ws = Rk4Workspace::default();
    let mut samples = Vec::with_capacity(n_outputs as usize + 1 + interventions.len());
    let mut events = Vec::new();
    let mut clamp_warnings = 0u64;

    let mut step = 0u64;
    loop {
        let t = step as f64 * h;
        state.t = t;

        if schedule.take_switch(step) {
            if let RegimePhase::PrimaryExpansion { clone } = state.phase {
                state.primed[clone] = true;
            }
            state.phase = state.phase.contracted();
            if let Some(clone) = state.phase.active_clone() {
                events.push(EventRecord {
                    t_days: t,
                    kind: EventKind::Contraction { clone },
                });
            }
        }
        if schedule.take_onset(step) {
            let phase = next_response(&state, params, &mut rng);
            state.phase = phase;
            state.responses += 1;
            events.push(EventRecord {
                t_days: t,
                kind: EventKind::Onset {
                    primary: phase.kind().is_primary(),
                    clone: phase.active_clone().unwrap_or(0),
                },
            });
        }
        let mut intervened = false;
        while let Some(iv) = schedule.take_intervention(step) {
            deplete(&mut state, &iv.fractions);
            events.push(EventRecord {
                t_days: t,
                kind: EventKind::Intervention,
            });
            intervened = true;
        }

        let regular = next_output <= n_outputs && step == next_output_step;
        if regular || intervened {
            samples.push(Sample::new(t, params.days_per_year, state.totals(), state.phase.kind()));
        }
        if regular {
            next_output += 1;
            next_output_step = snap_to_grid(next_output as f64 * params.output_interval_days, h);
        }

        if step >= last_step {
            break;
        }
        let coeffs = regime_coefficients(state.phase, params);
        clamp_warnings += advance_in_place(&mut state, &coeffs, h, params, &mut ws)?.clamped;
        step += 1;
    }

    Ok(Trajectory {
        seed,
        fingerprint: params.fingerprint(),
        samples,
        events,
        clamp_warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhaseKind;

    fn short(years: f64) -> ScenarioParameters {
        ScenarioParameters {
            horizon_years: years,
            ..Default::default()
        }
    }

    #[test]
    fn zero_horizon_has_only_initial_sample() {
        let t = run_simulation(&short(0.0), 1).unwrap();
        assert_eq!(t.samples.len(), 1);
        assert_eq!(t.samples[0].t_days, 0.0);
        assert_eq!(t.samples[0].totals.p, ScenarioParameters::default().p0);
    }

    #[test]
    fn no_flows_keep_initial_stocks() {
        let p = ScenarioParameters {
            b: 0.0,
            f: 0.0,
            c: 0.0,
            d_r: 0.0,
            d_q: 0.0,
            m: 0.0,
            sigma0: 0.0,
            p0: 100.0,
            r0: 0.0,
            q0_cells: 0.0,
            horizon_years: 5.0,
            output_interval_days: 30.0,
            ..Default::default()
        };
        let t = run_simulation(&p, 9).unwrap();
        for s in &t.samples {
            assert_eq!(s.totals, Stocks::new(100.0, 0.0, 0.0));
        }
    }

    #[test]
    fn certain_primary_probability() {
        let p = ScenarioParameters { q0: 1.0, ..short(10.0) };
        let t = run_simulation(&p, 3).unwrap();
        assert!(t
            .events
            .iter()
            .all(|e| !matches!(e.kind, EventKind::Onset { primary: false, .. })));
    }

    #[test]
    fn zero_primary_probability_promotes_only_first() {
        let p = ScenarioParameters { q0: 0.0, ..short(10.0) };
        let t = run_simulation(&p, 3).unwrap();
        let kinds: Vec<bool> = t
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Onset { primary, .. } => Some(primary),
                _ => None,
            })
            .collect();
        // 3650 / 100.95 -> 36 onsets.
        assert_eq!(kinds.len(), 36);
        assert!(kinds[0]);
        assert!(kinds[1..].iter().all(|&p| !p));
    }

    #[test]
    fn onsets_land_on_snapped_multiples() {
        let p = short(3.0);
        let t = run_simulation(&p, 1).unwrap();
        let onsets = t.onset_times();
        assert!((onsets[0] - 101.0).abs() < 1e-9);
        assert!((onsets[1] - 201.9).abs() < 1e-9);
        assert!((onsets[2] - 302.9).abs() < 1e-9);
        for (k, t) in onsets.iter().enumerate() {
            let scheduled = (k + 1) as f64 * 100.95;
            assert!(*t >= scheduled - 1e-9 && *t < scheduled + p.step_days);
        }
    }

    #[test]
    fn no_response_before_first_onset() {
        let t = run_simulation(&short(1.0), 1).unwrap();
        for s in t.samples.iter().filter(|s| s.t_days < 100.0) {
            assert_eq!(s.phase, PhaseKind::NoResponse);
        }
    }

    #[test]
    fn cycle_selection_rotates_clones() {
        let p = ScenarioParameters {
            n_clones: 3,
            clone_selection: CloneSelection::Cycle,
            ..short(2.0)
        };
        let t = run_simulation(&p, 1).unwrap();
        let clones: Vec<usize> = t
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::Onset { clone, .. } => Some(clone),
                _ => None,
            })
            .collect();
        assert_eq!(clones, vec![1, 2, 3, 1, 2, 3, 1]);
    }

    #[test]
    fn random_selection_stays_in_range() {
        let p = ScenarioParameters {
            n_clones: 4,
            clone_selection: CloneSelection::Random,
            ..short(20.0)
        };
        let t = run_simulation(&p, 5).unwrap();
        for e in &t.events {
            if let EventKind::Onset { clone, .. } = e.kind {
                assert!((1..=4).contains(&clone));
            }
        }
    }

    #[test]
    fn intervention_fractions_validated() {
        let st = SystemState::initial(&ScenarioParameters::default());
        assert!(apply_intervention(&st, &DepletionFractions::uniform(1.2)).is_err());
        let cleared = apply_intervention(&st, &DepletionFractions::uniform(1.0)).unwrap();
        assert!(cleared.compartments.iter().all(|s| s.total() == 0.0));
        assert_eq!(cleared.t, st.t);
        let same = apply_intervention(&st, &DepletionFractions::uniform(0.0)).unwrap();
        assert_eq!(same, st);
    }

    #[test]
    fn intervention_beyond_horizon_rejected() {
        let iv = Intervention {
            time_days: 1e9,
            fractions: DepletionFractions::uniform(0.5),
        };
        let err = run_with_interventions(&short(1.0), 1, &[iv]).unwrap_err();
        assert!(matches!(err, EngineError::Config(_)));
    }

    #[test]
    fn invalid_params_rejected_before_running() {
        let p = ScenarioParameters { pi_n: -0.1, ..Default::default() };
        assert!(matches!(run_simulation(&p, 1), Err(EngineError::Config(_))));
    }
}

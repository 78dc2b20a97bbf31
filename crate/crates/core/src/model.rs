//! Domain types and the flow equations of the T_reg stock model.
//!
//! Three stocks are tracked per compartment: precursors (P), active matures
//! (R) and quiescent matures (Q). Compartment 0 is the nonspecific pool; the
//! remaining compartments are antigen-specific clone slots. Every flow is a
//! per-day conversion rate multiplied by the size of its source stock.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("unknown parameter `{name}`; valid names: {}", valid.join(", "))]
    UnknownParameter { name: String, valid: Vec<&'static str> },
    #[error("{0}")]
    Other(String),
}

/// How the clone engaged by a new response is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CloneSelection {
    /// Always clone 1.
    #[default]
    Fixed,
    /// Clones 1..=n in turn.
    Cycle,
    /// Uniform over 1..=n.
    Random,
}

/// Every rate, cadence, initial condition and numerical setting of a run.
///
/// The defaults are calibrated so that a lifetime run shows a single
/// precursor/mature inversion in early adulthood. They are illustrative and
/// were not fitted to any cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParameters {
    /// Proliferation of active matures during expansion (1/day).
    pub b: f64,
    /// Reactivation of quiescent matures into active during secondary expansion (1/day).
    pub f: f64,
    /// Reversion active -> quiescent during contraction (1/day).
    pub c: f64,
    /// Death of active matures during contraction (1/day).
    #[serde(rename = "dR")]
    pub d_r: f64,
    /// Death of quiescent matures during contraction (1/day).
    #[serde(rename = "dQ")]
    pub d_q: f64,
    /// Maturation precursor -> active during expansion (1/day).
    pub m: f64,
    /// Fraction of the population engaged by a response.
    #[serde(rename = "piN")]
    pub pi_n: f64,
    /// Primary-response probability at t = 0.
    pub q0: f64,
    /// Decay of the primary-response probability (1/day); 0 keeps it constant.
    pub lambda_q: f64,
    /// Thymic output at birth (cells/day).
    pub sigma0: f64,
    /// Thymic involution rate (1/day).
    pub nu: f64,
    /// Days between response onsets.
    pub inter_response_interval: f64,
    /// Days an expansion phase lasts before contraction starts.
    pub expansion_duration: f64,
    #[serde(rename = "P0")]
    pub p0: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "Q0")]
    pub q0_cells: f64,
    pub n_clones: usize,
    pub clone_selection: CloneSelection,
    /// Apply dQ to every clone's quiescent pool during any contraction.
    pub global_quiescent_decay: bool,
    pub horizon_years: f64,
    pub days_per_year: f64,
    pub step_days: f64,
    pub output_interval_days: f64,
}

impl Default for ScenarioParameters {
    fn default() -> Self {
        Self {
            b: 0.02,
            f: 0.005,
            c: 0.2,
            d_r: 0.005,
            d_q: 5.0e-6,
            m: 0.14,
            pi_n: 0.01,
            q0: 0.3,
            lambda_q: 0.0,
            sigma0: 20.0,
            // Thymic output e-folds every four years.
            nu: 6.85e-4,
            inter_response_interval: 100.95,
            expansion_duration: 7.0,
            p0: 1.0e5,
            r0: 0.0,
            q0_cells: 1.0e4,
            n_clones: 1,
            clone_selection: CloneSelection::Fixed,
            global_quiescent_decay: false,
            horizon_years: 85.0,
            days_per_year: 365.0,
            step_days: 0.1,
            output_interval_days: 1.0,
        }
    }
}

/// Names of the numeric parameters addressable by name (sweeps, overrides).
pub const NUMERIC_PARAMETERS: &[&str] = &[
    "b",
    "f",
    "c",
    "dR",
    "dQ",
    "m",
    "piN",
    "q0",
    "lambda_q",
    "sigma0",
    "nu",
    "inter_response_interval",
    "expansion_duration",
    "P0",
    "R0",
    "Q0",
    "n_clones",
    "horizon_years",
    "days_per_year",
    "step_days",
    "output_interval_days",
];

impl ScenarioParameters {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let non_negative = [
            ("b", self.b),
            ("f", self.f),
            ("c", self.c),
            ("dR", self.d_r),
            ("dQ", self.d_q),
            ("m", self.m),
            ("q0", self.q0),
            ("lambda_q", self.lambda_q),
            ("sigma0", self.sigma0),
            ("nu", self.nu),
            ("P0", self.p0),
            ("R0", self.r0),
            ("Q0", self.q0_cells),
            ("horizon_years", self.horizon_years),
        ];
        for (name, value) in non_negative {
            if !value.is_finite() || value < 0.0 {
                return Err(ConfigError::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and >= 0",
                });
            }
        }
        if !(0.0..=1.0).contains(&self.pi_n) {
            return Err(ConfigError::InvalidParameter {
                name: "piN",
                value: self.pi_n,
                reason: "must lie in [0, 1]",
            });
        }
        let positive = [
            ("inter_response_interval", self.inter_response_interval),
            ("days_per_year", self.days_per_year),
            ("step_days", self.step_days),
            ("output_interval_days", self.output_interval_days),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(ConfigError::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and > 0",
                });
            }
        }
        if !(self.expansion_duration > 0.0 && self.expansion_duration < self.inter_response_interval) {
            return Err(ConfigError::InvalidParameter {
                name: "expansion_duration",
                value: self.expansion_duration,
                reason: "must lie in (0, inter_response_interval)",
            });
        }
        if self.output_interval_days < self.step_days {
            return Err(ConfigError::InvalidParameter {
                name: "output_interval_days",
                value: self.output_interval_days,
                reason: "must be >= step_days",
            });
        }
        if self.n_clones == 0 {
            return Err(ConfigError::InvalidParameter {
                name: "n_clones",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(())
    }

    /// Primary-response probability q(t), clamped to [0, 1].
    pub fn primary_probability(&self, t_days: f64) -> f64 {
        (self.q0 * (-self.lambda_q * t_days).exp()).clamp(0.0, 1.0)
    }

    /// Thymic output σ(t) in cells/day.
    pub fn thymic_input(&self, t_days: f64) -> f64 {
        self.sigma0 * (-self.nu * t_days).exp()
    }

    pub fn horizon_days(&self) -> f64 {
        self.horizon_years * self.days_per_year
    }

    pub fn get(&self, name: &str) -> Result<f64, ConfigError> {
        Ok(match name {
            "b" => self.b,
            "f" => self.f,
            "c" => self.c,
            "dR" => self.d_r,
            "dQ" => self.d_q,
            "m" => self.m,
            "piN" => self.pi_n,
            "q0" => self.q0,
            "lambda_q" => self.lambda_q,
            "sigma0" => self.sigma0,
            "nu" => self.nu,
            "inter_response_interval" => self.inter_response_interval,
            "expansion_duration" => self.expansion_duration,
            "P0" => self.p0,
            "R0" => self.r0,
            "Q0" => self.q0_cells,
            "n_clones" => self.n_clones as f64,
            "horizon_years" => self.horizon_years,
            "days_per_year" => self.days_per_year,
            "step_days" => self.step_days,
            "output_interval_days" => self.output_interval_days,
            _ => return Err(unknown(name)),
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ConfigError> {
        let slot = match name {
            "b" => &mut self.b,
            "f" => &mut self.f,
            "c" => &mut self.c,
            "dR" => &mut self.d_r,
            "dQ" => &mut self.d_q,
            "m" => &mut self.m,
            "piN" => &mut self.pi_n,
            "q0" => &mut self.q0,
            "lambda_q" => &mut self.lambda_q,
            "sigma0" => &mut self.sigma0,
            "nu" => &mut self.nu,
            "inter_response_interval" => &mut self.inter_response_interval,
            "expansion_duration" => &mut self.expansion_duration,
            "P0" => &mut self.p0,
            "R0" => &mut self.r0,
            "Q0" => &mut self.q0_cells,
            "horizon_years" => &mut self.horizon_years,
            "days_per_year" => &mut self.days_per_year,
            "step_days" => &mut self.step_days,
            "output_interval_days" => &mut self.output_interval_days,
            "n_clones" => {
                if value < 1.0 || value.fract() != 0.0 || !value.is_finite() {
                    return Err(ConfigError::InvalidParameter {
                        name: "n_clones",
                        value,
                        reason: "must be a positive integer",
                    });
                }
                self.n_clones = value as usize;
                return Ok(());
            }
            _ => return Err(unknown(name)),
        };
        *slot = value;
        Ok(())
    }

    /// Stable textual form of every parameter, used for fingerprints.
    pub fn canonical_string(&self) -> String {
        let mut out = String::new();
        for name in NUMERIC_PARAMETERS {
            // Name lookup cannot fail for entries of the table.
            let v = self.get(name).unwrap_or(f64::NAN);
            out.push_str(&format!("{name}={v:e};"));
        }
        out.push_str(&format!(
            "clone_selection={:?};global_quiescent_decay={}",
            self.clone_selection, self.global_quiescent_decay
        ));
        out
    }

    /// 64-bit FNV-1a hash of [`canonical_string`](Self::canonical_string).
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.canonical_string().bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0100_0000_01b3);
        }
        hash
    }
}

fn unknown(name: &str) -> ConfigError {
    ConfigError::UnknownParameter {
        name: name.to_string(),
        valid: NUMERIC_PARAMETERS.to_vec(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseKind {
    NoResponse,
    PrimaryExpansion,
    PrimaryContraction,
    SecondaryExpansion,
    SecondaryContraction,
}

impl PhaseKind {
    pub fn label(self) -> &'static str {
        match self {
            PhaseKind::NoResponse => "NoResponse",
            PhaseKind::PrimaryExpansion => "PrimaryExpansion",
            PhaseKind::PrimaryContraction => "PrimaryContraction",
            PhaseKind::SecondaryExpansion => "SecondaryExpansion",
            PhaseKind::SecondaryContraction => "SecondaryContraction",
        }
    }

    pub fn is_expansion(self) -> bool {
        matches!(self, PhaseKind::PrimaryExpansion | PhaseKind::SecondaryExpansion)
    }

    pub fn is_contraction(self) -> bool {
        matches!(self, PhaseKind::PrimaryContraction | PhaseKind::SecondaryContraction)
    }

    pub fn is_primary(self) -> bool {
        matches!(self, PhaseKind::PrimaryExpansion | PhaseKind::PrimaryContraction)
    }
}

/// Immune-response state. Carrying the clone inside the variant makes
/// "a clone is engaged iff a response is active" hold by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimePhase {
    NoResponse,
    PrimaryExpansion { clone: usize },
    PrimaryContraction { clone: usize },
    SecondaryExpansion { clone: usize },
    SecondaryContraction { clone: usize },
}

impl RegimePhase {
    pub fn kind(self) -> PhaseKind {
        match self {
            RegimePhase::NoResponse => PhaseKind::NoResponse,
            RegimePhase::PrimaryExpansion { .. } => PhaseKind::PrimaryExpansion,
            RegimePhase::PrimaryContraction { .. } => PhaseKind::PrimaryContraction,
            RegimePhase::SecondaryExpansion { .. } => PhaseKind::SecondaryExpansion,
            RegimePhase::SecondaryContraction { .. } => PhaseKind::SecondaryContraction,
        }
    }

    pub fn active_clone(self) -> Option<usize> {
        match self {
            RegimePhase::NoResponse => None,
            RegimePhase::PrimaryExpansion { clone }
            | RegimePhase::PrimaryContraction { clone }
            | RegimePhase::SecondaryExpansion { clone }
            | RegimePhase::SecondaryContraction { clone } => Some(clone),
        }
    }

    /// The contraction that follows this expansion; other phases are returned as is.
    pub fn contracted(self) -> RegimePhase {
        match self {
            RegimePhase::PrimaryExpansion { clone } => RegimePhase::PrimaryContraction { clone },
            RegimePhase::SecondaryExpansion { clone } => RegimePhase::SecondaryContraction { clone },
            other => other,
        }
    }

    pub fn label(self) -> &'static str {
        self.kind().label()
    }
}

/// The three stocks of one compartment.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stocks {
    pub p: f64,
    pub r: f64,
    pub q: f64,
}

impl Stocks {
    pub fn new(p: f64, r: f64, q: f64) -> Self {
        Self { p, r, q }
    }

    pub fn total(&self) -> f64 {
        self.p + self.r + self.q
    }
}

/// Stocks plus regime and clock. `compartments[0]` is the nonspecific pool;
/// `compartments[i]` for `i >= 1` is clone `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub compartments: Vec<Stocks>,
    pub phase: RegimePhase,
    /// `primed[i]` is set once clone `i` has completed a primary expansion.
    pub primed: Vec<bool>,
    /// Response onsets so far.
    pub responses: u64,
}

impl SystemState {
    pub fn initial(params: &ScenarioParameters) -> Self {
        let mut compartments = vec![Stocks::default(); params.n_clones + 1];
        compartments[0] = Stocks::new(params.p0, params.r0, params.q0_cells);
        Self {
            t: 0.0,
            compartments,
            phase: RegimePhase::NoResponse,
            primed: vec![false; params.n_clones + 1],
            responses: 0,
        }
    }

    pub fn n_clones(&self) -> usize {
        self.compartments.len() - 1
    }

    pub fn totals(&self) -> Stocks {
        self.compartments.iter().fold(Stocks::default(), |acc, s| {
            Stocks::new(acc.p + s.p, acc.r + s.r, acc.q + s.q)
        })
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self
                .compartments
                .iter()
                .all(|s| s.p.is_finite() && s.r.is_finite() && s.q.is_finite())
    }
}

/// Per-phase rates; each is either 0 or the matching scenario parameter.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EffectiveCoefficients {
    pub b: f64,
    pub f: f64,
    pub m: f64,
    pub c: f64,
    pub d_r: f64,
    pub d_q: f64,
}

pub fn regime_coefficients(phase: RegimePhase, params: &ScenarioParameters) -> EffectiveCoefficients {
    let zero = EffectiveCoefficients::default();
    match phase.kind() {
        PhaseKind::NoResponse => zero,
        PhaseKind::PrimaryExpansion => EffectiveCoefficients {
            b: params.b,
            m: params.m,
            ..zero
        },
        PhaseKind::SecondaryExpansion => EffectiveCoefficients {
            b: params.b,
            f: params.f,
            m: params.m,
            ..zero
        },
        PhaseKind::PrimaryContraction | PhaseKind::SecondaryContraction => EffectiveCoefficients {
            c: params.c,
            d_r: params.d_r,
            d_q: params.d_q,
            ..zero
        },
    }
}

/// Time derivative of every stock, laid out like `state.compartments`.
///
/// Only the nonspecific precursor pool and the engaged clone move. The
/// engaged clone's recruits come from `piN * P_0`; the naive pool is shared
/// so its drain does not depend on whether the response is primary or
/// secondary.
pub fn derivatives(
    state: &SystemState,
    coeffs: &EffectiveCoefficients,
    params: &ScenarioParameters,
) -> Vec<Stocks> {
    let mut out = vec![Stocks::default(); state.compartments.len()];
    derivatives_into(state.t, &state.compartments, state.phase, coeffs, params, &mut out);
    out
}

pub(crate) fn derivatives_into(
    t: f64,
    stocks: &[Stocks],
    phase: RegimePhase,
    coeffs: &EffectiveCoefficients,
    params: &ScenarioParameters,
    out: &mut [Stocks],
) {
    out.iter_mut().for_each(|d| *d = Stocks::default());
    let naive = stocks[0].p;
    let recruitment = coeffs.m * params.pi_n * naive;
    out[0].p = params.thymic_input(t) - recruitment;

    let Some(s) = phase.active_clone() else {
        return;
    };
    let clone = stocks[s];
    out[s].r = recruitment + coeffs.b * clone.r + coeffs.f * clone.q
        - coeffs.c * clone.r
        - coeffs.d_r * clone.r;
    out[s].q = coeffs.c * clone.r - coeffs.f * clone.q - coeffs.d_q * clone.q;

    if params.global_quiescent_decay && phase.kind().is_contraction() {
        let n = stocks.len();
        for i in (1..n).filter(|&i| i != s) {
            out[i].q = -coeffs.d_q * stocks[i].q;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn zero_params() -> ScenarioParameters {
        ScenarioParameters {
            b: 0.0,
            f: 0.0,
            c: 0.0,
            d_r: 0.0,
            d_q: 0.0,
            m: 0.0,
            sigma0: 0.0,
            ..Default::default()
        }
    }

    fn state_with(params: &ScenarioParameters, phase: RegimePhase, nonspecific: Stocks, clone: Stocks) -> SystemState {
        let mut s = SystemState::initial(params);
        s.compartments[0] = nonspecific;
        s.compartments[1] = clone;
        s.phase = phase;
        s
    }

    #[test]
    fn defaults_are_valid() {
        ScenarioParameters::default().validate().unwrap();
    }

    #[test]
    fn primary_contraction_disables_proliferation() {
        let p = ScenarioParameters::default();
        let k = regime_coefficients(RegimePhase::PrimaryContraction { clone: 1 }, &p);
        assert_eq!(k.b, 0.0);
        assert_eq!(k.m, 0.0);
        assert_eq!(k.c, p.c);
        assert_eq!(k.d_r, p.d_r);
        assert_eq!(k.d_q, p.d_q);
        assert!(k.c > 0.0 && k.d_r > 0.0 && k.d_q > 0.0);
    }

    #[test]
    fn no_response_has_no_rates() {
        let k = regime_coefficients(RegimePhase::NoResponse, &ScenarioParameters::default());
        assert_eq!(k, EffectiveCoefficients::default());
    }

    #[test]
    fn secondary_expansion_applies_b_and_f() {
        let p = ScenarioParameters { f: 0.3, ..Default::default() };
        let k = regime_coefficients(RegimePhase::SecondaryExpansion { clone: 1 }, &p);
        assert_eq!(k.f, 0.3);
        assert_eq!(k.b, p.b);
        assert_eq!(k.m, p.m);
        assert_eq!((k.c, k.d_r, k.d_q), (0.0, 0.0, 0.0));
    }

    #[test]
    fn primary_expansion_has_no_reactivation() {
        let p = ScenarioParameters::default();
        let k = regime_coefficients(RegimePhase::PrimaryExpansion { clone: 1 }, &p);
        assert_eq!(k, EffectiveCoefficients { b: p.b, m: p.m, ..Default::default() });
    }

    #[test]
    fn no_flows_no_change() {
        let p = zero_params();
        let st = state_with(&p, RegimePhase::PrimaryExpansion { clone: 1 }, Stocks::new(100.0, 3.0, 4.0), Stocks::new(0.0, 5.0, 6.0));
        let k = regime_coefficients(st.phase, &p);
        for d in derivatives(&st, &k, &p) {
            assert_eq!(d, Stocks::default());
        }
    }

    #[test]
    fn maturation_moves_precursors_into_clone() {
        let p = ScenarioParameters { pi_n: 1.0, ..zero_params() };
        let st = state_with(&p, RegimePhase::PrimaryExpansion { clone: 1 }, Stocks::new(100.0, 0.0, 0.0), Stocks::default());
        let k = EffectiveCoefficients { m: 0.1, ..Default::default() };
        let d = derivatives(&st, &k, &p);
        assert_relative_eq!(d[0].p, -10.0, epsilon = 1e-12);
        assert_relative_eq!(d[1].r, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn contraction_hand_evaluation() {
        let p = ScenarioParameters { c: 0.2, d_r: 0.1, ..zero_params() };
        let phase = RegimePhase::PrimaryContraction { clone: 1 };
        let st = state_with(&p, phase, Stocks::default(), Stocks::new(0.0, 50.0, 0.0));
        let d = derivatives(&st, &regime_coefficients(phase, &p), &p);
        assert_relative_eq!(d[1].r, -15.0, epsilon = 1e-12);
        assert_relative_eq!(d[1].q, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn idle_clones_frozen_unless_global_decay() {
        let mut p = ScenarioParameters { n_clones: 2, ..Default::default() };
        let phase = RegimePhase::PrimaryContraction { clone: 1 };
        let mut st = SystemState::initial(&p);
        st.phase = phase;
        st.compartments[2] = Stocks::new(0.0, 0.0, 40.0);
        let k = regime_coefficients(phase, &p);
        assert_eq!(derivatives(&st, &k, &p)[2], Stocks::default());
        p.global_quiescent_decay = true;
        assert_relative_eq!(derivatives(&st, &k, &p)[2].q, -p.d_q * 40.0);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let bad = [
            ScenarioParameters { pi_n: 1.5, ..Default::default() },
            ScenarioParameters { c: -1.0, ..Default::default() },
            ScenarioParameters { step_days: 0.0, ..Default::default() },
            ScenarioParameters { expansion_duration: 200.0, ..Default::default() },
            ScenarioParameters { n_clones: 0, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn named_access_round_trips() {
        let mut p = ScenarioParameters::default();
        for name in NUMERIC_PARAMETERS {
            let v = p.get(name).unwrap();
            p.set(name, v).unwrap();
        }
        assert_eq!(p, ScenarioParameters::default());
        p.set("dR", 0.7).unwrap();
        assert_eq!(p.d_r, 0.7);
        let err = p.set("bogus", 1.0).unwrap_err();
        assert!(err.to_string().contains("sigma0"));
    }

    #[test]
    fn probability_schedule_is_clamped() {
        let p = ScenarioParameters { q0: 2.0, lambda_q: 0.01, ..Default::default() };
        assert_eq!(p.primary_probability(0.0), 1.0);
        assert!(p.primary_probability(1e6) >= 0.0);
    }

    #[test]
    fn fingerprint_tracks_parameters() {
        let a = ScenarioParameters::default();
        let b = ScenarioParameters { m: 0.51, ..Default::default() };
        assert_eq!(a.fingerprint(), ScenarioParameters::default().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}

//! Fixed-step classical Runge-Kutta integration of the stock equations.

use crate::model::{derivatives_into, EffectiveCoefficients, ScenarioParameters, Stocks, SystemState};

use super::EngineError;

/// Reusable stage buffers so the hot loop does not allocate.
#[derive(Debug, Default)]
pub struct Rk4Workspace {
    k1: Vec<Stocks>,
    k2: Vec<Stocks>,
    k3: Vec<Stocks>,
    k4: Vec<Stocks>,
    tmp: Vec<Stocks>,
}

impl Rk4Workspace {
    fn resize(&mut self, n: usize) {
        for buf in [&mut self.k1, &mut self.k2, &mut self.k3, &mut self.k4, &mut self.tmp] {
            buf.resize(n, Stocks::default());
        }
    }
}

/// Result of one step: negative stocks clamped to zero this step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepReport {
    pub clamped: u64,
}

/// Advance `state` by `h` days with classical RK4, holding `coeffs` fixed.
///
/// Callers must not place an event strictly inside `(t, t + h)`. Stocks that
/// undershoot zero are clamped and counted.
pub fn advance_step(
    state: &SystemState,
    coeffs: &EffectiveCoefficients,
    h: f64,
    params: &ScenarioParameters,
) -> Result<(SystemState, StepReport), EngineError> {
    let mut next = state.clone();
    let mut ws = Rk4Workspace::default();
    let report = advance_in_place(&mut next, coeffs, h, params, &mut ws)?;
    Ok((next, report))
}

pub(crate) fn advance_in_place(
    state: &mut SystemState,
    coeffs: &EffectiveCoefficients,
    h: f64,
    params: &ScenarioParameters,
    ws: &mut Rk4Workspace,
) -> Result<StepReport, EngineError> {
    let n = state.compartments.len();
    ws.resize(n);
    let t = state.t;
    let phase = state.phase;
    let y = &state.compartments;

    derivatives_into(t, y, phase, coeffs, params, &mut ws.k1);
    axpy(&mut ws.tmp, y, &ws.k1, 0.5 * h);
    derivatives_into(t + 0.5 * h, &ws.tmp, phase, coeffs, params, &mut ws.k2);
    axpy(&mut ws.tmp, y, &ws.k2, 0.5 * h);
    derivatives_into(t + 0.5 * h, &ws.tmp, phase, coeffs, params, &mut ws.k3);
    axpy(&mut ws.tmp, y, &ws.k3, h);
    derivatives_into(t + h, &ws.tmp, phase, coeffs, params, &mut ws.k4);

    let mut report = StepReport::default();
    let w = h / 6.0;
    for i in 0..n {
        let (a, b, c, d) = (ws.k1[i], ws.k2[i], ws.k3[i], ws.k4[i]);
        let s = &mut state.compartments[i];
        s.p += w * (a.p + 2.0 * b.p + 2.0 * c.p + d.p);
        s.r += w * (a.r + 2.0 * b.r + 2.0 * c.r + d.r);
        s.q += w * (a.q + 2.0 * b.q + 2.0 * c.q + d.q);
        for v in [&mut s.p, &mut s.r, &mut s.q] {
            if *v < 0.0 {
                *v = 0.0;
                report.clamped += 1;
            }
        }
    }
    state.t = t + h;

    if !state.is_finite() {
        return Err(EngineError::NonFinite {
            t,
            snapshot: state.compartments.clone(),
        });
    }
    Ok(report)
}

fn axpy(out: &mut [Stocks], y: &[Stocks], k: &[Stocks], scale: f64) {
    for ((o, y), k) in out.iter_mut().zip(y).zip(k) {
        *o = Stocks::new(y.p + scale * k.p, y.r + scale * k.r, y.q + scale * k.q);
    }
}

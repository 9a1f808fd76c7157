//! Embedded Dormand–Prince 5(4) integrator with PI step-size control.
//!
//! The driver lands exactly on requested output times by clipping steps, so
//! no dense-output interpolation error enters the samples.

use std::ops::ControlFlow;

/// How the local error of a component is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorScale {
    /// `atol + rtol * |y|`.
    Mixed,
    /// The component is the logarithm of a positive quantity; `rtol` is the
    /// relative tolerance on that quantity, i.e. an absolute tolerance on the log.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub scale: ErrorScale,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-10,
            atol: 1e-12,
            scale: ErrorScale::Mixed,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// b - b* for the error estimate.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Why [`integrate`] returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Finish {
    /// Reached `t_end`.
    Completed,
    /// The observer asked to stop.
    Stopped,
    /// Step size fell below `h_min` at the given time.
    StepUnderflow(f64),
    /// `max_steps` accepted or rejected steps were spent.
    StepBudget(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// What the observer sees after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// An ordinary accepted step.
    Step,
    /// The step landed on one of the requested output times.
    Output,
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

fn all_finite<const D: usize>(y: &[f64; D]) -> bool {
    y.iter().all(|x| x.is_finite())
}

/// Initial step guess (Hairer, Nørsett & Wanner, II.4).
fn initial_step<const D: usize, F>(f: &mut F, t: f64, y: &[f64; D], f0: &[f64; D], ctl: &StepControl, dir: f64) -> f64
where
    F: FnMut(f64, &[f64; D]) -> Option<[f64; D]>,
{
    let sc = |i: usize| scale_of(ctl, y[i], y[i]);
    let d0 = (0..D).map(|i| (y[i] / sc(i)).powi(2)).sum::<f64>().sqrt() / (D as f64).sqrt();
    let d1 = (0..D).map(|i| (f0[i] / sc(i)).powi(2)).sum::<f64>().sqrt() / (D as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(ctl.h_max);
    let y1 = axpy(y, dir * h0, &[(1.0, f0)]);
    let d2 = match f(t + dir * h0, &y1) {
        Some(f1) => {
            (0..D).map(|i| ((f1[i] - f0[i]) / sc(i)).powi(2)).sum::<f64>().sqrt() / (D as f64).sqrt() / h0
        }
        None => return h0 * 1e-3,
    };
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(ctl.h_max)
}

fn scale_of(ctl: &StepControl, y0: f64, y1: f64) -> f64 {
    match ctl.scale {
        ErrorScale::Mixed => ctl.atol + ctl.rtol * y0.abs().max(y1.abs()),
        ErrorScale::Log => ctl.atol + ctl.rtol,
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// `f` returns `None` when the state is outside its domain; the step is then
/// rejected and retried with a smaller size. `outputs` must be sorted in the
/// direction of integration; every output time inside the span is hit
/// exactly and reported as [`Event::Output`]. The observer may stop the
/// integration by returning `ControlFlow::Break`.
pub fn integrate<const D: usize, F, O>(
    mut f: F,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    outputs: &[f64],
    ctl: &StepControl,
    mut observer: O,
) -> (Finish, f64, [f64; D], Stats)
where
    F: FnMut(f64, &[f64; D]) -> Option<[f64; D]>,
    O: FnMut(Event, f64, &[f64; D]) -> ControlFlow<()>,
{
    let mut stats = Stats::default();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let Some(mut k1) = f(t, &y) else {
        return (Finish::StepUnderflow(t), t, y, stats);
    };
    stats.evaluations += 1;
    if t0 == t_end {
        return (Finish::Completed, t, y, stats);
    }

    let mut out_idx = outputs
        .iter()
        .position(|&to| (to - t0) * dir > 0.0)
        .unwrap_or(outputs.len());

    let mut h = initial_step(&mut f, t, &y, &k1, ctl, dir);
    stats.evaluations += 1;
    let mut err_prev: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= ctl.max_steps {
            return (Finish::StepBudget(t), t, y, stats);
        }
        if h < ctl.h_min * t.abs().max(1.0) {
            return (Finish::StepUnderflow(t), t, y, stats);
        }

        // Clip to the next output time or the end of the span.
        let mut target = t_end;
        let mut hits_output = false;
        if out_idx < outputs.len() && (outputs[out_idx] - t_end) * dir < 0.0 {
            target = outputs[out_idx];
            hits_output = true;
        }
        let remaining = (target - t) * dir;
        let (h_try, lands) = if h >= remaining * (1.0 - 1e-12) {
            (remaining, true)
        } else if h > 0.5 * remaining {
            (0.5 * remaining, false)
        } else {
            (h, false)
        };
        let hs = dir * h_try;

        let trial = (|| {
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]))?;
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = f(
                t + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = f(
                t + hs,
                &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            )?;
            let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            if !all_finite(&y_new) {
                return None;
            }
            let k7 = f(t + hs, &y_new)?;
            let mut err = 0.0;
            for i in 0..D {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = scale_of(ctl, y[i], y_new[i]);
                err += (e / sc).powi(2);
            }
            Some((y_new, k7, (err / D as f64).sqrt()))
        })();
        stats.evaluations += 6;

        let Some((y_new, k7, err)) = trial.filter(|(_, _, e)| e.is_finite()) else {
            stats.rejected += 1;
            h = 0.25 * h_try;
            last_rejected = true;
            continue;
        };

        if err <= 1.0 {
            stats.accepted += 1;
            t = if lands { target } else { t + hs };
            y = y_new;
            k1 = k7;
            let event = if lands && hits_output {
                out_idx += 1;
                Event::Output
            } else {
                Event::Step
            };
            if observer(event, t, &y).is_break() {
                return (Finish::Stopped, t, y, stats);
            }
            if lands && !hits_output {
                return (Finish::Completed, t, y, stats);
            }
            // PI controller (Gustafsson), exponents 0.7/5 and 0.4/5.
            let err_c = err.max(1e-10);
            let mut fac = 0.9 * err_c.powf(-0.14) * err_prev.powf(0.08);
            fac = fac.clamp(0.2, 5.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_prev = err_c;
            // Keep the unclipped proposal when an output forced a short step.
            h = (if lands { h.max(h_try) } else { h_try } * fac).min(ctl.h_max);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h = h_try * fac;
            last_rejected = true;
        }
    }
}

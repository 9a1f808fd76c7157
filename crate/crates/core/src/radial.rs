//! Radial integration of the singular system from the origin.
//!
//! The state is `(u, z, v, s)` with `z = (u')^{p-1-α}` and `s = (v')^{p-1}`.
//! Internally the integrator advances the logarithms of these four
//! quantities in `t = ln r`; in those variables the right-hand side is
//!
//! ```text
//! d ln u / dt = X,   d ln z / dt = (p-1-α)/(p-1) Z - γ,
//! d ln v / dt = Y,   d ln s / dt = W - (N-1),
//! ```
//!
//! where `(X, Y, Z, W)` are the scale-invariant coordinates of
//! [`crate::flow`]. It is smooth as `r -> 0` and grows linearly in `t` for
//! global solutions.

use std::io::Write;
use std::ops::ControlFlow;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{derive, DerivedConstants, RegimeTag, SystemParams};
use crate::rk::{self, ErrorScale, Event, Finish, StepControl};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialState {
    pub r: f64,
    pub u: f64,
    /// `(u')^{p-1-α}`
    pub z: f64,
    pub v: f64,
    /// `(v')^{p-1}`
    pub s: f64,
}

impl RadialState {
    pub fn uprime(&self, params: &SystemParams) -> f64 {
        self.z.powf(1.0 / params.k())
    }

    pub fn vprime(&self, params: &SystemParams) -> f64 {
        self.s.powf(1.0 / (params.p() - 1.0))
    }

    fn to_log(self) -> (f64, [f64; 4]) {
        (self.r.ln(), [self.u.ln(), self.z.ln(), self.v.ln(), self.s.ln()])
    }

    fn from_log(r: f64, y: &[f64; 4]) -> Self {
        RadialState {
            r,
            u: y[0].exp(),
            z: y[1].exp(),
            v: y[2].exp(),
            s: y[3].exp(),
        }
    }

    fn is_positive(&self) -> bool {
        [self.r, self.u, self.z, self.v, self.s]
            .iter()
            .all(|x| x.is_finite() && *x > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    ReachedRMax,
    BlowUp,
    StepUnderflow,
    MonitorViolation,
}

/// Which inequality of the a-priori estimates a state violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Monitor {
    /// `(N + α/(p-1-α)) z < r v^m`
    L01,
    /// `N s < r v^β z^{q/(p-1-α)}`
    L02,
    /// `(p-1-α)/(N(p-1-α)+α) v^m < z' < (p-1-α)/(p-1) v^m`
    L1,
    /// `v^β z^{q/(p-1-α)} / N <= s' <= v^β z^{q/(p-1-α)}`
    L2,
}

impl Monitor {
    pub fn name(&self) -> &'static str {
        match self {
            Monitor::L01 => "l01",
            Monitor::L02 => "l02",
            Monitor::L1 => "l1",
            Monitor::L2 => "l2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorRecord {
    pub monitor: Monitor,
    pub r: f64,
    /// Signed relative margin; negative beyond `-slack` is a violation.
    pub margin: f64,
}

/// Output radii of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleGrid {
    /// Radii `10^(i/per_decade)` inside `(r0, r_max)`, plus both ends.
    LogUniform { per_decade: usize },
    /// Explicit radii; those outside `(r0, r_max]` are ignored.
    Radii(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationConfig {
    pub r0: f64,
    pub r_max: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Blow-up is declared once `max(v, z)` reaches this value.
    pub blowup_cap: f64,
    pub grid: SampleGrid,
    /// Relative slack of the a-priori inequality monitors.
    pub monitor_slack: f64,
    pub abort_on_monitor: bool,
    pub max_steps: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        IntegrationConfig {
            r0: 1e-6,
            r_max: 1e6,
            rtol: 1e-10,
            atol: 1e-12,
            blowup_cap: 1e10,
            grid: SampleGrid::LogUniform { per_decade: 100 },
            monitor_slack: 1e-9,
            abort_on_monitor: true,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialTrajectory {
    pub params: SystemParams,
    /// Center values `(u(0), v(0))`.
    pub initial: (f64, f64),
    /// States at the requested output radii, starting with the seed at `r0`.
    pub samples: Vec<RadialState>,
    /// Every accepted integration step, starting with the seed.
    pub steps: Vec<RadialState>,
    pub stop: StopReason,
    pub r_est: Option<f64>,
    pub monitors: Vec<MonitorRecord>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl RadialTrajectory {
    pub fn last(&self) -> &RadialState {
        self.steps.last().expect("trajectory holds at least the seed")
    }

    /// Converts failure stops into the corresponding error.
    pub fn into_result(self) -> Result<Self> {
        match self.stop {
            StopReason::StepUnderflow => Err(Error::StepUnderflow { r: self.last().r }),
            StopReason::MonitorViolation => {
                let rec = self
                    .monitors
                    .iter()
                    .find(|m| m.margin < 0.0)
                    .copied()
                    .expect("violation recorded");
                Err(Error::MonitorViolation {
                    monitor: rec.monitor.name(),
                    r: rec.r,
                    margin: rec.margin,
                })
            }
            _ => Ok(self),
        }
    }

    /// Writes `r,u,uprime,v,vprime,z,s`, one row per sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,u,uprime,v,vprime,z,s")?;
        for st in &self.samples {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                st.r,
                st.u,
                st.uprime(&self.params),
                st.v,
                st.vprime(&self.params),
                st.z,
                st.s
            )?;
        }
        Ok(())
    }
}

fn require_alpha(params: &SystemParams) -> Result<()> {
    if params.alpha_below_threshold() {
        Ok(())
    } else {
        Err(Error::DegenerateAlpha)
    }
}

/// Leading-order state at `r0` for center values `(a, b)`.
///
/// `z` and `s` come from integrating the radial equations with `v` frozen at
/// `b`; `u` and `v` carry the matching leading increments
/// `r0 u'(r0) k/(k+1)` and `r0 v'(r0)/(1+e)`, where `u' ~ r^{1/k}` and
/// `v' ~ r^e` near the origin.
pub fn seed_near_origin(params: &SystemParams, a: f64, b: f64, r0: f64) -> Result<RadialState> {
    Ok(RadialState::from_log(r0, &seed_log(params, a, b, r0)?))
}

/// [`seed_near_origin`] as `(ln u, ln z, ln v, ln s)`; `s(r0)` can lie far
/// below the smallest positive double when `q/(p-1-α)` is large.
fn seed_log(params: &SystemParams, a: f64, b: f64, r0: f64) -> Result<[f64; 4]> {
    require_alpha(params)?;
    if !(a > 0.0 && b > 0.0 && r0 > 0.0) {
        return Err(Error::NonPositiveState(format!(
            "seed requires a, b, r0 > 0 (a={a}, b={b}, r0={r0})"
        )));
    }
    let (n, p, m, q, beta) = (params.nf(), params.p(), params.m(), params.q(), params.beta());
    let k = params.k();
    let (la, lb, lr) = (a.ln(), b.ln(), r0.ln());
    let lz = (k / ((n - 1.0) * k + p - 1.0)).ln() + m * lb + lr;
    let lw = lz / k;
    let ls = beta * lb + q * lw + lr - (n + q / k).ln();
    let lvp = ls / (p - 1.0);
    let e = (1.0 + q / k) / (p - 1.0);
    let lu = la + ((lr + lw - la).exp() * k / (k + 1.0)).ln_1p();
    let lv = lb + ((lr + lvp - lb).exp() / (1.0 + e)).ln_1p();
    Ok([lu, lz, lv, ls])
}

/// `d/dr` of `(u, z, v, s)`.
pub fn rhs(state: &RadialState, params: &SystemParams) -> Result<[f64; 4]> {
    require_alpha(params)?;
    if !state.is_positive() {
        return Err(Error::NonPositiveState(format!("{state:?}")));
    }
    let RadialState { r, z, v, s, .. } = *state;
    let (n, p, m, q, beta) = (params.nf(), params.p(), params.m(), params.q(), params.beta());
    let k = params.k();
    let gamma = (n - 1.0) * k / (p - 1.0);
    Ok([
        z.powf(1.0 / k),
        k / (p - 1.0) * v.powf(m) - gamma * z / r,
        s.powf(1.0 / (p - 1.0)),
        v.powf(beta) * z.powf(q / k) - (n - 1.0) * s / r,
    ])
}

/// Scale-invariant coordinates `(X, Y, Z, W)` of a log-state at `t = ln r`.
pub(crate) fn flow_coordinates_log(params: &SystemParams, t: f64, y: &[f64; 4]) -> [f64; 4] {
    let (p, m, q, beta) = (params.p(), params.m(), params.q(), params.beta());
    let k = params.k();
    let [lu, lz, lv, ls] = *y;
    [
        (t + lz / k - lu).exp(),
        (t + ls / (p - 1.0) - lv).exp(),
        (t + m * lv - lz).exp(),
        (t + beta * lv + q / k * lz - ls).exp(),
    ]
}

fn log_rhs(params: &SystemParams, t: f64, y: &[f64; 4]) -> Option<[f64; 4]> {
    let n = params.nf();
    let p = params.p();
    let k = params.k();
    let gamma = (n - 1.0) * k / (p - 1.0);
    let [x, yy, zz, ww] = flow_coordinates_log(params, t, y);
    let d = [x, k / (p - 1.0) * zz - gamma, yy, ww - (n - 1.0)];
    d.iter().all(|v| v.is_finite()).then_some(d)
}

/// Relative margins of the a-priori inequalities at a state given by its
/// flow coordinates `Z` and `W`. A negative margin is a violation.
pub(crate) fn monitor_margins(params: &SystemParams, zz: f64, ww: f64) -> [(Monitor, f64); 4] {
    let n = params.nf();
    let p = params.p();
    let alpha = params.alpha();
    let k = params.k();
    let gamma = (n - 1.0) * k / (p - 1.0);
    // z'/v^m and s'/(v^β z^{q/k}) in flow coordinates.
    let zprime_ratio = k / (p - 1.0) - gamma / zz;
    let sprime_ratio = 1.0 - (n - 1.0) / ww;
    let l1_lower = zprime_ratio / (k / (n * k + alpha)) - 1.0;
    let l1_upper = (gamma / zz) * (p - 1.0) / k;
    let l2_lower = sprime_ratio * n - 1.0;
    let l2_upper = (n - 1.0) / ww;
    [
        (Monitor::L01, zz / (n + alpha / k) - 1.0),
        (Monitor::L02, ww / n - 1.0),
        (Monitor::L1, l1_lower.min(l1_upper)),
        (Monitor::L2, l2_lower.min(l2_upper)),
    ]
}

/// Evaluates the four monitors on a physical state.
pub fn check_monitors(state: &RadialState, params: &SystemParams) -> Result<[(Monitor, f64); 4]> {
    require_alpha(params)?;
    if !state.is_positive() {
        return Err(Error::NonPositiveState(format!("{state:?}")));
    }
    let (t, y) = state.to_log();
    let [_, _, zz, ww] = flow_coordinates_log(params, t, &y);
    Ok(monitor_margins(params, zz, ww))
}

fn output_radii(config: &IntegrationConfig) -> Vec<f64> {
    let (r0, r_max) = (config.r0, config.r_max);
    let mut radii: Vec<f64> = match &config.grid {
        SampleGrid::LogUniform { per_decade } => {
            let pd = (*per_decade).max(1) as f64;
            let lo = (r0.log10() * pd).floor() as i64;
            let hi = (r_max.log10() * pd).ceil() as i64;
            (lo..=hi)
                .map(|i| 10f64.powf(i as f64 / pd))
                .filter(|&r| r > r0 * (1.0 + 1e-12) && r < r_max * (1.0 - 1e-12))
                .chain(std::iter::once(r_max))
                .collect()
        }
        SampleGrid::Radii(rs) => rs.iter().copied().filter(|&r| r > r0 && r <= r_max).collect(),
    };
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    radii
}

/// Integrates from the seed at `config.r0` and always returns the
/// trajectory; failure modes are reported in [`RadialTrajectory::stop`].
pub fn integrate_trajectory(
    params: &SystemParams,
    a: f64,
    b: f64,
    config: &IntegrationConfig,
) -> Result<RadialTrajectory> {
    require_alpha(params)?;
    if !(config.r0 > 0.0 && config.r_max > config.r0) {
        return Err(Error::Config(format!(
            "need 0 < r0 < r_max (r0={}, r_max={})",
            config.r0, config.r_max
        )));
    }
    if !(config.blowup_cap > 1.0) {
        return Err(Error::Config("blow-up cap must exceed 1".into()));
    }
    let y0 = seed_log(params, a, b, config.r0)?;
    let seed = RadialState::from_log(config.r0, &y0);
    let derived = derive(params);
    // Global solutions exist only for δ > 0 and then grow polynomially past
    // any fixed cap, so the cap is enforced only when δ < 0.
    let cap_active = derived.delta < 0.0;
    let log_cap = config.blowup_cap.ln();

    let radii = output_radii(config);
    let outputs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let t0 = config.r0.ln();
    let t_end = config.r_max.ln();

    let ctl = StepControl {
        rtol: config.rtol,
        atol: config.atol,
        scale: ErrorScale::Log,
        h_min: 1e-15,
        h_max: 0.25,
        max_steps: config.max_steps,
    };

    let mut samples = vec![seed];
    let mut steps = vec![seed];
    let mut monitors = Vec::new();
    let mut out_i = 0usize;
    let mut stop = None;

    let (finish, t_last, y_last, stats) = rk::integrate(
        |t, y| log_rhs(params, t, y),
        t0,
        y0,
        t_end,
        &outputs,
        &ctl,
        |event, t, y| {
            let r = match event {
                Event::Output => {
                    let r = radii[out_i];
                    out_i += 1;
                    r
                }
                Event::Step if t == t_end => config.r_max,
                Event::Step => t.exp(),
            };
            let state = RadialState::from_log(r, y);
            steps.push(state);
            if event == Event::Output {
                samples.push(state);
            }
            let [_, _, zz, ww] = flow_coordinates_log(params, t, y);
            for (monitor, margin) in monitor_margins(params, zz, ww) {
                if margin < -config.monitor_slack {
                    monitors.push(MonitorRecord { monitor, r, margin });
                    if config.abort_on_monitor {
                        stop = Some(StopReason::MonitorViolation);
                        return ControlFlow::Break(());
                    }
                }
            }
            if cap_active && (y[1].max(y[2]) >= log_cap || max_log_rate(params, t, y) >= BLOWUP_LOG_RATE) {
                stop = Some(StopReason::BlowUp);
                return ControlFlow::Break(());
            }
            ControlFlow::Continue(())
        },
    );

    let stop = match (stop, finish) {
        (Some(s), _) => s,
        (None, Finish::Completed) => StopReason::ReachedRMax,
        (None, _) => StopReason::StepUnderflow,
    };
    if stop == StopReason::ReachedRMax && samples.last().map(|s| s.r) != Some(config.r_max) {
        samples.push(RadialState::from_log(config.r_max, &y_last));
    }

    let mut traj = RadialTrajectory {
        params: *params,
        initial: (a, b),
        samples,
        steps,
        stop,
        r_est: None,
        monitors,
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
    };
    if stop == StopReason::BlowUp {
        let last_r = traj.last().r;
        // The profile fit follows z, which stays bounded when only v blows up.
        let fitted = (derived.regime == RegimeTag::BothBlowup)
            .then(|| estimate_blowup(&traj, &derived).ok())
            .flatten()
            .map(|fit| fit.r_est)
            .filter(|&r| r > last_r);
        traj.r_est = Some(fitted.unwrap_or_else(|| local_blowup_radius(params, &derived, t_last, &y_last)));
    }
    Ok(traj)
}

/// Integrates and turns step underflow or a monitor violation into an error.
pub fn integrate(params: &SystemParams, a: f64, b: f64, config: &IntegrationConfig) -> Result<RadialTrajectory> {
    integrate_trajectory(params, a, b, config)?.into_result()
}

/// Distance-to-singularity estimate from the local law `z' ≈ C z^σ`:
/// `R ≈ r + z / ((σ-1) z')`.
/// Largest `d ln(·)/d ln r` over `(u, z, v, s)`.
fn max_log_rate(params: &SystemParams, t: f64, y: &[f64; 4]) -> f64 {
    log_rhs(params, t, y).map_or(f64::INFINITY, |d| d.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Past this log-rate the singularity lies within about `1e-9 r`; slowly
/// blowing-up components cannot reach the cap before the step size underflows.
const BLOWUP_LOG_RATE: f64 = 1e9;

/// Distance to the singularity from the local growth rate. With
/// `z ~ (R-r)^{-1/(σ-1)}` when `z` blows up, otherwise from the fastest
/// component with unit exponent.
fn local_blowup_radius(params: &SystemParams, derived: &DerivedConstants, t: f64, y: &[f64; 4]) -> f64 {
    let r = t.exp();
    let dist = if derived.regime == RegimeTag::BothBlowup {
        let sigma = derived.sigma.unwrap_or(f64::NAN);
        let dlnz_dt = log_rhs(params, t, y).map_or(f64::NAN, |d| d[1]);
        r / ((sigma - 1.0) * dlnz_dt)
    } else {
        r / max_log_rate(params, t, y)
    };
    if dist.is_finite() && dist > 0.0 {
        r + dist
    } else {
        r * (1.0 + f64::EPSILON)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupFit {
    pub r_est: f64,
    /// Fitted slope of `ln u'` against `ln(R_est - r)`.
    pub rate_exponent: f64,
    /// Coefficient of determination of the linear fit of `z^{1-σ}/(σ-1)`.
    pub fit_quality: f64,
    pub window: (f64, f64),
    pub points: usize,
}

const MIN_FIT_POINTS: usize = 6;

/// Least-squares line `y = c0 + c1 x`; returns `(c0, c1, R²)`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let c1 = sxy / sxx;
    let c0 = my - c1 * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (c0, c1, r2)
}

/// Fits the blow-up law to samples `(r, z)` with `z -> ∞` as `r -> R`.
///
/// Uses the final decade of `y = z^{1-σ}/(σ-1)` (samples with
/// `y <= 10 y_last`), on which `y` is linear in `R - r`.
pub fn fit_blowup_profile(rs: &[f64], zs: &[f64], sigma: f64, k: f64) -> Result<BlowupFit> {
    if !(sigma > 1.0) {
        return Err(Error::RegimeMismatch(format!("blow-up fit needs sigma > 1 (got {sigma})")));
    }
    let ys: Vec<f64> = zs.iter().map(|z| z.powf(1.0 - sigma) / (sigma - 1.0)).collect();
    let Some(&y_last) = ys.last() else {
        return Err(Error::InsufficientSamples("empty trajectory".into()));
    };
    let start = ys
        .iter()
        .rposition(|&y| y > 10.0 * y_last)
        .map_or(0, |i| i + 1);
    let (xw, yw) = (&rs[start..], &ys[start..]);
    if xw.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientSamples(format!(
            "{} samples in the final decade, need {MIN_FIT_POINTS}",
            xw.len()
        )));
    }
    let (c0, c1, r2) = linear_fit(xw, yw);
    if !(c1 < 0.0) {
        return Err(Error::InsufficientSamples("profile is not decreasing".into()));
    }
    let r_est = -c0 / c1;

    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (&r, &z) in rs[start..].iter().zip(&zs[start..]) {
        if r_est > r {
            lx.push((r_est - r).ln());
            ly.push(z.powf(1.0 / k).ln());
        }
    }
    if lx.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientSamples("too few samples below the fitted radius".into()));
    }
    let (_, slope, _) = linear_fit(&lx, &ly);
    Ok(BlowupFit {
        r_est,
        rate_exponent: slope,
        fit_quality: r2,
        window: (xw[0], *xw.last().unwrap()),
        points: xw.len(),
    })
}

/// Blow-up radius and rate from a trajectory that stopped at the cap.
pub fn estimate_blowup(traj: &RadialTrajectory, derived: &DerivedConstants) -> Result<BlowupFit> {
    if traj.stop != StopReason::BlowUp {
        return Err(Error::RegimeMismatch(format!(
            "trajectory stopped with {:?}, not BlowUp",
            traj.stop
        )));
    }
    let sigma = derived
        .sigma
        .ok_or_else(|| Error::RegimeMismatch("sigma undefined".into()))?;
    let rs: Vec<f64> = traj.steps.iter().map(|s| s.r).collect();
    let zs: Vec<f64> = traj.steps.iter().map(|s| s.z).collect();
    fit_blowup_profile(&rs, &zs, sigma, traj.params.k())
}

/// Applies `u_λ(r) = λ^{ν_u} u(r/λ)`, `v_λ(r) = λ^{ν_v} v(r/λ)`.
pub fn scale_solution(traj: &RadialTrajectory, lambda: f64) -> RadialTrajectory {
    let params = &traj.params;
    let d = derive(params);
    let k = params.k();
    let pm1 = params.p() - 1.0;
    let su = lambda.powf(d.nu_u);
    let sv = lambda.powf(d.nu_v);
    let sz = lambda.powf((d.nu_u - 1.0) * k);
    let ss = lambda.powf((d.nu_v - 1.0) * pm1);
    let map = |st: &RadialState| RadialState {
        r: lambda * st.r,
        u: su * st.u,
        z: sz * st.z,
        v: sv * st.v,
        s: ss * st.s,
    };
    RadialTrajectory {
        params: *params,
        initial: (su * traj.initial.0, sv * traj.initial.1),
        samples: traj.samples.iter().map(map).collect(),
        steps: traj.steps.iter().map(map).collect(),
        stop: traj.stop,
        r_est: traj.r_est.map(|r| lambda * r),
        monitors: traj
            .monitors
            .iter()
            .map(|m| MonitorRecord { r: lambda * m.r, ..*m })
            .collect(),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
    }
}

/// Largest relative mismatch between consecutive samples and the exact flow
/// of the radial equations started at the earlier sample.
///
/// Small values mean the samples lie on a solution of the system; this is
/// the residual used to check rescaled trajectories.
pub fn solution_defect(params: &SystemParams, samples: &[RadialState], rtol: f64) -> Result<f64> {
    require_alpha(params)?;
    let ctl = StepControl {
        rtol,
        atol: rtol * 1e-2,
        scale: ErrorScale::Log,
        h_min: 1e-15,
        h_max: 0.25,
        max_steps: 200_000,
    };
    let mut worst: f64 = 0.0;
    for pair in samples.windows(2) {
        let (t0, y0) = pair[0].to_log();
        let (t1, y1) = pair[1].to_log();
        let (finish, _, y, _) = rk::integrate(
            |t, y| log_rhs(params, t, y),
            t0,
            y0,
            t1,
            &[],
            &ctl,
            |_, _, _| ControlFlow::Continue(()),
        );
        if finish != Finish::Completed {
            return Err(Error::StepUnderflow { r: pair[0].r });
        }
        for i in 0..4 {
            // Difference of logs is the relative error of the physical value.
            worst = worst.max((y[i] - y1[i]).abs());
        }
    }
    Ok(worst)
}

//! The autonomous cooperative system in `(Y, Z, W)`, its equilibria and
//! linearization, and the scale-invariant coordinates of radial solutions.
//!
//! With `t = ln r`,
//!
//! ```text
//! X = r u'/u,  Y = r v'/v,  Z = r v^m/(u')^{p-1-α},  W = r v^β (u')^q/(v')^{p-1}
//! ```

use std::io::Write;
use std::ops::ControlFlow;

use nalgebra::Matrix3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::radial::{flow_coordinates_log, RadialTrajectory};
use crate::rk::{self, ErrorScale, Event, Finish, StepControl};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowPoint {
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "W")]
    pub w: f64,
}

impl FlowPoint {
    pub fn new(y: f64, z: f64, w: f64) -> Self {
        FlowPoint { y, z, w }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.y, self.z, self.w]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        FlowPoint::new(a[0], a[1], a[2])
    }

    /// Componentwise `<=`.
    pub fn le(&self, other: &FlowPoint) -> bool {
        self.y <= other.y && self.z <= other.z && self.w <= other.w
    }

    /// Componentwise strict `<`.
    pub fn lt(&self, other: &FlowPoint) -> bool {
        self.y < other.y && self.z < other.z && self.w < other.w
    }

    pub fn sup_dist(&self, other: &FlowPoint) -> f64 {
        (self.y - other.y)
            .abs()
            .max((self.z - other.z).abs())
            .max((self.w - other.w).abs())
    }
}

/// Constant terms of the three equations.
fn linear_terms(params: &SystemParams) -> [f64; 3] {
    let (n, p, q, alpha) = (params.nf(), params.p(), params.q(), params.alpha());
    [
        (p - n) / (p - 1.0),
        (n * (p - 1.0) - (n - 1.0) * alpha) / (p - 1.0),
        (n * (p - 1.0) - q * (n - 1.0)) / (p - 1.0),
    ]
}

pub fn vector_field(pt: &FlowPoint, params: &SystemParams) -> [f64; 3] {
    let (p, m, q, beta) = (params.p(), params.m(), params.q(), params.beta());
    let k = params.k();
    let [a1, a2, a3] = linear_terms(params);
    let FlowPoint { y, z, w } = *pt;
    [
        y * (a1 - y + w / (p - 1.0)),
        z * (a2 - k / (p - 1.0) * z + m * y),
        w * (a3 + beta * y + q * z / (p - 1.0) - w),
    ]
}

/// Right-hand side of the `X` equation, which is driven by `Z`.
pub fn x_field(x: f64, z: f64, params: &SystemParams) -> f64 {
    let (n, p) = (params.nf(), params.p());
    x * ((p - n) / (p - 1.0) - x + z / (p - 1.0))
}

/// Jacobian `∂g_i/∂ζ_j` of [`vector_field`].
pub fn jacobian(pt: &FlowPoint, params: &SystemParams) -> [[f64; 3]; 3] {
    let (p, m, q, beta) = (params.p(), params.m(), params.q(), params.beta());
    let k = params.k();
    let [a1, a2, a3] = linear_terms(params);
    let FlowPoint { y, z, w } = *pt;
    [
        [a1 - 2.0 * y + w / (p - 1.0), 0.0, y / (p - 1.0)],
        [m * z, a2 - 2.0 * k * z / (p - 1.0) + m * y, 0.0],
        [beta * w, q * w / (p - 1.0), a3 + beta * y + q * z / (p - 1.0) - 2.0 * w],
    ]
}

/// `λ³ + aλ² + bλ + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharPoly {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CharPoly {
    /// Routh–Hurwitz for a cubic.
    pub fn is_hurwitz(&self) -> bool {
        self.a > 0.0 && self.c > 0.0 && self.a * self.b > self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondaryPoints {
    #[serde(rename = "P1")]
    pub p1: FlowPoint,
    #[serde(rename = "P2")]
    pub p2: FlowPoint,
    /// Present only when `p >= N`.
    #[serde(rename = "P3")]
    pub p3: Option<FlowPoint>,
    #[serde(rename = "P_star")]
    pub p_star: FlowPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    #[serde(rename = "Y_inf")]
    pub y_inf: f64,
    #[serde(rename = "Z_inf")]
    pub z_inf: f64,
    #[serde(rename = "W_inf")]
    pub w_inf: f64,
    #[serde(rename = "X_inf")]
    pub x_inf: f64,
    /// Limit of `u(r)/r^{ν_u}`.
    #[serde(rename = "A")]
    pub growth_u: f64,
    /// Limit of `v(r)/r^{ν_v}`.
    #[serde(rename = "B")]
    pub growth_v: f64,
    pub char_poly: CharPoly,
    pub stable: bool,
    pub secondary_points: SecondaryPoints,
}

impl Equilibrium {
    pub fn point(&self) -> FlowPoint {
        FlowPoint::new(self.y_inf, self.z_inf, self.w_inf)
    }
}

fn require_positive_delta(params: &SystemParams) -> Result<f64> {
    let delta = params.delta();
    if delta > 0.0 && params.alpha_below_threshold() {
        Ok(delta)
    } else {
        Err(Error::DeltaNotPositive(delta))
    }
}

fn char_poly_at(pt: &FlowPoint, params: &SystemParams) -> CharPoly {
    let p = params.p();
    let k = params.k();
    let beta = params.beta();
    let FlowPoint { y, z, w } = *pt;
    CharPoly {
        a: y + k * z / (p - 1.0) + w,
        b: k / (p - 1.0) * y * z + (p - 1.0 - beta) / (p - 1.0) * y * w + k / (p - 1.0) * z * w,
        c: params.delta() / (p - 1.0).powi(2) * y * z * w,
    }
}

pub fn equilibrium(params: &SystemParams) -> Result<Equilibrium> {
    let delta = require_positive_delta(params)?;
    let (n, p, m, q, alpha, beta) = (
        params.nf(),
        params.p(),
        params.m(),
        params.q(),
        params.alpha(),
        params.beta(),
    );
    let k = params.k();
    let y_inf = (p * k + q) / delta;
    let z_inf = m * (p - 1.0) / k * y_inf + n + alpha / k;
    let w_inf = (p - 1.0) * y_inf + n - p;
    let x_inf = z_inf / (p - 1.0) + (p - n) / (p - 1.0);
    // Summed in logs: the individual powers overflow when δ is small.
    let (ly, lz, lw) = (y_inf.ln(), z_inf.ln(), w_inf.ln());
    let growth_u = (-(m * (p - 1.0) * ly + (p - 1.0 - beta) * lz + m * lw) / delta - x_inf.ln()).exp();
    let growth_v = (-((p - 1.0) * k * ly + q * lz + k * lw) / delta).exp();
    let pt = FlowPoint::new(y_inf, z_inf, w_inf);
    let char_poly = char_poly_at(&pt, params);
    let z_floor = n + alpha / k;
    Ok(Equilibrium {
        y_inf,
        z_inf,
        w_inf,
        x_inf,
        growth_u,
        growth_v,
        char_poly,
        stable: char_poly.is_hurwitz(),
        secondary_points: SecondaryPoints {
            p1: FlowPoint::new(0.0, z_floor, 0.0),
            p2: FlowPoint::new(0.0, z_floor, n + q / k),
            p3: (p >= n).then(|| FlowPoint::new((p - n) / (p - 1.0), n + (alpha + m * (p - n)) / k, 0.0)),
            p_star: FlowPoint::new(0.0, z_floor, n),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    pub char_poly: CharPoly,
    pub stable: bool,
    /// Real parts of the eigenvalues of the linearization at `P∞`, descending.
    pub eigen_real_parts: [f64; 3],
}

pub fn stability(params: &SystemParams) -> Result<Stability> {
    let eq = equilibrium(params)?;
    let j = jacobian(&eq.point(), params);
    let mat = Matrix3::from_fn(|r, c| j[r][c]);
    let ev = mat.complex_eigenvalues();
    let mut re = [ev[0].re, ev[1].re, ev[2].re];
    re.sort_by(|a, b| b.total_cmp(a));
    Ok(Stability {
        char_poly: eq.char_poly,
        stable: eq.stable,
        eigen_real_parts: re,
    })
}

/// Axis-aligned box sampled on a regular lattice, corners included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleBox {
    pub lo: FlowPoint,
    pub hi: FlowPoint,
    pub per_axis: usize,
}

impl SampleBox {
    pub fn points(&self) -> Vec<FlowPoint> {
        let n = self.per_axis.max(2);
        let lerp = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / (n - 1) as f64;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    out.push(FlowPoint::new(
                        lerp(self.lo.y, self.hi.y, i),
                        lerp(self.lo.z, self.hi.z, j),
                        lerp(self.lo.w, self.hi.w, l),
                    ));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub cooperative: bool,
    pub irreducible: bool,
}

/// Strong connectivity of the digraph with an edge `j -> i` whenever
/// `m[i][j] != 0`, `i != j`.
fn strongly_connected(m: &[[f64; 3]; 3]) -> bool {
    let reach = |forward: bool| {
        let mut seen = [true, false, false];
        let mut stack = vec![0usize];
        while let Some(from) = stack.pop() {
            for to in 0..3 {
                let entry = if forward { m[to][from] } else { m[from][to] };
                if to != from && entry != 0.0 && !seen[to] {
                    seen[to] = true;
                    stack.push(to);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    reach(true) && reach(false)
}

pub fn structure_checks(params: &SystemParams, sample_box: &SampleBox) -> StructureReport {
    let mut cooperative = true;
    let mut irreducible = true;
    for pt in sample_box.points() {
        let j = jacobian(&pt, params);
        for (r, row) in j.iter().enumerate() {
            for (c, &e) in row.iter().enumerate() {
                if r != c && !(e >= 0.0) {
                    cooperative = false;
                }
            }
        }
        if !strongly_connected(&j) {
            irreducible = false;
        }
    }
    StructureReport {
        cooperative,
        irreducible,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "tag", content = "point")]
pub enum OmegaEstimate {
    /// Cauchy over the final window; the last point.
    Converged(FlowPoint),
    NonConvergent,
    /// A component left every bounded set.
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<FlowPoint>,
    pub omega: OmegaEstimate,
    /// Largest sup-norm spread over the final 10% of the time span.
    pub window_spread: f64,
}

impl FlowTrajectory {
    pub fn last(&self) -> &FlowPoint {
        self.points.last().expect("trajectory holds the start point")
    }

    /// Writes `t,X,Y,Z,W`; `X` is left empty since it is not part of the
    /// autonomous system.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,X,Y,Z,W")?;
        for (t, pt) in self.times.iter().zip(&self.points) {
            writeln!(out, "{t:.16e},,{:.16e},{:.16e},{:.16e}", pt.y, pt.z, pt.w)?;
        }
        Ok(())
    }
}

const DIVERGENCE_BOUND: f64 = 1e12;

/// Integrates the flow on `[0, t_max]` with output every `min(0.1, t_max/1000)`.
pub fn integrate_flow(start: &FlowPoint, params: &SystemParams, t_max: f64, tol: f64) -> Result<FlowTrajectory> {
    let s = start.to_array();
    if !s.iter().all(|x| x.is_finite() && *x >= 0.0) {
        return Err(Error::DomainViolation(format!("flow start must be nonnegative, got {start:?}")));
    }
    if !(t_max > 0.0) {
        return Err(Error::Config(format!("t_max must be positive, got {t_max}")));
    }
    let dt = (t_max / 1000.0).min(0.1);
    let n_out = (t_max / dt).round() as usize;
    let outputs: Vec<f64> = (1..=n_out).map(|i| if i == n_out { t_max } else { i as f64 * dt }).collect();
    let ctl = StepControl {
        rtol: 1e-12,
        atol: 1e-14,
        scale: ErrorScale::Mixed,
        ..StepControl::default()
    };
    let mut times = vec![0.0];
    let mut points = vec![*start];
    let mut diverged = false;
    let (finish, _, _, _) = rk::integrate(
        |_, y: &[f64; 3]| {
            let d = vector_field(&FlowPoint::from_array(*y), params);
            d.iter().all(|x| x.is_finite()).then_some(d)
        },
        0.0,
        s,
        t_max,
        &outputs,
        &ctl,
        |ev, t, y| {
            if y.iter().any(|x| !x.is_finite() || x.abs() > DIVERGENCE_BOUND) {
                diverged = true;
                return ControlFlow::Break(());
            }
            if ev == Event::Output {
                times.push(t);
                points.push(FlowPoint::from_array(*y));
            }
            ControlFlow::Continue(())
        },
    );
    match finish {
        Finish::StepUnderflow(t) | Finish::StepBudget(t) if !diverged => {
            return Err(Error::StepUnderflow { r: t.exp() });
        }
        _ => {}
    }
    let t_window = t_max * 0.9;
    let window: Vec<&FlowPoint> = times
        .iter()
        .zip(&points)
        .filter(|(t, _)| **t >= t_window)
        .map(|(_, p)| p)
        .collect();
    let spread = if diverged || window.is_empty() {
        f64::INFINITY
    } else {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &window {
            for (i, x) in p.to_array().iter().enumerate() {
                lo[i] = lo[i].min(*x);
                hi[i] = hi[i].max(*x);
            }
        }
        (0..3).map(|i| hi[i] - lo[i]).fold(0.0, f64::max)
    };
    let omega = if diverged {
        OmegaEstimate::Divergent
    } else if spread <= tol {
        OmegaEstimate::Converged(*points.last().unwrap())
    } else {
        OmegaEstimate::NonConvergent
    };
    Ok(FlowTrajectory {
        times,
        points,
        omega,
        window_spread: spread,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowSample {
    pub t: f64,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    #[serde(rename = "W")]
    pub w: f64,
}

impl FlowSample {
    pub fn point(&self) -> FlowPoint {
        FlowPoint::new(self.y, self.z, self.w)
    }
}

/// Centered-difference check of the extracted coordinates against the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowResidual {
    /// Max over interior points of `|Δζ/Δt - g(ζ)| / (|ζ| + |g(ζ)|)`, per
    /// component `X, Y, Z, W`.
    pub per_component: [f64; 4],
    pub max_rel: f64,
    pub points: usize,
    /// Points within this distance in `t` of either end are excluded.
    pub end_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowExtraction {
    pub samples: Vec<FlowSample>,
    pub residual: FlowResidual,
}

/// Default exclusion zone at both ends of the residual check.
pub const RESIDUAL_END_MARGIN: f64 = 1.0;

pub fn extract_flow_coordinates(traj: &RadialTrajectory) -> FlowExtraction {
    extract_with_margin(traj, RESIDUAL_END_MARGIN)
}

pub fn extract_with_margin(traj: &RadialTrajectory, end_margin: f64) -> FlowExtraction {
    let params = &traj.params;
    let samples: Vec<FlowSample> = traj
        .samples
        .iter()
        .filter(|s| [s.r, s.u, s.z, s.v, s.s].iter().all(|x| x.is_finite() && *x > 0.0))
        .map(|s| {
            let t = s.r.ln();
            let [x, y, z, w] = flow_coordinates_log(params, t, &[s.u.ln(), s.z.ln(), s.v.ln(), s.s.ln()]);
            FlowSample { t, x, y, z, w }
        })
        .collect();

    let mut per_component = [0.0f64; 4];
    let mut points = 0;
    if samples.len() >= 3 {
        let (t_lo, t_hi) = (samples[0].t + end_margin, samples[samples.len() - 1].t - end_margin);
        for i in 1..samples.len() - 1 {
            let (a, b, c) = (&samples[i - 1], &samples[i], &samples[i + 1]);
            if b.t < t_lo || b.t > t_hi {
                continue;
            }
            let (h0, h1) = (b.t - a.t, c.t - b.t);
            // Second-order derivative on a non-uniform stencil.
            let d = |fa: f64, fb: f64, fc: f64| {
                (-h1 / (h0 * (h0 + h1))) * fa + ((h1 - h0) / (h0 * h1)) * fb + (h0 / (h1 * (h0 + h1))) * fc
            };
            let fd = [d(a.x, b.x, c.x), d(a.y, b.y, c.y), d(a.z, b.z, c.z), d(a.w, b.w, c.w)];
            let g3 = vector_field(&b.point(), params);
            let g = [x_field(b.x, b.z, params), g3[0], g3[1], g3[2]];
            let vals = [b.x, b.y, b.z, b.w];
            for k in 0..4 {
                let rel = (fd[k] - g[k]).abs() / (vals[k].abs() + g[k].abs());
                per_component[k] = per_component[k].max(rel);
            }
            points += 1;
        }
    }
    FlowExtraction {
        samples,
        residual: FlowResidual {
            per_component,
            max_rel: per_component.iter().copied().fold(0.0, f64::max),
            points,
            end_margin,
        },
    }
}

impl FlowExtraction {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,X,Y,Z,W")?;
        for s in &self.samples {
            writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", s.t, s.x, s.y, s.z, s.w)?;
        }
        Ok(())
    }
}

/// Relative margins above `-BOUNDS_SLACK` count as satisfied: near the
/// origin `Z` and `W` sit on their lower bounds to rounding.
pub const BOUNDS_SLACK: f64 = 1e-12;

/// Samples violating `0 < Y < Y∞`, `N + α/(p-1-α) < Z < Z∞`, `N < W < W∞`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub checked: usize,
    pub violations: usize,
    /// Smallest relative distance to any bound; negative on violation.
    pub worst_margin: f64,
    pub first_violation_t: Option<f64>,
}

pub fn check_trajectory_bounds(samples: &[FlowSample], params: &SystemParams, eq: &Equilibrium) -> BoundsReport {
    let z_floor = params.nf() + params.alpha() / params.k();
    let n = params.nf();
    let mut report = BoundsReport {
        checked: samples.len(),
        violations: 0,
        worst_margin: f64::INFINITY,
        first_violation_t: None,
    };
    for s in samples {
        let margins = [
            1.0 - s.y / eq.y_inf,
            s.z / z_floor - 1.0,
            1.0 - s.z / eq.z_inf,
            s.w / n - 1.0,
            1.0 - s.w / eq.w_inf,
        ];
        let worst = margins.iter().copied().fold(if s.y > 0.0 { f64::INFINITY } else { -1.0 }, f64::min);
        report.worst_margin = report.worst_margin.min(worst);
        if worst < -BOUNDS_SLACK || s.y <= 0.0 {
            report.violations += 1;
            report.first_violation_t.get_or_insert(s.t);
        }
    }
    report
}

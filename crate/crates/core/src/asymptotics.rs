//! Growth constants of global solutions and the single-equation embedding
//! `Δp u = u^m |∇u|^q` (`α = q`, `β = m`, `a = b`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{equilibrium, Equilibrium};
use crate::params::{classify, delta_in_band, derive, RegimeTag, SystemParams};
use crate::radial::{integrate, IntegrationConfig, RadialState, RadialTrajectory, StopReason};

pub const EXTRAPOLATION: &str = "one-term 1/ln r through the ratios at r_lo and r_hi";

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct AsymptoticsReport {
    pub nu_u: f64,
    pub nu_v: f64,
    pub A_pred: f64,
    pub B_pred: f64,
    /// `u(r_hi)/r_hi^{ν_u}`.
    pub A_fit: f64,
    pub B_fit: f64,
    pub rel_err_A: f64,
    pub rel_err_B: f64,
    pub r_window: (f64, f64),
    pub A_extrap: f64,
    pub B_extrap: f64,
    pub extrapolation: &'static str,
}

fn sample_at_or_below(samples: &[RadialState], r: f64) -> Option<&RadialState> {
    samples.iter().rev().find(|s| s.r <= r * (1.0 + 1e-9))
}

fn ratio(value: f64, r: f64, nu: f64) -> f64 {
    (value.ln() - nu * r.ln()).exp()
}

/// Growth report on the window `[r_hi/10, r_hi]` of a global trajectory.
pub fn verify_growth(traj: &RadialTrajectory, eq: &Equilibrium) -> Result<AsymptoticsReport> {
    verify_growth_at(traj, eq, traj.last().r)
}

/// As [`verify_growth`] with `r_hi` the last sample at or below the given radius.
pub fn verify_growth_at(traj: &RadialTrajectory, eq: &Equilibrium, r_hi: f64) -> Result<AsymptoticsReport> {
    let params = &traj.params;
    let regime = classify(params).tag;
    if regime != RegimeTag::AllBoundedGlobal {
        return Err(Error::RegimeMismatch(format!("growth laws need AllBoundedGlobal, got {regime}")));
    }
    if traj.stop != StopReason::ReachedRMax {
        return Err(Error::RegimeMismatch(format!("trajectory stopped with {:?}", traj.stop)));
    }
    let d = derive(params);
    let hi = sample_at_or_below(&traj.samples, r_hi)
        .ok_or_else(|| Error::InsufficientSamples(format!("no sample at or below r = {r_hi:e}")))?;
    let lo = sample_at_or_below(&traj.samples, hi.r / 10.0)
        .filter(|s| s.r < hi.r && s.r > 1.0)
        .ok_or_else(|| Error::InsufficientSamples(format!("no sample a decade below r = {:e}", hi.r)))?;

    let a_fit = ratio(hi.u, hi.r, d.nu_u);
    let b_fit = ratio(hi.v, hi.r, d.nu_v);
    // R(r) = C + c1/ln r through two radii.
    let extrap = |f_lo: f64, f_hi: f64| {
        let (l0, l1) = (lo.r.ln(), hi.r.ln());
        (f_hi * l1 - f_lo * l0) / (l1 - l0)
    };
    let a_extrap = extrap(ratio(lo.u, lo.r, d.nu_u), a_fit);
    let b_extrap = extrap(ratio(lo.v, lo.r, d.nu_v), b_fit);
    Ok(AsymptoticsReport {
        nu_u: d.nu_u,
        nu_v: d.nu_v,
        A_pred: eq.growth_u,
        B_pred: eq.growth_v,
        A_fit: a_fit,
        B_fit: b_fit,
        rel_err_A: (a_fit - eq.growth_u).abs() / eq.growth_u,
        rel_err_B: (b_fit - eq.growth_v).abs() / eq.growth_v,
        r_window: (lo.r, hi.r),
        A_extrap: a_extrap,
        B_extrap: b_extrap,
        extrapolation: EXTRAPOLATION,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionRow {
    #[serde(rename = "N")]
    pub n: u32,
    pub report: AsymptoticsReport,
}

/// Growth reports for several dimensions with the other parameters fixed.
pub fn growth_by_dimension(
    params: &SystemParams,
    dims: &[u32],
    a: f64,
    b: f64,
    config: &IntegrationConfig,
) -> Result<Vec<DimensionRow>> {
    dims.iter()
        .map(|&n| {
            let pn = params.with_n(n)?;
            let eq = equilibrium(&pn)?;
            let traj = integrate(&pn, a, b, config)?;
            Ok(DimensionRow {
                n,
                report: verify_growth(&traj, &eq)?,
            })
        })
        .collect()
}

/// `true` when `A_fit` strictly decreases along the rows.
pub fn strictly_decreasing_in_dimension(rows: &[DimensionRow]) -> bool {
    rows.windows(2).all(|w| w[1].report.A_fit < w[0].report.A_fit)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleEquationReport {
    /// `(p-q)/(p-1-m-q)`.
    pub exponent: f64,
    /// Limit of `u(r)/r^exponent`.
    pub constant: f64,
    pub max_rel_diff_uv: f64,
    pub growth: AsymptoticsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleEquationRun {
    #[serde(skip)]
    pub trajectory: RadialTrajectory,
    pub report: SingleEquationReport,
}

/// Tolerance on `max |u-v|/u` along the embedded trajectory.
pub const EMBEDDING_TOL: f64 = 1e-8;

/// The single equation as a system with `α = q`, `β = m`, `u(0) = v(0) = a`.
pub fn single_equation_params(n: u32, p: f64, m: f64, q: f64) -> Result<SystemParams> {
    if !(m > 0.0 && q > 0.0 && p > 1.0) {
        return Err(Error::DomainViolation(format!("need m, q > 0 and p > 1 (m={m}, q={q}, p={p})")));
    }
    let tight = p - 1.0 - q;
    if m + q == p - 1.0 || delta_in_band(p, m, q, q, m) {
        return Err(Error::DeltaZero);
    }
    if q >= p - 1.0 {
        return Err(Error::NoSolutionRegime(format!("q = {q} >= p-1 = {}", p - 1.0)));
    }
    if m >= tight {
        return Err(Error::NoSolutionRegime(format!("m = {m} >= p-q-1 = {tight}")));
    }
    SystemParams::new(n, p, m, q, q, m)
}

pub fn single_equation_mode(
    n: u32,
    p: f64,
    m: f64,
    q: f64,
    a: f64,
    config: &IntegrationConfig,
) -> Result<SingleEquationRun> {
    let params = single_equation_params(n, p, m, q)?;
    let eq = equilibrium(&params)?;
    let trajectory = integrate(&params, a, a, config)?;
    let max_rel_diff_uv = trajectory
        .samples
        .iter()
        .map(|s| (s.u - s.v).abs() / s.u)
        .fold(0.0, f64::max);
    if !(max_rel_diff_uv < EMBEDDING_TOL) {
        return Err(Error::InsufficientSamples(format!(
            "embedded components separated: max |u-v|/u = {max_rel_diff_uv:e}"
        )));
    }
    let growth = verify_growth(&trajectory, &eq)?;
    Ok(SingleEquationRun {
        trajectory,
        report: SingleEquationReport {
            exponent: (p - q) / (p - 1.0 - m - q),
            constant: eq.growth_u,
            max_rel_diff_uv,
            growth,
        },
    })
}

//! Fixed-point construction of local solutions on `[0, ρ]`.
//!
//! The operator maps `(u, v)` to
//!
//! ```text
//! T1 = a + ∫0^r ( (p-1-α)/(p-1) t^{-γ} ∫0^t s^γ v^m ds )^{1/(p-1-α)} dt
//! T2 = b + ∫0^r ( t^{1-N} ∫0^t s^{N-1} v^β |u'|^q ds )^{1/(p-1)} dt
//! ```
//!
//! Every integrand is written as `t^w g(t)` with `g` bounded and nonzero at
//! the origin; the power weight is integrated exactly on each cell against
//! the piecewise-linear interpolant of `g`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::radial::{integrate, IntegrationConfig, SampleGrid};

/// Functions on a uniform grid of `[0, ρ]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunctionPair {
    pub rho: f64,
    pub nodes: Vec<f64>,
    pub u_vals: Vec<f64>,
    pub u_prime_vals: Vec<f64>,
    pub v_vals: Vec<f64>,
    pub v_prime_vals: Vec<f64>,
    /// `u' / r^{1/(p-1-α)}`, finite at the origin.
    pub u_prime_scaled: Vec<f64>,
}

impl GridFunctionPair {
    /// The constant pair `(a, b)` with vanishing derivatives.
    pub fn constant(rho: f64, n_nodes: usize, a: f64, b: f64) -> Self {
        let nodes = uniform_nodes(rho, n_nodes);
        let n = nodes.len();
        GridFunctionPair {
            rho,
            nodes,
            u_vals: vec![a; n],
            u_prime_vals: vec![0.0; n],
            v_vals: vec![b; n],
            v_prime_vals: vec![0.0; n],
            u_prime_scaled: vec![0.0; n],
        }
    }

    /// Builds a pair from sampled values; the scaled derivative at the
    /// origin is extrapolated linearly from the next two nodes.
    pub fn from_values(rho: f64, u: Vec<f64>, u_prime: Vec<f64>, v: Vec<f64>, params: &SystemParams) -> Result<Self> {
        let n = u.len();
        if n < 3 || u_prime.len() != n || v.len() != n {
            return Err(Error::Config("grid functions need equal lengths >= 3".into()));
        }
        let nodes = uniform_nodes(rho, n);
        let e = 1.0 / params.k();
        let mut scaled: Vec<f64> = nodes
            .iter()
            .zip(&u_prime)
            .map(|(t, up)| if *t > 0.0 { up / t.powf(e) } else { 0.0 })
            .collect();
        scaled[0] = (2.0 * scaled[1] - scaled[2]).max(0.0);
        Ok(GridFunctionPair {
            rho,
            nodes,
            u_vals: u,
            u_prime_vals: u_prime,
            v_vals: v,
            v_prime_vals: vec![0.0; n],
            u_prime_scaled: scaled,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Sup-norm distance over `u`, `u'` and `v`.
    pub fn distance(&self, other: &GridFunctionPair) -> f64 {
        let sup = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        sup(&self.u_vals, &other.u_vals)
            .max(sup(&self.u_prime_vals, &other.u_prime_vals))
            .max(sup(&self.v_vals, &other.v_vals))
    }

    /// Writes `r,u,uprime,v`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,u,uprime,v")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.nodes[i], self.u_vals[i], self.u_prime_vals[i], self.v_vals[i]
            )?;
        }
        Ok(())
    }
}

fn uniform_nodes(rho: f64, n: usize) -> Vec<f64> {
    let h = rho / (n - 1) as f64;
    (0..n)
        .map(|j| if j + 1 == n { rho } else { j as f64 * h })
        .collect()
}

/// `t_j^{-(w+1)} ∫0^{t_j} s^w f(s) ds` for `f` piecewise linear on the
/// uniform grid. The value at `t = 0` is the limit `f(0)/(w+1)`.
fn scaled_power_cumint(nodes: &[f64], f: &[f64], w: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut acc = f[0] / (w + 1.0);
    out.push(acc);
    for j in 0..nodes.len() - 1 {
        let (t0, t1) = (nodes[j], nodes[j + 1]);
        let h = t1 - t0;
        // With ρ = t0/t1: ∫ (s/t1)^w ds = t1 (1-ρ^{w+1})/(w+1) and
        // ∫ (s/t1)^w (s-t0) ds = t1^2 (1-ρ^{w+2})/(w+2) - t0 t1 (1-ρ^{w+1})/(w+1).
        let (decay, m0, m1) = if t0 == 0.0 {
            (0.0, t1 / (w + 1.0), t1 * t1 / (w + 2.0))
        } else {
            let lr = (t0 / t1).ln();
            let e1 = -((w + 1.0) * lr).exp_m1();
            let e2 = -((w + 2.0) * lr).exp_m1();
            let m0 = t1 * e1 / (w + 1.0);
            (((w + 1.0) * lr).exp(), m0, t1 * t1 * e2 / (w + 2.0) - t0 * m0)
        };
        let cell = f[j] * m0 + (f[j + 1] - f[j]) * m1 / h;
        acc = acc * decay + cell / t1;
        out.push(acc);
    }
    out
}

/// One application of the fixed-point operator.
pub fn apply_t(pair: &GridFunctionPair, params: &SystemParams, a: f64, b: f64) -> Result<GridFunctionPair> {
    if !params.alpha_below_threshold() {
        return Err(Error::DegenerateAlpha);
    }
    let (n, p, m, q, beta) = (params.nf(), params.p(), params.m(), params.q(), params.beta());
    let k = params.k();
    let gamma = (n - 1.0) * k / (p - 1.0);
    let c = k / (p - 1.0);
    let nodes = &pair.nodes;

    let check = |name: &str, xs: &[f64]| -> Result<()> {
        match xs.iter().position(|x| !x.is_finite() || *x < 0.0) {
            Some(i) => Err(Error::QuadratureBreakdown(format!(
                "{name} is not finite and nonnegative at r = {:e}",
                nodes[i]
            ))),
            None => Ok(()),
        }
    };

    // u' = t^{1/k} H with H = (c G)^{1/k}, G = t^{-(γ+1)} ∫ s^γ v^m.
    let vm: Vec<f64> = pair.v_vals.iter().map(|v| v.powf(m)).collect();
    check("v^m", &vm)?;
    let g = scaled_power_cumint(nodes, &vm, gamma);
    let h_new: Vec<f64> = g.iter().map(|g| (c * g).powf(1.0 / k)).collect();
    check("u' scale", &h_new)?;
    let e1 = 1.0 / k;
    let u_int = scaled_power_cumint(nodes, &h_new, e1);

    // v' = t^{e2} K^{1/(p-1)} with K = t^{-(g2+1)} ∫ s^{g2} v^β H^q,
    // g2 = N-1+q/k and e2 = (1+q/k)/(p-1).
    let phi: Vec<f64> = pair
        .v_vals
        .iter()
        .zip(&pair.u_prime_scaled)
        .map(|(v, hh)| v.powf(beta) * hh.powf(q))
        .collect();
    check("v^beta |u'|^q", &phi)?;
    let g2 = n - 1.0 + q / k;
    let kk = scaled_power_cumint(nodes, &phi, g2);
    let vscale: Vec<f64> = kk.iter().map(|x| x.powf(1.0 / (p - 1.0))).collect();
    let e2 = (1.0 + q / k) / (p - 1.0);
    let v_int = scaled_power_cumint(nodes, &vscale, e2);

    let mut out = GridFunctionPair {
        rho: pair.rho,
        nodes: nodes.clone(),
        u_vals: Vec::with_capacity(nodes.len()),
        u_prime_vals: Vec::with_capacity(nodes.len()),
        v_vals: Vec::with_capacity(nodes.len()),
        v_prime_vals: Vec::with_capacity(nodes.len()),
        u_prime_scaled: h_new,
    };
    for (j, &t) in nodes.iter().enumerate() {
        out.u_prime_vals.push(t.powf(e1) * out.u_prime_scaled[j]);
        out.u_vals.push(a + t.powf(e1 + 1.0) * u_int[j]);
        out.v_prime_vals.push(t.powf(e2) * vscale[j]);
        out.v_vals.push(b + t.powf(e2 + 1.0) * v_int[j]);
    }
    check("u", &out.u_vals)?;
    check("v", &out.v_vals)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicardOptions {
    pub nodes: usize,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            nodes: 1024,
            max_iterations: 200,
            max_halvings: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPoint {
    pub pair: GridFunctionPair,
    pub iterations: usize,
    /// Sup-norm change of the last iteration.
    pub last_change: f64,
    pub halvings: usize,
}

/// Iterates the operator from the constant pair until the sup-norm change
/// drops below `tol`, halving `ρ` on failure.
pub fn solve_fixed_point(
    params: &SystemParams,
    a: f64,
    b: f64,
    rho: f64,
    tol: f64,
    opts: &PicardOptions,
) -> Result<FixedPoint> {
    if !(rho > 0.0 && a > 0.0 && b > 0.0) {
        return Err(Error::Config(format!("need rho, a, b > 0 (rho={rho}, a={a}, b={b})")));
    }
    if opts.nodes < 3 {
        return Err(Error::Config("at least 3 grid nodes are required".into()));
    }
    let mut rho = rho;
    let mut iterations = 0;
    for halvings in 0..=opts.max_halvings {
        let mut pair = GridFunctionPair::constant(rho, opts.nodes, a, b);
        let mut converged = None;
        for it in 1..=opts.max_iterations {
            let next = match apply_t(&pair, params, a, b) {
                Ok(next) => next,
                Err(Error::QuadratureBreakdown(_)) => break,
                Err(e) => return Err(e),
            };
            let change = next.distance(&pair);
            pair = next;
            iterations = it;
            if change < tol {
                converged = Some(change);
                break;
            }
        }
        if let Some(last_change) = converged {
            return Ok(FixedPoint {
                pair,
                iterations,
                last_change,
                halvings,
            });
        }
        if halvings < opts.max_halvings {
            rho *= 0.5;
        }
    }
    Err(Error::NoConvergence { iterations, rho })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeComparison {
    pub r0: f64,
    pub rho: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub sup_uprime: f64,
    /// `max(sup_u, sup_v)`.
    pub sup_norm: f64,
    pub nodes_compared: usize,
}

/// Sup-norm distance on `[r0, ρ]` between a fixed point and the radial
/// integration with the same center values, evaluated at the grid nodes.
pub fn compare_with_ode(
    params: &SystemParams,
    a: f64,
    b: f64,
    fp: &FixedPoint,
    config: &IntegrationConfig,
) -> Result<OdeComparison> {
    let pair = &fp.pair;
    let radii: Vec<f64> = pair.nodes.iter().copied().filter(|&r| r > config.r0).collect();
    let cfg = IntegrationConfig {
        r_max: pair.rho,
        grid: SampleGrid::Radii(radii),
        ..config.clone()
    };
    let traj = integrate(params, a, b, &cfg)?;
    let (mut su, mut sv, mut sup_uprime) = (0.0f64, 0.0f64, 0.0f64);
    let mut count = 0;
    for st in traj.samples.iter().skip(1) {
        let j = pair
            .nodes
            .iter()
            .position(|&r| r == st.r)
            .ok_or_else(|| Error::InsufficientSamples(format!("no grid node at r = {:e}", st.r)))?;
        su = su.max((st.u - pair.u_vals[j]).abs());
        sv = sv.max((st.v - pair.v_vals[j]).abs());
        sup_uprime = sup_uprime.max((st.uprime(params) - pair.u_prime_vals[j]).abs());
        count += 1;
    }
    Ok(OdeComparison {
        r0: config.r0,
        rho: pair.rho,
        sup_u: su,
        sup_v: sv,
        sup_uprime,
        sup_norm: su.max(sv),
        nodes_compared: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> SystemParams {
        SystemParams::new(3, 10.0, 2.0, 4.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn power_cumint_is_exact_for_linear_data() {
        // ∫0^t s^w (1 + 2s) ds / t^{w+1} = 1/(w+1) + 2t/(w+2)
        let nodes = uniform_nodes(0.5, 11);
        for w in [0.0, 0.125, 1.7, 40.0] {
            let f: Vec<f64> = nodes.iter().map(|t| 1.0 + 2.0 * t).collect();
            let s = scaled_power_cumint(&nodes, &f, w);
            for (t, v) in nodes.iter().zip(&s) {
                let exact = 1.0 / (w + 1.0) + 2.0 * t / (w + 2.0);
                assert!((v - exact).abs() < 1e-13, "w={w} t={t}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn constant_input_closed_form() {
        let p = fig1();
        let pair = GridFunctionPair::constant(0.1, 1024, 1.0, 1.0);
        let out = apply_t(&pair, &p, 1.0, 1.0).unwrap();
        let gamma: f64 = 16.0 / 9.0;
        let kappa = (8.0 / (9.0 * (gamma + 1.0))).powf(1.0 / 8.0) * 8.0 / 9.0;
        assert!((kappa - 0.77089).abs() < 1e-5, "{kappa}");
        let exact = 1.0 + kappa * 0.1f64.powf(9.0 / 8.0);
        assert!((out.u_vals.last().unwrap() - exact).abs() < 1e-13);
        assert!((exact - 1.05781).abs() < 1e-5);
        // u' vanishes at the origin; v is untouched since u' was zero.
        assert_eq!(out.u_prime_vals[0], 0.0);
        assert!(out.v_vals.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn tighter_tolerance_needs_more_iterations() {
        let p = fig1();
        let opts = PicardOptions::default();
        let loose = solve_fixed_point(&p, 1.0, 1.0, 0.1, 1e-3, &opts).unwrap();
        let tight = solve_fixed_point(&p, 1.0, 1.0, 0.1, 1e-10, &opts).unwrap();
        assert!(loose.iterations < tight.iterations);
        let again = apply_t(&tight.pair, &p, 1.0, 1.0).unwrap();
        assert!(again.distance(&tight.pair) < 1e-10);
    }

    #[test]
    fn figure1_fixed_point_matches_ode() {
        let p = fig1();
        let fp = solve_fixed_point(&p, 1.0, 1.0, 0.1, 1e-10, &PicardOptions::default()).unwrap();
        assert_eq!(fp.halvings, 0);
        let cmp = compare_with_ode(&p, 1.0, 1.0, &fp, &IntegrationConfig::default()).unwrap();
        assert!(cmp.sup_norm < 1e-6, "{cmp:?}");
        assert!(cmp.nodes_compared > 1000);
    }

    #[test]
    fn diaz_prototype_converges_locally() {
        let p = SystemParams::new(3, 2.0, 1.0, 2.0, 0.0, 0.0).unwrap();
        let fp = solve_fixed_point(&p, 1.0, 1.0, 0.05, 1e-10, &PicardOptions::default()).unwrap();
        assert!(fp.pair.u_vals.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn exhausted_iterations_report_no_convergence() {
        let opts = PicardOptions {
            max_iterations: 1,
            max_halvings: 2,
            ..Default::default()
        };
        let r = solve_fixed_point(&fig1(), 1.0, 1.0, 0.1, 1e-14, &opts);
        assert!(matches!(r, Err(Error::NoConvergence { rho, .. }) if rho == 0.025), "{r:?}");
    }

    #[test]
    fn nonfinite_input_is_a_breakdown() {
        let mut pair = GridFunctionPair::constant(0.1, 16, 1.0, 1.0);
        pair.v_vals[3] = f64::NAN;
        assert!(matches!(
            apply_t(&pair, &fig1(), 1.0, 1.0),
            Err(Error::QuadratureBreakdown(_))
        ));
    }

    #[test]
    fn csv_columns() {
        let pair = GridFunctionPair::constant(0.1, 4, 1.0, 2.0);
        let mut buf = Vec::new();
        pair.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r,u,uprime,v\n"));
        assert_eq!(text.lines().count(), 5);
    }
}

//! End-to-end acceptance checks; prints one PASS/FAIL line per criterion.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use pradial_core::asymptotics::{single_equation_mode, verify_growth};
use pradial_core::flow::{
    check_trajectory_bounds, equilibrium, extract_flow_coordinates, integrate_flow, stability, FlowPoint,
    OmegaEstimate,
};
use pradial_core::params::{classify_by_products, classify_by_sigma, derive, validate, RawParams, RegimeTag, SystemParams};
use pradial_core::picard::{compare_with_ode, solve_fixed_point, PicardOptions};
use pradial_core::radial::{estimate_blowup, integrate, integrate_trajectory, IntegrationConfig, StopReason};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{rel, random_in_regime, random_positive_delta};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fig1() -> SystemParams {
    SystemParams::new(3, 10.0, 2.0, 4.0, 1.0, 1.0).unwrap()
}

fn closed_form() -> Outcome {
    let start = Instant::now();
    let p = fig1();
    let d = derive(&p);
    let eq = equilibrium(&p).map_err(|e| e.to_string())?;
    let exact = [
        ("delta", d.delta, 56.0),
        ("sigma", d.sigma.unwrap(), 0.75),
        ("nu_u", d.nu_u, 1.5),
        ("nu_v", d.nu_v, 1.5),
        ("Y_inf", eq.y_inf, 1.5),
        ("Z_inf", eq.z_inf, 6.5),
        ("W_inf", eq.w_inf, 6.5),
        ("X_inf", eq.x_inf, 1.5),
    ];
    for (name, got, want) in exact {
        check(rel(got, want) <= 1e-12, || format!("{name} = {got}, expected {want}"))?;
    }
    // Exponents over δ = 56: m(p-1) = 18, p-1-β = 8, m = 2 for A;
    // (p-1)(p-1-α) = 72, q = 4, p-1-α = 8 for B.
    let a_hand = 1.0 / (1.5f64.powf(18.0 / 56.0) * 6.5f64.powf(8.0 / 56.0) * 6.5f64.powf(2.0 / 56.0) * 1.5);
    let b_hand = 1.0 / (1.5f64.powf(72.0 / 56.0) * 6.5f64.powf(4.0 / 56.0) * 6.5f64.powf(8.0 / 56.0));
    check(rel(eq.growth_u, a_hand) <= 1e-10, || format!("A = {} vs {a_hand}", eq.growth_u))?;
    check(rel(eq.growth_v, b_hand) <= 1e-10, || format!("B = {} vs {b_hand}", eq.growth_v))?;
    check((a_hand - 0.41893).abs() < 5e-6 && (b_hand - 0.39756).abs() < 5e-6, || "hand values".into())?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_millis(100), || format!("took {elapsed:?}"))?;
    Ok(format!("A={:.10} B={:.10}", eq.growth_u, eq.growth_v))
}

fn growth_law() -> Outcome {
    let start = Instant::now();
    let p = fig1();
    let eq = equilibrium(&p).map_err(|e| e.to_string())?;
    let traj = integrate(&p, 1.0, 1.0, &IntegrationConfig::default()).map_err(|e| e.to_string())?;
    let rep = verify_growth(&traj, &eq).map_err(|e| e.to_string())?;
    check(rep.r_window.1 == 1e6, || format!("window {:?}", rep.r_window))?;
    check(rep.rel_err_A < 0.01 && rep.rel_err_B < 0.01, || format!("{rep:?}"))?;
    check(start.elapsed() < Duration::from_secs(10), || "too slow".into())?;
    Ok(format!("rel_err_A={:.2e} rel_err_B={:.2e}", rep.rel_err_A, rep.rel_err_B))
}

fn figure_one() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_pradial"))
        .args(["figure1", "--out"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    check(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
    check(dir.path().join("figure1.svg").exists(), || "no svg".into())?;
    let csv = std::fs::read_to_string(dir.path().join("figure1.csv")).map_err(|e| e.to_string())?;
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    check(
        header == ["r", "u_N3", "v_N3", "u_N10", "v_N10", "u_N30", "v_N30", "u_N60", "v_N60"],
        || format!("header {header:?}"),
    )?;
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    check(rows.first().map(|r| r[0]) == Some(0.0) && rows.last().map(|r| r[0]) == Some(500.0), || "r range".into())?;
    for col in 1..9 {
        check(rows.windows(2).all(|w| w[1][col] > w[0][col]), || format!("{} not increasing", header[col]))?;
    }
    let last = rows.last().unwrap();
    for comp in 0..2 {
        let ends: Vec<f64> = (0..4).map(|i| last[1 + 2 * i + comp]).collect();
        check(ends.windows(2).all(|w| w[1] < w[0]), || format!("values at r=500 not decreasing in N: {ends:?}"))?;
    }
    check(start.elapsed() < Duration::from_secs(30), || "too slow".into())?;
    Ok(format!("u(500) = {:.1}, {:.1}, {:.1}, {:.1}", last[1], last[3], last[5], last[7]))
}

fn blowup_rate() -> Outcome {
    let start = Instant::now();
    let p = SystemParams::new(3, 2.0, 1.0, 2.0, 0.0, 0.0).unwrap();
    let d = derive(&p);
    let traj = integrate(&p, 1.0, 1.0, &IntegrationConfig::default()).map_err(|e| e.to_string())?;
    check(traj.stop == StopReason::BlowUp, || format!("stop {:?}", traj.stop))?;
    let r_est = traj.r_est.ok_or("no R_est")?;
    check(r_est.is_finite() && r_est > traj.last().r, || format!("R_est {r_est}"))?;
    let fit = estimate_blowup(&traj, &d).map_err(|e| e.to_string())?;
    let predicted = -1.0 / ((4.0 / 3.0 - 1.0) * 1.0);
    check(rel(d.blowup_rate_uprime.unwrap(), predicted) < 1e-12, || "closed-form rate".into())?;
    check(rel(fit.rate_exponent, predicted) < 0.05, || format!("rate {}", fit.rate_exponent))?;
    check(fit.fit_quality > 0.999, || format!("R^2 {}", fit.fit_quality))?;
    check(start.elapsed() < Duration::from_secs(10), || "too slow".into())?;
    Ok(format!(
        "R_est={:.6} rate={:.4} R^2={:.7}",
        r_est, fit.rate_exponent, fit.fit_quality
    ))
}

/// Any hypothesis-satisfying tuple, including `α >= p-1`.
fn random_valid_raw(rng: &mut ChaCha8Rng) -> SystemParams {
    loop {
        let p = rng.random_range(1.1..8.0);
        let m = rng.random_range(0.05..6.0);
        let raw = RawParams {
            n: rng.random_range(2..=64),
            p,
            m,
            q: rng.random_range(0.05..10.0),
            alpha: rng.random_range(0.0..1.5 * (p - 1.0)),
            beta: rng.random_range(0.0..=m),
        };
        if let Ok(params) = validate(raw) {
            return params;
        }
    }
}

fn regime_truth_table() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..10_000 {
        let p = random_valid_raw(&mut rng);
        let (a, b) = (classify_by_sigma(&p), classify_by_products(&p));
        check(a == b, || format!("draw {i}: sigma form {a:?} vs product form {b:?} for {:?}", p.raw()))?;
    }
    let cfg = IntegrationConfig::default();
    let mut counts = Vec::new();
    for tag in [RegimeTag::AllBoundedGlobal, RegimeTag::UFiniteVBlowup, RegimeTag::BothBlowup] {
        let want = if tag.is_blowup() { StopReason::BlowUp } else { StopReason::ReachedRMax };
        for _ in 0..100 {
            let p = random_in_regime(&mut rng, tag, 1e-3);
            let (a, b) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
            let traj = integrate_trajectory(&p, a, b, &cfg).map_err(|e| e.to_string())?;
            check(traj.stop == want, || {
                format!("{tag} {:?} a={a} b={b}: stopped with {:?} at r={}", p.raw(), traj.stop, traj.last().r)
            })?;
            if want == StopReason::BlowUp {
                check(traj.r_est.is_some_and(|r| r > traj.last().r), || "R_est missing".into())?;
            }
        }
        counts.push(format!("{tag}: 100/100"));
    }
    Ok(format!("10000 classifications agree; {}", counts.join(", ")))
}

fn stability_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut min_ratio = f64::INFINITY;
    let mut max_re = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let p = random_positive_delta(&mut rng);
        let st = stability(&p).map_err(|e| e.to_string())?;
        let c = st.char_poly;
        check(c.a > 0.0 && c.c > 0.0 && c.a * c.b > 9.0 * c.c && st.stable, || format!("{:?}: {c:?}", p.raw()))?;
        check(st.eigen_real_parts[0] < 0.0, || format!("{:?}: {:?}", p.raw(), st.eigen_real_parts))?;
        min_ratio = min_ratio.min(c.a * c.b / c.c);
        max_re = max_re.max(st.eigen_real_parts[0]);
    }
    Ok(format!("min ab/c = {min_ratio:.3}, max Re(lambda) = {max_re:.3e}"))
}

fn monotone_systems() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..100 {
        let p = random_positive_delta(&mut rng);
        let lo = FlowPoint::new(rng.random_range(0.1..10.0), rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
        let mut bump = || 1.0 + rng.random_range(0.01..0.5);
        let hi = FlowPoint::new(lo.y * bump(), lo.z * bump(), lo.w * bump());
        let a = integrate_flow(&lo, &p, 10.0, 1e-6).map_err(|e| e.to_string())?;
        let b = integrate_flow(&hi, &p, 10.0, 1e-6).map_err(|e| e.to_string())?;
        let ordered = a.points.iter().zip(&b.points).all(|(x, y)| {
            x.to_array()
                .iter()
                .zip(y.to_array())
                .all(|(xi, yi)| *xi < yi || (xi - yi).abs() <= 1e-12 * yi.abs().max(1.0))
        });
        check(ordered, || format!("pair {i}: order lost for {:?}", p.raw()))?;
    }
    let mut worst: f64 = 0.0;
    let mut bounds_checked = 0;
    for _ in 0..10 {
        let p = random_positive_delta(&mut rng);
        let eq = equilibrium(&p).map_err(|e| e.to_string())?;
        let ps = eq.secondary_points.p_star;
        for _ in 0..50 {
            let mut open = |lo: f64, hi: f64| loop {
                let x = rng.random_range(lo..hi);
                if x > lo {
                    break x;
                }
            };
            let start = FlowPoint::new(open(0.0, eq.y_inf), open(ps.z, eq.z_inf), open(ps.w, eq.w_inf));
            let tr = integrate_flow(&start, &p, 100.0, 1e-6).map_err(|e| e.to_string())?;
            let OmegaEstimate::Converged(end) = tr.omega else {
                return Err(format!("{:?} from {start:?}: {:?}", p.raw(), tr.omega));
            };
            let d = end.sup_dist(&eq.point());
            check(d < 1e-6, || format!("{:?} from {start:?}: distance {d:e}", p.raw()))?;
            worst = worst.max(d);
        }
        let (a, b) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        let traj = integrate(&p, a, b, &IntegrationConfig::default()).map_err(|e| e.to_string())?;
        let ex = extract_flow_coordinates(&traj);
        let rep = check_trajectory_bounds(&ex.samples, &p, &eq);
        check(rep.violations == 0, || format!("{:?}: {rep:?}", p.raw()))?;
        bounds_checked += rep.checked;
    }
    Ok(format!(
        "100 ordered pairs kept order; 500 starts reached P_inf (worst {worst:.1e}); {bounds_checked} samples inside bounds"
    ))
}

fn cross_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = common::random_params(&mut rng, 1e-3);
        let (a, b) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        let fp = solve_fixed_point(&p, a, b, 0.1, 1e-12, &PicardOptions::default()).map_err(|e| format!("{:?}: {e}", p.raw()))?;
        let cmp = compare_with_ode(&p, a, b, &fp, &IntegrationConfig::default()).map_err(|e| format!("{:?}: {e}", p.raw()))?;
        check(cmp.sup_norm < 1e-5, || format!("{:?} a={a} b={b}: {cmp:?}", p.raw()))?;
        worst = worst.max(cmp.sup_norm);
    }
    Ok(format!("20 draws, worst sup-norm {worst:.2e}"))
}

fn corollary() -> Outcome {
    let run = single_equation_mode(3, 3.0, 0.5, 1.0, 1.0, &IntegrationConfig::default()).map_err(|e| e.to_string())?;
    let r = &run.report;
    check(r.exponent == 4.0, || format!("exponent {}", r.exponent))?;
    // 1/(Y^1 Z^1.5 W^0.5 X) with Y = 4, Z = W = 8, X = 4.
    let c_hand = 1.0 / (4.0 * 8f64.powf(1.5) * 8f64.sqrt() * 4.0);
    check(rel(c_hand, 1.0 / 1024.0) < 1e-14, || format!("hand constant {c_hand}"))?;
    check(rel(r.constant, 1.0 / 1024.0) < 1e-12, || format!("C = {}", r.constant))?;
    check(r.growth.r_window.1 == 1e6 && r.growth.rel_err_A < 0.01, || format!("{:?}", r.growth))?;
    check(r.max_rel_diff_uv < 1e-8, || format!("u-v gap {}", r.max_rel_diff_uv))?;
    Ok(format!(
        "C={} u/r^4 rel err {:.2e}, max|u-v|/u {:.1e}",
        r.constant, r.growth.rel_err_A, r.max_rel_diff_uv
    ))
}

fn identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let p = random_positive_delta(&mut rng);
        let eq = equilibrium(&p).map_err(|e| e.to_string())?;
        let (n, pp, m, alpha, beta) = (p.nf(), p.p(), p.m(), p.alpha(), p.beta());
        let delta = (pp - 1.0 - alpha) * (pp - 1.0 - beta) - p.q() * m;
        let x_id = 1.0 + (pp * (m + 1.0) - (1.0 + beta)) / delta;
        let e = rel(eq.x_inf, x_id);
        check(e <= 1e-12, || format!("{:?}: X_inf {} vs {x_id}", p.raw(), eq.x_inf))?;
        check(eq.w_inf > n, || format!("{:?}: W_inf {}", p.raw(), eq.w_inf))?;
        check(eq.z_inf > n + alpha / (pp - 1.0 - alpha), || format!("{:?}: Z_inf {}", p.raw(), eq.z_inf))?;
        worst = worst.max(e);
    }
    Ok(format!("10000 draws, worst X_inf relative error {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed-form constants", closed_form),
        ("growth law at r = 1e6", growth_law),
        ("figure 1 curves", figure_one),
        ("blow-up rate", blowup_rate),
        ("regime truth table", regime_truth_table),
        ("stability suite", stability_suite),
        ("monotone-systems properties", monotone_systems),
        ("Picard vs ODE", cross_oracle),
        ("single-equation mode", corollary),
        ("equilibrium identities", identities),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({elapsed:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {why} ({elapsed:.2?})", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Command-line front end.

pub mod config;
pub mod plot;

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::{single_equation_mode, verify_growth, AsymptoticsReport};
use crate::error::{Error, Result};
use crate::flow::{
    check_trajectory_bounds, equilibrium, extract_flow_coordinates, integrate_flow, stability, structure_checks,
    FlowPoint, OmegaEstimate, SampleBox,
};
use crate::params::{classify_raw, derive, validate, RawParams, Regime, SystemParams};
use crate::picard::{compare_with_ode, solve_fixed_point, PicardOptions};
use crate::radial::{
    estimate_blowup, integrate, integrate_trajectory, IntegrationConfig, RadialTrajectory, SampleGrid, StopReason,
};
use config::Settings;
use plot::{Panel, Series};

#[derive(Parser, Debug)]
#[command(
    name = "pradial",
    version,
    about = "Radial solutions of Δp u = v^m |∇u|^α, Δp v = v^β |∇u|^q"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Shared flags. Each also reads `PRADIAL_<NAME>` from the environment;
/// parameter flags take lists and `start:stop:step` ranges in `sweep`.
#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    #[arg(long = "N", global = true, env = "PRADIAL_N", value_name = "N")]
    pub n: Option<String>,
    #[arg(long, global = true, env = "PRADIAL_P")]
    pub p: Option<String>,
    #[arg(long, global = true, env = "PRADIAL_M")]
    pub m: Option<String>,
    #[arg(long, global = true, env = "PRADIAL_Q")]
    pub q: Option<String>,
    #[arg(long, global = true, env = "PRADIAL_ALPHA")]
    pub alpha: Option<String>,
    #[arg(long, global = true, env = "PRADIAL_BETA")]
    pub beta: Option<String>,
    /// u(0)
    #[arg(long, global = true, env = "PRADIAL_A")]
    pub a: Option<String>,
    /// v(0)
    #[arg(long, global = true, env = "PRADIAL_B")]
    pub b: Option<String>,
    #[arg(long, global = true, env = "PRADIAL_R0")]
    pub r0: Option<String>,
    #[arg(long, global = true, env = "PRADIAL_RMAX")]
    pub rmax: Option<String>,
    #[arg(long, global = true, env = "PRADIAL_RTOL")]
    pub rtol: Option<String>,
    #[arg(long, global = true, env = "PRADIAL_ATOL")]
    pub atol: Option<String>,
    /// Blow-up cap on z and v.
    #[arg(long, global = true, env = "PRADIAL_CAP")]
    pub cap: Option<String>,
    /// Output directory.
    #[arg(long, global = true, env = "PRADIAL_OUT")]
    pub out: Option<String>,
    #[arg(long, global = true, env = "PRADIAL_SEED")]
    pub seed: Option<String>,
    #[arg(long, global = true, env = "PRADIAL_WORKERS")]
    pub workers: Option<String>,
    /// INI file; flags and environment take precedence over it.
    #[arg(long, global = true, env = "PRADIAL_CONFIG")]
    pub config: Option<PathBuf>,
}

impl CommonArgs {
    fn pairs(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("N", self.n.clone()),
            ("p", self.p.clone()),
            ("m", self.m.clone()),
            ("q", self.q.clone()),
            ("alpha", self.alpha.clone()),
            ("beta", self.beta.clone()),
            ("a", self.a.clone()),
            ("b", self.b.clone()),
            ("r0", self.r0.clone()),
            ("rmax", self.rmax.clone()),
            ("rtol", self.rtol.clone()),
            ("atol", self.atol.clone()),
            ("cap", self.cap.clone()),
            ("out", self.out.clone()),
            ("seed", self.seed.clone()),
            ("workers", self.workers.clone()),
        ]
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the regime as JSON.
    Classify,
    /// Integrate one radial solution; writes trajectory.csv and solve.json.
    Solve,
    /// Equilibrium, stability and flow coordinates; writes flow.csv and flow.json.
    Flow {
        /// Horizon for the random starts.
        #[arg(long, default_value_t = 100.0)]
        tmax: f64,
        /// Number of random starts between P* and P∞.
        #[arg(long, default_value_t = 10)]
        starts: usize,
    },
    /// Growth constants of a global solution; writes asymptotics.json.
    Asymptotics,
    /// Fixed-point solution near the origin and its distance to the ODE.
    Picard {
        #[arg(long, default_value_t = 0.1)]
        rho: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 1024)]
        nodes: usize,
    },
    /// Δp u = u^m |∇u|^q through the system with α = q, β = m, v(0) = u(0).
    SingleEq,
    /// One summary row per point of the parameter grid; writes sweep.csv.
    Sweep,
    /// Curves for N = 3, 10, 30, 60 on [0, 500]; writes figure1.csv and figure1.svg.
    Figure1,
}

/// Exit code for an error: 2 for bad input, 3 for solver failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::DomainViolation(_)
        | Error::NearDegenerate(_)
        | Error::DeltaZero
        | Error::DegenerateAlpha => 2,
        _ => 3,
    }
}

fn error_json(kind: &str, message: &str) -> String {
    json!({"error": {"kind": kind, "message": message}}).to_string()
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            eprintln!("{}", error_json("Config", e.to_string().trim()));
            return 2;
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            exit_code(&e)
        }
    }
}

/// Runs a parsed command and returns the JSON printed on success.
pub fn execute(cli: &Cli) -> Result<Value> {
    let mut settings = Settings::from_sources(&cli.common.pairs(), cli.common.config.as_deref())?;
    match &cli.command {
        Command::Classify => cmd_classify(&settings),
        Command::Solve => cmd_solve(&settings),
        Command::Flow { tmax, starts } => cmd_flow(&settings, *tmax, *starts),
        Command::Asymptotics => cmd_asymptotics(&settings),
        Command::Picard { rho, tol, nodes } => cmd_picard(&settings, *rho, *tol, *nodes),
        Command::SingleEq => cmd_single_eq(&settings),
        Command::Sweep => cmd_sweep(&settings),
        Command::Figure1 => {
            for (k, v) in [("N", "3,10,30,60"), ("p", "10"), ("m", "2"), ("q", "4"), ("alpha", "1"), ("beta", "1"), ("rmax", "500")] {
                settings.set_default(k, v);
            }
            cmd_figure1(&settings)
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn write_with<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
{
    let mut f = create(path)?;
    body(&mut f)?;
    f.flush()?;
    Ok(())
}

fn cmd_classify(s: &Settings) -> Result<Value> {
    let regime: Regime = classify_raw(s.params()?)?;
    Ok(to_value(&regime))
}

#[derive(Debug, Serialize)]
struct SolveReport {
    params: RawParams,
    initial: (f64, f64),
    derived: crate::params::DerivedConstants,
    regime: Regime,
    stop: StopReason,
    r_est: Option<f64>,
    blowup_fit: Option<crate::radial::BlowupFit>,
    r_last: f64,
    u_last: f64,
    v_last: f64,
    monitors: Vec<crate::radial::MonitorRecord>,
    samples: usize,
    accepted_steps: usize,
    rejected_steps: usize,
}

fn solve_report(params: &SystemParams, traj: &RadialTrajectory) -> SolveReport {
    let derived = derive(params);
    let last = traj.last();
    SolveReport {
        params: params.raw(),
        initial: traj.initial,
        derived,
        regime: Regime::from_tag(derived.regime),
        stop: traj.stop,
        r_est: traj.r_est,
        blowup_fit: estimate_blowup(traj, &derived).ok(),
        r_last: last.r,
        u_last: last.u,
        v_last: last.v,
        monitors: traj.monitors.clone(),
        samples: traj.samples.len(),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
    }
}

fn cmd_solve(s: &Settings) -> Result<Value> {
    let params = validate(s.params()?)?;
    let (a, b) = s.initial()?;
    let cfg = s.integration()?;
    let out = s.out_dir();
    prepare_out(&out)?;
    let traj = integrate_trajectory(&params, a, b, &cfg)?;
    write_with(&out.join("trajectory.csv"), |f| traj.write_csv(f))?;
    let report = to_value(&solve_report(&params, &traj));
    write_json(&out.join("solve.json"), &report)?;
    traj.into_result()?;
    Ok(report)
}

#[derive(Debug, Serialize)]
struct StartResult {
    start: FlowPoint,
    omega: OmegaEstimate,
    distance_to_p_inf: f64,
}

fn cmd_flow(s: &Settings, tmax: f64, starts: usize) -> Result<Value> {
    let params = validate(s.params()?)?;
    let (a, b) = s.initial()?;
    let cfg = IntegrationConfig {
        abort_on_monitor: false,
        ..s.integration()?
    };
    let out = s.out_dir();
    prepare_out(&out)?;
    let traj = integrate(&params, a, b, &cfg)?;
    let ex = extract_flow_coordinates(&traj);
    write_with(&out.join("flow.csv"), |f| ex.write_csv(f))?;

    let mut report = json!({
        "params": params.raw(),
        "stop": traj.stop,
        "residual": ex.residual,
    });
    if params.delta() > 0.0 && params.alpha_below_threshold() {
        let eq = equilibrium(&params)?;
        let st = stability(&params)?;
        let ps = eq.secondary_points.p_star;
        let sample_box = SampleBox {
            lo: FlowPoint::new(1e-3 * eq.y_inf, ps.z, ps.w),
            hi: FlowPoint::new(2.0 * eq.y_inf, 2.0 * eq.z_inf, 2.0 * eq.w_inf),
            per_axis: 5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed()?);
        let mut results = Vec::with_capacity(starts);
        for _ in 0..starts {
            let mut pick = |lo: f64, hi: f64| loop {
                let x = rng.random_range(lo..hi);
                if x > lo {
                    break x;
                }
            };
            let start = FlowPoint::new(pick(0.0, eq.y_inf), pick(ps.z, eq.z_inf), pick(ps.w, eq.w_inf));
            let tr = integrate_flow(&start, &params, tmax, 1e-8)?;
            results.push(StartResult {
                start,
                omega: tr.omega,
                distance_to_p_inf: tr.last().sup_dist(&eq.point()),
            });
        }
        report["equilibrium"] = to_value(&eq);
        report["stability"] = to_value(&st);
        report["structure"] = to_value(&structure_checks(&params, &sample_box));
        report["sample_box"] = to_value(&sample_box);
        report["bounds"] = to_value(&check_trajectory_bounds(&ex.samples, &params, &eq));
        report["seed"] = json!(s.seed()?);
        report["starts"] = to_value(&results);
    } else {
        report["equilibrium"] = Value::Null;
    }
    write_json(&out.join("flow.json"), &report)?;
    Ok(report)
}

fn cmd_asymptotics(s: &Settings) -> Result<Value> {
    let params = validate(s.params()?)?;
    let (a, b) = s.initial()?;
    let cfg = s.integration()?;
    let out = s.out_dir();
    prepare_out(&out)?;
    let eq = equilibrium(&params).map_err(|e| match e {
        Error::DeltaNotPositive(d) => Error::RegimeMismatch(format!("growth laws need delta > 0, got {d}")),
        e => e,
    })?;
    let traj = integrate(&params, a, b, &cfg)?;
    let report: AsymptoticsReport = verify_growth(&traj, &eq)?;
    let value = to_value(&report);
    write_json(&out.join("asymptotics.json"), &value)?;
    Ok(value)
}

fn cmd_picard(s: &Settings, rho: f64, tol: f64, nodes: usize) -> Result<Value> {
    let params = validate(s.params()?)?;
    let (a, b) = s.initial()?;
    let cfg = s.integration()?;
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive, got {tol}")));
    }
    let out = s.out_dir();
    prepare_out(&out)?;
    let opts = PicardOptions {
        nodes,
        ..PicardOptions::default()
    };
    let fp = solve_fixed_point(&params, a, b, rho, tol, &opts)?;
    write_with(&out.join("picard.csv"), |f| fp.pair.write_csv(f))?;
    let cmp = compare_with_ode(&params, a, b, &fp, &cfg)?;
    let report = json!({
        "params": params.raw(),
        "initial": (a, b),
        "rho": fp.pair.rho,
        "nodes": fp.pair.len(),
        "iterations": fp.iterations,
        "halvings": fp.halvings,
        "last_change": fp.last_change,
        "comparison": cmp,
    });
    write_json(&out.join("picard.json"), &report)?;
    Ok(report)
}

fn cmd_single_eq(s: &Settings) -> Result<Value> {
    let n = s.f64_req("N")?;
    if n.fract() != 0.0 || n < 0.0 {
        return Err(Error::Config(format!("N must be an integer, got {n}")));
    }
    let (p, m, q) = (s.f64_req("p")?, s.f64_req("m")?, s.f64_req("q")?);
    let a = s.f64_or("a", 1.0)?;
    let cfg = s.integration()?;
    let out = s.out_dir();
    prepare_out(&out)?;
    let run = single_equation_mode(n as u32, p, m, q, a, &cfg)?;
    write_with(&out.join("single_eq.csv"), |f| run.trajectory.write_csv(f))?;
    let value = to_value(&run.report);
    write_json(&out.join("single_eq.json"), &value)?;
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub params: RawParams,
    pub delta: f64,
    pub sigma: Option<f64>,
    pub regime: String,
    pub stop: Option<StopReason>,
    pub r_est: Option<f64>,
    pub a_pred: Option<f64>,
    pub b_pred: Option<f64>,
}

pub const SWEEP_HEADER: &str = "N,p,m,q,alpha,beta,delta,sigma,regime,stop,R_est,A_pred,B_pred";

impl SweepRow {
    pub fn csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        let r = &self.params;
        format!(
            "{},{},{},{},{},{},{:e},{},{},{},{},{},{}",
            r.n,
            r.p,
            r.m,
            r.q,
            r.alpha,
            r.beta,
            self.delta,
            opt(self.sigma),
            self.regime,
            self.stop.map(|s| format!("{s:?}")).unwrap_or_default(),
            opt(self.r_est),
            opt(self.a_pred),
            opt(self.b_pred),
        )
    }
}

/// Classifies and integrates one grid point; failures become row content.
pub fn sweep_row(raw: RawParams, a: f64, b: f64, cfg: &IntegrationConfig) -> SweepRow {
    let delta = (raw.p - 1.0 - raw.alpha) * (raw.p - 1.0 - raw.beta) - raw.q * raw.m;
    let mut row = SweepRow {
        params: raw,
        delta,
        sigma: None,
        regime: String::new(),
        stop: None,
        r_est: None,
        a_pred: None,
        b_pred: None,
    };
    let params = match validate(raw) {
        Ok(p) => p,
        Err(e) => {
            row.regime = match classify_raw(raw) {
                Ok(reg) => reg.tag.as_str().to_string(),
                Err(_) => e.kind().to_string(),
            };
            return row;
        }
    };
    let d = derive(&params);
    row.sigma = d.sigma;
    row.regime = d.regime.as_str().to_string();
    if let Ok(eq) = equilibrium(&params) {
        row.a_pred = Some(eq.growth_u);
        row.b_pred = Some(eq.growth_v);
    }
    if params.alpha_below_threshold() {
        if let Ok(traj) = integrate_trajectory(&params, a, b, cfg) {
            row.stop = Some(traj.stop);
            row.r_est = traj.r_est;
        }
    }
    row
}

fn cmd_sweep(s: &Settings) -> Result<Value> {
    let grid = s.param_grid()?;
    let (a, b) = s.initial()?;
    let cfg = s.integration()?;
    let workers = s.workers()?;
    let out = s.out_dir();
    prepare_out(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| grid.par_iter().map(|raw| sweep_row(*raw, a, b, &cfg)).collect());
    let path = out.join("sweep.csv");
    write_with(&path, |f| {
        writeln!(f, "{SWEEP_HEADER}")?;
        for row in &rows {
            writeln!(f, "{}", row.csv())?;
        }
        Ok(())
    })?;
    Ok(json!({"rows": rows.len(), "csv": path.display().to_string()}))
}

#[derive(Debug, Serialize)]
struct CurveSummary {
    #[serde(rename = "N")]
    n: u32,
    u_end: f64,
    v_end: f64,
    monotone: bool,
}

fn cmd_figure1(s: &Settings) -> Result<Value> {
    let dims: Vec<u32> = s
        .spec("N")?
        .unwrap_or_default()
        .into_iter()
        .map(|n| {
            if n.fract() == 0.0 && n >= 0.0 {
                Ok(n as u32)
            } else {
                Err(Error::Config(format!("N must be an integer, got {n}")))
            }
        })
        .collect::<Result<_>>()?;
    let base = RawParams {
        n: dims.first().copied().unwrap_or(3),
        p: s.f64_req("p")?,
        m: s.f64_req("m")?,
        q: s.f64_req("q")?,
        alpha: s.f64_req("alpha")?,
        beta: s.f64_req("beta")?,
    };
    let (a, b) = s.initial()?;
    let cfg0 = s.integration()?;
    let r_end = cfg0.r_max;
    let n_rows = 500usize;
    let radii: Vec<f64> = (1..=n_rows).map(|i| r_end * i as f64 / n_rows as f64).collect();
    let cfg = IntegrationConfig {
        grid: SampleGrid::Radii(radii.clone()),
        ..cfg0
    };
    let out = s.out_dir();
    prepare_out(&out)?;

    let curves: Vec<(u32, Vec<f64>, Vec<f64>)> = dims
        .par_iter()
        .map(|&n| {
            let params = validate(RawParams { n, ..base })?;
            let traj = integrate(&params, a, b, &cfg)?;
            if traj.stop != StopReason::ReachedRMax || traj.samples.len() != n_rows + 1 {
                return Err(Error::RegimeMismatch(format!("N = {n} did not reach r = {r_end}")));
            }
            let mut us = vec![a];
            let mut vs = vec![b];
            us.extend(traj.samples[1..].iter().map(|st| st.u));
            vs.extend(traj.samples[1..].iter().map(|st| st.v));
            Ok((n, us, vs))
        })
        .collect::<Result<_>>()?;

    let mut rs = vec![0.0];
    rs.extend(&radii);
    write_with(&out.join("figure1.csv"), |f| {
        let header: Vec<String> = curves.iter().flat_map(|(n, _, _)| [format!("u_N{n}"), format!("v_N{n}")]).collect();
        writeln!(f, "r,{}", header.join(","))?;
        for (i, r) in rs.iter().enumerate() {
            write!(f, "{r:.16e}")?;
            for (_, us, vs) in &curves {
                write!(f, ",{:.16e},{:.16e}", us[i], vs[i])?;
            }
            writeln!(f)?;
        }
        Ok(())
    })?;

    let panel = |title: &str, pick: fn(&(u32, Vec<f64>, Vec<f64>)) -> &Vec<f64>| Panel {
        title: title.into(),
        x_label: "r".into(),
        y_label: title.into(),
        series: curves
            .iter()
            .map(|c| Series {
                label: format!("N = {}", c.0),
                xs: &rs,
                ys: pick(c),
            })
            .collect(),
    };
    let svg = plot::render(&[panel("u", |c| &c.1), panel("v", |c| &c.2)]);
    fs::write(out.join("figure1.svg"), svg).map_err(|e| Error::Io(e.to_string()))?;

    let increasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] > w[0]);
    let summary: Vec<CurveSummary> = curves
        .iter()
        .map(|(n, us, vs)| CurveSummary {
            n: *n,
            u_end: *us.last().unwrap(),
            v_end: *vs.last().unwrap(),
            monotone: increasing(us) && increasing(vs),
        })
        .collect();
    let decreasing_in_n = summary
        .windows(2)
        .all(|w| w[1].u_end < w[0].u_end && w[1].v_end < w[0].v_end);
    let report = json!({
        "params": base,
        "initial": (a, b),
        "r_end": r_end,
        "curves": summary,
        "decreasing_in_N": decreasing_in_n,
    });
    write_json(&out.join("figure1.json"), &report)?;
    Ok(report)
}

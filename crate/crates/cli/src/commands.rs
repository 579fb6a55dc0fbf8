use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use fellerstar::analytic::{potential_local_time, resolvent_full, walsh_density};
use fellerstar::config::{hash_json, parse_point, GSpec, RunConfig};
use fellerstar::graph::Status;
use fellerstar::montecarlo::{
    convergence_study, estimate_exit_stats, estimate_potential, estimate_resolvent, sample_states, Estimate, McSettings,
    Rungs, Statistic,
};
use fellerstar::process::{simulate_concatenation, simulate_full, SimOptions, Trajectory};
use fellerstar::quadrature::Quad;
use fellerstar::sampler::{Discretization, Seed};
use fellerstar::{BoundaryParams, Error, GraphPoint, JumpMeasure};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Command, Common, Construction, RungChoice, Source, StatisticKind, Steps};

pub const SEED_ENV: &str = "FELLERSTAR_SEED";
const DEFAULT_SEED: u64 = 1;
/// Beyond this many standard errors an estimate counts as out of band.
const Z_BAND: f64 = 4.0;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Csv(_) => 1,
            Error::Config(_) | Error::Params(_) | Error::Invalid(_) | Error::Horizon { .. } => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct Provenance {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_hash: String,
    seed: Option<u64>,
}

impl Provenance {
    fn new(command: &'static str, config_hash: String, seed: Option<u64>) -> Self {
        Provenance { tool: "fellerstar", version: env!("CARGO_PKG_VERSION"), command, config_hash, seed }
    }

    fn csv_header(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!("# {} {} command={} config={} seed={}\n", self.tool, self.version, self.command, self.config_hash, seed)
    }
}

pub fn run(command: &Command) -> Outcome {
    match command {
        Command::Validate(source) => validate(source),
        Command::Simulate(a) => simulate(a),
        Command::Resolvent(a) => resolvent(a),
        Command::Potential(a) => potential(a),
        Command::Density(a) => density(a),
        Command::Exitstats(a) => exitstats(a),
        Command::Converge(a) => converge(a),
    }
}

fn load(source: &Source) -> Result<RunConfig, Failure> {
    match (&source.config, &source.beta) {
        (Some(path), _) => Ok(RunConfig::load(path)?),
        (None, Some(beta)) => Ok(RunConfig::from_params(&BoundaryParams::walsh(beta.clone()))),
        (None, None) => Err(Failure::invalid("give --config FILE or --beta W1,W2,...")),
    }
}

fn master_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Ok(v) = std::env::var(SEED_ENV) {
        return v.trim().parse().map_err(|_| Failure::invalid(format!("{SEED_ENV}={v} is not an unsigned integer")));
    }
    Ok(config.unwrap_or(DEFAULT_SEED))
}

/// Parameters that pass validation; `simulate` additionally rules out
/// parameters that only the analytic side handles.
fn checked_params(cfg: &RunConfig, simulate: bool) -> Result<BoundaryParams, Failure> {
    let params = cfg.params();
    let v = params.validate();
    match v.status {
        Status::Invalid => Err(Failure::invalid(format!("invalid parameters: {}", v.reasons.join("; ")))),
        Status::AnalyticOnly if simulate => {
            Err(Failure::invalid(format!("parameters can only be evaluated analytically: {}", v.reasons.join("; "))))
        }
        _ => Ok(params),
    }
}

fn quad(cfg: &RunConfig) -> Quad {
    cfg.settings.quad_tol.map_or_else(Quad::default, Quad::with_tol)
}

fn lambda_of(flag: Option<f64>, cfg: &RunConfig) -> Result<f64, Failure> {
    let lambda = flag.or(cfg.settings.lambda).unwrap_or(1.0);
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Failure::invalid(format!("lambda = {lambda} must be positive")));
    }
    Ok(lambda)
}

fn truncation(steps: &Steps, cfg: &RunConfig, params: &BoundaryParams) -> Result<Option<f64>, Failure> {
    let eps = steps.eps.or(cfg.settings.eps);
    if params.has_infinite_mass() && eps.is_none() {
        return Err(Failure::invalid("the jump measure is infinite; give a truncation level with --eps"));
    }
    Ok(eps)
}

fn with_steps(mut disc: Discretization, steps: &Steps, cfg: &RunConfig) -> Discretization {
    if let Some(dt) = steps.dt.or(cfg.settings.dt) {
        disc.dt = dt;
    }
    if let Some(m) = steps.dt_max.or(cfg.settings.dt_max) {
        disc.dt_max = m;
        disc.dt_cap = disc.dt_cap.max(m);
    }
    disc
}

fn mc_settings(lambda: f64, paths: Option<usize>, steps: &Steps, cfg: &RunConfig, params: &BoundaryParams, seed: u64) -> Result<McSettings, Failure> {
    let n = paths.or(cfg.settings.n).unwrap_or(10_000);
    let mut s = McSettings::discounted(lambda, n, seed);
    s.disc = with_steps(s.disc, steps, cfg);
    if let Some(h) = cfg.settings.horizon {
        s.horizon = h;
    }
    if let Some(eps) = truncation(steps, cfg, params)? {
        s = s.with_eps(eps);
    }
    Ok(s)
}

fn write_out(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => File::create(p)?.write_all(text.as_bytes())?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_json(common: &Common, v: &Value) -> Outcome {
    let mut text = serde_json::to_string_pretty(v).expect("report serializes");
    text.push('\n');
    write_out(common.out.as_deref(), &text)
}

fn out_of_band(estimates: &[&Estimate]) -> Outcome {
    for e in estimates {
        if let Some(z) = e.z {
            if z.abs() > Z_BAND {
                return Err(Failure { code: 3, message: format!("{}: z = {z:.2} is beyond {Z_BAND} standard errors", e.statistic) });
            }
        }
    }
    Ok(())
}

fn validate(source: &Source) -> Outcome {
    let cfg = load(source)?;
    let v = cfg.params().validate();
    let report = json!({
        "provenance": Provenance::new("validate", cfg.hash(), None),
        "status": v.status,
        "reasons": v.reasons,
        "transient": v.transient,
    });
    write_json(&Common { seed: None, out: None }, &report)?;
    if v.status == Status::Invalid {
        return Err(Failure::invalid("parameters are invalid"));
    }
    Ok(())
}

fn simulate(a: &crate::SimulateArgs) -> Outcome {
    let cfg = load(&a.source)?;
    let params = checked_params(&cfg, true)?;
    let seed = master_seed(a.common.seed, cfg.settings.seed)?;
    let x0 = parse_point(&a.x0)?;
    let horizon = a.horizon.or(cfg.settings.horizon).unwrap_or(1.0);
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Failure::invalid(format!("horizon = {horizon}")));
    }
    if !(a.out_dt > 0.0) {
        return Err(Failure::invalid(format!("out-dt = {}", a.out_dt)));
    }
    let disc = with_steps(Discretization::adaptive(1e-4, 1e-2, 5.0), &a.steps, &cfg).with_output(a.out_dt);
    let mut opts = SimOptions::new(horizon, disc);
    if let Some(eps) = truncation(&a.steps, &cfg, &params)? {
        opts = opts.with_eps(eps);
    }
    let paths: Vec<Trajectory> = (0..a.paths as u64)
        .into_par_iter()
        .map(|p| {
            let s = Seed(seed).child("path", p);
            match a.construction {
                Construction::Full => simulate_full(&params, &opts, x0, s),
                Construction::Concat => simulate_concatenation(&params, &opts, x0, s),
            }
        })
        .collect::<fellerstar::Result<_>>()?;

    let mut buf = Provenance::new("simulate", cfg.hash(), Some(seed)).csv_header().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["path", "t", "state", "edge", "x", "local_time"]).map_err(Error::from)?;
        for (p, traj) in paths.iter().enumerate() {
            for ((t, s), k) in traj.times.iter().zip(&traj.states).zip(&traj.local_time) {
                let (name, edge, x) = match *s {
                    GraphPoint::Center => ("center", String::new(), "0".to_string()),
                    GraphPoint::Edge { edge, x } => ("edge", edge.to_string(), x.to_string()),
                    GraphPoint::Infinity { edge } => ("infinity", edge.to_string(), "inf".to_string()),
                    GraphPoint::Cemetery => ("cemetery", String::new(), String::new()),
                };
                w.write_record([p.to_string(), t.to_string(), name.to_string(), edge, x, k.to_string()]).map_err(Error::from)?;
            }
        }
        w.flush()?;
    }
    write_out(a.common.out.as_deref(), &String::from_utf8(buf).expect("csv is utf-8"))
}

fn g_spec(flag: Option<&str>, cfg: &RunConfig) -> Result<GSpec, Failure> {
    Ok(match flag {
        Some(s) => GSpec::parse(s)?,
        None => cfg.g.clone().unwrap_or(GSpec::ExpDecay { rates: None }),
    })
}

fn resolvent(a: &crate::ResolventArgs) -> Outcome {
    let cfg = load(&a.source)?;
    let params = checked_params(&cfg, a.mc.mc)?;
    let lambda = lambda_of(a.lambda, &cfg)?;
    let x = parse_point(&a.x)?;
    let spec = g_spec(a.g.as_deref(), &cfg)?;
    let g = spec.build(params.k())?;
    let analytic = resolvent_full(&params, lambda, &g, x, &quad(&cfg))?;
    let (seed, estimate) = if a.mc.mc {
        let seed = master_seed(a.common.seed, cfg.settings.seed)?;
        let s = mc_settings(lambda, a.mc.paths, &a.steps, &cfg, &params, seed)?;
        (Some(seed), Some(estimate_resolvent(&params, lambda, &g, x, &s)?))
    } else {
        (None, None)
    };
    let report = json!({
        "provenance": Provenance::new("resolvent", cfg.hash(), seed),
        "lambda": lambda,
        "x": x,
        "g": spec,
        "analytic": analytic,
        "estimate": estimate,
    });
    write_json(&a.common, &report)?;
    out_of_band(&estimate.iter().collect::<Vec<_>>())
}

fn potential(a: &crate::PotentialArgs) -> Outcome {
    let cfg = load(&a.source)?;
    let params = checked_params(&cfg, a.mc.mc)?;
    let lambda = lambda_of(a.lambda, &cfg)?;
    let x = parse_point(&a.x)?;
    let analytic = potential_local_time(&params, lambda, x, &quad(&cfg))?;
    let (seed, estimate) = if a.mc.mc {
        let seed = master_seed(a.common.seed, cfg.settings.seed)?;
        let s = mc_settings(lambda, a.mc.paths, &a.steps, &cfg, &params, seed)?;
        (Some(seed), Some(estimate_potential(&params, lambda, x, &s)?))
    } else {
        (None, None)
    };
    let report = json!({
        "provenance": Provenance::new("potential", cfg.hash(), seed),
        "lambda": lambda,
        "x": x,
        "analytic": analytic,
        "estimate": estimate,
    });
    write_json(&a.common, &report)?;
    out_of_band(&estimate.iter().collect::<Vec<_>>())
}

fn density(a: &crate::DensityArgs) -> Outcome {
    let cfg = load(&a.source)?;
    let params = checked_params(&cfg, a.paths > 0)?;
    if params.alpha != 0.0 || params.gamma != 0.0 || params.m != JumpMeasure::Zero {
        return Err(Failure::invalid("the density formula covers the Walsh case only (alpha = gamma = 0, no jumps)"));
    }
    if a.edge >= params.k() || !(a.t > 0.0) || !(a.ymax > 0.0) || a.bins == 0 {
        return Err(Failure::invalid(format!("edge {}, t {}, ymax {}, bins {}", a.edge, a.t, a.ymax, a.bins)));
    }
    let beta = params.normalize()?.beta;
    let from = parse_point(&a.from)?;
    let width = a.ymax / a.bins as f64;
    let (seed, hist) = if a.paths > 0 {
        let seed = master_seed(a.common.seed, cfg.settings.seed)?;
        let s = McSettings::new(a.paths, a.t, Discretization::adaptive(1e-4, 1e-2, 5.0).with_output(0.01), seed);
        let mut counts = vec![0u64; a.bins];
        for st in sample_states(&params, a.t, from, &s)? {
            if let GraphPoint::Edge { edge, x } = st {
                if edge == a.edge && x < a.ymax {
                    counts[((x / width) as usize).min(a.bins - 1)] += 1;
                }
            }
        }
        (Some(seed), Some(counts))
    } else {
        (None, None)
    };
    let mut text = Provenance::new("density", cfg.hash(), seed).csv_header();
    text.push_str("y,density,empirical\n");
    for b in 0..a.bins {
        let y = (b as f64 + 0.5) * width;
        let d = walsh_density(&beta, a.t, from, a.edge, y);
        let emp = hist.as_ref().map_or(String::new(), |h| (h[b] as f64 / (a.paths as f64 * width)).to_string());
        text.push_str(&format!("{y},{d},{emp}\n"));
    }
    write_out(a.common.out.as_deref(), &text)
}

fn exitstats(a: &crate::ExitArgs) -> Outcome {
    let inputs = json!({"alpha": a.alpha, "gamma": a.gamma, "eps": a.eps, "paths": a.paths, "dt": a.dt});
    let seed = master_seed(a.common.seed, None)?;
    let stats = estimate_exit_stats(a.alpha, a.gamma, a.eps, a.paths, a.dt, seed)?;
    let report = json!({
        "provenance": Provenance::new("exitstats", hash_json(&inputs), Some(seed)),
        "inputs": inputs,
        "tau": stats.tau,
        "discount": stats.discount,
    });
    write_json(&a.common, &report)?;
    out_of_band(&[&stats.tau, &stats.discount])
}

fn converge(a: &crate::ConvergeArgs) -> Outcome {
    let cfg = load(&a.source)?;
    let params = checked_params(&cfg, a.mc != RungChoice::None)?;
    let lambda = lambda_of(a.lambda, &cfg)?;
    let x = parse_point(&a.x)?;
    let statistic = match a.statistic {
        StatisticKind::Resolvent => Statistic::Resolvent { lambda, g: g_spec(a.g.as_deref(), &cfg)?.build(params.k())? },
        StatisticKind::Potential => Statistic::Potential { lambda },
    };
    let rungs = match a.mc {
        RungChoice::None => Rungs::None,
        RungChoice::Last => Rungs::Last,
        RungChoice::All => Rungs::All,
    };
    let seed = master_seed(a.common.seed, cfg.settings.seed)?;
    let n = a.paths.or(cfg.settings.n).unwrap_or(10_000);
    let settings = McSettings::discounted(lambda, n, seed);
    let (reference, table) = convergence_study(&params, &a.ladder, &statistic, x, &settings, rungs)?;
    let report = json!({
        "provenance": Provenance::new("converge", cfg.hash(), (rungs != Rungs::None).then_some(seed)),
        "lambda": lambda,
        "x": x,
        "reference": reference,
        "rungs": table,
    });
    write_json(&a.common, &report)?;
    // Earlier rungs simulate a different law; only the finest one is held to the band.
    let last: Vec<&Estimate> = table.last().and_then(|r| r.estimate.as_ref()).into_iter().collect();
    out_of_band(&last)
}

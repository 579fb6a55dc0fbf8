//! Monte Carlo estimators checked against the analytic formulas.
//!
//! Paths are simulated in parallel, path `p` from `Seed(seed).child("path", p)`,
//! and reduced in path order, so results do not depend on the thread count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{measure_i1, potential_local_time, resolvent_full, EdgeFunction};
use crate::error::{Error, Result};
use crate::graph::{BoundaryParams, GraphPoint};
use crate::process::{simulate_full, SimOptions, Trajectory};
use crate::quadrature::Quad;
use crate::sampler::{Discretization, Seed};
use crate::stats::{chi_square_gof, ks_one_sample, mean_se, TestResult};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McSettings {
    pub n: usize,
    pub horizon: f64,
    pub disc: Discretization,
    /// Truncation level for infinite jump measures.
    pub eps: Option<f64>,
    pub seed: u64,
}

impl McSettings {
    pub fn new(n: usize, horizon: f64, disc: Discretization, seed: u64) -> Self {
        McSettings { n, horizon, disc, eps: None, seed }
    }

    /// Defaults for functionals discounted at rate `lambda`: horizon
    /// `20 / lambda`, steps between `1e-4` and `1e-2` that coarsen with the
    /// discount.
    pub fn discounted(lambda: f64, n: usize, seed: u64) -> Self {
        let disc = Discretization::adaptive(1e-4, 1e-2, 5.0).discounted(lambda, 0.25).with_output(0.01);
        McSettings::new(n, 20.0 / lambda, disc, seed)
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn options(&self) -> SimOptions {
        SimOptions { horizon: self.horizon, disc: self.disc, eps: self.eps }
    }

    fn path_seed(&self, p: usize) -> Seed {
        Seed(self.seed).child("path", p as u64)
    }

    /// The law actually simulated: truncated when the jump measure is infinite.
    pub fn simulated_law(&self, params: &BoundaryParams) -> Result<BoundaryParams> {
        if !params.has_infinite_mass() {
            return Ok(params.clone());
        }
        let e = self.eps.ok_or_else(|| Error::Invalid("an infinite jump measure needs a truncation level".into()))?;
        Ok(params.truncated(e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub statistic: String,
    pub settings: McSettings,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    pub reference: Option<f64>,
    pub z: Option<f64>,
}

impl Estimate {
    pub fn from_samples(statistic: impl Into<String>, settings: &McSettings, samples: &[f64]) -> Self {
        let (mean, se) = mean_se(samples);
        Estimate { statistic: statistic.into(), settings: settings.clone(), mean, se, n: samples.len(), reference: None, z: None }
    }

    pub fn with_reference(mut self, reference: f64) -> Self {
        let diff = self.mean - reference;
        self.reference = Some(reference);
        self.z = Some(if diff == 0.0 { 0.0 } else { diff / self.se });
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }
}

/// One value per path, in path order.
pub fn sample_paths<F>(settings: &McSettings, f: F) -> Result<Vec<f64>>
where
    F: Fn(Seed) -> Result<f64> + Sync,
{
    (0..settings.n).into_par_iter().map(|p| f(settings.path_seed(p))).collect()
}

/// Trapezoid rule for `int e^{-lambda t} g(X_t) dt` on the output grid.
pub fn discounted_integral(traj: &Trajectory, lambda: f64, g: &EdgeFunction) -> f64 {
    let f = |j: usize| (-lambda * traj.times[j]).exp() * g.eval(traj.states[j]);
    let mut acc = 0.0;
    let mut prev = f(0);
    for j in 1..traj.len() {
        let cur = f(j);
        acc += 0.5 * (traj.times[j] - traj.times[j - 1]) * (prev + cur);
        prev = cur;
    }
    acc
}

/// `sum_j (e^{-lambda t_{j-1}} + e^{-lambda t_j}) / 2 (K_j - K_{j-1})`.
pub fn discounted_local_time(traj: &Trajectory, lambda: f64) -> f64 {
    let mut acc = 0.0;
    for j in 1..traj.len() {
        let w = 0.5 * ((-lambda * traj.times[j - 1]).exp() + (-lambda * traj.times[j]).exp());
        acc += w * (traj.local_time[j] - traj.local_time[j - 1]);
    }
    acc
}

fn check_discount(lambda: f64, settings: &McSettings) -> Result<()> {
    if !(lambda > 0.0) {
        return Err(Error::Invalid(format!("lambda = {lambda}")));
    }
    if lambda * settings.horizon < 20.0 {
        return Err(Error::Invalid(format!(
            "lambda * horizon = {} is below 20; lengthen the horizon",
            lambda * settings.horizon
        )));
    }
    Ok(())
}

/// Points the process never leaves, where every functional here vanishes.
fn is_trap(x: GraphPoint) -> bool {
    matches!(x, GraphPoint::Infinity { .. } | GraphPoint::Cemetery)
}

fn refuse_if_biased(e: &Estimate, bias: f64) -> Result<()> {
    if bias > e.se / 3.0 {
        return Err(Error::Horizon { bias, se: e.se });
    }
    Ok(())
}

/// `E_x int_0^inf e^{-lambda t} g(X_t) dt`, with the analytic value of the
/// simulated law as reference.
pub fn estimate_resolvent(
    params: &BoundaryParams,
    lambda: f64,
    g: &EdgeFunction,
    x0: GraphPoint,
    settings: &McSettings,
) -> Result<Estimate> {
    check_discount(lambda, settings)?;
    let law = settings.simulated_law(params)?;
    let opts = settings.options();
    let samples = sample_paths(settings, |seed| Ok(discounted_integral(&simulate_full(params, &opts, x0, seed)?, lambda, g)))?;
    let e = Estimate::from_samples("resolvent", settings, &samples);
    if !is_trap(x0) {
        refuse_if_biased(&e, (-lambda * settings.horizon).exp() * g.bound() / lambda)?;
    }
    Ok(e.with_reference(resolvent_full(&law, lambda, g, x0, &Quad::default())?))
}

/// `E_x int_0^inf e^{-lambda s} dK(s)` for the local time `K` at the center.
pub fn estimate_potential(params: &BoundaryParams, lambda: f64, x0: GraphPoint, settings: &McSettings) -> Result<Estimate> {
    check_discount(lambda, settings)?;
    let law = settings.simulated_law(params)?;
    let opts = settings.options();
    let samples = sample_paths(settings, |seed| Ok(discounted_local_time(&simulate_full(params, &opts, x0, seed)?, lambda)))?;
    let e = Estimate::from_samples("potential", settings, &samples);
    let quad = Quad::default();
    if !is_trap(x0) {
        // The potential is largest at the center, where every later stretch restarts.
        let tail = (-lambda * settings.horizon).exp() * potential_local_time(&law, lambda, GraphPoint::Center, &quad)?;
        refuse_if_biased(&e, tail)?;
    }
    Ok(e.with_reference(potential_local_time(&law, lambda, x0, &quad)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExitStats {
    /// Exit time `tau` of the ball of radius `eps` for the sticky motion.
    pub tau: Estimate,
    /// `e^{-gamma L(sigma)}` at the exit time `sigma` of the reflected motion.
    pub discount: Estimate,
}

/// Exit statistics of sticky reflected Brownian motion on the half-line,
/// started at zero, from the ball `[0, eps)`.
///
/// The reflected motion `B + L` is stepped with exact bridge minima for `L`;
/// the exit through `eps` is detected inside a step with the Brownian bridge
/// crossing probability and placed at the middle of that step. The sticky
/// exit time is `tau = sigma + alpha L(sigma)`. References are
/// `E tau = eps^2 + alpha eps` and `E e^{-gamma L(sigma)} = 1 / (1 + eps gamma)`.
pub fn estimate_exit_stats(alpha: f64, gamma: f64, eps: f64, n: usize, dt: f64, seed: u64) -> Result<ExitStats> {
    if !(alpha >= 0.0 && gamma >= 0.0 && eps > 0.0) {
        return Err(Error::Params(format!("alpha {alpha}, gamma {gamma}, radius {eps}")));
    }
    if !(dt > 0.0 && dt <= 0.01 * eps * eps) {
        return Err(Error::Invalid(format!("dt = {dt} is not small against eps^2 = {}", eps * eps)));
    }
    let settings = McSettings::new(n, f64::INFINITY, Discretization::uniform(dt), seed);
    let pairs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut rng = settings.path_seed(p).stream("exit", 0);
            let sd = dt.sqrt();
            let (mut t, mut b, mut l) = (0.0, 0.0_f64, 0.0_f64);
            loop {
                let z: f64 = rng.sample(StandardNormal);
                let b1 = b + sd * z;
                let v = 1.0 - rng.random::<f64>();
                let d = b - b1;
                let low = 0.5 * (b + b1 - (d * d - 2.0 * dt * v.ln()).sqrt());
                let l1 = l.max(-low);
                let (r0, r1) = (b + l, b1 + l1);
                let crossed = r1 >= eps || (l1 == l && rng.random::<f64>() < (-2.0 * (eps - r0) * (eps - r1) / dt).exp());
                if crossed {
                    let sigma = t + 0.5 * dt;
                    return (sigma + alpha * l, (-gamma * l).exp());
                }
                (t, b, l) = (t + dt, b1, l1);
            }
        })
        .collect();
    let taus: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let disc: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(ExitStats {
        tau: Estimate::from_samples("exit_time", &settings, &taus).with_reference(eps * eps + alpha * eps),
        discount: Estimate::from_samples("exit_local_time_transform", &settings, &disc).with_reference(1.0 / (1.0 + eps * gamma)),
    })
}

/// Where `X(t)` falls over `n` paths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeDistribution {
    pub t: f64,
    pub n: usize,
    pub counts: Vec<u64>,
    pub center: u64,
    pub cemetery: u64,
    pub infinity: u64,
    /// Distances from the center, per edge, in path order.
    pub radii: Vec<Vec<f64>>,
}

impl EdgeDistribution {
    pub fn from_states(t: f64, k: usize, states: &[GraphPoint]) -> Self {
        let mut d = EdgeDistribution { t, n: states.len(), counts: vec![0; k], center: 0, cemetery: 0, infinity: 0, radii: vec![Vec::new(); k] };
        for s in states {
            match *s {
                GraphPoint::Center => d.center += 1,
                GraphPoint::Cemetery => d.cemetery += 1,
                GraphPoint::Infinity { .. } => d.infinity += 1,
                GraphPoint::Edge { edge, x } => {
                    d.counts[edge] += 1;
                    d.radii[edge].push(x);
                }
            }
        }
        d
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    /// Multinomial chi-square of the edge counts against `probs`, with the
    /// center, cemetery and infinity pooled into one extra cell. When `probs`
    /// leave no mass for that cell, the test is conditional on being on an
    /// edge: interpolation between grid points leaves a small atom at the
    /// center even for laws without one.
    pub fn chi_square(&self, probs: &[f64]) -> Result<TestResult> {
        let rest = 1.0 - probs.iter().sum::<f64>();
        if rest <= 1e-12 {
            let total: f64 = probs.iter().sum();
            let p: Vec<f64> = probs.iter().map(|q| q / total).collect();
            return chi_square_gof(&self.counts, &p);
        }
        let mut counts = self.counts.clone();
        counts.push(self.center + self.cemetery + self.infinity);
        let mut p = probs.to_vec();
        p.push(rest);
        chi_square_gof(&counts, &p)
    }

    /// Largest `|freq_i - p_i| / sigma_i` with multinomial `sigma_i`.
    pub fn max_sigma(&self, probs: &[f64]) -> f64 {
        let n = self.n as f64;
        self.frequencies()
            .iter()
            .zip(probs)
            .map(|(&f, &p)| (f - p).abs() / (p * (1.0 - p) / n).sqrt())
            .fold(0.0, f64::max)
    }

    /// KS test of the distances on edge `j` against the conditional CDF
    /// `cdf(y) / cdf(inf)`, with `cdf` the sub-distribution on that edge.
    pub fn ks_edge<F: Fn(f64) -> f64>(&self, j: usize, cdf: F) -> Result<TestResult> {
        let total = cdf(f64::INFINITY);
        ks_one_sample(&self.radii[j], |y| cdf(y) / total)
    }
}

/// States at time `t` of `n` independent paths.
pub fn sample_states(params: &BoundaryParams, t: f64, x0: GraphPoint, settings: &McSettings) -> Result<Vec<GraphPoint>> {
    let opts = SimOptions { horizon: t, ..settings.options() };
    (0..settings.n)
        .into_par_iter()
        .map(|p| Ok(simulate_full(params, &opts, x0, settings.path_seed(p))?.final_state()))
        .collect()
}

pub fn estimate_edge_distribution(params: &BoundaryParams, t: f64, x0: GraphPoint, settings: &McSettings) -> Result<EdgeDistribution> {
    Ok(EdgeDistribution::from_states(t, params.k(), &sample_states(params, t, x0, settings)?))
}

#[derive(Clone, Debug)]
pub enum Statistic {
    Resolvent { lambda: f64, g: EdgeFunction },
    Potential { lambda: f64 },
}

impl Statistic {
    fn lambda(&self) -> f64 {
        match self {
            Statistic::Resolvent { lambda, .. } | Statistic::Potential { lambda } => *lambda,
        }
    }
}

/// Which rungs of a ladder get a Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rungs {
    All,
    Last,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rung {
    pub eps: f64,
    /// `lambda int R0_lambda 1 dm_eps`.
    pub i1: f64,
    /// The statistic for the truncated law.
    pub truncated: f64,
    /// Estimate with the untruncated analytic value as reference.
    pub estimate: Option<Estimate>,
}

/// The statistic along a decreasing ladder of truncation levels, for a
/// process with an infinite jump measure.
pub fn convergence_study(
    params: &BoundaryParams,
    ladder: &[f64],
    statistic: &Statistic,
    x0: GraphPoint,
    settings: &McSettings,
    rungs: Rungs,
) -> Result<(f64, Vec<Rung>)> {
    if !params.has_infinite_mass() {
        return Err(Error::Params("the convergence study needs an infinite jump measure".into()));
    }
    if ladder.is_empty() || ladder.iter().any(|&e| !(e > 0.0)) || ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid(format!("ladder {ladder:?} must be positive and decreasing")));
    }
    let quad = Quad::default();
    let lambda = statistic.lambda();
    let exact = |p: &BoundaryParams| match statistic {
        Statistic::Resolvent { lambda, g } => resolvent_full(p, *lambda, g, x0, &quad),
        Statistic::Potential { lambda } => potential_local_time(p, *lambda, x0, &quad),
    };
    let reference = exact(params)?;
    let mut out = Vec::with_capacity(ladder.len());
    for (n, &eps) in ladder.iter().enumerate() {
        let law = params.truncated(eps);
        let run = match rungs {
            Rungs::All => true,
            Rungs::Last => n + 1 == ladder.len(),
            Rungs::None => false,
        };
        let estimate = if run {
            let s = settings.clone().with_eps(eps);
            let e = match statistic {
                Statistic::Resolvent { lambda, g } => estimate_resolvent(params, *lambda, g, x0, &s)?,
                Statistic::Potential { lambda } => estimate_potential(params, *lambda, x0, &s)?,
            };
            Some(e.with_reference(reference))
        } else {
            None
        };
        out.push(Rung { eps, i1: measure_i1(&law.m, law.k(), lambda, &quad), truncated: exact(&law)?, estimate });
    }
    Ok((reference, out))
}

/// The resolvent estimate at `dt`, `dt / 2` and `dt / 4` (smallest step
/// and all step bounds scaled together), with the first-order Richardson
/// extrapolation `2 E(dt / 4) - E(dt / 2)`.
pub fn dt_ladder(
    params: &BoundaryParams,
    lambda: f64,
    g: &EdgeFunction,
    x0: GraphPoint,
    settings: &McSettings,
) -> Result<(Vec<Estimate>, f64)> {
    let mut out = Vec::with_capacity(3);
    for r in [1.0, 0.5, 0.25] {
        let mut s = settings.clone();
        s.disc.dt *= r;
        s.disc.dt_max *= r;
        s.disc.dt_cap *= r;
        out.push(estimate_resolvent(params, lambda, g, x0, &s)?);
    }
    let extrapolated = 2.0 * out[2].mean - out[1].mean;
    Ok((out, extrapolated))
}

//! Path constructions of the process.
//!
//! Each edge `i` carries its own Brownian motion `B_i`, with `L_i` the running
//! maximum of `-B_i` and `U_i(t) = beta_i t + (jumps onto edge i)`. The clocks
//! `T_i` balance `ell_i = U_i^{-1} o L_i`, and the process at time `s` sits at
//! distance `B_i(T_i(s)) + U_i(L(s))` on whichever edge is away from the
//! center, where `L = ell_i o T_i` is the common local time. Stickiness is the
//! time change by `s + alpha L(s)`, killing happens when `L` passes an
//! exponential level.
//!
//! Every Brownian path is grown only as far as the balanced clocks need it.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{BoundaryParams, GraphPoint, JumpMeasure, Status, Tail};
use crate::monotone::{Knot, MonotonePath};
use crate::sampler::{
    build_subordinators, sample_exponential, BrownianSampler, Discretization, Jump, JumpStream, Seed, StreamRng,
};
use crate::skorokhod::{CadlagPath, RunningNegMax};
use crate::timechange::{Progress, Sweep, SweepStop, TimeChange};

/// Coordinates below this count as the center.
const CENTER_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimOptions {
    pub horizon: f64,
    pub disc: Discretization,
    /// Jumps smaller than this are dropped from an infinite jump measure.
    pub eps: Option<f64>,
}

impl SimOptions {
    pub fn new(horizon: f64, disc: Discretization) -> Self {
        SimOptions { horizon, disc, eps: None }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Invalid(format!("horizon {}", self.horizon)));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return Err(Error::Invalid(format!("truncation level {e} must be positive")));
            }
        }
        self.disc.validate()
    }
}

/// A path sampled on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GraphPoint>,
    /// Local time at the center, constant after the lifetime.
    pub local_time: Vec<f64>,
    /// Killing time, if it falls within the horizon.
    pub lifetime: Option<f64>,
    pub seed: u64,
    pub dt: f64,
    pub eps: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// State at the last grid time not after `t`.
    pub fn state_at(&self, t: f64) -> GraphPoint {
        let j = self.times.partition_point(|&s| s <= t).max(1) - 1;
        self.states[j]
    }

    pub fn final_state(&self) -> GraphPoint {
        *self.states.last().unwrap()
    }

    /// First grid index at the cemetery.
    pub fn lifetime_index(&self) -> Option<usize> {
        self.states.iter().position(|s| *s == GraphPoint::Cemetery)
    }

    /// Edges relabeled by `psi`; the center, cemetery and local time are kept.
    pub fn lump(&self, psi: &[usize]) -> Result<Trajectory> {
        let map = |e: usize| psi.get(e).copied().ok_or_else(|| Error::Invalid(format!("edge {e} not in map")));
        let states = self
            .states
            .iter()
            .map(|s| {
                Ok(match *s {
                    GraphPoint::Edge { edge, x } => GraphPoint::Edge { edge: map(edge)?, x },
                    GraphPoint::Infinity { edge } => GraphPoint::Infinity { edge: map(edge)? },
                    p => p,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Trajectory { states, ..self.clone() })
    }

    /// Rows `t, state, edge, x, local_time`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "state", "edge", "x", "local_time"])?;
        for ((t, s), k) in self.times.iter().zip(&self.states).zip(&self.local_time) {
            let (name, edge, x) = match *s {
                GraphPoint::Center => ("center", String::new(), "0".to_string()),
                GraphPoint::Edge { edge, x } => ("edge", edge.to_string(), x.to_string()),
                GraphPoint::Infinity { edge } => ("infinity", edge.to_string(), "inf".to_string()),
                GraphPoint::Cemetery => ("cemetery", String::new(), String::new()),
            };
            out.write_record([t.to_string(), name.to_string(), edge, x, k.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// The ingredients of one run of the construction without stickiness or
/// killing, on the clock `s` of that process.
#[derive(Clone, Debug)]
pub struct Bundle {
    pub b: Vec<CadlagPath>,
    /// Running maxima `L_i` of `-B_i`.
    pub reflection: Vec<MonotonePath>,
    pub u: Vec<MonotonePath>,
    pub ell: Vec<MonotonePath>,
    pub tc: TimeChange,
    pub jumps: Vec<Jump>,
    /// The run is exact on `[0, s_max]`.
    pub s_max: f64,
}

impl Bundle {
    pub fn local_time(&self) -> &MonotonePath {
        &self.tc.l
    }

    /// Positions at nondecreasing times in `[0, s_max]`.
    pub fn positions(&self, s: &[f64]) -> Vec<GraphPoint> {
        let k = self.b.len();
        let mut tc: Vec<_> = self.tc.t.iter().map(|p| p.cursor()).collect();
        let mut bc: Vec<_> = self.b.iter().map(|p| p.cursor()).collect();
        let mut uc: Vec<_> = self.u.iter().map(|p| p.cursor()).collect();
        let mut lc = self.tc.l.cursor();
        s.iter()
            .map(|&s| {
                let l = lc.eval(s);
                let (mut edge, mut best) = (0, f64::NEG_INFINITY);
                for i in 0..k {
                    let y = bc[i].eval(tc[i].eval(s)) + uc[i].eval(l);
                    if y > best {
                        (edge, best) = (i, y);
                    }
                }
                if best > CENTER_TOL {
                    GraphPoint::Edge { edge, x: best }
                } else {
                    GraphPoint::Center
                }
            })
            .collect()
    }
}

/// When a run stops: at real time `budget`, or when the local time reaches
/// `level`, whichever comes first. Real time is `s + alpha L(s)`.
#[derive(Clone, Copy, Debug)]
struct Stop {
    budget: f64,
    alpha: f64,
    level: f64,
}

struct Run {
    bundle: Bundle,
    /// Real-time length of the run.
    duration: f64,
    hit_level: bool,
}

fn sticky_clock(l: &MonotonePath, alpha: f64) -> MonotonePath {
    let knots = l
        .knots()
        .iter()
        .map(|k| Knot::new(k.t, k.t + alpha * k.left, k.t + alpha * k.right))
        .collect();
    MonotonePath::from_raw(knots, None)
}

/// `U^{-1}` for `U(u) = beta u + jumps`, evaluated at nondecreasing arguments.
#[derive(Clone, Debug)]
struct InverseSubordinator {
    beta: f64,
    /// `(u, U(u-), U(u))` for each jump.
    jumps: Vec<(f64, f64, f64)>,
    next: usize,
}

impl InverseSubordinator {
    fn new(beta: f64) -> Self {
        InverseSubordinator { beta, jumps: Vec::new(), next: 0 }
    }

    fn push(&mut self, u: f64, size: f64) {
        let lo = self.value_at(u);
        self.jumps.push((u, lo, lo + size));
    }

    /// `U(h)`, given every jump up to `h`.
    fn value_at(&self, h: f64) -> f64 {
        match self.jumps.last() {
            Some(&(u, _, hi)) => hi + self.beta * (h - u),
            None => self.beta * h,
        }
    }

    fn eval(&mut self, y: f64) -> f64 {
        while self.next < self.jumps.len() && self.jumps[self.next].1 <= y {
            self.next += 1;
        }
        match self.next.checked_sub(1) {
            None => y / self.beta,
            Some(n) => {
                let (u, _, hi) = self.jumps[n];
                if y <= hi { u } else { u + (y - hi) / self.beta }
            }
        }
    }

    /// Ends of jump ranges strictly between `ya` and `yb`, ascending.
    fn breaks(&self, ya: f64, yb: f64, out: &mut Vec<f64>) {
        out.clear();
        for &(_, lo, hi) in &self.jumps[self.next.saturating_sub(1)..] {
            if lo >= yb {
                break;
            }
            for y in [lo, hi] {
                if y > ya && y < yb {
                    out.push(y);
                }
            }
        }
    }
}

/// One edge of a run: its Brownian motion, the running maximum of `-B` and
/// `ell = U^{-1} o L`, all grown together.
struct EdgeRun {
    bm: BrownianSampler<StreamRng>,
    seen: usize,
    refl: RunningNegMax,
    mapped: usize,
    inv: InverseSubordinator,
    ell: Vec<Knot>,
}

impl EdgeRun {
    fn push_ell(&mut self, t: f64, v: f64) {
        let last = self.ell.last_mut().unwrap();
        if t <= last.t {
            last.right = last.right.max(v);
            last.left = last.right;
        } else {
            self.ell.push(Knot::cont(t, v));
        }
    }
}

/// Jumps of the stream not yet handed to the edges.
struct Jumps {
    stream: JumpStream<StreamRng>,
    horizon: f64,
    dealt: usize,
}

impl Jumps {
    /// Samples further until `U_i` is known up to `y`.
    fn cover(&mut self, edges: &mut [EdgeRun], i: usize, y: f64) {
        while edges[i].inv.value_at(self.horizon) < y {
            self.horizon *= 2.0;
            let all = self.stream.extend_to(self.horizon);
            for j in &all[self.dealt..] {
                edges[j.edge].inv.push(j.t, j.size);
            }
            self.dealt = all.len();
        }
    }
}

/// Steps edge `i` further and extends `ell_i` over the new stretch.
fn grow(edges: &mut [EdgeRun], jumps: &mut Option<Jumps>, i: usize, scratch: &mut Vec<f64>) {
    const CHUNK: usize = 32;
    let e = &mut edges[i];
    e.bm.steps(CHUNK);
    let ks = e.bm.knots();
    for n in e.seen..ks.len() {
        e.refl.push_cell(ks[n - 1], ks[n]);
    }
    e.seen = ks.len();
    let top = e.refl.value();
    if let Some(j) = jumps.as_mut() {
        j.cover(edges, i, top);
    }
    let e = &mut edges[i];
    for n in e.mapped..e.refl.knots().len() {
        let (a, b) = (e.refl.knots()[n - 1], e.refl.knots()[n]);
        if b.right > a.right {
            e.inv.breaks(a.right, b.right, scratch);
            for &y in scratch.iter() {
                let t = a.t + (y - a.right) / (b.right - a.right) * (b.t - a.t);
                let v = e.inv.eval(y);
                e.push_ell(t, v);
            }
        }
        let v = e.inv.eval(b.right);
        e.push_ell(b.t, v);
    }
    e.mapped = e.refl.knots().len();
    // The running maximum is flat from its last knot to the sampled time.
    let (t, v) = (e.bm.time(), e.ell.last().unwrap().right);
    e.push_ell(t, v);
}

fn run_w0(beta: &[f64], m: &JumpMeasure, start: GraphPoint, stop: Stop, disc: &Discretization, seed: Seed) -> Result<Run> {
    let k = beta.len();
    let budget = stop.budget;
    let mut edges: Vec<EdgeRun> = (0..k)
        .map(|i| {
            let x0 = match start {
                GraphPoint::Edge { edge, x } if edge == i => x,
                _ => 0.0,
            };
            let bm = BrownianSampler::new(x0, budget, *disc, seed.stream("bm", i as u64));
            let refl = RunningNegMax::new(bm.knots()[0]);
            EdgeRun { bm, seen: 1, refl, mapped: 1, inv: InverseSubordinator::new(beta[i]), ell: vec![Knot::cont(0.0, 0.0)] }
        })
        .collect();
    let stream = JumpStream::new(m, seed.stream("jumps", 0))?;
    let mut jumps = (!stream.is_empty_law()).then_some(Jumps { stream, horizon: 0.0, dealt: 0 });
    if let Some(j) = jumps.as_mut() {
        j.horizon = 0.5;
        for i in 0..k {
            j.cover(&mut edges, i, 1.0);
        }
    }
    let mut sweep = Sweep::new(k);
    let sstop = SweepStop { budget, alpha: stop.alpha, level: stop.level };
    let mut scratch = Vec::new();
    let (s_end, hit_level) = loop {
        let views: Vec<&[Knot]> = edges.iter().map(|e| e.ell.as_slice()).collect();
        let tails: Vec<Option<f64>> = edges.iter().map(|e| e.bm.at_end().then(|| 1.0 / e.inv.beta)).collect();
        match sweep.advance(&views, &tails, sstop)? {
            Progress::Done { s, hit_level } => break (s, hit_level),
            Progress::Need(i) => grow(&mut edges, &mut jumps, i, &mut scratch),
        }
    };
    let (jump_list, hu) = match &jumps {
        Some(j) => (j.stream.jumps()[..j.dealt].to_vec(), j.horizon),
        None => (Vec::new(), 1.0),
    };
    let u = build_subordinators(beta, &jump_list, hu)?;
    let mut b = Vec::with_capacity(k);
    let mut reflection = Vec::with_capacity(k);
    let mut ell = Vec::with_capacity(k);
    for e in edges {
        let end = e.bm.time();
        ell.push(MonotonePath::from_raw(e.ell, None));
        reflection.push(e.refl.finish(end, Some(1.0)));
        b.push(e.bm.into_path());
    }
    let tc = sweep.into_time_change(None);
    let duration = if hit_level { s_end + stop.alpha * stop.level } else { budget };
    let bundle = Bundle { b, reflection, u, ell, tc, jumps: jump_list, s_max: s_end };
    Ok(Run { bundle, duration, hit_level })
}

/// Maps real times after the start of a run to positions and local times.
fn sample_run(run: &Run, alpha: f64, times: &[f64]) -> Result<(Vec<GraphPoint>, Vec<f64>)> {
    let l = run.bundle.local_time();
    let s: Vec<f64> = if alpha == 0.0 {
        times.iter().map(|&t| t.min(run.bundle.s_max)).collect()
    } else {
        let inv = sticky_clock(l, alpha).with_slope(Some(1.0)).generalized_inverse()?;
        let mut c = inv.cursor();
        times.iter().map(|&t| c.eval(t).min(run.bundle.s_max)).collect()
    };
    let mut lc = l.cursor();
    let k = s.iter().map(|&s| lc.eval(s)).collect();
    Ok((run.bundle.positions(&s), k))
}

/// How a sampler splits the process into runs of the diffusive part.
#[derive(Clone, Debug)]
struct Plan {
    k: usize,
    alpha: f64,
    gamma: f64,
    /// Edges run by Brownian motions, in increasing order.
    core: Vec<usize>,
    beta: Vec<f64>,
    /// Jumps carried by the subordinators, indexed like `core`.
    m_core: JumpMeasure,
    /// Jump targets that end a run, as full-graph edge tails.
    restart: Vec<(usize, Tail)>,
    restart_mass: f64,
    eps: Option<f64>,
}

impl Plan {
    fn checked(params: &BoundaryParams) -> Result<()> {
        let v = params.validate();
        if v.status != Status::Ok {
            return Err(Error::Params(format!("cannot simulate: {}", v.reasons.join("; "))));
        }
        Ok(())
    }

    fn build(p: &BoundaryParams, m_core_from: impl Fn(usize) -> Tail, restart_on: impl Fn(usize) -> bool, eps: Option<f64>) -> Plan {
        let k = p.k();
        let core: Vec<usize> = (0..k).filter(|&i| p.beta[i] > 0.0).collect();
        let m_core = JumpMeasure::from_edge_tails(core.iter().map(|&i| m_core_from(i)).collect());
        let restart: Vec<(usize, Tail)> = (0..k)
            .filter(|&i| restart_on(i) && p.m.edge_mass(i) > 0.0)
            .map(|i| (i, p.m.edge_tail(i)))
            .collect();
        let restart_mass = restart.iter().map(|(_, t)| t.total()).sum();
        Plan { k, alpha: p.alpha, gamma: p.gamma, beta: core.iter().map(|&i| p.beta[i]).collect(), core, m_core, restart, restart_mass, eps }
    }

    /// Jumps onto edges with positive weight ride in the subordinators; jumps
    /// onto zero-weight edges end the run.
    fn subordinated(params: &BoundaryParams, eps: Option<f64>) -> Result<Plan> {
        Self::checked(params)?;
        let (p, eps) = if params.has_infinite_mass() {
            let e = eps.ok_or_else(|| Error::Invalid("an infinite jump measure needs a truncation level".into()))?;
            (params.truncated(e), Some(e))
        } else {
            (params.clone(), None)
        };
        let beta = p.beta.clone();
        Ok(Self::build(&p, |i| p.m.edge_tail(i), |i| beta[i] == 0.0, eps))
    }

    /// Every jump ends the run.
    fn piecing_out(params: &BoundaryParams) -> Result<Plan> {
        Self::checked(params)?;
        if params.has_infinite_mass() {
            return Err(Error::Params("piecing out needs a finite jump measure".into()));
        }
        Ok(Self::build(params, |_| Tail::zero(), |_| true, None))
    }

    fn exit_rate(&self) -> f64 {
        self.gamma + self.restart_mass
    }

    fn core_index(&self, edge: usize) -> Option<usize> {
        self.core.iter().position(|&e| e == edge)
    }

    fn sample_restart(&self, rng: &mut StreamRng) -> GraphPoint {
        let mut u = rng.random::<f64>() * self.restart_mass;
        for (n, (edge, tail)) in self.restart.iter().enumerate() {
            let w = tail.total();
            if u < w || n + 1 == self.restart.len() {
                return GraphPoint::on_edge(*edge, tail.sample_above(0.0, rng));
            }
            u -= w;
        }
        unreachable!("restart law without edges")
    }
}

fn check_start(x0: GraphPoint, k: usize) -> Result<GraphPoint> {
    match x0 {
        GraphPoint::Edge { edge, .. } | GraphPoint::Infinity { edge } if edge >= k => {
            Err(Error::Invalid(format!("start edge {edge} outside 0..{k}")))
        }
        GraphPoint::Edge { edge, x } if !(x >= 0.0 && x.is_finite()) => {
            Err(Error::Invalid(format!("start coordinate {x} on edge {edge}")))
        }
        GraphPoint::Edge { edge, x } => Ok(GraphPoint::on_edge(edge, x)),
        p => Ok(p),
    }
}

fn drive(plan: &Plan, opts: &SimOptions, x0: GraphPoint, seed: Seed) -> Result<Trajectory> {
    opts.validate()?;
    let disc = &opts.disc;
    let horizon = opts.horizon;
    let grid = disc.output_grid(horizon);
    let n = grid.len();
    let mut states = Vec::with_capacity(n);
    let mut local = Vec::with_capacity(n);
    let (mut t0, mut k0) = (0.0, 0.0);
    let mut state = check_start(x0, plan.k)?;
    let mut lifetime = None;
    let mut piece = 0;
    while states.len() < n {
        let ps = seed.child("piece", piece);
        piece += 1;
        let j = states.len();
        let budget = horizon - t0;
        match state {
            GraphPoint::Cemetery | GraphPoint::Infinity { .. } => {
                states.resize(n, state);
                local.resize(n, k0);
            }
            GraphPoint::Edge { edge, x } if plan.core_index(edge).is_none() => {
                // Free Brownian motion until the center, without local time.
                let mut bm = BrownianSampler::new(x, budget, *disc, ps.stream("free", 0));
                let hit = bm.run_to_zero(budget);
                let path = bm.into_path();
                let mut c = path.cursor();
                let end = hit.map_or(f64::INFINITY, |h| t0 + h);
                for &t in grid[j..].iter().take_while(|&&t| t < end) {
                    states.push(GraphPoint::on_edge(edge, c.eval(t - t0)));
                    local.push(k0);
                }
                match hit {
                    Some(h) => {
                        t0 += h;
                        state = GraphPoint::Center;
                    }
                    None => break,
                }
            }
            _ => {
                let level = sample_exponential(plan.exit_rate(), &mut ps.stream("level", 0));
                let (duration, hit_level) = if plan.core.is_empty() {
                    // Held at the center while the local time grows at rate 1 / alpha.
                    let d = plan.alpha * level;
                    for &t in grid[j..].iter().take_while(|&&t| t < t0 + d) {
                        states.push(GraphPoint::Center);
                        local.push(k0 + (t - t0) / plan.alpha);
                    }
                    (d, d <= budget)
                } else {
                    let start = match state {
                        GraphPoint::Edge { edge, x } => GraphPoint::Edge { edge: plan.core_index(edge).unwrap(), x },
                        _ => GraphPoint::Center,
                    };
                    let stop = Stop { budget, alpha: plan.alpha, level };
                    let run = run_w0(&plan.beta, &plan.m_core, start, stop, disc, ps)?;
                    let end = if run.hit_level { t0 + run.duration } else { f64::INFINITY };
                    let times: Vec<f64> = grid[j..].iter().take_while(|&&t| t < end).map(|&t| t - t0).collect();
                    let (pos, ks) = sample_run(&run, plan.alpha, &times)?;
                    for (p, kl) in pos.into_iter().zip(ks) {
                        states.push(match p {
                            GraphPoint::Edge { edge, x } => GraphPoint::Edge { edge: plan.core[edge], x },
                            p => p,
                        });
                        local.push(k0 + kl);
                    }
                    (run.duration, run.hit_level)
                };
                if !hit_level {
                    break;
                }
                t0 += duration;
                k0 += level;
                let mut rng = ps.stream("exit", 0);
                if rng.random::<f64>() * plan.exit_rate() < plan.gamma {
                    state = GraphPoint::Cemetery;
                    lifetime = Some(t0);
                } else {
                    state = plan.sample_restart(&mut rng);
                }
            }
        }
    }
    Ok(Trajectory { times: grid, states, local_time: local, lifetime, seed: seed.0, dt: disc.dt, eps: plan.eps })
}

/// The process with boundary data `params`: jumps through subordinators,
/// then stickiness, then killing. Infinite jump measures are truncated at
/// `opts.eps`.
pub fn simulate_full(params: &BoundaryParams, opts: &SimOptions, x0: GraphPoint, seed: Seed) -> Result<Trajectory> {
    drive(&Plan::subordinated(params, opts.eps)?, opts, x0, seed)
}

/// The same law as [`simulate_full`] for finite jump measures, built by
/// restarting a process without jumps each time its local time passes an
/// exponential level of rate `gamma + delta`.
pub fn simulate_concatenation(params: &BoundaryParams, opts: &SimOptions, x0: GraphPoint, seed: Seed) -> Result<Trajectory> {
    drive(&Plan::piecing_out(params)?, opts, x0, seed)
}

/// The construction without stickiness and killing, with its ingredients.
/// Needs `alpha = gamma = 0` and positive weight (after truncation) on every edge.
pub fn simulate_w0(params: &BoundaryParams, opts: &SimOptions, x0: GraphPoint, seed: Seed) -> Result<(Trajectory, Bundle)> {
    opts.validate()?;
    if params.alpha != 0.0 || params.gamma != 0.0 {
        return Err(Error::Params("simulate_w0 takes alpha = gamma = 0".into()));
    }
    let plan = Plan::subordinated(params, opts.eps)?;
    if plan.core.len() != plan.k {
        return Err(Error::Params("every edge needs positive weight".into()));
    }
    let x0 = check_start(x0, plan.k)?;
    if matches!(x0, GraphPoint::Infinity { .. } | GraphPoint::Cemetery) {
        return Err(Error::Invalid("simulate_w0 starts at the center or on an edge".into()));
    }
    let stop = Stop { budget: opts.horizon, alpha: 0.0, level: f64::INFINITY };
    let run = run_w0(&plan.beta, &plan.m_core, x0, stop, &opts.disc, seed.child("piece", 0))?;
    let times = opts.disc.output_grid(opts.horizon);
    let (states, local_time) = sample_run(&run, 0.0, &times)?;
    let traj = Trajectory { times, states, local_time, lifetime: None, seed: seed.0, dt: opts.disc.dt, eps: plan.eps };
    Ok((traj, run.bundle))
}

/// Walsh's process: no stickiness, killing or jumps.
pub fn simulate_walsh(beta: &[f64], opts: &SimOptions, x0: GraphPoint, seed: Seed) -> Result<(Trajectory, Bundle)> {
    simulate_w0(&BoundaryParams::walsh(beta.to_vec()), opts, x0, seed)
}

/// Slows the bundle's path down at the center: the new path at time `t` is
/// the old one at `A^{-1}(t)`, `A(s) = s + alpha L(s)`, sampled at `times`.
pub fn apply_sticky(bundle: &Bundle, alpha: f64, times: &[f64], seed: u64, dt: f64) -> Result<Trajectory> {
    if !(alpha >= 0.0) {
        return Err(Error::Invalid(format!("alpha = {alpha}")));
    }
    let a_max = bundle.s_max + alpha * bundle.local_time().eval(bundle.s_max)?;
    if times.last().is_some_and(|&t| t > a_max) {
        return Err(Error::OutOfDomain { t: *times.last().unwrap(), t_max: a_max });
    }
    let run = Run { bundle: bundle.clone(), duration: a_max, hit_level: false };
    let (states, local_time) = sample_run(&run, alpha, times)?;
    Ok(Trajectory { times: times.to_vec(), states, local_time, lifetime: None, seed, dt, eps: None })
}

/// Sends the path to the cemetery from the first grid time at which its
/// local time reaches an exponential level of rate `gamma`.
pub fn apply_killing<R: Rng + ?Sized>(traj: &Trajectory, gamma: f64, rng: &mut R) -> Trajectory {
    let level = sample_exponential(gamma, rng);
    let mut out = traj.clone();
    if let Some(j) = traj.local_time.iter().position(|&k| k >= level) {
        out.lifetime = Some(traj.times[j]);
        for n in j..out.len() {
            out.states[n] = GraphPoint::Cemetery;
            out.local_time[n] = level;
        }
    }
    out
}

/// `(1 / 2 band) * time spent at distance in (0, band]` from the center, by the
/// trapezoid rule on the grid.
pub fn estimate_symmetric_local_time(traj: &Trajectory, band: f64) -> Result<MonotonePath> {
    if !(band > 0.0) {
        return Err(Error::Invalid(format!("band {band}")));
    }
    let near = |p: &GraphPoint| {
        let r = p.radius();
        if r > 0.0 && r <= band { 1.0 } else { 0.0 }
    };
    let mut acc = 0.0;
    let mut pts = vec![(traj.times[0], 0.0)];
    for n in 1..traj.len() {
        let dt = traj.times[n] - traj.times[n - 1];
        acc += 0.5 * dt * (near(&traj.states[n - 1]) + near(&traj.states[n])) / (2.0 * band);
        pts.push((traj.times[n], acc));
    }
    MonotonePath::from_points(&pts, None)
}

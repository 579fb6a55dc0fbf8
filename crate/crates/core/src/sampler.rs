//! Random streams, Brownian paths, jumps and subordinators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{JumpMeasure, Tail};
use crate::monotone::{Knot, MonotonePath};
use crate::skorokhod::CadlagPath;

pub type StreamRng = ChaCha8Rng;

/// Master seed. Every random component draws from its own stream, keyed by
/// a label, so results do not depend on evaluation order or thread count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    fn digest(&self, label: &str, index: u64) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.0.to_le_bytes());
        h.update(label.as_bytes());
        h.update(index.to_le_bytes());
        h.finalize().into()
    }

    pub fn child(&self, label: &str, index: u64) -> Seed {
        let d = self.digest(label, index);
        Seed(u64::from_le_bytes(d[..8].try_into().unwrap()))
    }

    pub fn stream(&self, label: &str, index: u64) -> StreamRng {
        ChaCha8Rng::from_seed(self.digest(label, index))
    }
}

/// Time stepping for Brownian paths and the output grid.
///
/// Steps scale like the squared distance to the reflecting barrier,
/// `(R / ratio)^2`, clamped to `[dt, dt_max]`. Both bounds grow like
/// `exp(growth * t)` up to `dt_cap`, which suits estimators discounted at
/// rate `growth`. With `dt_max == dt` and `growth == 0` the grid is uniform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub dt: f64,
    pub dt_max: f64,
    pub ratio: f64,
    pub growth: f64,
    pub dt_cap: f64,
    pub out_dt: f64,
    pub out_growth: f64,
}

impl Discretization {
    pub fn uniform(dt: f64) -> Self {
        Discretization { dt, dt_max: dt, ratio: 1.0, growth: 0.0, dt_cap: dt, out_dt: dt, out_growth: 0.0 }
    }

    pub fn adaptive(dt: f64, dt_max: f64, ratio: f64) -> Self {
        Discretization { dt, dt_max, ratio, growth: 0.0, dt_cap: dt_max, out_dt: dt_max, out_growth: 0.0 }
    }

    /// Coarsens with elapsed time at rate `lambda`, for discounted estimators.
    pub fn discounted(mut self, lambda: f64, dt_cap: f64) -> Self {
        self.growth = lambda;
        self.out_growth = 0.5 * lambda;
        self.dt_cap = dt_cap;
        self
    }

    pub fn with_output(mut self, out_dt: f64) -> Self {
        self.out_dt = out_dt;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt_max >= self.dt && self.ratio > 0.0 && self.out_dt > 0.0) {
            return Err(Error::Invalid(format!("bad discretization {self:?}")));
        }
        if !(self.growth >= 0.0 && self.out_growth >= 0.0 && self.dt_cap >= self.dt) {
            return Err(Error::Invalid(format!("bad discretization {self:?}")));
        }
        Ok(())
    }

    /// Step bounds at time `t`.
    pub fn bounds(&self, t: f64) -> (f64, f64) {
        let g = if self.growth > 0.0 { (self.growth * t).exp() } else { 1.0 };
        let lo = (self.dt * g).min(self.dt_cap);
        (lo, (self.dt_max * g).min(self.dt_cap).max(lo))
    }

    pub fn step(&self, t: f64, r: f64) -> f64 {
        let (lo, hi) = self.bounds(t);
        let h = r / self.ratio;
        (h * h).clamp(lo, hi)
    }

    /// Output times in `[0, horizon]`, ending exactly at `horizon`.
    pub fn output_grid(&self, horizon: f64) -> Vec<f64> {
        let mut out = vec![0.0];
        let mut t = 0.0;
        loop {
            let h = if self.out_growth > 0.0 {
                (self.out_dt * (self.out_growth * t).exp()).min(self.dt_cap.max(self.out_dt))
            } else {
                self.out_dt
            };
            t += h;
            if t >= horizon * (1.0 - 1e-12) {
                out.push(horizon);
                return out;
            }
            out.push(t);
        }
    }
}

pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    -(1.0 - rng.random::<f64>()).ln() / rate
}

/// Brownian motion from `x0` on the uniform grid of step `dt`.
pub fn sample_brownian<R: Rng + ?Sized>(x0: f64, horizon: f64, dt: f64, rng: &mut R) -> Result<CadlagPath> {
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(Error::Invalid("sample_brownian needs dt > 0 and horizon > 0".into()));
    }
    let n = (horizon / dt).ceil() as usize;
    let mut knots = Vec::with_capacity(n + 1);
    let mut x = x0;
    knots.push(Knot::cont(0.0, x));
    for j in 1..=n {
        let t = (j as f64 * dt).min(horizon);
        let h = t - knots[j - 1].t;
        let z: f64 = rng.sample(StandardNormal);
        x += h.sqrt() * z;
        knots.push(Knot::cont(t, x));
    }
    CadlagPath::new(knots, None)
}

#[derive(Clone, Debug)]
pub struct BrownianRun {
    pub path: CadlagPath,
    /// First hitting time of zero, when sampling stopped there.
    pub hit: Option<f64>,
}

/// Brownian motion with steps from a [`Discretization`], grown on demand.
///
/// When the exact Brownian-bridge minimum of a step sets a new running
/// minimum it is inserted as a knot, so the running minimum carries no grid
/// lag. Steps are only shortened to land on `end`, so extending in several
/// calls gives the same path as one call.
#[derive(Clone, Debug)]
pub struct BrownianSampler<R> {
    disc: Discretization,
    /// Step bounds, refreshed once the time passes `fresh_until`.
    bounds: (f64, f64),
    fresh_until: f64,
    end: f64,
    t: f64,
    x: f64,
    floor: f64,
    knots: Vec<Knot>,
    rng: R,
}

impl<R: Rng> BrownianSampler<R> {
    pub fn new(x0: f64, end: f64, disc: Discretization, rng: R) -> Self {
        BrownianSampler { disc, bounds: disc.bounds(0.0), fresh_until: 0.0, end, t: 0.0, x: x0, floor: x0.min(0.0), knots: vec![Knot::cont(0.0, x0)], rng }
    }

    /// Time reached so far.
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn path(&self) -> CadlagPath {
        CadlagPath::from_raw(self.knots.clone(), None)
    }

    pub fn into_path(self) -> CadlagPath {
        CadlagPath::from_raw(self.knots, None)
    }

    /// One step. Returns the hitting time when `stop_at_zero` and the step
    /// crosses zero.
    fn step(&mut self, stop_at_zero: bool) -> Option<f64> {
        let (t, x) = (self.t, self.x);
        if t >= self.fresh_until {
            self.bounds = self.disc.bounds(t);
            self.fresh_until = if self.disc.growth > 0.0 { t + 0.01 / self.disc.growth } else { f64::INFINITY };
        }
        let r = (x - self.floor) / self.disc.ratio;
        let mut h = (r * r).clamp(self.bounds.0, self.bounds.1);
        if t + h > self.end || self.end - (t + h) < 1e-3 * h {
            h = self.end - t;
        }
        let z: f64 = self.rng.sample(StandardNormal);
        let y = x + h.sqrt() * z;
        let v = 1.0 - self.rng.random::<f64>();
        let d = x - y;
        let low = 0.5 * (x + y - (d * d - 2.0 * h * v.ln()).sqrt());
        let target = if stop_at_zero { 0.0 } else { self.floor };
        if low < target {
            let theta = h * (x - low) / ((x - low) + (y - low));
            if stop_at_zero {
                let tau = (t + theta * x / (x - low)).max(t);
                if tau > t {
                    self.knots.push(Knot::cont(tau, 0.0));
                }
                self.t = tau;
                self.x = 0.0;
                return Some(tau);
            }
            if theta > 0.0 && theta < h {
                self.knots.push(Knot::cont(t + theta, low));
            }
            self.floor = low;
        }
        self.floor = self.floor.min(y);
        self.t = t + h;
        self.x = y;
        self.knots.push(Knot::cont(self.t, y));
        None
    }

    /// Samples until time `h` is reached or passed (or `end`, if sooner).
    pub fn extend_to(&mut self, h: f64) {
        let h = h.min(self.end);
        while self.t < h {
            self.step(false);
        }
    }

    /// At most `n` steps; false once the end is reached.
    pub fn steps(&mut self, n: usize) -> bool {
        for _ in 0..n {
            if self.t >= self.end {
                return false;
            }
            self.step(false);
        }
        self.t < self.end
    }

    pub fn at_end(&self) -> bool {
        self.t >= self.end
    }

    /// Samples until the first passage through zero, or until time `h`.
    pub fn run_to_zero(&mut self, h: f64) -> Option<f64> {
        let h = h.min(self.end);
        if self.x <= 0.0 {
            return Some(self.t);
        }
        while self.t < h {
            if let Some(tau) = self.step(true) {
                return Some(tau);
            }
        }
        None
    }
}

/// Brownian motion from `x0` on `[0, horizon]` with steps from `disc`.
/// With `stop_at_zero`, sampling ends at the first passage through zero.
pub fn sample_brownian_adaptive<R: Rng + ?Sized>(
    x0: f64,
    horizon: f64,
    disc: &Discretization,
    stop_at_zero: bool,
    rng: &mut R,
) -> BrownianRun {
    let mut s = BrownianSampler::new(x0, horizon, *disc, rng);
    let hit = if stop_at_zero {
        s.run_to_zero(horizon)
    } else {
        s.extend_to(horizon);
        None
    };
    BrownianRun { path: s.into_path(), hit }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub edge: usize,
    pub size: f64,
}

/// Arrivals of a compound Poisson process with finite Lévy measure, sampled
/// on demand in time order.
#[derive(Clone, Debug)]
pub struct JumpStream<R> {
    delta: f64,
    p: Vec<f64>,
    radial: Vec<Tail>,
    /// First arrival not yet recorded.
    next: f64,
    jumps: Vec<Jump>,
    rng: R,
}

impl<R: Rng> JumpStream<R> {
    pub fn new(m: &JumpMeasure, mut rng: R) -> Result<Self> {
        let (delta, p, radial) = match m {
            JumpMeasure::Zero => (0.0, Vec::new(), Vec::new()),
            JumpMeasure::Finite { delta, p, radial } => (*delta, p.clone(), radial.clone()),
            JumpMeasure::Infinite { .. } => {
                return Err(Error::Invalid("compound Poisson sampling needs a finite measure".into()))
            }
        };
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Invalid(format!("jump rate {delta}")));
        }
        let next = sample_exponential(delta, &mut rng);
        Ok(JumpStream { delta, p, radial, next, jumps: Vec::new(), rng })
    }

    pub fn is_empty_law(&self) -> bool {
        self.delta == 0.0
    }

    /// All jumps up to time `h`, in time order.
    pub fn extend_to(&mut self, h: f64) -> &[Jump] {
        while self.next <= h {
            let mut u = self.rng.random::<f64>();
            let mut edge = self.p.len() - 1;
            for (i, w) in self.p.iter().enumerate() {
                if u < *w {
                    edge = i;
                    break;
                }
                u -= w;
            }
            while self.p[edge] == 0.0 && edge > 0 {
                edge -= 1;
            }
            let size = self.radial[edge].sample_above(0.0, &mut self.rng);
            self.jumps.push(Jump { t: self.next, edge, size });
            self.next += sample_exponential(self.delta, &mut self.rng);
        }
        &self.jumps
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }
}

/// Jumps of a compound Poisson process with finite Lévy measure `m` up to
/// time `horizon`, in time order.
pub fn sample_compound_poisson<R: Rng + ?Sized>(m: &JumpMeasure, horizon: f64, rng: &mut R) -> Result<Vec<Jump>> {
    let mut s = JumpStream::new(m, rng)?;
    s.extend_to(horizon);
    Ok(s.jumps)
}

/// Jumps of size at least `eps` of the point process with intensity `m`.
pub fn sample_truncated_ppp<R: Rng + ?Sized>(
    m: &JumpMeasure,
    k: usize,
    eps: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<Jump>> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("truncation level {eps} must be positive")));
    }
    sample_compound_poisson(&m.truncate(k, eps), horizon, rng)
}

/// `U_i(t) = beta_i t + (sum of jumps on edge i up to t)`, as paths on
/// `[0, horizon]` extended with slope `beta_i`.
pub fn build_subordinators(beta: &[f64], jumps: &[Jump], horizon: f64) -> Result<Vec<MonotonePath>> {
    let mut out = Vec::with_capacity(beta.len());
    for (i, &b) in beta.iter().enumerate() {
        if !(b > 0.0) {
            return Err(Error::Params(format!("subordinator on edge {i} needs positive drift")));
        }
        // Built from the previous right limit: with huge jumps `b t + sum`
        // can round below it.
        let mut knots = vec![Knot::cont(0.0, 0.0)];
        for j in jumps.iter().filter(|j| j.edge == i && j.t <= horizon) {
            let last = *knots.last().unwrap();
            if j.t == 0.0 {
                knots[0].right += j.size;
            } else {
                let base = last.right + b * (j.t - last.t);
                knots.push(Knot::new(j.t, base, base + j.size));
            }
        }
        let last = *knots.last().unwrap();
        if last.t < horizon {
            knots.push(Knot::cont(horizon, last.right + b * (horizon - last.t)));
        }
        out.push(MonotonePath::new(knots, Some(b))?);
    }
    Ok(out)
}

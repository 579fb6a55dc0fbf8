//! One-sided reflection of piecewise-linear càdlàg inputs.

use crate::error::{Error, Result};
use crate::monotone::{Cursor, Knot, MonotonePath};

/// Piecewise-linear càdlàg path with the same knot convention as
/// [`MonotonePath`], without the monotonicity constraint. Grids need not be
/// uniform.
#[derive(Clone, Debug, PartialEq)]
pub struct CadlagPath {
    knots: Vec<Knot>,
    slope: Option<f64>,
}

impl CadlagPath {
    pub fn new(knots: Vec<Knot>, slope: Option<f64>) -> Result<Self> {
        match knots.first() {
            Some(k) if k.t == 0.0 => {}
            _ => return Err(Error::Invalid("path must start with a knot at t = 0".into())),
        }
        for w in knots.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::Invalid(format!("knot times not increasing at {}", w[1].t)));
            }
        }
        if knots.iter().any(|k| !(k.t.is_finite() && k.left.is_finite() && k.right.is_finite())) {
            return Err(Error::Invalid("non-finite knot".into()));
        }
        Ok(CadlagPath { knots, slope })
    }

    pub(crate) fn from_raw(knots: Vec<Knot>, slope: Option<f64>) -> Self {
        CadlagPath { knots, slope }
    }

    /// Continuous path through `values` on the uniform grid of step `dt`.
    pub fn from_grid(dt: f64, values: &[f64]) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Invalid(format!("grid step {dt}")));
        }
        Self::new(
            values
                .iter()
                .enumerate()
                .map(|(n, &v)| Knot::cont(n as f64 * dt, v))
                .collect(),
            None,
        )
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn slope(&self) -> Option<f64> {
        self.slope
    }

    pub fn t_max(&self) -> f64 {
        self.knots.last().unwrap().t
    }

    pub fn cursor(&self) -> Cursor<'_> {
        Cursor::new(&self.knots, self.slope)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 || (t > self.t_max() && self.slope.is_none()) {
            return Err(Error::OutOfDomain { t, t_max: self.t_max() });
        }
        Ok(self.cursor().eval(t))
    }

    pub fn eval_left(&self, t: f64) -> Result<f64> {
        if t < 0.0 || (t > self.t_max() && self.slope.is_none()) {
            return Err(Error::OutOfDomain { t, t_max: self.t_max() });
        }
        Ok(self.cursor().eval_left(t))
    }

    pub fn min_value(&self) -> f64 {
        self.knots.iter().map(|k| k.left.min(k.right)).fold(f64::INFINITY, f64::min)
    }

    /// `self + m` on the common domain, knots at the union of knot times.
    pub fn add_monotone(&self, m: &MonotonePath) -> CadlagPath {
        let t_end = self.t_max().min(if m.slope().is_some() { f64::INFINITY } else { m.t_max() });
        let mut times: Vec<f64> = self
            .knots
            .iter()
            .map(|k| k.t)
            .chain(m.knots().iter().map(|k| k.t))
            .filter(|&t| t <= t_end)
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let (mut a, mut b) = (self.cursor(), m.cursor());
        let knots = times
            .into_iter()
            .map(|t| {
                let (l1, r1) = a.left_right(t);
                let (l2, r2) = b.left_right(t);
                Knot::new(t, l1 + l2, r1 + r2)
            })
            .collect();
        CadlagPath { knots, slope: None }
    }
}

#[derive(Clone, Debug)]
pub struct Reflection {
    pub ell: MonotonePath,
    pub reflected: CadlagPath,
}

/// `t -> max(0, sup_{s <= t} -omega(s))` built one grid cell at a time.
///
/// The running maximum of a linear interpolant only increases on a final
/// stretch of a grid cell, so the path gets at most one extra knot per cell,
/// where the rise begins. Flat stretches get no knot until they end.
#[derive(Clone, Debug)]
pub struct RunningNegMax {
    m: f64,
    out: Vec<Knot>,
}

impl RunningNegMax {
    pub fn new(first: Knot) -> Self {
        let m = (-first.left).max(-first.right).max(0.0);
        RunningNegMax { m, out: vec![Knot::cont(0.0, m)] }
    }

    pub fn value(&self) -> f64 {
        self.m
    }

    pub fn knots(&self) -> &[Knot] {
        &self.out
    }

    pub fn push_cell(&mut self, a: Knot, b: Knot) {
        let out = &mut self.out;
        let (ya, yb) = (-a.right, -b.left);
        if yb > self.m {
            let last_t = out.last().unwrap().t;
            if ya < self.m {
                let tau = a.t + (self.m - ya) / (yb - ya) * (b.t - a.t);
                if tau > last_t && tau < b.t {
                    out.push(Knot::cont(tau, self.m));
                }
            } else if last_t < a.t {
                out.push(Knot::cont(a.t, self.m));
            }
            out.push(Knot::cont(b.t, yb));
            self.m = yb;
        }
        let yr = -b.right;
        if yr > self.m {
            let last = out.last_mut().unwrap();
            if last.t == b.t {
                last.right = yr;
            } else {
                out.push(Knot::new(b.t, self.m, yr));
            }
            self.m = yr;
        }
    }

    pub fn finish(mut self, t_end: f64, slope: Option<f64>) -> MonotonePath {
        if self.out.last().unwrap().t < t_end {
            self.out.push(Knot::cont(t_end, self.m));
        }
        MonotonePath::from_raw(self.out, slope)
    }
}

pub fn running_neg_max(omega: &CadlagPath, slope: Option<f64>) -> MonotonePath {
    let ks = omega.knots();
    let mut r = RunningNegMax::new(ks[0]);
    for w in ks.windows(2) {
        r.push_cell(w[0], w[1]);
    }
    r.finish(omega.t_max(), slope)
}

/// Skorokhod reflection at zero: the minimal nondecreasing `ell` with
/// `omega + ell >= 0`, increasing only when the sum is zero.
pub fn reflect(omega: &CadlagPath) -> Result<Reflection> {
    if omega.knots()[0].right < 0.0 {
        return Err(Error::Invalid("reflection needs omega(0) >= 0".into()));
    }
    let ell = running_neg_max(omega, None);
    let reflected = omega.add_monotone(&ell);
    Ok(Reflection { ell, reflected })
}

/// Reflection where the pushing term is `psi(ell)` for a strictly increasing
/// càdlàg `psi` with `psi(0) = 0`. Requires `omega` without negative jumps.
pub fn generalized_reflect(omega: &CadlagPath, psi: &MonotonePath) -> Result<Reflection> {
    if omega.knots()[0].right < 0.0 {
        return Err(Error::Invalid("reflection needs omega(0) >= 0".into()));
    }
    if let Some(k) = omega.knots().iter().find(|k| k.right < k.left) {
        return Err(Error::Invalid(format!("negative jump of omega at t = {}", k.t)));
    }
    if psi.knots()[0].right != 0.0 {
        return Err(Error::Invalid("psi(0) must be 0".into()));
    }
    if !psi.flats().is_empty() || !matches!(psi.slope(), Some(s) if s > 0.0) {
        return Err(Error::Invalid("psi must be strictly increasing and unbounded".into()));
    }
    let k = running_neg_max(omega, None);
    let ell = psi.generalized_inverse()?.compose(&k)?;
    let reflected = omega.add_monotone(&psi.compose(&ell)?);
    Ok(Reflection { ell, reflected })
}

/// `sum_n (push(t_{n+1}) - push(t_n)) 1{omega_ref(t_{n+1}) > tol}` over the
/// knots of `omega_ref`. Zero when the pushing term only acts at zero.
pub fn flux_residual(reflected: &CadlagPath, push: &MonotonePath, tol: f64) -> f64 {
    let mut c = push.cursor();
    let mut total = 0.0;
    let ks = reflected.knots();
    let mut prev = c.eval(ks[0].t);
    for k in &ks[1..] {
        let (l, r) = c.left_right(k.t);
        if k.left > tol {
            total += l - prev;
        }
        if k.right > tol {
            total += r - l;
        }
        prev = r;
    }
    total
}

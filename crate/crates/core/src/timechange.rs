//! Balanced time changes `T_1, ..., T_k` with `sum_i T_i(s) = s` and
//! `ell_i(T_i(s))` equal across edges.
//!
//! With `kappa_i` the right inverse of `ell_i`, `kappa = sum_i kappa_i` and
//! `L` the (continuous) inverse of `kappa`,
//!
//! ```text
//! T_i(s) = kappa_i(L(s)) + 1{kappa_i jumps at L(s)} (s - kappa(L(s)))
//! ```
//!
//! [`solve_time_changes`] evaluates this with the path algebra of
//! [`crate::monotone`]. [`Sweep`] evaluates the same formula by moving the
//! common level upward through the breakpoints of all `ell_i`: between
//! breakpoints every `kappa_i` is linear in the level, and at a flat of
//! `ell_i` that edge alone advances. A sweep can pause where an edge runs out
//! of data and resume once more is appended, which is how the process grows
//! its paths lazily.

use crate::error::{Error, Result};
use crate::monotone::{Knot, MonotonePath};

#[derive(Clone, Debug)]
pub struct TimeChange {
    pub t: Vec<MonotonePath>,
    /// Common local time `L(s) = ell_i(T_i(s))`.
    pub l: MonotonePath,
}

/// Where a sweep stops: at the first `s` with `s + alpha L(s) >= budget`, or
/// when `L` reaches `level`.
#[derive(Clone, Copy, Debug)]
pub struct SweepStop {
    pub budget: f64,
    pub alpha: f64,
    pub level: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Progress {
    Done { s: f64, hit_level: bool },
    /// Edge `i` has no data beyond its last point.
    Need(usize),
}

/// Incremental solver. Each `ell_i` is given as continuous points `(t, v)`,
/// nondecreasing in both coordinates and starting at `(0, 0)`, plus an
/// optional slope beyond the last point; without one the edge is unknown
/// past its last point.
#[derive(Clone, Debug)]
pub struct Sweep {
    pos: Vec<usize>,
    t: Vec<f64>,
    level: f64,
    s: f64,
    out_t: Vec<Vec<Knot>>,
    out_l: Vec<Knot>,
}

impl Sweep {
    pub fn new(k: usize) -> Self {
        Sweep {
            pos: vec![0; k],
            t: vec![0.0; k],
            level: 0.0,
            s: 0.0,
            out_t: vec![vec![Knot::cont(0.0, 0.0)]; k],
            out_l: vec![Knot::cont(0.0, 0.0)],
        }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    fn record(&mut self) {
        let s = self.s;
        let last = self.out_l.last_mut().unwrap();
        if last.t >= s {
            last.right = last.right.max(self.level);
            for (i, o) in self.out_t.iter_mut().enumerate() {
                let k = o.last_mut().unwrap();
                k.left = k.left.max(self.t[i]);
                k.right = k.left;
            }
            return;
        }
        self.out_l.push(Knot::cont(s, self.level));
        for (i, o) in self.out_t.iter_mut().enumerate() {
            o.push(Knot::cont(s, self.t[i]));
        }
    }

    pub fn advance(&mut self, ells: &[&[Knot]], tails: &[Option<f64>], stop: SweepStop) -> Result<Progress> {
        let k = self.pos.len();
        let clock = |s: f64, l: f64| s + stop.alpha * l;
        if self.level >= stop.level {
            return Ok(Progress::Done { s: self.s, hit_level: true });
        }
        loop {
            // The edge, if any, that is flat at the current level.
            let mut flat: Option<usize> = None;
            for i in 0..k {
                let (ks, p) = (ells[i], self.pos[i]);
                if p + 1 < ks.len() {
                    if ks[p + 1].right == self.level && ks[p].right == self.level {
                        if let Some(j) = flat {
                            return Err(Error::CommonConstancy { i: j, j: i, level: self.level });
                        }
                        flat = Some(i);
                    }
                } else {
                    match tails[i] {
                        None => return Ok(Progress::Need(i)),
                        Some(a) if a > 0.0 => {}
                        Some(_) => return Err(Error::Bounded),
                    }
                }
            }
            if let Some(i) = flat {
                let ks = ells[i];
                let mut q = self.pos[i] + 1;
                while q + 1 < ks.len() && ks[q + 1].right == self.level {
                    q += 1;
                }
                let room = stop.budget - clock(self.s, self.level);
                let dt = ks[q].t - self.t[i];
                if dt >= room {
                    self.t[i] += room.max(0.0);
                    self.s = self.s.max(stop.budget - stop.alpha * self.level);
                    self.record();
                    return Ok(Progress::Done { s: self.s, hit_level: false });
                }
                self.t[i] = ks[q].t;
                self.s += dt;
                self.pos[i] = q;
                self.record();
                continue;
            }

            let mut l_next = f64::INFINITY;
            let mut rate = 0.0;
            for i in 0..k {
                let (ks, p) = (ells[i], self.pos[i]);
                if p + 1 < ks.len() {
                    let (a, b) = (ks[p], ks[p + 1]);
                    rate += (b.t - a.t) / (b.right - a.right);
                    l_next = l_next.min(b.right);
                } else {
                    rate += 1.0 / tails[i].unwrap();
                }
            }
            let room = stop.budget - clock(self.s, self.level);
            let l_budget = self.level + room.max(0.0) / (rate + stop.alpha);
            let l_stop = l_budget.min(stop.level);
            let done = l_stop <= l_next;
            let target = if done { l_stop } else { l_next };
            let mut s = 0.0;
            for i in 0..k {
                let (ks, p) = (ells[i], self.pos[i]);
                let ti = if p + 1 < ks.len() {
                    let (a, b) = (ks[p], ks[p + 1]);
                    if b.right == target && !done {
                        self.pos[i] = p + 1;
                        b.t
                    } else {
                        a.t + (target - a.right) * (b.t - a.t) / (b.right - a.right)
                    }
                } else {
                    ks[p].t + (target - ks[p].right) / tails[i].unwrap()
                };
                // Balance across a jump of another edge is restored here.
                self.t[i] = ti.max(self.t[i]);
                s += self.t[i];
            }
            self.level = target;
            self.s = s;
            let hit_level = stop.level <= l_budget;
            if done && !hit_level {
                // Land on the budget exactly rather than on a rounded sum.
                self.s = self.s.max(stop.budget - stop.alpha * self.level);
            }
            self.record();
            if done {
                return Ok(Progress::Done { s: self.s, hit_level });
            }
        }
    }

    pub fn into_time_change(self, slope: Option<f64>) -> TimeChange {
        let t = self.out_t.into_iter().map(|k| MonotonePath::from_raw(k, slope)).collect();
        TimeChange { t, l: MonotonePath::from_raw(self.out_l, None) }
    }

    pub fn time_change(&self) -> TimeChange {
        self.clone().into_time_change(None)
    }
}

/// Continuous points of the graph of `ell`, with jumps as vertical steps.
fn graph_points(ell: &MonotonePath) -> Vec<Knot> {
    let mut out = vec![Knot::cont(0.0, 0.0)];
    for k in ell.knots() {
        for v in [k.left, k.right] {
            let last = *out.last().unwrap();
            if last.t != k.t || last.right != v {
                out.push(Knot::cont(k.t, v));
            }
        }
    }
    out
}

fn check_inputs(ells: &[MonotonePath], horizon: f64) -> Result<()> {
    if ells.is_empty() {
        return Err(Error::Invalid("no edges".into()));
    }
    if !(horizon > 0.0) {
        return Err(Error::Invalid(format!("horizon {horizon}")));
    }
    if let Some(c) = MonotonePath::detect_common_constancy(ells, 0.0) {
        return Err(Error::CommonConstancy { i: c.i, j: c.j, level: c.level });
    }
    Ok(())
}

fn check_balance(t: &[MonotonePath], horizon: f64) -> Result<()> {
    let total: f64 = t.iter().map(|p| p.last_value()).sum();
    if (total - horizon).abs() > 1e-10 * horizon.max(1.0) {
        return Err(Error::Balance(format!("sum of T_i at s = {horizon} is {total}")));
    }
    Ok(())
}

/// The formula through the path algebra: inverses `kappa_i`, their sum,
/// its inverse `L`, then `T_i` at every knot of `L`.
pub fn solve_time_changes(ells: &[MonotonePath], horizon: f64) -> Result<TimeChange> {
    check_inputs(ells, horizon)?;
    let kappa: Vec<MonotonePath> = ells.iter().map(|l| l.generalized_inverse()).collect::<Result<_>>()?;
    if ells.len() == 1 {
        let l = ells[0].restrict(horizon)?;
        let t = vec![MonotonePath::identity().with_knot_at(horizon)?.restrict(horizon)?];
        return Ok(TimeChange { t, l });
    }
    let total = MonotonePath::sum(&kappa)?;
    let lcal = total.generalized_inverse()?;

    let mut times: Vec<f64> = lcal.knots().iter().map(|k| k.t).take_while(|&s| s < horizon).collect();
    times.push(horizon);
    let mut lc = lcal.cursor();
    let mut cursors: Vec<_> = kappa.iter().map(|k| k.cursor()).collect();
    let mut paths: Vec<Vec<Knot>> = vec![Vec::with_capacity(times.len()); ells.len()];
    let mut vals = vec![(0.0, 0.0); ells.len()];
    for &s in &times {
        let v = lc.eval(s);
        let mut sum = 0.0;
        for (i, c) in cursors.iter_mut().enumerate() {
            vals[i] = c.left_right(v);
            sum += vals[i].1;
        }
        for (i, &(kl, kr)) in vals.iter().enumerate() {
            let ti = if kr > kl { kr + (s - sum) } else { kr };
            paths[i].push(Knot::cont(s, ti));
        }
    }
    let t: Vec<MonotonePath> = paths.into_iter().map(|k| MonotonePath::from_raw(k, None)).collect();
    check_balance(&t, horizon)?;
    Ok(TimeChange { t, l: lcal.restrict(horizon)? })
}

/// The same solution by a single [`Sweep`] over complete paths.
pub fn solve_time_changes_sweep(ells: &[MonotonePath], horizon: f64) -> Result<TimeChange> {
    check_inputs(ells, horizon)?;
    let tails: Vec<Option<f64>> = ells
        .iter()
        .map(|l| match l.slope() {
            Some(a) if a > 0.0 => Ok(Some(a)),
            _ => Err(Error::Bounded),
        })
        .collect::<Result<_>>()?;
    let points: Vec<Vec<Knot>> = ells.iter().map(graph_points).collect();
    let views: Vec<&[Knot]> = points.iter().map(|p| p.as_slice()).collect();
    let mut sweep = Sweep::new(ells.len());
    let stop = SweepStop { budget: horizon, alpha: 0.0, level: f64::INFINITY };
    match sweep.advance(&views, &tails, stop)? {
        Progress::Done { .. } => {}
        Progress::Need(i) => return Err(Error::Invalid(format!("edge {i} ran out of data"))),
    }
    let tc = sweep.into_time_change(None);
    check_balance(&tc.t, horizon)?;
    Ok(tc)
}

/// Outcome of checking that each clock crosses a flat stretch of its `ell`
/// alone, with slope one, while every other clock stands still.
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaDetReport {
    /// Flat stretches entered by their clock before the horizon.
    pub flats: usize,
    /// Largest deviation from slope one of the clock on its flat.
    pub slope_error: f64,
    /// Largest movement of another clock meanwhile.
    pub drift_error: f64,
}

impl LemmaDetReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.slope_error <= tol && self.drift_error <= tol
    }
}

pub fn check_lemma_det(tc: &TimeChange, ells: &[MonotonePath]) -> LemmaDetReport {
    let horizon = tc.l.t_max();
    let mut rep = LemmaDetReport { flats: 0, slope_error: 0.0, drift_error: 0.0 };
    for (i, ell) in ells.iter().enumerate() {
        let ti = &tc.t[i];
        for f in ell.flats() {
            let Some(sa) = ti.first_passage(f.start) else { continue };
            if sa >= horizon || f.end <= f.start {
                continue;
            }
            let sb = ti.first_passage(f.end).map_or(horizon, |s| s.min(horizon));
            rep.flats += 1;
            let mut pts: Vec<f64> = ti.knots().iter().map(|k| k.t).filter(|&s| s > sa && s < sb).collect();
            pts.push(sb);
            let base: Vec<f64> = tc.t.iter().map(|p| p.eval(sa).unwrap()).collect();
            for &s in &pts {
                for (j, p) in tc.t.iter().enumerate() {
                    let moved = p.eval(s).unwrap() - base[j];
                    if j == i {
                        rep.slope_error = rep.slope_error.max((moved - (s - sa)).abs());
                    } else {
                        rep.drift_error = rep.drift_error.max(moved.abs());
                    }
                }
            }
        }
    }
    rep
}

/// Time changes by brute force: each step of size `ds` goes to the edges
/// at the lowest current level, split in proportion to their inverse slopes
/// when several tie within `tol`.
pub fn brute_force_time_changes(ells: &[MonotonePath], horizon: f64, ds: f64, tol: f64) -> Vec<Vec<(f64, f64)>> {
    let k = ells.len();
    let mut t = vec![0.0; k];
    let mut out = vec![vec![(0.0, 0.0)]; k];
    let n = (horizon / ds).round() as usize;
    let mut cursors: Vec<_> = ells.iter().map(|l| l.cursor()).collect();
    for step in 1..=n {
        let levels: Vec<f64> = (0..k).map(|i| cursors[i].eval(t[i])).collect();
        let low = levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let ties: Vec<usize> = (0..k).filter(|&i| levels[i] <= low + tol).collect();
        if ties.len() == 1 {
            t[ties[0]] += ds;
        } else {
            let inv: Vec<f64> = ties
                .iter()
                .map(|&i| {
                    let h = 1e-9;
                    let d = (cursors[i].eval(t[i] + h) - levels[i]) / h;
                    if d > 0.0 { 1.0 / d } else { 1e12 }
                })
                .collect();
            let z: f64 = inv.iter().sum();
            for (n, &i) in ties.iter().enumerate() {
                t[i] += ds * inv[n] / z;
            }
        }
        let s = step as f64 * ds;
        for i in 0..k {
            out[i].push((s, t[i]));
        }
    }
    out
}

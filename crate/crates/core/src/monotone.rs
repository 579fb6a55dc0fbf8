//! Nondecreasing càdlàg piecewise-linear paths and their algebra.
//!
//! A path is a list of knots `(t, left, right)`: `left` is the left limit at
//! `t`, `right` the value. Between knots the path is linear from the right value
//! of one knot to the left value of the next. Past the last knot the path is
//! either undefined or continues linearly with a fixed slope.

use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Knot {
    pub t: f64,
    pub left: f64,
    pub right: f64,
}

impl Knot {
    pub fn new(t: f64, left: f64, right: f64) -> Self {
        Knot { t, left, right }
    }

    pub fn cont(t: f64, v: f64) -> Self {
        Knot { t, left: v, right: v }
    }
}

/// Sequential evaluator over a knot list. Cheap for nondecreasing queries.
#[derive(Clone, Debug)]
pub struct Cursor<'a> {
    knots: &'a [Knot],
    slope: Option<f64>,
    j: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(knots: &'a [Knot], slope: Option<f64>) -> Self {
        Cursor { knots, slope, j: 0 }
    }

    fn seek(&mut self, t: f64) {
        let n = self.knots.len();
        if t < self.knots[self.j].t {
            self.j = self.knots.partition_point(|k| k.t <= t).saturating_sub(1);
            return;
        }
        let ahead = (self.j + 8).min(n - 1);
        if self.knots[ahead].t <= t {
            self.j = self.knots.partition_point(|k| k.t <= t) - 1;
            return;
        }
        while self.j + 1 < n && self.knots[self.j + 1].t <= t {
            self.j += 1;
        }
    }

    /// Left limit and value at `t`. NaN outside the domain.
    pub fn left_right(&mut self, t: f64) -> (f64, f64) {
        if !(t >= 0.0) {
            return (f64::NAN, f64::NAN);
        }
        self.seek(t);
        let k = self.knots[self.j];
        if t == k.t {
            return (k.left, k.right);
        }
        let v = if let Some(next) = self.knots.get(self.j + 1) {
            let w = (t - k.t) / (next.t - k.t);
            k.right + (next.left - k.right) * w
        } else {
            match self.slope {
                Some(s) => k.right + s * (t - k.t),
                None => f64::NAN,
            }
        };
        (v, v)
    }

    pub fn eval(&mut self, t: f64) -> f64 {
        self.left_right(t).1
    }

    pub fn eval_left(&mut self, t: f64) -> f64 {
        self.left_right(t).0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flat {
    pub start: f64,
    pub end: f64,
    pub level: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommonLevel {
    pub i: usize,
    pub j: usize,
    pub level: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonePath {
    knots: Vec<Knot>,
    slope: Option<f64>,
}

impl MonotonePath {
    /// Validated constructor. The first knot must sit at `t = 0`.
    pub fn new(knots: Vec<Knot>, slope: Option<f64>) -> Result<Self> {
        let first = knots
            .first()
            .ok_or_else(|| Error::Invalid("empty knot list".into()))?;
        if first.t != 0.0 {
            return Err(Error::Invalid(format!("first knot at t = {}, expected 0", first.t)));
        }
        if let Some(s) = slope {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::Invalid(format!("extrapolation slope {s}")));
            }
        }
        let mut prev: Option<Knot> = None;
        for k in &knots {
            if !(k.t.is_finite() && k.left.is_finite() && k.right.is_finite()) {
                return Err(Error::Invalid(format!("non-finite knot at t = {}", k.t)));
            }
            if k.right < k.left {
                return Err(Error::NotMonotone { t: k.t });
            }
            if let Some(p) = prev {
                if k.t <= p.t {
                    return Err(Error::Invalid(format!("knot times not increasing at {}", k.t)));
                }
                if k.left < p.right {
                    return Err(Error::NotMonotone { t: k.t });
                }
            }
            prev = Some(*k);
        }
        Ok(MonotonePath { knots, slope })
    }

    /// Builds from knots produced by exact algebra, absorbing rounding-level
    /// violations of monotonicity and merging coincident times.
    pub(crate) fn from_raw(raw: Vec<Knot>, slope: Option<f64>) -> Self {
        let mut knots: Vec<Knot> = Vec::with_capacity(raw.len());
        for k in raw {
            match knots.last_mut() {
                Some(p) if k.t <= p.t => {
                    p.right = p.right.max(k.right);
                }
                Some(p) => {
                    let left = k.left.max(p.right);
                    knots.push(Knot::new(k.t, left, k.right.max(left)));
                }
                None => knots.push(Knot::new(k.t, k.left, k.right.max(k.left))),
            }
        }
        MonotonePath { knots, slope }
    }

    pub fn from_points(points: &[(f64, f64)], slope: Option<f64>) -> Result<Self> {
        Self::new(points.iter().map(|&(t, v)| Knot::cont(t, v)).collect(), slope)
    }

    /// `t -> a t` on the half-line.
    pub fn linear(a: f64) -> Self {
        MonotonePath { knots: vec![Knot::cont(0.0, 0.0)], slope: Some(a) }
    }

    pub fn identity() -> Self {
        Self::linear(1.0)
    }

    pub fn constant(c: f64) -> Self {
        MonotonePath { knots: vec![Knot::cont(0.0, c)], slope: Some(0.0) }
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn slope(&self) -> Option<f64> {
        self.slope
    }

    pub fn t_max(&self) -> f64 {
        self.knots.last().map(|k| k.t).unwrap_or(0.0)
    }

    pub fn last_value(&self) -> f64 {
        self.knots.last().map(|k| k.right).unwrap_or(0.0)
    }

    pub fn with_slope(mut self, slope: Option<f64>) -> Self {
        self.slope = slope;
        self
    }

    pub fn cursor(&self) -> Cursor<'_> {
        Cursor::new(&self.knots, self.slope)
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if t < 0.0 || t.is_nan() || (t > self.t_max() && self.slope.is_none()) {
            return Err(Error::OutOfDomain { t, t_max: self.t_max() });
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(self.cursor().eval(t))
    }

    pub fn eval_left(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(self.cursor().eval_left(t))
    }

    pub fn scale(&self, c: f64) -> Self {
        assert!(c >= 0.0, "scaling by a negative constant breaks monotonicity");
        MonotonePath {
            knots: self
                .knots
                .iter()
                .map(|k| Knot::new(k.t, k.left * c, k.right * c))
                .collect(),
            slope: self.slope.map(|s| s * c),
        }
    }

    /// Restriction to `[0, t_end]`, without extrapolation.
    pub fn restrict(&self, t_end: f64) -> Result<Self> {
        self.check_domain(t_end)?;
        let mut knots: Vec<Knot> = self.knots.iter().take_while(|k| k.t < t_end).copied().collect();
        let (l, r) = self.cursor().left_right(t_end);
        knots.push(Knot::new(t_end, l, r));
        Ok(MonotonePath { knots, slope: None })
    }

    /// Adds a knot at `t` (inside the domain or on the extension) if absent.
    pub fn with_knot_at(&self, t: f64) -> Result<Self> {
        self.check_domain(t)?;
        let mut knots = self.knots.clone();
        let pos = knots.partition_point(|k| k.t < t);
        if pos < knots.len() && knots[pos].t == t {
            return Ok(self.clone());
        }
        let v = self.cursor().eval(t);
        knots.insert(pos, Knot::cont(t, v));
        Ok(MonotonePath { knots, slope: self.slope })
    }

    /// `inf { t : f(t) >= level }`, or `None` if the level is never reached.
    pub fn first_passage(&self, level: f64) -> Option<f64> {
        let ks = &self.knots;
        if ks[0].left >= level || ks[0].right >= level {
            return Some(0.0);
        }
        for w in ks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b.left >= level {
                let frac = (level - a.right) / (b.left - a.right);
                return Some(a.t + frac * (b.t - a.t));
            }
            if b.right >= level {
                return Some(b.t);
            }
        }
        let last = ks[ks.len() - 1];
        match self.slope {
            Some(s) if s > 0.0 => Some(last.t + (level - last.right) / s),
            _ => None,
        }
    }

    pub fn jumps(&self) -> Vec<Knot> {
        self.knots.iter().filter(|k| k.right > k.left).copied().collect()
    }

    /// Maximal intervals of positive length on which the path is constant.
    pub fn flats(&self) -> Vec<Flat> {
        let mut out: Vec<Flat> = Vec::new();
        for (j, w) in self.knots.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            if a.right != b.left {
                continue;
            }
            match out.last_mut() {
                Some(f) if f.end == a.t && f.level == a.right && self.knots[j].left == a.right => {
                    f.end = b.t;
                }
                _ => out.push(Flat { start: a.t, end: b.t, level: a.right }),
            }
        }
        if self.slope == Some(0.0) {
            let last = *self.knots.last().unwrap();
            match out.last_mut() {
                Some(f) if f.end == last.t && f.level == last.right && last.left == last.right => {
                    f.end = f64::INFINITY;
                }
                _ => out.push(Flat { start: last.t, end: f64::INFINITY, level: last.right }),
            }
        }
        out
    }

    /// Generalized inverse `s -> inf { t : f(t) > s }`.
    ///
    /// Starting from the point `(0, 0)`, the graph of the path (with vertical
    /// segments at jumps) is reflected in the diagonal; runs of equal level
    /// become jumps of the inverse.
    pub fn generalized_inverse(&self) -> Result<Self> {
        let slope = match self.slope {
            Some(s) if s > 0.0 => 1.0 / s,
            _ => return Err(Error::Bounded),
        };
        if self.knots[0].left < 0.0 {
            return Err(Error::Invalid("generalized inverse needs f(0-) >= 0".into()));
        }
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(2 * self.knots.len() + 1);
        let mut push = |p: (f64, f64)| {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        };
        push((0.0, 0.0));
        for k in &self.knots {
            push((k.left, k.t));
            push((k.right, k.t));
        }
        let mut knots: Vec<Knot> = Vec::with_capacity(pts.len());
        for (y, x) in pts {
            match knots.last_mut() {
                Some(k) if k.t == y => k.right = x,
                _ => knots.push(Knot::new(y, x, x)),
            }
        }
        Ok(Self::from_raw(knots, Some(slope)))
    }

    /// Composition `self ∘ g`.
    pub fn compose(&self, g: &MonotonePath) -> Result<Self> {
        let f = self;
        let f_end = f.t_max();
        let mut g = g.clone();
        let slope = match (f.slope, g.slope) {
            (_, Some(sg)) if sg == 0.0 => Some(0.0),
            (Some(sf), Some(sg)) => {
                let g_end = g.last_value();
                if g_end < f_end {
                    let t_star = g.t_max() + (f_end - g_end) / sg;
                    if t_star > g.t_max() {
                        g.knots.push(Knot::cont(t_star, f_end));
                    }
                }
                Some(sf * sg)
            }
            _ => None,
        };
        let g_max = g.last_value();
        if f.slope.is_none() && g_max > f_end {
            return Err(Error::OutOfDomain { t: g_max, t_max: f_end });
        }

        // Levels at which f changes slope or jumps, used as crossing points.
        let levels: Vec<f64> = f.knots.iter().map(|k| k.t).collect();

        let mut fc = f.cursor();
        let mut out: Vec<Knot> = Vec::with_capacity(g.knots.len() * 2);
        let k0 = g.knots[0];
        out.push(Knot::new(0.0, fc.eval_left(k0.left), fc.eval(k0.right)));
        for w in g.knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ya, yb) = (a.right, b.left);
            if yb > ya {
                let lo = levels.partition_point(|&y| y <= ya);
                let hi = levels.partition_point(|&y| y < yb);
                let rate = (b.t - a.t) / (yb - ya);
                for &y in &levels[lo..hi] {
                    let tau = (a.t + (y - ya) * rate).clamp(a.t, b.t);
                    let (l, r) = fc.left_right(y);
                    out.push(Knot::new(tau, l, r));
                }
                let left = fc.eval_left(yb);
                out.push(Knot::new(b.t, left, fc.eval(b.right)));
            } else {
                let left = fc.eval(yb);
                out.push(Knot::new(b.t, left, fc.eval(b.right)));
            }
        }
        if out.iter().any(|k| k.left.is_nan() || k.right.is_nan()) {
            return Err(Error::OutOfDomain { t: g_max, t_max: f_end });
        }
        Ok(Self::from_raw(out, slope))
    }

    /// Pointwise sum. With extrapolation on every path, the sum lives on the
    /// largest domain; otherwise on the smallest.
    pub fn sum(paths: &[MonotonePath]) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::Invalid("sum of no paths".into()));
        }
        let all_slopes = paths.iter().all(|p| p.slope.is_some());
        let t_end = if all_slopes {
            paths.iter().map(|p| p.t_max()).fold(0.0, f64::max)
        } else {
            paths.iter().map(|p| p.t_max()).fold(f64::INFINITY, f64::min)
        };
        let mut times: Vec<f64> = paths
            .iter()
            .flat_map(|p| p.knots.iter().map(|k| k.t))
            .filter(|&t| t <= t_end)
            .collect();
        times.push(t_end);
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let mut cursors: Vec<Cursor> = paths.iter().map(|p| p.cursor()).collect();
        let mut out = Vec::with_capacity(times.len());
        for t in times {
            let (mut l, mut r) = (0.0, 0.0);
            for c in cursors.iter_mut() {
                let (a, b) = c.left_right(t);
                l += a;
                r += b;
            }
            out.push(Knot::new(t, l, r));
        }
        let slope = if all_slopes {
            Some(paths.iter().map(|p| p.slope.unwrap()).sum())
        } else {
            None
        };
        Ok(Self::from_raw(out, slope))
    }

    pub fn add(&self, other: &MonotonePath) -> Result<Self> {
        Self::sum(&[self.clone(), other.clone()])
    }

    /// Reports a level at which two of the paths are both constant on
    /// intervals of positive length.
    pub fn detect_common_constancy(paths: &[MonotonePath], tol: f64) -> Option<CommonLevel> {
        let mut flats: Vec<(f64, usize)> = paths
            .iter()
            .enumerate()
            .flat_map(|(i, p)| p.flats().into_iter().map(move |f| (f.level, i)))
            .collect();
        flats.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for (n, &(level, i)) in flats.iter().enumerate() {
            for &(other, j) in &flats[n + 1..] {
                if other - level > tol {
                    break;
                }
                if j != i {
                    return Some(CommonLevel { i: i.min(j), j: i.max(j), level });
                }
            }
        }
        None
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match self.slope {
            Some(s) => writeln!(w, "# slope={s}")?,
            None => writeln!(w, "# slope=none")?,
        }
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "left", "right"])?;
        for k in &self.knots {
            wr.write_record([k.t.to_string(), k.left.to_string(), k.right.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut text = String::new();
        let mut r = r;
        r.read_to_string(&mut text)?;
        let mut slope = None;
        for line in text.lines().filter(|l| l.starts_with('#')) {
            if let Some(v) = line.trim_start_matches('#').trim().strip_prefix("slope=") {
                slope = match v.trim() {
                    "none" => None,
                    s => Some(s.parse::<f64>().map_err(|e| Error::Invalid(e.to_string()))?),
                };
            }
        }
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let mut knots = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Invalid("short row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Invalid(e.to_string()))
            };
            knots.push(Knot::new(num(0)?, num(1)?, num(2)?));
        }
        Self::new(knots, slope)
    }
}

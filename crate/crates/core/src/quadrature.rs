//! Adaptive integration on top of tanh-sinh rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use quadrature::double_exponential;

#[derive(Clone, Copy, Debug)]
pub struct Quad {
    pub abs_tol: f64,
    /// Cap on interval bisections per call.
    pub max_splits: u32,
}

impl Default for Quad {
    fn default() -> Self {
        Quad { abs_tol: 1e-11, max_splits: 200 }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, o: Integral) -> Integral {
        Integral { value: self.value + o.value, error: self.error + o.error }
    }
}

impl Quad {
    pub fn with_tol(abs_tol: f64) -> Self {
        Quad { abs_tol, ..Default::default() }
    }

    /// Integral over a finite interval. The piece with the largest error
    /// estimate is bisected until the estimates sum below the tolerance.
    pub fn finite<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> Integral {
        if !(b > a) {
            return Integral::default();
        }
        // The rule's own stopping test can accept two agreeing coarse levels,
        // so it is asked for more than the caller needs.
        let rule = |a: f64, b: f64, tol: f64| {
            let out = double_exponential::integrate(f, a, b, (1e-3 * tol).max(1e-15));
            Piece { a, b, value: out.integral, error: out.error_estimate }
        };
        let mut heap = BinaryHeap::new();
        heap.push(rule(a, b, self.abs_tol));
        let mut error = heap.peek().unwrap().error;
        let mut splits = 0;
        while error > self.abs_tol && splits < self.max_splits {
            let p = heap.pop().unwrap();
            let mid = 0.5 * (p.a + p.b);
            if !(mid > p.a && mid < p.b) {
                heap.push(p);
                break;
            }
            let tol = 0.25 * self.abs_tol;
            let (l, r) = (rule(p.a, mid, tol), rule(mid, p.b, tol));
            error += l.error + r.error - p.error;
            heap.push(l);
            heap.push(r);
            splits += 1;
        }
        let mut pieces = heap.into_vec();
        pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
        Integral {
            value: pieces.iter().map(|p| p.value).sum(),
            error: pieces.iter().map(|p| p.error).sum(),
        }
    }

    /// Integral over `[a, b]` split at the given interior points.
    pub fn with_breaks<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, breaks: &[f64]) -> Integral {
        let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup();
        let n = pts.len() + 1;
        let sub = Quad { abs_tol: self.abs_tol / n as f64, ..*self };
        let mut lo = a;
        let mut total = Integral::default();
        for x in pts.into_iter().chain(std::iter::once(b)) {
            total = total + sub.finite(f, lo, x);
            lo = x;
        }
        total
    }

    /// As [`Quad::with_breaks`], for integrands with an algebraic singularity
    /// up to `(x - a)^(-3/4)` at `a`. On the first piece `x = a + w u^4`
    /// turns the singularity into a bounded factor.
    pub fn singular_left<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, breaks: &[f64]) -> Integral {
        let first = breaks
            .iter()
            .copied()
            .filter(|&x| x > a && x < b)
            .fold(b, f64::min)
            .min(a + 1.0);
        let w = first - a;
        let g = |u: f64| {
            let u2 = u * u;
            4.0 * w * u2 * u * f(a + w * u2 * u2)
        };
        let sub = Quad { abs_tol: 0.5 * self.abs_tol, ..*self };
        sub.finite(&g, 0.0, 1.0) + sub.with_breaks(f, first, b, breaks)
    }

    /// Integral over `[a, x_max]` split at breakpoints and at unit-spaced
    /// points, for integrands whose tail beyond `x_max` is negligible.
    pub fn half_line<F: Fn(f64) -> f64>(&self, f: &F, a: f64, x_max: f64, breaks: &[f64]) -> Integral {
        let mut pts: Vec<f64> = breaks.to_vec();
        let mut x = a.floor() + 1.0;
        while x < x_max {
            pts.push(x);
            x += 1.0;
        }
        self.with_breaks(f, a, x_max, &pts)
    }
}

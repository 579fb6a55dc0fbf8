//! The star graph, boundary parameters and jump measures.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Quad;

/// A point of the star graph with `k` half-line edges glued at the center,
/// plus the point at infinity of each edge and a cemetery. Edges are
/// indexed from 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphPoint {
    Center,
    Edge { edge: usize, x: f64 },
    Infinity { edge: usize },
    Cemetery,
}

impl GraphPoint {
    /// `(edge, x)`, collapsing `x = 0` to the center.
    pub fn on_edge(edge: usize, x: f64) -> Self {
        if x <= 0.0 {
            GraphPoint::Center
        } else {
            GraphPoint::Edge { edge, x }
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            GraphPoint::Center => 0.0,
            GraphPoint::Edge { x, .. } => x,
            GraphPoint::Infinity { .. } | GraphPoint::Cemetery => f64::INFINITY,
        }
    }

    pub fn edge(&self) -> Option<usize> {
        match *self {
            GraphPoint::Edge { edge, .. } | GraphPoint::Infinity { edge } => Some(edge),
            _ => None,
        }
    }
}

/// Tail function `N(x) = m([x, inf))` of a measure on `(0, inf)`.
/// Left-continuous, so an atom at `a` is counted in `N(a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Tail {
    /// `exp(-rate x)`.
    Exponential { rate: f64 },
    /// `min(1, (scale / x)^shape)`.
    Pareto { scale: f64, shape: f64 },
    /// `c x^(-index)` with `index` in (0, 1); infinite total mass.
    StableLike { c: f64, index: f64 },
    /// Linear interpolation of `(x, N)` points, constant before the first
    /// and zero after the last. Two points sharing `x` encode an atom.
    Tabulated { points: Vec<(f64, f64)> },
    Mixture { parts: Vec<(f64, Tail)> },
    /// Conditional law given `X >= eps`.
    Truncated { inner: Box<Tail>, eps: f64 },
}

impl Tail {
    pub fn scaled(&self, w: f64) -> Tail {
        match self {
            Tail::Mixture { parts } => Tail::Mixture {
                parts: parts.iter().map(|(v, t)| (v * w, t.clone())).collect(),
            },
            Tail::StableLike { c, index } => Tail::StableLike { c: c * w, index: *index },
            t => Tail::Mixture { parts: vec![(w, t.clone())] },
        }
    }

    pub fn zero() -> Tail {
        Tail::Mixture { parts: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Params(m.to_string()));
        match self {
            Tail::Exponential { rate } if !(*rate > 0.0 && rate.is_finite()) => bad("exponential rate must be positive"),
            Tail::Pareto { scale, shape } if !(*scale > 0.0 && *shape > 0.0) => bad("pareto scale and shape must be positive"),
            Tail::StableLike { c, index } if !(*c >= 0.0 && *index > 0.0 && *index < 1.0) => {
                bad("stable-like tail needs c >= 0 and index in (0, 1)")
            }
            Tail::Tabulated { points } => {
                if points.is_empty() {
                    return bad("tabulated tail without points");
                }
                for w in points.windows(2) {
                    if w[1].0 < w[0].0 || w[1].1 > w[0].1 {
                        return bad("tabulated tail must have nondecreasing x and nonincreasing N");
                    }
                }
                if points.iter().any(|p| !(p.0 >= 0.0 && p.1 >= 0.0 && p.0.is_finite() && p.1.is_finite())) {
                    return bad("tabulated tail needs finite nonnegative entries");
                }
                if points[0].0 == 0.0 && points.iter().any(|p| p.0 == 0.0 && p.1 != points[0].1) {
                    return bad("tabulated tail cannot put mass at 0");
                }
                Ok(())
            }
            Tail::Mixture { parts } => {
                for (w, t) in parts {
                    if !(*w >= 0.0 && w.is_finite()) {
                        return bad("mixture weights must be nonnegative");
                    }
                    t.validate()?;
                }
                Ok(())
            }
            Tail::Truncated { inner, eps } => {
                if !(*eps > 0.0) {
                    return bad("truncation level must be positive");
                }
                inner.validate()?;
                if !(inner.value(*eps) > 0.0) {
                    return bad("truncated tail has no mass above the level");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `N(x)`; the total mass for `x <= 0`.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Tail::Exponential { rate } => (-rate * x.max(0.0)).exp(),
            Tail::Pareto { scale, shape } => {
                if x <= *scale {
                    1.0
                } else {
                    (scale / x).powf(*shape)
                }
            }
            Tail::StableLike { c, index } => {
                if x <= 0.0 {
                    if *c == 0.0 { 0.0 } else { f64::INFINITY }
                } else {
                    c * x.powf(-index)
                }
            }
            Tail::Tabulated { points } => {
                let j = points.partition_point(|p| p.0 < x);
                if j == 0 {
                    points[0].1
                } else if j == points.len() {
                    0.0
                } else if points[j].0 == x {
                    points[j].1
                } else {
                    let (a, b) = (points[j - 1], points[j]);
                    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
                }
            }
            Tail::Mixture { parts } => parts.iter().map(|(w, t)| w * t.value(x)).sum(),
            Tail::Truncated { inner, eps } => {
                if x <= *eps {
                    1.0
                } else {
                    inner.value(x) / inner.value(*eps)
                }
            }
        }
    }

    pub fn total(&self) -> f64 {
        self.value(0.0)
    }

    /// Density of the absolutely continuous part, `-N'(x)`.
    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Tail::Exponential { rate } => rate * (-rate * x).exp(),
            Tail::Pareto { scale, shape } => {
                if x <= *scale {
                    0.0
                } else {
                    shape * scale.powf(*shape) * x.powf(-shape - 1.0)
                }
            }
            Tail::StableLike { c, index } => c * index * x.powf(-index - 1.0),
            Tail::Tabulated { points } => {
                let j = points.partition_point(|p| p.0 < x);
                if j == 0 || j == points.len() {
                    return 0.0;
                }
                let (a, b) = (points[j - 1], points[j]);
                if b.0 > a.0 {
                    (a.1 - b.1) / (b.0 - a.0)
                } else {
                    0.0
                }
            }
            Tail::Mixture { parts } => parts.iter().map(|(w, t)| w * t.density(x)).sum(),
            Tail::Truncated { inner, eps } => {
                if x <= *eps {
                    0.0
                } else {
                    inner.density(x) / inner.value(*eps)
                }
            }
        }
    }

    /// Point masses `(x, weight)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Tail::Tabulated { points } => {
                let mut out = Vec::new();
                for w in points.windows(2) {
                    if w[0].0 == w[1].0 && w[0].1 > w[1].1 {
                        out.push((w[0].0, w[0].1 - w[1].1));
                    }
                }
                let last = points[points.len() - 1];
                if last.1 > 0.0 {
                    out.push(last);
                }
                out
            }
            Tail::Mixture { parts } => parts
                .iter()
                .flat_map(|(w, t)| t.atoms().into_iter().map(move |(x, a)| (x, a * w)))
                .collect(),
            Tail::Truncated { inner, eps } => {
                let norm = inner.value(*eps);
                inner
                    .atoms()
                    .into_iter()
                    .filter(|a| a.0 >= *eps)
                    .map(|(x, a)| (x, a / norm))
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// Points where `N` is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Tail::Pareto { scale, .. } => vec![*scale],
            Tail::Tabulated { points } => points.iter().map(|p| p.0).collect(),
            Tail::Mixture { parts } => parts.iter().flat_map(|(_, t)| t.breakpoints()).collect(),
            Tail::Truncated { inner, eps } => {
                let mut b = inner.breakpoints();
                b.push(*eps);
                b
            }
            _ => Vec::new(),
        }
    }

    /// `sup { x : N(x) >= u }` for `0 < u <= total`.
    pub fn inverse(&self, u: f64) -> f64 {
        match self {
            Tail::Exponential { rate } => -u.ln() / rate,
            Tail::Pareto { scale, shape } => scale * u.powf(-1.0 / shape),
            Tail::StableLike { c, index } => (c / u).powf(1.0 / index),
            Tail::Tabulated { points } => {
                let n = points.len();
                if u <= points[n - 1].1 {
                    return points[n - 1].0;
                }
                for w in points.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if a.1 >= u && u > b.1 {
                        if b.0 == a.0 {
                            return a.0;
                        }
                        return a.0 + (a.1 - u) / (a.1 - b.1) * (b.0 - a.0);
                    }
                }
                points[0].0
            }
            Tail::Truncated { inner, eps } => inner.inverse(u * inner.value(*eps)).max(*eps),
            Tail::Mixture { .. } => {
                let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
                while self.value(hi) >= u {
                    lo = hi;
                    hi *= 2.0;
                    if hi > 1e300 {
                        return f64::INFINITY;
                    }
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.value(mid) >= u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                lo
            }
        }
    }

    /// Draw from `m` restricted to `[eps, inf)`, normalized.
    pub fn sample_above<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> f64 {
        match self {
            Tail::Mixture { parts } => {
                let weights: Vec<f64> = parts.iter().map(|(w, t)| w * t.value(eps)).collect();
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (i, w) in weights.iter().enumerate() {
                    if u < *w || i + 1 == weights.len() {
                        return parts[i].1.sample_above(eps, rng);
                    }
                    u -= w;
                }
                unreachable!("mixture without parts")
            }
            Tail::Truncated { inner, eps: e } => inner.sample_above(eps.max(*e), rng),
            _ => {
                let u = (1.0 - rng.random::<f64>()) * self.value(eps);
                self.inverse(u).max(eps)
            }
        }
    }

    /// `int_0^eps (N(x) - N(eps)) dx = int_(0,eps) x m(dx)`.
    pub fn small_jump_mean(&self, eps: f64, quad: &Quad) -> f64 {
        let top = self.value(eps);
        quad.singular_left(&|x| self.value(x) - top, 0.0, eps, &self.breakpoints()).value
    }
}

/// Jump measure of the boundary condition, given edge by edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum JumpMeasure {
    Zero,
    /// `delta * sum_i p_i mu_i`, where `radial[i]` is the tail of the
    /// probability law `mu_i` on edge `i`.
    Finite { delta: f64, p: Vec<f64>, radial: Vec<Tail> },
    /// Per-edge tails `N_i`, possibly of infinite mass.
    Infinite { tails: Vec<Tail> },
}

impl JumpMeasure {
    pub fn edge_tail(&self, i: usize) -> Tail {
        match self {
            JumpMeasure::Zero => Tail::zero(),
            JumpMeasure::Finite { delta, p, radial } => radial[i].scaled(delta * p[i]),
            JumpMeasure::Infinite { tails } => tails[i].clone(),
        }
    }

    pub fn edge_mass(&self, i: usize) -> f64 {
        match self {
            JumpMeasure::Zero => 0.0,
            JumpMeasure::Finite { delta, p, .. } => delta * p[i],
            JumpMeasure::Infinite { tails } => tails[i].total(),
        }
    }

    pub fn edges(&self) -> Option<usize> {
        match self {
            JumpMeasure::Zero => None,
            JumpMeasure::Finite { p, .. } => Some(p.len()),
            JumpMeasure::Infinite { tails } => Some(tails.len()),
        }
    }

    pub fn total_mass(&self, k: usize) -> f64 {
        (0..k).map(|i| self.edge_mass(i)).sum()
    }

    pub fn is_zero(&self, k: usize) -> bool {
        self.total_mass(k) == 0.0
    }

    pub fn scaled(&self, c: f64) -> JumpMeasure {
        match self {
            JumpMeasure::Zero => JumpMeasure::Zero,
            JumpMeasure::Finite { delta, p, radial } => JumpMeasure::Finite {
                delta: delta * c,
                p: p.clone(),
                radial: radial.clone(),
            },
            JumpMeasure::Infinite { tails } => JumpMeasure::Infinite {
                tails: tails.iter().map(|t| t.scaled(c)).collect(),
            },
        }
    }

    /// Finite measure with per-edge tails, written in `delta, p, mu` form.
    pub fn from_edge_tails(tails: Vec<Tail>) -> JumpMeasure {
        let masses: Vec<f64> = tails.iter().map(|t| t.total()).collect();
        let delta: f64 = masses.iter().sum();
        if delta == 0.0 {
            return JumpMeasure::Zero;
        }
        let radial = tails
            .into_iter()
            .zip(&masses)
            .map(|(t, &w)| if w > 0.0 { t.scaled(1.0 / w) } else { Tail::Exponential { rate: 1.0 } })
            .collect();
        JumpMeasure::Finite { delta, p: masses.iter().map(|w| w / delta).collect(), radial }
    }

    /// Restriction to jumps of size at least `eps`.
    pub fn truncate(&self, k: usize, eps: f64) -> JumpMeasure {
        match self {
            JumpMeasure::Infinite { tails } => JumpMeasure::from_edge_tails(
                tails
                    .iter()
                    .map(|t| {
                        let w = t.value(eps);
                        if w > 0.0 {
                            Tail::Truncated { inner: Box::new(t.clone()), eps }.scaled(w)
                        } else {
                            Tail::zero()
                        }
                    })
                    .collect(),
            ),
            JumpMeasure::Finite { .. } => {
                JumpMeasure::from_edge_tails((0..k).map(|i| self.edge_tail(i)).collect())
            }
            JumpMeasure::Zero => JumpMeasure::Zero,
        }
    }

    /// The part of the measure carried by the listed edges, reindexed.
    pub fn restrict(&self, edges: &[usize]) -> JumpMeasure {
        match self {
            JumpMeasure::Zero => JumpMeasure::Zero,
            JumpMeasure::Finite { .. } => {
                JumpMeasure::from_edge_tails(edges.iter().map(|&i| self.edge_tail(i)).collect())
            }
            JumpMeasure::Infinite { tails } => JumpMeasure::Infinite {
                tails: edges.iter().map(|&i| tails[i].clone()).collect(),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    AnalyticOnly,
    Invalid,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Validation {
    pub status: Status,
    pub reasons: Vec<String>,
    /// Edges with zero weight and finite jump mass: the process leaves them
    /// through the center for good, re-entering only by jumps.
    pub transient: Vec<usize>,
}

/// Boundary data `(alpha, beta, gamma, m)` at the center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub gamma: f64,
    pub m: JumpMeasure,
}

impl BoundaryParams {
    pub fn walsh(beta: Vec<f64>) -> Self {
        BoundaryParams { alpha: 0.0, beta, gamma: 0.0, m: JumpMeasure::Zero }
    }

    pub fn k(&self) -> usize {
        self.beta.len()
    }

    pub fn beta_bar(&self) -> f64 {
        self.beta.iter().sum()
    }

    pub fn validate(&self) -> Validation {
        let mut reasons = Vec::new();
        let invalid = |mut reasons: Vec<String>, r: String| {
            reasons.push(r);
            Validation { status: Status::Invalid, reasons, transient: Vec::new() }
        };
        let k = self.k();
        if k == 0 {
            return invalid(reasons, "at least one edge is required".into());
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return invalid(reasons, format!("alpha = {} must be finite and >= 0", self.alpha));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return invalid(reasons, format!("gamma = {} must be finite and >= 0", self.gamma));
        }
        if let Some(b) = self.beta.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return invalid(reasons, format!("beta entry {b} must be finite and >= 0"));
        }
        if let Some(n) = self.m.edges() {
            if n != k {
                return invalid(reasons, format!("measure has {n} edges, beta has {k}"));
            }
        }
        match &self.m {
            JumpMeasure::Zero => {}
            JumpMeasure::Finite { delta, p, radial } => {
                if !(*delta >= 0.0 && delta.is_finite()) {
                    return invalid(reasons, format!("delta = {delta} must be finite and >= 0"));
                }
                if radial.len() != k {
                    return invalid(reasons, "one radial law per edge is required".into());
                }
                if p.iter().any(|x| !(*x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return invalid(reasons, "edge weights p must be a probability vector".into());
                }
                for (i, t) in radial.iter().enumerate() {
                    if p[i] == 0.0 {
                        continue;
                    }
                    if let Err(e) = t.validate() {
                        return invalid(reasons, format!("edge {i}: {e}"));
                    }
                    if (t.total() - 1.0).abs() > 1e-9 {
                        return invalid(reasons, format!("radial law on edge {i} is not a probability"));
                    }
                }
            }
            JumpMeasure::Infinite { tails } => {
                let quad = Quad::with_tol(1e-10);
                for (i, t) in tails.iter().enumerate() {
                    if let Err(e) = t.validate() {
                        return invalid(reasons, format!("edge {i}: {e}"));
                    }
                    let near = quad.singular_left(&|x| t.value(x), 0.0, 1.0, &t.breakpoints());
                    if !near.value.is_finite() || near.error > 1e-6 * near.value.max(1.0) {
                        return invalid(reasons, format!("edge {i}: int_0^1 N(x) dx is not finite"));
                    }
                }
            }
        }

        let infinite: Vec<bool> = (0..k).map(|i| self.m.edge_mass(i).is_infinite()).collect();
        let transient: Vec<usize> = (0..k).filter(|&i| self.beta[i] == 0.0 && !infinite[i]).collect();
        let core_edges = (0..k).filter(|&i| self.beta[i] > 0.0 || infinite[i]).count();
        let mass = self.m.total_mass(k);
        if !transient.is_empty() {
            reasons.push(format!("edges {transient:?} have zero weight and finite jump mass"));
        }
        if core_edges == 0 && self.alpha == 0.0 {
            if mass == 0.0 {
                return invalid(reasons, "alpha, beta and m all vanish".into());
            }
            reasons.push("no diffusive exit from the center; only analytic quantities are available".into());
            return Validation { status: Status::AnalyticOnly, reasons, transient };
        }
        Validation { status: Status::Ok, reasons, transient }
    }

    /// Divides all parameters by `sum(beta)`; the process is unchanged.
    pub fn normalize(&self) -> Result<Self> {
        let b = self.beta_bar();
        if !(b > 0.0) {
            return Err(Error::Params("normalization needs sum(beta) > 0".into()));
        }
        if b == 1.0 {
            return Ok(self.clone());
        }
        Ok(BoundaryParams {
            alpha: self.alpha / b,
            beta: self.beta.iter().map(|x| x / b).collect(),
            gamma: self.gamma / b,
            m: self.m.scaled(1.0 / b),
        })
    }

    /// Image parameters under the edge map `psi` (edge `i` goes to `psi[i]`).
    pub fn lump(&self, psi: &[usize]) -> Result<Self> {
        let k = self.k();
        if psi.len() != k {
            return Err(Error::Params(format!("edge map has length {}, expected {k}", psi.len())));
        }
        let n = psi.iter().max().map(|m| m + 1).unwrap_or(0);
        if (0..n).any(|j| !psi.contains(&j)) {
            return Err(Error::Params("edge map must be onto".into()));
        }
        let mut beta = vec![0.0; n];
        for (i, &j) in psi.iter().enumerate() {
            beta[j] += self.beta[i];
        }
        let group = |j: usize| -> Vec<usize> { (0..k).filter(|&i| psi[i] == j).collect() };
        let m = match &self.m {
            JumpMeasure::Zero => JumpMeasure::Zero,
            JumpMeasure::Finite { delta, p, radial } => {
                let mut pj = vec![0.0; n];
                let mut rj = Vec::with_capacity(n);
                for (j, slot) in pj.iter_mut().enumerate() {
                    let g = group(j);
                    *slot = g.iter().map(|&i| p[i]).sum();
                    rj.push(if *slot > 0.0 {
                        Tail::Mixture {
                            parts: g.iter().filter(|&&i| p[i] > 0.0).map(|&i| (p[i] / *slot, radial[i].clone())).collect(),
                        }
                    } else {
                        radial[g[0]].clone()
                    });
                }
                JumpMeasure::Finite { delta: *delta, p: pj, radial: rj }
            }
            JumpMeasure::Infinite { tails } => JumpMeasure::Infinite {
                tails: (0..n)
                    .map(|j| Tail::Mixture { parts: group(j).iter().map(|&i| (1.0, tails[i].clone())).collect() })
                    .collect(),
            },
        };
        Ok(BoundaryParams { alpha: self.alpha, beta, gamma: self.gamma, m })
    }

    /// The law simulated at truncation level `eps`: jumps below `eps` are
    /// dropped, and an edge with zero weight and infinite mass gets the
    /// weight `int_(0,eps) x m_i(dx)` of the dropped jumps.
    pub fn truncated(&self, eps: f64) -> Self {
        let quad = Quad::with_tol(1e-12);
        let k = self.k();
        let beta = (0..k)
            .map(|i| {
                if self.beta[i] == 0.0 && self.m.edge_mass(i).is_infinite() {
                    self.m.edge_tail(i).small_jump_mean(eps, &quad)
                } else {
                    self.beta[i]
                }
            })
            .collect();
        BoundaryParams { alpha: self.alpha, beta, gamma: self.gamma, m: self.m.truncate(k, eps) }
    }

    pub fn has_infinite_mass(&self) -> bool {
        (0..self.k()).any(|i| self.m.edge_mass(i).is_infinite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn finite3() -> BoundaryParams {
        BoundaryParams {
            alpha: 1.0,
            beta: vec![0.5, 0.3, 0.2],
            gamma: 0.5,
            m: JumpMeasure::Finite {
                delta: 1.0,
                p: vec![0.2, 0.3, 0.5],
                radial: vec![Tail::Exponential { rate: 2.0 }; 3],
            },
        }
    }

    #[test]
    fn tabulated_tail_with_atom() {
        let t = Tail::Tabulated { points: vec![(0.5, 2.0), (1.0, 1.0), (1.0, 0.5), (2.0, 0.0)] };
        t.validate().unwrap();
        assert_eq!(t.value(0.2), 2.0);
        assert_eq!(t.value(0.75), 1.5);
        assert_eq!(t.value(1.0), 1.0);
        assert_eq!(t.value(1.5), 0.25);
        assert_eq!(t.value(3.0), 0.0);
        assert_eq!(t.atoms(), vec![(1.0, 0.5)]);
        assert_eq!(t.inverse(0.75), 1.0);
        assert_eq!(t.inverse(1.5), 0.75);
        assert_eq!(t.density(1.5), 0.5);
    }

    #[test]
    fn inverse_inverts_value() {
        let tails = [
            Tail::Exponential { rate: 2.0 },
            Tail::Pareto { scale: 0.5, shape: 1.5 },
            Tail::StableLike { c: 0.3, index: 0.5 },
            Tail::Mixture { parts: vec![(0.5, Tail::Exponential { rate: 1.0 }), (0.5, Tail::Exponential { rate: 3.0 })] },
        ];
        for t in &tails {
            for u in [0.05, 0.3, 0.9] {
                let x = t.inverse(u);
                assert!((t.value(x) - u).abs() < 1e-9, "{t:?} {u}");
            }
        }
    }

    #[test]
    fn sampling_matches_tail() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let t = Tail::StableLike { c: 0.5, index: 0.5 };
        let n = 20000;
        let above = (0..n).filter(|_| t.sample_above(0.01, &mut rng) >= 0.04).count() as f64 / n as f64;
        assert!((above - 0.5).abs() < 0.02);
    }

    #[test]
    fn validation_statuses() {
        assert_eq!(BoundaryParams::walsh(vec![0.5, 0.5]).validate().status, Status::Ok);
        let singular = BoundaryParams {
            alpha: 0.0,
            beta: vec![0.0, 0.0],
            gamma: 1.0,
            m: JumpMeasure::Finite { delta: 1.0, p: vec![0.5, 0.5], radial: vec![Tail::Exponential { rate: 1.0 }; 2] },
        };
        assert_eq!(singular.validate().status, Status::AnalyticOnly);
        let dead = BoundaryParams { alpha: 0.0, beta: vec![0.0, 0.0], gamma: 1.0, m: JumpMeasure::Zero };
        assert_eq!(dead.validate().status, Status::Invalid);
        let bad = BoundaryParams { alpha: -1.0, ..BoundaryParams::walsh(vec![1.0]) };
        assert_eq!(bad.validate().status, Status::Invalid);
        let heavy = BoundaryParams {
            alpha: 0.0,
            beta: vec![0.0],
            gamma: 0.0,
            m: JumpMeasure::Infinite { tails: vec![Tail::StableLike { c: 1.0, index: 0.5 }] },
        };
        assert_eq!(heavy.validate().status, Status::Ok);
        let v = BoundaryParams { beta: vec![1.0, 0.0], ..BoundaryParams::walsh(vec![]) }.validate();
        assert_eq!(v.transient, vec![1]);
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut p = finite3();
        p.beta = vec![1.0, 0.6, 0.4];
        let n = p.normalize().unwrap();
        assert!((n.beta_bar() - 1.0).abs() < 1e-15);
        assert_eq!(n.normalize().unwrap(), n);
        assert_eq!(n.alpha, 0.5);
    }

    #[test]
    fn lumping_adds_weights_and_masses() {
        let p = finite3();
        let l = p.lump(&[0, 1, 1]).unwrap();
        assert_eq!(l.k(), 2);
        assert!((l.beta[1] - 0.5).abs() < 1e-15);
        assert!((l.m.edge_mass(1) - 0.8).abs() < 1e-15);
        assert!(p.lump(&[0, 2, 2]).is_err());
    }

    #[test]
    fn truncation_keeps_large_jumps() {
        let p = BoundaryParams {
            alpha: 0.0,
            beta: vec![0.5, 0.0],
            gamma: 0.0,
            m: JumpMeasure::Infinite {
                tails: vec![Tail::zero(), Tail::StableLike { c: 0.2, index: 0.5 }],
            },
        };
        let t = p.truncated(0.04);
        assert!((t.m.edge_mass(1) - 1.0).abs() < 1e-12);
        // int_0^eps (c x^-a - c eps^-a) dx = c eps^(1-a) (1/(1-a) - 1)
        let expect = 0.2 * 0.04f64.sqrt() * (2.0 - 1.0);
        assert!((t.beta[1] - expect).abs() < 1e-9);
        assert_eq!(t.beta[0], 0.5);
    }
}

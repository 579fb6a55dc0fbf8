//! Closed-form and quadrature evaluation of resolvents, the local-time
//! potential and Walsh transition densities.
//!
//! Throughout, `c = sqrt(2 lambda)`. The resolvent of the process killed at
//! the center is
//!
//! ```text
//! R0 g(x) = (1/c) [ int_0^x e^{-c(x-y)} g + int_x^inf e^{-c(y-x)} g - e^{-cx} int_0^inf e^{-cy} g ]
//! ```
//!
//! on each edge, and the full resolvent is `R0 g + Cbar e^{-cx}` with
//!
//! ```text
//! Cbar = [alpha g(0) + 2c sum_i beta_i C_i + int R0 g dm] / [lambda alpha + c beta_bar + gamma + I1],
//! C_i  = (1/c) int_0^inf e^{-cy} g_i(y) dy,   I1 = int (1 - e^{-cx}) m(dx).
//! ```

use std::sync::Arc;

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::graph::{BoundaryParams, GraphPoint, JumpMeasure, Status, Tail};
use crate::quadrature::Quad;

type EdgeFn = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// Bounded function on the graph, continuous at the center.
#[derive(Clone)]
pub struct EdgeFunction {
    f: EdgeFn,
    k: usize,
    breaks: Vec<Vec<f64>>,
    bound: f64,
    pub name: String,
}

impl std::fmt::Debug for EdgeFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "EdgeFunction({}, k = {})", self.name, self.k)
    }
}

impl EdgeFunction {
    /// `f(i, x)` on edge `i`; `breaks[i]` lists points where it is not smooth.
    pub fn new<F>(k: usize, f: F, breaks: Vec<Vec<f64>>, bound: f64, name: &str) -> Result<Self>
    where
        F: Fn(usize, f64) -> f64 + Send + Sync + 'static,
    {
        if breaks.len() != k {
            return Err(Error::Invalid("one breakpoint list per edge".into()));
        }
        let g = EdgeFunction { f: Arc::new(f), k, breaks, bound, name: name.to_string() };
        let c = g.center();
        if (0..k).any(|i| ((g.f)(i, 0.0) - c).abs() > 1e-12 * c.abs().max(1.0)) {
            return Err(Error::Invalid(format!("{name} is not continuous at the center")));
        }
        Ok(g)
    }

    pub fn constant(k: usize, c: f64) -> Self {
        EdgeFunction::new(k, move |_, _| c, vec![Vec::new(); k], c.abs(), "constant").unwrap()
    }

    /// `exp(-rates[i] x)` on edge `i`.
    pub fn exp_decay(rates: Vec<f64>) -> Self {
        let k = rates.len();
        EdgeFunction::new(k, move |i, x| (-rates[i] * x).exp(), vec![Vec::new(); k], 1.0, "exp-decay").unwrap()
    }

    /// `heights[i] (1 - ((x - mid)/half)^2)^2` on `|x - mid| < half`, zero
    /// elsewhere. Requires `mid > half` so that it vanishes at the center.
    pub fn bump(heights: Vec<f64>, mid: f64, half: f64) -> Result<Self> {
        if !(mid > half && half > 0.0) {
            return Err(Error::Invalid("bump must vanish near the center".into()));
        }
        let k = heights.len();
        let bound = heights.iter().fold(0.0_f64, |a, h| a.max(h.abs()));
        EdgeFunction::new(
            k,
            move |i, x| {
                let z = (x - mid) / half;
                if z.abs() < 1.0 {
                    heights[i] * (1.0 - z * z).powi(2)
                } else {
                    0.0
                }
            },
            vec![vec![mid - half, mid, mid + half]; k],
            bound,
            "bump",
        )
    }

    /// Indicator of `[a, b]` on one edge.
    pub fn indicator_band(k: usize, edge: usize, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > a && edge < k) {
            return Err(Error::Invalid("indicator band needs 0 < a < b on an existing edge".into()));
        }
        EdgeFunction::new(
            k,
            move |i, x| if i == edge && x >= a && x <= b { 1.0 } else { 0.0 },
            vec![vec![a, b]; k],
            1.0,
            "indicator-band",
        )
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn breaks(&self, i: usize) -> &[f64] {
        &self.breaks[i]
    }

    pub fn center(&self) -> f64 {
        (self.f)(0, 0.0)
    }

    pub fn on_edge(&self, i: usize, x: f64) -> f64 {
        (self.f)(i, x)
    }

    pub fn eval(&self, p: GraphPoint) -> f64 {
        match p {
            GraphPoint::Center => self.center(),
            GraphPoint::Edge { edge, x } => (self.f)(edge, x),
            GraphPoint::Infinity { edge } => (self.f)(edge, 1e12),
            GraphPoint::Cemetery => 0.0,
        }
    }
}

fn rate(lambda: f64) -> f64 {
    (2.0 * lambda).sqrt()
}

/// Beyond this distance the kernel `e^{-c x}` is below `e^{-40}`.
fn reach(c: f64) -> f64 {
    40.0 / c
}

/// Resolvent of Brownian motion killed at the center, edge by edge.
#[derive(Clone, Debug)]
pub struct MinimalResolvent {
    g: EdgeFunction,
    lambda: f64,
    c: f64,
    /// `int_0^inf e^{-cy} g_i(y) dy`.
    laplace: Vec<f64>,
    quad: Quad,
}

impl MinimalResolvent {
    pub fn new(lambda: f64, g: &EdgeFunction, quad: &Quad) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Invalid(format!("lambda = {lambda} must be positive")));
        }
        let c = rate(lambda);
        let laplace = (0..g.k)
            .map(|i| quad.with_breaks(&|y| (-c * y).exp() * g.on_edge(i, y), 0.0, reach(c), g.breaks(i)).value)
            .collect();
        Ok(MinimalResolvent { g: g.clone(), lambda, c, laplace, quad: *quad })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `C_i = (1/c) int_0^inf e^{-cy} g_i(y) dy`.
    pub fn coeff(&self, i: usize) -> f64 {
        self.laplace[i] / self.c
    }

    fn parts(&self, i: usize, x: f64) -> (f64, f64) {
        let (c, l, g) = (self.c, reach(self.c), &self.g);
        let br = g.breaks(i);
        let below = self.quad.with_breaks(&|y| (-c * (x - y)).exp() * g.on_edge(i, y), (x - l).max(0.0), x, br);
        let above = self.quad.with_breaks(&|y| (-c * (y - x)).exp() * g.on_edge(i, y), x, x + l, br);
        (below.value, above.value)
    }

    pub fn value(&self, i: usize, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let (a, b) = self.parts(i, x);
        (a + b - (-self.c * x).exp() * self.laplace[i]) / self.c
    }

    pub fn derivative(&self, i: usize, x: f64) -> f64 {
        let (a, b) = self.parts(i, x.max(0.0));
        -a + b + (-self.c * x).exp() * self.laplace[i]
    }
}

pub fn coeff_c(lambda: f64, g: &EdgeFunction, quad: &Quad) -> Result<Vec<f64>> {
    let r = MinimalResolvent::new(lambda, g, quad)?;
    Ok((0..g.k).map(|i| r.coeff(i)).collect())
}

pub fn minimal_resolvent(lambda: f64, g: &EdgeFunction, x: GraphPoint, quad: &Quad) -> Result<f64> {
    let r = MinimalResolvent::new(lambda, g, quad)?;
    Ok(match x {
        GraphPoint::Edge { edge, x } => r.value(edge, x),
        GraphPoint::Infinity { edge } => g.on_edge(edge, 1e12) / lambda,
        _ => 0.0,
    })
}

/// `E_x e^{-lambda tau_0}` for the first hitting time of the center.
pub fn lifetime_transform_min(lambda: f64, x: GraphPoint) -> f64 {
    (-rate(lambda) * x.radius()).exp()
}

/// `int f dm` for the measure with tail `tail`, where `f(0) = 0`.
///
/// Near zero: `int_0^1 f'(x) (N(x) - N(1)) dx`, which stays finite for
/// measures with `int (1 ^ x) m(dx) < inf`. Away from zero: directly against
/// the density and atoms, with `x -> x1 / u` mapping the far tail to `(0, 1]`.
pub fn integrate_against_tail<F, D>(tail: &Tail, f: F, df: D, breaks: &[f64], c: f64, quad: &Quad) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let n1 = tail.value(1.0);
    let mut br: Vec<f64> = tail.breakpoints();
    br.extend_from_slice(breaks);
    let near = quad.singular_left(&|x| df(x) * (tail.value(x) - n1), 0.0, 1.0, &br).value;
    if n1 == 0.0 {
        return near;
    }
    let atoms: f64 = tail.atoms().iter().filter(|a| a.0 >= 1.0).map(|&(x, w)| f(x) * w).sum();
    let x1 = 1.0 + reach(c).max(br.iter().cloned().fold(0.0, f64::max));
    let mid = quad.half_line(&|x| f(x) * tail.density(x), 1.0, x1, &br).value;
    let far = if tail.value(x1) > 0.0 {
        let fx = |u: f64| {
            let x = (x1 / u).min(1e9);
            f(x) * tail.density(x1 / u) * x1 / (u * u)
        };
        quad.singular_left(&fx, 0.0, 1.0, &[]).value
    } else {
        0.0
    };
    near + atoms + mid + far
}

/// `I1 = int (1 - e^{-cx}) m(dx) = c int_0^inf e^{-cx} N(x) dx`.
pub fn measure_i1(m: &JumpMeasure, k: usize, lambda: f64, quad: &Quad) -> f64 {
    let c = rate(lambda);
    (0..k)
        .map(|i| {
            let t = m.edge_tail(i);
            if t.total() == 0.0 {
                return 0.0;
            }
            c * quad.singular_left(&|x| (-c * x).exp() * t.value(x), 0.0, reach(c), &t.breakpoints()).value
        })
        .sum()
}

/// `int R0 g dm`.
pub fn measure_integral(m: &JumpMeasure, r0: &MinimalResolvent, quad: &Quad) -> f64 {
    (0..r0.g.k)
        .map(|i| {
            let t = m.edge_tail(i);
            if t.total() == 0.0 {
                return 0.0;
            }
            integrate_against_tail(&t, |x| r0.value(i, x), |x| r0.derivative(i, x), r0.g.breaks(i), r0.c, quad)
        })
        .sum()
}

/// Resolvent `R_lambda g` of the process with the given boundary data.
#[derive(Clone, Debug)]
pub struct Resolvent {
    r0: MinimalResolvent,
    cbar: f64,
    i1: f64,
    denominator: f64,
}

impl Resolvent {
    pub fn new(params: &BoundaryParams, lambda: f64, g: &EdgeFunction, quad: &Quad) -> Result<Self> {
        let v = params.validate();
        if v.status == Status::Invalid {
            return Err(Error::Params(v.reasons.join("; ")));
        }
        if g.k != params.k() {
            return Err(Error::Invalid("function and parameters disagree on k".into()));
        }
        let r0 = MinimalResolvent::new(lambda, g, quad)?;
        let c = r0.c;
        let i1 = measure_i1(&params.m, params.k(), lambda, quad);
        let jumps = if i1 > 0.0 { measure_integral(&params.m, &r0, quad) } else { 0.0 };
        let drift: f64 = (0..params.k()).map(|i| params.beta[i] * r0.coeff(i)).sum();
        let numerator = params.alpha * g.center() + 2.0 * c * drift + jumps;
        let denominator = lambda * params.alpha + c * params.beta_bar() + params.gamma + i1;
        Ok(Resolvent { r0, cbar: numerator / denominator, i1, denominator })
    }

    /// Value at the center.
    pub fn center(&self) -> f64 {
        self.cbar
    }

    pub fn i1(&self) -> f64 {
        self.i1
    }

    pub fn on_edge(&self, i: usize, x: f64) -> f64 {
        self.r0.value(i, x) + self.cbar * (-self.r0.c * x).exp()
    }

    pub fn derivative(&self, i: usize, x: f64) -> f64 {
        self.r0.derivative(i, x) - self.r0.c * self.cbar * (-self.r0.c * x).exp()
    }

    pub fn eval(&self, p: GraphPoint) -> f64 {
        match p {
            GraphPoint::Center => self.cbar,
            GraphPoint::Edge { edge, x } => self.on_edge(edge, x),
            GraphPoint::Infinity { edge } => self.r0.g.on_edge(edge, 1e12) / self.r0.lambda,
            GraphPoint::Cemetery => 0.0,
        }
    }

    /// `x -> e^{-cx} / (lambda alpha + c beta_bar + gamma + I1)`: the
    /// Laplace transform of the local time at the center.
    pub fn potential(&self, p: GraphPoint) -> f64 {
        match p {
            GraphPoint::Cemetery | GraphPoint::Infinity { .. } => 0.0,
            _ => (-self.r0.c * p.radius()).exp() / self.denominator,
        }
    }

    pub fn as_edge_function(&self) -> EdgeFunction {
        let me = self.clone();
        let k = self.r0.g.k;
        EdgeFunction::new(
            k,
            move |i, x| me.on_edge(i, x),
            (0..k).map(|i| self.r0.g.breaks(i).to_vec()).collect(),
            self.r0.g.bound / self.r0.lambda,
            &format!("R{}({})", self.r0.lambda, self.r0.g.name),
        )
        .unwrap()
    }
}

pub fn resolvent_coefficient(params: &BoundaryParams, lambda: f64, g: &EdgeFunction, quad: &Quad) -> Result<f64> {
    Ok(Resolvent::new(params, lambda, g, quad)?.center())
}

pub fn resolvent_full(params: &BoundaryParams, lambda: f64, g: &EdgeFunction, x: GraphPoint, quad: &Quad) -> Result<f64> {
    Ok(Resolvent::new(params, lambda, g, quad)?.eval(x))
}

/// `E_x e^{-lambda zeta}` for the lifetime `zeta`.
pub fn lifetime_transform_full(params: &BoundaryParams, lambda: f64, x: GraphPoint, quad: &Quad) -> Result<f64> {
    let one = EdgeFunction::constant(params.k(), 1.0);
    Ok(1.0 - lambda * resolvent_full(params, lambda, &one, x, quad)?)
}

/// `E_x int_0^inf e^{-lambda t} dK_t` for the local time `K` at the center.
pub fn potential_local_time(params: &BoundaryParams, lambda: f64, x: GraphPoint, quad: &Quad) -> Result<f64> {
    let zero = EdgeFunction::constant(params.k(), 0.0);
    Ok(Resolvent::new(params, lambda, &zero, quad)?.potential(x))
}

/// Resolvent without jumps, through the center value
/// `E(g) = (2c sum beta_i C_i + alpha g(0)) / (lambda alpha + c beta_bar + gamma)`
/// and the `sinh` form of the killed resolvent. Suited to moderate `x`.
pub fn resolvent_m0(params: &BoundaryParams, lambda: f64, g: &EdgeFunction, x: GraphPoint, quad: &Quad) -> Result<f64> {
    if !params.m.is_zero(params.k()) {
        return Err(Error::Params("resolvent_m0 needs a zero jump measure".into()));
    }
    let c = rate(lambda);
    let cs: Vec<f64> = (0..g.k)
        .map(|i| quad.with_breaks(&|y| (-c * y).exp() * g.on_edge(i, y), 0.0, reach(c), g.breaks(i)).value / c)
        .collect();
    let num = 2.0 * c * (0..g.k).map(|i| params.beta[i] * cs[i]).sum::<f64>() + params.alpha * g.center();
    let e = num / (lambda * params.alpha + c * params.beta_bar() + params.gamma);
    Ok(match x {
        GraphPoint::Center => e,
        GraphPoint::Edge { edge, x } => {
            let conv = quad.with_breaks(&|y| (c * (x - y)).sinh() * g.on_edge(edge, y), 0.0, x, g.breaks(edge)).value;
            2.0 * cs[edge] * (c * x).sinh() - 2.0 / c * conv + e * (-c * x).exp()
        }
        GraphPoint::Infinity { edge } => g.on_edge(edge, 1e12) / lambda,
        GraphPoint::Cemetery => 0.0,
    })
}

/// `int h dmu` for the probability law with tail `tail`, directly against
/// its density and atoms.
fn integrate_law<F: Fn(f64) -> f64>(tail: &Tail, h: F, breaks: &[f64], quad: &Quad) -> f64 {
    let mut br = tail.breakpoints();
    br.extend_from_slice(breaks);
    let mut x1 = 1.0;
    while tail.value(x1) > 1e-16 && x1 < 1e6 {
        x1 *= 2.0;
    }
    let body = quad.singular_left(&|x| h(x) * tail.density(x), 0.0, x1, &br).value;
    let far = if tail.value(x1) > 0.0 {
        quad.singular_left(&|u: f64| h((x1 / u).min(1e9)) * tail.density(x1 / u) * x1 / (u * u), 0.0, 1.0, &[]).value
    } else {
        0.0
    };
    body + far + tail.atoms().iter().map(|&(x, w)| h(x) * w).sum::<f64>()
}

/// Resolvent for a finite jump measure `delta * sum p_i mu_i`, written as
/// the resolvent `R'` of the process killed at rate `gamma + delta` plus a
/// multiple of its lifetime transform:
///
/// ```text
/// R g = R' g + M(g) (gamma + delta) e^{-cx} / (lambda alpha + c + gamma + delta),
/// M(g) = delta int R' g dmu / (gamma + delta lambda int R' 1 dmu).
/// ```
///
/// Parameters are normalized to `sum(beta) = 1` first. With
/// `alpha = sum(beta) = 0` the same expression covers the singular case.
pub fn resolvent_finite_m(params: &BoundaryParams, lambda: f64, g: &EdgeFunction, x: GraphPoint, quad: &Quad) -> Result<f64> {
    let p = if params.beta_bar() > 0.0 { params.normalize()? } else { params.clone() };
    let (delta, weights, radial) = match &p.m {
        JumpMeasure::Finite { delta, p, radial } => (*delta, p.clone(), radial.clone()),
        _ => return Err(Error::Params("resolvent_finite_m needs a finite jump measure".into())),
    };
    let c = rate(lambda);
    let killed = BoundaryParams { m: JumpMeasure::Zero, gamma: p.gamma + delta, ..p.clone() };
    let denom = lambda * p.alpha + c * p.beta_bar() + p.gamma + delta;
    let center = |h: &EdgeFunction, r0: &MinimalResolvent| -> f64 {
        let drift: f64 = (0..h.k).map(|i| killed.beta[i] * r0.coeff(i)).sum();
        (2.0 * c * drift + p.alpha * h.center()) / denom
    };
    let r0g = MinimalResolvent::new(lambda, g, quad)?;
    let one = EdgeFunction::constant(g.k, 1.0);
    let r01 = MinimalResolvent::new(lambda, &one, quad)?;
    let (eg, e1) = (center(g, &r0g), center(&one, &r01));
    let mut int_g = 0.0;
    let mut int_1 = 0.0;
    for i in 0..g.k {
        if weights[i] == 0.0 {
            continue;
        }
        int_g += weights[i] * integrate_law(&radial[i], |y| r0g.value(i, y) + eg * (-c * y).exp(), g.breaks(i), quad);
        int_1 += weights[i] * integrate_law(&radial[i], |y| r01.value(i, y) + e1 * (-c * y).exp(), &[], quad);
    }
    let big_m = delta * int_g / (p.gamma + delta * lambda * int_1);
    let life = (p.gamma + delta) / denom;
    Ok(match x {
        GraphPoint::Center => eg + big_m * life,
        GraphPoint::Edge { edge, x } => r0g.value(edge, x) + (eg + big_m * life) * (-c * x).exp(),
        GraphPoint::Infinity { edge } => g.on_edge(edge, 1e12) / lambda,
        GraphPoint::Cemetery => 0.0,
    })
}

/// `delta int f dmu - (gamma + delta) f(0)`: vanishes on the range of the
/// resolvent in the singular case `alpha = sum(beta) = 0`.
pub fn singular_functional(params: &BoundaryParams, f: &EdgeFunction, quad: &Quad) -> Result<f64> {
    let (delta, weights, radial) = match &params.m {
        JumpMeasure::Finite { delta, p, radial } => (*delta, p, radial),
        _ => return Err(Error::Params("singular functional needs a finite jump measure".into())),
    };
    let mut total = 0.0;
    for i in 0..f.k {
        if weights[i] > 0.0 {
            total += weights[i] * integrate_law(&radial[i], |y| f.on_edge(i, y), f.breaks(i), quad);
        }
    }
    Ok(delta * total - (params.gamma + delta) * f.center())
}

/// Residual of the boundary condition at the center for `f = R_lambda g`,
///
/// ```text
/// (alpha / 2) f''(0) - sum_i beta_i f_i'(0) + gamma f(0) - int (f - f(0)) dm,
/// ```
///
/// with one-sided second-order differences of step `h` (and `h / 2`,
/// combined by Richardson extrapolation) for the derivatives. The second
/// derivative is averaged over the edges. Zero up to `O(h^3)` truncation and
/// roughly `1e-11 / h^2` rounding.
pub fn boundary_residual(params: &BoundaryParams, lambda: f64, g: &EdgeFunction, h: f64, quad: &Quad) -> Result<f64> {
    let r = Resolvent::new(params, lambda, g, quad)?;
    let k = params.k();
    let f0 = r.center();
    let d1 = |i: usize, h: f64| (-3.0 * f0 + 4.0 * r.on_edge(i, h) - r.on_edge(i, 2.0 * h)) / (2.0 * h);
    let d2 = |i: usize, h: f64| {
        (2.0 * f0 - 5.0 * r.on_edge(i, h) + 4.0 * r.on_edge(i, 2.0 * h) - r.on_edge(i, 3.0 * h)) / (h * h)
    };
    let rich = |d: &dyn Fn(usize, f64) -> f64, i: usize| (4.0 * d(i, 0.5 * h) - d(i, h)) / 3.0;
    let second = (0..k).map(|i| rich(&d2, i)).sum::<f64>() / k as f64;
    let flux: f64 = (0..k).map(|i| params.beta[i] * rich(&d1, i)).sum();
    let jumps: f64 = (0..k)
        .map(|i| {
            let t = params.m.edge_tail(i);
            if t.total() == 0.0 {
                return 0.0;
            }
            integrate_against_tail(&t, |x| r.on_edge(i, x) - f0, |x| r.derivative(i, x), g.breaks(i), r.r0.c, quad)
        })
        .sum();
    Ok(0.5 * params.alpha * second - flux + params.gamma * f0 - jumps)
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn heat(t: f64, x: f64) -> f64 {
    (-x * x / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt()
}

/// Transition density of Walsh motion with weights `beta` (summing to one)
/// from `from` to the point at distance `y` on edge `j`.
pub fn walsh_density(beta: &[f64], t: f64, from: GraphPoint, j: usize, y: f64) -> f64 {
    match from {
        GraphPoint::Edge { edge, x } if edge == j => heat(t, x - y) + (2.0 * beta[j] - 1.0) * heat(t, x + y),
        GraphPoint::Edge { x, .. } => 2.0 * beta[j] * heat(t, x + y),
        _ => 2.0 * beta[j] * heat(t, y),
    }
}

/// `P_from(X_t on edge j, |X_t| <= y)` for Walsh motion.
pub fn walsh_edge_cdf(beta: &[f64], t: f64, from: GraphPoint, j: usize, y: f64) -> f64 {
    let s = t.sqrt();
    let x = from.radius();
    let direct = normal_cdf((y - x) / s) - normal_cdf(-x / s);
    let mirror = normal_cdf((y + x) / s) - normal_cdf(x / s);
    match from {
        GraphPoint::Edge { edge, .. } if edge == j => direct + (2.0 * beta[j] - 1.0) * mirror,
        _ => 2.0 * beta[j] * mirror,
    }
}

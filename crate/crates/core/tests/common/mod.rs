#![allow(dead_code)]

use fellerstar::analytic::EdgeFunction;
use fellerstar::skorokhod::CadlagPath;
use fellerstar::{BoundaryParams, GraphPoint, JumpMeasure, Knot, MonotonePath, Tail};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Nondecreasing path on a dyadic grid with jumps, flats and rises, so that
/// inverses and compositions are exact in floating point.
pub fn dyadic_monotone(rng: &mut ChaCha8Rng, n: usize) -> MonotonePath {
    let q = |rng: &mut ChaCha8Rng| rng.random_range(1..=8) as f64 / 4.0;
    let first = if rng.random_bool(0.2) { q(rng) } else { 0.0 };
    let mut knots = vec![Knot::new(0.0, 0.0, first)];
    let (mut t, mut v) = (0.0, first);
    for _ in 0..n {
        t += q(rng);
        let left = match rng.random_range(0..3) {
            0 => v,
            _ => v + q(rng),
        };
        let right = if rng.random_bool(0.35) { left + q(rng) } else { left };
        knots.push(Knot::new(t, left, right));
        v = right;
    }
    MonotonePath::new(knots, Some(rng.random_range(1..=4) as f64 / 2.0)).unwrap()
}

/// Piecewise-linear càdlàg path with jumps of both signs and `omega(0) >= 0`.
pub fn random_cadlag(rng: &mut ChaCha8Rng, n: usize) -> CadlagPath {
    let mut v: f64 = rng.random_range(0.0..1.0);
    let mut t = 0.0;
    let mut knots = vec![Knot::cont(0.0, v)];
    for _ in 0..n {
        t += rng.random_range(0.01..0.2);
        let left = v + rng.random_range(-0.5..0.45);
        let right = if rng.random_bool(0.1) { left + rng.random_range(-1.0..1.0) } else { left };
        knots.push(Knot::new(t, left, right));
        v = right;
    }
    CadlagPath::new(knots, None).unwrap()
}

/// Continuous nondecreasing `ell` from `(0, 0)` with flat stretches at
/// generic levels and a positive slope beyond its last knot.
pub fn random_ell(rng: &mut ChaCha8Rng, n: usize) -> MonotonePath {
    let mut pts = vec![(0.0, 0.0)];
    let (mut t, mut v) = (0.0, 0.0);
    for j in 0..n {
        t += rng.random_range(0.05..0.6);
        if j == 0 || !rng.random_bool(0.35) {
            v += rng.random_range(0.05..0.8);
        }
        pts.push((t, v));
    }
    MonotonePath::from_points(&pts, Some(rng.random_range(0.3..2.0))).unwrap()
}

pub fn random_params(rng: &mut ChaCha8Rng) -> BoundaryParams {
    let k = rng.random_range(1..4);
    let beta: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let p: Vec<f64> = {
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    };
    BoundaryParams {
        alpha: rng.random_range(0.0..2.0),
        beta,
        gamma: rng.random_range(0.0..1.0),
        m: JumpMeasure::Finite {
            delta: rng.random_range(0.1..2.0),
            p,
            radial: (0..k).map(|_| Tail::Exponential { rate: rng.random_range(0.5..3.0) }).collect(),
        },
    }
}

pub fn random_g(rng: &mut ChaCha8Rng, k: usize) -> EdgeFunction {
    match rng.random_range(0..3) {
        0 => EdgeFunction::exp_decay((0..k).map(|_| rng.random_range(0.2..3.0)).collect()),
        1 => EdgeFunction::bump((0..k).map(|_| rng.random_range(-1.0..1.0)).collect(), 1.0, 0.5).unwrap(),
        _ => EdgeFunction::indicator_band(k, rng.random_range(0..k), 0.3, 1.2).unwrap(),
    }
}

pub fn random_point(rng: &mut ChaCha8Rng, k: usize) -> GraphPoint {
    if rng.random_bool(0.2) {
        GraphPoint::Center
    } else {
        GraphPoint::Edge { edge: rng.random_range(0..k), x: rng.random_range(0.01..2.5) }
    }
}

//! Three entry points for the browser demo. Every result is a flat `f64`
//! array so the page can draw it without further bindings.
//!
//! The plain functions are usable (and tested) natively; the `#[wasm_bindgen]`
//! wrappers only turn errors into JS exceptions.

use fellerstar::analytic::{walsh_density, EdgeFunction, Resolvent};
use fellerstar::graph::Status;
use fellerstar::process::{simulate_full, SimOptions};
use fellerstar::quadrature::Quad;
use fellerstar::sampler::{Discretization, Seed};
use fellerstar::{BoundaryParams, GraphPoint, JumpMeasure};
use wasm_bindgen::prelude::*;

/// Walsh densities at time `t` from the center, `n` points on `(0, ymax]`
/// per edge, edge after edge.
pub fn density_curves(beta: &[f64], t: f64, ymax: f64, n: usize) -> Result<Vec<f64>, String> {
    check(&BoundaryParams::walsh(beta.to_vec()))?;
    if !(t > 0.0 && ymax > 0.0) || n == 0 {
        return Err(format!("need t > 0, ymax > 0 and n > 0 (t = {t}, ymax = {ymax}, n = {n})"));
    }
    let mut out = Vec::with_capacity(beta.len() * n);
    for j in 0..beta.len() {
        for i in 1..=n {
            let y = ymax * i as f64 / n as f64;
            out.push(walsh_density(beta, t, GraphPoint::Center, j, y));
        }
    }
    Ok(out)
}

/// `R_lambda g` with `g = e^{-x}` on every edge, without jumps: the center
/// value first, then `n` points on `(0, xmax]` along `edge`.
pub fn resolvent_curve(
    alpha: f64,
    beta: &[f64],
    gamma: f64,
    lambda: f64,
    edge: usize,
    xmax: f64,
    n: usize,
) -> Result<Vec<f64>, String> {
    let params = BoundaryParams { alpha, beta: beta.to_vec(), gamma, m: JumpMeasure::Zero };
    check(&params)?;
    if edge >= beta.len() || !(xmax > 0.0) {
        return Err(format!("edge {edge} of {} and xmax = {xmax}", beta.len()));
    }
    let g = EdgeFunction::exp_decay(vec![1.0; beta.len()]);
    let r = Resolvent::new(&params, lambda, &g, &Quad::default()).map_err(|e| e.to_string())?;
    let mut out = vec![r.eval(GraphPoint::Center)];
    out.extend((1..=n).map(|i| r.eval(GraphPoint::Edge { edge, x: xmax * i as f64 / n as f64 })));
    Ok(out)
}

/// One trajectory from the center as `(t, edge, x)` triples; edge is -1 at the
/// center and the path stops when it is killed.
pub fn trajectory(alpha: f64, beta: &[f64], gamma: f64, horizon: f64, seed: u64) -> Result<Vec<f64>, String> {
    let params = BoundaryParams { alpha, beta: beta.to_vec(), gamma, m: JumpMeasure::Zero };
    let disc = Discretization::adaptive(1e-4, 1e-2, 5.0).with_output(horizon / 500.0);
    let path = simulate_full(&params, &SimOptions::new(horizon, disc), GraphPoint::Center, Seed(seed))
        .map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * path.len());
    for (&t, s) in path.times.iter().zip(&path.states) {
        let (edge, x) = match *s {
            GraphPoint::Center => (-1.0, 0.0),
            GraphPoint::Edge { edge, x } => (edge as f64, x),
            _ => break,
        };
        out.extend([t, edge, x]);
    }
    Ok(out)
}

fn check(params: &BoundaryParams) -> Result<(), String> {
    let v = params.validate();
    match v.status {
        Status::Invalid => Err(v.reasons.join("; ")),
        _ => Ok(()),
    }
}

#[wasm_bindgen(js_name = walshDensityCurves)]
pub fn walsh_density_curves(beta: &[f64], t: f64, ymax: f64, n: usize) -> Result<Vec<f64>, JsError> {
    density_curves(beta, t, ymax, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = resolventProfile)]
pub fn resolvent_profile(
    alpha: f64,
    beta: &[f64],
    gamma: f64,
    lambda: f64,
    edge: usize,
    xmax: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    resolvent_curve(alpha, beta, gamma, lambda, edge, xmax, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sampleTrajectory)]
pub fn sample_trajectory(alpha: f64, beta: &[f64], gamma: f64, horizon: f64, seed: u64) -> Result<Vec<f64>, JsError> {
    trajectory(alpha, beta, gamma, horizon, seed).map_err(|e| JsError::new(&e))
}

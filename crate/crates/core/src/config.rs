//! JSON run configurations.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "k": 3,
//!   "alpha": 0.5, "beta": [0.5, 0.3, 0.2], "gamma": 0.1,
//!   "measure": {"kind": "finite", "delta": 1.0, "p": [0.2, 0.3, 0.5],
//!               "radial": [{"type": "exponential", "rate": 2.0},
//!                          {"type": "tabulated-csv", "file": "tail.csv"},
//!                          {"type": "pareto", "scale": 0.5, "shape": 2.5}]},
//!   "g": {"kind": "exp-decay", "rates": [1.0, 2.0, 0.5]},
//!   "settings": {"n": 10000, "seed": 42}
//! }
//! ```
//!
//! A `tabulated-csv` tail names a sidecar CSV with columns `x,N`, resolved
//! relative to the config file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::analytic::EdgeFunction;
use crate::error::{Error, Result};
use crate::graph::{BoundaryParams, GraphPoint, JumpMeasure, Tail};

pub const SCHEMA_VERSION: u32 = 1;

/// Test functions `g` known by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GSpec {
    Constant { value: f64 },
    /// `e^{-r_i x}` on edge `i`; all rates 1 when omitted.
    ExpDecay {
        #[serde(default)]
        rates: Option<Vec<f64>>,
    },
    Bump { heights: Vec<f64>, mid: f64, half: f64 },
    Band { edge: usize, a: f64, b: f64 },
}

impl GSpec {
    pub fn build(&self, k: usize) -> Result<EdgeFunction> {
        match self {
            GSpec::Constant { value } => Ok(EdgeFunction::constant(k, *value)),
            GSpec::ExpDecay { rates } => {
                let rates = rates.clone().unwrap_or_else(|| vec![1.0; k]);
                if rates.len() != k || rates.iter().any(|r| !(*r > 0.0)) {
                    return Err(Error::Config(format!("exp-decay needs {k} positive rates, got {rates:?}")));
                }
                Ok(EdgeFunction::exp_decay(rates))
            }
            GSpec::Bump { heights, mid, half } => {
                if heights.len() != k {
                    return Err(Error::Config(format!("bump needs {k} heights")));
                }
                EdgeFunction::bump(heights.clone(), *mid, *half)
            }
            GSpec::Band { edge, a, b } => EdgeFunction::indicator_band(k, *edge, *a, *b),
        }
    }

    /// `one`, `zero`, `exp-decay`, or a JSON object.
    pub fn parse(s: &str) -> Result<GSpec> {
        match s {
            "one" => Ok(GSpec::Constant { value: 1.0 }),
            "zero" => Ok(GSpec::Constant { value: 0.0 }),
            "exp-decay" => Ok(GSpec::ExpDecay { rates: None }),
            _ => serde_json::from_str(s).map_err(|e| Error::Config(format!("g = {s}: {e}"))),
        }
    }
}

/// Numeric overrides; anything left out falls back to the command defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub n: Option<usize>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub dt_max: Option<f64>,
    pub eps: Option<f64>,
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
    pub quad_tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub k: usize,
    #[serde(default)]
    pub alpha: f64,
    pub beta: Vec<f64>,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "zero_measure")]
    pub measure: JumpMeasure,
    #[serde(default)]
    pub g: Option<GSpec>,
    #[serde(default)]
    pub settings: Settings,
}

fn zero_measure() -> JumpMeasure {
    JumpMeasure::Zero
}

impl RunConfig {
    pub fn from_params(params: &BoundaryParams) -> Self {
        RunConfig {
            schema: SCHEMA_VERSION,
            k: params.k(),
            alpha: params.alpha,
            beta: params.beta.clone(),
            gamma: params.gamma,
            measure: params.m.clone(),
            g: None,
            settings: Settings::default(),
        }
    }

    /// Parses `text`; sidecar files are looked up under `base`.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut v: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        match v.get("schema").and_then(Value::as_u64) {
            Some(s) if s == SCHEMA_VERSION as u64 => {}
            Some(s) => return Err(Error::Config(format!("schema {s} is not supported (expected {SCHEMA_VERSION})"))),
            None => return Err(Error::Config("missing \"schema\"".into())),
        }
        if let Some(m) = v.get_mut("measure") {
            resolve_sidecars(m, base)?;
        }
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.beta.len() != cfg.k {
            return Err(Error::Config(format!("k = {} but beta has {} entries", cfg.k, cfg.beta.len())));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_json(&text, path.parent())
    }

    pub fn params(&self) -> BoundaryParams {
        BoundaryParams { alpha: self.alpha, beta: self.beta.clone(), gamma: self.gamma, m: self.measure.clone() }
    }

    /// SHA-256 of the resolved config, so sidecar contents count too.
    pub fn hash(&self) -> String {
        hash_json(self)
    }
}

/// Hex SHA-256 of the compact JSON form of `v`.
pub fn hash_json<T: Serialize + ?Sized>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).expect("value serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn resolve_sidecars(v: &mut Value, base: Option<&Path>) -> Result<()> {
    match v {
        Value::Object(map) => {
            if map.get("type").and_then(Value::as_str) == Some("tabulated-csv") {
                let file = map
                    .get("file")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::Config("tabulated-csv tail needs \"file\"".into()))?;
                let path = base.map_or_else(|| Path::new(file).to_path_buf(), |b| b.join(file));
                let points = read_tail_csv(&path)?;
                *v = serde_json::to_value(Tail::Tabulated { points }).expect("tail serializes");
                return Ok(());
            }
            for (_, child) in map.iter_mut() {
                resolve_sidecars(child, base)?;
            }
        }
        Value::Array(items) => {
            for child in items {
                resolve_sidecars(child, base)?;
            }
        }
        _ => {}
    }
    Ok(())
}

/// `(x, N(x))` rows under an `x,N` header.
pub fn read_tail_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for row in r.deserialize() {
        let (x, n): (f64, f64) = row.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        points.push((x, n));
    }
    if points.is_empty() {
        return Err(Error::Config(format!("{}: no rows", path.display())));
    }
    Ok(points)
}

/// `center`, `edge:I:X`, `inf:I` or `cemetery`, with 0-based edges.
pub fn parse_point(s: &str) -> Result<GraphPoint> {
    let bad = || Error::Config(format!("point {s:?}: expected center, edge:I:X, inf:I or cemetery"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["center"] => Ok(GraphPoint::Center),
        ["cemetery"] => Ok(GraphPoint::Cemetery),
        ["inf", i] => Ok(GraphPoint::Infinity { edge: i.parse().map_err(|_| bad())? }),
        ["edge", i, x] => {
            let x: f64 = x.parse().map_err(|_| bad())?;
            if !(x >= 0.0 && x.is_finite()) {
                return Err(bad());
            }
            let edge = i.parse().map_err(|_| bad())?;
            Ok(if x == 0.0 { GraphPoint::Center } else { GraphPoint::Edge { edge, x } })
        }
        _ => Err(bad()),
    }
}

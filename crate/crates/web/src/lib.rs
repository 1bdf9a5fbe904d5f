//! WebAssembly bindings for the browser demo in `www/`.
//!
//! The exported functions are thin wrappers over plain Rust functions that
//! return `Result<String, String>`, so everything but the JS glue is testable
//! natively.

use std::sync::Arc;

use serde_json::json;
use wasm_bindgen::prelude::*;

use elliptica::scan::{run_scan, Probe, ScanSpec};
use elliptica::shooting::{shoot, ShootingProblem};
use elliptica::{classify, DecayProfile, PowerLog, Radial, SystemConfig};

/// Largest grid the page will run; keeps the tab responsive.
pub const MAX_CELLS: usize = 160 * 160;

/// Exponents of one point of the parameter space.
#[derive(Clone, Copy, Debug)]
pub struct Point {
    pub dimension: u32,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    pub xi: f64,
}

impl Point {
    fn config(&self) -> Result<SystemConfig, String> {
        SystemConfig::new(self.dimension, self.alpha, self.beta).map_err(|e| e.to_string())
    }
}

/// Region map SVG for a scan spec in the CLI's JSON format. Only the
/// classifier runs; probe entries are ignored.
pub fn region_map_svg(spec_json: &str) -> Result<String, String> {
    let mut spec = ScanSpec::from_json(spec_json).map_err(|e| e.to_string())?;
    spec.probes = vec![Probe::Classify];
    let cells: usize = spec.axes.iter().map(|a| a.count).product();
    if cells > MAX_CELLS {
        return Err(format!("{cells} cells requested, the demo allows at most {MAX_CELLS}"));
    }
    run_scan(&spec).map(|out| out.svg).map_err(|e| e.to_string())
}

/// Verdict JSON for one point.
pub fn classify_json(pt: Point, symmetric: bool) -> Result<String, String> {
    let prof = DecayProfile::exponents(pt.lambda, pt.nu, pt.mu, pt.xi);
    let v = classify(&pt.config()?, &prof, symmetric).map_err(|e| e.to_string())?;
    serde_json::to_string(&v).map_err(|e| e.to_string())
}

/// Radial trajectory from `(u0, v0)` with power-log coefficients starting at
/// `r = e`, as JSON `{outcome, blowup_radius, soft, r, u, v}`.
pub fn trajectory_json(pt: Point, u0: f64, v0: f64, horizon: f64) -> Result<String, String> {
    let cfg = pt.config()?;
    let env = |power, log_power| -> Result<Arc<dyn Radial>, String> {
        let f = PowerLog::new(1.0, power, log_power, std::f64::consts::E).map_err(|e| e.to_string())?;
        Ok(Arc::new(f))
    };
    let prob = ShootingProblem::new(cfg, env(pt.lambda, pt.nu)?, env(pt.mu, pt.xi)?, u0, v0).with_horizon(horizon);
    let res = shoot(&prob).map_err(|e| e.to_string())?;
    let column = |i: usize| res.trajectory.iter().map(|s| s[i]).collect::<Vec<f64>>();
    Ok(json!({
        "outcome": res.outcome.to_string(),
        "blowup_radius": res.blowup_radius,
        "soft": res.soft,
        "r": column(0),
        "u": column(1),
        "v": column(2),
    })
    .to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn region_map(spec_json: &str) -> Result<String, JsValue> {
    js(region_map_svg(spec_json))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn classify_point(
    dimension: u32,
    alpha: f64,
    beta: f64,
    lambda: f64,
    mu: f64,
    nu: f64,
    xi: f64,
    symmetric: bool,
) -> Result<String, JsValue> {
    let pt = Point {
        dimension,
        alpha,
        beta,
        lambda,
        mu,
        nu,
        xi,
    };
    js(classify_json(pt, symmetric))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn shoot_radial(
    dimension: u32,
    alpha: f64,
    beta: f64,
    lambda: f64,
    mu: f64,
    nu: f64,
    xi: f64,
    u0: f64,
    v0: f64,
    horizon: f64,
) -> Result<String, JsValue> {
    let pt = Point {
        dimension,
        alpha,
        beta,
        lambda,
        mu,
        nu,
        xi,
    };
    js(trajectory_json(pt, u0, v0, horizon))
}

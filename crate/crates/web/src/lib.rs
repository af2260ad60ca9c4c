//! WebAssembly bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string; errors surface as JavaScript exceptions.

use serde_json::json;
use wasm_bindgen::prelude::*;

use simpson_invex::expr::Expr;
use simpson_invex::invexity::{check_invex_set, check_preinvex, check_prequasiinvex, Domain, EtaMap, GridSpec};
use simpson_invex::kernel::{moment_by_quadrature, moment_p};
use simpson_invex::runner::{run_config, CaseConfig, EtaConfig, RunOptions};

/// Smaller than the command-line grid so the page stays responsive.
pub fn demo_grid() -> GridSpec {
    GridSpec { u: 21, v: 21, t: 11, random: 500, ..GridSpec::default() }
}

fn eta_config(eta: &str) -> EtaConfig {
    match eta {
        "difference" | "abs_example" => EtaConfig { kind: eta.into(), value: None },
        expr => EtaConfig { kind: "expression".into(), value: Some(expr.into()) },
    }
}

fn eta_map(eta: &str) -> Result<EtaMap, String> {
    match eta {
        "difference" => Ok(EtaMap::difference()),
        "abs_example" => Ok(EtaMap::abs_example()),
        expr => EtaMap::expression(expr).map_err(|e| format!("eta: {e}")),
    }
}

/// Case report for `f` on `K = [lo, hi]` with the pair `(a, b)` and exponents `q`.
#[allow(clippy::too_many_arguments)]
pub fn bounds_json(f: &str, df: &str, eta: &str, lo: f64, hi: f64, a: f64, b: f64, q: &[f64]) -> Result<String, String> {
    let config = CaseConfig {
        name: "demo".into(),
        description: None,
        f: f.into(),
        df: df.into(),
        antiderivative: None,
        d4sup: None,
        eta: eta_config(eta),
        domain: [lo, hi],
        a,
        b,
        q: q.to_vec(),
        theorems: None,
        tolerances: None,
        expected: Vec::new(),
    };
    let report = run_config(&config, &RunOptions { grid: demo_grid(), ..RunOptions::default() });
    match &report.error {
        Some(e) => Err(e.clone()),
        None => Ok(report.to_json()),
    }
}

/// Closed-form and quadrature kernel moments for each `p`.
pub fn moments_json(ps: &[f64]) -> Result<String, String> {
    let rows = ps
        .iter()
        .map(|&p| {
            let closed = moment_p(p).map_err(|e| e.to_string())?;
            let numeric = moment_by_quadrature(p, 1e-14).map_err(|e| e.to_string())?.value;
            Ok(json!({"p": p, "closed_form": closed, "numeric": numeric, "abs_diff": (closed - numeric).abs()}))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(serde_json::Value::Array(rows).to_string())
}

/// Sampled invex-set check plus a preinvex or prequasiinvex check of `g` on `K`.
pub fn invexity_json(g: &str, eta: &str, lo: f64, hi: f64, mode: &str) -> Result<String, String> {
    let g = Expr::parse(g, &["x"]).map_err(|e| format!("g: {e}"))?;
    let eta = eta_map(eta)?;
    let k = Domain::new(lo, hi).map_err(|e| e.to_string())?;
    let grid = demo_grid();
    let set = check_invex_set(&k, &eta, &grid).map_err(|e| e.to_string())?;
    let eval = |x: f64| g.eval(&[x]);
    let function = match mode {
        "preinvex" => check_preinvex(eval, &eta, &k, &grid, 1e-12),
        "prequasiinvex" => check_prequasiinvex(eval, &eta, &k, &grid, 1e-12),
        other => return Err(format!("unknown mode `{other}`")),
    }
    .map_err(|e| e.to_string())?;
    Ok(json!({"invex_set": set, "function": function}).to_string())
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn bounds(f: &str, df: &str, eta: &str, lo: f64, hi: f64, a: f64, b: f64, q: Vec<f64>) -> Result<String, JsError> {
    bounds_json(f, df, eta, lo, hi, a, b, &q).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn moments(ps: Vec<f64>) -> Result<String, JsError> {
    moments_json(&ps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn invexity(g: &str, eta: &str, lo: f64, hi: f64, mode: &str) -> Result<String, JsError> {
    invexity_json(g, eta, lo, hi, mode).map_err(|e| JsError::new(&e))
}

//! wasm-bindgen entry points for the static page in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string so the page
//! needs no glue beyond the generated module. The `*_json` functions are the
//! native-testable cores.

use nlbs_core::exact::{to_invariant, ExactSolution, SolutionField};
use nlbs_core::model::pde_residual;
use nlbs_core::solver::{solve_terminal_value, Grid, SolverConfig};
use nlbs_core::{FamilyKind, ModelKind, ModelParams, SolutionFamily};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Curve {
    pub family: String,
    pub c: f64,
    pub t: f64,
    pub s: Vec<f64>,
    /// `None` where `S` is outside the family's domain at `t`.
    pub u: Vec<Option<f64>>,
    pub delta: Vec<Option<f64>>,
    pub max_pde_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct CallSolve {
    pub model: String,
    pub s: Vec<f64>,
    pub payoff: Vec<f64>,
    /// Price at `t = 0`.
    pub u: Vec<f64>,
    /// Same grid with `rho = 0`, i.e. plain Black-Scholes.
    pub u_linear: Vec<f64>,
    pub newton_iterations: usize,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn check_points(n: usize, max: usize) -> Result<(), String> {
    if n == 0 || n > max {
        return Err(format!("point count must be in 1..={max}, got {n}"));
    }
    Ok(())
}

/// Exact price and Delta of one family along `S` at fixed `t`, with the
/// largest PDE residual seen on the in-domain points.
#[allow(clippy::too_many_arguments)]
pub fn family_curve(
    family: &str,
    c: f64,
    sigma: f64,
    rho: f64,
    t: f64,
    s_min: f64,
    s_max: f64,
    n: usize,
) -> Result<Curve, String> {
    check_points(n, 20_000)?;
    if !(s_min > 0.0 && s_max > s_min) {
        return Err("need 0 < s_min < s_max".into());
    }
    let kind = FamilyKind::from_name(family).map_err(|e| e.to_string())?;
    let params = ModelParams::new(sigma, rho, 1.0).map_err(|e| e.to_string())?;
    let fam = SolutionFamily::new(kind, c, 0.0, 0.0).map_err(|e| e.to_string())?;
    let exact = ExactSolution::new(fam, params).map_err(|e| e.to_string())?;
    let s = linspace(s_min, s_max, n);
    let mut u = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let mut worst: f64 = 0.0;
    for &x in &s {
        match exact.jet(x, t) {
            Ok(j) if j.is_finite() => {
                if let Ok(r) = pde_residual(&ModelKind::FreySde, &params, &j) {
                    worst = worst.max(r.abs());
                }
                u.push(Some(j.u));
                delta.push(Some(j.u_s));
            }
            _ => {
                u.push(None);
                delta.push(None);
            }
        }
    }
    Ok(Curve {
        family: kind.to_string(),
        c,
        t,
        s,
        u,
        delta,
        max_pde_residual: worst,
    })
}

/// Prices a European call at `t = 0` on a log-uniform grid.
pub fn call_solve(
    model: &str,
    sigma: f64,
    rho: f64,
    strike: f64,
    maturity: f64,
    nx: usize,
) -> Result<CallSolve, String> {
    check_points(nx, 2_001)?;
    if !(strike > 0.0 && maturity > 0.0) {
        return Err("strike and maturity must be positive".into());
    }
    let kind = ModelKind::from_name(model).map_err(|e| e.to_string())?;
    let nt = ((maturity * 200.0).ceil() as usize).max(10);
    let grid =
        Grid::uniform(0.1 * strike, 4.0 * strike, nx, maturity, nt).map_err(|e| e.to_string())?;
    let payoff = move |x: f64| (x - strike).max(0.0);
    let config = SolverConfig::default();
    let run = |rho: f64| {
        let params = ModelParams::new(sigma, rho, 1.0).map_err(|e| e.to_string())?;
        solve_terminal_value(&kind, &params, &payoff, &grid, &config, None)
            .map_err(|e| e.to_string())
    };
    let surf = run(rho)?;
    let base = run(0.0)?;
    Ok(CallSolve {
        model: kind.name().into(),
        s: grid.s().to_vec(),
        payoff: grid.s().iter().map(|&x| payoff(x)).collect(),
        u: surf.initial().to_vec(),
        u_linear: base.initial().to_vec(),
        newton_iterations: surf.meta.total_iterations,
    })
}

/// Invariant coordinate of `(S, t)`.
pub fn invariant(s: f64, t: f64, sigma: f64, rho: f64) -> Result<f64, String> {
    let params = ModelParams::new(sigma, rho, 1.0).map_err(|e| e.to_string())?;
    to_invariant(s, t, &params).map_err(|e| e.to_string())
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = familyCurve)]
#[allow(clippy::too_many_arguments)]
pub fn family_curve_json(
    family: &str,
    c: f64,
    sigma: f64,
    rho: f64,
    t: f64,
    s_min: f64,
    s_max: f64,
    n: usize,
) -> Result<String, JsError> {
    to_js(family_curve(family, c, sigma, rho, t, s_min, s_max, n))
}

#[wasm_bindgen(js_name = callSolve)]
pub fn call_solve_json(
    model: &str,
    sigma: f64,
    rho: f64,
    strike: f64,
    maturity: f64,
    nx: usize,
) -> Result<String, JsError> {
    to_js(call_solve(model, sigma, rho, strike, maturity, nx))
}

#[wasm_bindgen(js_name = invariantCoordinate)]
pub fn invariant_json(s: f64, t: f64, sigma: f64, rho: f64) -> Result<f64, JsError> {
    invariant(s, t, sigma, rho).map_err(|e| JsError::new(&e))
}

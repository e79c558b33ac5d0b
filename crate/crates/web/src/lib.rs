//! Browser bindings for the demo page in `www/`.
//!
//! Every exported function wraps a plain Rust function of the same name
//! with a `_native` suffix; those are what the native tests exercise.

use fairsoc::fairness::{h_of_eps, kappa, w_of_eps, FairnessError};
use fairsoc::grid::{build_fair_mls, cases, solve_mls, DamageScenario, GridError, NetworkCase};
use fairsoc::{SolverError, SolverSettings, Status};
use wasm_bindgen::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("a curve needs at least 2 points, got {0}")]
    TooFewPoints(usize),
}

fn to_js(e: DemoError) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Levels {
    pub kappa: f64,
    /// Jain index floor.
    pub w: f64,
    /// Ceiling on the squared coefficient of variation.
    pub h: f64,
}

pub fn levels_native(eps: f64, n: usize) -> Result<Levels, DemoError> {
    Ok(Levels {
        kappa: kappa(eps, n)?,
        w: w_of_eps(eps, n)?,
        h: h_of_eps(eps, n)?,
    })
}

#[wasm_bindgen]
pub fn levels(eps: f64, n: usize) -> Result<Levels, JsValue> {
    levels_native(eps, n).map_err(to_js)
}

/// `w` at `points` evenly spaced values of eps in [0, 1].
pub fn w_curve_native(n: usize, points: usize) -> Result<Vec<f64>, DemoError> {
    if points < 2 {
        return Err(DemoError::TooFewPoints(points));
    }
    (0..points)
        .map(|i| Ok(w_of_eps(i as f64 / (points - 1) as f64, n)?))
        .collect()
}

#[wasm_bindgen]
pub fn w_curve(n: usize, points: usize) -> Result<Vec<f64>, JsValue> {
    w_curve_native(n, points).map_err(to_js)
}

fn case14() -> NetworkCase {
    cases::ieee14()
}

/// Lines of the 14-bus case as `[id, from_bus, to_bus]` triples, flattened.
#[wasm_bindgen]
pub fn case14_lines() -> Vec<u32> {
    let case = case14();
    case.lines
        .iter()
        .flat_map(|l| [l.id, case.buses[l.from].id, case.buses[l.to].id])
        .map(|x| x as u32)
        .collect()
}

/// Public bus ids of the loads, in the order of [`Shed::shed`].
#[wasm_bindgen]
pub fn case14_load_buses() -> Vec<u32> {
    let case = case14();
    case.loads.iter().map(|l| case.buses[l.bus].id as u32).collect()
}

#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Shed {
    status: String,
    shed: Vec<f64>,
    demand: Vec<f64>,
    total: Option<f64>,
    jain: Option<f64>,
    base_total: Option<f64>,
}

#[wasm_bindgen]
impl Shed {
    #[wasm_bindgen(getter)]
    pub fn status(&self) -> String {
        self.status.clone()
    }

    /// Shed per load in p.u.; empty unless the solve is optimal.
    #[wasm_bindgen(getter)]
    pub fn shed(&self) -> Vec<f64> {
        self.shed.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn demand(&self) -> Vec<f64> {
        self.demand.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn total(&self) -> Option<f64> {
        self.total
    }

    #[wasm_bindgen(getter)]
    pub fn jain(&self) -> Option<f64> {
        self.jain
    }

    /// Minimum total shed with no fairness constraint.
    #[wasm_bindgen(getter)]
    pub fn base_total(&self) -> Option<f64> {
        self.base_total
    }

    /// Efficiency loss against the unconstrained shed, in percent.
    #[wasm_bindgen(getter)]
    pub fn eta_pct(&self) -> Option<f64> {
        match (self.total, self.base_total) {
            (Some(z), Some(z0)) if z0 > 0.0 => Some((z - z0) / z * 100.0),
            _ => None,
        }
    }
}

/// Fair minimum load shed on the 14-bus case with the given line ids out
/// of service.
pub fn shed_case14_native(damaged: &[u32], eps: f64) -> Result<Shed, DemoError> {
    let case = case14();
    let mut lines: Vec<usize> = damaged.iter().map(|&i| i as usize).collect();
    lines.sort_unstable();
    lines.dedup();
    let damaged = case.apply_damage(&DamageScenario { lines })?;
    let settings = SolverSettings::default();

    let run = |eps: f64| -> Result<_, DemoError> {
        let model = build_fair_mls(&damaged, eps)?;
        Ok(solve_mls(&damaged, &model, &settings)?)
    };
    let sol = run(eps)?;
    let base_total = if eps == 0.0 {
        sol.total_shed
    } else {
        let base = run(0.0)?;
        (base.status == Status::Optimal).then_some(base.total_shed).flatten()
    };
    Ok(Shed {
        status: sol.status.to_string(),
        demand: damaged.loads.iter().map(|l| l.d_max).collect(),
        total: sol.total_shed,
        jain: sol.jain.map(|j| j.value),
        shed: sol.shed,
        base_total,
    })
}

#[wasm_bindgen]
pub fn shed_case14(damaged: &[u32], eps: f64) -> Result<Shed, JsValue> {
    shed_case14_native(damaged, eps).map_err(to_js)
}

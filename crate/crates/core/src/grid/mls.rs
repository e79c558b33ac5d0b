//! Minimum load shedding programs over the DC power-flow set:
//!
//! ```text
//! p_ij = b_ij (theta_i - theta_j)                         for each line
//! sum_{g at b} p_g - sum_{i at b} (dmax_i - d_i) - f_b
//!     = sum_{lines from b} p_ij - sum_{lines to b} p_ji   for each bus
//! p_g in [pmin, pmax],  d_i in [0, dmax_i],  |p_ij| <= pmax_ij
//! ```
//!
//! where `f_b` is the fixed demand of buses that are not loads. One angle
//! per connected component is fixed to zero.

use std::fmt;
use std::str::FromStr;

use super::{GridError, NetworkCase};
use crate::conic::{ConicProgram, LinearExpr, Sense, VariableId};
use crate::fairness::{build_fairness_constraint, jain_index, JainIndex};
use crate::solver::{solve, SolverError, SolverSettings, Status};

/// Supported p for the p-norm shed objective; each is SOC-representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PNorm {
    One,
    Two,
    Four,
    Eight,
    Inf,
}

impl PNorm {
    pub const ALL: [PNorm; 5] = [PNorm::One, PNorm::Two, PNorm::Four, PNorm::Eight, PNorm::Inf];

    pub fn value(self) -> f64 {
        match self {
            PNorm::One => 1.0,
            PNorm::Two => 2.0,
            PNorm::Four => 4.0,
            PNorm::Eight => 8.0,
            PNorm::Inf => f64::INFINITY,
        }
    }

    pub fn from_value(p: f64) -> Result<Self, GridError> {
        PNorm::ALL
            .into_iter()
            .find(|q| q.value() == p)
            .ok_or_else(|| GridError::UnsupportedP(p.to_string()))
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PNorm::Inf => f.write_str("inf"),
            p => write!(f, "{}", p.value()),
        }
    }
}

impl FromStr for PNorm {
    type Err = GridError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") {
            return Ok(PNorm::Inf);
        }
        let p: f64 = t.parse().map_err(|_| GridError::UnsupportedP(t.to_string()))?;
        PNorm::from_value(p)
    }
}

/// A load-shedding program together with handles to its variables.
#[derive(Debug, Clone)]
pub struct MlsModel {
    pub program: ConicProgram,
    /// One per bus.
    pub angles: Vec<VariableId>,
    /// One per generator.
    pub dispatch: Vec<VariableId>,
    /// One per line; `None` for lines out of service.
    pub flows: Vec<Option<VariableId>>,
    /// One per load, in `case.loads` order.
    pub shed: Vec<VariableId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlsSolution {
    pub status: Status,
    /// Per-load shed, clipped to `[0, dmax]`; empty unless optimal.
    pub shed: Vec<f64>,
    pub total_shed: Option<f64>,
    pub jain: Option<JainIndex>,
    pub dispatch: Vec<f64>,
    pub angles: Vec<f64>,
    pub flows: Vec<Option<f64>>,
    /// Objective of the program as built (e.g. the p-norm for p-norm MLS).
    pub objective: Option<f64>,
    pub iterations: usize,
}

/// The base program with the objective `min sum d`.
pub fn build_mls(case: &NetworkCase) -> MlsModel {
    let mut program = ConicProgram::new();
    let components = case.components();

    let angles: Vec<VariableId> = (0..case.buses.len())
        .map(|b| {
            if components[b] == b {
                program.add_named_variable(format!("theta_{}", case.buses[b].id), 0.0, 0.0)
            } else {
                program.add_named_variable(format!("theta_{}", case.buses[b].id), f64::NEG_INFINITY, f64::INFINITY)
            }
            .expect("valid bounds")
        })
        .collect();
    let dispatch: Vec<VariableId> = case
        .generators
        .iter()
        .enumerate()
        .map(|(k, g)| {
            program
                .add_named_variable(format!("pg_{k}"), g.p_min, g.p_max)
                .expect("parser guarantees pmin <= pmax")
        })
        .collect();
    let flows: Vec<Option<VariableId>> = case
        .lines
        .iter()
        .map(|l| {
            l.in_service.then(|| {
                program
                    .add_named_variable(format!("p_{}", l.id), -l.limit, l.limit)
                    .expect("limits are nonnegative")
            })
        })
        .collect();
    let shed: Vec<VariableId> = case
        .loads
        .iter()
        .map(|ld| {
            program
                .add_named_variable(format!("d_{}", case.buses[ld.bus].id), 0.0, ld.d_max)
                .expect("demand is positive")
        })
        .collect();

    // flow law
    for (l, f) in case.lines.iter().zip(&flows) {
        let Some(f) = *f else { continue };
        let mut e = LinearExpr::var(f);
        e.add_term(angles[l.from], -l.susceptance);
        e.add_term(angles[l.to], l.susceptance);
        program.add_equality(e).expect("finite coefficients");
    }

    // nodal balance: injections - withdrawals - net outflow = 0
    let mut balance: Vec<LinearExpr> = vec![LinearExpr::new(); case.buses.len()];
    for (b, bus) in case.buses.iter().enumerate() {
        if bus.demand <= 0.0 {
            balance[b].add_constant(-bus.demand);
        }
    }
    for (g, &v) in case.generators.iter().zip(&dispatch) {
        balance[g.bus].add_term(v, 1.0);
    }
    for (ld, &v) in case.loads.iter().zip(&shed) {
        balance[ld.bus].add_term(v, 1.0);
        balance[ld.bus].add_constant(-ld.d_max);
    }
    for (l, f) in case.lines.iter().zip(&flows) {
        let Some(f) = *f else { continue };
        balance[l.from].add_term(f, -1.0);
        balance[l.to].add_term(f, 1.0);
    }
    for e in balance {
        program.add_equality(e).expect("finite coefficients");
    }

    program
        .set_objective(Sense::Minimize, LinearExpr::sum_of(shed.iter().copied()))
        .expect("own variables");
    MlsModel {
        program,
        angles,
        dispatch,
        flows,
        shed,
    }
}

/// The base program plus `kappa(eps, |D|) |d|_2 <= sum d`.
pub fn build_fair_mls(case: &NetworkCase, eps: f64) -> Result<MlsModel, GridError> {
    let mut model = build_mls(case);
    let exprs: Vec<LinearExpr> = model.shed.iter().map(|&v| v.into()).collect();
    build_fairness_constraint(&mut model.program, &exprs, eps)?;
    Ok(model)
}

/// `min |d|_p` over the DC set.
pub fn build_pnorm_mls(case: &NetworkCase, p: PNorm) -> Result<MlsModel, GridError> {
    let mut model = build_mls(case);
    if p == PNorm::One {
        return Ok(model);
    }
    let program = &mut model.program;
    let t = program.add_named_variable("norm", 0.0, f64::INFINITY)?;
    let exprs: Vec<LinearExpr> = model.shed.iter().map(|&v| v.into()).collect();
    match p {
        PNorm::Inf => {
            for e in exprs {
                program.add_le(e, t.into())?;
            }
        }
        PNorm::Two => add_power_of_two_norm(program, exprs, t, 1)?,
        PNorm::Four => add_power_of_two_norm(program, exprs, t, 2)?,
        PNorm::Eight => add_power_of_two_norm(program, exprs, t, 3)?,
        PNorm::One => unreachable!(),
    }
    program.set_objective(Sense::Minimize, t.into())?;
    Ok(model)
}

/// `|x|_{2^k} <= t` for `k >= 1`, using
/// `|x|_{2q} <= t  <=>  x_i^2 <= t y_i, |y|_q <= t` for some `y >= 0`,
/// with each `x_i^2 <= t y_i` written as `|(2 x_i, t - y_i)|_2 <= t + y_i`.
fn add_power_of_two_norm(
    program: &mut ConicProgram,
    x: Vec<LinearExpr>,
    t: VariableId,
    k: u32,
) -> Result<(), GridError> {
    if k == 1 {
        program.add_soc(t.into(), x)?;
        return Ok(());
    }
    let mut ys = Vec::with_capacity(x.len());
    for xi in x {
        let y = program.add_variable(0.0, f64::INFINITY)?;
        let lhs = LinearExpr::var(t) + LinearExpr::var(y);
        let diff = LinearExpr::var(t) - LinearExpr::var(y);
        program.add_soc(lhs, vec![xi.scaled(2.0), diff])?;
        ys.push(LinearExpr::var(y));
    }
    add_power_of_two_norm(program, ys, t, k - 1)
}

/// Lowers, solves and reads back a load-shedding program.
pub fn solve_mls(
    case: &NetworkCase,
    model: &MlsModel,
    settings: &SolverSettings,
) -> Result<MlsSolution, SolverError> {
    let form = model.program.to_standard_form();
    let sol = solve(&form, settings)?;
    if sol.status != Status::Optimal {
        return Ok(MlsSolution {
            status: sol.status,
            shed: Vec::new(),
            total_shed: None,
            jain: None,
            dispatch: Vec::new(),
            angles: Vec::new(),
            flows: Vec::new(),
            objective: None,
            iterations: sol.iterations,
        });
    }
    let values = form.recover(&sol.x);
    let shed: Vec<f64> = model
        .shed
        .iter()
        .zip(&case.loads)
        .map(|(v, ld)| values[v.index()].clamp(0.0, ld.d_max))
        .collect();
    let total = shed.iter().sum();
    let jain = jain_index(&shed).ok();
    Ok(MlsSolution {
        status: Status::Optimal,
        total_shed: Some(total),
        jain,
        dispatch: model.dispatch.iter().map(|v| values[v.index()]).collect(),
        angles: model.angles.iter().map(|v| values[v.index()]).collect(),
        flows: model.flows.iter().map(|f| f.map(|v| values[v.index()])).collect(),
        objective: Some(form.original_objective(sol.objective)),
        shed,
        iterations: sol.iterations,
    })
}

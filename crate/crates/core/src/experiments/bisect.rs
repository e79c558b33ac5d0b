use super::ExperimentError;
use crate::grid::{build_fair_mls, solve_mls, NetworkCase};
use crate::solver::{SolverSettings, Status};

pub const DEFAULT_EPS_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsMax {
    /// Largest fairness level certified feasible.
    pub eps: f64,
    /// Smallest level certified infeasible, or `None` when eps = 1 is
    /// feasible.
    pub infeasible_at: Option<f64>,
    pub solves: usize,
}

fn status_at(case: &NetworkCase, eps: f64, settings: &SolverSettings) -> Result<Status, ExperimentError> {
    let model = build_fair_mls(case, eps)?;
    Ok(solve_mls(case, &model, settings)?.status)
}

/// Largest eps for which the fair shed program is feasible, to within
/// `tol`. The feasible set shrinks as eps grows, so the answer is found by
/// bisection between a certified-feasible and a certified-infeasible level.
/// Any uncertified status aborts the search.
pub fn eps_max(case: &NetworkCase, tol: f64, settings: &SolverSettings) -> Result<EpsMax, ExperimentError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(ExperimentError::InvalidGrid(format!("bisection tolerance {tol} must lie in (0, 1)")));
    }
    let base = status_at(case, 0.0, settings)?;
    if base != Status::Optimal {
        return Err(ExperimentError::BaseNotOptimal(base));
    }
    let mut solves = 1;
    let mut lo = 0.0;
    let mut hi = 1.0;
    match status_at(case, hi, settings)? {
        Status::Optimal => {
            return Ok(EpsMax {
                eps: 1.0,
                infeasible_at: None,
                solves: 2,
            })
        }
        Status::PrimalInfeasible => {}
        status => return Err(ExperimentError::UnknownDuringBisection { eps: hi, status }),
    }
    solves += 1;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        solves += 1;
        match status_at(case, mid, settings)? {
            Status::Optimal => lo = mid,
            Status::PrimalInfeasible => hi = mid,
            status => return Err(ExperimentError::UnknownDuringBisection { eps: mid, status }),
        }
    }
    Ok(EpsMax {
        eps: lo,
        infeasible_at: Some(hi),
        solves,
    })
}

/// Largest eps whose efficiency loss against eps = 0 stays within
/// `budget_pct` percent, to within `tol`. Infeasible levels count as over
/// budget. Returns `None` when the base shed is zero, since the loss is
/// then undefined.
pub fn eps_for_efficiency_budget(
    case: &NetworkCase,
    budget_pct: f64,
    tol: f64,
    settings: &SolverSettings,
) -> Result<Option<f64>, ExperimentError> {
    if !(tol > 0.0 && tol < 1.0) || !(budget_pct >= 0.0) {
        return Err(ExperimentError::InvalidGrid(format!(
            "budget {budget_pct} must be nonnegative and tolerance {tol} in (0, 1)"
        )));
    }
    let shed_at = |eps: f64| -> Result<Option<f64>, ExperimentError> {
        let model = build_fair_mls(case, eps)?;
        let sol = solve_mls(case, &model, settings)?;
        match sol.status {
            Status::Optimal => Ok(sol.total_shed),
            Status::PrimalInfeasible => Ok(None),
            status => Err(ExperimentError::UnknownDuringBisection { eps, status }),
        }
    };
    let z0 = match shed_at(0.0)? {
        Some(z) => z,
        None => return Err(ExperimentError::BaseNotOptimal(Status::PrimalInfeasible)),
    };
    if z0 <= 0.0 {
        return Ok(None);
    }
    // solver-accuracy slack so that a level matching the base shed is
    // never rejected at a zero budget
    let slack = super::Z_MONOTONE_TOL * (1.0 + z0);
    let within = |z: Option<f64>| z.is_some_and(|z| z - z0 <= budget_pct / 100.0 * z + slack);
    if within(shed_at(1.0)?) {
        return Ok(Some(1.0));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if within(shed_at(mid)?) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

//! Scenario sweeps over the fairness level or the p-norm objective, the
//! feasibility-limit bisection, audits of the monotonicity properties, and
//! CSV reports.

mod audit;
mod bisect;
mod report;
mod sweep;

use std::fmt;

pub use audit::{
    infeasibility_table, monotonicity_audit, quartiles, summarize, InfeasibilityRow, MonotonicityAudit, ParamSummary,
    Quartiles, ScenarioAudit, Z_MONOTONE_TOL,
};
pub use bisect::{eps_for_efficiency_budget, eps_max, EpsMax, DEFAULT_EPS_TOL};
pub use report::{export_csv, import_csv, read_csv_file, write_csv_file, CSV_HEADER};
pub use sweep::{case_fingerprint, eps_sweep, pnorm_sweep, SweepOptions};

use crate::grid::{GridError, PNorm};
use crate::solver::{SolverError, Status};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("the grid must contain the baseline {0}")]
    MissingBaseline(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("base problem (eps = 0) is not solved to optimality: {0}")]
    BaseNotOptimal(Status),
    #[error("solver returned {status} at eps = {eps}; bisection needs certified statuses")]
    UnknownDuringBisection { eps: f64, status: Status },
    #[error("malformed report: {0}")]
    Report(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Eps,
    P,
}

impl ParamKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamKind::Eps => "eps",
            ParamKind::P => "p",
        }
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Eps(f64),
    P(PNorm),
}

impl Param {
    pub fn kind(self) -> ParamKind {
        match self {
            Param::Eps(_) => ParamKind::Eps,
            Param::P(_) => ParamKind::P,
        }
    }

    /// Position on the parameter axis (`p = inf` maps to infinity).
    pub fn value(self) -> f64 {
        match self {
            Param::Eps(e) => e,
            Param::P(p) => p.value(),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Eps(e) => write!(f, "{e}"),
            Param::P(p) => write!(f, "{p}"),
        }
    }
}

/// Certified outcome of one cell; iteration limits and numerical failures
/// are `Unknown`, never infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowStatus {
    Optimal,
    Infeasible,
    Unknown,
}

impl RowStatus {
    pub fn from_solver(s: Status) -> Self {
        match s {
            Status::Optimal => RowStatus::Optimal,
            Status::PrimalInfeasible => RowStatus::Infeasible,
            // the shed programs are bounded, so an unboundedness claim is
            // a solver failure
            Status::DualInfeasible | Status::IterationLimit | Status::NumericalFailure => RowStatus::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Optimal => "optimal",
            RowStatus::Infeasible => "infeasible",
            RowStatus::Unknown => "unknown",
        }
    }
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario_id: usize,
    pub param: Param,
    pub status: RowStatus,
    /// Total shed `sum d`.
    pub z: Option<f64>,
    pub jain: Option<f64>,
    /// Efficiency loss `(z - z_base) / z * 100` against the baseline
    /// (eps = 0 or p = 1) of the same scenario.
    pub eta_r_pct: Option<f64>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub kind: ParamKind,
    pub grid: Vec<Param>,
    pub case_fingerprint: String,
    pub seed: Option<u64>,
    /// Further `key=value` settings recorded with the run, in order.
    pub config: Vec<(String, String)>,
    /// Row-major over (scenario, parameter).
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Rows of one scenario, in grid order.
    pub fn scenario_rows(&self) -> impl Iterator<Item = &[SweepRow]> {
        self.rows.chunks(self.grid.len().max(1))
    }

    pub fn num_scenarios(&self) -> usize {
        if self.grid.is_empty() {
            0
        } else {
            self.rows.len() / self.grid.len()
        }
    }
}

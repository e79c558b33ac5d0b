use super::{Param, ParamKind, RowStatus, SweepReport, SweepRow};

/// Relative slack `tol * (1 + |z|)` allowed when comparing shed totals from
/// separate solves.
pub const Z_MONOTONE_TOL: f64 = 1e-6;
/// Absolute slack when comparing Jain indices from separate solves.
const JAIN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Five-number summary with linear interpolation between order statistics.
pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if i + 1 < v.len() {
            v[i] + frac * (v[i + 1] - v[i])
        } else {
            v[i]
        }
    };
    Some(Quartiles {
        min: v[0],
        q1: at(0.25),
        median: at(0.5),
        q3: at(0.75),
        max: v[v.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub param: Param,
    pub optimal: usize,
    pub infeasible: usize,
    pub unknown: usize,
    pub z: Option<Quartiles>,
    pub jain: Option<Quartiles>,
    pub eta_r_pct: Option<Quartiles>,
}

/// Per-parameter counts and quartiles over the optimal rows.
pub fn summarize(report: &SweepReport) -> Vec<ParamSummary> {
    report
        .grid
        .iter()
        .enumerate()
        .map(|(j, &param)| {
            let column: Vec<&SweepRow> = report.scenario_rows().map(|rows| &rows[j]).collect();
            let count = |s: RowStatus| column.iter().filter(|r| r.status == s).count();
            let collect = |f: fn(&SweepRow) -> Option<f64>| -> Vec<f64> {
                column
                    .iter()
                    .filter(|r| r.status == RowStatus::Optimal)
                    .filter_map(|r| f(r))
                    .collect()
            };
            ParamSummary {
                param,
                optimal: count(RowStatus::Optimal),
                infeasible: count(RowStatus::Infeasible),
                unknown: count(RowStatus::Unknown),
                z: quartiles(&collect(|r| r.z)),
                jain: quartiles(&collect(|r| r.jain)),
                eta_r_pct: quartiles(&collect(|r| r.eta_r_pct)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibilityRow {
    pub param: Param,
    pub infeasible: usize,
    pub unknown: usize,
    pub total: usize,
}

/// Number of scenarios certified infeasible at each parameter value, with
/// uncertified outcomes counted separately.
pub fn infeasibility_table(report: &SweepReport) -> Vec<InfeasibilityRow> {
    summarize(report)
        .into_iter()
        .map(|s| InfeasibilityRow {
            param: s.param,
            infeasible: s.infeasible,
            unknown: s.unknown,
            total: s.optimal + s.infeasible + s.unknown,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioAudit {
    pub scenario_id: usize,
    /// Optimal cells following an infeasible one along the grid.
    pub feasibility_violations: usize,
    /// Pairs of optimal cells where the shed total drops as the parameter
    /// grows (eps sweeps only).
    pub z_violations: usize,
    /// Consecutive optimal cells where the Jain index drops as the
    /// parameter grows.
    pub jain_decreases: usize,
    pub unknown: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityAudit {
    pub kind: ParamKind,
    pub scenarios: Vec<ScenarioAudit>,
}

impl MonotonicityAudit {
    /// Scenarios whose every cell is certified; only these support
    /// monotonicity claims.
    pub fn certified(&self) -> impl Iterator<Item = &ScenarioAudit> {
        self.scenarios.iter().filter(|s| s.unknown == 0)
    }

    pub fn scenarios_with_unknown(&self) -> usize {
        self.scenarios.iter().filter(|s| s.unknown > 0).count()
    }

    pub fn feasibility_violations(&self) -> usize {
        self.certified().map(|s| s.feasibility_violations).sum()
    }

    pub fn z_violations(&self) -> usize {
        self.certified().map(|s| s.z_violations).sum()
    }

    /// Certified scenarios whose Jain index is not monotone along the grid.
    pub fn jain_non_monotone(&self) -> usize {
        self.certified().filter(|s| s.jain_decreases > 0).count()
    }
}

/// Checks, per scenario, that feasibility is lost at most once along the
/// grid, that the shed total does not decrease with eps, and counts
/// decreases of the Jain index. The Jain counts are reported, not judged:
/// neither a larger eps nor a larger p is guaranteed to raise the index.
pub fn monotonicity_audit(report: &SweepReport) -> MonotonicityAudit {
    let scenarios = report
        .scenario_rows()
        .map(|rows| {
            let mut seen_infeasible = false;
            let mut feasibility_violations = 0;
            for r in rows {
                match r.status {
                    RowStatus::Infeasible => seen_infeasible = true,
                    RowStatus::Optimal if seen_infeasible => feasibility_violations += 1,
                    _ => {}
                }
            }
            let optimal: Vec<&SweepRow> = rows.iter().filter(|r| r.status == RowStatus::Optimal).collect();
            let mut z_violations = 0;
            if report.kind == ParamKind::Eps {
                for (i, a) in optimal.iter().enumerate() {
                    for b in &optimal[i + 1..] {
                        let (za, zb) = (a.z.unwrap_or(0.0), b.z.unwrap_or(0.0));
                        if zb < za - Z_MONOTONE_TOL * (1.0 + za.abs()) {
                            z_violations += 1;
                        }
                    }
                }
            }
            let jain_decreases = optimal
                .windows(2)
                .filter(|w| match (w[0].jain, w[1].jain) {
                    (Some(a), Some(b)) => b < a - JAIN_TOL,
                    _ => false,
                })
                .count();
            ScenarioAudit {
                scenario_id: rows[0].scenario_id,
                feasibility_violations,
                z_violations,
                jain_decreases,
                unknown: rows.iter().filter(|r| r.status == RowStatus::Unknown).count(),
            }
        })
        .collect();
    MonotonicityAudit {
        kind: report.kind,
        scenarios,
    }
}

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{ExperimentError, Param, ParamKind, RowStatus, SweepReport, SweepRow};
use crate::grid::{build_fair_mls, build_pnorm_mls, solve_mls, DamageScenario, NetworkCase, PNorm};
use crate::solver::SolverSettings;

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub settings: SolverSettings,
    /// Worker threads; `None` uses the global rayon pool.
    pub jobs: Option<usize>,
    /// Record wall-clock time per cell. Off by default so that reports
    /// are byte-for-byte reproducible.
    pub timing: bool,
    /// Seed of the scenario set, recorded in the report.
    pub seed: Option<u64>,
}

/// SHA-256 over a canonical rendering of the case data.
pub fn case_fingerprint(case: &NetworkCase) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "base {:?}", case.base_mva);
    for b in &case.buses {
        let _ = writeln!(s, "bus {} {:?}", b.id, b.demand);
    }
    for l in &case.lines {
        let _ = writeln!(
            s,
            "line {} {} {} {:?} {:?} {}",
            l.id, l.from, l.to, l.susceptance, l.limit, l.in_service
        );
    }
    for g in &case.generators {
        let _ = writeln!(s, "gen {} {:?} {:?}", g.bus, g.p_min, g.p_max);
    }
    hex::encode(Sha256::digest(s.as_bytes()))
}

/// Solves the fair shed program for every scenario and every fairness
/// level. The grid is sorted and must contain 0, the baseline of the
/// efficiency loss.
pub fn eps_sweep(
    case: &NetworkCase,
    scenarios: &[DamageScenario],
    eps_grid: &[f64],
    opts: &SweepOptions,
) -> Result<SweepReport, ExperimentError> {
    let mut grid = eps_grid.to_vec();
    if let Some(bad) = grid.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(ExperimentError::InvalidGrid(format!("eps = {bad} is outside [0, 1]")));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.first() != Some(&0.0) {
        return Err(ExperimentError::MissingBaseline("eps = 0"));
    }
    let grid: Vec<Param> = grid.into_iter().map(Param::Eps).collect();
    run(case, scenarios, ParamKind::Eps, grid, opts)
}

/// Solves the p-norm shed program for every scenario and every `p`. The
/// set is sorted and must contain `p = 1`.
pub fn pnorm_sweep(
    case: &NetworkCase,
    scenarios: &[DamageScenario],
    p_set: &[PNorm],
    opts: &SweepOptions,
) -> Result<SweepReport, ExperimentError> {
    let mut ps = p_set.to_vec();
    ps.sort_by(|a, b| a.value().total_cmp(&b.value()));
    ps.dedup();
    if ps.first() != Some(&PNorm::One) {
        return Err(ExperimentError::MissingBaseline("p = 1"));
    }
    let grid: Vec<Param> = ps.into_iter().map(Param::P).collect();
    run(case, scenarios, ParamKind::P, grid, opts)
}

fn run(
    case: &NetworkCase,
    scenarios: &[DamageScenario],
    kind: ParamKind,
    grid: Vec<Param>,
    opts: &SweepOptions,
) -> Result<SweepReport, ExperimentError> {
    opts.settings.validate()?;
    let damaged = scenarios
        .iter()
        .map(|s| case.apply_damage(s))
        .collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<(usize, Param)> = (0..scenarios.len())
        .flat_map(|i| grid.iter().map(move |&p| (i, p)))
        .collect();

    let solve_all = || -> Result<Vec<SweepRow>, ExperimentError> {
        cells
            .par_iter()
            .map(|&(i, p)| solve_cell(&damaged[i], i, p, opts))
            .collect()
    };
    let mut rows = match opts.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| ExperimentError::InvalidGrid(format!("thread pool: {e}")))?
            .install(solve_all)?,
        None => solve_all()?,
    };

    for chunk in rows.chunks_mut(grid.len()) {
        let base = match chunk[0].status {
            RowStatus::Optimal => chunk[0].z.filter(|&z| z > 0.0),
            _ => None,
        };
        if let Some(z0) = base {
            for row in chunk.iter_mut() {
                row.eta_r_pct = row.z.map(|z| (z - z0) / z * 100.0);
            }
        }
    }

    let mut config = vec![
        ("scenarios".to_string(), scenarios.len().to_string()),
        ("tol_feas".to_string(), format!("{:e}", opts.settings.tol_feas)),
        ("tol_gap".to_string(), format!("{:e}", opts.settings.tol_gap)),
        ("tol_infeas".to_string(), format!("{:e}", opts.settings.tol_infeas)),
        ("max_iter".to_string(), opts.settings.max_iter.to_string()),
    ];
    if opts.timing {
        config.push(("timing".to_string(), "on".to_string()));
    }
    Ok(SweepReport {
        kind,
        grid,
        case_fingerprint: case_fingerprint(case),
        seed: opts.seed,
        config,
        rows,
    })
}

fn solve_cell(case: &NetworkCase, scenario_id: usize, param: Param, opts: &SweepOptions) -> Result<SweepRow, ExperimentError> {
    let start = opts.timing.then(Instant::now);
    let model = match param {
        Param::Eps(e) => build_fair_mls(case, e)?,
        Param::P(p) => build_pnorm_mls(case, p)?,
    };
    let sol = solve_mls(case, &model, &opts.settings)?;
    let wall_ms = start.map(|t| t.elapsed().as_secs_f64() * 1e3);
    let status = RowStatus::from_solver(sol.status);
    if status == RowStatus::Unknown {
        log::warn!("scenario {scenario_id} at {} = {param}: solver returned {}", param.kind(), sol.status);
    }
    Ok(SweepRow {
        scenario_id,
        param,
        status,
        z: sol.total_shed,
        jain: sol.jain.map(|j| j.value),
        eta_r_pct: None,
        wall_ms,
    })
}

//! Independent oracles shared by the integration tests. None of them call
//! into the solver except `fine_grid_eps_max`, which only scans levels.
#![allow(dead_code)]

use fairsoc::grid::{build_fair_mls, solve_mls, NetworkCase};
use fairsoc::{SolverSettings, Status};

/// `min c'x` over `{G x <= h, lo <= x <= hi}` by enumerating every basis of
/// active constraints. Returns `None` if no vertex is feasible.
pub fn vertex_enumeration(c: &[f64], g: &[Vec<f64>], h: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let n = c.len();
    let mut rows: Vec<(Vec<f64>, f64)> = g.iter().cloned().zip(h.iter().copied()).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e.clone(), hi));
        e[j] = -1.0;
        rows.push((e, -lo));
    }
    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_square(&subset.iter().map(|&k| rows[k].clone()).collect::<Vec<_>>()) {
            let feasible = rows
                .iter()
                .all(|(a, b)| a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-9);
            if feasible {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        // next combination
        let m = rows.len();
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] < m - n + i {
                subset[i] += 1;
                for k in i + 1..n {
                    subset[k] = subset[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Gaussian elimination with partial pivoting on `[a | b]` rows.
fn solve_square(rows: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(*b);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                for k in col..=n {
                    m[r][k] -= f * m[col][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// The radial 3-bus fixtures: a 10 p.u. generator at bus 1 feeds 6 p.u.
/// loads at buses 2 and 3 over lines with the given ratings. Line flows
/// equal the served demand, so a shed pair is feasible iff each line
/// carries at most its rating and the generator covers the sum.
#[derive(Debug, Clone, Copy)]
pub struct ThreeBus {
    pub caps: (f64, f64),
}

pub const THREE_BUS_LOAD: f64 = 6.0;
pub const THREE_BUS_GEN: f64 = 10.0;
pub const GRID_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Total,
    Two,
    Max,
}

#[derive(Debug, Clone)]
pub struct GridOptimum {
    pub value: f64,
    /// Bounding box of the grid points attaining the minimum.
    pub d2: (f64, f64),
    pub d3: (f64, f64),
}

impl GridOptimum {
    /// Distance from `d` to the box of minimizers.
    pub fn distance(&self, d: (f64, f64)) -> f64 {
        let gap = |x: f64, (lo, hi): (f64, f64)| (lo - x).max(x - hi).max(0.0);
        gap(d.0, self.d2).hypot(gap(d.1, self.d3))
    }
}

impl ThreeBus {
    pub const SYMMETRIC: ThreeBus = ThreeBus { caps: (5.0, 5.0) };
    pub const ASYMMETRIC: ThreeBus = ThreeBus { caps: (6.0, 4.0) };

    fn physical(&self, d2: f64, d3: f64) -> bool {
        let (s2, s3) = (THREE_BUS_LOAD - d2, THREE_BUS_LOAD - d3);
        s2 <= self.caps.0 + 1e-12 && s3 <= self.caps.1 + 1e-12 && s2 + s3 <= THREE_BUS_GEN + 1e-12
    }

    /// Exhaustive scan of the shed grid with step `GRID_STEP`, optionally
    /// restricted to at-least-eps-fair sheds (`kappa |d|_2 <= sum d`).
    pub fn optimum(&self, eps: Option<f64>, objective: Objective) -> Option<GridOptimum> {
        let steps = (THREE_BUS_LOAD / GRID_STEP).round() as usize;
        let kappa = eps.map(|e| 1.0 - e + e * 2f64.sqrt());
        let mut best = f64::INFINITY;
        let mut points: Vec<(f64, f64)> = Vec::new();
        for i in 0..=steps {
            let d2 = i as f64 * GRID_STEP;
            for j in 0..=steps {
                let d3 = j as f64 * GRID_STEP;
                if !self.physical(d2, d3) {
                    continue;
                }
                if let Some(k) = kappa {
                    if k * d2.hypot(d3) > (d2 + d3) * (1.0 + 1e-12) {
                        continue;
                    }
                }
                let v = match objective {
                    Objective::Total => d2 + d3,
                    Objective::Two => d2.hypot(d3),
                    Objective::Max => d2.max(d3),
                };
                if v < best - 1e-12 {
                    best = v;
                    points.clear();
                }
                if v <= best + 1e-12 {
                    points.push((d2, d3));
                }
            }
        }
        if points.is_empty() {
            return None;
        }
        let span = |f: fn(&(f64, f64)) -> f64| {
            let lo = points.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        Some(GridOptimum {
            value: best,
            d2: span(|p| p.0),
            d3: span(|p| p.1),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FineGrid {
    /// Largest grid level solved to optimality.
    pub eps_max: f64,
    /// Levels at which the solver was not certain.
    pub unknown: Vec<f64>,
    /// True when an optimal level follows an infeasible one.
    pub non_monotone: bool,
}

/// Scans `eps = 0, step, 2 step, ..., 1` and reports the last feasible
/// level.
pub fn fine_grid_eps_max(case: &NetworkCase, step: f64, settings: &SolverSettings) -> FineGrid {
    let n = (1.0 / step).round() as usize;
    let mut eps_max = f64::NAN;
    let mut unknown = Vec::new();
    let mut seen_infeasible = false;
    let mut non_monotone = false;
    for i in 0..=n {
        let eps = i as f64 / n as f64;
        let model = build_fair_mls(case, eps).expect("model builds");
        match solve_mls(case, &model, settings).expect("solver runs").status {
            Status::Optimal => {
                non_monotone |= seen_infeasible;
                eps_max = eps;
            }
            Status::PrimalInfeasible => seen_infeasible = true,
            _ => unknown.push(eps),
        }
    }
    FineGrid {
        eps_max,
        unknown,
        non_monotone,
    }
}

//! Regularized KKT system
//!
//! ```text
//! [ delta I      A'          ] [dx]   [rx]
//! [ A       -(W'W + delta I) ] [dz] = [rz]
//! ```
//!
//! factored once per iteration, with iterative refinement against the
//! unregularized matrix.

use super::cones::ConeSet;
use super::ldl::{LdlError, LdlFactor};
use crate::sparse::CscMatrix;

const REFINE_MAX_ITER: usize = 10;
const REFINE_REL_TOL: f64 = 1e-14;
const REFINE_ABS_TOL: f64 = 1e-13;
const DYN_REG_EPS: f64 = 1e-13;
const DYN_REG_DELTA: f64 = 2e-7;

pub(crate) struct KktSystem {
    n: usize,
    m: usize,
    pattern: Vec<(usize, usize)>,
    values: Vec<f64>,
    h_start: usize,
    static_reg: f64,
    ldl: LdlFactor,
    hess: Vec<f64>,
    residual: Vec<f64>,
    correction: Vec<f64>,
    candidate: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl KktSystem {
    pub fn new(a: &CscMatrix, cones: &ConeSet, static_reg: f64) -> Result<Self, LdlError> {
        let (m, n) = (a.nrows, a.ncols);
        let mut pattern = Vec::with_capacity(n + a.nnz() + m);
        let mut values = Vec::with_capacity(pattern.capacity());
        for j in 0..n {
            pattern.push((j, j));
            values.push(static_reg);
        }
        for j in 0..n {
            for (i, v) in a.col(j) {
                pattern.push((j, n + i));
                values.push(v);
            }
        }
        let h_start = pattern.len();
        for (i, j) in cones.hessian_pattern() {
            pattern.push((n + i, n + j));
            values.push(0.0);
        }
        let signs: Vec<f64> = (0..n + m).map(|k| if k < n { 1.0 } else { -1.0 }).collect();
        let ldl = LdlFactor::new(n + m, &pattern, &signs)?;
        Ok(KktSystem {
            n,
            m,
            pattern,
            values,
            h_start,
            static_reg,
            ldl,
            hess: Vec::new(),
            residual: vec![0.0; n + m],
            correction: vec![0.0; n + m],
            candidate: vec![0.0; n + m],
        })
    }

    fn load_hessian(&mut self) {
        let n = self.n;
        for (k, &h) in self.hess.iter().enumerate() {
            let idx = self.h_start + k;
            let (i, j) = self.pattern[idx];
            let diag = if i == j && i >= n { self.static_reg } else { 0.0 };
            self.values[idx] = -h - diag;
        }
    }

    /// Factors with the identity scaling (used for the initial point).
    pub fn factor_identity(&mut self, cones: &ConeSet) -> Result<usize, LdlError> {
        cones.identity_hessian_values(&mut self.hess);
        self.load_hessian();
        self.ldl.factor(&self.values, DYN_REG_EPS, DYN_REG_DELTA)
    }

    /// Factors with the current cone scaling.
    pub fn factor(&mut self, cones: &ConeSet) -> Result<usize, LdlError> {
        cones.hessian_values(&mut self.hess);
        self.load_hessian();
        self.ldl.factor(&self.values, DYN_REG_EPS, DYN_REG_DELTA)
    }

    /// `y = K x` for the unregularized matrix.
    fn mul(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (&(i, j), &v) in self.pattern.iter().zip(&self.values) {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        for k in 0..self.n {
            y[k] -= self.static_reg * x[k];
        }
        for k in self.n..self.n + self.m {
            y[k] += self.static_reg * x[k];
        }
    }

    /// Solves `K sol = rhs` with iterative refinement.
    pub fn solve(&mut self, rhs: &[f64], sol: &mut [f64]) {
        sol.copy_from_slice(rhs);
        self.ldl.solve(sol);
        let tol = REFINE_ABS_TOL + REFINE_REL_TOL * inf_norm(rhs);

        let mut residual = std::mem::take(&mut self.residual);
        let mut correction = std::mem::take(&mut self.correction);
        let mut candidate = std::mem::take(&mut self.candidate);

        self.mul(sol, &mut residual);
        residual.iter_mut().zip(rhs).for_each(|(r, b)| *r = b - *r);
        let mut norm = inf_norm(&residual);
        for _ in 0..REFINE_MAX_ITER {
            if norm <= tol {
                break;
            }
            correction.copy_from_slice(&residual);
            self.ldl.solve(&mut correction);
            candidate.iter_mut().zip(sol.iter().zip(&correction)).for_each(|(c, (s, d))| *c = s + d);
            self.mul(&candidate, &mut residual);
            residual.iter_mut().zip(rhs).for_each(|(r, b)| *r = b - *r);
            let new_norm = inf_norm(&residual);
            if new_norm >= norm {
                break;
            }
            sol.copy_from_slice(&candidate);
            norm = new_norm;
        }

        self.residual = residual;
        self.correction = correction;
        self.candidate = candidate;
    }
}

//! Standalone checks of infeasibility certificates against a standard form.
//!
//! These routines only read the problem data; they share no arithmetic with
//! the interior-point iterations, so a certificate accepted here is valid
//! regardless of how it was produced.
//!
//! * Primal infeasibility of `{Ax = b, x in K}`: a `y` with `-A'y in K*` and
//!   `b'y > 0`. Any feasible `x` would give `0 < b'y = x'(A'y) <= 0`.
//! * Dual infeasibility (unboundedness): a ray `x in K` with `Ax = 0` and
//!   `c'x < 0`.

use crate::conic::{ConeBlock, StandardConicForm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateCheck {
    pub valid: bool,
    /// Largest violation of the cone (or equality) conditions after
    /// normalizing the certificate to unit 2-norm.
    pub violation: f64,
    /// `b'y` (primal) or `-c'x` (dual) after normalization; must be positive.
    pub margin: f64,
}

/// Distance-like violation of membership of `v` in the (self-dual) block
/// cone; free blocks have dual cone `{0}`, so `dual = true` demands zeros
/// there.
fn block_violation(block: ConeBlock, v: &[f64], dual: bool) -> f64 {
    match block {
        ConeBlock::Free(_) => {
            if dual {
                v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
            } else {
                0.0
            }
        }
        ConeBlock::Nonnegative(_) => v.iter().fold(0.0f64, |m, &x| m.max(-x)),
        ConeBlock::SecondOrder(_) => {
            let tail = v[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
            (tail - v[0]).max(0.0)
        }
    }
}

fn cone_violation(form: &StandardConicForm, v: &[f64], dual: bool) -> f64 {
    let mut start = 0;
    let mut worst: f64 = 0.0;
    for &block in &form.cones {
        let end = start + block.dim();
        worst = worst.max(block_violation(block, &v[start..end], dual));
        start = end;
    }
    worst
}

pub fn verify_primal_infeasibility(form: &StandardConicForm, y: &[f64], tol: f64) -> CertificateCheck {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if y.len() != form.a.nrows || !(norm > 0.0) || !norm.is_finite() {
        return CertificateCheck {
            valid: false,
            violation: f64::INFINITY,
            margin: 0.0,
        };
    }
    let a = &form.a;
    // g = -A'y / |y|
    let mut g = vec![0.0; a.ncols];
    for (j, gj) in g.iter_mut().enumerate() {
        let mut acc = 0.0;
        for p in a.colptr[j]..a.colptr[j + 1] {
            acc += a.nzval[p] * y[a.rowval[p]];
        }
        *gj = -acc / norm;
    }
    let violation = cone_violation(form, &g, true);
    let margin = form.b.iter().zip(y).map(|(b, y)| b * y).sum::<f64>() / norm;
    CertificateCheck {
        valid: violation <= tol && margin > tol,
        violation,
        margin,
    }
}

pub fn verify_dual_infeasibility(form: &StandardConicForm, x: &[f64], tol: f64) -> CertificateCheck {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if x.len() != form.a.ncols || !(norm > 0.0) || !norm.is_finite() {
        return CertificateCheck {
            valid: false,
            violation: f64::INFINITY,
            margin: 0.0,
        };
    }
    let a = &form.a;
    let mut ax = vec![0.0; a.nrows];
    for j in 0..a.ncols {
        for p in a.colptr[j]..a.colptr[j + 1] {
            ax[a.rowval[p]] += a.nzval[p] * x[j] / norm;
        }
    }
    let xn: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let violation = ax
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(cone_violation(form, &xn, false));
    let margin = -form.c.iter().zip(&xn).map(|(c, x)| c * x).sum::<f64>();
    CertificateCheck {
        valid: violation <= tol && margin > tol,
        violation,
        margin,
    }
}

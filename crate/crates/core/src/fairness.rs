//! Closed-form epsilon-fairness mathematics.
//!
//! A nonnegative vector `u` of length `n` is *at least epsilon-fair* when
//!
//! ```text
//! kappa(eps, n) * |u|_2 <= |u|_1,    kappa(eps, n) = 1 - eps + eps * sqrt(n)
//! ```
//!
//! Since `|u|_2 <= |u|_1 <= sqrt(n) |u|_2` always holds, `eps = 0` imposes
//! nothing and `eps = 1` forces all entries to be equal. The condition is
//! equivalent to a Jain index of at least `w(eps) = kappa^2 / n`, and to a
//! squared coefficient of variation of at most `h(eps)`.

use crate::conic::{ConicProgram, ConstraintId, LinearExpr, ModelError, VariableId};

/// Absolute tolerance on `kappa |u|_2 <= |u|_1` used by post-hoc checks.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FairnessError {
    #[error("population size must be at least {min}, got {n}")]
    PopulationTooSmall { n: usize, min: usize },
    #[error("epsilon must lie in [0, 1], got {0}")]
    EpsOutOfRange(f64),
    #[error("Jain index {j} outside [1/n, 1] for n = {n}")]
    JainOutOfRange { j: f64, n: usize },
    #[error("utility {index} is {value}; utilities must be finite and nonnegative")]
    InvalidUtility { index: usize, value: f64 },
    #[error("alpha-fair utility with alpha = {alpha} needs positive utilities, entry {index} is zero")]
    ZeroUtility { alpha: f64, index: usize },
    #[error("alpha must be finite and nonnegative, got {0}")]
    InvalidAlpha(f64),
    #[error("p must be at least 1 (or infinity), got {0}")]
    InvalidP(f64),
    #[error("utility variable {0} may take negative values")]
    UtilityNotNonnegative(VariableId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn check_n(n: usize, min: usize) -> Result<(), FairnessError> {
    if n < min {
        return Err(FairnessError::PopulationTooSmall { n, min });
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<(), FairnessError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(FairnessError::EpsOutOfRange(eps));
    }
    Ok(())
}

fn check_utilities(u: &[f64]) -> Result<(), FairnessError> {
    check_n(u.len(), 1)?;
    match u.iter().position(|&x| !(x >= 0.0 && x.is_finite())) {
        Some(index) => Err(FairnessError::InvalidUtility { index, value: u[index] }),
        None => Ok(()),
    }
}

/// `1 - eps + eps * sqrt(n)`
pub fn kappa(eps: f64, n: usize) -> Result<f64, FairnessError> {
    check_n(n, 1)?;
    check_eps(eps)?;
    Ok(1.0 - eps + eps * (n as f64).sqrt())
}

/// Jain index value together with a flag for the all-zero vector, whose
/// index is defined as 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JainIndex {
    pub value: f64,
    pub degenerate: bool,
}

/// `(sum u)^2 / (n * sum u^2)`, in `[1/n, 1]`.
pub fn jain_index(u: &[f64]) -> Result<JainIndex, FairnessError> {
    check_utilities(u)?;
    let sum: f64 = u.iter().sum();
    let sq: f64 = u.iter().map(|x| x * x).sum();
    if sq == 0.0 {
        return Ok(JainIndex {
            value: 1.0,
            degenerate: true,
        });
    }
    Ok(JainIndex {
        value: sum * sum / (u.len() as f64 * sq),
        degenerate: false,
    })
}

/// The Jain index level equivalent to epsilon-fairness: `kappa^2 / n`.
pub fn w_of_eps(eps: f64, n: usize) -> Result<f64, FairnessError> {
    let k = kappa(eps, n)?;
    Ok(k * k / n as f64)
}

/// Inverse of [`w_of_eps`]: `(sqrt(n J) - 1) / (sqrt(n) - 1)`.
pub fn eps_from_jain(j: f64, n: usize) -> Result<f64, FairnessError> {
    check_n(n, 2)?;
    let nf = n as f64;
    // a little slack for Jain values computed in floating point
    let slack = 1e-12;
    if !(j >= 1.0 / nf - slack && j <= 1.0 + slack) {
        return Err(FairnessError::JainOutOfRange { j, n });
    }
    let eps = ((nf * j).sqrt() - 1.0) / (nf.sqrt() - 1.0);
    Ok(eps.clamp(0.0, 1.0))
}

/// Upper bound on the squared coefficient of variation of an epsilon-fair
/// vector: `n/(n-1) * (n / kappa^2 - 1)`.
pub fn h_of_eps(eps: f64, n: usize) -> Result<f64, FairnessError> {
    check_n(n, 2)?;
    let k = kappa(eps, n)?;
    let nf = n as f64;
    Ok(nf / (nf - 1.0) * (nf / (k * k) - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairnessStats {
    pub mean: f64,
    /// Sample variance (divisor `n - 1`).
    pub variance: f64,
    /// `sigma / mu`; `None` for the zero vector.
    pub cv: Option<f64>,
    pub jain: JainIndex,
}

pub fn sample_stats(u: &[f64]) -> Result<FairnessStats, FairnessError> {
    check_utilities(u)?;
    check_n(u.len(), 2)?;
    let nf = u.len() as f64;
    let mean = u.iter().sum::<f64>() / nf;
    let sq: f64 = u.iter().map(|x| x * x).sum();
    let variance = ((sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    let cv = (mean > 0.0).then(|| variance.sqrt() / mean);
    Ok(FairnessStats {
        mean,
        variance,
        cv,
        jain: jain_index(u)?,
    })
}

/// `kappa(eps, n) |u|_2 <= |u|_1 + tol`
pub fn is_at_least_eps_fair(u: &[f64], eps: f64, tol: f64) -> Result<bool, FairnessError> {
    check_utilities(u)?;
    let k = kappa(eps, u.len())?;
    let l1: f64 = u.iter().sum();
    let l2 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(k * l2 <= l1 + tol)
}

/// Handles created by [`build_fairness_constraint`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairnessConstraint {
    /// `t = sum(u) / kappa`
    pub epigraph: VariableId,
    pub link: ConstraintId,
    pub cone: ConstraintId,
}

/// Adds `kappa(eps, n) |u|_2 <= sum(u)` as the cone `|u|_2 <= t` with
/// `kappa t = sum(u)`. The sum equals `|u|_1` only for nonnegative `u`;
/// utilities that are plain variables are checked against their bounds.
pub fn build_fairness_constraint(
    program: &mut ConicProgram,
    utilities: &[LinearExpr],
    eps: f64,
) -> Result<FairnessConstraint, FairnessError> {
    let k = kappa(eps, utilities.len())?;
    for u in utilities {
        if let Some(v) = u.as_single_variable() {
            if v.index() >= program.num_variables() {
                return Err(ModelError::UnknownVariable(v.index()).into());
            }
            if program.bounds(v).lower < 0.0 {
                return Err(FairnessError::UtilityNotNonnegative(v));
            }
        }
    }
    let t = program.add_variable(0.0, f64::INFINITY)?;
    let mut link = LinearExpr::term(t, k);
    for u in utilities {
        link.add_scaled(u, -1.0);
    }
    let link = program.add_equality(link)?;
    let cone = program.add_soc(t.into(), utilities.to_vec())?;
    Ok(FairnessConstraint {
        epigraph: t,
        link,
        cone,
    })
}

/// Alpha-fair utility: `sum u^(1-alpha) / (1-alpha)`, or `sum log u` at
/// `alpha = 1`.
pub fn alpha_utility(u: &[f64], alpha: f64) -> Result<f64, FairnessError> {
    check_utilities(u)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(FairnessError::InvalidAlpha(alpha));
    }
    if alpha >= 1.0 {
        if let Some(index) = u.iter().position(|&x| x == 0.0) {
            return Err(FairnessError::ZeroUtility { alpha, index });
        }
    }
    if alpha == 1.0 {
        return Ok(u.iter().map(|x| x.ln()).sum());
    }
    let e = 1.0 - alpha;
    Ok(u.iter().map(|x| x.powf(e)).sum::<f64>() / e)
}

/// `-|u|_p`; `p = f64::INFINITY` gives `-max u`.
pub fn p_norm_utility(u: &[f64], p: f64) -> Result<f64, FairnessError> {
    check_utilities(u)?;
    if !(p >= 1.0) {
        return Err(FairnessError::InvalidP(p));
    }
    if p == f64::INFINITY {
        return Ok(-u.iter().copied().fold(0.0, f64::max));
    }
    Ok(-u.iter().map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p))
}

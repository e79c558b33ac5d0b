//! Homogeneous self-dual interior-point solver for LP + SOC problems in
//! [`StandardConicForm`].
//!
//! Internally the problem `min c'x, Ax = b, x in K` is rewritten as
//! `min c'x, A_hat x + s = b_hat, s in K_hat` with every column free: the
//! equality rows of `A` become a zero cone, and each non-free column block
//! gets a row block `-x + s = 0` with `s` in the block's cone. Free columns
//! therefore enter the KKT system directly, regularized on the diagonal.
//!
//! Each iteration solves the Newton system of the homogeneous embedding
//! with Nesterov-Todd scaling and a Mehrotra predictor-corrector step.
//! Termination is decided on the original standard form: primal, dual and
//! gap residuals for optimality, or a certificate that passes the
//! standalone verifier in [`certificate`] for infeasibility.

pub mod certificate;
mod cones;
mod kkt;
pub mod ldl;

use std::fmt;

use crate::conic::{ConeBlock, StandardConicForm};
use crate::sparse::CscMatrix;

use certificate::{verify_dual_infeasibility, verify_primal_infeasibility};
use cones::{Cone, ConeSet};
use kkt::KktSystem;

const STEP_FRACTION: f64 = 0.99;
const MIN_STEP: f64 = 1e-10;
const MAX_SHORT_STEPS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub tol_infeas: f64,
    pub max_iter: usize,
    pub static_reg: f64,
    /// Emit one `log::info!` line per iteration.
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            tol_infeas: 1e-8,
            max_iter: 200,
            static_reg: 1e-8,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("malformed problem: {0}")]
    Malformed(String),
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        for (name, v) in [
            ("tol_feas", self.tol_feas),
            ("tol_gap", self.tol_gap),
            ("tol_infeas", self.tol_infeas),
            ("static_reg", self.static_reg),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SolverError::InvalidSettings(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(SolverError::InvalidSettings("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    NumericalFailure,
}

impl Status {
    /// Iteration limits and numerical failures carry no information about
    /// feasibility.
    pub fn is_unknown(self) -> bool {
        matches!(self, Status::IterationLimit | Status::NumericalFailure)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::PrimalInfeasible => "primal_infeasible",
            Status::DualInfeasible => "dual_infeasible",
            Status::IterationLimit => "iteration_limit",
            Status::NumericalFailure => "numerical_failure",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Status {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "optimal" => Status::Optimal,
            "primal_infeasible" => Status::PrimalInfeasible,
            "dual_infeasible" => Status::DualInfeasible,
            "iteration_limit" => Status::IterationLimit,
            "numerical_failure" => Status::NumericalFailure,
            other => return Err(format!("unknown status {other:?}")),
        })
    }
}

/// Relative residuals measured on the standard form.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Residuals {
    /// `|Ax - b|_inf / (1 + |b|_inf)`
    pub primal: f64,
    /// `|c - A'y - s|_inf / (1 + |c|_inf)`
    pub dual: f64,
    /// `|c'x - b'y| / max(1, min(|c'x|, |b'y|))`
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// `-A'y in K*`, `b'y > 0`
    PrimalInfeasible { y: Vec<f64> },
    /// `x in K`, `Ax = 0`, `c'x < 0`
    DualInfeasible { x: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// Primal point, one entry per standard-form column.
    pub x: Vec<f64>,
    /// Multipliers of `Ax = b`.
    pub y: Vec<f64>,
    /// Dual slack in `K*`, one entry per column.
    pub s: Vec<f64>,
    /// `c'x + offset` in the minimization sense of the standard form.
    pub objective: f64,
    pub residuals: Residuals,
    pub certificate: Option<Certificate>,
    pub iterations: usize,
}

/// The internal free-column form `A_hat x + s = b_hat, s in K_hat`.
struct Embedded {
    a: CscMatrix,
    b: Vec<f64>,
    c: Vec<f64>,
    cones: ConeSet,
    /// internal column -> form column
    cols: Vec<usize>,
    /// internal equality row -> form row
    rows: Vec<usize>,
    /// form column -> internal cone row, for non-free columns
    cone_row_of_col: Vec<Option<usize>>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn check_form(form: &StandardConicForm) -> Result<(), SolverError> {
    let (m, n) = (form.a.nrows, form.a.ncols);
    if form.b.len() != m {
        return Err(SolverError::Malformed(format!("b has {} entries, A has {m} rows", form.b.len())));
    }
    if form.c.len() != n {
        return Err(SolverError::Malformed(format!("c has {} entries, A has {n} columns", form.c.len())));
    }
    let total: usize = form.cones.iter().map(|c| c.dim()).sum();
    if total != n {
        return Err(SolverError::Malformed(format!("cone dimensions sum to {total}, A has {n} columns")));
    }
    if form.cones.iter().any(|c| c.dim() == 0) {
        return Err(SolverError::Malformed("empty cone block".into()));
    }
    if form.a.nzval.iter().chain(&form.b).chain(&form.c).any(|v| !v.is_finite()) {
        return Err(SolverError::Malformed("non-finite data".into()));
    }
    Ok(())
}

enum Presolved {
    Embedded(Embedded),
    Done(Solution),
}

fn finish(form: &StandardConicForm, status: Status, x: Vec<f64>, y: Vec<f64>, s: Vec<f64>, certificate: Option<Certificate>, iterations: usize) -> Solution {
    let residuals = measure(form, &x, &y, &s);
    Solution {
        status,
        objective: form.objective_value(&x),
        x,
        y,
        s,
        residuals,
        certificate,
        iterations,
    }
}

fn measure(form: &StandardConicForm, x: &[f64], y: &[f64], s: &[f64]) -> Residuals {
    let mut ax = form.a.mul_vec(x);
    ax.iter_mut().zip(&form.b).for_each(|(r, b)| *r -= b);
    let mut rd = form.c.clone();
    form.a.gemv_t(-1.0, y, &mut rd);
    rd.iter_mut().zip(s).for_each(|(r, s)| *r -= s);
    let pobj = dot(&form.c, x);
    let dobj = dot(&form.b, y);
    Residuals {
        primal: inf_norm(&ax) / (1.0 + inf_norm(&form.b)),
        dual: inf_norm(&rd) / (1.0 + inf_norm(&form.c)),
        gap: (pobj - dobj).abs() / pobj.abs().min(dobj.abs()).max(1.0),
    }
}

/// Removes empty rows and empty free columns, then builds the internal form.
fn presolve(form: &StandardConicForm, settings: &SolverSettings) -> Presolved {
    let (m, n) = (form.a.nrows, form.a.ncols);
    let row_counts = form.a.row_counts();
    let bnorm = inf_norm(&form.b);
    for i in 0..m {
        if row_counts[i] == 0 && form.b[i].abs() > settings.tol_feas * (1.0 + bnorm) {
            // 0 = b_i is impossible; e_i * sign(b_i) is a Farkas vector
            let mut y = vec![0.0; m];
            y[i] = form.b[i].signum();
            let check = verify_primal_infeasibility(form, &y, settings.tol_infeas);
            if check.valid {
                return Presolved::Done(finish(
                    form,
                    Status::PrimalInfeasible,
                    vec![0.0; n],
                    vec![0.0; m],
                    vec![0.0; n],
                    Some(Certificate::PrimalInfeasible { y }),
                    0,
                ));
            }
        }
    }
    let rows: Vec<usize> = (0..m).filter(|&i| row_counts[i] > 0).collect();

    let mut is_free = vec![false; n];
    for (block, range) in form.cone_ranges() {
        if let ConeBlock::Free(_) = block {
            range.for_each(|j| is_free[j] = true);
        }
    }
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let empty = form.a.colptr[j] == form.a.colptr[j + 1];
        if is_free[j] && empty {
            if form.c[j] != 0.0 {
                let mut x = vec![0.0; n];
                x[j] = -form.c[j].signum();
                if verify_dual_infeasibility(form, &x, settings.tol_infeas).valid {
                    return Presolved::Done(finish(
                        form,
                        Status::DualInfeasible,
                        vec![0.0; n],
                        vec![0.0; m],
                        vec![0.0; n],
                        Some(Certificate::DualInfeasible { x }),
                        0,
                    ));
                }
            }
            continue;
        }
        cols.push(j);
    }

    let mut internal_col = vec![usize::MAX; n];
    for (k, &j) in cols.iter().enumerate() {
        internal_col[j] = k;
    }
    let mut internal_row = vec![usize::MAX; m];
    for (k, &i) in rows.iter().enumerate() {
        internal_row[i] = k;
    }
    let m_eq = rows.len();

    let mut triplets = Vec::with_capacity(form.a.nnz() + n);
    for &j in &cols {
        for (i, v) in form.a.col(j) {
            triplets.push((internal_row[i], internal_col[j], v));
        }
    }
    let mut cone_list = Vec::new();
    if m_eq > 0 {
        cone_list.push(Cone::Zero(0..m_eq));
    }
    let mut cone_row_of_col = vec![None; n];
    let mut next_row = m_eq;
    for (block, range) in form.cone_ranges() {
        let dim = range.len();
        let rows_range = next_row..next_row + dim;
        match block {
            ConeBlock::Free(_) => continue,
            ConeBlock::Nonnegative(_) => cone_list.push(Cone::Nonneg(rows_range.clone())),
            ConeBlock::SecondOrder(_) => cone_list.push(Cone::Soc(rows_range.clone())),
        }
        for (j, r) in range.zip(rows_range) {
            triplets.push((r, internal_col[j], -1.0));
            cone_row_of_col[j] = Some(r);
        }
        next_row += dim;
    }
    let mhat = next_row;
    let a = CscMatrix::from_triplets(mhat, cols.len(), &triplets);
    let mut b = vec![0.0; mhat];
    for (k, &i) in rows.iter().enumerate() {
        b[k] = form.b[i];
    }
    let c = cols.iter().map(|&j| form.c[j]).collect();
    Presolved::Embedded(Embedded {
        a,
        b,
        c,
        cones: ConeSet::new(cone_list),
        cols,
        rows,
        cone_row_of_col,
    })
}

/// Solves a standard-form problem.
pub fn solve(form: &StandardConicForm, settings: &SolverSettings) -> Result<Solution, SolverError> {
    settings.validate()?;
    check_form(form)?;
    match presolve(form, settings) {
        Presolved::Done(sol) => Ok(sol),
        Presolved::Embedded(emb) => Ok(Hsd::new(form, emb, settings).run()),
    }
}

struct Hsd<'a> {
    form: &'a StandardConicForm,
    emb: Embedded,
    settings: &'a SolverSettings,
    n: usize,
    m: usize,
    x: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

/// Search direction in the embedding.
struct Direction {
    x: Vec<f64>,
    s: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

impl Direction {
    fn zeros(n: usize, m: usize) -> Self {
        Direction {
            x: vec![0.0; n],
            s: vec![0.0; m],
            z: vec![0.0; m],
            tau: 0.0,
            kappa: 0.0,
        }
    }
}

impl<'a> Hsd<'a> {
    fn new(form: &'a StandardConicForm, emb: Embedded, settings: &'a SolverSettings) -> Self {
        let (m, n) = (emb.a.nrows, emb.a.ncols);
        Hsd {
            form,
            emb,
            settings,
            n,
            m,
            x: vec![0.0; n],
            s: vec![0.0; m],
            z: vec![0.0; m],
            tau: 1.0,
            kappa: 1.0,
        }
    }

    /// Standard-form primal/dual point from the current iterate, scaled by
    /// `1/scale`.
    fn form_point(&self, scale: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let form = self.form;
        let (m, n) = (form.a.nrows, form.a.ncols);
        let mut x = vec![0.0; n];
        let mut sd = vec![0.0; n];
        for (k, &j) in self.emb.cols.iter().enumerate() {
            match self.emb.cone_row_of_col[j] {
                Some(r) => {
                    x[j] = self.s[r] / scale;
                    sd[j] = self.z[r] / scale;
                }
                None => x[j] = self.x[k] / scale,
            }
        }
        let mut y = vec![0.0; m];
        for (k, &i) in self.emb.rows.iter().enumerate() {
            y[i] = -self.z[k] / scale;
        }
        (x, y, sd)
    }

    fn solution(&self, status: Status, certificate: Option<Certificate>, iterations: usize) -> Solution {
        let (x, y, s) = self.form_point(self.tau.max(f64::MIN_POSITIVE));
        finish(self.form, status, x, y, s, certificate, iterations)
    }

    fn fail(&self, reason: &str, iterations: usize) -> Solution {
        log::debug!("numerical failure at iteration {iterations}: {reason}");
        self.solution(Status::NumericalFailure, None, iterations)
    }

    /// Certificate candidates from the current iterate, accepted only if
    /// the standalone verifier agrees.
    fn infeasibility(&self, bz: f64, cx: f64, iter: usize) -> Option<Solution> {
        let tol = self.settings.tol_infeas;
        if bz < 0.0 {
            let (_, y, _) = self.form_point(1.0);
            if verify_primal_infeasibility(self.form, &y, tol).valid {
                let scale = inf_norm(&y);
                let y = y.iter().map(|v| v / scale).collect();
                let mut out = self.solution(Status::PrimalInfeasible, None, iter);
                out.certificate = Some(Certificate::PrimalInfeasible { y });
                return Some(out);
            }
        }
        if cx < 0.0 {
            let (x, _, _) = self.form_point(1.0);
            if verify_dual_infeasibility(self.form, &x, tol).valid {
                let scale = inf_norm(&x);
                let x = x.iter().map(|v| v / scale).collect();
                let mut out = self.solution(Status::DualInfeasible, None, iter);
                out.certificate = Some(Certificate::DualInfeasible { x });
                return Some(out);
            }
        }
        None
    }

    fn initialize(&mut self, kkt: &mut KktSystem) -> bool {
        let (n, m) = (self.n, self.m);
        if kkt.factor_identity(&self.emb.cones).is_err() {
            return false;
        }
        let mut rhs = vec![0.0; n + m];
        let mut sol = vec![0.0; n + m];
        // primal: min |s| s.t. A x + s = b
        rhs[n..].copy_from_slice(&self.emb.b);
        kkt.solve(&rhs, &mut sol);
        self.x.copy_from_slice(&sol[..n]);
        for i in 0..m {
            self.s[i] = -sol[n + i];
        }
        self.emb.cones.shift_to_interior(&mut self.s, Some(0.0));
        // dual: min |z| s.t. A'z + c = 0
        rhs[..n].iter_mut().zip(&self.emb.c).for_each(|(r, c)| *r = -c);
        rhs[n..].iter_mut().for_each(|r| *r = 0.0);
        kkt.solve(&rhs, &mut sol);
        self.z.copy_from_slice(&sol[n..]);
        self.emb.cones.shift_to_interior(&mut self.z, None);
        self.tau = 1.0;
        self.kappa = 1.0;
        self.x.iter().chain(&self.s).chain(&self.z).all(|v| v.is_finite())
    }

    fn run(mut self) -> Solution {
        let settings = self.settings;
        let (n, m) = (self.n, self.m);
        let mut kkt = match KktSystem::new(&self.emb.a, &self.emb.cones, settings.static_reg) {
            Ok(k) => k,
            Err(_) => return self.fail("kkt symbolic analysis failed", 0),
        };
        if !self.initialize(&mut kkt) {
            return self.fail("initial point", 0);
        }
        let degree = self.emb.cones.degree() as f64;
        let a = self.emb.a.clone();
        let b = self.emb.b.clone();
        let c = self.emb.c.clone();

        let mut rx = vec![0.0; n];
        let mut rz = vec![0.0; m];
        let mut lambda = vec![0.0; m];
        let mut rhs = vec![0.0; n + m];
        let mut sol1 = vec![0.0; n + m];
        let mut sol2 = vec![0.0; n + m];
        let mut ds = vec![0.0; m];
        let mut work = vec![0.0; m];
        let mut work2 = vec![0.0; m];
        let mut dir = Direction::zeros(n, m);
        let mut short_steps = 0;

        for iter in 0..=settings.max_iter {
            // residuals of the embedding
            rx.iter_mut().zip(&c).for_each(|(r, c)| *r = c * self.tau);
            a.gemv_t(1.0, &self.z, &mut rx);
            rz.iter_mut()
                .zip(self.s.iter().zip(&b))
                .for_each(|(r, (s, b))| *r = s - b * self.tau);
            a.gemv(1.0, &self.x, &mut rz);
            let cx = dot(&c, &self.x);
            let bz = dot(&b, &self.z);
            let rtau = self.kappa + cx + bz;
            let mu = (dot(&self.s, &self.z) + self.tau * self.kappa) / (degree + 1.0);

            // optimality on the standard form
            let (xf, yf, sf) = self.form_point(self.tau);
            let res = measure(self.form, &xf, &yf, &sf);
            if settings.verbose {
                // relative Farkas residual of -z
                let pinf = inf_norm(&a.tmul_vec(&self.z)) / (-bz).max(f64::MIN_POSITIVE);
                log::info!(
                    "iter {iter:3} pobj {:+.6e} pres {:.2e} dres {:.2e} gap {:.2e} pinf {pinf:.2e} tau {:.2e} kappa {:.2e} mu {:.2e}",
                    self.form.objective_value(&xf),
                    res.primal,
                    res.dual,
                    res.gap,
                    self.tau,
                    self.kappa,
                    mu
                );
            }
            if res.primal <= settings.tol_feas && res.dual <= settings.tol_feas && res.gap <= settings.tol_gap {
                return finish(self.form, Status::Optimal, xf, yf, sf, None, iter);
            }

            // infeasibility: tau/kappa test, then the standalone verifier
            if self.tau < self.kappa {
                if let Some(out) = self.infeasibility(bz, cx, iter) {
                    return out;
                }
            }
            if iter == settings.max_iter {
                break;
            }

            // scaling and factorization
            if !self.emb.cones.update_scaling(&self.s, &self.z) {
                return self.fail("scaling update left the cone", iter);
            }
            self.emb.cones.mul_w(&self.z, &mut lambda);
            if kkt.factor(&self.emb.cones).is_err() {
                return self.fail("factorization failed", iter);
            }

            // constant part: K [x1; z1] = [-c; b]
            rhs[..n].iter_mut().zip(&c).for_each(|(r, c)| *r = -c);
            rhs[n..].copy_from_slice(&b);
            kkt.solve(&rhs, &mut sol1);
            let denom_base = -dot(&c, &sol1[..n]) - dot(&b, &sol1[n..]);

            // predictor
            self.emb.cones.jordan_prod(&lambda, &lambda, &mut ds);
            let dkappa_aff = self.tau * self.kappa;
            self.direction(
                &mut kkt, &rx, &rz, rtau, &ds, dkappa_aff, 1.0, &lambda, &sol1, denom_base, &mut rhs, &mut sol2,
                &mut work, &mut dir,
            );
            let alpha_aff = self.step_length(&dir, 1.0);
            let sigma = (1.0 - alpha_aff).powi(3);

            // corrector: ds = lambda o lambda + (W^-1 ds_a) o (W dz_a) - sigma mu e
            self.emb.cones.mul_w_inv(&dir.s, &mut work);
            self.emb.cones.mul_w(&dir.z, &mut work2);
            let mut cross = vec![0.0; m];
            self.emb.cones.jordan_prod(&work, &work2, &mut cross);
            for i in 0..m {
                ds[i] += cross[i];
            }
            self.emb.cones.add_identity(&mut ds, -sigma * mu);
            let dkappa = self.tau * self.kappa + dir.tau * dir.kappa - sigma * mu;
            self.direction(
                &mut kkt,
                &rx,
                &rz,
                rtau,
                &ds,
                dkappa,
                1.0 - sigma,
                &lambda,
                &sol1,
                denom_base,
                &mut rhs,
                &mut sol2,
                &mut work,
                &mut dir,
            );
            let alpha = (STEP_FRACTION * self.step_length(&dir, 1.0 / STEP_FRACTION)).min(1.0);
            if !alpha.is_finite() || dir.x.iter().chain(&dir.z).any(|v| !v.is_finite()) {
                return self.fail("non-finite step", iter);
            }
            if alpha < MIN_STEP {
                short_steps += 1;
                if short_steps >= MAX_SHORT_STEPS {
                    return self.fail("step length stalled", iter);
                }
            } else {
                short_steps = 0;
            }

            self.x.iter_mut().zip(&dir.x).for_each(|(v, d)| *v += alpha * d);
            self.s.iter_mut().zip(&dir.s).for_each(|(v, d)| *v += alpha * d);
            self.z.iter_mut().zip(&dir.z).for_each(|(v, d)| *v += alpha * d);
            self.tau += alpha * dir.tau;
            self.kappa += alpha * dir.kappa;

            // keep the embedding bounded: tau and kappa cannot both vanish
            let scale = self.tau.max(self.kappa);
            if !(scale > 0.0) || !scale.is_finite() {
                return self.fail("embedding collapsed", iter);
            }
        }
        self.solution(Status::IterationLimit, None, settings.max_iter)
    }

    /// Solves the Newton system for the right-hand side
    /// `(-resid_scale rx, -resid_scale rz, resid_scale rtau, ds, dkappa)`.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        kkt: &mut KktSystem,
        rx: &[f64],
        rz: &[f64],
        rtau: f64,
        ds: &[f64],
        dkappa: f64,
        resid_scale: f64,
        lambda: &[f64],
        sol1: &[f64],
        denom_base: f64,
        rhs: &mut [f64],
        sol2: &mut [f64],
        work: &mut [f64],
        dir: &mut Direction,
    ) {
        let (n, m) = (self.n, self.m);
        let cones = &self.emb.cones;
        // work = W (lambda \ ds)
        let mut tmp = vec![0.0; m];
        cones.jordan_div(lambda, ds, &mut tmp);
        cones.mul_w(&tmp, work);
        for j in 0..n {
            rhs[j] = -resid_scale * rx[j];
        }
        for i in 0..m {
            rhs[n + i] = -resid_scale * rz[i] + work[i];
        }
        kkt.solve(rhs, sol2);

        let dtau_num = resid_scale * rtau - dkappa / self.tau + dot(&self.emb.c, &sol2[..n]) + dot(&self.emb.b, &sol2[n..]);
        let dtau = dtau_num / (self.kappa / self.tau + denom_base);
        for j in 0..n {
            dir.x[j] = sol2[j] + dtau * sol1[j];
        }
        for i in 0..m {
            dir.z[i] = sol2[n + i] + dtau * sol1[n + i];
        }
        // ds = -W (lambda \ ds + W dz); zero cones keep s = 0
        let mut wdz = vec![0.0; m];
        cones.mul_w(&dir.z, &mut wdz);
        cones.jordan_div(lambda, ds, &mut tmp);
        for i in 0..m {
            tmp[i] = -(tmp[i] + wdz[i]);
        }
        cones.mul_w(&tmp, &mut dir.s);
        dir.tau = dtau;
        dir.kappa = (-dkappa - self.kappa * dtau) / self.tau;
    }

    fn step_length(&self, dir: &Direction, alpha_max: f64) -> f64 {
        let cones = &self.emb.cones;
        let mut alpha = cones.step_length(&self.s, &dir.s, alpha_max);
        alpha = alpha.min(cones.step_length(&self.z, &dir.z, alpha_max));
        if dir.tau < 0.0 {
            alpha = alpha.min(-self.tau / dir.tau);
        }
        if dir.kappa < 0.0 {
            alpha = alpha.min(-self.kappa / dir.kappa);
        }
        alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{ConicProgram, LinearExpr, Sense};

    fn solve_program(p: &ConicProgram) -> (Solution, Vec<f64>) {
        let f = p.to_standard_form();
        let sol = solve(&f, &SolverSettings::default()).unwrap();
        let vals = f.recover(&sol.x);
        (sol, vals)
    }

    #[test]
    fn lp_lower_bound() {
        let mut p = ConicProgram::new();
        let x = p.add_free_variable();
        p.add_ge(x.into(), LinearExpr::constant(3.0)).unwrap();
        p.set_objective(Sense::Minimize, x.into()).unwrap();
        let (sol, vals) = solve_program(&p);
        assert_eq!(sol.status, Status::Optimal);
        assert!((vals[0] - 3.0).abs() < 1e-7, "{vals:?}");
    }

    #[test]
    fn soc_norm_of_ones() {
        let mut p = ConicProgram::new();
        let x = p.add_free_variable();
        p.add_soc(x.into(), vec![LinearExpr::constant(1.0), LinearExpr::constant(1.0)])
            .unwrap();
        p.set_objective(Sense::Minimize, x.into()).unwrap();
        let (sol, vals) = solve_program(&p);
        assert_eq!(sol.status, Status::Optimal);
        assert!((vals[0] - 2f64.sqrt()).abs() < 1e-7, "{vals:?}");
    }

    #[test]
    fn contradictory_bounds_are_certified() {
        let mut p = ConicProgram::new();
        let x = p.add_free_variable();
        p.add_ge(x.into(), LinearExpr::constant(1.0)).unwrap();
        p.add_le(x.into(), LinearExpr::constant(0.0)).unwrap();
        p.set_objective(Sense::Minimize, x.into()).unwrap();
        let f = p.to_standard_form();
        let sol = solve(&f, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, Status::PrimalInfeasible);
        let Some(Certificate::PrimalInfeasible { y }) = &sol.certificate else {
            panic!("missing certificate");
        };
        assert!(verify_primal_infeasibility(&f, y, 1e-8).valid);
    }

    #[test]
    fn unbounded_is_dual_infeasible() {
        let mut p = ConicProgram::new();
        let x = p.add_variable(0.0, f64::INFINITY).unwrap();
        let y = p.add_variable(0.0, 1.0).unwrap();
        p.add_le(LinearExpr::var(y) - LinearExpr::var(x), LinearExpr::constant(0.0))
            .unwrap();
        p.set_objective(Sense::Maximize, x.into()).unwrap();
        let f = p.to_standard_form();
        let sol = solve(&f, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, Status::DualInfeasible);
        let Some(Certificate::DualInfeasible { x }) = &sol.certificate else {
            panic!("missing ray");
        };
        assert!(verify_dual_infeasibility(&f, x, 1e-8).valid);
    }

    #[test]
    fn empty_row_with_nonzero_rhs() {
        let mut p = ConicProgram::new();
        let x = p.add_free_variable();
        let mut e = LinearExpr::constant(1.0);
        e.add_term(x, 0.0);
        p.add_equality(e).unwrap();
        p.set_objective(Sense::Minimize, x.into()).unwrap();
        let f = p.to_standard_form();
        let sol = solve(&f, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, Status::PrimalInfeasible);
    }

    #[test]
    fn maximization_reports_original_sense() {
        // max x + y  s.t. x + 2y <= 4, x, y in [0, 3]
        let mut p = ConicProgram::new();
        let x = p.add_variable(0.0, 3.0).unwrap();
        let y = p.add_variable(0.0, 3.0).unwrap();
        let mut lhs = LinearExpr::var(x);
        lhs.add_term(y, 2.0);
        p.add_le(lhs, LinearExpr::constant(4.0)).unwrap();
        p.set_objective(Sense::Maximize, LinearExpr::sum_of([x, y])).unwrap();
        let f = p.to_standard_form();
        let sol = solve(&f, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!((f.original_objective(sol.objective) - 3.5).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_settings() {
        let settings = SolverSettings {
            tol_feas: 0.0,
            ..Default::default()
        };
        let f = ConicProgram::new().to_standard_form();
        assert!(matches!(solve(&f, &settings), Err(SolverError::InvalidSettings(_))));
        let settings = SolverSettings {
            max_iter: 0,
            ..Default::default()
        };
        assert!(solve(&f, &settings).is_err());
    }
}

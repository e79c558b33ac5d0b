//! Cone arithmetic for the interior-point iterations: Nesterov-Todd scaling,
//! Jordan products, step-length computation.
//!
//! The solver works on a product of zero cones (equality rows), nonnegative
//! orthants and second-order cones. For a second-order cone the scaling
//! matrix is
//!
//! ```text
//! W = eta * [ w0   w1'                  ]
//!           [ w1   I + w1 w1' / (1 + w0) ]
//! ```
//!
//! with `w0^2 - |w1|^2 = 1`, so that `W z = W^-1 s = lambda` and
//! `W^2 = eta^2 (2 w w' - J)`.

use std::ops::Range;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Cone {
    Zero(Range<usize>),
    Nonneg(Range<usize>),
    Soc(Range<usize>),
}

impl Cone {
    pub fn degree(&self) -> usize {
        match self {
            Cone::Zero(_) => 0,
            Cone::Nonneg(r) => r.len(),
            Cone::Soc(_) => 1,
        }
    }
}

#[derive(Debug, Clone)]
enum Scaling {
    None,
    /// `W = diag(w)`, `w = sqrt(s / z)`
    Diag(Vec<f64>),
    Nt { eta: f64, w: Vec<f64> },
}

/// A product cone together with the current Nesterov-Todd scaling.
#[derive(Debug, Clone)]
pub(crate) struct ConeSet {
    pub cones: Vec<Cone>,
    scalings: Vec<Scaling>,
}

/// `u0 v0 - u1'v1`
fn jdot(u: &[f64], v: &[f64]) -> f64 {
    u[0] * v[0] - u[1..].iter().zip(&v[1..]).map(|(a, b)| a * b).sum::<f64>()
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

impl ConeSet {
    pub fn new(cones: Vec<Cone>) -> Self {
        let scalings = cones
            .iter()
            .map(|c| match c {
                Cone::Zero(_) => Scaling::None,
                Cone::Nonneg(r) => Scaling::Diag(vec![1.0; r.len()]),
                Cone::Soc(r) => {
                    let mut w = vec![0.0; r.len()];
                    w[0] = 1.0;
                    Scaling::Nt { eta: 1.0, w }
                }
            })
            .collect();
        ConeSet { cones, scalings }
    }

    pub fn degree(&self) -> usize {
        self.cones.iter().map(Cone::degree).sum()
    }

    /// Smallest "eigenvalue" of `v` in each non-zero cone, minimized.
    #[cfg(test)]
    pub fn min_margin(&self, v: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        for c in &self.cones {
            match c {
                Cone::Zero(_) => {}
                Cone::Nonneg(r) => {
                    for &x in &v[r.clone()] {
                        m = m.min(x);
                    }
                }
                Cone::Soc(r) => {
                    let u = &v[r.clone()];
                    m = m.min(u[0] - u[1..].iter().map(|x| x * x).sum::<f64>().sqrt());
                }
            }
        }
        m
    }

    /// Moves `v` into the interior: each non-zero cone whose margin is below
    /// `threshold` is shifted along its identity element so its margin
    /// becomes one plus the deficit.
    pub fn shift_to_interior(&self, v: &mut [f64], zero_value: Option<f64>) {
        const THRESHOLD: f64 = 1e-8;
        for c in &self.cones {
            match c {
                Cone::Zero(r) => {
                    if let Some(z) = zero_value {
                        v[r.clone()].iter_mut().for_each(|x| *x = z);
                    }
                }
                Cone::Nonneg(r) => {
                    let m = v[r.clone()].iter().copied().fold(f64::INFINITY, f64::min);
                    if m < THRESHOLD {
                        v[r.clone()].iter_mut().for_each(|x| *x += 1.0 - m);
                    }
                }
                Cone::Soc(r) => {
                    let u = &v[r.clone()];
                    let m = u[0] - u[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
                    if m < THRESHOLD {
                        v[r.start] += 1.0 - m;
                    }
                }
            }
        }
    }

    /// Recomputes the scaling for the interior pair `(s, z)`. Returns false
    /// if either point has left the interior.
    pub fn update_scaling(&mut self, s: &[f64], z: &[f64]) -> bool {
        for (c, sc) in self.cones.iter().zip(self.scalings.iter_mut()) {
            match (c, sc) {
                (Cone::Zero(_), _) => {}
                (Cone::Nonneg(r), Scaling::Diag(w)) => {
                    for (k, i) in r.clone().enumerate() {
                        if !(s[i] > 0.0 && z[i] > 0.0) {
                            return false;
                        }
                        w[k] = (s[i] / z[i]).sqrt();
                    }
                }
                (Cone::Soc(r), Scaling::Nt { eta, w }) => {
                    let sv = &s[r.clone()];
                    let zv = &z[r.clone()];
                    let js = jdot(sv, sv);
                    let jz = jdot(zv, zv);
                    if !(js > 0.0 && jz > 0.0 && sv[0] > 0.0 && zv[0] > 0.0) {
                        return false;
                    }
                    let ns = js.sqrt();
                    let nz = jz.sqrt();
                    let sz: f64 = sv.iter().zip(zv).map(|(a, b)| a * b).sum::<f64>() / (ns * nz);
                    let gamma = ((1.0 + sz) / 2.0).sqrt();
                    w[0] = (sv[0] / ns + zv[0] / nz) / (2.0 * gamma);
                    for k in 1..sv.len() {
                        w[k] = (sv[k] / ns - zv[k] / nz) / (2.0 * gamma);
                    }
                    // renormalize so that w0^2 - |w1|^2 = 1 holds to rounding
                    let norm1 = w[1..].iter().map(|x| x * x).sum::<f64>();
                    w[0] = (1.0 + norm1).sqrt();
                    *eta = (js / jz).sqrt().sqrt();
                }
                _ => unreachable!("scaling kind mismatch"),
            }
        }
        true
    }

    /// `out = W v`
    pub fn mul_w(&self, v: &[f64], out: &mut [f64]) {
        self.apply_w(v, out, false);
    }

    /// `out = W^-1 v`
    pub fn mul_w_inv(&self, v: &[f64], out: &mut [f64]) {
        self.apply_w(v, out, true);
    }

    fn apply_w(&self, v: &[f64], out: &mut [f64], inverse: bool) {
        for (c, sc) in self.cones.iter().zip(&self.scalings) {
            match (c, sc) {
                (Cone::Zero(r), _) => out[r.clone()].iter_mut().for_each(|x| *x = 0.0),
                (Cone::Nonneg(r), Scaling::Diag(w)) => {
                    for (k, i) in r.clone().enumerate() {
                        out[i] = if inverse { v[i] / w[k] } else { v[i] * w[k] };
                    }
                }
                (Cone::Soc(r), Scaling::Nt { eta, w }) => {
                    let x = &v[r.clone()];
                    let o = &mut out[r.clone()];
                    let sign = if inverse { -1.0 } else { 1.0 };
                    let scale = if inverse { 1.0 / eta } else { *eta };
                    let w1x1 = dot(&w[1..], &x[1..]);
                    let coef = w1x1 / (1.0 + w[0]) + sign * x[0];
                    o[0] = scale * (w[0] * x[0] + sign * w1x1);
                    for k in 1..x.len() {
                        o[k] = scale * (x[k] + coef * w[k]);
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    /// Visits the entries of `W^2` (the (2,2) block of the KKT system, up to
    /// sign) as `(row, col, value)` with `row <= col`, in a fixed order that
    /// matches [`ConeSet::hessian_pattern`].
    pub fn hessian_values(&self, out: &mut Vec<f64>) {
        out.clear();
        for (c, sc) in self.cones.iter().zip(&self.scalings) {
            match (c, sc) {
                (Cone::Zero(r), _) => out.extend(std::iter::repeat(0.0).take(r.len())),
                (Cone::Nonneg(_), Scaling::Diag(w)) => out.extend(w.iter().map(|x| x * x)),
                (Cone::Soc(r), Scaling::Nt { eta, w }) => {
                    let e2 = eta * eta;
                    for b in 0..r.len() {
                        for a in 0..=b {
                            let j = if a == b {
                                if a == 0 {
                                    1.0
                                } else {
                                    -1.0
                                }
                            } else {
                                0.0
                            };
                            out.push(e2 * (2.0 * w[a] * w[b] - j));
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    /// Positions `(row, col)`, `row <= col`, of the scaling block entries,
    /// relative to the start of the cone variables.
    pub fn hessian_pattern(&self) -> Vec<(usize, usize)> {
        let mut p = Vec::new();
        for c in &self.cones {
            match c {
                Cone::Zero(r) | Cone::Nonneg(r) => p.extend(r.clone().map(|i| (i, i))),
                Cone::Soc(r) => {
                    for b in r.clone() {
                        for a in r.start..=b {
                            p.push((a, b));
                        }
                    }
                }
            }
        }
        p
    }

    /// Same layout as [`ConeSet::hessian_pattern`], for the identity scaling.
    pub fn identity_hessian_values(&self, out: &mut Vec<f64>) {
        out.clear();
        for c in &self.cones {
            match c {
                Cone::Zero(r) => out.extend(std::iter::repeat(0.0).take(r.len())),
                Cone::Nonneg(r) => out.extend(std::iter::repeat(1.0).take(r.len())),
                Cone::Soc(r) => {
                    for b in 0..r.len() {
                        for a in 0..=b {
                            out.push(if a == b { 1.0 } else { 0.0 });
                        }
                    }
                }
            }
        }
    }

    /// Jordan product `out = u o v`.
    pub fn jordan_prod(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        for c in &self.cones {
            match c {
                Cone::Zero(r) => out[r.clone()].iter_mut().for_each(|x| *x = 0.0),
                Cone::Nonneg(r) => {
                    for i in r.clone() {
                        out[i] = u[i] * v[i];
                    }
                }
                Cone::Soc(r) => {
                    let (u, v) = (&u[r.clone()], &v[r.clone()]);
                    let o = &mut out[r.clone()];
                    o[0] = dot(u, v);
                    for k in 1..u.len() {
                        o[k] = u[0] * v[k] + v[0] * u[k];
                    }
                }
            }
        }
    }

    /// Solves `lambda o out = v` for `out`.
    pub fn jordan_div(&self, lambda: &[f64], v: &[f64], out: &mut [f64]) {
        for c in &self.cones {
            match c {
                Cone::Zero(r) => out[r.clone()].iter_mut().for_each(|x| *x = 0.0),
                Cone::Nonneg(r) => {
                    for i in r.clone() {
                        out[i] = v[i] / lambda[i];
                    }
                }
                Cone::Soc(r) => {
                    let (l, v) = (&lambda[r.clone()], &v[r.clone()]);
                    let o = &mut out[r.clone()];
                    let det = jdot(l, l);
                    let l1v1 = dot(&l[1..], &v[1..]);
                    o[0] = (l[0] * v[0] - l1v1) / det;
                    for k in 1..l.len() {
                        o[k] = (v[k] - o[0] * l[k]) / l[0];
                    }
                }
            }
        }
    }

    /// `v += alpha * e` on every non-zero cone.
    pub fn add_identity(&self, v: &mut [f64], alpha: f64) {
        for c in &self.cones {
            match c {
                Cone::Zero(_) => {}
                Cone::Nonneg(r) => v[r.clone()].iter_mut().for_each(|x| *x += alpha),
                Cone::Soc(r) => v[r.start] += alpha,
            }
        }
    }

    /// Largest `alpha <= alpha_max` keeping `u + alpha du` in the cone
    /// (zero cones excluded).
    pub fn step_length(&self, u: &[f64], du: &[f64], alpha_max: f64) -> f64 {
        let mut alpha = alpha_max;
        for c in &self.cones {
            match c {
                Cone::Zero(_) => {}
                Cone::Nonneg(r) => {
                    for i in r.clone() {
                        if du[i] < 0.0 {
                            alpha = alpha.min(-u[i] / du[i]);
                        }
                    }
                }
                Cone::Soc(r) => {
                    alpha = alpha.min(soc_step(&u[r.clone()], &du[r.clone()], alpha_max));
                }
            }
        }
        alpha.max(0.0)
    }
}

/// Largest step keeping `u + a du` in a second-order cone, for interior `u`.
fn soc_step(u: &[f64], du: &[f64], alpha_max: f64) -> f64 {
    // J(u + a du) = a^2 J(du) + 2a J(u, du) + J(u); find its first positive root
    let a = jdot(du, du);
    let b = 2.0 * jdot(u, du);
    let c = jdot(u, u).max(0.0);
    let mut alpha = alpha_max;
    // the u0 + a du0 >= 0 half-space
    if du[0] < 0.0 {
        alpha = alpha.min(-u[0] / du[0]);
    }
    let disc = b * b - 4.0 * a * c;
    if a == 0.0 {
        if b < 0.0 {
            alpha = alpha.min(-c / b);
        }
    } else if disc >= 0.0 {
        let sq = disc.sqrt();
        // numerically stable roots
        let q = -0.5 * (b + b.signum() * sq);
        let mut roots = [q / a, if q != 0.0 { c / q } else { f64::INFINITY }];
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        if let Some(r) = roots.iter().find(|&&r| r > 0.0) {
            // both roots positive with a > 0 means the cone is left and
            // re-entered through the negative cone; the first root counts
            alpha = alpha.min(*r);
        }
    }
    alpha
}

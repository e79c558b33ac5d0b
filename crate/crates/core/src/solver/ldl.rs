//! Sparse LDL' factorization for symmetric quasi-definite matrices.
//!
//! Fill-reducing minimum-degree ordering, elimination-tree symbolic
//! analysis, and an up-looking numeric factorization. Pivots whose sign
//! disagrees with the expected inertia (or that are too small) are replaced
//! by a signed regularization value.

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LdlError {
    #[error("pattern entry ({0}, {1}) is below the diagonal")]
    NotUpper(usize, usize),
    #[error("diagonal entry {0} missing from pattern")]
    MissingDiagonal(usize),
    #[error("non-finite pivot at column {0}")]
    NonFinitePivot(usize),
}

/// Minimum-degree ordering on the adjacency graph of a symmetric pattern.
/// Ties break on the lowest index, so the ordering is deterministic.
pub fn minimum_degree(n: usize, pattern: &[(usize, usize)]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in pattern {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let mut eliminated = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut merged = Vec::new();
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !eliminated[v])
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap();
        eliminated[v] = true;
        order.push(v);
        let nbrs = std::mem::take(&mut adj[v]);
        for &u in &nbrs {
            // adj[u] <- (adj[u] U nbrs) \ {u, v}
            merged.clear();
            let (a, b) = (&adj[u], &nbrs);
            let (mut p, mut q) = (0, 0);
            while p < a.len() || q < b.len() {
                let next = match (a.get(p), b.get(q)) {
                    (Some(&x), Some(&y)) if x == y => {
                        p += 1;
                        q += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        p += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        q += 1;
                        y
                    }
                    (Some(&x), None) => {
                        p += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        q += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if next != u && next != v {
                    merged.push(next);
                }
            }
            std::mem::swap(&mut adj[u], &mut merged);
        }
    }
    order
}

/// Factorization `P K P' = L D L'` with a fixed sparsity pattern.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    /// `perm[k]` = original index placed at position `k`
    perm: Vec<usize>,
    // permuted upper-triangular input
    ap: Vec<usize>,
    ai: Vec<usize>,
    ax: Vec<f64>,
    /// input entry -> position in `ax`
    map: Vec<usize>,
    signs: Vec<f64>,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    // workspace
    y_markers: Vec<bool>,
    y_vals: Vec<f64>,
    y_idx: Vec<usize>,
    elim_buffer: Vec<usize>,
    lnext: Vec<usize>,
    work: Vec<f64>,
}

impl LdlFactor {
    /// Symbolic analysis of a symmetric matrix given by its upper-triangular
    /// pattern (every diagonal entry must be present). `signs[i]` is the
    /// expected sign of pivot `i` (+1 or -1).
    pub fn new(n: usize, pattern: &[(usize, usize)], signs: &[f64]) -> Result<Self, LdlError> {
        let mut has_diag = vec![false; n];
        for &(i, j) in pattern {
            if i > j {
                return Err(LdlError::NotUpper(i, j));
            }
            if i == j {
                has_diag[i] = true;
            }
        }
        if let Some(k) = has_diag.iter().position(|&d| !d) {
            return Err(LdlError::MissingDiagonal(k));
        }

        let perm = minimum_degree(n, pattern);
        let mut iperm = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            iperm[p] = k;
        }

        // permuted upper-triangular CSC
        let permuted: Vec<(usize, usize)> = pattern
            .iter()
            .map(|&(i, j)| {
                let (a, b) = (iperm[i], iperm[j]);
                (a.min(b), a.max(b))
            })
            .collect();
        let mut order: Vec<usize> = (0..pattern.len()).collect();
        order.sort_by_key(|&k| (permuted[k].1, permuted[k].0));
        let mut ap = vec![0usize; n + 1];
        let mut ai = Vec::with_capacity(pattern.len());
        let mut map = vec![0usize; pattern.len()];
        let mut last = None;
        for k in order {
            let (r, c) = permuted[k];
            if last != Some((r, c)) {
                ai.push(r);
                ap[c + 1] += 1;
                last = Some((r, c));
            }
            map[k] = ai.len() - 1;
        }
        for c in 0..n {
            ap[c + 1] += ap[c];
        }

        // elimination tree and column counts
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut visited = vec![NONE; n];
        for j in 0..n {
            visited[j] = j;
            for &i0 in &ai[ap[j]..ap[j + 1]] {
                let mut i = i0;
                while visited[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    visited[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];

        let signs = perm.iter().map(|&p| signs[p]).collect();
        let nnz = ai.len();
        Ok(LdlFactor {
            n,
            perm,
            ap,
            ai,
            ax: vec![0.0; nnz],
            map,
            signs,
            etree,
            lp,
            li: vec![0; total],
            lx: vec![0.0; total],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            y_markers: vec![false; n],
            y_vals: vec![0.0; n],
            y_idx: vec![0; n],
            elim_buffer: vec![0; n],
            lnext: vec![0; n],
            work: vec![0.0; n],
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.lp[self.n]
    }

    /// Numeric factorization with values given in pattern order. Returns the
    /// number of pivots that were regularized.
    pub fn factor(&mut self, values: &[f64], reg_eps: f64, reg_delta: f64) -> Result<usize, LdlError> {
        self.ax.iter_mut().for_each(|x| *x = 0.0);
        for (k, &v) in values.iter().enumerate() {
            self.ax[self.map[k]] += v;
        }
        let n = self.n;
        for i in 0..n {
            self.y_markers[i] = false;
            self.y_vals[i] = 0.0;
            self.lnext[i] = self.lp[i];
        }
        let mut nreg = 0;
        for k in 0..n {
            let mut nnz_y = 0;
            let mut dk = 0.0;
            for p in self.ap[k]..self.ap[k + 1] {
                let bidx = self.ai[p];
                if bidx == k {
                    dk = self.ax[p];
                    continue;
                }
                self.y_vals[bidx] = self.ax[p];
                if !self.y_markers[bidx] {
                    self.y_markers[bidx] = true;
                    self.elim_buffer[0] = bidx;
                    let mut nnz_e = 1;
                    let mut next = self.etree[bidx];
                    while next != NONE && next < k {
                        if self.y_markers[next] {
                            break;
                        }
                        self.y_markers[next] = true;
                        self.elim_buffer[nnz_e] = next;
                        nnz_e += 1;
                        next = self.etree[next];
                    }
                    while nnz_e > 0 {
                        nnz_e -= 1;
                        self.y_idx[nnz_y] = self.elim_buffer[nnz_e];
                        nnz_y += 1;
                    }
                }
            }
            for i in (0..nnz_y).rev() {
                let cidx = self.y_idx[i];
                let next_space = self.lnext[cidx];
                let yc = self.y_vals[cidx];
                for j in self.lp[cidx]..next_space {
                    self.y_vals[self.li[j]] -= self.lx[j] * yc;
                }
                self.li[next_space] = k;
                self.lx[next_space] = yc * self.dinv[cidx];
                dk -= yc * self.lx[next_space];
                self.lnext[cidx] += 1;
                self.y_vals[cidx] = 0.0;
                self.y_markers[cidx] = false;
            }
            if !dk.is_finite() {
                return Err(LdlError::NonFinitePivot(k));
            }
            if self.signs[k] * dk <= reg_eps {
                dk = self.signs[k] * reg_delta;
                nreg += 1;
            }
            self.d[k] = dk;
            self.dinv[k] = 1.0 / dk;
        }
        Ok(nreg)
    }

    /// Solves `K x = b` in place (original ordering).
    pub fn solve(&mut self, b: &mut [f64]) {
        let n = self.n;
        let x = &mut self.work;
        for k in 0..n {
            x[k] = b[self.perm[k]];
        }
        for i in 0..n {
            let xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                x[self.li[j]] -= self.lx[j] * xi;
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                xi -= self.lx[j] * x[self.li[j]];
            }
            x[i] = xi;
        }
        for k in 0..n {
            b[self.perm[k]] = x[k];
        }
    }
}

//! Problem representation: programs over named variables with linear
//! constraints and second-order cone constraints, and their lowering to the
//! standard conic form `min c'x + offset  s.t.  Ax = b,  x in K`.

use std::fmt;

use crate::sparse::CscMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("inverted bounds: lower {lower} > upper {upper}")]
    InvertedBounds { lower: f64, upper: f64 },
    #[error("NaN bound")]
    NanBound,
    #[error("second-order cone constraint needs at least one vector entry")]
    EmptyCone,
    #[error("variable {0} does not belong to this program")]
    UnknownVariable(usize),
    #[error("non-finite coefficient {value} on variable {var}")]
    NonFiniteCoefficient { var: usize, value: f64 },
    #[error("non-finite constant {0}")]
    NonFiniteConstant(f64),
}

/// Handle to a decision variable of one [`ConicProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(usize);

impl VariableId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintId {
    Equality(usize),
    Inequality(usize),
    SecondOrderCone(usize),
}

/// Sparse affine expression `sum_j a_j x_j + constant`. Terms are kept
/// sorted by variable with no duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearExpr {
    terms: Vec<(VariableId, f64)>,
    constant: f64,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        LinearExpr {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn var(v: VariableId) -> Self {
        LinearExpr {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(v: VariableId, coef: f64) -> Self {
        let mut e = Self::new();
        e.add_term(v, coef);
        e
    }

    /// Sum of the given variables with unit coefficients.
    pub fn sum_of<I: IntoIterator<Item = VariableId>>(vars: I) -> Self {
        let mut e = Self::new();
        for v in vars {
            e.add_term(v, 1.0);
        }
        e
    }

    pub fn add_term(&mut self, v: VariableId, coef: f64) -> &mut Self {
        match self.terms.binary_search_by_key(&v, |t| t.0) {
            Ok(pos) => self.terms[pos].1 += coef,
            Err(pos) => self.terms.insert(pos, (v, coef)),
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn add_scaled(&mut self, other: &LinearExpr, scale: f64) -> &mut Self {
        for &(v, c) in &other.terms {
            self.add_term(v, scale * c);
        }
        self.constant += scale * other.constant;
        self
    }

    pub fn scaled(&self, scale: f64) -> LinearExpr {
        let mut e = LinearExpr::new();
        e.add_scaled(self, scale);
        e
    }

    pub fn terms(&self) -> &[(VariableId, f64)] {
        &self.terms
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    /// Evaluates the expression at `values`, indexed by variable.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// If the expression is exactly `1 * x`, returns `x`.
    pub fn as_single_variable(&self) -> Option<VariableId> {
        match self.terms.as_slice() {
            [(v, c)] if *c == 1.0 && self.constant == 0.0 => Some(*v),
            _ => None,
        }
    }
}

impl From<VariableId> for LinearExpr {
    fn from(v: VariableId) -> Self {
        LinearExpr::var(v)
    }
}

impl std::ops::Add for LinearExpr {
    type Output = LinearExpr;
    fn add(mut self, rhs: LinearExpr) -> LinearExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl std::ops::Sub for LinearExpr {
    type Output = LinearExpr;
    fn sub(mut self, rhs: LinearExpr) -> LinearExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl std::ops::Mul<f64> for LinearExpr {
    type Output = LinearExpr;
    fn mul(self, rhs: f64) -> LinearExpr {
        self.scaled(rhs)
    }
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for &(v, c) in &self.terms {
            if first {
                write!(f, "{c} {v}")?;
            } else if c < 0.0 {
                write!(f, " - {} {v}", -c)?;
            } else {
                write!(f, " + {c} {v}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant != 0.0 {
            write!(f, " + {}", self.constant)
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

/// `||v||_2 <= t`
#[derive(Debug, Clone, PartialEq)]
pub struct SocConstraint {
    pub t: LinearExpr,
    pub v: Vec<LinearExpr>,
}

/// A linear program with second-order cone constraints.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    bounds: Vec<Bounds>,
    names: Vec<Option<String>>,
    sense: Sense,
    objective: LinearExpr,
    equalities: Vec<LinearExpr>,
    inequalities: Vec<LinearExpr>,
    socs: Vec<SocConstraint>,
}

impl Default for ConicProgram {
    fn default() -> Self {
        Self::new()
    }
}

impl ConicProgram {
    pub fn new() -> Self {
        ConicProgram {
            bounds: Vec::new(),
            names: Vec::new(),
            sense: Sense::Minimize,
            objective: LinearExpr::new(),
            equalities: Vec::new(),
            inequalities: Vec::new(),
            socs: Vec::new(),
        }
    }

    /// Adds a variable with bounds `lower <= x <= upper`; either side may be
    /// infinite.
    pub fn add_variable(&mut self, lower: f64, upper: f64) -> Result<VariableId, ModelError> {
        if lower.is_nan() || upper.is_nan() {
            return Err(ModelError::NanBound);
        }
        if lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(ModelError::InvertedBounds { lower, upper });
        }
        self.bounds.push(Bounds { lower, upper });
        self.names.push(None);
        Ok(VariableId(self.bounds.len() - 1))
    }

    pub fn add_free_variable(&mut self) -> VariableId {
        self.add_variable(f64::NEG_INFINITY, f64::INFINITY)
            .expect("free bounds are valid")
    }

    pub fn add_named_variable(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
    ) -> Result<VariableId, ModelError> {
        let id = self.add_variable(lower, upper)?;
        self.names[id.0] = Some(name.into());
        Ok(id)
    }

    pub fn num_variables(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self, v: VariableId) -> Bounds {
        self.bounds[v.0]
    }

    pub fn name(&self, v: VariableId) -> Option<&str> {
        self.names[v.0].as_deref()
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &LinearExpr {
        &self.objective
    }

    pub fn equalities(&self) -> &[LinearExpr] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[LinearExpr] {
        &self.inequalities
    }

    pub fn socs(&self) -> &[SocConstraint] {
        &self.socs
    }

    fn check_expr(&self, e: &LinearExpr) -> Result<(), ModelError> {
        if !e.constant.is_finite() {
            return Err(ModelError::NonFiniteConstant(e.constant));
        }
        for &(v, c) in &e.terms {
            if v.0 >= self.bounds.len() {
                return Err(ModelError::UnknownVariable(v.0));
            }
            if !c.is_finite() {
                return Err(ModelError::NonFiniteCoefficient { var: v.0, value: c });
            }
        }
        Ok(())
    }

    pub fn set_objective(&mut self, sense: Sense, objective: LinearExpr) -> Result<(), ModelError> {
        self.check_expr(&objective)?;
        self.sense = sense;
        self.objective = objective;
        Ok(())
    }

    /// `expr = 0`
    pub fn add_equality(&mut self, expr: LinearExpr) -> Result<ConstraintId, ModelError> {
        self.check_expr(&expr)?;
        self.equalities.push(expr);
        Ok(ConstraintId::Equality(self.equalities.len() - 1))
    }

    /// `expr <= 0`
    pub fn add_inequality(&mut self, expr: LinearExpr) -> Result<ConstraintId, ModelError> {
        self.check_expr(&expr)?;
        self.inequalities.push(expr);
        Ok(ConstraintId::Inequality(self.inequalities.len() - 1))
    }

    /// `lhs <= rhs`
    pub fn add_le(&mut self, lhs: LinearExpr, rhs: LinearExpr) -> Result<ConstraintId, ModelError> {
        self.add_inequality(lhs - rhs)
    }

    /// `lhs >= rhs`
    pub fn add_ge(&mut self, lhs: LinearExpr, rhs: LinearExpr) -> Result<ConstraintId, ModelError> {
        self.add_inequality(rhs - lhs)
    }

    /// `||v||_2 <= t`
    pub fn add_soc(&mut self, t: LinearExpr, v: Vec<LinearExpr>) -> Result<ConstraintId, ModelError> {
        if v.is_empty() {
            return Err(ModelError::EmptyCone);
        }
        self.check_expr(&t)?;
        for e in &v {
            self.check_expr(e)?;
        }
        self.socs.push(SocConstraint { t, v });
        Ok(ConstraintId::SecondOrderCone(self.socs.len() - 1))
    }

    /// Largest constraint violation of `values` (bounds included).
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (b, &x) in self.bounds.iter().zip(values) {
            worst = worst.max(b.lower - x).max(x - b.upper);
        }
        for e in &self.equalities {
            worst = worst.max(e.evaluate(values).abs());
        }
        for e in &self.inequalities {
            worst = worst.max(e.evaluate(values));
        }
        for c in &self.socs {
            let norm = c.v.iter().map(|e| e.evaluate(values).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(norm - c.t.evaluate(values));
        }
        worst
    }

    /// Lowers the program to standard conic form.
    ///
    /// Column layout: free columns, then nonnegative columns (shifted
    /// variables, box-bound slacks, inequality slacks), then one block per
    /// second-order cone constraint. Row layout: equalities, box-bound rows,
    /// inequality rows, cone linking rows. Fixed variables (`lower ==
    /// upper`) become constants and own no column.
    pub fn to_standard_form(&self) -> StandardConicForm {
        let nvars = self.bounds.len();
        let mut back_map = vec![
            ColumnMap {
                column: None,
                scale: 0.0,
                offset: 0.0
            };
            nvars
        ];

        // free columns
        let mut ncols = 0;
        for (j, b) in self.bounds.iter().enumerate() {
            if b.lower == f64::NEG_INFINITY && b.upper == f64::INFINITY {
                back_map[j] = ColumnMap {
                    column: Some(ncols),
                    scale: 1.0,
                    offset: 0.0,
                };
                ncols += 1;
            }
        }
        let nfree = ncols;

        // nonnegative columns for bounded variables
        let mut box_vars = Vec::new();
        for (j, b) in self.bounds.iter().enumerate() {
            let lo = b.lower.is_finite();
            let hi = b.upper.is_finite();
            back_map[j] = match (lo, hi) {
                (false, false) => continue,
                (true, true) if b.lower == b.upper => ColumnMap {
                    column: None,
                    scale: 0.0,
                    offset: b.lower,
                },
                (true, _) => {
                    if hi {
                        box_vars.push(j);
                    }
                    ncols += 1;
                    ColumnMap {
                        column: Some(ncols - 1),
                        scale: 1.0,
                        offset: b.lower,
                    }
                }
                (false, true) => {
                    ncols += 1;
                    ColumnMap {
                        column: Some(ncols - 1),
                        scale: -1.0,
                        offset: b.upper,
                    }
                }
            };
        }
        let box_slack0 = ncols;
        ncols += box_vars.len();
        let ineq_slack0 = ncols;
        ncols += self.inequalities.len();
        let nnonneg = ncols - nfree;

        let mut cones = Vec::new();
        if nfree > 0 {
            cones.push(ConeBlock::Free(nfree));
        }
        if nnonneg > 0 {
            cones.push(ConeBlock::Nonnegative(nnonneg));
        }
        let mut soc_starts = Vec::with_capacity(self.socs.len());
        for c in &self.socs {
            soc_starts.push(ncols);
            let dim = 1 + c.v.len();
            cones.push(ConeBlock::SecondOrder(dim));
            ncols += dim;
        }

        let lower = |e: &LinearExpr| -> (Vec<(usize, f64)>, f64) {
            let mut entries = Vec::with_capacity(e.terms.len());
            let mut constant = e.constant;
            for &(v, c) in &e.terms {
                let m = back_map[v.0];
                constant += c * m.offset;
                if let Some(col) = m.column {
                    entries.push((col, c * m.scale));
                }
            }
            (entries, constant)
        };

        let mut triplets = Vec::new();
        let mut b = Vec::new();
        let mut row = 0;
        let mut push_row = |entries: &[(usize, f64)], rhs: f64, triplets: &mut Vec<(usize, usize, f64)>| {
            for &(col, v) in entries {
                triplets.push((row, col, v));
            }
            b.push(rhs);
            row += 1;
        };

        for e in &self.equalities {
            let (entries, k) = lower(e);
            push_row(&entries, -k, &mut triplets);
        }
        for (i, &j) in box_vars.iter().enumerate() {
            let col = back_map[j].column.unwrap();
            let bnd = self.bounds[j];
            push_row(&[(col, 1.0), (box_slack0 + i, 1.0)], bnd.upper - bnd.lower, &mut triplets);
        }
        for (i, e) in self.inequalities.iter().enumerate() {
            let (mut entries, k) = lower(e);
            entries.push((ineq_slack0 + i, 1.0));
            push_row(&entries, -k, &mut triplets);
        }
        for (c, &start) in self.socs.iter().zip(&soc_starts) {
            for (offset, e) in std::iter::once(&c.t).chain(c.v.iter()).enumerate() {
                // cone column - expr = 0
                let (entries, k) = lower(e);
                let mut row_entries: Vec<(usize, f64)> = entries.into_iter().map(|(col, v)| (col, -v)).collect();
                row_entries.push((start + offset, 1.0));
                push_row(&row_entries, k, &mut triplets);
            }
        }

        let nrows = b.len();
        let a = CscMatrix::from_triplets(nrows, ncols, &triplets);

        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let (obj_entries, obj_const) = lower(&self.objective);
        let mut c = vec![0.0; ncols];
        for (col, v) in obj_entries {
            c[col] += sign * v;
        }

        StandardConicForm {
            c,
            objective_offset: sign * obj_const,
            sense: self.sense,
            a,
            b,
            cones,
            back_map,
        }
    }
}

impl fmt::Display for ConicProgram {
    /// Human-readable dump: one line per variable, objective, and constraint.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "variables: {}", self.bounds.len())?;
        for (j, b) in self.bounds.iter().enumerate() {
            let name = self.names[j].as_deref().unwrap_or("");
            writeln!(f, "  x{j} {name} in [{}, {}]", b.lower, b.upper)?;
        }
        let sense = match self.sense {
            Sense::Minimize => "minimize",
            Sense::Maximize => "maximize",
        };
        writeln!(f, "{sense} {}", self.objective)?;
        for (i, e) in self.equalities.iter().enumerate() {
            writeln!(f, "  eq{i}: {e} = 0")?;
        }
        for (i, e) in self.inequalities.iter().enumerate() {
            writeln!(f, "  le{i}: {e} <= 0")?;
        }
        for (i, c) in self.socs.iter().enumerate() {
            let parts: Vec<String> = c.v.iter().map(|e| format!("{e}")).collect();
            writeln!(f, "  soc{i}: ||({})|| <= {}", parts.join(", "), c.t)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeBlock {
    Free(usize),
    Nonnegative(usize),
    SecondOrder(usize),
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        match *self {
            ConeBlock::Free(n) | ConeBlock::Nonnegative(n) | ConeBlock::SecondOrder(n) => n,
        }
    }
}

/// Original variable value = `offset + scale * x[column]` (or `offset` when
/// the variable owns no column).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnMap {
    pub column: Option<usize>,
    pub scale: f64,
    pub offset: f64,
}

/// `min c'x + objective_offset  s.t.  Ax = b,  x in K` where `K` is the
/// product of `cones` in column order.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardConicForm {
    pub c: Vec<f64>,
    pub objective_offset: f64,
    /// Sense of the originating program; a maximization was negated.
    pub sense: Sense,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub cones: Vec<ConeBlock>,
    pub back_map: Vec<ColumnMap>,
}

impl StandardConicForm {
    pub fn num_rows(&self) -> usize {
        self.a.nrows
    }

    pub fn num_cols(&self) -> usize {
        self.a.ncols
    }

    /// Values of the original program's variables for a standard-form point.
    pub fn recover(&self, x: &[f64]) -> Vec<f64> {
        self.back_map
            .iter()
            .map(|m| match m.column {
                Some(col) => m.offset + m.scale * x[col],
                None => m.offset,
            })
            .collect()
    }

    /// Standard-form objective `c'x + offset` (minimization sense).
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>()
    }

    /// Converts a standard-form objective value back to the original sense.
    pub fn original_objective(&self, standard_value: f64) -> f64 {
        match self.sense {
            Sense::Minimize => standard_value,
            Sense::Maximize => -standard_value,
        }
    }

    /// Column ranges of each cone block.
    pub fn cone_ranges(&self) -> Vec<(ConeBlock, std::ops::Range<usize>)> {
        let mut start = 0;
        self.cones
            .iter()
            .map(|&c| {
                let r = start..start + c.dim();
                start += c.dim();
                (c, r)
            })
            .collect()
    }
}

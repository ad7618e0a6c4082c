use super::{Dataset, ModelIndex};
use crate::error::LinModelError;

/// Schur complements at or below this fraction of the new column's Gram
/// diagonal are treated as exact collinearity.
pub const COLLINEARITY_FLOOR: f64 = 1e-10;

/// Outcome of an add or delete step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Update {
    /// The resulting model has a full-rank design.
    Regular,
    /// The resulting model is rank deficient and is excluded from the model space.
    Singular,
}

/// Least-squares state of one model, maintained under single-column
/// additions and deletions.
///
/// Holds the lower Cholesky factor `L` of the centered (unit-scaled) Gram
/// matrix of the active columns, in the order they were added, and
/// `z = L⁻¹ Xᵀ(y − ȳ1)`, so that `SSE = SSE₀ − ‖z‖²`. Adding a column
/// appends one row to `L`; deleting one removes its row and restores
/// triangularity with Givens rotations. Both cost `O(k²)`.
///
/// Columns whose addition would make the design rank deficient stay set in
/// the model but are parked outside the factor; while any are parked the
/// model is [singular](Self::is_singular). They are re-absorbed as soon as a
/// deletion makes room.
#[derive(Debug, Clone)]
pub struct FitState<'a> {
    data: &'a Dataset,
    model: ModelIndex,
    active: Vec<usize>,
    // packed lower triangle, row r starts at r(r+1)/2
    chol: Vec<f64>,
    z: Vec<f64>,
    parked: Vec<usize>,
    sse: f64,
}

#[inline]
fn row_start(r: usize) -> usize {
    r * (r + 1) / 2
}

impl<'a> FitState<'a> {
    /// The intercept-only model.
    pub fn empty(data: &'a Dataset) -> Self {
        Self {
            data,
            model: ModelIndex::empty(data.p()),
            active: Vec::new(),
            chol: Vec::new(),
            z: Vec::new(),
            parked: Vec::new(),
            sse: data.sse0(),
        }
    }

    /// Builds the state for `model` by adding its columns in index order.
    pub fn for_model(data: &'a Dataset, model: &ModelIndex) -> Self {
        let mut s = Self::empty(data);
        for j in model.iter_ones() {
            s.add_variable(j).expect("index from a model of matching width");
        }
        s
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn model(&self) -> &ModelIndex {
        &self.model
    }

    pub fn k(&self) -> usize {
        self.model.k()
    }

    pub fn sse(&self) -> f64 {
        self.sse
    }

    /// Active columns in factor order (excluding parked collinear ones).
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn is_singular(&self) -> bool {
        !self.parked.is_empty()
    }

    /// Entry `(r, c)`, `c <= r`, of the Cholesky factor of the unit-scaled Gram matrix.
    pub fn chol(&self, r: usize, c: usize) -> f64 {
        assert!(c <= r && r < self.active.len());
        self.chol[row_start(r) + c]
    }

    pub fn add_variable(&mut self, j: usize) -> Result<Update, LinModelError> {
        self.check_index(j)?;
        if self.model.contains(j) {
            return Err(LinModelError::AlreadyActive(j));
        }
        self.model.set(j);
        if !self.try_factor(j) {
            self.parked.push(j);
        }
        self.refresh_sse();
        Ok(self.status())
    }

    pub fn delete_variable(&mut self, j: usize) -> Result<Update, LinModelError> {
        self.check_index(j)?;
        if !self.model.contains(j) {
            return Err(LinModelError::NotActive(j));
        }
        self.model.clear(j);
        if let Some(pos) = self.parked.iter().position(|&c| c == j) {
            self.parked.remove(pos);
        } else {
            let r = self.active.iter().position(|&c| c == j).expect("set bit is factored or parked");
            self.downdate(r);
            if !self.parked.is_empty() {
                let parked = std::mem::take(&mut self.parked);
                for c in parked {
                    if !self.try_factor(c) {
                        self.parked.push(c);
                    }
                }
            }
        }
        self.refresh_sse();
        Ok(self.status())
    }

    /// Toggles column `j`.
    pub fn flip(&mut self, j: usize) -> Update {
        let r = if self.model.contains(j) {
            self.delete_variable(j)
        } else {
            self.add_variable(j)
        };
        r.expect("index checked by caller")
    }

    /// Least-squares coefficients on the original column scale, keyed by
    /// column index. `None` while the model is singular.
    pub fn coefficients(&self) -> Option<Vec<(usize, f64)>> {
        (!self.is_singular()).then(|| self.factored_coefficients())
    }

    /// Coefficients of the factored columns only; parked collinear columns
    /// get none. Same fitted values as any least-squares solution.
    pub fn factored_coefficients(&self) -> Vec<(usize, f64)> {
        let k = self.active.len();
        // back substitution Lᵀ b = z
        let mut b = self.z.clone();
        for r in (0..k).rev() {
            let mut acc = b[r];
            for i in r + 1..k {
                acc -= self.chol[row_start(i) + r] * b[i];
            }
            b[r] = acc / self.chol[row_start(r) + r];
        }
        self.active
            .iter()
            .zip(b)
            .map(|(&j, bj)| (j, bj / self.data.scale(j)))
            .collect()
    }

    fn check_index(&self, j: usize) -> Result<(), LinModelError> {
        if j >= self.data.p() {
            Err(LinModelError::OutOfRange { index: j, p: self.data.p() })
        } else {
            Ok(())
        }
    }

    fn status(&self) -> Update {
        if self.is_singular() {
            Update::Singular
        } else {
            Update::Regular
        }
    }

    fn refresh_sse(&mut self) {
        let explained: f64 = self.z.iter().map(|v| v * v).sum();
        self.sse = (self.data.sse0() - explained).max(0.0);
    }

    /// Appends column `j` to the factor; returns false (leaving the factor
    /// untouched) when its Schur complement is below the collinearity floor.
    fn try_factor(&mut self, j: usize) -> bool {
        let k = self.active.len();
        let mut row = Vec::with_capacity(k + 1);
        for r in 0..k {
            let start = row_start(r);
            let mut acc = self.data.cross(self.active[r], j);
            for c in 0..r {
                acc -= self.chol[start + c] * row[c];
            }
            row.push(acc / self.chol[start + r]);
        }
        let diag = self.data.cross(j, j);
        let schur = diag - row.iter().map(|v| v * v).sum::<f64>();
        if !(schur > COLLINEARITY_FLOOR * diag) {
            return false;
        }
        let d = schur.sqrt();
        let zj = (self.data.xty(j) - row.iter().zip(&self.z).map(|(a, b)| a * b).sum::<f64>()) / d;
        row.push(d);
        self.chol.extend_from_slice(&row);
        self.z.push(zj);
        self.active.push(j);
        true
    }

    /// Removes factor row `r`, then rotates column pairs `(c, c+1)` for
    /// `c >= r` to clear the superdiagonal left behind. The same rotations
    /// applied to `z` keep `L z = Xᵀ(y − ȳ1)`; the last entry of `z` then
    /// carries exactly the explained sum of squares lost.
    fn downdate(&mut self, r: usize) {
        let k = self.active.len();
        // rows below r shift up one; keep their full width (col i+1 is the superdiagonal)
        let mut rows: Vec<Vec<f64>> = (r + 1..k)
            .map(|i| self.chol[row_start(i)..row_start(i) + i + 1].to_vec())
            .collect();
        for c in r..k - 1 {
            let (a, b) = {
                let row = &rows[c - r];
                (row[c], row[c + 1])
            };
            let h = a.hypot(b);
            let (cos, sin) = (a / h, b / h);
            for row in rows[c - r..].iter_mut() {
                let (u, v) = (row[c], row[c + 1]);
                row[c] = cos * u + sin * v;
                row[c + 1] = -sin * u + cos * v;
            }
            rows[c - r][c + 1] = 0.0;
            let (u, v) = (self.z[c], self.z[c + 1]);
            self.z[c] = cos * u + sin * v;
            self.z[c + 1] = -sin * u + cos * v;
        }
        self.chol.truncate(row_start(r));
        for row in &rows {
            let len = row.len() - 1;
            self.chol.extend_from_slice(&row[..len]);
        }
        self.z.pop();
        self.active.remove(r);
    }
}

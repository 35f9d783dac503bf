//! Lower-triangular CSC storage for symmetric operators and a sparse
//! Cholesky wrapper that reuses the symbolic analysis across refactorizations.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, Side};

use crate::error::{LabError, Result};

/// Sorted lower-triangular pattern (`row ≥ col`) of an `n×n` symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricPattern {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
}

impl SymmetricPattern {
    /// Builds the pattern from `(row, col)` pairs in either triangle; the
    /// diagonal is always included.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for (r, c) in entries {
            let (r, c) = if r >= c { (r, c) } else { (c, r) };
            cols[c].push(r);
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for mut rows in cols {
            rows.sort_unstable();
            rows.dedup();
            row_idx.extend(rows);
            col_ptr.push(row_idx.len());
        }
        SymmetricPattern { n, col_ptr, row_idx }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Storage slot of entry `(row, col)`, either triangle.
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let (r, c) = if row >= col { (row, col) } else { (col, row) };
        let lo = self.col_ptr[c];
        let hi = self.col_ptr[c + 1];
        self.row_idx[lo..hi].binary_search(&r).ok().map(|k| lo + k)
    }
}

/// Symmetric matrix with values on a shared [`SymmetricPattern`].
#[derive(Debug, Clone)]
pub struct SymmetricMatrix {
    pub pattern: Arc<SymmetricPattern>,
    pub values: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(pattern: Arc<SymmetricPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        SymmetricMatrix { pattern, values }
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    /// Adds `v` to entry `(row, col)`; panics outside the pattern.
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let k = self
            .pattern
            .position(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) outside the pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.position(row, col).map_or(0.0, |k| self.values[k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let p = &self.pattern;
        let mut y = vec![0.0; p.n];
        for c in 0..p.n {
            for k in p.col_ptr[c]..p.col_ptr[c + 1] {
                let r = p.row_idx[k];
                let v = self.values[k];
                y[r] += v * x[c];
                if r != c {
                    y[c] += v * x[r];
                }
            }
        }
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Adds `shift` to every diagonal entry.
    pub fn shift_diagonal(&mut self, shift: f64) {
        for c in 0..self.pattern.n {
            let k = self.pattern.col_ptr[c];
            debug_assert_eq!(self.pattern.row_idx[k], c);
            self.values[k] += shift;
        }
    }

    /// Largest absolute diagonal entry.
    pub fn max_diagonal(&self) -> f64 {
        (0..self.pattern.n)
            .map(|c| self.values[self.pattern.col_ptr[c]].abs())
            .fold(0.0, f64::max)
    }

    fn as_faer(&self) -> SparseColMatRef<'_, usize, f64> {
        let p = &self.pattern;
        SparseColMatRef::new(
            SymbolicSparseColMatRef::new_checked(p.n, p.n, &p.col_ptr, None, &p.row_idx),
            &self.values,
        )
    }
}

/// Cholesky factorization sharing one symbolic analysis per pattern.
#[derive(Debug, Clone)]
pub struct CholeskySolver {
    pattern: Arc<SymmetricPattern>,
    symbolic: SymbolicLlt<usize>,
}

/// Numeric factor produced by [`CholeskySolver::factor`].
#[derive(Debug)]
pub struct CholeskyFactor {
    llt: Llt<usize, f64>,
    n: usize,
}

impl CholeskySolver {
    pub fn new(pattern: Arc<SymmetricPattern>) -> Result<Self> {
        let p = &pattern;
        let sym = SymbolicSparseColMatRef::new_checked(p.n, p.n, &p.col_ptr, None, &p.row_idx);
        let symbolic = SymbolicLlt::try_new(sym, Side::Lower)
            .map_err(|e| LabError::SolverDivergence(format!("symbolic analysis failed: {e:?}")))?;
        Ok(CholeskySolver {
            pattern: pattern.clone(),
            symbolic,
        })
    }

    pub fn factor(&self, matrix: &SymmetricMatrix) -> Result<CholeskyFactor> {
        if !Arc::ptr_eq(&self.pattern, &matrix.pattern) {
            return Err(LabError::InvalidInput(
                "matrix pattern differs from the analyzed pattern".into(),
            ));
        }
        let llt = Llt::try_new_with_symbolic(self.symbolic.clone(), matrix.as_faer(), Side::Lower)
            .map_err(|e| LabError::SolverDivergence(format!("matrix is not positive definite: {e:?}")))?;
        Ok(CholeskyFactor {
            llt,
            n: matrix.n(),
        })
    }
}

impl CholeskyFactor {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        self.llt.solve_in_place(b.as_mut());
        (0..self.n).map(|i| b[(i, 0)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SymmetricMatrix {
        let pattern = Arc::new(SymmetricPattern::from_entries(
            n,
            (0..n - 1).map(|i| (i + 1, i)),
        ));
        let mut m = SymmetricMatrix::zeros(pattern);
        for i in 0..n {
            m.add(i, i, 2.0);
            if i + 1 < n {
                m.add(i + 1, i, -1.0);
            }
        }
        m
    }

    #[test]
    fn solve_tridiagonal() {
        let m = laplacian_1d(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).cos()).collect();
        let b = m.matvec(&x);
        let solver = CholeskySolver::new(m.pattern.clone()).unwrap();
        let y = solver.factor(&m).unwrap().solve(&b);
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn indefinite_is_reported() {
        let mut m = laplacian_1d(5);
        m.shift_diagonal(-3.0);
        let solver = CholeskySolver::new(m.pattern.clone()).unwrap();
        assert!(matches!(solver.factor(&m), Err(LabError::SolverDivergence(_))));
    }

    #[test]
    fn symmetric_matvec_uses_both_triangles() {
        let m = laplacian_1d(3);
        assert_eq!(m.matvec(&[1.0, 0.0, 0.0]), vec![2.0, -1.0, 0.0]);
        assert_eq!(m.get(0, 1), -1.0);
    }
}

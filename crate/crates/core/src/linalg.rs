//! Dense symmetric positive-definite helpers (row-major storage).

use crate::error::{Error, Result};
use crate::scalar::RealScalar;

/// Lower Cholesky factor of a symmetric positive-definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<F> {
    dim: usize,
    lower: Vec<F>,
    /// Diagonal jitter that had to be added, as an absolute amount.
    pub jitter: F,
}

fn factor_in_place<F: RealScalar>(a: &mut [F], dim: usize) -> bool {
    for j in 0..dim {
        let mut diag = a[j * dim + j];
        for k in 0..j {
            diag = diag - a[j * dim + k] * a[j * dim + k];
        }
        if !(diag > F::zero()) || !diag.is_finite() {
            return false;
        }
        let d = diag.sqrt();
        a[j * dim + j] = d;
        for i in j + 1..dim {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s = s - a[i * dim + k] * a[j * dim + k];
            }
            a[i * dim + j] = s / d;
        }
    }
    for i in 0..dim {
        for j in i + 1..dim {
            a[i * dim + j] = F::zero();
        }
    }
    true
}

impl<F: RealScalar> Cholesky<F> {
    /// Factors `matrix`, adding jitter `1e-8 · mean(diag)` escalated tenfold
    /// up to `1e-2 · mean(diag)` if the plain factorization fails.
    pub fn new(matrix: &[F], dim: usize) -> Result<Self> {
        assert_eq!(matrix.len(), dim * dim, "matrix must be dim × dim");
        let mut work = matrix.to_vec();
        if factor_in_place(&mut work, dim) {
            return Ok(Cholesky { dim, lower: work, jitter: F::zero() });
        }
        let mean_diag = (0..dim).fold(F::zero(), |acc, i| acc + matrix[i * dim + i]) / F::count(dim.max(1));
        let ten = F::lit(10.0);
        let mut rel = F::lit(1e-8);
        while rel <= F::lit(1e-2) * F::lit(1.000001) {
            let jitter = rel * mean_diag.abs();
            work.copy_from_slice(matrix);
            for i in 0..dim {
                work[i * dim + i] = work[i * dim + i] + jitter;
            }
            if factor_in_place(&mut work, dim) {
                return Ok(Cholesky { dim, lower: work, jitter });
            }
            rel = rel * ten;
        }
        Err(Error::NumericalFailure(format!("{dim}×{dim} matrix is not positive definite even with jitter")))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `log |A|` as twice the sum of the log of the factor's diagonal.
    pub fn log_det(&self) -> F {
        (0..self.dim).fold(F::zero(), |acc, i| acc + self.lower[i * self.dim + i].ln()) * F::lit(2.0)
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[F]) -> Vec<F> {
        let n = self.dim;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.lower[i * n + k] * y[k];
            }
            y[i] = s / self.lower[i * n + i];
        }
        y
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[F]) -> Vec<F> {
        let n = self.dim;
        let mut x = self.solve_lower(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s = s - self.lower[k * n + i] * x[k];
            }
            x[i] = s / self.lower[i * n + i];
        }
        x
    }
}

/// Cholesky factor grown one row at a time, tracking the running log
/// determinant.
#[derive(Clone, Debug, Default)]
pub struct IncrementalCholesky<F> {
    rows: Vec<Vec<F>>,
    log_det: F,
}

impl<F: RealScalar> IncrementalCholesky<F> {
    pub fn new() -> Self {
        IncrementalCholesky { rows: Vec::new(), log_det: F::zero() }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn log_det(&self) -> F {
        self.log_det
    }

    /// Appends a row and column: `cross[k]` is the entry against existing
    /// index `k` and `diag` the new diagonal entry.
    pub fn push(&mut self, cross: &[F], diag: F) -> Result<()> {
        assert_eq!(cross.len(), self.rows.len(), "one cross term per existing row");
        let l = {
            let mut y = cross.to_vec();
            for i in 0..y.len() {
                let mut s = y[i];
                for k in 0..i {
                    s = s - self.rows[i][k] * y[k];
                }
                y[i] = s / self.rows[i][i];
            }
            y
        };
        let pivot = diag - l.iter().fold(F::zero(), |acc, &x| acc + x * x);
        if !(pivot > F::zero()) || !pivot.is_finite() {
            return Err(Error::NumericalFailure(format!("non-positive pivot at row {}", self.rows.len())));
        }
        let d = pivot.sqrt();
        self.log_det = self.log_det + pivot.ln();
        let mut row = l;
        row.push(d);
        self.rows.push(row);
        Ok(())
    }
}

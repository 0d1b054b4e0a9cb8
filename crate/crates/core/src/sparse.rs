//! Compressed sparse row matrices.

use crate::error::{check_dim, invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_parts(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != rows + 1 || indptr[0] != 0 {
            return Err(invalid("row pointer must have rows + 1 entries starting at 0"));
        }
        if indptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(invalid("row pointer must be nondecreasing"));
        }
        let nnz = indptr[rows];
        if indices.len() != nnz || values.len() != nnz {
            return Err(invalid("index and value arrays must match the row pointer"));
        }
        if indices.iter().any(|&c| c >= cols) {
            return Err(invalid("column index out of range"));
        }
        Ok(CsrMatrix { rows, cols, indptr, indices, values })
    }

    /// Build from dense row-major storage, dropping exact zeros.
    pub fn from_dense(rows: usize, cols: usize, dense: &[f64]) -> Result<Self> {
        check_dim(rows * cols, dense.len())?;
        let mut b = CsrBuilder::new(cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = dense[r * cols + c];
                if v != 0.0 {
                    b.push(c, v);
                }
            }
            b.finish_row();
        }
        Ok(b.build())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.row(r);
        idx.iter().zip(val).map(|(&c, v)| v * x[c]).sum()
    }

    /// `y += alpha · rowᵣ`
    pub fn row_axpy(&self, r: usize, alpha: f64, y: &mut [f64]) {
        let (idx, val) = self.row(r);
        for (&c, v) in idx.iter().zip(val) {
            y[c] += alpha * v;
        }
    }

    pub fn row_norm(&self, r: usize) -> f64 {
        self.row(r).1.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.row(r).1.iter().sum()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "operand length");
        (0..self.rows).map(|r| self.row_dot(r, x)).collect()
    }

    pub fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "operand length");
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0.0 {
                self.row_axpy(r, yr, &mut out);
            }
        }
        out
    }

    /// `y = A[rows] x` for a contiguous row range.
    pub fn apply_rows(&self, rows: std::ops::Range<usize>, x: &[f64]) -> Vec<f64> {
        rows.map(|r| self.row_dot(r, x)).collect()
    }

    /// `out += A[rows]ᵀ y`, with `y` indexed relative to the range start.
    pub fn adjoint_rows_into(&self, rows: std::ops::Range<usize>, y: &[f64], out: &mut [f64]) {
        for (r, &yr) in rows.zip(y) {
            if yr != 0.0 {
                self.row_axpy(r, yr, out);
            }
        }
    }

    /// Power-iteration estimate of `‖AᵀA‖`, the Lipschitz constant of the
    /// gradient of `½‖Ax − b‖²`. Starts from the all-ones vector, so the
    /// result is deterministic; it approaches the true value from below.
    pub fn normal_norm_estimate(&self, iterations: usize) -> f64 {
        let mut v = vec![1.0 / (self.cols as f64).sqrt(); self.cols];
        let mut est = 0.0;
        for _ in 0..iterations {
            let w = self.adjoint(&self.apply(&v));
            let n = crate::vector::norm(&w);
            if n == 0.0 {
                return 0.0;
            }
            est = n;
            v = w.into_iter().map(|t| t / n).collect();
        }
        est
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.rows * self.cols];
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                d[r * self.cols + c] += v;
            }
        }
        d
    }
}

/// Row-by-row incremental construction.
#[derive(Debug)]
pub struct CsrBuilder {
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrBuilder {
    pub fn new(cols: usize) -> Self {
        CsrBuilder { cols, indptr: vec![0], indices: Vec::new(), values: Vec::new() }
    }

    pub fn push(&mut self, col: usize, value: f64) {
        debug_assert!(col < self.cols);
        self.indices.push(col);
        self.values.push(value);
    }

    pub fn finish_row(&mut self) {
        self.indptr.push(self.indices.len());
    }

    pub fn build(self) -> CsrMatrix {
        CsrMatrix {
            rows: self.indptr.len() - 1,
            cols: self.cols,
            indptr: self.indptr,
            indices: self.indices,
            values: self.values,
        }
    }
}

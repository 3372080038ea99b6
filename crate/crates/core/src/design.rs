//! Design matrices: dense, or compressed sparse rows with a column companion.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sparse `n × d` matrix stored both row-major (for sample access) and
/// column-major (for per-feature products).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    row_val: Vec<f64>,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    col_val: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-row `(column, value)` lists. Columns must be strictly
    /// increasing within a row.
    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut row_idx = Vec::new();
        let mut row_val = Vec::new();
        row_ptr.push(0);
        for (r, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(c, v) in row {
                if c >= ncols {
                    return Err(Error::IndexOutOfRange { index: c, len: ncols });
                }
                if prev.is_some_and(|p| p >= c) {
                    return Err(Error::InvalidData(format!(
                        "row {r}: column indices not strictly increasing"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::InvalidData(format!("row {r}: non-finite value")));
                }
                prev = Some(c);
                row_idx.push(c);
                row_val.push(v);
            }
            row_ptr.push(row_idx.len());
        }
        Ok(Self::from_csr_parts(nrows, ncols, row_ptr, row_idx, row_val))
    }

    fn from_csr_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        row_val: Vec<f64>,
    ) -> Self {
        let mut counts = vec![0usize; ncols + 1];
        for &c in &row_idx {
            counts[c + 1] += 1;
        }
        for c in 0..ncols {
            counts[c + 1] += counts[c];
        }
        let col_ptr = counts.clone();
        let mut fill = counts;
        let mut col_idx = vec![0usize; row_idx.len()];
        let mut col_val = vec![0.0; row_idx.len()];
        for r in 0..nrows {
            for k in row_ptr[r]..row_ptr[r + 1] {
                let c = row_idx[k];
                col_idx[fill[c]] = r;
                col_val[fill[c]] = row_val[k];
                fill[c] += 1;
            }
        }
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            row_idx,
            row_val,
            col_ptr,
            col_idx,
            col_val,
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_val.len()
    }

    /// Nonzeros of row `r` as parallel index/value slices.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.row_idx[span.clone()], &self.row_val[span])
    }

    /// Nonzeros of column `c` as parallel row-index/value slices.
    pub fn col(&self, c: usize) -> (&[usize], &[f64]) {
        let span = self.col_ptr[c]..self.col_ptr[c + 1];
        (&self.col_idx[span.clone()], &self.col_val[span])
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for r in 0..self.nrows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                out[[r, c]] = v;
            }
        }
        out
    }

    fn select_columns(&self, keep: &[usize]) -> SparseMatrix {
        let mut remap = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut row_idx = Vec::new();
        let mut row_val = Vec::new();
        row_ptr.push(0);
        for r in 0..self.nrows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                if remap[c] != usize::MAX {
                    row_idx.push(remap[c]);
                    row_val.push(v);
                }
            }
            row_ptr.push(row_idx.len());
        }
        Self::from_csr_parts(self.nrows, keep.len(), row_ptr, row_idx, row_val)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Dense(Array2<f64>),
    Sparse(SparseMatrix),
}

impl Design {
    pub fn nrows(&self) -> usize {
        match self {
            Design::Dense(x) => x.nrows(),
            Design::Sparse(s) => s.nrows,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Design::Dense(x) => x.ncols(),
            Design::Sparse(s) => s.ncols,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Design::Dense(x) => x.iter().all(|v| v.is_finite()),
            Design::Sparse(s) => s.row_val.iter().all(|v| v.is_finite()),
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match self {
            Design::Dense(x) => x.clone(),
            Design::Sparse(s) => s.to_dense(),
        }
    }

    /// `X · B` (`n × q`).
    pub fn dot(&self, b: ArrayView2<f64>) -> Array2<f64> {
        debug_assert_eq!(b.nrows(), self.ncols());
        match self {
            Design::Dense(x) => x.dot(&b),
            Design::Sparse(s) => {
                let mut out = Array2::zeros((s.nrows, b.ncols()));
                for (r, mut out_row) in out.axis_iter_mut(Axis(0)).enumerate() {
                    let (idx, val) = s.row(r);
                    for (&c, &v) in idx.iter().zip(val) {
                        out_row.scaled_add(v, &b.row(c));
                    }
                }
                out
            }
        }
    }

    /// `Xᵀ · Θ` (`d × q`).
    pub fn t_dot(&self, theta: ArrayView2<f64>) -> Array2<f64> {
        debug_assert_eq!(theta.nrows(), self.nrows());
        match self {
            Design::Dense(x) => x.t().dot(&theta),
            Design::Sparse(s) => {
                let mut out = Array2::zeros((s.ncols, theta.ncols()));
                for (c, mut out_row) in out.axis_iter_mut(Axis(0)).enumerate() {
                    let (idx, val) = s.col(c);
                    for (&r, &v) in idx.iter().zip(val) {
                        out_row.scaled_add(v, &theta.row(r));
                    }
                }
                out
            }
        }
    }

    /// `x_rᵀ · B` for sample `r` (length `q`).
    pub fn row_dot(&self, r: usize, b: ArrayView2<f64>) -> Array1<f64> {
        match self {
            Design::Dense(x) => x.row(r).dot(&b),
            Design::Sparse(s) => {
                let mut out = Array1::zeros(b.ncols());
                let (idx, val) = s.row(r);
                for (&c, &v) in idx.iter().zip(val) {
                    out.scaled_add(v, &b.row(c));
                }
                out
            }
        }
    }

    /// Adds the outer product `x_r · gᵀ` into `acc` (`d × q`).
    pub fn add_row_outer(&self, r: usize, g: ArrayView1<f64>, acc: &mut Array2<f64>) {
        match self {
            Design::Dense(x) => {
                for (c, &v) in x.row(r).iter().enumerate() {
                    if v != 0.0 {
                        acc.row_mut(c).scaled_add(v, &g);
                    }
                }
            }
            Design::Sparse(s) => {
                let (idx, val) = s.row(r);
                for (&c, &v) in idx.iter().zip(val) {
                    acc.row_mut(c).scaled_add(v, &g);
                }
            }
        }
    }

    /// L2 norm of every column (feature).
    pub fn column_norms(&self) -> Vec<f64> {
        match self {
            Design::Dense(x) => x
                .axis_iter(Axis(1))
                .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect(),
            Design::Sparse(s) => (0..s.ncols)
                .map(|c| s.col(c).1.iter().map(|v| v * v).sum::<f64>().sqrt())
                .collect(),
        }
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> Design {
        match self {
            Design::Dense(x) => Design::Dense(x.select(Axis(1), keep)),
            Design::Sparse(s) => Design::Sparse(s.select_columns(keep)),
        }
    }

    /// Largest singular value by power iteration on `XᵀX`.
    pub fn spectral_norm(&self, tol: f64, max_iter: usize) -> f64 {
        let d = self.ncols();
        if d == 0 || self.nrows() == 0 {
            return 0.0;
        }
        // fixed pseudo-random start so the iteration is reproducible and
        // almost surely not orthogonal to the top singular vector
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut v = Array2::from_shape_fn((d, 1), |_| rng.random::<f64>() + 0.5);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v /= norm;
        let mut estimate = 0.0;
        for _ in 0..max_iter {
            let xv = self.dot(v.view());
            let w = self.t_dot(xv.view());
            let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if wn == 0.0 {
                return 0.0;
            }
            // Rayleigh quotient of XᵀX at the current unit vector
            let rayleigh = xv.iter().map(|x| x * x).sum::<f64>();
            v = w / wn;
            let converged = (rayleigh - estimate).abs() <= tol * rayleigh;
            estimate = rayleigh;
            if converged {
                break;
            }
        }
        estimate.sqrt()
    }
}

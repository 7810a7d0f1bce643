//! Minimal numeric kernels the reservoir needs: a CSR sparse real matrix,
//! a scale-equivariant spectral-radius estimate, and a Hermitian
//! positive-definite solver for the ridge normal equations.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Compressed sparse row matrix over f64.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for (r, c, v) in triplets {
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n_rows, n_cols, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// out = A x for complex x.
    pub fn mul_complex(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(out.len(), self.n_rows);
        for r in 0..self.n_rows {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.col_idx[k]] * self.values[k];
            }
            out[r] = acc;
        }
    }

    /// out = A x for real x.
    pub fn mul_real(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.n_rows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.col_idx[k]] * self.values[k];
            }
            out[r] = acc;
        }
    }
}

/// Spectral-radius estimate by norm-growth power iteration: runs `iters`
/// multiplications from a deterministic start vector and returns the
/// geometric mean of the last quarter of the per-step norm growth factors.
/// Exactly scale-equivariant: estimate(c A) = c * estimate(A).
pub fn spectral_radius_estimate(a: &CsrMatrix, iters: usize, seed: u64) -> f64 {
    assert_eq!(a.n_rows, a.n_cols);
    let n = a.n_rows;
    // deterministic pseudo-random start, independent of the matrix draw
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm0;
    }
    let mut out = vec![0.0; n];
    let mut log_growth = Vec::with_capacity(iters);
    for _ in 0..iters {
        a.mul_real(&v, &mut out);
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        log_growth.push(norm.ln());
        for (vi, oi) in v.iter_mut().zip(&out) {
            *vi = oi / norm;
        }
    }
    let tail = iters / 4;
    let s: f64 = log_growth[iters - tail..].iter().sum();
    (s / tail as f64).exp()
}

/// In-place lower Cholesky factorization of a Hermitian positive-definite
/// matrix. Returns `Err(SingularRidge)` when a pivot is not positive.
pub fn cholesky_in_place(a: &mut Array2<C64>) -> Result<()> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let ls = a.as_slice_mut().expect("contiguous row-major");
    for j in 0..n {
        let mut diag = ls[j * n + j].re;
        for k in 0..j {
            diag -= ls[j * n + k].norm_sqr();
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::SingularRidge);
        }
        let ljj = diag.sqrt();
        ls[j * n + j] = C64::new(ljj, 0.0);
        let inv = 1.0 / ljj;
        for i in j + 1..n {
            // acc = A[i,j] - sum_k L[i,k] conj(L[j,k]) over k < j
            let (head, tail) = ls.split_at_mut(i * n);
            let row_j = &head[j * n..j * n + j];
            let row_i = &tail[..j];
            let mut acc = tail[j];
            for (x, y) in row_i.iter().zip(row_j) {
                acc -= x * y.conj();
            }
            tail[j] = acc * inv;
        }
        for k in j + 1..n {
            ls[j * n + k] = C64::new(0.0, 0.0);
        }
    }
    Ok(())
}

/// Solves L z = b in place (forward substitution, L lower triangular).
pub fn forward_substitute(l: &Array2<C64>, b: &mut [C64]) {
    let n = l.nrows();
    let ls = l.as_slice().expect("contiguous");
    for i in 0..n {
        let row = &ls[i * n..i * n + i];
        let mut acc = b[i];
        for (k, lv) in row.iter().enumerate() {
            acc -= lv * b[k];
        }
        b[i] = acc / ls[i * n + i];
    }
}

/// Solves L^H z = b in place (back substitution).
pub fn back_substitute_conj(l: &Array2<C64>, b: &mut [C64]) {
    let n = l.nrows();
    let ls = l.as_slice().expect("contiguous");
    for i in (0..n).rev() {
        let mut acc = b[i];
        for k in i + 1..n {
            acc -= ls[k * n + i].conj() * b[k];
        }
        b[i] = acc / ls[i * n + i];
    }
}

/// Solves (A) X = B for Hermitian positive definite A, overwriting nothing;
/// B columns are solved independently. A is consumed as its Cholesky factor.
pub fn solve_hermitian_in_place(a: &mut Array2<C64>, b: &mut Array2<C64>) -> Result<()> {
    cholesky_in_place(a)?;
    let n = a.nrows();
    let cols = b.ncols();
    let mut col = vec![C64::new(0.0, 0.0); n];
    for j in 0..cols {
        for i in 0..n {
            col[i] = b[(i, j)];
        }
        forward_substitute(a, &mut col);
        back_substitute_conj(a, &mut col);
        for i in 0..n {
            b[(i, j)] = col[i];
        }
    }
    Ok(())
}

//! Time-major sequence batches and thin safe wrappers over `matrixmultiply`.

use alloc::vec;
use alloc::vec::Vec;

/// A batch of equal-length sequences stored time-major:
/// element `(t, b, k)` lives at `data[(t * batch + b) * dim + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqTensor {
    pub len: usize,
    pub batch: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl SeqTensor {
    pub fn zeros(len: usize, batch: usize, dim: usize) -> Self {
        Self {
            len,
            batch,
            dim,
            data: vec![0.0; len * batch * dim],
        }
    }

    pub fn from_vec(len: usize, batch: usize, dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), len * batch * dim, "SeqTensor data length");
        Self {
            len,
            batch,
            dim,
            data,
        }
    }

    /// Rows = len·batch.
    pub fn rows(&self) -> usize {
        self.len * self.batch
    }

    pub fn at(&self, t: usize, b: usize) -> &[f64] {
        let start = (t * self.batch + b) * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn at_mut(&mut self, t: usize, b: usize) -> &mut [f64] {
        let start = (t * self.batch + b) * self.dim;
        &mut self.data[start..start + self.dim]
    }

    /// All batch rows at time `t`, a (batch × dim) row-major block.
    pub fn step(&self, t: usize) -> &[f64] {
        let n = self.batch * self.dim;
        &self.data[t * n..(t + 1) * n]
    }

    pub fn step_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.batch * self.dim;
        &mut self.data[t * n..(t + 1) * n]
    }

    /// Selects batch columns `indices`, keeping the time layout.
    pub fn select_batch(&self, indices: &[usize]) -> Self {
        let mut out = Self::zeros(self.len, indices.len(), self.dim);
        for t in 0..self.len {
            for (nb, &b) in indices.iter().enumerate() {
                out.at_mut(t, nb).copy_from_slice(self.at(t, b));
            }
        }
        out
    }
}

/// C (m×n) = A (m×k) · Bᵀ, with B stored (n×k) row-major; `beta` scales the old C.
pub fn gemm_nt(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: bounds checked above; strides describe row-major layouts.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// C (m×n) = A (m×k) · B (k×n), all row-major.
pub fn gemm_nn(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: bounds checked above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// C (m×n) = Aᵀ · B with A stored (k×m) and B stored (k×n), row-major.
pub fn gemm_tn(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert!(a.len() >= k * m && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: bounds checked above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            1,
            m as isize,
            b.as_ptr(),
            n as isize,
            1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

//! Small dense linear algebra: symmetric eigenvalues, Cholesky with jitter
//! escalation, triangular solves and a growable packed lower factor.
//!
//! Matrices are row-major `n × n` slices. Sizes here are tens to a few
//! hundred, so everything is dense and allocation-light.

use thiserror::Error;

use crate::scalar::Real;

/// Jitter schedule tried after a plain factorization fails.
pub const JITTER_LADDER: [f64; 5] = [1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (last jitter tried: {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Real>(a: &[T], n: usize) -> Vec<T> {
    assert_eq!(a.len(), n * n, "symmetric_eigenvalues: bad shape");
    let mut m = a.to_vec();
    let two = T::lit(2.0);
    let scale: T = m.iter().map(|v| *v * *v).sum::<T>().sqrt();
    let tol = T::epsilon() * scale.max(T::one());

    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<T>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }

    let mut eig: Vec<T> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    eig
}

/// Plain Cholesky factorization; returns the dense lower factor.
pub fn cholesky<T: Real>(a: &[T], n: usize) -> Result<Vec<T>, LinalgError> {
    cholesky_shifted(a, n, T::zero())
}

fn cholesky_shifted<T: Real>(a: &[T], n: usize, shift: T) -> Result<Vec<T>, LinalgError> {
    if a.len() != n * n {
        return Err(LinalgError::Dimension { expected: n * n, got: a.len() });
    }
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                let d = sum + shift;
                if !(d > T::zero()) {
                    return Err(LinalgError::NotPositiveDefinite { jitter: shift.to_f64_lossy() });
                }
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Cholesky with additive diagonal jitter escalation along [`JITTER_LADDER`].
///
/// Returns the factor and the jitter that was finally applied (zero when the
/// plain factorization succeeded).
pub fn cholesky_with_jitter<T: Real>(a: &[T], n: usize) -> Result<(Vec<T>, T), LinalgError> {
    match cholesky_shifted(a, n, T::zero()) {
        Ok(l) => return Ok((l, T::zero())),
        Err(LinalgError::Dimension { expected, got }) => {
            return Err(LinalgError::Dimension { expected, got })
        }
        Err(_) => {}
    }
    for &j in JITTER_LADDER.iter() {
        let jitter = T::lit(j);
        if let Ok(l) = cholesky_shifted(a, n, jitter) {
            return Ok((l, jitter));
        }
    }
    Err(LinalgError::NotPositiveDefinite { jitter: JITTER_LADDER[JITTER_LADDER.len() - 1] })
}

/// Solves `L z = b` for dense lower-triangular `L`.
pub fn solve_lower<T: Real>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    z
}

/// Solves `Lᵀ z = b` for dense lower-triangular `L`.
pub fn solve_lower_transpose<T: Real>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut z = b.to_vec();
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    z
}

/// Lower-triangular factor stored row-packed so that appending a row is O(M).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PackedLower<T> {
    data: Vec<T>,
    dim: usize,
}

impl<T: Real> PackedLower<T> {
    pub fn new() -> Self {
        Self { data: Vec::new(), dim: 0 }
    }

    pub fn with_capacity(rows: usize) -> Self {
        Self { data: Vec::with_capacity(rows * (rows + 1) / 2), dim: 0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn row(&self, i: usize) -> &[T] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if j > i {
            T::zero()
        } else {
            self.row(i)[j]
        }
    }

    /// Forward substitution `L z = b`.
    pub fn forward_solve(&self, b: &[T]) -> Vec<T> {
        debug_assert_eq!(b.len(), self.dim);
        let mut z = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let row = self.row(i);
            let mut s = b[i];
            for (lk, zk) in row[..i].iter().zip(z.iter()) {
                s -= *lk * *zk;
            }
            z.push(s / row[i]);
        }
        z
    }

    /// Appends the row `[off_diag..., diag]`.
    pub fn push_row(&mut self, off_diag: &[T], diag: T) {
        assert_eq!(off_diag.len(), self.dim, "push_row: off-diagonal length");
        self.data.extend_from_slice(off_diag);
        self.data.push(diag);
        self.dim += 1;
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.dim;
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            out[i * n..i * n + i + 1].copy_from_slice(self.row(i));
        }
        out
    }

    /// `L Lᵀ` as a dense matrix.
    pub fn reconstruct(&self) -> Vec<T> {
        let n = self.dim;
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let (ri, rj) = (self.row(i), self.row(j));
                let s: T = ri[..=j].iter().zip(rj.iter()).map(|(a, b)| *a * *b).sum();
                out[i * n + j] = s;
                out[j * n + i] = s;
            }
        }
        out
    }
}

/// Frobenius norm of `a - b`.
pub fn frobenius_diff<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum::<T>().sqrt()
}

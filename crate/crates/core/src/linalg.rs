//! Small dense symmetric matrices.
//!
//! Only what the covariance algebra needs: products, quadratic forms,
//! a Cholesky factor for sampling and the leading eigenvalue by power
//! iteration.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng as _;

use crate::error::{Error, Result};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;

/// Dense symmetric `n x n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from row-major entries, checking symmetry and finiteness.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("matrix dimension must be positive".into()));
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        let scale = data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(n, data)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Self { n, data }
    }

    pub(crate) fn from_raw(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// `v' A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let ri: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            acc += v[i] * ri;
        }
        acc
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Lower-triangular `L` with `L L' = A`; fails unless `A` is positive definite.
    pub fn cholesky(&self) -> Result<Vec<f64>> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut diag = self.get(j, j);
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if !(diag > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = libm::sqrt(diag);
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(l)
    }

    /// Largest eigenvalue by power iteration from a seeded random start.
    ///
    /// Stops when the residual `|A v - rho v|` falls below `1e-10 rho`, or after
    /// 10 000 iterations. A negative Rayleigh quotient means the matrix is not
    /// positive semi-definite and is reported as such.
    pub fn largest_eigenvalue(&self) -> Result<f64> {
        let n = self.n;
        let mut rng = crate::rng::seeded(0x005e_ed0f_ea51);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.5).collect();
        normalize(&mut v);
        let mut av = vec![0.0; n];
        let mut rho = 0.0;
        for _ in 0..POWER_MAX_ITER {
            self.mul_vec(&v, &mut av);
            rho = dot(&v, &av);
            if rho < 0.0 {
                return Err(Error::NotPositiveDefinite);
            }
            let resid = av
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - rho * b) * (a - rho * b))
                .sum::<f64>();
            if libm::sqrt(resid) <= POWER_TOL * rho {
                break;
            }
            let norm = libm::sqrt(dot(&av, &av));
            if norm == 0.0 {
                return Ok(0.0);
            }
            for (vi, ai) in v.iter_mut().zip(&av) {
                *vi = ai / norm;
            }
        }
        Ok(rho)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = libm::sqrt(dot(v, v));
    for x in v.iter_mut() {
        *x /= n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric() {
        let m = SymMatrix::from_row_major(2, vec![1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(m, Err(Error::NotSymmetric { row: 0, col: 1 })));
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = SymMatrix::from_row_major(3, vec![4.0, 2.0, 0.4, 2.0, 3.0, 0.5, 0.4, 0.5, 2.0])
            .unwrap();
        let l = a.cholesky().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((s - a.get(i, j)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert_eq!(a.cholesky(), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn power_iteration_on_tied_spectrum() {
        let a = SymMatrix::diagonal(&[3.0, 3.0, 1.0]);
        assert!((a.largest_eigenvalue().unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_definite_is_reported() {
        let a = SymMatrix::diagonal(&[-1.0, -2.0]);
        assert_eq!(a.largest_eigenvalue(), Err(Error::NotPositiveDefinite));
    }
}

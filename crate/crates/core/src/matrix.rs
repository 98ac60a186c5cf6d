//! Dense complex Hermitian matrix storage.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative entrywise tolerance for the Hermiticity invariant.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Dense complex square matrix, row-major. Intended to hold Hermitian
/// operators; `hermiticity_defect` measures how far a given instance is
/// from `M = M*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix {
    order: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            data: vec![Complex64::new(0.0, 0.0); order * order],
        }
    }

    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            for j in 0..order {
                m.data[i * order + j] = f(i, j);
            }
        }
        m
    }

    /// Real diagonal matrix.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows must form a square matrix");
        Self::from_fn(n, |i, j| rows[i][j])
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.order + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.order + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.order + j] += v;
    }

    pub(crate) fn raw(&self) -> &[Complex64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max_ij |M_ij - conj(M_ji)|
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.order;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITICITY_TOL * self.max_abs().max(f64::MIN_POSITIVE)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
    }

    /// y = M x
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.order;
        assert_eq!(x.len(), n);
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// (M + M*)/2
    pub fn symmetrized(&self) -> Self {
        let n = self.order;
        Self::from_fn(n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i).conj()))
    }
}

//! Self-contained dense Hermitian eigensolver.
//!
//! Householder reduction of the complex Hermitian matrix to a real
//! symmetric tridiagonal form (phases absorbed into the accumulated
//! unitary), followed by implicit-shift QL sweeps. Fixed sweep order,
//! no data-dependent parallelism: identical input bits give identical
//! output bits.

use num_complex::Complex64;
use thiserror::Error;

use crate::matrix::HermitianMatrix;

const MAX_QL_ITERATIONS: usize = 50;

/// Relative gap under which neighbouring eigenvalues are treated as a
/// degenerate cluster and their vectors re-orthonormalized.
pub const DEGENERACY_GAP: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("matrix contains a non-finite entry")]
    NonFiniteEntry,
    #[error("QL iteration did not converge after {MAX_QL_ITERATIONS} sweeps (residual {residual:.3e})")]
    ConvergenceFailure { residual: f64 },
}

/// Sorted eigenvalues with an orthonormal eigenbasis.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Nondecreasing.
    pub values: Vec<f64>,
    /// `vectors[i]` is the unit eigenvector for `values[i]`.
    pub vectors: Vec<Vec<Complex64>>,
    pub order: usize,
}

impl EigenDecomposition {
    /// max_i ||M v_i - λ_i v_i||_2
    pub fn max_residual(&self, m: &HermitianMatrix) -> f64 {
        let mut worst = 0.0f64;
        for (val, vec) in self.values.iter().zip(&self.vectors) {
            let mv = m.mul_vec(vec);
            let r: f64 = mv
                .iter()
                .zip(vec)
                .map(|(a, b)| (a - val * b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        worst
    }

    /// max_ij |<v_i, v_j> - δ_ij|
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.vectors.len() {
            for j in i..self.vectors.len() {
                let dot: Complex64 = self.vectors[i]
                    .iter()
                    .zip(&self.vectors[j])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }
}

fn sign_transfer(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Householder reduction of a Hermitian matrix to real symmetric
/// tridiagonal form. Returns `(diag, offdiag, basis)` with
/// `A = basis · T · basis*` where `T` has real sub/super-diagonal
/// `offdiag[0..n-1]`. `basis` is `None` when vectors are not requested.
fn tridiagonalize(
    m: &HermitianMatrix,
    want_vectors: bool,
) -> (Vec<f64>, Vec<f64>, Option<Vec<Complex64>>) {
    let n = m.order();
    let mut a: Vec<Complex64> = m.symmetrized().raw().to_vec();
    let mut q = if want_vectors {
        let mut id = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            id[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Some(id)
    } else {
        None
    };

    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut p = vec![Complex64::new(0.0, 0.0); n];
    let mut w = vec![Complex64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(2) {
        let m0 = k + 1;
        let mut xnorm2 = 0.0f64;
        for i in m0..n {
            xnorm2 += a[i * n + k].norm_sqr();
        }
        if xnorm2 == 0.0 {
            continue; // column already tridiagonal
        }
        let xnorm = xnorm2.sqrt();
        let x0 = a[m0 * n + k];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        // Reflect x onto alpha·e1 with |alpha| = |x|; the sign choice
        // avoids cancellation in v[0].
        let alpha = -phase * xnorm;
        v[m0] = x0 - alpha;
        for i in (m0 + 1)..n {
            v[i] = a[i * n + k];
        }
        let vnorm2: f64 = v[m0..n].iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;

        // Hermitian rank-2 update of the trailing block:
        // B <- B - v w* - w v*,  w = τBv - (τ/2)(v*·τBv) v
        for i in m0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in m0..n {
                acc += a[i * n + j] * v[j];
            }
            p[i] = tau * acc;
        }
        let vp: Complex64 = (m0..n).map(|i| v[i].conj() * p[i]).sum();
        let kc = 0.5 * tau * vp;
        for i in m0..n {
            w[i] = p[i] - kc * v[i];
        }
        for i in m0..n {
            let vi = v[i];
            let wi = w[i];
            for j in m0..n {
                a[i * n + j] -= vi * w[j].conj() + wi * v[j].conj();
            }
        }
        a[m0 * n + k] = alpha;
        a[k * n + m0] = alpha.conj();
        for i in (m0 + 1)..n {
            a[i * n + k] = Complex64::new(0.0, 0.0);
            a[k * n + i] = Complex64::new(0.0, 0.0);
        }

        if let Some(q) = q.as_mut() {
            // Q <- Q (I - τ v v*)
            for r in 0..n {
                let mut qv = Complex64::new(0.0, 0.0);
                for c in m0..n {
                    qv += q[r * n + c] * v[c];
                }
                let qv = tau * qv;
                for c in m0..n {
                    q[r * n + c] -= qv * v[c].conj();
                }
            }
        }
    }

    // Absorb subdiagonal phases into the basis columns so the
    // tridiagonal matrix becomes real symmetric.
    let mut diag = vec![0.0f64; n];
    let mut off = vec![0.0f64; n.saturating_sub(1)];
    for i in 0..n {
        diag[i] = a[i * n + i].re;
    }
    let mut s = Complex64::new(1.0, 0.0);
    let mut scales = vec![Complex64::new(1.0, 0.0); n];
    for i in 0..n.saturating_sub(1) {
        let sub = a[(i + 1) * n + i];
        let mag = sub.norm();
        off[i] = mag;
        if mag > 0.0 {
            s *= sub / mag;
        }
        scales[i + 1] = s;
    }
    if let Some(q) = q.as_mut() {
        for c in 0..n {
            let sc = scales[c];
            for r in 0..n {
                q[r * n + c] *= sc;
            }
        }
    }

    (diag, off, q)
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix.
/// `basis`, when present, accumulates the rotations on its columns.
fn ql_implicit(
    d: &mut [f64],
    e: &mut [f64],
    basis: Option<&mut [Complex64]>,
) -> Result<(), EigenError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    // e is used with NR indexing: e[i] couples d[i] and d[i+1], e[n-1] = 0.
    let eps = f64::EPSILON;
    let mut z = basis;

    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut mm = l;
            while mm + 1 < n {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= eps * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(EigenError::ConvergenceFailure {
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[mm] - d[l] + e[l] / (g + sign_transfer(r, g));
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..mm).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for row in 0..n {
                        let zf = z[row * n + i + 1];
                        let zi = z[row * n + i];
                        z[row * n + i + 1] = s * zi + c * zf;
                        z[row * n + i] = c * zi - s * zf;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues only, sorted nondecreasing. Cheaper than
/// [`eig_hermitian`] because no basis is accumulated.
pub fn eig_values(m: &HermitianMatrix) -> Result<Vec<f64>, EigenError> {
    if m.has_non_finite() {
        return Err(EigenError::NonFiniteEntry);
    }
    let n = m.order();
    let (mut d, off, _) = tridiagonalize(m, false);
    let mut e = vec![0.0f64; n];
    e[..off.len()].copy_from_slice(&off);
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Full decomposition: sorted eigenvalues and an orthonormal eigenbasis.
pub fn eig_hermitian(m: &HermitianMatrix) -> Result<EigenDecomposition, EigenError> {
    if m.has_non_finite() {
        return Err(EigenError::NonFiniteEntry);
    }
    let n = m.order();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            vectors: vec![],
            order: 0,
        });
    }
    let (mut d, off, q) = tridiagonalize(m, true);
    let mut q = q.expect("basis requested");
    let mut e = vec![0.0f64; n];
    e[..off.len()].copy_from_slice(&off);
    ql_implicit(&mut d, &mut e, Some(&mut q))?;

    // Sort eigenpairs (stable: ties keep QL output order).
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
    let mut vectors: Vec<Vec<Complex64>> = idx
        .iter()
        .map(|&col| (0..n).map(|row| q[row * n + col]).collect())
        .collect();

    reorthonormalize_clusters(&values, &mut vectors, m.frobenius_norm());

    Ok(EigenDecomposition {
        values,
        vectors,
        order: n,
    })
}

/// The k smallest eigenpairs; agrees with the prefix of the full solve.
pub fn eig_smallest_k(m: &HermitianMatrix, k: usize) -> Result<EigenDecomposition, EigenError> {
    let mut full = eig_hermitian(m)?;
    let k = k.min(full.order);
    full.values.truncate(k);
    full.vectors.truncate(k);
    Ok(full)
}

/// Modified Gram-Schmidt inside numerically degenerate clusters. Any
/// orthonormal basis of a cluster is acceptable; downstream code must
/// not depend on the choice.
fn reorthonormalize_clusters(values: &[f64], vectors: &mut [Vec<Complex64>], scale: f64) {
    let n = values.len();
    let gap = DEGENERACY_GAP * scale.max(f64::MIN_POSITIVE);
    let mut start = 0usize;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] < gap {
            end += 1;
        }
        if end - start > 1 {
            for i in start..end {
                for j in start..i {
                    let dot: Complex64 = vectors[j]
                        .iter()
                        .zip(&vectors[i])
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    let proj: Vec<Complex64> =
                        vectors[j].iter().map(|z| z * dot).collect();
                    for (vi, pj) in vectors[i].iter_mut().zip(&proj) {
                        *vi -= pj;
                    }
                }
                let norm: f64 = vectors[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for z in vectors[i].iter_mut() {
                        *z /= norm;
                    }
                }
            }
        }
        start = end;
    }
}

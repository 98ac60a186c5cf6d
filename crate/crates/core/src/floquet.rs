//! Band functions over the Brillouin zone: sweep, minima location and
//! refinement, non-degenerate quadratic behaviour, and phase-fixed
//! Bloch eigenfunctions.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::{eig_hermitian, eig_values, EigenError};
use crate::model::Model;
use crate::operator::{OperatorError, QuasiMomentum};

/// Default Brillouin-zone samples per axis.
pub fn default_n_theta(dimension: usize) -> usize {
    if dimension == 1 {
        129
    } else {
        33
    }
}

pub const DEFAULT_REFINE_TOL: f64 = 1e-6;
/// Merge radius in units of θ-grid steps.
pub const DEFAULT_MERGE_STEPS: f64 = 3.0;
/// Hessian eigenvalues below this flag a degenerate minimum.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum FloquetError {
    #[error("Brillouin-zone sweep needs at least 8 samples per axis, got {0}")]
    SweepTooCoarse(usize),
    #[error("need at least one band, got {0}")]
    NoBands(usize),
    #[error("flat band suspected: {within} of {total} grid points within grouping tolerance of the minimum")]
    FlatBandSuspected { within: usize, total: usize },
    #[error("degenerate minimum: Hessian eigenvalue {0} below threshold {DEGENERACY_THRESHOLD}")]
    DegenerateMinimum(f64),
    #[error("quadratic sandwich violated at θ = {offending:?}")]
    SandwichViolation { offending: Vec<Vec<f64>> },
    #[error("fit radius δ={delta} must span at least 3 grid steps ({step})")]
    RadiusTooSmall { delta: f64, step: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Sampled Floquet eigenvalues over a uniform tensor θ-grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BandStructure {
    pub model: Model,
    pub n_theta: usize,
    pub n_bands: usize,
    /// Flattened tensor grid, row-major over axes.
    pub thetas: Vec<Vec<f64>>,
    /// `bands[i]` holds the lowest `n_bands` eigenvalues at `thetas[i]`.
    pub bands: Vec<Vec<f64>>,
}

/// The finite set of first-band minimizers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimaSet {
    pub count: usize,
    pub points: Vec<Vec<f64>>,
    pub e_min: f64,
    pub grouping_tol: f64,
    pub merge_radius: f64,
    /// E₂ - E₁ at the minimizers (minimum over the set).
    pub band_gap: f64,
    /// First band simple at every minimizer (gap > 10 × grouping tol).
    pub simple: bool,
}

/// Quadratic behaviour at one minimizer: Hessian and the ζ-sandwich
/// constant (1/C)ζ ≤ E₁ - E_min ≤ Cζ on the δ-ball.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimumQuadratic {
    pub theta: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    pub hessian_eigenvalues: Vec<f64>,
    pub c_fit: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadraticModel {
    pub minima: Vec<MinimumQuadratic>,
}

/// Phase-fixed normalized first-band eigenfunction on the cell grid.
#[derive(Clone, Debug)]
pub struct BlochFunction {
    pub model: Model,
    pub theta: Vec<f64>,
    /// Values on the grid; discrete L²(C₀) norm h^d Σ|φ|² = 1.
    pub values: Vec<Complex64>,
}

fn theta_grid(model: &Model, n_theta: usize) -> Vec<Vec<f64>> {
    let half = model.bz_halfwidths();
    let d = model.dimension();
    let mut grid: Vec<Vec<f64>> = vec![vec![]];
    for a in 0..d {
        let axis: Vec<f64> = (0..n_theta)
            .map(|j| -half[a] + 2.0 * half[a] * j as f64 / (n_theta - 1) as f64)
            .collect();
        grid = grid
            .into_iter()
            .flat_map(|base| {
                axis.iter().map(move |&t| {
                    let mut b = base.clone();
                    b.push(t);
                    b
                })
            })
            .collect();
    }
    grid
}

/// Torus distance on the supercell Brillouin zone.
fn bz_distance(a: &[f64], b: &[f64], half: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(half)
        .map(|((x, y), h)| {
            let width = 2.0 * h;
            let mut d = (x - y).abs() % width;
            if d > h.abs() {
                d = width - d;
            }
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn lowest_bands(model: &Model, theta: &[f64], n_bands: usize) -> Result<Vec<f64>, FloquetError> {
    let q = QuasiMomentum(theta.to_vec()).wrapped(model.grid().cell());
    let m = model.hamiltonian(&q)?;
    let mut vals = eig_values(&m)?;
    vals.truncate(n_bands);
    Ok(vals)
}

fn band1(model: &Model, theta: &[f64]) -> Result<f64, FloquetError> {
    Ok(lowest_bands(model, theta, 1)?[0])
}

/// Sweep the Brillouin zone: lowest `n_bands` eigenvalues at every grid
/// point. The sweep is a parallel map with a deterministic ordered
/// collect.
pub fn compute_band_structure(
    model: &Model,
    n_theta: usize,
    n_bands: usize,
) -> Result<BandStructure, FloquetError> {
    if n_theta < 8 {
        return Err(FloquetError::SweepTooCoarse(n_theta));
    }
    if n_bands < 1 {
        return Err(FloquetError::NoBands(n_bands));
    }
    let thetas = theta_grid(model, n_theta);
    let bands: Result<Vec<Vec<f64>>, FloquetError> = thetas
        .par_iter()
        .map(|t| lowest_bands(model, t, n_bands))
        .collect();
    Ok(BandStructure {
        model: model.clone(),
        n_theta,
        n_bands,
        thetas: thetas.clone(),
        bands: bands?,
    })
}

/// Coordinate-wise parabolic refinement with shrinking step. Bands are
/// only Lipschitz globally, so no eigenvalue derivatives are used.
fn refine_minimum(
    model: &Model,
    start: &[f64],
    init_step: f64,
    refine_tol: f64,
) -> Result<(Vec<f64>, f64), FloquetError> {
    let d = model.dimension();
    let cell = model.grid().cell().to_vec();
    let wrap = |t: &[f64]| QuasiMomentum(t.to_vec()).wrapped(&cell).0;
    let mut theta = wrap(start);
    let mut e = band1(model, &theta)?;
    let mut step = init_step;
    let mut guard = 0usize;
    while step > 0.5 * refine_tol && guard < 400 {
        guard += 1;
        let mut moved = 0.0f64;
        for a in 0..d {
            let mut tp = theta.clone();
            tp[a] += step;
            let mut tm = theta.clone();
            tm[a] -= step;
            let ep = band1(model, &wrap(&tp))?;
            let em = band1(model, &wrap(&tm))?;
            let denom = ep + em - 2.0 * e;
            let delta = if denom > f64::MIN_POSITIVE {
                (0.5 * step * (em - ep) / denom).clamp(-step, step)
            } else if ep < e && ep <= em {
                step
            } else if em < e {
                -step
            } else {
                0.0
            };
            if delta != 0.0 {
                let mut cand = theta.clone();
                cand[a] += delta;
                let cand = wrap(&cand);
                let ec = band1(model, &cand)?;
                if ec <= e {
                    theta = cand;
                    e = ec;
                    moved += delta.abs();
                }
            }
        }
        if moved < 0.5 * step {
            step *= 0.5;
        }
    }
    Ok((theta, e))
}

/// Locate and refine the first-band minima set Z.
pub fn find_band_minima(
    band: &BandStructure,
    refine_tol: f64,
    merge_radius: f64,
) -> Result<MinimaSet, FloquetError> {
    let model = &band.model;
    let d = model.dimension();
    let half = model.bz_halfwidths();
    let n = band.n_theta;
    let total = band.thetas.len();
    let step = 2.0 * half[0] / (n - 1) as f64;

    let grid_min = band
        .bands
        .iter()
        .map(|b| b[0])
        .fold(f64::INFINITY, f64::min);
    let grouping_tol = 1e-7 * (1.0 + grid_min.abs());

    let within = band
        .bands
        .iter()
        .filter(|b| b[0] <= grid_min + grouping_tol)
        .count();
    if 4 * within > total {
        return Err(FloquetError::FlatBandSuspected { within, total });
    }

    // grid-local minima on the θ torus
    let dims = vec![n; d];
    let neighbor = |flat: usize, axis: usize, dir: i64| -> usize {
        let mut idx = vec![0usize; d];
        let mut rem = flat;
        for a in (0..d).rev() {
            idx[a] = rem % dims[a];
            rem /= dims[a];
        }
        let m = dims[axis] as i64;
        idx[axis] = ((idx[axis] as i64 + dir).rem_euclid(m)) as usize;
        let mut out = 0usize;
        for a in 0..d {
            out = out * dims[a] + idx[a];
        }
        out
    };
    let mut candidates: Vec<usize> = Vec::new();
    for flat in 0..total {
        let v = band.bands[flat][0];
        let mut is_min = true;
        for a in 0..d {
            for dir in [-1i64, 1] {
                if band.bands[neighbor(flat, a, dir)][0] < v {
                    is_min = false;
                }
            }
        }
        if is_min {
            candidates.push(flat);
        }
    }
    if candidates.len() > 64 {
        return Err(FloquetError::FlatBandSuspected {
            within: candidates.len(),
            total,
        });
    }

    let refined: Result<Vec<(Vec<f64>, f64)>, FloquetError> = candidates
        .iter()
        .map(|&flat| refine_minimum(model, &band.thetas[flat], step, refine_tol))
        .collect();
    let mut refined = refined?;
    refined.sort_by(|a, b| {
        a.1.total_cmp(&b.1).then_with(|| {
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != std::cmp::Ordering::Equal)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });

    let e_min = refined.first().map(|r| r.1).unwrap_or(f64::INFINITY);
    let grouping_tol = 1e-7 * (1.0 + e_min.abs());

    // keep near-minimal candidates, merge nearby ones (lower value wins,
    // ties go to the lexicographically smaller θ — the sort order above)
    let mut kept: Vec<(Vec<f64>, f64)> = Vec::new();
    for (theta, value) in refined {
        if value > e_min + grouping_tol {
            continue;
        }
        if kept
            .iter()
            .all(|(t, _)| bz_distance(t, &theta, &half) > merge_radius)
        {
            kept.push((theta, value));
        }
    }

    // simplicity of the first band at each minimizer
    let mut band_gap = f64::INFINITY;
    for (theta, _) in &kept {
        let two = lowest_bands(model, theta, 2)?;
        if two.len() > 1 {
            band_gap = band_gap.min(two[1] - two[0]);
        }
    }
    let simple = band_gap > 10.0 * grouping_tol;

    Ok(MinimaSet {
        count: kept.len(),
        points: kept.iter().map(|(t, _)| t.clone()).collect(),
        e_min,
        grouping_tol,
        merge_radius,
        band_gap,
        simple,
    })
}

/// Solve a small dense real linear system by Gaussian elimination with
/// partial pivoting (used for the quadratic least-squares fit).
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv][k].abs() < 1e-300 {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in (k + 1)..n {
            let factor = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= factor * a[k][j];
            }
            b[i] -= factor * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in (k + 1)..n {
            s -= a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    Some(x)
}

fn symmetric_2x2_eigs(h: &[Vec<f64>]) -> Vec<f64> {
    let (a, b, c) = (h[0][0], h[0][1], h[1][1]);
    let tr = a + c;
    let det = a * c - b * b;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    vec![tr / 2.0 - disc, tr / 2.0 + disc]
}

/// Quadratic least-squares fit at each minimizer and the ζ-sandwich
/// verification over the δ-ball.
pub fn quadratic_model(
    band: &BandStructure,
    minima: &MinimaSet,
    delta: f64,
) -> Result<QuadraticModel, FloquetError> {
    let model = &band.model;
    let d = model.dimension();
    let half = model.bz_halfwidths();
    let step = 2.0 * half[0] / (band.n_theta - 1) as f64;
    if delta < 3.0 * step {
        return Err(FloquetError::RadiusTooSmall { delta, step });
    }

    let mut out = Vec::with_capacity(minima.points.len());
    for center in &minima.points {
        // ball points with signed torus offsets
        let mut ball: Vec<(Vec<f64>, f64)> = Vec::new();
        for (theta, bands) in band.thetas.iter().zip(&band.bands) {
            if bz_distance(theta, center, &half) <= delta {
                let offset: Vec<f64> = theta
                    .iter()
                    .zip(center)
                    .zip(&half)
                    .map(|((t, c), h)| {
                        let width = 2.0 * h;
                        let mut u = t - c;
                        while u > *h {
                            u -= width;
                        }
                        while u < -h {
                            u += width;
                        }
                        u
                    })
                    .collect();
                ball.push((offset, bands[0]));
            }
        }

        // design: constant + linear + quadratic monomials
        let terms = 1 + d + d * (d + 1) / 2;
        let features = |u: &[f64]| -> Vec<f64> {
            let mut row = Vec::with_capacity(terms);
            row.push(1.0);
            row.extend_from_slice(u);
            for i in 0..d {
                for j in i..d {
                    row.push(u[i] * u[j]);
                }
            }
            row
        };
        let mut normal = vec![vec![0.0; terms]; terms];
        let mut rhs = vec![0.0; terms];
        for (u, e) in &ball {
            let row = features(u);
            for i in 0..terms {
                for j in 0..terms {
                    normal[i][j] += row[i] * row[j];
                }
                rhs[i] += row[i] * e;
            }
        }
        let coeffs =
            solve_dense(normal, rhs).ok_or(FloquetError::DegenerateMinimum(0.0))?;

        // Hessian from the quadratic coefficients
        let mut hessian = vec![vec![0.0; d]; d];
        let mut idx = 1 + d;
        for i in 0..d {
            for j in i..d {
                if i == j {
                    hessian[i][j] = 2.0 * coeffs[idx];
                } else {
                    hessian[i][j] = coeffs[idx];
                    hessian[j][i] = coeffs[idx];
                }
                idx += 1;
            }
        }
        let eigs = if d == 1 {
            vec![hessian[0][0]]
        } else {
            symmetric_2x2_eigs(&hessian)
        };
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < DEGENERACY_THRESHOLD {
            return Err(FloquetError::DegenerateMinimum(min_eig));
        }

        // sandwich constant over the ball
        let zeta_floor = (0.25 * step) * (0.25 * step);
        let mut ratio_min = f64::INFINITY;
        let mut ratio_max: f64 = 0.0;
        let mut offending: Vec<Vec<f64>> = Vec::new();
        for (u, e) in &ball {
            let zeta: f64 = u.iter().map(|x| x * x).sum();
            if zeta < zeta_floor {
                continue;
            }
            let num = e - minima.e_min;
            if num <= 0.0 {
                offending.push(u.iter().zip(center).map(|(a, b)| a + b).collect());
                continue;
            }
            let r = num / zeta;
            ratio_min = ratio_min.min(r);
            ratio_max = ratio_max.max(r);
        }
        if !offending.is_empty() || !ratio_min.is_finite() || ratio_min <= 0.0 {
            return Err(FloquetError::SandwichViolation { offending });
        }
        let c_fit = ratio_max.max(1.0 / ratio_min).max(1.0);

        out.push(MinimumQuadratic {
            theta: center.clone(),
            hessian,
            hessian_eigenvalues: eigs,
            c_fit,
            delta,
        });
    }
    Ok(QuadraticModel { minima: out })
}

/// Normalized first-band eigenfunction with the deterministic phase
/// rule: the entry of largest modulus is made real positive (ties go to
/// the lowest grid index). Downstream definiteness classification is
/// invariant under any per-point rephasing, so the rule carries no
/// mathematical commitment.
pub fn bloch_eigenfunction(model: &Model, theta: &[f64]) -> Result<BlochFunction, FloquetError> {
    let q = QuasiMomentum(theta.to_vec()).wrapped(model.grid().cell());
    let m = model.hamiltonian(&q)?;
    let decomp = eig_hermitian(&m)?;
    let v = &decomp.vectors[0];
    let h = model.grid().spacing();
    let d = model.dimension() as i32;
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = 1.0 / (norm * h.powi(d).sqrt());

    let mut best = 0usize;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() {
            best = i;
        }
    }
    let phase = if v[best].norm() > 0.0 {
        v[best].conj() / v[best].norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let values: Vec<Complex64> = v.iter().map(|z| z * phase * scale).collect();
    Ok(BlochFunction {
        model: model.clone(),
        theta: theta.to_vec(),
        values,
    })
}

/// Minima sets along a λ ladder with nearest-point matching.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimaTrack {
    pub lambdas: Vec<f64>,
    pub sets: Vec<MinimaSet>,
    /// Max displacement between matched minima of consecutive steps.
    pub max_displacements: Vec<f64>,
    /// Ladder indices where the minima count changed (reported, not fatal).
    pub topology_changes: Vec<usize>,
}

pub fn track_minima_in_lambda(
    model: &Model,
    lambdas: &[f64],
    n_theta: usize,
    refine_tol: f64,
    merge_radius: f64,
) -> Result<MinimaTrack, FloquetError> {
    let half = model.bz_halfwidths();
    let mut sets: Vec<MinimaSet> = Vec::with_capacity(lambdas.len());
    let mut displacements = Vec::new();
    let mut topology_changes = Vec::new();
    for (i, &lambda) in lambdas.iter().enumerate() {
        let m = model.with_lambda(lambda);
        let band = compute_band_structure(&m, n_theta, 1)?;
        let set = find_band_minima(&band, refine_tol, merge_radius)?;
        if let Some(prev) = sets.last() {
            if prev.count != set.count {
                topology_changes.push(i);
            }
            let mut worst = 0.0f64;
            for p in &set.points {
                let nearest = prev
                    .points
                    .iter()
                    .map(|q| bz_distance(p, q, &half))
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(nearest);
            }
            displacements.push(worst);
        }
        sets.push(set);
    }
    Ok(MinimaTrack {
        lambdas: lambdas.to_vec(),
        sets,
        max_displacements: displacements,
        topology_changes,
    })
}

//! Finite-difference discretization of -Δ + W_per + λ Σ_γ ω_γ f(·-γ)
//! on a K-supercell with Bloch (quasi-periodic) or Dirichlet boundary
//! conditions.
//!
//! Second-order central differences on a cell-centered grid; Bloch
//! phases live on the wrap-around links only (boundary-phase gauge).
//! A per-link gauge variant with the identical spectrum is kept as a
//! validation oracle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::HermitianMatrix;
use crate::potential::{ConfigKind, DisorderConfiguration, PeriodicBackground, SingleSite};

/// Dense assembly is rejected above this order.
pub const MAX_DENSE_ORDER: usize = 4096;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("points per unit cell must be >= 4, got {0}")]
    GridTooCoarse(usize),
    #[error("matrix order {0} exceeds the dense cap {MAX_DENSE_ORDER}")]
    ExplosionGuard(usize),
    #[error("configuration period {config:?} does not divide the supercell {cell:?}")]
    PeriodMismatch { config: Vec<usize>, cell: Vec<usize> },
    #[error("dimension mismatch: grid {grid}, potential {potential}")]
    IncompatibleDimensions { grid: usize, potential: usize },
    #[error("boxed configuration dims {config:?} do not match the box {cell:?}")]
    SizeMismatch { config: Vec<usize>, cell: Vec<usize> },
    #[error("coupling strength must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("quasimomentum has {got} components, expected {expected}")]
    BadQuasimomentum { expected: usize, got: usize },
}

/// Uniform cell-centered grid over a K-supercell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    dimension: usize,
    cell: Vec<usize>,
    points_per_unit: usize,
}

impl CellGrid {
    pub fn new(
        dimension: usize,
        cell: Vec<usize>,
        points_per_unit: usize,
    ) -> Result<Self, OperatorError> {
        if points_per_unit < 4 {
            return Err(OperatorError::GridTooCoarse(points_per_unit));
        }
        if cell.len() != dimension {
            return Err(OperatorError::IncompatibleDimensions {
                grid: dimension,
                potential: cell.len(),
            });
        }
        let g = Self {
            dimension,
            cell,
            points_per_unit,
        };
        let n = g.total_points();
        if n > MAX_DENSE_ORDER {
            return Err(OperatorError::ExplosionGuard(n));
        }
        Ok(g)
    }

    pub fn unit(dimension: usize, points_per_unit: usize) -> Result<Self, OperatorError> {
        Self::new(dimension, vec![1; dimension], points_per_unit)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cell(&self) -> &[usize] {
        &self.cell
    }

    pub fn points_per_unit(&self) -> usize {
        self.points_per_unit
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points_per_unit as f64
    }

    /// Points per axis: K_a · n.
    pub fn dims(&self) -> Vec<usize> {
        self.cell
            .iter()
            .map(|k| k * self.points_per_unit)
            .collect()
    }

    pub fn total_points(&self) -> usize {
        self.dims().iter().product()
    }

    /// Cell-centered node x_j = -1/2 + (j + 1/2) h per axis.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        let dims = self.dims();
        let h = self.spacing();
        let mut idx = vec![0usize; self.dimension];
        let mut rem = flat;
        for a in (0..self.dimension).rev() {
            idx[a] = rem % dims[a];
            rem /= dims[a];
        }
        idx.iter().map(|&j| -0.5 + (j as f64 + 0.5) * h).collect()
    }

    fn multi_index(&self, flat: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut idx = vec![0usize; self.dimension];
        let mut rem = flat;
        for a in (0..self.dimension).rev() {
            idx[a] = rem % dims[a];
            rem /= dims[a];
        }
        idx
    }

    fn flatten(&self, idx: &[usize]) -> usize {
        let dims = self.dims();
        let mut flat = 0usize;
        for a in 0..self.dimension {
            flat = flat * dims[a] + idx[a];
        }
        flat
    }
}

/// Bloch phase vector θ; one component per axis, canonical range
/// [-π/K_a, π/K_a] for a K-supercell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiMomentum(pub Vec<f64>);

impl QuasiMomentum {
    pub fn zero(dimension: usize) -> Self {
        Self(vec![0.0; dimension])
    }

    /// Wrap componentwise into the supercell Brillouin zone.
    pub fn wrapped(&self, cell: &[usize]) -> Self {
        let wrapped = self
            .0
            .iter()
            .zip(cell)
            .map(|(&t, &k)| {
                let width = 2.0 * std::f64::consts::PI / k as f64;
                let mut v = (t + width / 2.0).rem_euclid(width) - width / 2.0;
                if v < -width / 2.0 {
                    v += width;
                }
                v
            })
            .collect();
        Self(wrapped)
    }
}

fn check_model(
    grid: &CellGrid,
    background: &PeriodicBackground,
    single_site: &SingleSite,
    lambda: f64,
    config: &DisorderConfiguration,
) -> Result<(), OperatorError> {
    if background.dimension() != grid.dimension() || single_site.dimension() != grid.dimension() {
        return Err(OperatorError::IncompatibleDimensions {
            grid: grid.dimension(),
            potential: background.dimension(),
        });
    }
    if lambda < 0.0 {
        return Err(OperatorError::NegativeLambda(lambda));
    }
    if config.dimension != grid.dimension() {
        return Err(OperatorError::IncompatibleDimensions {
            grid: grid.dimension(),
            potential: config.dimension,
        });
    }
    Ok(())
}

/// W_per(x_j) + λ Σ_γ ω_γ f(x_j - γ) over the grid.
fn potential_diagonal(
    grid: &CellGrid,
    background: &PeriodicBackground,
    single_site: &SingleSite,
    lambda: f64,
    config: &DisorderConfiguration,
) -> Vec<f64> {
    let d = grid.dimension();
    let total = grid.total_points();
    let mut diag = vec![0.0f64; total];
    // lattice sites of the supercell/box: {0..K_a-1}^d; f is supported
    // strictly inside each site's unit cell, so no wrap terms arise.
    let sites: Vec<Vec<i64>> = {
        let mut out: Vec<Vec<i64>> = vec![vec![]];
        for &k in grid.cell() {
            out = out
                .into_iter()
                .flat_map(|base| {
                    (0..k as i64).map(move |g| {
                        let mut b = base.clone();
                        b.push(g);
                        b
                    })
                })
                .collect();
        }
        out
    };
    let mut shifted = vec![0.0f64; d];
    for flat in 0..total {
        let x = grid.coords(flat);
        let mut v = background.eval(&x);
        if lambda > 0.0 {
            for site in &sites {
                for a in 0..d {
                    shifted[a] = x[a] - site[a] as f64;
                }
                let fv = single_site.eval(&shifted);
                if fv != 0.0 {
                    v += lambda * config.value_at(site) * fv;
                }
            }
        }
        diag[flat] = v;
    }
    diag
}

#[derive(Clone, Copy, PartialEq)]
enum Gauge {
    BoundaryPhase,
    PerLink,
}

fn assemble_bloch_gauged(
    grid: &CellGrid,
    background: &PeriodicBackground,
    single_site: &SingleSite,
    lambda: f64,
    config: &DisorderConfiguration,
    theta: &QuasiMomentum,
    gauge: Gauge,
) -> Result<HermitianMatrix, OperatorError> {
    check_model(grid, background, single_site, lambda, config)?;
    if theta.0.len() != grid.dimension() {
        return Err(OperatorError::BadQuasimomentum {
            expected: grid.dimension(),
            got: theta.0.len(),
        });
    }
    if config.kind != ConfigKind::Boxed {
        let divides = config
            .period
            .iter()
            .zip(grid.cell())
            .all(|(p, k)| k % p == 0);
        if !divides {
            return Err(OperatorError::PeriodMismatch {
                config: config.period.clone(),
                cell: grid.cell().to_vec(),
            });
        }
    } else {
        return Err(OperatorError::SizeMismatch {
            config: config.period.clone(),
            cell: grid.cell().to_vec(),
        });
    }

    let d = grid.dimension();
    let dims = grid.dims();
    let total = grid.total_points();
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let diag = potential_diagonal(grid, background, single_site, lambda, config);

    let mut m = HermitianMatrix::zeros(total);
    for flat in 0..total {
        m.set(
            flat,
            flat,
            Complex64::new(2.0 * d as f64 * inv_h2 + diag[flat], 0.0),
        );
        let idx = grid.multi_index(flat);
        for a in 0..d {
            let mut nb = idx.clone();
            let wrap = idx[a] + 1 == dims[a];
            nb[a] = if wrap { 0 } else { idx[a] + 1 };
            let nb_flat = grid.flatten(&nb);
            let phase = match gauge {
                Gauge::BoundaryPhase => {
                    if wrap {
                        Complex64::from_polar(1.0, theta.0[a] * grid.cell()[a] as f64)
                    } else {
                        Complex64::new(1.0, 0.0)
                    }
                }
                // θ_a·h per link sums to θ_a·K_a around the loop
                Gauge::PerLink => Complex64::from_polar(1.0, theta.0[a] * h),
            };
            let hop = -inv_h2 * phase;
            m.add(flat, nb_flat, hop);
            m.add(nb_flat, flat, hop.conj());
        }
    }
    Ok(m)
}

/// Bloch-periodic Hamiltonian matrix at quasimomentum θ: boundary-phase
/// gauge, Hermitian by construction.
pub fn assemble_bloch_hamiltonian(
    grid: &CellGrid,
    background: &PeriodicBackground,
    single_site: &SingleSite,
    lambda: f64,
    config: &DisorderConfiguration,
    theta: &QuasiMomentum,
) -> Result<HermitianMatrix, OperatorError> {
    assemble_bloch_gauged(
        grid,
        background,
        single_site,
        lambda,
        config,
        theta,
        Gauge::BoundaryPhase,
    )
}

/// Gauge-equivalent assembly with the phase distributed over every
/// link. Same spectrum as [`assemble_bloch_hamiltonian`]; used to
/// cross-check the boundary-phase gauge.
pub fn assemble_bloch_per_link_gauge(
    grid: &CellGrid,
    background: &PeriodicBackground,
    single_site: &SingleSite,
    lambda: f64,
    config: &DisorderConfiguration,
    theta: &QuasiMomentum,
) -> Result<HermitianMatrix, OperatorError> {
    assemble_bloch_gauged(
        grid,
        background,
        single_site,
        lambda,
        config,
        theta,
        Gauge::PerLink,
    )
}

/// Finite-volume comparison operator: -Δ with Dirichlet boundary plus
/// the potential diagonal, over an L-box.
pub fn assemble_dirichlet_box(
    grid: &CellGrid,
    background: &PeriodicBackground,
    single_site: &SingleSite,
    lambda: f64,
    config: &DisorderConfiguration,
) -> Result<HermitianMatrix, OperatorError> {
    check_model(grid, background, single_site, lambda, config)?;
    if config.period != grid.cell() {
        return Err(OperatorError::SizeMismatch {
            config: config.period.clone(),
            cell: grid.cell().to_vec(),
        });
    }

    let d = grid.dimension();
    let dims = grid.dims();
    let total = grid.total_points();
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let diag = potential_diagonal(grid, background, single_site, lambda, config);

    let mut m = HermitianMatrix::zeros(total);
    for flat in 0..total {
        m.set(
            flat,
            flat,
            Complex64::new(2.0 * d as f64 * inv_h2 + diag[flat], 0.0),
        );
        let idx = grid.multi_index(flat);
        for a in 0..d {
            if idx[a] + 1 == dims[a] {
                continue; // Dirichlet: no wrap link
            }
            let mut nb = idx.clone();
            nb[a] = idx[a] + 1;
            let nb_flat = grid.flatten(&nb);
            let hop = Complex64::new(-inv_h2, 0.0);
            m.add(flat, nb_flat, hop);
            m.add(nb_flat, flat, hop);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eig_values;
    use crate::potential::{build_single_site, Bump};

    fn trivial_site() -> SingleSite {
        build_single_site(
            vec![Bump {
                center: vec![0.0],
                radius: 0.1,
                amplitude: 1.0,
            }],
            1,
        )
        .unwrap()
    }

    #[test]
    fn free_circulant_spectrum_n4() {
        let grid = CellGrid::unit(1, 4).unwrap();
        let cfg = DisorderConfiguration::constant(1, 0.0, (0.0, 1.0)).unwrap();
        let m = assemble_bloch_hamiltonian(
            &grid,
            &PeriodicBackground::zero(1),
            &trivial_site(),
            0.0,
            &cfg,
            &QuasiMomentum::zero(1),
        )
        .unwrap();
        assert!(m.is_hermitian());
        let vals = eig_values(&m).unwrap();
        let expect = [0.0, 32.0, 32.0, 64.0];
        for (v, e) in vals.iter().zip(expect) {
            assert!((v - e).abs() < 1e-9, "{vals:?}");
        }
    }

    #[test]
    fn dirichlet_closed_form_n4() {
        let grid = CellGrid::unit(1, 4).unwrap();
        let cfg = DisorderConfiguration::boxed(1, vec![1], vec![0.0], (0.0, 1.0)).unwrap();
        let m = assemble_dirichlet_box(
            &grid,
            &PeriodicBackground::zero(1),
            &trivial_site(),
            0.0,
            &cfg,
        )
        .unwrap();
        let vals = eig_values(&m).unwrap();
        let h = 0.25;
        for (k, v) in (1..=4).zip(&vals) {
            let e = (2.0 - 2.0 * (k as f64 * std::f64::consts::PI / 5.0).cos()) / (h * h);
            assert!((v - e).abs() < 1e-9, "{vals:?}");
        }
    }

    #[test]
    fn dirichlet_dominates_periodic_ground_state() {
        let w = PeriodicBackground::cosine(1, 1.0);
        let f = trivial_site();
        let grid = CellGrid::unit(1, 32).unwrap();
        let cfg_p = DisorderConfiguration::constant(1, 0.5, (0.0, 1.0)).unwrap();
        let cfg_b = DisorderConfiguration::boxed(1, vec![1], vec![0.5], (0.0, 1.0)).unwrap();
        let per = assemble_bloch_hamiltonian(&grid, &w, &f, 0.7, &cfg_p, &QuasiMomentum::zero(1))
            .unwrap();
        let dir = assemble_dirichlet_box(&grid, &w, &f, 0.7, &cfg_b).unwrap();
        let e_per = eig_values(&per).unwrap()[0];
        let e_dir = eig_values(&dir).unwrap()[0];
        assert!(e_dir >= e_per - 1e-10);
    }

    #[test]
    fn gauge_variants_share_spectrum() {
        let w = PeriodicBackground::cosine(1, 1.0);
        let f = trivial_site();
        let grid = CellGrid::unit(1, 64).unwrap();
        let cfg = DisorderConfiguration::constant(1, 0.0, (0.0, 1.0)).unwrap();
        let theta = QuasiMomentum(vec![std::f64::consts::PI / 3.0]);
        let a = assemble_bloch_hamiltonian(&grid, &w, &f, 0.0, &cfg, &theta).unwrap();
        let b = assemble_bloch_per_link_gauge(&grid, &w, &f, 0.0, &cfg, &theta).unwrap();
        let va = eig_values(&a).unwrap();
        let vb = eig_values(&b).unwrap();
        assert!((va[0] - vb[0]).abs() < 1e-10);
        for (x, y) in va.iter().zip(&vb).take(8) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn theta_reflection_symmetry_real_potential() {
        let w = PeriodicBackground::cosine(1, 1.0);
        let f = trivial_site();
        let grid = CellGrid::unit(1, 32).unwrap();
        let cfg = DisorderConfiguration::constant(1, 1.0, (0.0, 1.0)).unwrap();
        let plus = assemble_bloch_hamiltonian(&grid, &w, &f, 0.3, &cfg, &QuasiMomentum(vec![1.1]))
            .unwrap();
        let minus =
            assemble_bloch_hamiltonian(&grid, &w, &f, 0.3, &cfg, &QuasiMomentum(vec![-1.1]))
                .unwrap();
        let vp = eig_values(&plus).unwrap();
        let vm = eig_values(&minus).unwrap();
        for (x, y) in vp.iter().zip(&vm) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn lambda_zero_config_independent() {
        let w = PeriodicBackground::cosine(1, 1.0);
        let f = trivial_site();
        let grid = CellGrid::new(1, vec![2], 16).unwrap();
        let theta = QuasiMomentum(vec![0.4]);
        let c1 = DisorderConfiguration::periodic(1, vec![2], vec![0.0, 1.0], (0.0, 1.0)).unwrap();
        let c2 = DisorderConfiguration::constant(1, 1.0, (0.0, 1.0)).unwrap();
        let a = assemble_bloch_hamiltonian(&grid, &w, &f, 0.0, &c1, &theta).unwrap();
        let b = assemble_bloch_hamiltonian(&grid, &w, &f, 0.0, &c2, &theta).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn period_mismatch_rejected() {
        let w = PeriodicBackground::zero(1);
        let f = trivial_site();
        let grid = CellGrid::new(1, vec![3], 8).unwrap();
        let cfg = DisorderConfiguration::periodic(1, vec![2], vec![0.0, 1.0], (0.0, 1.0)).unwrap();
        let err = assemble_bloch_hamiltonian(&grid, &w, &f, 1.0, &cfg, &QuasiMomentum::zero(1))
            .unwrap_err();
        assert!(matches!(err, OperatorError::PeriodMismatch { .. }));
    }

    #[test]
    fn form_monotonicity_for_nonpositive_site() {
        // f <= 0: raising couplings sitewise lowers every eigenvalue.
        let f = build_single_site(
            vec![Bump {
                center: vec![0.0],
                radius: 0.2,
                amplitude: -1.0,
            }],
            1,
        )
        .unwrap();
        let w = PeriodicBackground::cosine(1, 1.0);
        let grid = CellGrid::new(1, vec![2], 16).unwrap();
        let lo = DisorderConfiguration::periodic(1, vec![2], vec![0.2, 0.5], (0.0, 1.0)).unwrap();
        let hi = DisorderConfiguration::periodic(1, vec![2], vec![0.7, 0.9], (0.0, 1.0)).unwrap();
        let theta = QuasiMomentum(vec![0.3]);
        let ma = assemble_bloch_hamiltonian(&grid, &w, &f, 1.0, &lo, &theta).unwrap();
        let mb = assemble_bloch_hamiltonian(&grid, &w, &f, 1.0, &hi, &theta).unwrap();
        let va = eig_values(&ma).unwrap();
        let vb = eig_values(&mb).unwrap();
        for (a, b) in va.iter().zip(&vb) {
            assert!(b <= &(a + 1e-10));
        }
    }
}

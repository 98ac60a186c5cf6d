//! The m×m coupling matrix A(λ) built from the single-site potential
//! and the first-band eigenfunctions at the band minima, its
//! definiteness class, and the ladder scan for an admissible coupling
//! threshold.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floquet::{
    bloch_eigenfunction, compute_band_structure, find_band_minima, BlochFunction, FloquetError,
    MinimaSet,
};
use crate::matrix::HermitianMatrix;
use crate::model::Model;

pub const DEFAULT_SINGULAR_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("minima and eigenfunctions come from different models")]
    MismatchedModel,
    #[error("eigenfunction count {got} does not match minima count {want}")]
    CountMismatch { got: usize, want: usize },
    #[error("A(0) is {0:?}; the threshold scan needs a definite matrix")]
    NotDefiniteAtZero(Definiteness),
    #[error("λ ladder must be ascending and start at 0")]
    BadLadder,
    #[error(transparent)]
    Floquet(#[from] FloquetError),
    #[error(transparent)]
    Eigen(#[from] crate::eigen::EigenError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Definiteness {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
    NumericallySingular,
}

mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }
}

/// A(λ) with A_{k,k'} = ⟨f φ₁(·,θ_k), φ₁(·,θ_{k'})⟩ on the cell, via
/// the same midpoint quadrature as the operator discretization. Raw
/// off-diagonals depend on the eigenfunction phase convention; only the
/// Hermitian-part eigenvalues and the class are convention-independent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub order: usize,
    /// Row-major entries as [re, im] pairs.
    #[serde(with = "complex_pairs")]
    pub entries: Vec<Complex64>,
    pub lambda: f64,
    pub class: Definiteness,
    /// Eigenvalues of the Hermitian part (A + A*)/2, ascending.
    pub eigenvalues: Vec<f64>,
    pub singular_tol: f64,
}

impl CouplingMatrix {
    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.entries[k * self.order + l]
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.order {
            for l in 0..self.order {
                worst = worst.max((self.get(k, l) - self.get(l, k).conj()).norm());
            }
        }
        worst
    }

    fn hermitian_part(&self) -> HermitianMatrix {
        HermitianMatrix::from_fn(self.order, |k, l| {
            0.5 * (self.get(k, l) + self.get(l, k).conj())
        })
    }
}

/// Spectral norm proxy: largest |eigenvalue| of the Hermitian part.
fn classify(eigenvalues: &[f64], singular_tol: f64) -> Definiteness {
    let scale = eigenvalues
        .iter()
        .map(|e| e.abs())
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Definiteness::NumericallySingular;
    }
    let cut = singular_tol * scale;
    if eigenvalues.iter().any(|e| e.abs() <= cut) {
        Definiteness::NumericallySingular
    } else if eigenvalues.iter().all(|&e| e > cut) {
        Definiteness::PositiveDefinite
    } else if eigenvalues.iter().all(|&e| e < -cut) {
        Definiteness::NegativeDefinite
    } else {
        Definiteness::Indefinite
    }
}

/// Classify a Hermitian matrix from the eigenvalues of its Hermitian
/// part against `singular_tol` relative to the spectral norm.
pub fn classify_definiteness(eigenvalues: &[f64], singular_tol: f64) -> Definiteness {
    classify(eigenvalues, singular_tol)
}

/// Assemble A(λ) from the minima set and one eigenfunction per
/// minimizer (in the same order).
pub fn coupling_matrix(
    model: &Model,
    minima: &MinimaSet,
    eigenfunctions: &[BlochFunction],
    singular_tol: f64,
) -> Result<CouplingMatrix, CouplingError> {
    if eigenfunctions.len() != minima.count {
        return Err(CouplingError::CountMismatch {
            got: eigenfunctions.len(),
            want: minima.count,
        });
    }
    for phi in eigenfunctions {
        if phi.model != *model {
            return Err(CouplingError::MismatchedModel);
        }
    }
    let grid = model.grid();
    let weight = grid.spacing().powi(model.dimension() as i32);
    // f sampled over the supercell: Σ_γ f(x - γ) with a single bump per
    // unit cell and f supported strictly inside it.
    let f_values: Vec<f64> = (0..grid.total_points())
        .map(|j| {
            let x = grid.coords(j);
            let mut total = 0.0;
            let mut site = vec![0i64; model.dimension()];
            loop {
                let shifted: Vec<f64> = x
                    .iter()
                    .zip(&site)
                    .map(|(xi, &g)| xi - g as f64)
                    .collect();
                total += model.family.single_site.eval(&shifted);
                // odometer over the supercell sites
                let mut axis = model.dimension();
                for a in (0..model.dimension()).rev() {
                    site[a] += 1;
                    if site[a] < grid.cell()[a] as i64 {
                        axis = a;
                        break;
                    }
                    site[a] = 0;
                }
                if axis == model.dimension() {
                    break;
                }
            }
            total
        })
        .collect();

    let m = minima.count;
    let mut entries = vec![Complex64::new(0.0, 0.0); m * m];
    for k in 0..m {
        for l in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &f) in f_values.iter().enumerate() {
                acc += f * eigenfunctions[k].values[j] * eigenfunctions[l].values[j].conj();
            }
            entries[k * m + l] = weight * acc;
        }
    }

    let mut cm = CouplingMatrix {
        order: m,
        entries,
        lambda: model.lambda,
        class: Definiteness::NumericallySingular,
        eigenvalues: Vec::new(),
        singular_tol,
    };
    let herm = cm.hermitian_part();
    cm.eigenvalues = crate::eigen::eig_values(&herm)?;
    cm.class = classify(&cm.eigenvalues, singular_tol);
    Ok(cm)
}

/// Full minima-then-A pipeline at one λ, starting from the constant
/// lower-extreme realization (the reference configuration; at λ=0 the
/// configuration is immaterial).
pub fn coupling_at_lambda(
    model: &Model,
    n_theta: usize,
    refine_tol: f64,
    merge_radius: f64,
    singular_tol: f64,
) -> Result<(MinimaSet, CouplingMatrix), CouplingError> {
    let band = compute_band_structure(model, n_theta, 1)?;
    let minima = find_band_minima(&band, refine_tol, merge_radius)?;
    let phis: Result<Vec<BlochFunction>, FloquetError> = minima
        .points
        .iter()
        .map(|t| bloch_eigenfunction(model, t))
        .collect();
    let a = coupling_matrix(model, &minima, &phis?, singular_tol)?;
    Ok((minima, a))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdScan {
    pub lambdas: Vec<f64>,
    pub matrices: Vec<CouplingMatrix>,
    pub classes: Vec<Definiteness>,
    pub min_abs_eigenvalues: Vec<f64>,
    pub class_at_zero: Definiteness,
    /// Largest ladder λ up to which the definite direction keeps margin
    /// ≥ C/2, where C is the margin of A(0). An empirical estimate, not
    /// the true threshold.
    pub lambda0_estimate: f64,
}

/// Recompute minima and A(λ) along an ascending ladder from 0 and
/// report how far the definiteness margin of A(0) survives.
pub fn lambda_threshold_scan(
    model: &Model,
    lambdas: &[f64],
    n_theta: usize,
    refine_tol: f64,
    merge_radius: f64,
    singular_tol: f64,
) -> Result<ThresholdScan, CouplingError> {
    if lambdas.is_empty()
        || lambdas[0] != 0.0
        || lambdas.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(CouplingError::BadLadder);
    }
    let results: Result<Vec<CouplingMatrix>, CouplingError> = lambdas
        .par_iter()
        .map(|&lambda| {
            let m = model.with_lambda(lambda);
            coupling_at_lambda(&m, n_theta, refine_tol, merge_radius, singular_tol)
                .map(|(_, a)| a)
        })
        .collect();
    let matrices = results?;

    let class_at_zero = matrices[0].class;
    let zero_margin = match class_at_zero {
        Definiteness::PositiveDefinite => matrices[0]
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min),
        Definiteness::NegativeDefinite => -matrices[0]
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max),
        other => return Err(CouplingError::NotDefiniteAtZero(other)),
    };

    let margin = |a: &CouplingMatrix| -> f64 {
        match class_at_zero {
            Definiteness::PositiveDefinite => {
                a.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
            }
            _ => -a
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max),
        }
    };
    let mut lambda0 = 0.0;
    for (a, &lambda) in matrices.iter().zip(lambdas) {
        if a.class == class_at_zero && margin(a) >= 0.5 * zero_margin {
            lambda0 = lambda;
        } else {
            break;
        }
    }

    let classes = matrices.iter().map(|a| a.class).collect();
    let min_abs = matrices
        .iter()
        .map(|a| {
            a.eigenvalues
                .iter()
                .map(|e| e.abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(ThresholdScan {
        lambdas: lambdas.to_vec(),
        matrices,
        classes,
        min_abs_eigenvalues: min_abs,
        class_at_zero,
        lambda0_estimate: lambda0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelFamily;
    use crate::potential::{build_single_site, Bump, DisorderConfiguration, PeriodicBackground};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn site_1d(bumps: Vec<(f64, f64, f64)>) -> crate::potential::SingleSite {
        build_single_site(
            bumps
                .into_iter()
                .map(|(c, r, a)| Bump {
                    center: vec![c],
                    radius: r,
                    amplitude: a,
                })
                .collect(),
            1,
        )
        .unwrap()
    }

    fn model_1d(
        background: PeriodicBackground,
        site: crate::potential::SingleSite,
        n: usize,
        lambda: f64,
    ) -> Model {
        let fam = ModelFamily::new(1, n, background, site, (0.0, 1.0)).unwrap();
        fam.model(
            lambda,
            DisorderConfiguration::constant(1, 0.0, (0.0, 1.0)).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn free_model_scalar_is_site_integral() {
        let site = site_1d(vec![(0.0, 0.2, 1.0)]);
        let integral = site.integral(4096);
        let model = model_1d(PeriodicBackground::zero(1), site, 128, 0.0);
        let (minima, a) =
            coupling_at_lambda(&model, 33, 1e-6, 0.6, DEFAULT_SINGULAR_TOL).unwrap();
        assert_eq!(minima.count, 1);
        assert_eq!(a.order, 1);
        assert!(a.get(0, 0).im.abs() < 1e-12);
        assert!(
            (a.get(0, 0).re - integral).abs() < 1e-6,
            "{} vs {}",
            a.get(0, 0).re,
            integral
        );
        assert_eq!(a.class, Definiteness::PositiveDefinite);
    }

    #[test]
    fn hermiticity_contract() {
        let site = site_1d(vec![(-0.3, 0.12, 1.0), (0.15, 0.1, -0.4)]);
        let model = model_1d(PeriodicBackground::cosine(1, 1.0), site, 64, 0.0);
        let (_, a) = coupling_at_lambda(&model, 33, 1e-6, 0.6, DEFAULT_SINGULAR_TOL).unwrap();
        let scale = a
            .entries
            .iter()
            .map(|z| z.norm())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        assert!(
            a.hermiticity_defect() <= 1e-10 * scale,
            "m={} defect={} scale={scale} entries={:?}",
            a.order,
            a.hermiticity_defect(),
            a.entries
        );
    }

    #[test]
    fn cosine_scalar_matches_richardson_oracle() {
        let site = site_1d(vec![(-0.3, 0.15, 1.0), (0.15, 0.15, -0.4)]);
        // W even => first band minimum sits at θ=0 exactly, so the
        // entry can be evaluated there directly at each resolution
        let entry = |n: usize| -> f64 {
            let model = model_1d(PeriodicBackground::cosine(1, 0.5), site.clone(), n, 0.0);
            let phi = crate::floquet::bloch_eigenfunction(&model, &[0.0]).unwrap();
            let minima = MinimaSet {
                count: 1,
                points: vec![vec![0.0]],
                e_min: 0.0,
                grouping_tol: 1e-7,
                merge_radius: 0.5,
                band_gap: 1.0,
                simple: true,
            };
            let a = coupling_matrix(&model, &minima, &[phi], 1e-8).unwrap();
            a.get(0, 0).re
        };
        let coarse = entry(128);
        let a1 = entry(256);
        let a2 = entry(512);
        // second-order Richardson extrapolation of the fine pair
        let limit = a2 + (a2 - a1) / 3.0;
        assert!(
            (coarse - limit).abs() < 1e-6,
            "{coarse} vs extrapolated {limit}"
        );
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classify_definiteness(&[2.0, 3.0], 1e-8),
            Definiteness::PositiveDefinite
        );
        assert_eq!(
            classify_definiteness(&[-1.0, 3.0], 1e-8),
            Definiteness::Indefinite
        );
        assert_eq!(
            classify_definiteness(&[0.0], 1e-8),
            Definiteness::NumericallySingular
        );
        assert_eq!(
            classify_definiteness(&[-3.0, -2.0], 1e-8),
            Definiteness::NegativeDefinite
        );
        assert_eq!(
            classify_definiteness(&[1e-12, 1.0], 1e-8),
            Definiteness::NumericallySingular
        );
    }

    #[test]
    fn rephasing_invariance() {
        // invariance of Hermitian-part eigenvalues under diagonal
        // unitary conjugation of a fixed complex matrix
        let base = [
            Complex64::new(0.8, 0.0),
            Complex64::new(0.1, 0.3),
            Complex64::new(0.1, -0.3),
            Complex64::new(-0.5, 0.0),
        ];
        let eig_of = |m: &[Complex64]| -> Vec<f64> {
            let h = HermitianMatrix::from_fn(2, |i, j| 0.5 * (m[2 * i + j] + m[2 * j + i].conj()));
            crate::eigen::eig_values(&h).unwrap()
        };
        let reference = eig_of(&base);
        let class0 = classify_definiteness(&reference, 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let alphas: Vec<f64> = (0..2)
                .map(|_| rng.gen::<f64>() * std::f64::consts::TAU)
                .collect();
            let u: Vec<Complex64> = alphas
                .iter()
                .map(|&a| Complex64::new(a.cos(), a.sin()))
                .collect();
            let mut conj = [Complex64::new(0.0, 0.0); 4];
            for i in 0..2 {
                for j in 0..2 {
                    conj[2 * i + j] = u[i] * base[2 * i + j] * u[j].conj();
                }
            }
            let eigs = eig_of(&conj);
            for (a, b) in eigs.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-10);
            }
            assert_eq!(classify_definiteness(&eigs, 1e-8), class0);
        }
    }

    #[test]
    fn linearity_in_f() {
        let site = site_1d(vec![(-0.25, 0.15, 1.0), (0.25, 0.15, -1.0)]);
        let scaled = site_1d(vec![(-0.25, 0.15, 2.5), (0.25, 0.15, -2.5)]);
        let model = model_1d(PeriodicBackground::cosine(1, 1.0), site, 48, 0.0);
        let model_scaled = model_1d(PeriodicBackground::cosine(1, 1.0), scaled, 48, 0.0);
        let band = compute_band_structure(&model, 17, 1).unwrap();
        let minima = find_band_minima(&band, 1e-6, 0.6).unwrap();
        let phis: Vec<BlochFunction> = minima
            .points
            .iter()
            .map(|t| bloch_eigenfunction(&model, t).unwrap())
            .collect();
        let a1 = coupling_matrix(&model, &minima, &phis, 1e-8).unwrap();
        // same eigenfunctions (λ=0 spectra agree), scaled f
        let phis_scaled: Vec<BlochFunction> = phis
            .iter()
            .map(|p| BlochFunction {
                model: model_scaled.clone(),
                theta: p.theta.clone(),
                values: p.values.clone(),
            })
            .collect();
        let a2 = coupling_matrix(&model_scaled, &minima, &phis_scaled, 1e-8).unwrap();
        for (x, y) in a1.entries.iter().zip(&a2.entries) {
            assert!((x * 2.5 - y).norm() < 1e-12);
        }
    }

    #[test]
    fn mismatched_model_rejected() {
        let site = site_1d(vec![(0.0, 0.2, 1.0)]);
        let model = model_1d(PeriodicBackground::zero(1), site.clone(), 32, 0.0);
        let other = model_1d(PeriodicBackground::cosine(1, 1.0), site, 32, 0.0);
        let band = compute_band_structure(&model, 17, 1).unwrap();
        let minima = find_band_minima(&band, 1e-6, 0.6).unwrap();
        let phi = bloch_eigenfunction(&other, &minima.points[0]).unwrap();
        let err = coupling_matrix(&model, &minima, &[phi], 1e-8).unwrap_err();
        assert!(matches!(err, CouplingError::MismatchedModel));
    }

    #[test]
    fn threshold_scan_positive_definite_survives() {
        // asymmetric indefinite site over W=cos(2πx): heavy positive
        // bump where the ground state concentrates
        let site = site_1d(vec![(-0.35, 0.1, 1.0), (0.1, 0.08, -0.5)]);
        let model = model_1d(PeriodicBackground::cosine(1, 1.0), site, 48, 0.0);
        let scan = lambda_threshold_scan(
            &model,
            &[0.0, 0.05, 0.1, 0.2],
            17,
            1e-6,
            0.6,
            DEFAULT_SINGULAR_TOL,
        )
        .unwrap();
        assert_eq!(scan.class_at_zero, Definiteness::PositiveDefinite);
        assert!(scan.lambda0_estimate > 0.0, "{:?}", scan.classes);

        // negated site flips every class on the ladder
        let neg_model = model
            .family
            .negated_site()
            .model(model.lambda, model.config.clone())
            .unwrap();
        let neg_scan = lambda_threshold_scan(
            &neg_model,
            &[0.0, 0.05, 0.1, 0.2],
            17,
            1e-6,
            0.6,
            DEFAULT_SINGULAR_TOL,
        )
        .unwrap();
        assert_eq!(neg_scan.class_at_zero, Definiteness::NegativeDefinite);
        for (c, n) in scan.classes.iter().zip(&neg_scan.classes) {
            let flipped = match c {
                Definiteness::PositiveDefinite => Definiteness::NegativeDefinite,
                Definiteness::NegativeDefinite => Definiteness::PositiveDefinite,
                other => *other,
            };
            assert_eq!(flipped, *n);
        }
    }

    #[test]
    fn trivial_ladder_gives_zero_threshold() {
        let site = site_1d(vec![(0.0, 0.2, 1.0)]);
        let model = model_1d(PeriodicBackground::zero(1), site, 32, 0.0);
        let scan =
            lambda_threshold_scan(&model, &[0.0], 17, 1e-6, 0.6, DEFAULT_SINGULAR_TOL).unwrap();
        assert_eq!(scan.lambda0_estimate, 0.0);
        assert_eq!(scan.class_at_zero, Definiteness::PositiveDefinite);
    }

    #[test]
    fn bad_ladder_rejected() {
        let site = site_1d(vec![(0.0, 0.2, 1.0)]);
        let model = model_1d(PeriodicBackground::zero(1), site, 32, 0.0);
        for ladder in [vec![], vec![0.1], vec![0.0, 0.2, 0.1]] {
            let err = lambda_threshold_scan(&model, &ladder, 17, 1e-6, 0.6, 1e-8).unwrap_err();
            assert!(matches!(err, CouplingError::BadLadder));
        }
    }

    #[test]
    fn json_roundtrip_entries_as_pairs() {
        let site = site_1d(vec![(0.0, 0.2, 1.0)]);
        let model = model_1d(PeriodicBackground::zero(1), site, 32, 0.0);
        let (_, a) = coupling_at_lambda(&model, 17, 1e-6, 0.6, 1e-8).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.contains("\"entries\":[["));
        let back: CouplingMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back.entries, a.entries);
        assert_eq!(back.class, a.class);
    }
}

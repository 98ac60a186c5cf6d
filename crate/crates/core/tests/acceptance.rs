//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line and asserting its runtime budget.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bandfloor::{
    build_single_site, classify_definiteness, compute_band_structure, eig_hermitian, eig_values,
    find_band_minima, lambda_threshold_scan, monotone_case_oracle, projection_positivity_check,
    quadratic_model, verify_min_location, Bump, Definiteness, DisorderConfiguration, Extreme,
    HermitianMatrix, Model, ModelFamily, PeriodicBackground, Verdict,
};

fn criterion(number: usize, name: &str, pass: bool, detail: &str) {
    let word = if pass { "pass" } else { "FAIL" };
    println!("acceptance {number} ({name}): {word} — {detail}");
    assert!(pass, "criterion {number} ({name}) failed: {detail}");
}

fn within_budget(number: usize, name: &str, start: Instant, seconds: u64) {
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < seconds,
        "criterion {number} ({name}) exceeded {seconds}s budget: {elapsed:?}"
    );
}

fn random_hermitian(order: usize, seed: u64) -> HermitianMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = HermitianMatrix::zeros(order);
    for i in 0..order {
        m.set(i, i, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
        for j in (i + 1)..order {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            m.set(i, j, z);
            m.set(j, i, z.conj());
        }
    }
    m
}

/// Independent eigenvalue oracle: inertia-count bisection via the pivot
/// signs of the LDL* elimination of (M − xI).
fn count_below(m: &HermitianMatrix, x: f64) -> Option<usize> {
    let n = m.order();
    let mut a: Vec<Complex64> = (0..n * n)
        .map(|f| {
            let (i, j) = (f / n, f % n);
            m.get(i, j)
                - if i == j {
                    Complex64::new(x, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
        })
        .collect();
    let scale = m.max_abs().max(x.abs()).max(1.0);
    let mut count = 0usize;
    for k in 0..n {
        let piv = a[k * n + k].re;
        if piv.abs() < 1e-14 * scale {
            return None;
        }
        if piv < 0.0 {
            count += 1;
        }
        for i in (k + 1)..n {
            let factor = a[i * n + k] / piv;
            for j in (k + 1)..n {
                let akj = a[k * n + j];
                a[i * n + j] -= factor * akj;
            }
        }
    }
    Some(count)
}

fn bisection_eigenvalue(m: &HermitianMatrix, j: usize, tol: f64) -> f64 {
    let n = m.order();
    let mut bound = 0.0f64;
    for i in 0..n {
        let row: f64 = (0..n).map(|c| m.get(i, c).norm()).sum();
        bound = bound.max(row);
    }
    let mut lo = -bound - 1.0;
    let mut hi = bound + 1.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let c = match count_below(m, mid) {
            Some(c) => c,
            None => match count_below(m, mid + tol * 1e-3) {
                Some(c) => c,
                None => count_below(m, mid - tol * 1e-3).unwrap_or(j),
            },
        };
        if c >= j + 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn site_1d(bumps: &[(f64, f64, f64)]) -> bandfloor::SingleSite {
    build_single_site(
        bumps
            .iter()
            .map(|&(c, r, a)| Bump {
                center: vec![c],
                radius: r,
                amplitude: a,
            })
            .collect(),
        1,
    )
    .unwrap()
}

/// Default desk-scale indefinite model: asymmetric two-bump site over
/// W = cos(2πx), couplings in [−1, 1]. A(0) is positive-definite.
fn default_family(points_per_unit: usize) -> ModelFamily {
    ModelFamily::new(
        1,
        points_per_unit,
        PeriodicBackground::cosine(1, 1.0),
        site_1d(&[(-0.3, 0.1, 1.0), (0.1, 0.08, -0.5)]),
        (-1.0, 1.0),
    )
    .unwrap()
}

fn reference_model(family: &ModelFamily) -> Model {
    family.extreme_model(0.0, Extreme::Lower).unwrap()
}

#[test]
fn acceptance_1_eigensolver_soundness() {
    let start = Instant::now();
    let mut worst_residual = 0.0f64;
    let mut worst_ortho = 0.0f64;
    let mut worst_trace = 0.0f64;
    for seed in 0..500u64 {
        let order = 2 + (seed as usize * 7) % 63; // cycles 2..=64
        let m = random_hermitian(order, seed);
        let d = eig_hermitian(&m).unwrap();
        let norm = m.frobenius_norm();
        worst_residual = worst_residual.max(d.max_residual(&m) / norm);
        worst_ortho = worst_ortho.max(d.orthonormality_defect());
        let trace_err = (d.values.iter().sum::<f64>() - m.trace().re).abs() / norm;
        worst_trace = worst_trace.max(trace_err);
    }
    let mut worst_oracle = 0.0f64;
    for seed in 1000..1020u64 {
        let m = random_hermitian(5, seed);
        let d = eig_hermitian(&m).unwrap();
        for j in 0..5 {
            let oracle = bisection_eigenvalue(&m, j, 1e-12);
            worst_oracle = worst_oracle.max((d.values[j] - oracle).abs());
        }
    }
    let pass = worst_residual <= 1e-10 && worst_ortho <= 1e-10 && worst_trace <= 1e-9
        && worst_oracle <= 1e-9;
    criterion(
        1,
        "eigensolver soundness",
        pass,
        &format!(
            "500 matrices: residual {worst_residual:.2e}, orthonormality {worst_ortho:.2e}, trace {worst_trace:.2e}, 5x5 oracle {worst_oracle:.2e}"
        ),
    );
    within_budget(1, "eigensolver soundness", start, 30);
}

#[test]
fn acceptance_2_discretization_convergence() {
    let start = Instant::now();
    let family_at = |n: usize| {
        ModelFamily::new(
            1,
            n,
            PeriodicBackground::zero(1),
            site_1d(&[(0.0, 0.1, 1.0)]),
            (-1.0, 1.0),
        )
        .unwrap()
    };
    let max_error = |n: usize| -> f64 {
        let model = reference_model(&family_at(n));
        let band = compute_band_structure(&model, 17, 1).unwrap();
        band.thetas
            .iter()
            .zip(&band.bands)
            .map(|(theta, bands)| {
                let t = theta[0];
                let exact = (-3..=3)
                    .map(|m| (t + 2.0 * std::f64::consts::PI * m as f64).powi(2))
                    .fold(f64::INFINITY, f64::min);
                (bands[0] - exact).abs()
            })
            .fold(0.0, f64::max)
    };
    let e128 = max_error(128);
    let e256 = max_error(256);
    let order = (e128 / e256).log2();
    let pass = e256 <= 5e-3 && order >= 1.9;
    criterion(
        2,
        "discretization convergence",
        pass,
        &format!("max error {e256:.3e} at n=256, observed order {order:.3}"),
    );
    within_budget(2, "discretization convergence", start, 10);
}

#[test]
fn acceptance_3_quadratic_minimum() {
    let start = Instant::now();
    let model = reference_model(&default_family(64));
    let band = compute_band_structure(&model, 129, 1).unwrap();
    let step = 2.0 * std::f64::consts::PI / 128.0;
    let minima = find_band_minima(&band, 1e-6, 3.0 * step).unwrap();
    let quad = quadratic_model(&band, &minima, 0.3).unwrap();
    let hessian_min = quad.minima[0]
        .hessian_eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let pass = minima.count == 1
        && minima.points[0][0].abs() <= 1e-6
        && hessian_min > 0.0
        && quad.minima[0].c_fit.is_finite();
    criterion(
        3,
        "quadratic minimum",
        pass,
        &format!(
            "m={}, θ₁={:.2e}, Hessian min {hessian_min:.4}, C_fit {:.4}",
            minima.count, minima.points[0][0], quad.minima[0].c_fit
        ),
    );
    within_budget(3, "quadratic minimum", start, 30);
}

#[test]
fn acceptance_4_fixed_sign_case() {
    let start = Instant::now();
    let alphabet = [-1.0, 0.0, 1.0];
    let mut pass = true;
    let mut detail = String::new();
    for (amplitude, expected) in [(1.0, Extreme::Lower), (-1.0, Extreme::Upper)] {
        let family = ModelFamily::new(
            1,
            16,
            PeriodicBackground::cosine(1, 1.0),
            site_1d(&[(0.0, 0.2, amplitude)]),
            (-1.0, 1.0),
        )
        .unwrap();
        for lambda in [0.5, 1.0] {
            let report = monotone_case_oracle(&family, lambda, &alphabet, 3, 9).unwrap();
            let ok = report.predicted_extreme == expected
                && report.verdict == Verdict::Pass
                && report.argmin_label == report.predicted_label;
            pass &= ok;
            detail.push_str(&format!(
                "[sign {amplitude:+}, λ={lambda}: argmin {} gap {:.1e}] ",
                report.argmin_label, report.gap
            ));
        }
    }
    criterion(4, "fixed-sign case", pass, detail.trim_end());
    within_budget(4, "fixed-sign case", start, 300);
}

fn lambda0_estimate(family: &ModelFamily, n_theta: usize) -> f64 {
    let model = reference_model(family);
    let step = 2.0 * model.bz_halfwidths()[0] / (n_theta - 1) as f64;
    lambda_threshold_scan(
        &model,
        &[0.0, 0.05, 0.1, 0.2, 0.4],
        n_theta,
        1e-6,
        3.0 * step,
        1e-8,
    )
    .unwrap()
    .lambda0_estimate
}

#[test]
fn acceptance_5_main_theorem() {
    let start = Instant::now();
    let family = default_family(16);
    let alphabet = [-1.0, 0.0, 1.0];
    let lambda0 = lambda0_estimate(&family, 17);
    assert!(lambda0 > 0.0, "λ₀ estimate must be positive, got {lambda0}");

    // scalar positive-definiteness certificate: A(0) entry is real > 0
    let model = reference_model(&family);
    let (_, a0) = bandfloor::coupling_at_lambda(&model, 17, 1e-6, 0.6, 1e-8).unwrap();
    assert!(a0.order == 1 && a0.get(0, 0).re > 0.0, "∫f|φ₁|² must be positive");

    let mut pass = true;
    let mut detail = format!("λ₀={lambda0:.3}; ");
    for factor in [0.1, 0.25] {
        let lambda = factor * lambda0;
        let report = verify_min_location(&family, lambda, &alphabet, 3, 9).unwrap();
        let ok = report.class_at_zero == Definiteness::PositiveDefinite
            && report.predicted_extreme == Extreme::Lower
            && report.verdict == Verdict::Pass;
        pass &= ok;
        detail.push_str(&format!("[λ={lambda:.3}: {} gap {:.1e}] ", report.argmin_label, report.gap));

        let negated = family.negated_site();
        let report = verify_min_location(&negated, lambda, &alphabet, 3, 9).unwrap();
        let ok = report.class_at_zero == Definiteness::NegativeDefinite
            && report.predicted_extreme == Extreme::Upper
            && report.verdict == Verdict::Pass;
        pass &= ok;
        detail.push_str(&format!("[−f λ={lambda:.3}: {}] ", report.argmin_label));
    }
    criterion(5, "main theorem", pass, detail.trim_end());
    within_budget(5, "main theorem", start, 600);
}

#[test]
fn acceptance_6_projection_positivity() {
    let start = Instant::now();
    let family = default_family(12);
    let lambda = 0.25 * lambda0_estimate(&family, 17);
    let alphabet = [-1.0, 0.0, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    let mut all_gaps_ok = true;
    for _ in 0..50 {
        let values: Vec<f64> = (0..3).map(|_| alphabet[rng.gen_range(0..3)]).collect();
        let config =
            DisorderConfiguration::periodic(1, vec![3], values, (-1.0, 1.0)).unwrap();
        let checks =
            projection_positivity_check(&family, lambda, &config, 9, Extreme::Lower, 1e-6)
                .unwrap();
        for c in &checks {
            all_gaps_ok &= c.gap_ok;
            if c.gap_ok {
                worst = worst.min(c.min_shifted_eigenvalue);
            }
        }
    }
    let pass = all_gaps_ok && worst >= -1e-8;
    criterion(
        6,
        "projection positivity",
        pass,
        &format!("50 configs at λ={lambda:.3}: min shifted eigenvalue {worst:.2e}, gaps ok {all_gaps_ok}"),
    );
    within_budget(6, "projection positivity", start, 300);
}

fn ladder_scan(family: &ModelFamily) -> bandfloor::ThresholdScan {
    let model = reference_model(family);
    let step = 2.0 * model.bz_halfwidths()[0] / 16.0;
    lambda_threshold_scan(
        &model,
        &[0.0, 0.05, 0.1, 0.2, 0.4],
        17,
        1e-6,
        3.0 * step,
        1e-8,
    )
    .unwrap()
}

#[test]
fn acceptance_7_definiteness_invariance() {
    let scan = ladder_scan(&default_family(16));
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut worst = 0.0f64;
    let mut class_stable = true;
    for a in &scan.matrices {
        let m = a.order;
        for _ in 0..100 {
            let phases: Vec<Complex64> = (0..m)
                .map(|_| {
                    let alpha = rng.gen::<f64>() * std::f64::consts::TAU;
                    Complex64::new(alpha.cos(), alpha.sin())
                })
                .collect();
            // diagonal-unitary conjugation of the raw entries
            let herm = HermitianMatrix::from_fn(m, |i, j| {
                let conj_ij = phases[i] * a.get(i, j) * phases[j].conj();
                let conj_ji = phases[j] * a.get(j, i) * phases[i].conj();
                0.5 * (conj_ij + conj_ji.conj())
            })
            .symmetrized();
            let eigs = eig_values(&herm).unwrap();
            for (x, y) in eigs.iter().zip(&a.eigenvalues) {
                worst = worst.max((x - y).abs());
            }
            class_stable &= classify_definiteness(&eigs, a.singular_tol) == a.class;
        }
    }
    let pass = class_stable && worst <= 1e-10;
    criterion(
        7,
        "definiteness invariance",
        pass,
        &format!(
            "{} ladder matrices × 100 rephasings: eigenvalue drift {worst:.2e}, class stable {class_stable}",
            scan.matrices.len()
        ),
    );
}

#[test]
fn acceptance_8_continuity_scan() {
    let scan = ladder_scan(&default_family(16));
    assert!(
        scan.matrices.iter().all(|a| a.order == scan.matrices[0].order),
        "minima count must be stable across the ladder for the envelope fit"
    );
    let diff_norm = |a: &bandfloor::CouplingMatrix, b: &bandfloor::CouplingMatrix| -> f64 {
        a.entries
            .iter()
            .zip(&b.entries)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let mut envelope_c = 0.0f64;
    for (a, &lambda) in scan.matrices.iter().zip(&scan.lambdas).skip(1) {
        envelope_c = envelope_c.max(diff_norm(a, &scan.matrices[0]) / lambda);
    }
    let bounded = scan
        .matrices
        .iter()
        .zip(&scan.lambdas)
        .skip(1)
        .all(|(a, &lambda)| diff_norm(a, &scan.matrices[0]) <= envelope_c * lambda * (1.0 + 1e-12));
    let class_constant = scan
        .lambdas
        .iter()
        .zip(&scan.classes)
        .filter(|(&l, _)| l <= scan.lambda0_estimate)
        .all(|(_, &c)| c == scan.class_at_zero);
    let pass = envelope_c > 0.0 && bounded && class_constant;
    criterion(
        8,
        "continuity scan",
        pass,
        &format!(
            "envelope C={envelope_c:.3e}, bounded {bounded}, class constant up to λ₀={} : {class_constant}",
            scan.lambda0_estimate
        ),
    );
}

//! Markdown report rendering. Every number shown here is copied from a
//! field of the JSON artifacts written alongside it.

use std::fmt::Write as _;

use bandfloor::{Verdict, VerificationReport};

use crate::config::ExperimentConfig;
use crate::pipeline::{CouplingArtifact, MinimaArtifact, VerificationArtifact};

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "FAIL",
    }
}

fn report_section(out: &mut String, title: &str, report: &VerificationReport) {
    let _ = writeln!(out, "## {title}\n");
    let _ = writeln!(out, "- predicted extreme: `{}`", report.predicted_extreme);
    let _ = writeln!(out, "- predicted configuration: `{}`", report.predicted_label);
    let _ = writeln!(
        out,
        "- empirical argmin: `{}` at E_min = {}",
        report.argmin_label, report.argmin_e_min
    );
    let _ = writeln!(
        out,
        "- gap (argmin − predicted): {} against budget {}",
        report.gap, report.budget
    );
    let _ = writeln!(
        out,
        "- verdict: **{}** over {} configurations\n",
        verdict_word(report.verdict),
        report.spectra.len()
    );
}

pub fn render(
    config: &ExperimentConfig,
    coupling: &CouplingArtifact,
    minima: &MinimaArtifact,
    verification: &VerificationArtifact,
    warnings: &[String],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Experiment report\n");
    let _ = writeln!(
        out,
        "Model: d = {}, n = {} points per unit cell, ω ∈ [{}, {}], {} site bump(s).",
        config.model.dimension,
        config.model.points_per_unit,
        config.model.omega_minus,
        config.model.omega_plus,
        config.model.site.len()
    );
    let _ = writeln!(
        out,
        "Sweep: N_θ = {}, ladder of {} λ values up to {}.\n",
        config.n_theta(),
        config.sweep.lambda_ladder.len(),
        config.sweep.lambda_ladder.last().copied().unwrap_or(0.0)
    );

    let _ = writeln!(out, "## Coupling matrix scan\n");
    let _ = writeln!(
        out,
        "- A(0) class: `{:?}`",
        coupling.scan.class_at_zero
    );
    let _ = writeln!(out, "- λ₀ estimate: {}", coupling.scan.lambda0_estimate);
    let _ = writeln!(out, "- evaluation λ: {}\n", coupling.lambda_eval);
    let _ = writeln!(out, "| λ | class | min abs eigenvalue |");
    let _ = writeln!(out, "|---|-------|--------------------|");
    for ((lambda, class), min_abs) in coupling
        .scan
        .lambdas
        .iter()
        .zip(&coupling.scan.classes)
        .zip(&coupling.scan.min_abs_eigenvalues)
    {
        let _ = writeln!(out, "| {lambda} | {class:?} | {min_abs} |");
    }
    out.push('\n');

    let _ = writeln!(out, "## First-band minima (λ = {})\n", minima.lambda);
    let _ = writeln!(out, "- count: {}", minima.minima.count);
    let _ = writeln!(out, "- E_min: {}", minima.minima.e_min);
    let _ = writeln!(out, "- minimizers: {:?}", minima.minima.points);
    let _ = writeln!(out, "- band gap at minimizers: {}", minima.minima.band_gap);
    match (&minima.quadratic, &minima.quadratic_skipped) {
        (Some(q), _) => {
            for m in &q.minima {
                let _ = writeln!(
                    out,
                    "- quadratic fit at θ = {:?}: Hessian eigenvalues {:?}, C_fit = {}",
                    m.theta, m.hessian_eigenvalues, m.c_fit
                );
            }
        }
        (None, Some(reason)) => {
            let _ = writeln!(out, "- quadratic fit skipped: {reason}");
        }
        (None, None) => {}
    }
    out.push('\n');

    if let Some(report) = &verification.min_location {
        report_section(&mut out, "Spectral infimum location", report);
    } else if let Some(reason) = &verification.min_location_skipped {
        let _ = writeln!(out, "## Spectral infimum location\n\nSkipped: {reason}\n");
    }
    if let Some(report) = &verification.monotone {
        report_section(&mut out, "Fixed-sign monotone case", report);
    } else if let Some(reason) = &verification.monotone_skipped {
        let _ = writeln!(out, "## Fixed-sign monotone case\n\nSkipped: {reason}\n");
    }

    if let Some(p) = &verification.projection {
        let _ = writeln!(out, "## Projection positivity (λ = {})\n", p.lambda);
        let _ = writeln!(out, "- reference extreme: `{}`", p.extreme);
        let _ = writeln!(
            out,
            "- min shifted eigenvalue over {} sampled configurations: {}",
            p.samples.len(),
            p.min_shifted_eigenvalue
        );
        let _ = writeln!(out, "- gap check at all Θ: {}\n", p.all_gaps_ok);
    }

    if let Some(b) = &verification.box_sampling {
        let _ = writeln!(out, "## Dirichlet box sampling\n");
        let _ = writeln!(out, "- box: {:?}, samples: {}, seed: {}", b.box_dims, b.n_samples, b.seed);
        let _ = writeln!(
            out,
            "- min sampled energy {} vs predicted infimum {} (budget {})",
            b.min_sampled_energy, b.predicted_infimum, b.budget
        );
        let _ = writeln!(
            out,
            "- all samples above infimum − budget: **{}**\n",
            b.all_above
        );
    }

    if !warnings.is_empty() {
        let _ = writeln!(out, "## Warnings\n");
        for w in warnings {
            let _ = writeln!(out, "- {w}");
        }
        out.push('\n');
    }
    out
}

//! Pipeline orchestration: bands → minima → coupling → verification,
//! with JSON artifact reuse between stage-only runs.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use bandfloor::export::{bands_to_csv, bands_to_svg, verification_to_csv};
use bandfloor::floquet::DEFAULT_MERGE_STEPS;
use bandfloor::{
    box_sampling_check, compute_band_structure, find_band_minima, lambda_threshold_scan,
    monotone_case_oracle, projection_positivity_check, quadratic_model, verify_min_location,
    BandStructure, BoxSamplingSummary, Definiteness, DisorderConfiguration, Extreme, MinimaSet,
    ModelFamily, ProjectionCheck, QuadraticModel, ThresholdScan, Verdict, VerificationReport,
    VerifierError,
};

use crate::config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage `{stage}` needs {artifact} but recomputation is disabled")]
    MissingUpstream { stage: String, artifact: String },
    #[error("stage `{stage}`: {message}")]
    Stage { stage: String, message: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse artifact {path}: {source}")]
    BadArtifact {
        path: String,
        source: serde_json::Error,
    },
}

fn stage_err(stage: &str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage {
        stage: stage.to_string(),
        message: e.to_string(),
    }
}

/// minima.json: refined minima plus the quadratic model when it exists.
#[derive(Serialize, Deserialize)]
pub struct MinimaArtifact {
    pub lambda: f64,
    pub n_theta: usize,
    pub minima: MinimaSet,
    pub quadratic: Option<QuadraticModel>,
    pub quadratic_skipped: Option<String>,
}

/// coupling.json: the full λ ladder scan.
#[derive(Serialize, Deserialize)]
pub struct CouplingArtifact {
    pub scan: ThresholdScan,
    /// λ used downstream: config override or 0.25 × λ₀ estimate.
    pub lambda_eval: f64,
}

#[derive(Serialize, Deserialize)]
pub struct ProjectionSample {
    pub label: String,
    pub checks: Vec<ProjectionCheck>,
}

#[derive(Serialize, Deserialize)]
pub struct ProjectionArtifact {
    pub lambda: f64,
    pub extreme: Extreme,
    pub gap_threshold: f64,
    pub samples: Vec<ProjectionSample>,
    pub min_shifted_eigenvalue: f64,
    pub all_gaps_ok: bool,
}

/// verification.json: everything the check block requested.
#[derive(Serialize, Deserialize)]
pub struct VerificationArtifact {
    pub lambda: f64,
    pub min_location: Option<VerificationReport>,
    pub min_location_skipped: Option<String>,
    pub monotone: Option<VerificationReport>,
    pub monotone_skipped: Option<String>,
    pub projection: Option<ProjectionArtifact>,
    pub box_sampling: Option<BoxSamplingSummary>,
    pub warnings: Vec<String>,
}

impl VerificationArtifact {
    pub fn all_pass(&self) -> bool {
        let report_ok = |r: &Option<VerificationReport>| {
            r.as_ref().map(|r| r.verdict == Verdict::Pass).unwrap_or(true)
        };
        report_ok(&self.min_location)
            && report_ok(&self.monotone)
            && self
                .projection
                .as_ref()
                .map(|p| p.min_shifted_eigenvalue >= -1e-8)
                .unwrap_or(true)
            && self
                .box_sampling
                .as_ref()
                .map(|b| b.all_above)
                .unwrap_or(true)
    }
}

pub struct Pipeline {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    /// When false, stages fail instead of recomputing missing upstreams.
    pub recompute: bool,
    pub warnings: Vec<String>,
    family: ModelFamily,
}

impl Pipeline {
    pub fn new(
        config: ExperimentConfig,
        out_override: Option<&str>,
        recompute: bool,
    ) -> Result<Self, PipelineError> {
        let out_dir = PathBuf::from(out_override.unwrap_or(&config.output.directory));
        let family = config
            .family()
            .map_err(|e| stage_err("config", e))?;
        std::fs::create_dir_all(&out_dir).map_err(|source| PipelineError::Io {
            path: out_dir.display().to_string(),
            source,
        })?;
        Ok(Self {
            config,
            out_dir,
            recompute,
            warnings: Vec::new(),
            family,
        })
    }

    fn wants(&self, format: &str) -> bool {
        self.config.output.formats.iter().any(|f| f == format)
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), PipelineError> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents).map_err(|source| PipelineError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), PipelineError> {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.write(name, &text)
    }

    fn load_json<T: for<'de> Deserialize<'de>>(&self, name: &str) -> Option<Result<T, PipelineError>> {
        let path = self.out_dir.join(name);
        let text = std::fs::read_to_string(&path).ok()?;
        Some(
            serde_json::from_str(&text).map_err(|source| PipelineError::BadArtifact {
                path: path.display().to_string(),
                source,
            }),
        )
    }

    fn merge_radius(&self, reference: &bandfloor::Model) -> f64 {
        let step = 2.0 * reference.bz_halfwidths()[0] / (self.config.n_theta() - 1) as f64;
        DEFAULT_MERGE_STEPS * step
    }

    /// coupling.json, reused when present.
    pub fn coupling(&mut self, stage: &str) -> Result<CouplingArtifact, PipelineError> {
        if let Some(loaded) = self.load_json::<CouplingArtifact>("coupling.json") {
            let artifact = loaded?;
            eprintln!("[{stage}] reusing coupling.json");
            return Ok(artifact);
        }
        if !self.recompute {
            return Err(PipelineError::MissingUpstream {
                stage: stage.to_string(),
                artifact: "coupling.json".to_string(),
            });
        }
        self.compute_coupling()
    }

    pub fn compute_coupling(&mut self) -> Result<CouplingArtifact, PipelineError> {
        let stage = "coupling";
        let reference = self
            .family
            .extreme_model(0.0, Extreme::Lower)
            .map_err(|e| stage_err(stage, e))?;
        let merge_radius = self.merge_radius(&reference);
        let scan = lambda_threshold_scan(
            &reference,
            &self.config.sweep.lambda_ladder,
            self.config.n_theta(),
            self.config.sweep.refine_tol,
            merge_radius,
            self.config.check.singular_tol,
        )
        .map_err(|e| stage_err(stage, e))?;
        let lambda_eval = self
            .config
            .check
            .lambda
            .unwrap_or(0.25 * scan.lambda0_estimate);
        if self.config.check.lambda.is_none() && scan.lambda0_estimate == 0.0 {
            self.warnings
                .push("coupling: λ₀ estimate is 0; downstream λ defaults to 0".to_string());
        }
        let artifact = CouplingArtifact { scan, lambda_eval };
        if self.wants("json") {
            self.write_json("coupling.json", &artifact)?;
        }
        Ok(artifact)
    }

    /// The coupling λ used by bands/minima/verification.
    pub fn lambda_eval(&mut self, stage: &str) -> Result<f64, PipelineError> {
        if let Some(lambda) = self.config.check.lambda {
            return Ok(lambda);
        }
        Ok(self.coupling(stage)?.lambda_eval)
    }

    pub fn compute_bands(&mut self) -> Result<BandStructure, PipelineError> {
        let stage = "bands";
        let lambda = self.lambda_eval(stage)?;
        let model = self
            .family
            .extreme_model(lambda, Extreme::Lower)
            .map_err(|e| stage_err(stage, e))?;
        let band = compute_band_structure(&model, self.config.n_theta(), self.config.sweep.n_bands)
            .map_err(|e| stage_err(stage, e))?;
        if self.wants("csv") {
            self.write("bands.csv", &bands_to_csv(&band))?;
        }
        Ok(band)
    }

    pub fn compute_minima(&mut self, band: &BandStructure) -> Result<MinimaArtifact, PipelineError> {
        let stage = "minima";
        let merge_radius = self.merge_radius(&band.model);
        let minima = find_band_minima(band, self.config.sweep.refine_tol, merge_radius)
            .map_err(|e| stage_err(stage, e))?;
        if !minima.simple {
            self.warnings
                .push("minima: first band not clearly simple at a minimizer".to_string());
        }
        let step = 2.0 * band.model.bz_halfwidths()[0] / (band.n_theta - 1) as f64;
        let delta = (3.5 * step).max(0.3);
        let (quadratic, quadratic_skipped) = match quadratic_model(band, &minima, delta) {
            Ok(q) => (Some(q), None),
            Err(e) => {
                self.warnings.push(format!("minima: quadratic model skipped: {e}"));
                (None, Some(e.to_string()))
            }
        };
        let artifact = MinimaArtifact {
            lambda: band.model.lambda,
            n_theta: band.n_theta,
            minima,
            quadratic,
            quadratic_skipped,
        };
        if self.wants("svg") && band.model.dimension() == 1 {
            self.write("bands.svg", &bands_to_svg(band, Some(&artifact.minima)))?;
        }
        if self.wants("json") {
            self.write_json("minima.json", &artifact)?;
        }
        Ok(artifact)
    }

    fn sampled_periodic_configs(&self) -> Vec<DisorderConfiguration> {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.config.check.seed);
        let alphabet = self.config.alphabet();
        let d = self.family.dimension;
        let period = vec![3usize; d];
        let sites: usize = period.iter().product();
        let bounds = self.family.bounds;
        (0..self.config.check.projection_samples)
            .map(|_| {
                let values: Vec<f64> = (0..sites)
                    .map(|_| *alphabet.choose(&mut rng).expect("nonempty alphabet"))
                    .collect();
                DisorderConfiguration::periodic(d, period.clone(), values, bounds)
                    .expect("alphabet values lie within bounds")
            })
            .collect()
    }

    pub fn compute_projection(
        &mut self,
        lambda: f64,
        extreme: Extreme,
    ) -> Result<ProjectionArtifact, PipelineError> {
        let stage = "project-check";
        let gap_threshold = self.config.check.gap_threshold;
        let mut samples = Vec::new();
        let mut min_eig = f64::INFINITY;
        let mut all_gaps_ok = true;
        for config in self.sampled_periodic_configs() {
            let checks = projection_positivity_check(
                &self.family,
                lambda,
                &config,
                self.config.n_theta().min(17),
                extreme,
                gap_threshold,
            )
            .map_err(|e| stage_err(stage, e))?;
            for c in &checks {
                if c.gap_ok {
                    min_eig = min_eig.min(c.min_shifted_eigenvalue);
                } else {
                    all_gaps_ok = false;
                }
            }
            samples.push(ProjectionSample {
                label: config.label(),
                checks,
            });
        }
        if !all_gaps_ok {
            self.warnings
                .push("projection: gap check failed at some Θ (those points skipped)".to_string());
        }
        Ok(ProjectionArtifact {
            lambda,
            extreme,
            gap_threshold,
            samples,
            min_shifted_eigenvalue: min_eig,
            all_gaps_ok,
        })
    }

    pub fn compute_verification(&mut self) -> Result<VerificationArtifact, PipelineError> {
        let stage = "verify";
        let coupling = self.coupling(stage)?;
        let lambda = self
            .config
            .check
            .lambda
            .unwrap_or(coupling.lambda_eval);
        let alphabet = self.config.alphabet();
        let max_period = self.config.sweep.max_period;
        let n_theta = self.config.n_theta().min(17);

        let mut artifact = VerificationArtifact {
            lambda,
            min_location: None,
            min_location_skipped: None,
            monotone: None,
            monotone_skipped: None,
            projection: None,
            box_sampling: None,
            warnings: Vec::new(),
        };

        if self.config.check.min_location {
            match verify_min_location(&self.family, lambda, &alphabet, max_period, n_theta) {
                Ok(report) => artifact.min_location = Some(report),
                Err(VerifierError::NotApplicable(class)) => {
                    let note = format!("A(0) is {class:?}; extreme-location check skipped");
                    self.warnings.push(format!("verify: {note}"));
                    artifact.min_location_skipped = Some(note);
                }
                Err(e) => return Err(stage_err(stage, e)),
            }
        }

        if self.config.check.monotone {
            match monotone_case_oracle(&self.family, lambda, &alphabet, max_period, n_theta) {
                Ok(report) => artifact.monotone = Some(report),
                Err(VerifierError::NotFixedSign) => {
                    let note = "single site is not fixed-sign; monotone check skipped".to_string();
                    self.warnings.push(format!("verify: {note}"));
                    artifact.monotone_skipped = Some(note);
                }
                Err(e) => return Err(stage_err(stage, e)),
            }
        }

        if self.config.check.projection {
            let extreme = match coupling.scan.class_at_zero {
                Definiteness::NegativeDefinite => Extreme::Upper,
                _ => Extreme::Lower,
            };
            artifact.projection = Some(self.compute_projection(lambda, extreme)?);
        }

        if self.config.check.box_sampling {
            let (predicted, budget) = match &artifact.min_location {
                Some(r) => (r.predicted_e_min, r.budget),
                None => {
                    let constant = DisorderConfiguration::constant(
                        self.family.dimension,
                        self.family.bounds.0,
                        self.family.bounds,
                    )
                    .map_err(|e| stage_err(stage, e))?;
                    let s = bandfloor::supercell_min_energy(
                        &self.family,
                        lambda,
                        &constant,
                        n_theta,
                        self.config.sweep.refine_tol,
                    )
                    .map_err(|e| stage_err(stage, e))?;
                    (s.e_min, s.resolution_estimate + 1e-8)
                }
            };
            let summary = box_sampling_check(
                &self.family,
                lambda,
                &self.config.check.box_dims,
                self.config.check.box_samples,
                self.config.check.seed,
                predicted,
                budget,
            )
            .map_err(|e| stage_err(stage, e))?;
            artifact.box_sampling = Some(summary);
        }

        artifact.warnings = self.warnings.clone();
        if self.wants("json") {
            self.write_json("verification.json", &artifact)?;
        }
        if self.wants("csv") {
            if let Some(report) = &artifact.min_location {
                self.write("verification.csv", &verification_to_csv(report))?;
            } else if let Some(report) = &artifact.monotone {
                self.write("verification.csv", &verification_to_csv(report))?;
            }
        }
        Ok(artifact)
    }

    /// Full pipeline; returns true when every requested verdict passed.
    pub fn run(&mut self) -> Result<bool, PipelineError> {
        let coupling = self.compute_coupling()?;
        let band = self.compute_bands()?;
        let minima = self.compute_minima(&band)?;
        let verification = self.compute_verification()?;
        if self.wants("md") {
            let report = crate::report::render(
                &self.config,
                &coupling,
                &minima,
                &verification,
                &self.warnings,
            );
            self.write("report.md", &report)?;
        }
        Ok(verification.all_pass())
    }
}


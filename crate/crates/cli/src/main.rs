//! Batch front door: parse an experiment config, run the pipeline or a
//! single stage, and emit reports and plots.

mod config;
mod pipeline;
mod report;

use clap::{Parser, Subcommand, ValueEnum};

use config::ExperimentConfig;
use pipeline::{Pipeline, PipelineError};

#[derive(Parser)]
#[command(
    name = "bandfloor",
    about = "Band structures, band-edge coupling matrices, and spectral-infimum verification for periodic operators with disorder"
)]
struct Cli {
    /// Experiment configuration (TOML)
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output directory (overrides the config's output.directory)
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads for parallel sweeps (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Treat warnings as failures
    #[arg(long, global = true)]
    strict: bool,
    /// Fail instead of recomputing missing upstream artifacts
    #[arg(long, global = true)]
    no_recompute: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Stage {
    Bands,
    Minima,
    Coupling,
    Verify,
    ProjectCheck,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline (or one stage via --stage)
    Run {
        #[arg(long)]
        stage: Option<Stage>,
    },
    /// Band structure sweep → bands.csv (+ bands.svg in d=1)
    Bands,
    /// First-band minima and quadratic model → minima.json
    Minima,
    /// Coupling-matrix λ ladder scan → coupling.json
    Coupling,
    /// Spectral-infimum verification → verification.json
    Verify,
    /// Projection positivity over sampled periodic configurations
    ProjectCheck,
}

fn run_stage(p: &mut Pipeline, stage: Stage) -> Result<bool, PipelineError> {
    match stage {
        Stage::Bands => {
            p.compute_bands()?;
            Ok(true)
        }
        Stage::Minima => {
            let band = p.compute_bands()?;
            p.compute_minima(&band)?;
            Ok(true)
        }
        Stage::Coupling => {
            p.compute_coupling()?;
            Ok(true)
        }
        Stage::Verify => Ok(p.compute_verification()?.all_pass()),
        Stage::ProjectCheck => {
            let coupling = p.coupling("project-check")?;
            let lambda = p.lambda_eval("project-check")?;
            let extreme = match coupling.scan.class_at_zero {
                bandfloor::Definiteness::NegativeDefinite => bandfloor::Extreme::Upper,
                _ => bandfloor::Extreme::Lower,
            };
            let artifact = p.compute_projection(lambda, extreme)?;
            // per-Θ minima table
            println!("config\ttheta\tgap_ok\tgap_to_band2\tmin_shifted_eigenvalue");
            for sample in &artifact.samples {
                for c in &sample.checks {
                    println!(
                        "{}\t{:?}\t{}\t{}\t{}",
                        sample.label, c.theta, c.gap_ok, c.gap_to_band2, c.min_shifted_eigenvalue
                    );
                }
            }
            let ok = artifact.min_shifted_eigenvalue >= -1e-8 && artifact.all_gaps_ok;
            Ok(ok)
        }
    }
}

fn main() {
    let cli = Cli::parse();

    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            std::process::exit(1);
        }
    }

    let Some(config_path) = cli.config.as_deref() else {
        eprintln!("error: --config <path> is required");
        std::process::exit(1);
    };
    let config = match ExperimentConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            std::process::exit(1);
        }
    };

    let mut p = match Pipeline::new(config, cli.out.as_deref(), !cli.no_recompute) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    };

    let result = match cli.command {
        Command::Run { stage: Some(stage) } => run_stage(&mut p, stage),
        Command::Run { stage: None } => p.run(),
        Command::Bands => run_stage(&mut p, Stage::Bands),
        Command::Minima => run_stage(&mut p, Stage::Minima),
        Command::Coupling => run_stage(&mut p, Stage::Coupling),
        Command::Verify => run_stage(&mut p, Stage::Verify),
        Command::ProjectCheck => run_stage(&mut p, Stage::ProjectCheck),
    };

    for w in &p.warnings {
        eprintln!("warning: {w}");
    }
    match result {
        Ok(true) if cli.strict && !p.warnings.is_empty() => {
            eprintln!("strict mode: warnings treated as failures");
            std::process::exit(2);
        }
        Ok(true) => {}
        Ok(false) => {
            eprintln!("verification failed");
            std::process::exit(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}

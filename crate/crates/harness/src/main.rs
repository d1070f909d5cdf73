use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use probdfo_core::functions::{Rosenbrock, Sphere};
use probdfo_core::models::QualityConstants;
use probdfo_core::{Function, ModelBuilder, Rng};
use probdfo_harness::diagnostics::{condition_number_tail, estimate_model_quality_rate, QualityOrder};
use probdfo_harness::error::{HarnessError, Result};
use probdfo_harness::experiment::start_point;
use probdfo_harness::report::{DiagnosticsReport, RateRow, Report, TailTable};
use probdfo_harness::{parse_config, run_experiment, ExperimentId};

#[derive(Parser)]
#[command(name = "probdfo", about = "Derivative-free trust-region experiments and diagnostics")]
struct Cli {
    /// Output directory (overrides `out` in the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Run this single seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte-Carlo diagnostics.
    #[command(subcommand)]
    Diagnose(Diagnose),
}

#[derive(Subcommand)]
enum Diagnose {
    /// Tail of the condition number of Gaussian linear interpolation systems.
    CondTail {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        /// Comma-separated thresholds.
        #[arg(long, value_delimiter = ',', default_values_t = [50.0, 100.0, 500.0])]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rate at which a builder produces fully linear models.
    ModelRate {
        #[arg(long, value_enum)]
        builder: BuilderName,
        #[arg(long, value_enum)]
        function: FunctionName,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dimension; the point is `(-1.2, 1, 0, …)`.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 100.0)]
        kappa_ef: f64,
        #[arg(long, default_value_t = 100.0)]
        kappa_eg: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BuilderName {
    GaussianLinear,
    BallMfn,
    BallL1,
    BallInterpolation,
    CoordinateQuadratic,
    CoordinateMfn,
}

#[derive(Clone, Copy, ValueEnum)]
enum FunctionName {
    Rosenbrock,
    RosenbrockMild,
    Sphere,
}

fn builder(name: BuilderName, n: usize) -> ModelBuilder {
    match name {
        BuilderName::GaussianLinear => ModelBuilder::GaussianLinear { points: n },
        BuilderName::BallMfn => ModelBuilder::BallMfn { points: 2 * n },
        BuilderName::BallL1 => ModelBuilder::BallL1 {
            points: (n + 1) * (n + 2) / 2 - 1,
        },
        BuilderName::BallInterpolation => ModelBuilder::BallInterpolation,
        BuilderName::CoordinateQuadratic => ModelBuilder::COORDINATE_QUADRATIC,
        BuilderName::CoordinateMfn => ModelBuilder::CoordinateMfn,
    }
}

fn function(name: FunctionName, n: usize) -> Result<Box<dyn Function>> {
    if n < 2 && !matches!(name, FunctionName::Sphere) {
        return Err(HarnessError::Config("rosenbrock needs n >= 2".into()));
    }
    Ok(match name {
        FunctionName::Rosenbrock => Box::new(Rosenbrock {
            curvature: 100.0,
            dim: n,
        }),
        FunctionName::RosenbrockMild => Box::new(Rosenbrock::mild(n)),
        FunctionName::Sphere => Box::new(Sphere { dim: n }),
    })
}

fn emit(report: &Report, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(dir) => {
            probdfo_harness::experiment::write_outputs(report, &dir)?;
            println!("wrote {}", dir.join("report.txt").display());
        }
        None => print!("{}", report.render()),
    }
    Ok(())
}

fn diagnostics_report(diagnostics: DiagnosticsReport) -> Report {
    Report {
        experiment: ExperimentId::Diagnostics,
        runs: Vec::new(),
        diagnostics: Some(diagnostics),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed } => {
            let text = fs::read_to_string(&config).map_err(|source| HarnessError::Io {
                path: config.clone(),
                source,
            })?;
            let mut config = parse_config(&text)?;
            if let Some(seed) = seed {
                config.seeds = vec![seed];
            }
            if cli.out.is_some() {
                config.out = cli.out;
            }
            let report = run_experiment(&config)?;
            match &config.out {
                Some(dir) => println!("wrote {}", dir.join("report.txt").display()),
                None => print!("{}", report.render()),
            }
            Ok(())
        }
        Command::Diagnose(Diagnose::CondTail {
            n,
            p,
            lambda,
            trials,
            seed,
        }) => {
            let entries = condition_number_tail(n, p, &lambda, trials, &mut Rng::seed_from_u64(seed))?;
            emit(
                &diagnostics_report(DiagnosticsReport {
                    tails: vec![TailTable { n, p, trials, entries }],
                    rates: Vec::new(),
                }),
                cli.out,
            )
        }
        Command::Diagnose(Diagnose::ModelRate {
            builder: name,
            function: fname,
            delta,
            trials,
            seed,
            n,
            kappa_ef,
            kappa_eg,
        }) => {
            let f = function(fname, n)?;
            let kappa = QualityConstants::new(kappa_ef, kappa_eg, 1.0)?;
            let x: DVector<f64> = start_point(n);
            let estimate = estimate_model_quality_rate(
                &mut builder(name, n),
                f.as_ref(),
                &x,
                delta,
                &kappa,
                QualityOrder::FullyLinear,
                trials,
                &mut Rng::seed_from_u64(seed),
            )?;
            emit(
                &diagnostics_report(DiagnosticsReport {
                    tails: Vec::new(),
                    rates: vec![RateRow {
                        n,
                        delta,
                        kappa_ef,
                        kappa_eg,
                        estimate,
                    }],
                }),
                cli.out,
            )
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

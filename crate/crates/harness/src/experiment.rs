//! Running configured experiments.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;
use probdfo_core::baselines::{run_baseline, Baseline, DirectSearchConfig};
use probdfo_core::functions::Rosenbrock;
use probdfo_core::models::QualityConstants;
use probdfo_core::trust_region::{run_with_monitor, MonitorReport};
use probdfo_core::{Function, ModelBuilder, Objective, Rng, TrustRegionConfig};

use crate::config::{ExperimentConfig, ExperimentId, Method};
use crate::diagnostics::{condition_number_tail, estimate_model_quality_rate, QualityOrder};
use crate::error::{io_error, HarnessError, Result};
use crate::report::{DiagnosticsReport, RateRow, Report, RunSummary, TailTable};
use crate::trace::{emit_path, emit_trace_with_metadata};

/// `(-1.2, 1, 0, …, 0)`.
pub fn start_point(n: usize) -> DVector<f64> {
    let mut x = DVector::zeros(n);
    x[0] = -1.2;
    if n > 1 {
        x[1] = 1.0;
    }
    x
}

/// Objective of an experiment: classical Rosenbrock for `rosenbrock2d`, the
/// curvature-10 variant in 2 and 10 dimensions for the model experiments.
pub fn objective_function(experiment: ExperimentId) -> Option<Rosenbrock> {
    match experiment {
        ExperimentId::Rosenbrock2d => Some(Rosenbrock::classic()),
        ExperimentId::MfnVsRandom => Some(Rosenbrock::mild(2)),
        ExperimentId::Sparse10d => Some(Rosenbrock::mild(10)),
        ExperimentId::Diagnostics => None,
    }
}

/// The model builder behind a trust-region method.
pub fn builder_for(method: Method, config: &ExperimentConfig) -> Option<ModelBuilder> {
    Some(match method {
        Method::Trq => ModelBuilder::CoordinateQuadratic {
            spacing: config.spacing,
        },
        Method::Rstr => ModelBuilder::BallL1 {
            points: config.sample_points,
        },
        Method::Gstr => ModelBuilder::GreedyL1 {
            max_points: config.greedy_points,
        },
        Method::Mfn => ModelBuilder::GreedyMfn {
            max_points: config.greedy_points,
        },
        Method::MfnCoord => ModelBuilder::CoordinateMfn,
        Method::MfnBall => ModelBuilder::BallMfn {
            points: config.ball_points,
        },
        Method::Interp => ModelBuilder::BallInterpolation,
        Method::Cs | Method::Dsr | Method::Rs => return None,
    })
}

/// Direct-search settings derived from the trust-region ones.
pub fn direct_search_config(tr: &TrustRegionConfig, c_rs: f64, seed: u64) -> DirectSearchConfig {
    DirectSearchConfig {
        step_0: tr.delta_0,
        step_max: tr.delta_max,
        step_min: tr.delta_min,
        budget: tr.budget,
        f_target: tr.f_target,
        c_rs,
        seed,
    }
}

fn path_values(f0: f64, trace: &[probdfo_core::trust_region::IterationRecord]) -> Vec<f64> {
    std::iter::once(f0).chain(trace.iter().map(|r| r.f)).collect()
}

/// Runs one method with one seed on `function` from `x0`.
pub fn run_method(
    config: &ExperimentConfig,
    method: Method,
    seed: u64,
    function: &dyn Function,
    x0: &DVector<f64>,
) -> Result<RunSummary> {
    let mut objective = Objective::new(function);
    if method.is_baseline() {
        let kind = match method {
            Method::Cs => Baseline::CompassSearch,
            Method::Dsr => Baseline::RandomDirectSearch,
            _ => Baseline::RandomSearch,
        };
        let ds = direct_search_config(&config.trust_region, config.c_rs, seed);
        let result = run_baseline(kind, &mut objective, x0, &ds)?;
        let f0 = if result.evaluations == 0 { f64::NAN } else { function.value(x0) };
        let trace = result.trace().to_vec();
        return Ok(RunSummary {
            method,
            seed,
            evaluations: result.evaluations,
            f0,
            termination: result.termination,
            monitor: MonitorReport::default(),
            path_f: path_values(f0, &trace),
            path: result.path,
            trace,
        });
    }
    let mut builder = builder_for(method, config).expect("trust-region method");
    let tr = TrustRegionConfig {
        seed,
        ..config.trust_region
    };
    let result = run_with_monitor(config.driver, &mut builder, &mut objective, x0, &tr, config.monitor)?;
    let f0 = if result.evaluations == 0 { f64::NAN } else { function.value(x0) };
    let trace = result.trace().to_vec();
    Ok(RunSummary {
        method,
        seed,
        evaluations: result.evaluations,
        f0,
        termination: result.termination,
        monitor: result.monitor,
        path_f: path_values(f0, &trace),
        path: result.path,
        trace,
    })
}

fn run_diagnostics(config: &ExperimentConfig) -> Result<DiagnosticsReport> {
    let d = &config.diagnostics;
    let seed = config.seeds[0];
    let mut report = DiagnosticsReport::default();
    for &n in &d.dims {
        let mut rng = Rng::seed_from_u64(seed);
        report.tails.push(TailTable {
            n,
            p: n,
            trials: d.tail_trials,
            entries: condition_number_tail(n, n, &d.lambdas, d.tail_trials, &mut rng)?,
        });
    }
    let kappa = QualityConstants::new(d.kappa_ef, d.kappa_eg, 1.0)?;
    for &n in &d.rate_dims {
        if n < 2 {
            return Err(HarnessError::Config("rate_dims must be at least 2".into()));
        }
        let mut rng = Rng::seed_from_u64(seed);
        let mut builder = ModelBuilder::GaussianLinear { points: n };
        let function = Rosenbrock::mild(n);
        let estimate = estimate_model_quality_rate(
            &mut builder,
            &function,
            &start_point(n),
            d.rate_delta,
            &kappa,
            QualityOrder::FullyLinear,
            d.rate_trials,
            &mut rng,
        )?;
        report.rates.push(RateRow {
            n,
            delta: d.rate_delta,
            kappa_ef: d.kappa_ef,
            kappa_eg: d.kappa_eg,
            estimate,
        });
    }
    Ok(report)
}

/// Runs every `(method, seed)` pair in that order, then writes traces, paths
/// and the report when `config.out` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    if config.seeds.is_empty() {
        return Err(HarnessError::Config("at least one seed is required".into()));
    }
    let report = match objective_function(config.experiment) {
        None => Report {
            experiment: config.experiment,
            runs: Vec::new(),
            diagnostics: Some(run_diagnostics(config)?),
        },
        Some(function) => {
            let x0 = start_point(function.dim);
            let mut runs = Vec::new();
            for &method in &config.methods {
                for &seed in &config.seeds {
                    log::info!("{} {method} seed {seed}", config.experiment);
                    runs.push(run_method(config, method, seed, &function, &x0)?);
                }
            }
            Report {
                experiment: config.experiment,
                runs,
                diagnostics: None,
            }
        }
    };
    if let Some(dir) = &config.out {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(io_error(path))?;
    let mut sink = BufWriter::new(file);
    body(&mut sink).and_then(|_| sink.flush()).map_err(io_error(path))
}

/// Writes `<stem>.trace`, `<stem>.path` per run and `report.txt` into `dir`.
pub fn write_outputs(report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_error(dir))?;
    for run in &report.runs {
        let stem = run.stem();
        write_file(&dir.join(format!("{stem}.trace")), |w| {
            emit_trace_with_metadata(&run.metadata(), &run.trace, w)
        })?;
        write_file(&dir.join(format!("{stem}.path")), |w| emit_path(&run.path, &run.path_f, w))?;
    }
    write_file(&dir.join("report.txt"), |w| w.write_all(report.render().as_bytes()))
}

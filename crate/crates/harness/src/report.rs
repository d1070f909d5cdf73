//! Experiment reports.
//!
//! A report is a human-readable table followed by a `[summary]` section of
//! `key = value` lines. Every per-run number is taken from the stored trace
//! (iteration count, last `f` at trace precision, the `evaluations`
//! metadata), so the summary can be recomputed from the trace files alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DVector;
use probdfo_core::trust_region::{IterationRecord, MonitorReport};
use probdfo_core::Termination;

use crate::config::{ExperimentId, Method};
use crate::diagnostics::{RateEstimate, TailEstimate};
use crate::error::{HarnessError, Result};
use crate::trace::{sci, stored_f, ParsedTrace};

pub fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Budget => "budget",
        Termination::DeltaMin => "delta-min",
        Termination::Target => "target",
    }
}

pub fn parse_termination(s: &str) -> Option<Termination> {
    match s {
        "budget" => Some(Termination::Budget),
        "delta-min" => Some(Termination::DeltaMin),
        "target" => Some(Termination::Target),
        _ => None,
    }
}

/// One finished run with everything written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub method: Method,
    pub seed: u64,
    pub evaluations: usize,
    pub f0: f64,
    pub termination: Termination,
    pub monitor: MonitorReport,
    pub trace: Vec<IterationRecord>,
    /// `x_0, x_1, …` with the matching values in `path_f`.
    pub path: Vec<DVector<f64>>,
    pub path_f: Vec<f64>,
}

impl RunSummary {
    pub fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("method".into(), self.method.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("evaluations".into(), self.evaluations.to_string()),
            ("termination".into(), termination_name(self.termination).into()),
            ("f0".into(), sci(self.f0, 8)),
            ("monitor_checked".into(), self.monitor.checked.to_string()),
            ("monitor_violations".into(), self.monitor.violations.to_string()),
        ]
    }

    pub fn stats(&self) -> RunStats {
        RunStats {
            method: self.method,
            seed: self.seed,
            iterations: self.trace.len(),
            evaluations: self.evaluations,
            final_f: stored_f(self.trace.last().map_or(self.f0, |r| r.f)),
            termination: self.termination,
            monitor_checked: self.monitor.checked,
            monitor_violations: self.monitor.violations,
        }
    }

    /// File stem used for the trace and path files.
    pub fn stem(&self) -> String {
        format!("{}_seed{}", self.method.name().to_ascii_lowercase(), self.seed)
    }
}

/// The numbers a report shows for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStats {
    pub method: Method,
    pub seed: u64,
    pub iterations: usize,
    pub evaluations: usize,
    pub final_f: f64,
    pub termination: Termination,
    pub monitor_checked: usize,
    pub monitor_violations: usize,
}

impl RunStats {
    /// Recomputes the run statistics from a parsed trace file.
    pub fn from_trace(trace: &ParsedTrace) -> Result<Self> {
        let field = |key: &str| {
            trace.get(key).ok_or_else(|| HarnessError::Trace {
                line: 0,
                message: format!("missing metadata `{key}`"),
            })
        };
        let malformed = |key: &str| HarnessError::Trace {
            line: 0,
            message: format!("malformed metadata `{key}`"),
        };
        let f0: f64 = field("f0")?.parse().or_else(|_| {
            if field("f0")? == "nan" {
                Ok(f64::NAN)
            } else {
                Err(malformed("f0"))
            }
        })?;
        Ok(Self {
            method: field("method")?.parse()?,
            seed: field("seed")?.parse().map_err(|_| malformed("seed"))?,
            iterations: trace.records.len(),
            evaluations: field("evaluations")?.parse().map_err(|_| malformed("evaluations"))?,
            final_f: trace.records.last().map_or(f0, |r| r.f),
            termination: parse_termination(field("termination")?).ok_or_else(|| malformed("termination"))?,
            monitor_checked: field("monitor_checked")?.parse().map_err(|_| malformed("monitor_checked"))?,
            monitor_violations: field("monitor_violations")?
                .parse()
                .map_err(|_| malformed("monitor_violations"))?,
        })
    }
}

/// Median with the two middle values averaged for even counts.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub runs: usize,
    pub median_iterations: f64,
    pub median_evaluations: f64,
    pub median_final_f: f64,
}

/// Per-method medians, in method order.
pub fn summarize(stats: &[RunStats]) -> Vec<MethodSummary> {
    let mut groups: BTreeMap<Method, Vec<&RunStats>> = BTreeMap::new();
    for s in stats {
        groups.entry(s.method).or_default().push(s);
    }
    groups
        .into_iter()
        .map(|(method, runs)| {
            let pick = |f: &dyn Fn(&RunStats) -> f64| median(&runs.iter().map(|r| f(r)).collect::<Vec<_>>());
            MethodSummary {
                method,
                runs: runs.len(),
                median_iterations: pick(&|r| r.iterations as f64),
                median_evaluations: pick(&|r| r.evaluations as f64),
                median_final_f: pick(&|r| r.final_f),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailTable {
    pub n: usize,
    pub p: usize,
    pub trials: usize,
    pub entries: Vec<TailEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub n: usize,
    pub delta: f64,
    pub kappa_ef: f64,
    pub kappa_eg: f64,
    pub estimate: RateEstimate,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsReport {
    pub tails: Vec<TailTable>,
    pub rates: Vec<RateRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: ExperimentId,
    pub runs: Vec<RunSummary>,
    pub diagnostics: Option<DiagnosticsReport>,
}

impl Report {
    pub fn stats(&self) -> Vec<RunStats> {
        self.runs.iter().map(RunSummary::stats).collect()
    }

    pub fn summaries(&self) -> Vec<MethodSummary> {
        summarize(&self.stats())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let stats = self.stats();
        let summaries = summarize(&stats);
        let _ = writeln!(out, "experiment: {}", self.experiment);
        if !stats.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "{:<10} {:>6} {:>8} {:>8} {:>16}  termination",
                "method", "seed", "it", "nf", "f"
            );
            for s in &stats {
                let _ = writeln!(
                    out,
                    "{:<10} {:>6} {:>8} {:>8} {:>16}  {}",
                    s.method.name(),
                    s.seed,
                    s.iterations,
                    s.evaluations,
                    sci(s.final_f, 8),
                    termination_name(s.termination)
                );
            }
            let _ = writeln!(out);
            let _ = writeln!(out, "medians:");
            for m in &summaries {
                let _ = writeln!(
                    out,
                    "{:<10} it={} nf={} f={} ({} runs)",
                    m.method.name(),
                    m.median_iterations,
                    m.median_evaluations,
                    sci(m.median_final_f, 2),
                    m.runs
                );
            }
        }
        if let Some(diag) = &self.diagnostics {
            render_diagnostics(&mut out, diag);
        }

        let _ = writeln!(out);
        let _ = writeln!(out, "[summary]");
        for (key, value) in self.summary_pairs() {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    /// The machine-readable section, in output order.
    pub fn summary_pairs(&self) -> Vec<(String, String)> {
        let stats = self.stats();
        summary_pairs(self.experiment, &stats, self.diagnostics.as_ref())
    }
}

/// The `[summary]` section computed from run statistics (for instance as
/// recomputed from trace files).
pub fn summary_pairs(
    experiment: ExperimentId,
    stats: &[RunStats],
    diagnostics: Option<&DiagnosticsReport>,
) -> Vec<(String, String)> {
    let mut pairs = vec![("experiment".to_string(), experiment.to_string())];
    for m in summarize(stats) {
        let p = m.method.name();
        pairs.push((format!("{p}.runs"), m.runs.to_string()));
        pairs.push((format!("{p}.median_iterations"), m.median_iterations.to_string()));
        pairs.push((format!("{p}.median_evaluations"), m.median_evaluations.to_string()));
        pairs.push((format!("{p}.median_final_f"), sci(m.median_final_f, 8)));
    }
    for s in stats {
        let p = format!("{}.seed{}", s.method.name(), s.seed);
        pairs.push((format!("{p}.iterations"), s.iterations.to_string()));
        pairs.push((format!("{p}.evaluations"), s.evaluations.to_string()));
        pairs.push((format!("{p}.final_f"), sci(s.final_f, 8)));
        pairs.push((format!("{p}.termination"), termination_name(s.termination).to_string()));
    }
    if !stats.is_empty() {
        let checked: usize = stats.iter().map(|r| r.monitor_checked).sum();
        let violations: usize = stats.iter().map(|r| r.monitor_violations).sum();
        pairs.push(("monitor.checked".into(), checked.to_string()));
        pairs.push(("monitor.violations".into(), violations.to_string()));
    }
    if let Some(diag) = diagnostics {
        for table in &diag.tails {
            for e in &table.entries {
                let p = format!("tail.n{}.p{}.lambda{}", table.n, table.p, e.lambda);
                pairs.push((format!("{p}.probability"), e.probability.to_string()));
                pairs.push((format!("{p}.stderr"), e.stderr.to_string()));
                if let Some(b) = e.bound {
                    pairs.push((format!("{p}.bound"), b.to_string()));
                }
                pairs.push((format!("{p}.flagged"), e.flagged.to_string()));
            }
        }
        for row in &diag.rates {
            let p = format!("rate.n{}", row.n);
            pairs.push((format!("{p}.rate"), row.estimate.rate.to_string()));
            pairs.push((format!("{p}.stderr"), row.estimate.stderr.to_string()));
            pairs.push((format!("{p}.trials"), row.estimate.trials.to_string()));
        }
    }
    pairs
}

fn render_diagnostics(out: &mut String, diag: &DiagnosticsReport) {
    for table in &diag.tails {
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "condition-number tail, n={} p={} ({} trials):",
            table.n, table.p, table.trials
        );
        let _ = writeln!(out, "{:>10} {:>12} {:>12} {:>12}  flag", "lambda", "P(cond>L)", "stderr", "bound");
        for e in &table.entries {
            let bound = e.bound.map_or_else(|| "-".to_string(), |b| format!("{b:.6}"));
            let _ = writeln!(
                out,
                "{:>10} {:>12.6} {:>12.6} {:>12}  {}",
                e.lambda,
                e.probability,
                e.stderr,
                bound,
                if e.flagged { "EXCEEDS" } else { "ok" }
            );
        }
    }
    if !diag.rates.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "fully linear rate of Gaussian (n+1)-point interpolation:");
        for row in &diag.rates {
            let _ = writeln!(
                out,
                "n={} delta={} kappa_ef={} kappa_eg={}: rate={:.4} stderr={:.4} ({} trials)",
                row.n, row.delta, row.kappa_ef, row.kappa_eg, row.estimate.rate, row.estimate.stderr, row.estimate.trials
            );
        }
    }
}

/// Reads the `[summary]` section of a rendered report.
pub fn parse_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .skip_while(|l| *l != "[summary]")
        .skip(1)
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

//! Experiment configuration files.
//!
//! The format is a flat list of `key = value` lines. `#` starts a comment
//! (outside double quotes), blank lines are ignored, and a value is a number,
//! a bare word, a double-quoted string, or a bracketed comma-separated list
//! of those. Every key may appear at most once and unknown keys are errors.
//!
//! ```text
//! experiment = sparse10d
//! methods = [RSTR, GSTR, MFN]
//! seeds = [0, 1, 2]
//! budget = 5000
//! f_target = 1e-10
//! ```
//!
//! `experiment` is required; it selects the defaults for every other key.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use probdfo_core::models::QualityConstants;
use probdfo_core::subproblem::StepRule;
use probdfo_core::{Driver, Error as CoreError, TrustRegionConfig};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    /// Baselines and TRQ on the classical 2-D Rosenbrock function.
    Rosenbrock2d,
    /// Coordinate versus random-ball 5-point MFN models on the mild
    /// Rosenbrock function.
    MfnVsRandom,
    /// Sparse, greedy and MFN models on the 10-D embedding.
    Sparse10d,
    /// Condition-number tails and fully linear rates.
    Diagnostics,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Rosenbrock2d => "rosenbrock2d",
            ExperimentId::MfnVsRandom => "mfn-vs-random",
            ExperimentId::Sparse10d => "sparse10d",
            ExperimentId::Diagnostics => "diagnostics",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        [
            ExperimentId::Rosenbrock2d,
            ExperimentId::MfnVsRandom,
            ExperimentId::Sparse10d,
            ExperimentId::Diagnostics,
        ]
        .into_iter()
        .find(|id| id.name() == s)
        .ok_or_else(|| HarnessError::UnknownExperiment(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Compass search.
    Cs,
    /// Direct search over random orthogonal bases.
    Dsr,
    /// Gaussian random search.
    Rs,
    /// Trust region with coordinate quadratic interpolation.
    Trq,
    /// Trust region with sparse ℓ1 models on fresh ball samples.
    Rstr,
    /// Trust region with sparse ℓ1 models on reused points.
    Gstr,
    /// Trust region with minimum-norm models on reused points.
    Mfn,
    /// Minimum-norm models on `{x, x ± δeᵢ}`.
    MfnCoord,
    /// Minimum-norm models on random points in the ball.
    MfnBall,
    /// Determined quadratic interpolation on random points in the ball.
    Interp,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Cs,
        Method::Dsr,
        Method::Rs,
        Method::Trq,
        Method::Rstr,
        Method::Gstr,
        Method::Mfn,
        Method::MfnCoord,
        Method::MfnBall,
        Method::Interp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cs => "CS",
            Method::Dsr => "DSR",
            Method::Rs => "RS",
            Method::Trq => "TRQ",
            Method::Rstr => "RSTR",
            Method::Gstr => "GSTR",
            Method::Mfn => "MFN",
            Method::MfnCoord => "MFN-COORD",
            Method::MfnBall => "MFN-BALL",
            Method::Interp => "INTERP",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(self, Method::Cs | Method::Dsr | Method::Rs)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| HarnessError::UnknownMethod(s.to_string()))
    }
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub methods: Vec<Method>,
    /// Shared by all trust-region methods; `seed` is replaced per run.
    pub trust_region: TrustRegionConfig,
    pub driver: Driver,
    /// Random-search scale `c_rs`.
    pub c_rs: f64,
    /// Upper bound on the TRQ sample spacing.
    pub spacing: f64,
    /// Points per RSTR sample set.
    pub sample_points: usize,
    /// Cap on greedy sample sets.
    pub greedy_points: usize,
    /// Random points (besides the center) per MFN-BALL set.
    pub ball_points: usize,
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    /// Constants of the sufficient-accuracy monitor; `None` disables it.
    pub monitor: Option<QualityConstants>,
    pub diagnostics: DiagnosticsConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    /// Dimensions `n = p` of the condition-number tail study.
    pub dims: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub tail_trials: usize,
    /// Dimensions of the fully linear rate study.
    pub rate_dims: Vec<usize>,
    pub rate_trials: usize,
    pub rate_delta: f64,
    pub kappa_ef: f64,
    pub kappa_eg: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 5, 10],
            lambdas: vec![50.0, 100.0, 500.0],
            tail_trials: 100_000,
            rate_dims: vec![2, 5],
            rate_trials: 10_000,
            rate_delta: 1e-2,
            kappa_ef: 1000.0,
            kappa_eg: 1000.0,
        }
    }
}

impl ExperimentConfig {
    /// The defaults of an experiment, with seeds `0..11`.
    pub fn defaults(experiment: ExperimentId) -> Self {
        let mut trust_region = TrustRegionConfig::default();
        let methods = match experiment {
            ExperimentId::Rosenbrock2d => {
                trust_region.budget = 20_000;
                trust_region.f_target = 1e-6;
                trust_region.step_rule = StepRule::Exact;
                vec![Method::Cs, Method::Dsr, Method::Rs, Method::Trq]
            }
            ExperimentId::MfnVsRandom => {
                trust_region.budget = 20_000;
                trust_region.f_target = 1e-4;
                vec![Method::MfnCoord, Method::MfnBall]
            }
            ExperimentId::Sparse10d => {
                trust_region.budget = 5_000;
                trust_region.f_target = 1e-10;
                trust_region.eta2 = 0.1;
                trust_region.eta3 = 0.01;
                trust_region.step_rule = StepRule::Exact;
                vec![Method::Rstr, Method::Gstr, Method::Mfn]
            }
            ExperimentId::Diagnostics => Vec::new(),
        };
        Self {
            experiment,
            methods,
            trust_region,
            driver: Driver::FirstOrder,
            c_rs: 30.0,
            spacing: 1e-4,
            sample_points: 26,
            greedy_points: 31,
            ball_points: 4,
            seeds: (0..11).collect(),
            out: None,
            monitor: None,
            diagnostics: DiagnosticsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Scalar(String),
    List(Vec<String>),
}

struct Entry {
    line: usize,
    key: String,
    value: Value,
}

fn syntax(line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Syntax {
        line,
        message: message.into(),
    }
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_atom(text: &str, line: usize) -> Result<String> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix('"') {
        let inner = rest.strip_suffix('"').ok_or_else(|| syntax(line, "unterminated string"))?;
        if inner.contains('"') {
            return Err(syntax(line, "stray quote in string"));
        }
        return Ok(inner.to_string());
    }
    if text.is_empty() {
        return Err(syntax(line, "empty value"));
    }
    if text.contains(|c: char| c.is_whitespace() || matches!(c, '"' | '[' | ']' | ',' | '=')) {
        return Err(syntax(line, format!("malformed value `{text}`")));
    }
    Ok(text.to_string())
}

fn parse_value(text: &str, line: usize) -> Result<Value> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix('[') {
        let inner = rest.strip_suffix(']').ok_or_else(|| syntax(line, "unterminated list"))?;
        if inner.trim().is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        let items = inner.split(',').map(|item| parse_atom(item, line)).collect::<Result<_>>()?;
        return Ok(Value::List(items));
    }
    parse_atom(text, line).map(Value::Scalar)
}

fn tokenize(text: &str) -> Result<Vec<Entry>> {
    let mut entries: Vec<Entry> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| syntax(line, "expected `key = value`"))?;
        let key = key.trim();
        let valid_key = key.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid_key {
            return Err(syntax(line, format!("invalid key `{key}`")));
        }
        if let Some(first) = entries.iter().find(|e| e.key == key) {
            return Err(syntax(line, format!("duplicate key `{key}` (first set on line {})", first.line)));
        }
        entries.push(Entry {
            line,
            key: key.to_string(),
            value: parse_value(value, line)?,
        });
    }
    Ok(entries)
}

struct Reader<'a> {
    entry: &'a Entry,
}

impl Reader<'_> {
    fn range(&self, message: impl Into<String>) -> HarnessError {
        HarnessError::Range {
            line: self.entry.line,
            key: self.entry.key.clone(),
            message: message.into(),
        }
    }

    fn scalar(&self) -> Result<&str> {
        match &self.entry.value {
            Value::Scalar(s) => Ok(s),
            Value::List(_) => Err(self.range("expects a single value, not a list")),
        }
    }

    fn list(&self) -> Result<&[String]> {
        match &self.entry.value {
            Value::List(items) => Ok(items),
            Value::Scalar(_) => Err(self.range("expects a list")),
        }
    }

    fn number_from(&self, text: &str) -> Result<f64> {
        match text.parse::<f64>() {
            Ok(v) if !v.is_nan() => Ok(v),
            _ => Err(self.range(format!("expects a number, found `{text}`"))),
        }
    }

    fn number(&self) -> Result<f64> {
        self.number_from(self.scalar()?)
    }

    fn count_from(&self, text: &str) -> Result<usize> {
        text.parse::<usize>()
            .map_err(|_| self.range(format!("expects a non-negative integer, found `{text}`")))
    }

    fn count(&self) -> Result<usize> {
        self.count_from(self.scalar()?)
    }

    fn check(&self, ok: bool, message: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(self.range(message))
        }
    }

    fn positive(&self) -> Result<f64> {
        let v = self.number()?;
        self.check(v > 0.0, "must be positive")?;
        Ok(v)
    }
}

/// Parses a configuration file; see the module documentation for the grammar.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let entries = tokenize(text)?;
    let experiment_entry = entries
        .iter()
        .find(|e| e.key == "experiment")
        .ok_or_else(|| HarnessError::Config("missing required key `experiment`".into()))?;
    let experiment = Reader { entry: experiment_entry }.scalar()?.parse::<ExperimentId>()?;
    let mut config = ExperimentConfig::defaults(experiment);
    let mut lines: HashMap<&str, usize> = HashMap::new();
    let mut monitor_ef = None;
    let mut monitor_eg = None;

    for entry in &entries {
        let r = Reader { entry };
        let tr = &mut config.trust_region;
        let diag = &mut config.diagnostics;
        lines.insert(entry.key.as_str(), entry.line);
        match entry.key.as_str() {
            "experiment" => {}
            "methods" => {
                let methods = r.list()?.iter().map(|m| m.parse::<Method>()).collect::<Result<Vec<_>>>()?;
                r.check(!methods.is_empty(), "must list at least one method")?;
                config.methods = methods;
            }
            "seeds" => {
                let seeds = r
                    .list()?
                    .iter()
                    .map(|s| s.parse::<u64>().map_err(|_| r.range(format!("invalid seed `{s}`"))))
                    .collect::<Result<Vec<_>>>()?;
                r.check(!seeds.is_empty(), "must contain at least one seed")?;
                config.seeds = seeds;
            }
            "out" => config.out = Some(PathBuf::from(r.scalar()?)),
            "driver" => {
                config.driver = match r.scalar()? {
                    "first" => Driver::FirstOrder,
                    "three" => Driver::ThreeThreshold,
                    "second" => Driver::SecondOrder,
                    other => return Err(r.range(format!("must be first, three or second, found `{other}`"))),
                }
            }
            "step_rule" => {
                tr.step_rule = match r.scalar()? {
                    "cauchy" => StepRule::Cauchy,
                    "exact" => StepRule::Exact,
                    other => return Err(r.range(format!("must be cauchy or exact, found `{other}`"))),
                }
            }
            "eta1" => {
                tr.eta1 = r.number()?;
                r.check(tr.eta1 > 0.0 && tr.eta1 < 1.0, "must lie in (0, 1)")?;
            }
            "eta2" => tr.eta2 = r.positive()?,
            "eta3" => tr.eta3 = r.positive()?,
            "gamma" => {
                tr.gamma = r.number()?;
                r.check(tr.gamma > 1.0 && tr.gamma.is_finite(), "must be greater than 1")?;
            }
            "delta_max" => tr.delta_max = r.positive()?,
            "delta_0" => tr.delta_0 = r.positive()?,
            "delta_min" => {
                tr.delta_min = r.number()?;
                r.check(tr.delta_min >= 0.0, "must be non-negative")?;
            }
            "kappa_bhm" => tr.kappa_bhm = r.positive()?,
            "budget" => tr.budget = r.count()?,
            "f_target" => tr.f_target = r.number()?,
            "c_rs" => config.c_rs = r.positive()?,
            "spacing" => config.spacing = r.positive()?,
            "sample_points" => {
                config.sample_points = r.count()?;
                r.check(config.sample_points >= 1, "must be at least 1")?;
            }
            "greedy_points" => {
                config.greedy_points = r.count()?;
                r.check(config.greedy_points >= 2, "must be at least 2")?;
            }
            "ball_points" => {
                config.ball_points = r.count()?;
                r.check(config.ball_points >= 1, "must be at least 1")?;
            }
            "monitor_kappa_ef" => monitor_ef = Some(r.positive()?),
            "monitor_kappa_eg" => monitor_eg = Some(r.positive()?),
            "dims" | "rate_dims" => {
                let dims = r.list()?.iter().map(|d| r.count_from(d)).collect::<Result<Vec<_>>>()?;
                r.check(!dims.is_empty() && dims.iter().all(|&d| d >= 1), "must list dimensions of at least 1")?;
                if entry.key == "dims" {
                    diag.dims = dims;
                } else {
                    diag.rate_dims = dims;
                }
            }
            "lambdas" => {
                let lambdas = r.list()?.iter().map(|l| r.number_from(l)).collect::<Result<Vec<_>>>()?;
                r.check(!lambdas.is_empty() && lambdas.iter().all(|&l| l >= 1.0), "must list values of at least 1")?;
                diag.lambdas = lambdas;
            }
            "tail_trials" => {
                diag.tail_trials = r.count()?;
                r.check(diag.tail_trials >= 1000, "must be at least 1000")?;
            }
            "rate_trials" => {
                diag.rate_trials = r.count()?;
                r.check(diag.rate_trials >= 100, "must be at least 100")?;
            }
            "rate_delta" => diag.rate_delta = r.positive()?,
            "kappa_ef" => diag.kappa_ef = r.positive()?,
            "kappa_eg" => diag.kappa_eg = r.positive()?,
            _ => {
                return Err(HarnessError::UnknownKey {
                    line: entry.line,
                    key: entry.key.clone(),
                })
            }
        }
    }

    config.monitor = match (monitor_ef, monitor_eg) {
        (None, None) => None,
        (Some(ef), Some(eg)) => Some(QualityConstants::new(ef, eg, 1.0)?),
        _ => {
            return Err(HarnessError::Config(
                "monitor_kappa_ef and monitor_kappa_eg must be given together".into(),
            ))
        }
    };
    match config.trust_region.validate() {
        Ok(()) => {}
        Err(CoreError::InvalidParameter { name, reason }) => {
            return Err(HarnessError::Range {
                line: lines.get(name).copied().unwrap_or(0),
                key: name.to_string(),
                message: reason.to_string(),
            })
        }
        Err(e) => return Err(e.into()),
    }
    if config.experiment != ExperimentId::Diagnostics && config.methods.is_empty() {
        return Err(HarnessError::Config("no methods to run".into()));
    }
    Ok(config)
}

//! Command-line front end: quantizer information reports, optimizer runs,
//! and simulation batches driven by a declarative TOML config.
//!
//! Outputs are deterministic given the config and seed: the config is
//! echoed into '#'-prefixed header lines of the CSV and into the JSON
//! mirror, and every number is derived from counter-keyed substreams.

use crate::gauss::{FoldedHypothesis, Hypothesis, HypothesisModel};
use crate::info::{folded_quantizer_kl, maximin_objective, quantizer_kl, InfoError};
use crate::mc::{run_trials, Estimator, McConfig, McError, TestSpec};
use crate::optimize::{
    optimize_invariant_lambda, optimize_maximin_f, optimize_threshold, OptimizationResult,
    OptimizeError,
};
use crate::quantizer::{DeterministicQuantizer, Direction, QuantizerError, RandomQuantizer};
use crate::seq_tests::{InvariantConfig, SeqTestError, TwoStageConfig, DEFAULT_MAX_SAMPLES};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or config; maps to exit code 1.
    #[error("{0}")]
    Usage(String),
    /// Runtime failure (simulation or I/O); maps to exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<QuantizerError> for CliError {
    fn from(e: QuantizerError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<InfoError> for CliError {
    fn from(e: InfoError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<SeqTestError> for CliError {
    fn from(e: SeqTestError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Parse a quantizer spec: `threshold:0.79`, `threshold:0.79:lt`,
/// `interval:-0.5:1.0`, `abs:0.5`.
pub fn parse_quantizer(spec: &str) -> Result<DeterministicQuantizer, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> Result<f64, CliError> {
        s.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("bad number `{s}` in quantizer spec `{spec}`")))
    };
    let q = match parts.as_slice() {
        ["threshold", l] => DeterministicQuantizer::Threshold {
            lambda: num(l)?,
            direction: Direction::Ge,
        },
        ["threshold", l, dir] => {
            let direction = match *dir {
                "ge" => Direction::Ge,
                "lt" => Direction::Lt,
                other => {
                    return Err(CliError::Usage(format!(
                        "bad direction `{other}` (expected ge or lt)"
                    )))
                }
            };
            DeterministicQuantizer::Threshold { lambda: num(l)?, direction }
        }
        ["interval", lo, hi] => DeterministicQuantizer::Interval {
            lo: num(lo)?,
            hi: num(hi)?,
            inside_bit: 1,
        },
        ["abs", l] => DeterministicQuantizer::Absolute { lambda: num(l)?, inside_bit: 1 },
        _ => {
            return Err(CliError::Usage(format!(
                "unrecognized quantizer spec `{spec}` \
                 (expected threshold:<l>[:ge|lt], interval:<lo>:<hi> or abs:<l>)"
            )))
        }
    };
    q.validate()?;
    Ok(q)
}

/// Which model the `info` command evaluates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfoModel {
    ThreeState,
    Invariant,
}

impl std::str::FromStr for InfoModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "three-state" => Ok(InfoModel::ThreeState),
            "invariant" => Ok(InfoModel::Invariant),
            other => Err(format!("unknown model `{other}` (expected three-state or invariant)")),
        }
    }
}

/// `info` subcommand: K-L numbers of one quantizer under all hypothesis
/// pairs, plus the maximin objective, six decimal places.
pub fn cmd_info(quantizer_spec: &str, model: InfoModel) -> Result<String, CliError> {
    let q = parse_quantizer(quantizer_spec)?;
    let m = HypothesisModel::standard();
    let mut out = String::new();
    writeln!(out, "# quantizer {q}").unwrap();
    match model {
        InfoModel::ThreeState => {
            let pairs = [
                (Hypothesis::F, Hypothesis::G1),
                (Hypothesis::F, Hypothesis::G2),
                (Hypothesis::G1, Hypothesis::F),
                (Hypothesis::G2, Hypothesis::F),
            ];
            for (from, to) in pairs {
                let v = quantizer_kl(&m, &q, from, to)?;
                writeln!(out, "I({from},{to})  {:.6}", v.value()).unwrap();
            }
            let v = maximin_objective(&m, &RandomQuantizer::deterministic(q))?;
            writeln!(out, "maximin   {:.6}", v.value()).unwrap();
        }
        InfoModel::Invariant => {
            let fg = folded_quantizer_kl(&m, &q, FoldedHypothesis::F, FoldedHypothesis::G)?;
            let gf = folded_quantizer_kl(&m, &q, FoldedHypothesis::G, FoldedHypothesis::F)?;
            writeln!(out, "I(f~,g~)  {:.6}", fg.value()).unwrap();
            writeln!(out, "I(g~,f~)  {:.6}", gf.value()).unwrap();
        }
    }
    Ok(out)
}

/// Target of the `optimize` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizeTarget {
    F,
    G1,
    G2,
    Invariant,
}

impl std::str::FromStr for OptimizeTarget {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f" => Ok(OptimizeTarget::F),
            "g1" => Ok(OptimizeTarget::G1),
            "g2" => Ok(OptimizeTarget::G2),
            "invariant" => Ok(OptimizeTarget::Invariant),
            other => Err(format!("unknown target `{other}` (expected f, g1, g2 or invariant)")),
        }
    }
}

fn format_optimization(target: &str, r: &OptimizationResult) -> String {
    let mut out = String::new();
    writeln!(out, "target          {target}").unwrap();
    writeln!(out, "quantizer       {}", r.quantizer).unwrap();
    writeln!(out, "objective       {:.6}", r.objective.value()).unwrap();
    writeln!(out, "grid_resolution {:e}", r.grid_resolution).unwrap();
    writeln!(out, "refined         {}", r.refined).unwrap();
    out
}

/// `optimize` subcommand.
pub fn cmd_optimize(target: OptimizeTarget, priors: Option<(f64, f64)>) -> Result<String, CliError> {
    let m = HypothesisModel::standard();
    let (label, result) = match target {
        OptimizeTarget::F => ("f", optimize_maximin_f(&m)?),
        OptimizeTarget::G1 => ("g1", optimize_threshold(&m, Hypothesis::G1)?),
        OptimizeTarget::G2 => ("g2", optimize_threshold(&m, Hypothesis::G2)?),
        OptimizeTarget::Invariant => {
            let (pf, pg) = priors.unwrap_or((1.0 / 3.0, 2.0 / 3.0));
            ("invariant", optimize_invariant_lambda(&m, pf, pg)?)
        }
    };
    Ok(format_optimization(label, &result))
}

/// Declarative experiment config (TOML). Unknown fields are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub priors: PriorsSection,
    pub losses: LossesSection,
    #[serde(rename = "tests")]
    pub tests: Vec<TestSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub replications: usize,
    pub seed: u64,
    pub estimator: Estimator,
    /// Sampling costs; one table row set per (test, c) cell.
    pub c: Vec<f64>,
    /// Output directory for results.csv / results.json.
    pub output: PathBuf,
    #[serde(default)]
    pub max_samples: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorsSection {
    pub f: f64,
    pub g1: f64,
    pub g2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossesSection {
    pub f: f64,
    pub g1: f64,
    pub g2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum TestSection {
    /// Two-stage test with one-shot feedback.
    DeltaI { u: f64 },
    /// Stationary folded SPRT with window width lambda.
    InvariantSprt { lambda: f64 },
}

impl TestSection {
    fn label(&self) -> String {
        match self {
            TestSection::DeltaI { .. } => "delta-i".to_string(),
            TestSection::InvariantSprt { lambda } => format!("invariant-sprt:{lambda}"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("config error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let e = &self.experiment;
        if e.replications == 0 {
            return Err(CliError::Usage("replications must be >= 1".into()));
        }
        if e.c.is_empty() {
            return Err(CliError::Usage("at least one sampling cost c is required".into()));
        }
        for &c in &e.c {
            if !(c > 0.0 && c < 1.0) {
                return Err(CliError::Usage(format!("sampling cost must lie in (0, 1), got {c}")));
            }
        }
        let priors = [self.priors.f, self.priors.g1, self.priors.g2];
        let sum: f64 = priors.iter().sum();
        if priors.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
            return Err(CliError::Usage(format!(
                "priors must be nonnegative and sum to 1, got {priors:?}"
            )));
        }
        let losses = [self.losses.f, self.losses.g1, self.losses.g2];
        if losses.iter().any(|w| !(*w > 0.0)) {
            return Err(CliError::Usage(format!(
                "losses must be strictly positive, got {losses:?}"
            )));
        }
        if self.tests.is_empty() {
            return Err(CliError::Usage("at least one [[tests]] section is required".into()));
        }
        for t in &self.tests {
            match t {
                TestSection::DeltaI { u } => {
                    if !(*u > 0.0 && *u < 0.5) {
                        return Err(CliError::Usage(format!(
                            "stage-1 margin u must lie in (0, 1/2), got {u}"
                        )));
                    }
                }
                TestSection::InvariantSprt { lambda } => {
                    if !(*lambda > 0.0) {
                        return Err(CliError::Usage(format!(
                            "window width lambda must be positive, got {lambda}"
                        )));
                    }
                    if (self.losses.g1 - self.losses.g2).abs() > 1e-12 {
                        return Err(CliError::Usage(
                            "invariant tests need equal g1/g2 losses".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn priors3(&self) -> [f64; 3] {
        [self.priors.f, self.priors.g1, self.priors.g2]
    }

    fn mc_config(&self, test: &TestSection, c: f64) -> Result<McConfig, CliError> {
        let priors = self.priors3();
        let max_samples = self.experiment.max_samples.unwrap_or(DEFAULT_MAX_SAMPLES);
        let spec = match test {
            TestSection::DeltaI { u } => {
                let mut cfg = TwoStageConfig::new(c, *u)?;
                cfg.priors = priors;
                cfg.losses = [self.losses.f, self.losses.g1, self.losses.g2];
                cfg.max_samples = max_samples;
                TestSpec::DeltaI(cfg)
            }
            TestSection::InvariantSprt { lambda } => {
                let folded_priors = [priors[0], priors[1] + priors[2]];
                let mut cfg = InvariantConfig::new(*lambda, c, folded_priors)?;
                cfg.losses = [self.losses.f, self.losses.g1];
                cfg.max_samples = max_samples;
                TestSpec::Invariant(cfg)
            }
        };
        Ok(McConfig {
            replications: self.experiment.replications,
            master_seed: self.experiment.seed,
            spec,
            mixture: priors,
            estimator: self.experiment.estimator,
        })
    }
}

/// One output row of a simulation batch.
#[derive(Debug, Clone, Serialize)]
pub struct SimRow {
    pub test: String,
    pub c: f64,
    pub hypothesis: String,
    pub mean_n: Option<f64>,
    pub stderr_n: Option<f64>,
    pub p_error: Option<f64>,
    pub stderr_p: Option<f64>,
    pub replications: usize,
    pub seed: u64,
    pub overruns: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub config: ExperimentConfig,
    pub rows: Vec<SimRow>,
}

/// Run every (test, c) cell of the experiment.
pub fn run_simulation(cfg: &ExperimentConfig) -> Result<SimReport, CliError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for test in &cfg.tests {
        for &c in &cfg.experiment.c {
            let mc = cfg.mc_config(test, c)?;
            let table = run_trials(&mc)?;
            let label = test.label();
            for row in table.rows.iter().chain(std::iter::once(&table.mixture)) {
                rows.push(SimRow {
                    test: label.clone(),
                    c,
                    hypothesis: row.hypothesis.clone(),
                    mean_n: Some(row.mean_n),
                    stderr_n: row.stderr_n,
                    p_error: Some(row.p_error),
                    stderr_p: row.stderr_p,
                    replications: row.replications,
                    seed: cfg.experiment.seed,
                    overruns: row.overruns,
                });
            }
            rows.push(SimRow {
                test: label.clone(),
                c,
                hypothesis: "bayes_risk".to_string(),
                mean_n: Some(table.bayes_risk),
                stderr_n: table.bayes_risk_stderr,
                p_error: None,
                stderr_p: None,
                replications: table.mixture.replications,
                seed: cfg.experiment.seed,
                overruns: table.mixture.overruns,
            });
        }
    }
    Ok(SimReport { config: cfg.clone(), rows })
}

/// Six significant digits for sample-size style numbers.
fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = 5 - x.abs().log10().floor() as i32;
    let digits = digits.clamp(0, 17) as usize;
    format!("{x:.digits$}")
}

/// Scientific notation for probabilities.
fn fmt_prob(x: f64) -> String {
    format!("{x:.6e}")
}

fn opt(s: Option<String>) -> String {
    s.unwrap_or_default()
}

/// Render the CSV: '#'-prefixed config echo, then an RFC-4180 table.
pub fn render_csv(report: &SimReport) -> String {
    let mut out = String::new();
    out.push_str("# decseq simulate\n");
    let echo = toml::to_string(&report.config).expect("config serializes");
    for line in echo.lines() {
        writeln!(out, "# {line}").unwrap();
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "test",
        "c",
        "hypothesis",
        "mean_N",
        "stderr_N",
        "p_error",
        "stderr_p",
        "replications",
        "seed",
        "overruns",
    ])
    .expect("csv header");
    for r in &report.rows {
        w.write_record([
            r.test.clone(),
            fmt_prob(r.c),
            r.hypothesis.clone(),
            opt(r.mean_n.map(fmt_sig)),
            opt(r.stderr_n.map(fmt_sig)),
            opt(r.p_error.map(fmt_prob)),
            opt(r.stderr_p.map(fmt_prob)),
            r.replications.to_string(),
            r.seed.to_string(),
            r.overruns.to_string(),
        ])
        .expect("csv row");
    }
    let table = String::from_utf8(w.into_inner().expect("csv bytes")).expect("utf8");
    out.push_str(&table);
    out
}

/// `simulate` subcommand: run the config and write results.csv plus a
/// JSON mirror next to it. Returns the two file paths.
pub fn cmd_simulate(config_path: &Path) -> Result<(PathBuf, PathBuf), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = ExperimentConfig::from_toml(&text)?;
    let report = run_simulation(&cfg)?;

    let dir = &cfg.experiment.output;
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("results.csv");
    let json_path = dir.join("results.json");
    std::fs::write(&csv_path, render_csv(&report))?;
    let mut json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    json.push('\n');
    std::fs::write(&json_path, json)?;
    Ok((csv_path, json_path))
}

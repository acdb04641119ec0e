//! Monte Carlo harness: seeded replication, expected-sample-size and
//! error-probability estimation, and Bayes risk assembly.
//!
//! Reproducibility contract: every replication draws from its own
//! counter-keyed substream derived from (master seed, phase, hypothesis,
//! replication index), and aggregation always folds in replication-index
//! order, so results are byte-identical no matter how the work is
//! scheduled across threads.
//!
//! Error probabilities can be estimated by plain relative frequency or by
//! importance sampling. The importance proposal for hypothesis h is the
//! equal mixture of the other hypotheses' path laws: each replication
//! picks one of the other hypotheses and simulates the whole run from it,
//! then reweights by the likelihood ratio of the quantized message record
//! (the per-hypothesis record likelihoods against their average). On a
//! wrong-decision record the stopping rule itself caps the weight at the
//! scale of the boundary, so the weighted estimator stays tight even when
//! errors are rare.

use crate::gauss::Hypothesis;
use crate::seq_tests::{
    expected_decision, run_delta_i, run_invariant_sprt, InvariantConfig, PerHyp, SeqTestError,
    TestOutcome, TwoStageConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
    #[error("estimate table has no row for hypothesis {0}")]
    MissingRow(Hypothesis),
    #[error(transparent)]
    Seq(#[from] SeqTestError),
}

/// Substream phases: expected-sample-size runs and importance-sampling
/// runs never share randomness.
pub const PHASE_PLAIN: u32 = 0;
pub const PHASE_IMPORTANCE: u32 = 1;

/// A counter-keyed substream: ChaCha keyed by the full replication
/// coordinate, so streams are independent and order-free.
pub fn substream_rng(master_seed: u64, phase: u32, hypothesis: u32, replication: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..12].copy_from_slice(&phase.to_le_bytes());
    seed[12..16].copy_from_slice(&hypothesis.to_le_bytes());
    seed[16..24].copy_from_slice(&replication.to_le_bytes());
    seed[24..32].copy_from_slice(b"seqmcsub");
    ChaCha8Rng::from_seed(seed)
}

/// Which decentralized test a trial batch runs.
#[derive(Debug, Clone, PartialEq)]
pub enum TestSpec {
    DeltaI(TwoStageConfig),
    Invariant(InvariantConfig),
}

impl TestSpec {
    pub fn c(&self) -> f64 {
        match self {
            TestSpec::DeltaI(cfg) => cfg.c,
            TestSpec::Invariant(cfg) => cfg.c,
        }
    }

    pub fn validate(&self) -> Result<(), SeqTestError> {
        match self {
            TestSpec::DeltaI(cfg) => cfg.validate(),
            TestSpec::Invariant(cfg) => cfg.validate(),
        }
    }

    /// Decision losses in three-state form, for the Bayes risk.
    pub fn risk_losses(&self) -> [f64; 3] {
        match self {
            TestSpec::DeltaI(cfg) => cfg.losses,
            TestSpec::Invariant(cfg) => [cfg.losses[0], cfg.losses[1], cfg.losses[1]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Plain,
    Importance,
}

/// Configuration of one trial batch.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub replications: usize,
    pub master_seed: u64,
    pub spec: TestSpec,
    /// Simulation mixture over the three states of nature.
    pub mixture: [f64; 3],
    pub estimator: Estimator,
}

impl McConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.replications == 0 {
            return Err(McError::InvalidConfig("replications must be >= 1".into()));
        }
        let sum: f64 = self.mixture.iter().sum();
        if self.mixture.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(McError::InvalidConfig(format!(
                "mixture must be a probability triple, got {:?}",
                self.mixture
            )));
        }
        self.spec.validate()?;
        Ok(())
    }
}

/// One row of the estimate table. `hypothesis` is "f", "g1", "g2" or
/// "mixture"; standard errors are absent when a single replication makes
/// them undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub hypothesis: String,
    pub replications: usize,
    pub mean_n: f64,
    pub stderr_n: Option<f64>,
    pub p_error: f64,
    pub stderr_p: Option<f64>,
    /// Effective sample size of the weighted error estimator (importance
    /// runs only).
    pub ess: Option<f64>,
    pub low_ess_warning: bool,
    /// Replications that hit the max-samples guard; they are excluded
    /// from the estimates but never silently dropped.
    pub overruns: usize,
}

/// Monte Carlo aggregates: per-hypothesis rows, the prior-weighted
/// mixture row, and the plug-in Bayes risk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateTable {
    pub rows: Vec<EstimateRow>,
    pub mixture: EstimateRow,
    pub bayes_risk: f64,
    pub bayes_risk_stderr: Option<f64>,
}

impl EstimateTable {
    pub fn row(&self, h: Hypothesis) -> Option<&EstimateRow> {
        self.rows.iter().find(|r| r.hypothesis == h.name())
    }
}

enum RepOutcome {
    Done { n: usize, wrong: bool, log_lik3: [f64; 3] },
    Overrun,
}

fn outcome_log_lik3(out: &TestOutcome) -> [f64; 3] {
    match out.log_lik {
        PerHyp::Three(l) => l,
        // Both alternatives fold to the same message law.
        PerHyp::Folded([lf, lg]) => [lf, lg, lg],
    }
}

/// Run the configured test once with raw data drawn under `law`, and
/// judge correctness against `truth`.
fn run_one(
    spec: &TestSpec,
    law: Hypothesis,
    truth: Hypothesis,
    mut rng: ChaCha8Rng,
) -> Result<RepOutcome, SeqTestError> {
    let result = match spec {
        TestSpec::DeltaI(cfg) => {
            let model = cfg.model;
            let draws = std::iter::from_fn(move || Some(model.sample(law, &mut rng)));
            run_delta_i(cfg, draws)
        }
        TestSpec::Invariant(cfg) => {
            let model = cfg.model;
            let draws = std::iter::from_fn(move || Some(model.sample(law, &mut rng)));
            run_invariant_sprt(cfg, draws)
        }
    };
    match result {
        Ok(out) => Ok(RepOutcome::Done {
            n: out.n,
            wrong: out.d != expected_decision(truth),
            log_lik3: outcome_log_lik3(&out),
        }),
        Err(SeqTestError::NonTermination { .. }) => Ok(RepOutcome::Overrun),
        Err(e) => Err(e),
    }
}

fn others(h: Hypothesis) -> [Hypothesis; 2] {
    match h {
        Hypothesis::F => [Hypothesis::G1, Hypothesis::G2],
        Hypothesis::G1 => [Hypothesis::F, Hypothesis::G2],
        Hypothesis::G2 => [Hypothesis::F, Hypothesis::G1],
    }
}

fn mean_and_stderr(sum: f64, sumsq: f64, n: usize) -> (f64, Option<f64>) {
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = sum / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = ((sumsq - sum * sum / n as f64) / (n as f64 - 1.0)).max(0.0);
    (mean, Some((var / n as f64).sqrt()))
}

struct PlainCell {
    reps_used: usize,
    mean_n: f64,
    stderr_n: Option<f64>,
    p_error: f64,
    stderr_p: Option<f64>,
    overruns: usize,
}

fn plain_cell(cfg: &McConfig, h: Hypothesis) -> Result<PlainCell, McError> {
    let outcomes: Vec<Result<RepOutcome, SeqTestError>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let rng = substream_rng(cfg.master_seed, PHASE_PLAIN, h.index() as u32, rep as u64);
            run_one(&cfg.spec, h, h, rng)
        })
        .collect();
    let (mut sum_n, mut sumsq_n, mut wrong_sum, mut wrong_sq) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut used = 0usize;
    let mut overruns = 0usize;
    for o in outcomes {
        match o? {
            RepOutcome::Done { n, wrong, .. } => {
                used += 1;
                sum_n += n as f64;
                sumsq_n += (n as f64) * (n as f64);
                let w = f64::from(wrong);
                wrong_sum += w;
                wrong_sq += w * w;
            }
            RepOutcome::Overrun => overruns += 1,
        }
    }
    let (mean_n, stderr_n) = mean_and_stderr(sum_n, sumsq_n, used);
    let (p_error, stderr_p) = mean_and_stderr(wrong_sum, wrong_sq, used);
    Ok(PlainCell { reps_used: used, mean_n, stderr_n, p_error, stderr_p, overruns })
}

/// Importance-sampling estimate of one hypothesis' error probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub hypothesis: Hypothesis,
    pub replications: usize,
    pub p_error: f64,
    pub stderr: Option<f64>,
    pub ess: f64,
    pub low_ess_warning: bool,
    pub overruns: usize,
}

/// Importance-sampling error estimates for every mixture-positive
/// hypothesis, plus their prior-weighted combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorEstimates {
    pub per_hypothesis: Vec<ErrorEstimate>,
    pub mixture_p: f64,
    pub mixture_stderr: Option<f64>,
}

fn importance_cell(cfg: &McConfig, h: Hypothesis) -> Result<ErrorEstimate, McError> {
    let alt = others(h);
    let outcomes: Vec<Result<(Option<f64>, bool), SeqTestError>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng =
                substream_rng(cfg.master_seed, PHASE_IMPORTANCE, h.index() as u32, rep as u64);
            let law = alt[rng.random_range(0..2usize)];
            match run_one(&cfg.spec, law, h, rng)? {
                RepOutcome::Done { wrong, log_lik3, .. } => {
                    if !wrong {
                        return Ok((Some(0.0), false));
                    }
                    // dP_h / d(mean of the other path laws), on the record.
                    let l0 = log_lik3[alt[0].index()];
                    let l1 = log_lik3[alt[1].index()];
                    let lse = {
                        let (hi, lo) = if l0 >= l1 { (l0, l1) } else { (l1, l0) };
                        hi + (lo - hi).exp().ln_1p()
                    };
                    let log_w = log_lik3[h.index()] + std::f64::consts::LN_2 - lse;
                    Ok((Some(log_w.exp()), false))
                }
                RepOutcome::Overrun => Ok((None, true)),
            }
        })
        .collect();

    let (mut sum, mut sumsq) = (0.0f64, 0.0f64);
    let (mut wsum, mut wsumsq) = (0.0f64, 0.0f64);
    let mut used = 0usize;
    let mut overruns = 0usize;
    for o in outcomes {
        let (x, overrun) = o?;
        if overrun {
            overruns += 1;
            continue;
        }
        let x = x.unwrap();
        used += 1;
        sum += x;
        sumsq += x * x;
        if x > 0.0 {
            wsum += x;
            wsumsq += x * x;
        }
    }
    let (p_error, stderr) = mean_and_stderr(sum, sumsq, used);
    let ess = if wsumsq > 0.0 { wsum * wsum / wsumsq } else { 0.0 };
    Ok(ErrorEstimate {
        hypothesis: h,
        replications: used,
        p_error,
        stderr,
        ess,
        low_ess_warning: ess < 0.01 * used as f64,
        overruns,
    })
}

fn active_hypotheses(mixture: &[f64; 3]) -> Vec<Hypothesis> {
    Hypothesis::ALL
        .into_iter()
        .filter(|h| mixture[h.index()] > 0.0)
        .collect()
}

/// Importance-sampling estimates of the per-hypothesis error
/// probabilities (see the module notes for the proposal).
pub fn estimate_error_importance(cfg: &McConfig) -> Result<ErrorEstimates, McError> {
    cfg.validate()?;
    let mut per = Vec::new();
    for h in active_hypotheses(&cfg.mixture) {
        per.push(importance_cell(cfg, h)?);
    }
    let mut p = 0.0;
    let mut var = 0.0;
    let mut have_var = true;
    for e in &per {
        let w = cfg.mixture[e.hypothesis.index()];
        p += w * e.p_error;
        match e.stderr {
            Some(s) => var += (w * s) * (w * s),
            None => have_var = false,
        }
    }
    Ok(ErrorEstimates {
        per_hypothesis: per,
        mixture_p: p,
        mixture_stderr: have_var.then(|| var.sqrt()),
    })
}

/// Plug-in Bayes risk from an estimate table:
/// Σ_h π_h (c·E_h(N) + W_h·P_h(wrong)), with a delta-method standard
/// error treating the per-hypothesis estimates as independent.
pub fn bayes_risk(
    table: &EstimateTable,
    c: f64,
    priors: [f64; 3],
    losses: [f64; 3],
) -> Result<(f64, Option<f64>), McError> {
    let mut risk = 0.0;
    let mut var = 0.0;
    let mut have_var = true;
    for h in Hypothesis::ALL {
        let pi = priors[h.index()];
        if pi == 0.0 {
            continue;
        }
        let row = table.row(h).ok_or(McError::MissingRow(h))?;
        let w = losses[h.index()];
        risk += pi * (c * row.mean_n + w * row.p_error);
        match (row.stderr_n, row.stderr_p) {
            (Some(sn), Some(sp)) => {
                var += pi * pi * (c * c * sn * sn + w * w * sp * sp);
            }
            _ => have_var = false,
        }
    }
    Ok((risk, have_var.then(|| var.sqrt())))
}

/// Run the full trial batch: per-hypothesis sample-size and error
/// estimates (importance-sampled errors when configured), the mixture
/// row, and the Bayes risk.
pub fn run_trials(cfg: &McConfig) -> Result<EstimateTable, McError> {
    cfg.validate()?;
    let active = active_hypotheses(&cfg.mixture);
    let mut rows = Vec::new();
    for &h in &active {
        let cell = plain_cell(cfg, h)?;
        let mut row = EstimateRow {
            hypothesis: h.name().to_string(),
            replications: cell.reps_used,
            mean_n: cell.mean_n,
            stderr_n: cell.stderr_n,
            p_error: cell.p_error,
            stderr_p: cell.stderr_p,
            ess: None,
            low_ess_warning: false,
            overruns: cell.overruns,
        };
        if cfg.estimator == Estimator::Importance {
            let e = importance_cell(cfg, h)?;
            row.p_error = e.p_error;
            row.stderr_p = e.stderr;
            row.ess = Some(e.ess);
            row.low_ess_warning = e.low_ess_warning;
            row.overruns += e.overruns;
        }
        rows.push(row);
    }

    // Prior-weighted mixture row, combined with the exact mixture weights.
    let mut mean_n = 0.0;
    let mut var_n = 0.0;
    let mut p_error = 0.0;
    let mut var_p = 0.0;
    let (mut have_var_n, mut have_var_p) = (true, true);
    let mut total_reps = 0usize;
    let mut total_overruns = 0usize;
    for row in &rows {
        let h: Hypothesis = row.hypothesis.parse().expect("row label");
        let w = cfg.mixture[h.index()];
        mean_n += w * row.mean_n;
        p_error += w * row.p_error;
        match row.stderr_n {
            Some(s) => var_n += (w * s) * (w * s),
            None => have_var_n = false,
        }
        match row.stderr_p {
            Some(s) => var_p += (w * s) * (w * s),
            None => have_var_p = false,
        }
        total_reps += row.replications;
        total_overruns += row.overruns;
    }
    let mixture = EstimateRow {
        hypothesis: "mixture".to_string(),
        replications: total_reps,
        mean_n,
        stderr_n: have_var_n.then(|| var_n.sqrt()),
        p_error,
        stderr_p: have_var_p.then(|| var_p.sqrt()),
        ess: None,
        low_ess_warning: rows.iter().any(|r| r.low_ess_warning),
        overruns: total_overruns,
    };

    let mut table = EstimateTable {
        rows,
        mixture,
        bayes_risk: f64::NAN,
        bayes_risk_stderr: None,
    };
    // Missing rows only matter for prior-positive hypotheses, which are
    // exactly the rows we built.
    let (risk, risk_stderr) =
        bayes_risk(&table, cfg.spec.c(), cfg.mixture, cfg.spec.risk_losses())?;
    table.bayes_risk = risk;
    table.bayes_risk_stderr = risk_stderr;
    Ok(table)
}

//! Python bindings: the main types and operations of the decseq toolkit.

use decseq::cli::{parse_quantizer, CliError};
use decseq::gauss::{FoldedHypothesis, Hypothesis, HypothesisModel};
use decseq::info::{folded_quantizer_kl, maximin_objective, quantizer_kl};
use decseq::mc::{run_trials, substream_rng, Estimator, McConfig, TestSpec, PHASE_PLAIN};
use decseq::quantizer::{v_functions, DeterministicQuantizer, RandomQuantizer};
use decseq::seq_tests::{run_delta_i, run_invariant_sprt, InvariantConfig, TwoStageConfig};
use decseq::{optimize_invariant_lambda, optimize_maximin_f, optimize_threshold};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_hypothesis(label: &str) -> PyResult<Hypothesis> {
    label.parse::<Hypothesis>().map_err(value_err)
}

/// A deterministic binary quantizer.
#[pyclass(name = "Quantizer")]
struct PyQuantizer {
    inner: DeterministicQuantizer,
}

#[pymethods]
impl PyQuantizer {
    /// Parse a spec like "threshold:0.7941", "interval:-0.5:1", "abs:0.5".
    #[staticmethod]
    fn parse(spec: &str) -> PyResult<Self> {
        let inner = parse_quantizer(spec).map_err(|e: CliError| value_err(e))?;
        Ok(PyQuantizer { inner })
    }

    #[staticmethod]
    fn threshold(lambda: f64) -> Self {
        PyQuantizer { inner: DeterministicQuantizer::threshold(lambda) }
    }

    #[staticmethod]
    fn interval(lo: f64, hi: f64) -> PyResult<Self> {
        Ok(PyQuantizer { inner: DeterministicQuantizer::interval(lo, hi).map_err(value_err)? })
    }

    #[staticmethod]
    fn absolute(lambda: f64) -> PyResult<Self> {
        Ok(PyQuantizer { inner: DeterministicQuantizer::absolute(lambda).map_err(value_err)? })
    }

    /// Quantize one observation to a message bit.
    fn apply(&self, x: f64) -> u8 {
        self.inner.apply(x)
    }

    /// Induced message-1 probabilities under (f, g1, g2).
    fn induced(&self) -> PyResult<(f64, f64, f64)> {
        let m = HypothesisModel::standard();
        let p = |h| m.induced_prob(&self.inner, h).map(|b| b.p1).map_err(value_err);
        Ok((p(Hypothesis::F)?, p(Hypothesis::G1)?, p(Hypothesis::G2)?))
    }

    /// I(from, to) of the quantized channel, labels in {"f","g1","g2"}.
    fn kl(&self, from: &str, to: &str) -> PyResult<f64> {
        let m = HypothesisModel::standard();
        quantizer_kl(&m, &self.inner, parse_hypothesis(from)?, parse_hypothesis(to)?)
            .map(|i| i.value())
            .map_err(value_err)
    }

    /// (I(f~,g~), I(g~,f~)) of a window quantizer under the folded model.
    fn folded_kl(&self) -> PyResult<(f64, f64)> {
        let m = HypothesisModel::standard();
        let fg = folded_quantizer_kl(&m, &self.inner, FoldedHypothesis::F, FoldedHypothesis::G)
            .map_err(value_err)?;
        let gf = folded_quantizer_kl(&m, &self.inner, FoldedHypothesis::G, FoldedHypothesis::F)
            .map_err(value_err)?;
        Ok((fg.value(), gf.value()))
    }

    /// min(I(f,g1), I(f,g2)).
    fn maximin(&self) -> PyResult<f64> {
        let m = HypothesisModel::standard();
        maximin_objective(&m, &RandomQuantizer::deterministic(self.inner))
            .map(|i| i.value())
            .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Quantizer({})", self.inner)
    }
}

/// Standard normal CDF.
#[pyfunction]
fn std_normal_cdf(x: f64) -> PyResult<f64> {
    decseq::gauss::std_normal_cdf(x).map_err(value_err)
}

/// Densities of |X| under the folded null and alternative.
#[pyfunction]
fn folded_densities(x: f64) -> PyResult<(f64, f64)> {
    HypothesisModel::standard().folded_densities(x).map_err(value_err)
}

/// K-L divergence between Bernoulli(p) and Bernoulli(q), in nats.
#[pyfunction]
fn kl_bernoulli(p: f64, q: f64) -> PyResult<f64> {
    decseq::info::kl_bernoulli(p, q).map(|i| i.value()).map_err(value_err)
}

/// Likelihood coordinates (v1, v2) at x.
#[pyfunction(name = "v_functions")]
fn v_functions_py(x: f64) -> (f64, f64) {
    v_functions(x)
}

fn optimization_dict<'py>(
    py: Python<'py>,
    r: &decseq::OptimizationResult,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("quantizer", r.quantizer.to_string())?;
    if let Some(q) = r.quantizer.as_deterministic() {
        match *q {
            DeterministicQuantizer::Threshold { lambda, .. }
            | DeterministicQuantizer::Absolute { lambda, .. } => {
                d.set_item("lambda", lambda)?;
            }
            DeterministicQuantizer::Interval { lo, hi, .. } => {
                d.set_item("lo", lo)?;
                d.set_item("hi", hi)?;
            }
        }
    }
    d.set_item("objective", r.objective.value())?;
    d.set_item("grid_resolution", r.grid_resolution)?;
    d.set_item("refined", r.refined)?;
    Ok(d)
}

/// Best threshold against "g1" or "g2".
#[pyfunction(name = "optimize_threshold")]
fn optimize_threshold_py<'py>(py: Python<'py>, target: &str) -> PyResult<Bound<'py, PyDict>> {
    let m = HypothesisModel::standard();
    let r = optimize_threshold(&m, parse_hypothesis(target)?).map_err(value_err)?;
    optimization_dict(py, &r)
}

/// Maximin quantizer for the null.
#[pyfunction(name = "optimize_maximin")]
fn optimize_maximin_py(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let m = HypothesisModel::standard();
    let r = optimize_maximin_f(&m).map_err(value_err)?;
    optimization_dict(py, &r)
}

/// Best stationary window width for folded priors (pf, pg).
#[pyfunction(name = "optimize_invariant_lambda")]
fn optimize_invariant_lambda_py<'py>(
    py: Python<'py>,
    prior_f: f64,
    prior_g: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = HypothesisModel::standard();
    let r = optimize_invariant_lambda(&m, prior_f, prior_g).map_err(value_err)?;
    optimization_dict(py, &r)
}

fn outcome_dict<'py>(
    py: Python<'py>,
    out: &decseq::TestOutcome,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n", out.n)?;
    d.set_item("n1", out.n1)?;
    d.set_item("d0", out.d0.map(|h| h.name()))?;
    d.set_item("d", out.d.bit())?;
    Ok(d)
}

/// One two-stage-test run with data drawn under `truth`, seeded.
#[pyfunction(name = "run_delta_i", signature = (c, u, truth, seed, replication = 0))]
fn run_delta_i_py<'py>(
    py: Python<'py>,
    c: f64,
    u: f64,
    truth: &str,
    seed: u64,
    replication: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let truth = parse_hypothesis(truth)?;
    let cfg = TwoStageConfig::new(c, u).map_err(value_err)?;
    let model = cfg.model;
    let mut rng = substream_rng(seed, PHASE_PLAIN, truth.index() as u32, replication);
    let out = run_delta_i(&cfg, std::iter::from_fn(move || Some(model.sample(truth, &mut rng))))
        .map_err(value_err)?;
    outcome_dict(py, &out)
}

/// One stationary folded-SPRT run with data drawn under `truth`, seeded.
#[pyfunction(name = "run_invariant_sprt", signature = (lambda, c, truth, seed, replication = 0))]
fn run_invariant_sprt_py<'py>(
    py: Python<'py>,
    lambda: f64,
    c: f64,
    truth: &str,
    seed: u64,
    replication: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let truth = parse_hypothesis(truth)?;
    let cfg = InvariantConfig::new(lambda, c, [1.0 / 3.0, 2.0 / 3.0]).map_err(value_err)?;
    let model = cfg.model;
    let mut rng = substream_rng(seed, PHASE_PLAIN, truth.index() as u32, replication);
    let out =
        run_invariant_sprt(&cfg, std::iter::from_fn(move || Some(model.sample(truth, &mut rng))))
            .map_err(value_err)?;
    outcome_dict(py, &out)
}

/// Monte Carlo batch. `test` is "delta-i" (uses `u`) or "invariant-sprt"
/// (uses `lambda`); returns per-hypothesis and mixture rows plus the
/// Bayes risk.
#[pyfunction(name = "run_trials", signature = (test, c, replications, seed, u = 0.1, lambda = 1.2824, importance = false))]
#[allow(clippy::too_many_arguments)]
fn run_trials_py<'py>(
    py: Python<'py>,
    test: &str,
    c: f64,
    replications: usize,
    seed: u64,
    u: f64,
    lambda: f64,
    importance: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = match test {
        "delta-i" => TestSpec::DeltaI(TwoStageConfig::new(c, u).map_err(value_err)?),
        "invariant-sprt" => TestSpec::Invariant(
            InvariantConfig::new(lambda, c, [1.0 / 3.0, 2.0 / 3.0]).map_err(value_err)?,
        ),
        other => return Err(value_err(format!("unknown test `{other}`"))),
    };
    let cfg = McConfig {
        replications,
        master_seed: seed,
        spec,
        mixture: [1.0 / 3.0; 3],
        estimator: if importance { Estimator::Importance } else { Estimator::Plain },
    };
    let table = run_trials(&cfg).map_err(value_err)?;
    let d = PyDict::new(py);
    for row in table.rows.iter().chain(std::iter::once(&table.mixture)) {
        let r = PyDict::new(py);
        r.set_item("replications", row.replications)?;
        r.set_item("mean_n", row.mean_n)?;
        r.set_item("stderr_n", row.stderr_n)?;
        r.set_item("p_error", row.p_error)?;
        r.set_item("stderr_p", row.stderr_p)?;
        r.set_item("overruns", row.overruns)?;
        d.set_item(row.hypothesis.clone(), r)?;
    }
    d.set_item("bayes_risk", table.bayes_risk)?;
    d.set_item("bayes_risk_stderr", table.bayes_risk_stderr)?;
    Ok(d)
}

#[pymodule]
fn decseq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuantizer>()?;
    m.add_function(wrap_pyfunction!(std_normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(folded_densities, m)?)?;
    m.add_function(wrap_pyfunction!(kl_bernoulli, m)?)?;
    m.add_function(wrap_pyfunction!(v_functions_py, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_threshold_py, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_maximin_py, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_invariant_lambda_py, m)?)?;
    m.add_function(wrap_pyfunction!(run_delta_i_py, m)?)?;
    m.add_function(wrap_pyfunction!(run_invariant_sprt_py, m)?)?;
    m.add_function(wrap_pyfunction!(run_trials_py, m)?)?;
    Ok(())
}

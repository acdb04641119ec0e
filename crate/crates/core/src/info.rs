//! Kullback-Leibler information numbers of quantized binary channels.
//!
//! All logarithms are natural. For a randomized quantizer the fusion
//! center knows which component produced each bit, so its information is
//! the weight-convex combination of the component numbers, not the K-L
//! divergence of the mixed channel.

use crate::gauss::{FoldedHypothesis, GaussError, Hypothesis, HypothesisModel};
use crate::quantizer::{DeterministicQuantizer, RandomQuantizer};
use thiserror::Error;

/// Probabilities closer than this to 0 or 1 are treated as degenerate:
/// at this scale 1 - p rounds to 1 in f64 and the channel carries
/// one-sided certainty.
pub const DEGENERATE_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InfoError {
    #[error("infinite information: quantizer is degenerate under {0}")]
    InfiniteInformation(String),
    #[error("from and to hypotheses must differ")]
    SameHypothesis,
    #[error(transparent)]
    Gauss(#[from] GaussError),
}

/// A nonnegative K-L information number, in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct InfoNumber(pub f64);

impl InfoNumber {
    pub fn value(self) -> f64 {
        self.0
    }
}

fn degenerate(p: f64) -> bool {
    p <= DEGENERATE_FLOOR || p >= 1.0 - DEGENERATE_FLOOR
}

/// K-L divergence between Bernoulli(p) and Bernoulli(q), with the
/// convention 0·log(0/·) = 0.
///
/// A degenerate q on the side opposite to p carries infinite
/// information and is reported as an error.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<InfoNumber, InfoError> {
    debug_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
    let mut total = 0.0;
    for (pp, qq) in [(p, q), (1.0 - p, 1.0 - q)] {
        if pp <= DEGENERATE_FLOOR {
            continue; // 0·log(0/·) = 0
        }
        if qq <= DEGENERATE_FLOOR {
            return Err(InfoError::InfiniteInformation(format!(
                "q = {q} assigns no mass to an outcome with p-mass {pp}"
            )));
        }
        total += pp * (pp.ln() - qq.ln());
    }
    Ok(InfoNumber(total.max(0.0)))
}

/// I^φ(from, to) for a deterministic quantizer under the three-state
/// model. Degenerate channels (an induced probability within
/// [`DEGENERATE_FLOOR`] of 0 or 1 under either hypothesis) are rejected
/// so that optimizers must exclude them explicitly.
pub fn quantizer_kl(
    model: &HypothesisModel,
    q: &DeterministicQuantizer,
    from: Hypothesis,
    to: Hypothesis,
) -> Result<InfoNumber, InfoError> {
    if from == to {
        return Err(InfoError::SameHypothesis);
    }
    let p = model.induced_prob(q, from)?.p1;
    let r = model.induced_prob(q, to)?.p1;
    if degenerate(p) {
        return Err(InfoError::InfiniteInformation(format!("{from} (p1 = {p})")));
    }
    if degenerate(r) {
        return Err(InfoError::InfiniteInformation(format!("{to} (p1 = {r})")));
    }
    kl_bernoulli(p, r)
}

/// I^φ(from, to) under the folded model, for absolute-value quantizers.
pub fn folded_quantizer_kl(
    model: &HypothesisModel,
    q: &DeterministicQuantizer,
    from: FoldedHypothesis,
    to: FoldedHypothesis,
) -> Result<InfoNumber, InfoError> {
    if from == to {
        return Err(InfoError::SameHypothesis);
    }
    let p = model.folded_induced_prob(q, from)?.p1;
    let r = model.folded_induced_prob(q, to)?.p1;
    if degenerate(p) {
        return Err(InfoError::InfiniteInformation(format!("{from} (p1 = {p})")));
    }
    if degenerate(r) {
        return Err(InfoError::InfiniteInformation(format!("{to} (p1 = {r})")));
    }
    kl_bernoulli(p, r)
}

/// Weight-convex combination of the component K-L numbers.
pub fn random_quantizer_kl(
    model: &HypothesisModel,
    rq: &RandomQuantizer,
    from: Hypothesis,
    to: Hypothesis,
) -> Result<InfoNumber, InfoError> {
    let mut total = 0.0;
    for (q, w) in rq.components() {
        total += w * quantizer_kl(model, q, from, to)?.value();
    }
    Ok(InfoNumber(total))
}

/// The null-quantizer objective: min of the two alternative arms,
/// min(I(f, g1), I(f, g2)).
pub fn maximin_objective(
    model: &HypothesisModel,
    rq: &RandomQuantizer,
) -> Result<InfoNumber, InfoError> {
    let a = random_quantizer_kl(model, rq, Hypothesis::F, Hypothesis::G1)?;
    let b = random_quantizer_kl(model, rq, Hypothesis::F, Hypothesis::G2)?;
    Ok(InfoNumber(a.value().min(b.value())))
}

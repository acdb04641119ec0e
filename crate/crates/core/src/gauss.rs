//! Gaussian primitives for the three-hypothesis location model.
//!
//! The model has a null density centered at zero and a symmetric pair of
//! alternatives centered at ±μ, all with unit variance. Folding the
//! observations through |X| collapses the two alternatives into a single
//! folded density, which is how the invariant tests see the data.
//!
//! Everything here is closed-form: induced message probabilities are
//! differences of the standard normal CDF at the quantizer breakpoints,
//! never sampled.

use crate::quantizer::DeterministicQuantizer;
use std::f64::consts::PI;
use thiserror::Error;

/// Errors from model construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaussError {
    #[error("non-finite input: {0}")]
    NonFinite(f64),
    #[error("negative input to folded densities: {0}")]
    NegativeInput(f64),
    #[error("invalid model parameter: {0}")]
    InvalidModel(String),
    #[error("quantizer variant does not match the {0} model")]
    ModelMismatch(&'static str),
}

/// One of the three states of nature in the full model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    /// Mean zero (the null).
    F,
    /// Mean -μ.
    G1,
    /// Mean +μ.
    G2,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 3] = [Hypothesis::F, Hypothesis::G1, Hypothesis::G2];

    /// Index into per-hypothesis arrays, in the order f, g1, g2.
    pub fn index(self) -> usize {
        match self {
            Hypothesis::F => 0,
            Hypothesis::G1 => 1,
            Hypothesis::G2 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::F => "f",
            Hypothesis::G1 => "g1",
            Hypothesis::G2 => "g2",
        }
    }
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Hypothesis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f" => Ok(Hypothesis::F),
            "g1" => Ok(Hypothesis::G1),
            "g2" => Ok(Hypothesis::G2),
            other => Err(format!("unknown hypothesis label `{other}` (expected f, g1 or g2)")),
        }
    }
}

/// One of the two states of the folded (invariant) model.
///
/// Folded labels never mix with [`Hypothesis`] labels in a computation;
/// the type system keeps the two models apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum FoldedHypothesis {
    /// |X| under the null.
    F,
    /// |X| under either alternative (they fold to the same density).
    G,
}

impl FoldedHypothesis {
    pub const ALL: [FoldedHypothesis; 2] = [FoldedHypothesis::F, FoldedHypothesis::G];

    pub fn index(self) -> usize {
        match self {
            FoldedHypothesis::F => 0,
            FoldedHypothesis::G => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FoldedHypothesis::F => "f~",
            FoldedHypothesis::G => "g~",
        }
    }
}

impl std::fmt::Display for FoldedHypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Probability that a binary quantizer emits message 1 under a given
/// hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedBernoulli {
    pub p1: f64,
}

impl InducedBernoulli {
    pub fn p0(self) -> f64 {
        1.0 - self.p1
    }

    /// Probability of the given message bit.
    pub fn prob(self, bit: u8) -> f64 {
        if bit == 1 {
            self.p1
        } else {
            1.0 - self.p1
        }
    }
}

/// The symmetric three-hypothesis Gaussian model: means (0, -μ, +μ),
/// common variance σ².
///
/// Only the unit instance (μ = 1, σ² = 1) is exercised by the shipped
/// experiments, but any symmetric triple is accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisModel {
    mu: f64,
    variance: f64,
}

impl HypothesisModel {
    /// The unit model: means (0, -1, +1), variance 1.
    pub fn standard() -> Self {
        HypothesisModel { mu: 1.0, variance: 1.0 }
    }

    /// A symmetric triple (0, -μ, +μ) with the given variance.
    pub fn new(mu: f64, variance: f64) -> Result<Self, GaussError> {
        if !mu.is_finite() || mu == 0.0 {
            return Err(GaussError::InvalidModel(format!(
                "alternative mean must be finite and nonzero, got {mu}"
            )));
        }
        if !variance.is_finite() || variance <= 0.0 {
            return Err(GaussError::InvalidModel(format!(
                "variance must be strictly positive, got {variance}"
            )));
        }
        Ok(HypothesisModel { mu: mu.abs(), variance })
    }

    pub fn mean(&self, h: Hypothesis) -> f64 {
        match h {
            Hypothesis::F => 0.0,
            Hypothesis::G1 => -self.mu,
            Hypothesis::G2 => self.mu,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    /// P(X ≥ t) under hypothesis `h`.
    pub fn upper_tail(&self, h: Hypothesis, t: f64) -> f64 {
        norm_cdf((self.mean(h) - t) / self.sigma())
    }

    /// P(X ≤ t) under hypothesis `h`.
    pub fn lower_tail(&self, h: Hypothesis, t: f64) -> f64 {
        norm_cdf((t - self.mean(h)) / self.sigma())
    }

    /// Message-1 probability of a deterministic quantizer under a
    /// three-state hypothesis. Absolute-value quantizers belong to the
    /// folded model and are rejected here; recast them as intervals first.
    pub fn induced_prob(
        &self,
        q: &DeterministicQuantizer,
        h: Hypothesis,
    ) -> Result<InducedBernoulli, GaussError> {
        use crate::quantizer::{DeterministicQuantizer as Dq, Direction};
        let p1 = match *q {
            Dq::Threshold { lambda, direction } => match direction {
                Direction::Ge => self.upper_tail(h, lambda),
                Direction::Lt => self.lower_tail(h, lambda),
            },
            Dq::Interval { lo, hi, inside_bit } => {
                let inside = self.lower_tail(h, hi) - self.lower_tail(h, lo);
                if inside_bit == 1 {
                    inside
                } else {
                    1.0 - inside
                }
            }
            Dq::Absolute { .. } => return Err(GaussError::ModelMismatch("three-state")),
        };
        Ok(InducedBernoulli { p1: p1.clamp(0.0, 1.0) })
    }

    /// Message-1 probability of an absolute-value quantizer under a folded
    /// hypothesis. Threshold and interval quantizers act on signed data and
    /// are rejected here.
    pub fn folded_induced_prob(
        &self,
        q: &DeterministicQuantizer,
        h: FoldedHypothesis,
    ) -> Result<InducedBernoulli, GaussError> {
        use crate::quantizer::DeterministicQuantizer as Dq;
        let Dq::Absolute { lambda, inside_bit } = *q else {
            return Err(GaussError::ModelMismatch("folded"));
        };
        let s = self.sigma();
        let inside = match h {
            // P(|X| ≤ λ) for X standard: Φ(λ) - Φ(-λ).
            FoldedHypothesis::F => norm_cdf(lambda / s) - norm_cdf(-lambda / s),
            // P(|X| ≤ λ) for X ~ N(±μ, σ²): same either sign.
            FoldedHypothesis::G => {
                norm_cdf((lambda - self.mu) / s) - norm_cdf((-lambda - self.mu) / s)
            }
        };
        let p1 = if inside_bit == 1 { inside } else { 1.0 - inside };
        Ok(InducedBernoulli { p1: p1.clamp(0.0, 1.0) })
    }

    /// Draw one raw observation under hypothesis `h`.
    pub fn sample<R: rand::Rng + ?Sized>(&self, h: Hypothesis, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        self.mean(h) + self.sigma() * z
    }

    /// Densities of |X| at x ≥ 0 under the folded null and the folded
    /// alternative, in that order.
    pub fn folded_densities(&self, x: f64) -> Result<(f64, f64), GaussError> {
        if !x.is_finite() {
            return Err(GaussError::NonFinite(x));
        }
        if x < 0.0 {
            return Err(GaussError::NegativeInput(x));
        }
        let s = self.sigma();
        let f = 2.0 * norm_pdf(x / s) / s;
        let g = (norm_pdf((x - self.mu) / s) + norm_pdf((x + self.mu) / s)) / s;
        Ok((f, g))
    }
}

impl Default for HypothesisModel {
    fn default() -> Self {
        Self::standard()
    }
}

/// Standard normal density φ(x).
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF Φ(x), validated input.
///
/// Absolute error is below 1e-15 over the real line (Cody's rational
/// erfc approximations), comfortably inside the 1e-12 contract.
pub fn std_normal_cdf(x: f64) -> Result<f64, GaussError> {
    if !x.is_finite() {
        return Err(GaussError::NonFinite(x));
    }
    Ok(norm_cdf(x))
}

/// Infallible Φ(x) for hot paths with known-finite input.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

// Cody-style rational approximations for erf/erfc (SPECFUN "calerf").
// Split at 0.46875 and 4.0; the exp(-x²) factor is computed as
// exp(-q²)·exp(-(x-q)(x+q)) with q = x rounded to 1/16 to limit the
// argument-squaring rounding error.

const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];
const INV_SQRT_PI: f64 = 5.6418958354775628695e-1;

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.46875 {
        return 1.0 - erf_small(x);
    }
    let r = if y <= 4.0 {
        let mut num = ERF_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERF_C[i]) * y;
            den = (den + ERF_D[i]) * y;
        }
        scaled_exp(y) * (num + ERF_C[7]) / (den + ERF_D[7])
    } else {
        let z = 1.0 / (y * y);
        let mut num = ERF_P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + ERF_P[i]) * z;
            den = (den + ERF_Q[i]) * z;
        }
        let tail = z * (num + ERF_P[4]) / (den + ERF_Q[4]);
        scaled_exp(y) * (INV_SQRT_PI - tail) / y
    };
    if x < 0.0 {
        2.0 - r
    } else {
        r
    }
}

/// erf on |x| ≤ 0.46875.
fn erf_small(x: f64) -> f64 {
    let z = x * x;
    let mut num = ERF_A[4] * z;
    let mut den = z;
    for i in 0..3 {
        num = (num + ERF_A[i]) * z;
        den = (den + ERF_B[i]) * z;
    }
    x * (num + ERF_A[3]) / (den + ERF_B[3])
}

/// exp(-y²) with reduced rounding in the squared argument.
#[inline]
fn scaled_exp(y: f64) -> f64 {
    let q = (y * 16.0).trunc() / 16.0;
    let del = (y - q) * (y + q);
    (-q * q).exp() * (-del).exp()
}

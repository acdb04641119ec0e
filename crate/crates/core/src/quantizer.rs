//! Binary quantizers: threshold, interval and absolute-value forms, finite
//! randomized mixtures of them, and the likelihood-coordinate machinery
//! used to certify which deterministic quantizers are extremal.
//!
//! A quantizer maps one raw observation to one message bit. The fusion
//! center never sees raw values, only bits, so the induced Bernoulli
//! distributions (see [`crate::gauss`]) are the whole story.

use crate::gauss::{Hypothesis, HypothesisModel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizerError {
    #[error("interval requires lo < hi, got [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
    #[error("absolute-value quantizer requires lambda >= 0, got {0}")]
    NegativeLambda(f64),
    #[error("inside bit must be 0 or 1, got {0}")]
    BadBit(u8),
    #[error("non-finite breakpoint {0}")]
    NonFinite(f64),
    #[error("random quantizer needs at least one component")]
    EmptyMixture,
    #[error("mixture weights must be strictly positive and sum to 1 (sum = {0})")]
    BadWeights(f64),
    #[error("ULQ coefficients must not all be zero")]
    ZeroCoefficients,
}

/// Side of a threshold that maps to message 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// I(X ≥ λ)
    Ge,
    /// I(X < λ)
    Lt,
}

/// A deterministic binary quantizer.
///
/// Comparisons are closed on the ≥/≤ side; for continuous data the
/// boundary convention never affects probabilities, it only pins down
/// `apply` on exact breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DeterministicQuantizer {
    /// I(X ≥ λ) or I(X < λ).
    Threshold { lambda: f64, direction: Direction },
    /// I(lo ≤ X ≤ hi) when `inside_bit` is 1, its complement when 0.
    Interval { lo: f64, hi: f64, inside_bit: u8 },
    /// I(|X| ≤ λ) when `inside_bit` is 1, its complement when 0.
    Absolute { lambda: f64, inside_bit: u8 },
}

impl DeterministicQuantizer {
    pub fn threshold(lambda: f64) -> Self {
        DeterministicQuantizer::Threshold { lambda, direction: Direction::Ge }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self, QuantizerError> {
        let q = DeterministicQuantizer::Interval { lo, hi, inside_bit: 1 };
        q.validate()?;
        Ok(q)
    }

    pub fn absolute(lambda: f64) -> Result<Self, QuantizerError> {
        let q = DeterministicQuantizer::Absolute { lambda, inside_bit: 1 };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), QuantizerError> {
        match *self {
            DeterministicQuantizer::Threshold { lambda, .. } => {
                if !lambda.is_finite() {
                    return Err(QuantizerError::NonFinite(lambda));
                }
            }
            DeterministicQuantizer::Interval { lo, hi, inside_bit } => {
                if !lo.is_finite() {
                    return Err(QuantizerError::NonFinite(lo));
                }
                if !hi.is_finite() {
                    return Err(QuantizerError::NonFinite(hi));
                }
                if lo >= hi {
                    return Err(QuantizerError::BadInterval { lo, hi });
                }
                if inside_bit > 1 {
                    return Err(QuantizerError::BadBit(inside_bit));
                }
            }
            DeterministicQuantizer::Absolute { lambda, inside_bit } => {
                if !lambda.is_finite() {
                    return Err(QuantizerError::NonFinite(lambda));
                }
                if lambda < 0.0 {
                    return Err(QuantizerError::NegativeLambda(lambda));
                }
                if inside_bit > 1 {
                    return Err(QuantizerError::BadBit(inside_bit));
                }
            }
        }
        Ok(())
    }

    /// Quantize one raw observation.
    #[inline]
    pub fn apply(&self, x: f64) -> u8 {
        debug_assert!(x.is_finite());
        let hit = match *self {
            DeterministicQuantizer::Threshold { lambda, direction } => match direction {
                Direction::Ge => x >= lambda,
                Direction::Lt => x < lambda,
            },
            DeterministicQuantizer::Interval { lo, hi, inside_bit } => {
                (lo <= x && x <= hi) == (inside_bit == 1)
            }
            DeterministicQuantizer::Absolute { lambda, inside_bit } => {
                (x.abs() <= lambda) == (inside_bit == 1)
            }
        };
        u8::from(hit)
    }

    /// Recast an absolute-value quantizer as the signed interval
    /// [-λ, λ], so it can be evaluated against the three-state model.
    pub fn as_interval(&self) -> Option<DeterministicQuantizer> {
        match *self {
            DeterministicQuantizer::Absolute { lambda, inside_bit } if lambda > 0.0 => {
                Some(DeterministicQuantizer::Interval { lo: -lambda, hi: lambda, inside_bit })
            }
            _ => None,
        }
    }

    /// Bit-flipped version (swaps the two messages).
    pub fn complement(&self) -> DeterministicQuantizer {
        match *self {
            DeterministicQuantizer::Threshold { lambda, direction } => {
                DeterministicQuantizer::Threshold {
                    lambda,
                    direction: match direction {
                        Direction::Ge => Direction::Lt,
                        Direction::Lt => Direction::Ge,
                    },
                }
            }
            DeterministicQuantizer::Interval { lo, hi, inside_bit } => {
                DeterministicQuantizer::Interval { lo, hi, inside_bit: 1 - inside_bit }
            }
            DeterministicQuantizer::Absolute { lambda, inside_bit } => {
                DeterministicQuantizer::Absolute { lambda, inside_bit: 1 - inside_bit }
            }
        }
    }
}

impl std::fmt::Display for DeterministicQuantizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            DeterministicQuantizer::Threshold { lambda, direction: Direction::Ge } => {
                write!(f, "I(X>={lambda})")
            }
            DeterministicQuantizer::Threshold { lambda, direction: Direction::Lt } => {
                write!(f, "I(X<{lambda})")
            }
            DeterministicQuantizer::Interval { lo, hi, inside_bit: 1 } => {
                write!(f, "I({lo}<=X<={hi})")
            }
            DeterministicQuantizer::Interval { lo, hi, .. } => {
                write!(f, "1-I({lo}<=X<={hi})")
            }
            DeterministicQuantizer::Absolute { lambda, inside_bit: 1 } => {
                write!(f, "I(|X|<={lambda})")
            }
            DeterministicQuantizer::Absolute { lambda, .. } => write!(f, "I(|X|>{lambda})"),
        }
    }
}

/// A finite mixture of deterministic quantizers.
///
/// The chooser announces which component it picked, so the fusion center
/// conditions on the component identity rather than on the mixed channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomQuantizer {
    components: Vec<(DeterministicQuantizer, f64)>,
}

impl RandomQuantizer {
    pub fn new(components: Vec<(DeterministicQuantizer, f64)>) -> Result<Self, QuantizerError> {
        if components.is_empty() {
            return Err(QuantizerError::EmptyMixture);
        }
        let mut sum = 0.0;
        for (q, w) in &components {
            q.validate()?;
            if !(*w > 0.0) {
                return Err(QuantizerError::BadWeights(*w));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(QuantizerError::BadWeights(sum));
        }
        Ok(RandomQuantizer { components })
    }

    pub fn deterministic(q: DeterministicQuantizer) -> Self {
        RandomQuantizer { components: vec![(q, 1.0)] }
    }

    pub fn components(&self) -> &[(DeterministicQuantizer, f64)] {
        &self.components
    }

    /// The single component, when the mixture is in fact deterministic.
    pub fn as_deterministic(&self) -> Option<&DeterministicQuantizer> {
        match self.components.as_slice() {
            [(q, _)] => Some(q),
            _ => None,
        }
    }
}

impl From<DeterministicQuantizer> for RandomQuantizer {
    fn from(q: DeterministicQuantizer) -> Self {
        RandomQuantizer::deterministic(q)
    }
}

impl std::fmt::Display for RandomQuantizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(q) = self.as_deterministic() {
            return write!(f, "{q}");
        }
        let parts: Vec<String> =
            self.components.iter().map(|(q, w)| format!("{w:.4}*{q}")).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// The six induced message probabilities (q0, q1) under f, g1, g2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QVector {
    rows: [[f64; 2]; 3],
}

impl QVector {
    /// Row (q0, q1) for the given hypothesis.
    pub fn row(&self, h: Hypothesis) -> [f64; 2] {
        self.rows[h.index()]
    }

    pub fn rows(&self) -> &[[f64; 2]; 3] {
        &self.rows
    }
}

/// Induced message distribution of a deterministic quantizer under all
/// three hypotheses.
pub fn q_vector(
    model: &HypothesisModel,
    q: &DeterministicQuantizer,
) -> Result<QVector, crate::gauss::GaussError> {
    let mut rows = [[0.0; 2]; 3];
    for h in Hypothesis::ALL {
        let p = model.induced_prob(q, h)?;
        rows[h.index()] = [p.p0(), p.p1];
    }
    Ok(QVector { rows })
}

/// Likelihood coordinates (v1, v2) of an observation.
///
/// v_i(x) = (g_i(x)/f(x)) / (1 + g1(x)/f(x) + g2(x)/f(x)). For the unit
/// model g1/f = exp(-x - 1/2) and g2/f = exp(x - 1/2), so v2 is computed
/// in the overflow-safe form 1/(exp(1/2 - x) + exp(-2x) + 1) and
/// v1(x) = v2(-x).
pub fn v_functions(x: f64) -> (f64, f64) {
    (v2_of(-x), v2_of(x))
}

#[inline]
fn v2_of(x: f64) -> f64 {
    1.0 / ((0.5 - x).exp() + (-2.0 * x).exp() + 1.0)
}

/// Grid half-width for the ULQ check; hypothesis mass outside is < 1e-14.
const ULQ_GRID_LIMIT: f64 = 8.0;
const ULQ_GRID_STEP: f64 = 1e-3;

/// Check whether `q` agrees with the half-plane indicator
/// I(a0 + a1·v1(X) + a2·v2(X) > 0) on a dense grid, excluding the
/// measure-zero boundary set where the affine form vanishes.
///
/// This is a numerical verifier for the unambiguous-likelihood-quantizer
/// shape, not a symbolic proof.
pub fn is_ulq_form(
    q: &DeterministicQuantizer,
    a0: f64,
    a1: f64,
    a2: f64,
) -> Result<bool, QuantizerError> {
    if a0 == 0.0 && a1 == 0.0 && a2 == 0.0 {
        return Err(QuantizerError::ZeroCoefficients);
    }
    q.validate()?;
    let scale = a0.abs() + a1.abs() + a2.abs();
    let boundary_eps = 1e-9 * scale;
    let n = (2.0 * ULQ_GRID_LIMIT / ULQ_GRID_STEP).round() as usize;
    for i in 0..=n {
        let x = -ULQ_GRID_LIMIT + i as f64 * ULQ_GRID_STEP;
        let (v1, v2) = v_functions(x);
        let expr = a0 + a1 * v1 + a2 * v2;
        if expr.abs() <= boundary_eps {
            continue;
        }
        if (expr > 0.0) != (q.apply(x) == 1) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Coefficients of a line certifying a threshold or interval quantizer as
/// a ULQ: through the breakpoint images in the (v1, v2) plane, oriented so
/// the message-1 region is on the positive side. Returns `None` for
/// absolute-value quantizers (they live in the folded model).
pub fn ulq_line_for(q: &DeterministicQuantizer) -> Option<(f64, f64, f64)> {
    match *q {
        DeterministicQuantizer::Threshold { lambda, direction } => {
            // v2 is strictly increasing, so I(X >= λ) = I(v2(X) - v2(λ) > 0).
            let (_, v2l) = v_functions(lambda);
            match direction {
                Direction::Ge => Some((-v2l, 0.0, 1.0)),
                Direction::Lt => Some((v2l, 0.0, -1.0)),
            }
        }
        DeterministicQuantizer::Interval { lo, hi, inside_bit } => {
            // Secant through the two breakpoint images; the curve is a
            // strictly convex conic arc, so the piece between the
            // breakpoints stays on one side of the chord.
            let (p1x, p1y) = v_functions(lo);
            let (p2x, p2y) = v_functions(hi);
            let a1 = p1y - p2y;
            let a2 = p2x - p1x;
            let a0 = p1x * p2y - p2x * p1y;
            // Orient positive at the midpoint image.
            let (mx, my) = v_functions(0.5 * (lo + hi));
            let mid = a0 + a1 * mx + a2 * my;
            let sign = if (mid > 0.0) == (inside_bit == 1) { 1.0 } else { -1.0 };
            Some((sign * a0, sign * a1, sign * a2))
        }
        DeterministicQuantizer::Absolute { .. } => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn apply_basic_conventions() {
        let thr = DeterministicQuantizer::threshold(0.0);
        assert_eq!(thr.apply(0.3), 1);
        assert_eq!(thr.apply(-0.3), 0);
        assert_eq!(thr.apply(0.0), 1); // closed on the >= side

        let abs = DeterministicQuantizer::absolute(0.5).unwrap();
        assert_eq!(abs.apply(-0.7), 0);
        assert_eq!(abs.apply(0.5), 1);

        let int = DeterministicQuantizer::interval(-0.5, 1.0).unwrap();
        assert_eq!(int.apply(-0.5), 1); // boundary inclusive
        assert_eq!(int.apply(1.0), 1);
        assert_eq!(int.apply(1.0000001), 0);
    }

    #[test]
    fn validation_rejects_malformed() {
        assert!(DeterministicQuantizer::interval(1.0, 1.0).is_err());
        assert!(DeterministicQuantizer::interval(2.0, 1.0).is_err());
        assert!(DeterministicQuantizer::absolute(-0.1).is_err());
        assert!(DeterministicQuantizer::Threshold {
            lambda: f64::NAN,
            direction: Direction::Ge
        }
        .validate()
        .is_err());
    }

    #[test]
    fn mixture_weights_validated() {
        let q = DeterministicQuantizer::threshold(0.0);
        assert!(RandomQuantizer::new(vec![]).is_err());
        assert!(RandomQuantizer::new(vec![(q, 0.5)]).is_err());
        assert!(RandomQuantizer::new(vec![(q, 0.5), (q, 0.5 + 1e-6)]).is_err());
        let ok = RandomQuantizer::new(vec![(q, 0.5), (q, 0.5)]).unwrap();
        assert_eq!(ok.components().len(), 2);
        let single = RandomQuantizer::new(vec![(q, 1.0)]).unwrap();
        assert_eq!(single.as_deterministic(), Some(&q));
    }

    #[test]
    fn v_functions_reference_values() {
        // At x = 0 both coordinates equal e^{-1/2}/(1 + 2e^{-1/2})
        // = 1/(e^{1/2} + 2); frozen from direct evaluation.
        let (v1, v2) = v_functions(0.0);
        assert_abs_diff_eq!(v1, 0.274068619061197, epsilon = 1e-14);
        assert_abs_diff_eq!(v2, 0.274068619061197, epsilon = 1e-14);
        assert!(v1 + v2 < 1.0);

        // Likelihood-ratio limits.
        let (v1, v2) = v_functions(800.0);
        assert_abs_diff_eq!(v1, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn v_functions_reflection_and_monotonicity() {
        let mut x = -6.0;
        let mut prev = v_functions(-6.01);
        while x <= 6.0 {
            let (v1, v2) = v_functions(x);
            let (w1, w2) = v_functions(-x);
            assert_abs_diff_eq!(v1, w2, epsilon = 1e-15);
            assert_abs_diff_eq!(v2, w1, epsilon = 1e-15);
            assert!(v1 > 0.0 && v2 > 0.0 && v1 + v2 < 1.0);
            assert!(v2 > prev.1 && v1 < prev.0);
            prev = (v1, v2);
            x += 0.01;
        }
    }

    #[test]
    fn v_curve_is_a_strictly_convex_conic_arc() {
        // The likelihood coordinates satisfy v1·v2 = (1 - v1 - v2)²/e
        // exactly (the products of the two likelihood ratios is the
        // constant e^{-1}), so the curve is an arc of an ellipse and any
        // line meets it in at most two points. As a graph v2(v1) the arc
        // is strictly convex: the secant slopes increase with v1.
        let mut pts: Vec<(f64, f64)> =
            (-400..=400).map(|i| v_functions(i as f64 * 0.01)).collect();
        for &(v1, v2) in &pts {
            let residual = v1 * v2 - (1.0 - v1 - v2).powi(2) / std::f64::consts::E;
            assert!(residual.abs() < 1e-14, "conic identity off by {residual}");
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in pts.windows(3) {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            assert!(s2 > s1 - 1e-12, "slopes not increasing: {s1} -> {s2}");
        }
    }

    #[test]
    fn threshold_and_interval_pass_ulq_check() {
        for lambda in [-1.3, 0.0, 0.5, 2.0] {
            let q = DeterministicQuantizer::threshold(lambda);
            let (a0, a1, a2) = ulq_line_for(&q).unwrap();
            assert!(is_ulq_form(&q, a0, a1, a2).unwrap(), "threshold {lambda}");
        }
        for (lo, hi) in [(-0.5, 0.5), (-1.0, 2.0), (0.3, 0.9)] {
            let q = DeterministicQuantizer::interval(lo, hi).unwrap();
            let (a0, a1, a2) = ulq_line_for(&q).unwrap();
            assert!(is_ulq_form(&q, a0, a1, a2).unwrap(), "interval [{lo}, {hi}]");
        }
    }

    #[test]
    fn complement_interval_fails_same_orientation_line() {
        // The bit-flipped interval disagrees with the line that certifies
        // the inside-bit form; flipping the line's sign certifies it again
        // (quantizers are ULQs only up to a permutation of their values).
        let inner = DeterministicQuantizer::interval(-1.0, 1.0).unwrap();
        let outer = inner.complement();
        let (a0, a1, a2) = ulq_line_for(&inner).unwrap();
        assert!(is_ulq_form(&inner, a0, a1, a2).unwrap());
        assert!(!is_ulq_form(&outer, a0, a1, a2).unwrap());
        assert!(is_ulq_form(&outer, -a0, -a1, -a2).unwrap());
    }

    #[test]
    fn mismatched_line_fails() {
        let q = DeterministicQuantizer::threshold(1.0);
        let (a0, a1, a2) = ulq_line_for(&DeterministicQuantizer::threshold(0.0)).unwrap();
        assert!(!is_ulq_form(&q, a0, a1, a2).unwrap());
        assert!(is_ulq_form(&q, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn q_vector_reference_rows() {
        let m = HypothesisModel::standard();
        let q = DeterministicQuantizer::threshold(0.0);
        let qv = q_vector(&m, &q).unwrap();
        let f = qv.row(Hypothesis::F);
        let g1 = qv.row(Hypothesis::G1);
        let g2 = qv.row(Hypothesis::G2);
        assert_abs_diff_eq!(f[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(f[1], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(g1[1], 0.15865525393145707, epsilon = 1e-12);
        assert_abs_diff_eq!(g1[0], 0.8413447460685429, epsilon = 1e-12);
        assert_abs_diff_eq!(g2[1], 0.8413447460685429, epsilon = 1e-12);
        for h in Hypothesis::ALL {
            let row = qv.row(h);
            assert_abs_diff_eq!(row[0] + row[1], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn q_vector_extreme_threshold() {
        let m = HypothesisModel::standard();
        let q = DeterministicQuantizer::threshold(8.0);
        let qv = q_vector(&m, &q).unwrap();
        for h in Hypothesis::ALL {
            assert!(qv.row(h)[1] < 1e-10, "q1 ~ 0 under {h}");
        }
    }

    #[test]
    fn q_vector_continuous_in_lambda() {
        let m = HypothesisModel::standard();
        let mut lambda = -3.0;
        let mut prev = q_vector(&m, &DeterministicQuantizer::threshold(lambda)).unwrap();
        while lambda < 3.0 {
            lambda += 1e-2;
            let cur = q_vector(&m, &DeterministicQuantizer::threshold(lambda)).unwrap();
            for h in Hypothesis::ALL {
                let d = (cur.row(h)[1] - prev.row(h)[1]).abs();
                assert!(d < 5e-3, "jump {d} at lambda {lambda}");
            }
            prev = cur;
        }
    }

    #[test]
    fn serde_tagged_form() {
        let q = DeterministicQuantizer::Threshold { lambda: 0.7941, direction: Direction::Ge };
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, r#"{"kind":"threshold","lambda":0.7941,"direction":"ge"}"#);
        let back: DeterministicQuantizer = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }

    proptest::proptest! {
        #[test]
        fn apply_monotone_for_thresholds(lambda in -4.0f64..4.0, a in -6.0f64..6.0, b in -6.0f64..6.0) {
            let q = DeterministicQuantizer::threshold(lambda);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(q.apply(lo) <= q.apply(hi));
        }

        #[test]
        fn apply_is_binary(x in -50.0f64..50.0, lo in -3.0f64..0.0, w in 0.1f64..3.0) {
            let q = DeterministicQuantizer::interval(lo, lo + w).unwrap();
            proptest::prop_assert!(q.apply(x) <= 1);
            let flip = q.complement();
            proptest::prop_assert_eq!(q.apply(x) + flip.apply(x), 1);
        }
    }
}

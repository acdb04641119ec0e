//! Numerical search for the optimal quantizers.
//!
//! Three searches are provided:
//! - the best single threshold against each alternative (grid plus
//!   golden-section refinement),
//! - the maximin quantizer for the null, searched over threshold and
//!   interval quantizers and over two-component randomizations of the
//!   Pareto-optimal grid candidates (the optimum of a min of two linear
//!   functions of the mixing weight is at an endpoint or at the arm
//!   crossing, so the inner weight is closed-form),
//! - the best stationary window width for the folded model, minimizing
//!   the prior-weighted sum of inverse information numbers.

use crate::gauss::{FoldedHypothesis, Hypothesis, HypothesisModel};
use crate::info::{
    folded_quantizer_kl, maximin_objective, quantizer_kl, InfoError, InfoNumber,
};
use crate::quantizer::{DeterministicQuantizer, RandomQuantizer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("threshold optimization targets g1 or g2, got {0}")]
    InvalidTarget(Hypothesis),
    #[error("priors must be nonnegative and sum to 1, got ({0}, {1})")]
    BadPriors(f64, f64),
    #[error(transparent)]
    Info(#[from] InfoError),
}

/// Outcome of a quantizer search.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub quantizer: RandomQuantizer,
    /// Objective value at the returned quantizer (re-evaluated, so it is
    /// consistent with the quantizer to full precision).
    pub objective: InfoNumber,
    /// Resolution of the final search stage.
    pub grid_resolution: f64,
    pub refined: bool,
}

const COARSE_THRESHOLD_STEP: f64 = 1e-3;
const THRESHOLD_SEARCH_LIMIT: f64 = 5.0;
const GOLDEN_TOL: f64 = 1e-6;
const MAXIMIN_LIMIT: f64 = 4.0;
const MAXIMIN_COARSE_STEP: f64 = 1e-2;
const MAXIMIN_REFINE_STEP: f64 = 1e-4;
/// Objective differences below this are ties, broken toward smaller |λ|.
const TIE_EPS: f64 = 1e-12;

/// Golden-section maximization of a unimodal function on [lo, hi].
fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - (hi - lo) * INV_PHI;
    let mut d = lo + (hi - lo) * INV_PHI;
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - (hi - lo) * INV_PHI;
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + (hi - lo) * INV_PHI;
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    let fx = f(x);
    (x, fx)
}

/// Best threshold quantizer against a single alternative: maximizes
/// I^{I(X≥λ)}(target, f) over λ. Coarse grid on
/// [-5, 5] at step 1e-3, then golden-section refinement to width 1e-6.
pub fn optimize_threshold(
    model: &HypothesisModel,
    target: Hypothesis,
) -> Result<OptimizationResult, OptimizeError> {
    if target == Hypothesis::F {
        return Err(OptimizeError::InvalidTarget(target));
    }
    let eval = |lambda: f64| -> f64 {
        quantizer_kl(
            model,
            &DeterministicQuantizer::threshold(lambda),
            target,
            Hypothesis::F,
        )
        .map(|i| i.value())
        .unwrap_or(f64::NEG_INFINITY)
    };

    let n = (2.0 * THRESHOLD_SEARCH_LIMIT / COARSE_THRESHOLD_STEP).round() as usize;
    let mut best_lambda = -THRESHOLD_SEARCH_LIMIT;
    let mut best = eval(best_lambda);
    for i in 1..=n {
        let lambda = -THRESHOLD_SEARCH_LIMIT + i as f64 * COARSE_THRESHOLD_STEP;
        let v = eval(lambda);
        // Strict improvement keeps the smallest maximizing λ.
        if v > best + TIE_EPS {
            best = v;
            best_lambda = lambda;
        }
    }
    let (lambda, _) = golden_max(
        eval,
        best_lambda - COARSE_THRESHOLD_STEP,
        best_lambda + COARSE_THRESHOLD_STEP,
        GOLDEN_TOL,
    );

    let q = DeterministicQuantizer::threshold(lambda);
    let objective = quantizer_kl(model, &q, target, Hypothesis::F)?;
    Ok(OptimizationResult {
        quantizer: RandomQuantizer::deterministic(q),
        objective,
        grid_resolution: GOLDEN_TOL,
        refined: true,
    })
}

/// A candidate quantizer with its two information arms
/// (I(f, g1), I(f, g2)). Degenerate candidates are excluded upstream.
#[derive(Debug, Clone, Copy)]
struct ArmPoint {
    q: CandidateQ,
    i1: f64,
    i2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum CandidateQ {
    Thr(f64),
    Int(f64, f64),
}

impl CandidateQ {
    fn to_quantizer(self) -> DeterministicQuantizer {
        match self {
            CandidateQ::Thr(l) => DeterministicQuantizer::threshold(l),
            CandidateQ::Int(lo, hi) => {
                DeterministicQuantizer::Interval { lo, hi, inside_bit: 1 }
            }
        }
    }

    /// Tie-break key: smaller |λ| first, then smaller λ; intervals keyed
    /// by their midpoint and sorted after thresholds of equal objective.
    fn tie_key(self) -> (u8, f64, f64) {
        match self {
            CandidateQ::Thr(l) => (0, l.abs(), l),
            CandidateQ::Int(lo, hi) => {
                let mid = 0.5 * (lo + hi);
                (1, mid.abs(), mid)
            }
        }
    }
}

fn arms(model: &HypothesisModel, q: &DeterministicQuantizer) -> Option<(f64, f64)> {
    let i1 = quantizer_kl(model, q, Hypothesis::F, Hypothesis::G1).ok()?;
    let i2 = quantizer_kl(model, q, Hypothesis::F, Hypothesis::G2).ok()?;
    Some((i1.value(), i2.value()))
}

fn arm_point(model: &HypothesisModel, q: CandidateQ) -> Option<ArmPoint> {
    let (i1, i2) = arms(model, &q.to_quantizer())?;
    Some(ArmPoint { q, i1, i2 })
}

fn better_candidate(v: f64, key: (u8, f64, f64), best_v: f64, best_key: (u8, f64, f64)) -> bool {
    if v > best_v + TIE_EPS {
        return true;
    }
    if v < best_v - TIE_EPS {
        return false;
    }
    key < best_key
}

/// Best deterministic candidate of one family on a grid.
fn best_deterministic(points: &[ArmPoint]) -> Option<ArmPoint> {
    let mut best: Option<(f64, (u8, f64, f64), ArmPoint)> = None;
    for p in points {
        let v = p.i1.min(p.i2);
        let key = p.q.tie_key();
        match &best {
            None => best = Some((v, key, *p)),
            Some((bv, bk, _)) if better_candidate(v, key, *bv, *bk) => {
                best = Some((v, key, *p))
            }
            _ => {}
        }
    }
    best.map(|(_, _, p)| p)
}

/// min-arm objective of the mixture p·u + (1-p)·v, maximized over the
/// weight in closed form: the min of two linear functions of p peaks at
/// an endpoint or where the arms cross.
fn best_pair_weight(u: &ArmPoint, v: &ArmPoint) -> (f64, f64) {
    let eval = |p: f64| (p * u.i1 + (1.0 - p) * v.i1).min(p * u.i2 + (1.0 - p) * v.i2);
    let mut best_p = 0.0;
    let mut best = eval(0.0);
    let v1 = eval(1.0);
    if v1 > best {
        best = v1;
        best_p = 1.0;
    }
    let denom = (u.i1 - u.i2) + (v.i2 - v.i1);
    if denom.abs() > 1e-15 {
        let p = (v.i2 - v.i1) / denom;
        if p > 0.0 && p < 1.0 {
            let vp = eval(p);
            if vp > best {
                best = vp;
                best_p = p;
            }
        }
    }
    (best_p, best)
}

fn threshold_grid(model: &HypothesisModel, lo: f64, hi: f64, step: f64) -> Vec<ArmPoint> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .filter_map(|i| arm_point(model, CandidateQ::Thr(lo + i as f64 * step)))
        .collect()
}

fn interval_grid(model: &HypothesisModel, lo: f64, hi: f64, step: f64) -> Vec<ArmPoint> {
    let n = ((hi - lo) / step).round() as usize;
    let breaks: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for (i, &a) in breaks.iter().enumerate() {
        for &b in &breaks[i + 1..] {
            if let Some(p) = arm_point(model, CandidateQ::Int(a, b)) {
                out.push(p);
            }
        }
    }
    out
}

/// Pareto frontier in the (i1, i2) plane: mixing a dominated component
/// can always be improved by its dominator, so two-component search only
/// needs the non-dominated points.
fn pareto_frontier(mut points: Vec<ArmPoint>) -> Vec<ArmPoint> {
    points.sort_by(|a, b| b.i1.partial_cmp(&a.i1).unwrap());
    let mut out: Vec<ArmPoint> = Vec::new();
    let mut best_i2 = f64::NEG_INFINITY;
    for p in points {
        if p.i2 > best_i2 {
            best_i2 = p.i2;
            out.push(p);
        }
    }
    out
}

/// Best objectives seen by each search family at a given grid step.
/// Exposed for the exhaustive post-checks in the test suites.
#[derive(Debug, Clone, Copy)]
pub struct MaximinFamilyBests {
    pub threshold: f64,
    pub interval: f64,
    pub two_mix: f64,
}

pub fn maximin_family_bests(model: &HypothesisModel, step: f64) -> MaximinFamilyBests {
    let thr = threshold_grid(model, -MAXIMIN_LIMIT, MAXIMIN_LIMIT, step);
    let ints = interval_grid(model, -MAXIMIN_LIMIT, MAXIMIN_LIMIT, step);
    let best_thr = best_deterministic(&thr).map(|p| p.i1.min(p.i2)).unwrap_or(0.0);
    let best_int = best_deterministic(&ints).map(|p| p.i1.min(p.i2)).unwrap_or(0.0);

    let mut all = thr;
    all.extend_from_slice(&ints);
    let frontier = pareto_frontier(all);
    let mut best_mix = 0.0f64;
    for (i, u) in frontier.iter().enumerate() {
        for v in &frontier[i + 1..] {
            let (_, val) = best_pair_weight(u, v);
            if val > best_mix {
                best_mix = val;
            }
        }
    }
    MaximinFamilyBests { threshold: best_thr, interval: best_int, two_mix: best_mix }
}

/// Maximin search for the null quantizer: maximize
/// min(I(f, g1), I(f, g2)) over thresholds, intervals and two-component
/// randomizations of grid candidates, with local refinement at 1e-4 near
/// the incumbents.
///
/// Near-ties are resolved in favor of a deterministic quantizer, then
/// toward smaller |λ|.
pub fn optimize_maximin_f(model: &HypothesisModel) -> Result<OptimizationResult, OptimizeError> {
    let thr = threshold_grid(model, -MAXIMIN_LIMIT, MAXIMIN_LIMIT, MAXIMIN_COARSE_STEP);
    let ints = interval_grid(model, -MAXIMIN_LIMIT, MAXIMIN_LIMIT, MAXIMIN_COARSE_STEP);

    // Refine the deterministic incumbents on local 1e-4 grids.
    let refine_span = 1.5 * MAXIMIN_COARSE_STEP;
    let best_thr = best_deterministic(&thr).expect("nonempty threshold grid");
    let best_thr = {
        let CandidateQ::Thr(l) = best_thr.q else { unreachable!() };
        let local = threshold_grid(model, l - refine_span, l + refine_span, MAXIMIN_REFINE_STEP);
        best_deterministic(&local).unwrap_or(best_thr)
    };
    let best_int = best_deterministic(&ints);
    let best_int = best_int.map(|p| {
        let CandidateQ::Int(lo, hi) = p.q else { unreachable!() };
        // Coordinate descent on the two endpoints.
        let mut cur = p;
        for _ in 0..2 {
            let CandidateQ::Int(lo0, hi0) = cur.q else { unreachable!() };
            let mut cands = Vec::new();
            let n = (2.0 * refine_span / MAXIMIN_REFINE_STEP).round() as usize;
            for i in 0..=n {
                let a = lo0 - refine_span + i as f64 * MAXIMIN_REFINE_STEP;
                if a < hi0 {
                    if let Some(ap) = arm_point(model, CandidateQ::Int(a, hi0)) {
                        cands.push(ap);
                    }
                }
                let b = hi0 - refine_span + i as f64 * MAXIMIN_REFINE_STEP;
                if b > lo0 {
                    if let Some(bp) = arm_point(model, CandidateQ::Int(lo0, b)) {
                        cands.push(bp);
                    }
                }
            }
            cands.push(cur);
            cur = best_deterministic(&cands).unwrap_or(cur);
        }
        let _ = (lo, hi);
        cur
    });

    // Two-component mixtures over the Pareto frontier of all coarse
    // candidates, then a local refinement when both components are
    // thresholds.
    let mut all = thr;
    all.extend_from_slice(&ints);
    let frontier = pareto_frontier(all);
    let mut best_mix: Option<(ArmPoint, ArmPoint, f64, f64)> = None;
    for (i, u) in frontier.iter().enumerate() {
        for v in &frontier[i + 1..] {
            let (p, val) = best_pair_weight(u, v);
            if best_mix.as_ref().map(|m| val > m.3).unwrap_or(true) {
                best_mix = Some((*u, *v, p, val));
            }
        }
    }
    if let Some((u, v, _, val)) = best_mix {
        if let (CandidateQ::Thr(a), CandidateQ::Thr(b)) = (u.q, v.q) {
            let ga = threshold_grid(model, a - refine_span, a + refine_span, MAXIMIN_REFINE_STEP);
            let gb = threshold_grid(model, b - refine_span, b + refine_span, MAXIMIN_REFINE_STEP);
            let mut refined = (u, v, 0.0, val);
            for ua in &ga {
                for vb in &gb {
                    let (p, w) = best_pair_weight(ua, vb);
                    if w > refined.3 {
                        refined = (*ua, *vb, p, w);
                    }
                }
            }
            best_mix = Some(refined);
        }
    }

    // Assemble the winner: deterministic candidates first, a mixture only
    // on strict improvement.
    let mut winner_q: RandomQuantizer;
    let mut winner_v: f64;
    {
        let tv = best_thr.i1.min(best_thr.i2);
        winner_q = RandomQuantizer::deterministic(best_thr.q.to_quantizer());
        winner_v = tv;
    }
    if let Some(bi) = best_int {
        let iv = bi.i1.min(bi.i2);
        if iv > winner_v + TIE_EPS {
            winner_q = RandomQuantizer::deterministic(bi.q.to_quantizer());
            winner_v = iv;
        }
    }
    if let Some((u, v, p, val)) = best_mix {
        if val > winner_v + TIE_EPS && p > 0.0 && p < 1.0 {
            winner_q = RandomQuantizer::new(vec![
                (u.q.to_quantizer(), p),
                (v.q.to_quantizer(), 1.0 - p),
            ])
            .expect("valid mixture weights");
            winner_v = val;
        }
    }
    let _ = winner_v;

    let objective = maximin_objective(model, &winner_q)?;
    Ok(OptimizationResult {
        quantizer: winner_q,
        objective,
        grid_resolution: MAXIMIN_REFINE_STEP,
        refined: true,
    })
}

/// Prior-weighted sum of inverse information numbers of the window
/// quantizer I(|X| ≤ λ). Zero-weight terms are skipped, so degenerate
/// priors reduce to a single-arm criterion.
pub fn invariant_objective(
    model: &HypothesisModel,
    lambda: f64,
    prior_f: f64,
    prior_g: f64,
) -> Result<f64, OptimizeError> {
    let q = DeterministicQuantizer::Absolute { lambda, inside_bit: 1 };
    let mut total = 0.0;
    if prior_f > 0.0 {
        let i = folded_quantizer_kl(model, &q, FoldedHypothesis::F, FoldedHypothesis::G)?;
        total += prior_f / i.value();
    }
    if prior_g > 0.0 {
        let i = folded_quantizer_kl(model, &q, FoldedHypothesis::G, FoldedHypothesis::F)?;
        total += prior_g / i.value();
    }
    Ok(total)
}

/// Best stationary window width for the folded model: minimizes
/// π_f/I(f̃_λ, g̃_λ) + π_g/I(g̃_λ, f̃_λ) over λ ∈ (0, 5], grid step 1e-3
/// plus golden-section refinement.
pub fn optimize_invariant_lambda(
    model: &HypothesisModel,
    prior_f: f64,
    prior_g: f64,
) -> Result<OptimizationResult, OptimizeError> {
    if !(prior_f >= 0.0 && prior_g >= 0.0)
        || (prior_f + prior_g - 1.0).abs() > 1e-9
        || prior_f + prior_g <= 0.0
    {
        return Err(OptimizeError::BadPriors(prior_f, prior_g));
    }
    let eval = |lambda: f64| -> f64 {
        // Negated: reuse the maximizer.
        -invariant_objective(model, lambda, prior_f, prior_g).unwrap_or(f64::INFINITY)
    };
    let step = 1e-3_f64;
    let n = (5.0 / step).round() as usize;
    let mut best_lambda = step;
    let mut best = eval(step);
    for i in 2..=n {
        let lambda = i as f64 * step;
        let v = eval(lambda);
        if v > best + TIE_EPS {
            best = v;
            best_lambda = lambda;
        }
    }
    let (lambda, _) = golden_max(
        eval,
        (best_lambda - step).max(step * 0.5),
        best_lambda + step,
        GOLDEN_TOL,
    );
    let q = DeterministicQuantizer::Absolute { lambda, inside_bit: 1 };
    // Report the information value of the window as the objective and the
    // minimized criterion through `invariant_objective`.
    let objective = folded_quantizer_kl(model, &q, FoldedHypothesis::F, FoldedHypothesis::G)?;
    Ok(OptimizationResult {
        quantizer: RandomQuantizer::deterministic(q),
        objective,
        grid_resolution: GOLDEN_TOL,
        refined: true,
    })
}

//! Decentralized sequential hypothesis testing for a normal mean with a
//! two-sided alternative.
//!
//! A single sensor observes i.i.d. normal data, quantizes each
//! observation into one bit, and ships the bits to a fusion center that
//! decides between mean zero and mean ±1. This crate provides:
//!
//! - the Gaussian model and closed-form quantized-message channels
//!   ([`gauss`]),
//! - threshold / interval / window quantizers and their
//!   likelihood-coordinate characterization ([`quantizer`]),
//! - K-L information numbers of quantized channels ([`info`]),
//! - searches for the information-optimal quantizers ([`optimize`]),
//! - the two-stage test with one-shot feedback and the stationary folded
//!   SPRTs ([`seq_tests`]),
//! - a reproducible Monte Carlo harness with importance-sampled error
//!   probabilities ([`mc`]),
//! - the `decseq` command-line front end ([`cli`]).

pub mod cli;
pub mod gauss;
pub mod info;
pub mod mc;
pub mod optimize;
pub mod quantizer;

pub use gauss::{FoldedHypothesis, Hypothesis, HypothesisModel, InducedBernoulli};
pub use info::{kl_bernoulli, maximin_objective, quantizer_kl, random_quantizer_kl, InfoNumber};
pub use optimize::{
    optimize_invariant_lambda, optimize_maximin_f, optimize_threshold, OptimizationResult,
};
pub use quantizer::{DeterministicQuantizer, Direction, RandomQuantizer};
pub use seq_tests::{
    run_delta_i, run_invariant_sprt, run_stage1, Decision, InvariantConfig, PosteriorState,
    TestOutcome, TwoStageConfig,
};

//! Pairwise-independent random code ensembles.
//!
//! Codebooks are drawn i.i.d. from `Q` or uniformly from a single type class,
//! one independent RNG stream per trial. The exponent proxy for a codebook is
//! `V_n/n`, the smallest pairwise Bhattacharyya exponent; exact ML error
//! probabilities are only computed exhaustively on tiny instances.

mod codebook;
mod exhaustive;
mod experiment;

pub use codebook::{
    largest_remainder, min_pairwise_statistic, pairwise_exponent, sample_codebook, trial_rng, Codebook,
    EnsembleConfig, EnsembleKind,
};
pub use exhaustive::{
    bsc_pairwise_error, de_caen_lower_bound, exact_error_probability, exhaustive_report, second_moment_ratio,
    union_bound_pe, ExhaustiveReport, SecondMoment, EXHAUSTIVE_LIMIT,
};
pub use experiment::{
    run_concentration_experiment, tail_probability_estimate, Histogram, SimulationRun, TailEstimate, DEFAULT_BINS,
    MIN_DIAGNOSTIC_SAMPLES,
};

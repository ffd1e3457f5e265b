//! Simulating one oracle model with the other.
//!
//! [`privatize`] answers nonadaptive statistical queries using only nearly
//! trivial measurements on fresh copies (randomized response on the
//! measurement, then debiasing). [`rejection`] reproduces noninteractive
//! private measurements from statistical queries by rejection sampling
//! against a fixed proposal state.

mod plan;
pub mod privatize;
pub mod rejection;

pub use plan::{QldpQuery, QldpQueryPlan, QsqQuery, QsqQueryPlan};
pub use privatize::{
    debias, estimate_expectation_via_qldp, privatize_povm, required_samples,
    simulate_nonadaptive_qsq, triviality_bound, Debiaser, QsqSimulation,
};
pub use rejection::{
    conditional_output, rejection_sample_measurement, simulate_noninteractive_qldp,
    AnswerDistribution, QldpSimulation, RejectionAnalysis, RejectionOptions, RejectionOutcome,
};

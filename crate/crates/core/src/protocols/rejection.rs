//! Private measurements reproduced from statistical queries.
//!
//! To sample an ε-trivial measurement `M` on `ρ` with only a QSQ oracle for
//! `ρ`, propose `w` from `M` applied to a fixed proposal state (probability
//! `q(w)`), estimate `p(w) = Tr(E_w ρ)` with one statistical query of the
//! indicator `(I - E_w, E_w)`, and accept with probability
//! `p̃(w) / (e^ε (1+τ) q(w))`. Triviality over all states gives
//! `p(w) ≤ e^ε q(w)`, so the ratio is a probability up to the query error;
//! values outside `[0, 1]` are clamped and counted.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{outcome_probabilities, sample_index, Povm};
use crate::oracles::{QsqOracle, TRIVIALITY_SLACK};
use crate::quantum::DensityMatrix;
use crate::rng::Stream;

use super::QldpQueryPlan;

/// Proposal-state and iteration-limit overrides.
#[derive(Clone, Debug, Default)]
pub struct RejectionOptions {
    /// Defaults to the first computational basis state.
    pub proposal: Option<DensityMatrix>,
    /// Defaults to `ceil(50 e^ε)`.
    pub max_iterations: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RejectionOutcome {
    pub index: usize,
    pub label: f64,
    /// Proposals made, equal to the QSQ queries consumed.
    pub iterations: u64,
    /// Proposals whose acceptance ratio fell outside `[0, 1]`.
    pub clamps: u64,
}

pub fn default_max_iterations(epsilon: f64) -> u64 {
    (50.0 * epsilon.exp()).ceil() as u64
}

/// Acceptance probability for answer `p_tilde` on a proposal of probability
/// `q`, and whether clamping to `[0, 1]` was needed.
pub fn acceptance_probability(p_tilde: f64, q: f64, epsilon: f64, tau: f64) -> (f64, bool) {
    let raw = p_tilde / (epsilon.exp() * (1.0 + tau) * q);
    if raw > 1.0 {
        (1.0, true)
    } else if raw < 0.0 {
        (0.0, true)
    } else {
        (raw, false)
    }
}

fn check_sampler_inputs(m: &Povm, epsilon: f64, tau: f64) -> Result<()> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::validation(format!(
            "epsilon must be finite and nonnegative, got {epsilon}"
        )));
    }
    if !(tau > 0.0 && tau <= 1.0 / 3.0) {
        return Err(Error::validation(format!(
            "tau must lie in (0, 1/3], got {tau}"
        )));
    }
    let required = m.triviality_parameter();
    if required > epsilon + TRIVIALITY_SLACK {
        return Err(Error::NotTrivialEnough {
            required,
            declared: epsilon,
        });
    }
    Ok(())
}

/// Samples one outcome of `m` on the oracle's state.
pub fn rejection_sample_measurement(
    oracle: &mut QsqOracle,
    m: &Povm,
    epsilon: f64,
    tau: f64,
    options: &RejectionOptions,
    rng: &mut Stream,
) -> Result<RejectionOutcome> {
    check_sampler_inputs(m, epsilon, tau)?;
    let proposal_probs = match &options.proposal {
        Some(state) => outcome_probabilities(m, state)?,
        None => outcome_probabilities(m, &DensityMatrix::basis_state(m.dim(), 0)?)?,
    };
    let max_iterations = options
        .max_iterations
        .unwrap_or_else(|| default_max_iterations(epsilon));

    let mut indicators: Vec<Option<Povm>> = vec![None; m.num_outcomes()];
    let mut clamps = 0;
    for iteration in 1..=max_iterations {
        let w = sample_index(&proposal_probs, rng);
        let indicator = match &mut indicators[w] {
            Some(p) => p,
            slot => slot.insert(m.indicator(w)?),
        };
        let p_tilde = oracle.query(indicator, tau)?;
        let (accept, clamped) = acceptance_probability(p_tilde, proposal_probs[w], epsilon, tau);
        clamps += u64::from(clamped);
        if rng.random::<f64>() < accept {
            return Ok(RejectionOutcome {
                index: w,
                label: m.labels()[w],
                iterations: iteration,
                clamps,
            });
        }
    }
    Err(Error::MaxIterationsExceeded(max_iterations))
}

/// Distribution of oracle answers to one indicator query, as
/// `(probability, answer)` pairs.
pub type AnswerDistribution = Vec<(f64, f64)>;

/// Exact behaviour of one iteration of the sampler.
#[derive(Clone, Debug, PartialEq)]
pub struct RejectionAnalysis {
    /// Output distribution conditioned on the iteration accepting.
    pub output: Vec<f64>,
    /// Probability that an iteration accepts.
    pub p_terminate: f64,
    /// Whether any answer for outcome `w` needed clamping.
    pub clamped: Vec<bool>,
}

/// Evaluates the sampler loop analytically, given proposal probabilities `q`
/// and, per outcome, the distribution of oracle answers.
pub fn conditional_output(
    q: &[f64],
    answers: &[AnswerDistribution],
    epsilon: f64,
    tau: f64,
) -> Result<RejectionAnalysis> {
    if q.len() != answers.len() {
        return Err(Error::validation("one answer distribution per outcome is required"));
    }
    let mut joint = Vec::with_capacity(q.len());
    let mut clamped = Vec::with_capacity(q.len());
    for (&qw, dist) in q.iter().zip(answers) {
        if qw <= 0.0 {
            joint.push(0.0);
            clamped.push(false);
            continue;
        }
        let mut accept = 0.0;
        let mut any_clamp = false;
        for &(weight, answer) in dist {
            let (a, c) = acceptance_probability(answer, qw, epsilon, tau);
            accept += weight * a;
            any_clamp |= c;
        }
        joint.push(qw * accept);
        clamped.push(any_clamp);
    }
    let p_terminate: f64 = joint.iter().sum();
    if p_terminate <= 0.0 {
        return Err(Error::validation("sampler never accepts on this instance"));
    }
    Ok(RejectionAnalysis {
        output: joint.iter().map(|j| j / p_terminate).collect(),
        p_terminate,
        clamped,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct QldpSimulation {
    /// Per-query tolerance `β / (3t)`.
    pub tau: f64,
    pub outcomes: Vec<RejectionOutcome>,
    pub qsq_queries: u64,
    pub clamps: u64,
}

/// Runs every query of a noninteractive plan through the rejection sampler
/// with `τ = β / (3t)`.
pub fn simulate_noninteractive_qldp(
    plan: &QldpQueryPlan,
    oracle: &mut QsqOracle,
    beta: f64,
    rng: &mut Stream,
) -> Result<QldpSimulation> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::validation(format!("beta must lie in (0, 1), got {beta}")));
    }
    let tau = beta / (3.0 * plan.len() as f64);
    let options = RejectionOptions::default();
    let outcomes = plan
        .queries()
        .iter()
        .map(|q| rejection_sample_measurement(oracle, &q.povm, q.epsilon, tau, &options, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(QldpSimulation {
        tau,
        qsq_queries: outcomes.iter().map(|o| o.iterations).sum(),
        clamps: outcomes.iter().map(|o| o.clamps).sum(),
        outcomes,
    })
}

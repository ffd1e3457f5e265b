use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::learning::{
    copies_per_bit, learn_parity_qldp, learn_parity_qsq, quantum_example_state,
    ExampleDistribution, ParityConcept,
};
use crate::measurement::{
    check_dp, expectation, minimal_triviality, minimal_triviality_on_set, outcome_probabilities,
    random_povm, Povm,
};
use crate::oracles::{noise_model, Exact, QldpOracle, QsqOracle};
use crate::protocols::{
    conditional_output, estimate_expectation_via_qldp, privatize_povm, rejection_sample_measurement,
    required_samples, triviality_bound, AnswerDistribution, Debiaser, RejectionOptions,
};
use crate::quantum::{random_density_matrix, DensityMatrix, Operator, ProductState};
use crate::rng::Stream;

use super::config::{count, number, numbers, text};
use super::{ParamValue, Params, TrialRecord};

/// A named threshold evaluated over all trials.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Evaluation {
    pub aggregates: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// An experiment kind: parameter defaults plus a factory for its trials.
pub trait Experiment: Send + Sync {
    fn kind(&self) -> &'static str;

    /// Every accepted parameter with its default value.
    fn defaults(&self) -> Vec<(&'static str, ParamValue)>;

    /// Validates parameters; runs before any trial.
    fn prepare(&self, params: &Params) -> Result<Box<dyn Trials>>;
}

/// A configured experiment ready to run trials.
pub trait Trials: Send + Sync {
    fn columns(&self) -> &'static [&'static str];

    fn run_trial(&self, trial: u64, rng: Stream) -> Result<Vec<f64>>;

    fn evaluate(&self, records: &[TrialRecord]) -> Evaluation;
}

static REGISTRY: &[&dyn Experiment] = &[
    &TrivialityBound,
    &EstimatorConcentration,
    &RejectionDistortion,
    &TerminationRate,
    &ParityEndToEnd,
    &DpCheckSuite,
];

pub fn registry() -> &'static [&'static dyn Experiment] {
    REGISTRY
}

fn num(v: f64) -> ParamValue {
    ParamValue::Number(v)
}

/// Values of column `i` over successful trials.
fn column(records: &[TrialRecord], i: usize) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.error.is_none())
        .filter_map(|r| r.values.get(i).copied())
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

// folds from +0.0; an empty `Sum` yields -0.0
fn total(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, |a, b| a + b)
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Starts an evaluation with the error count and the no-error check.
fn base_evaluation(records: &[TrialRecord]) -> Evaluation {
    let errors = records.iter().filter(|r| r.error.is_some()).count() as f64;
    let mut eval = Evaluation::default();
    eval.aggregates.insert("trials".into(), records.len() as f64);
    eval.aggregates.insert("errors".into(), errors);
    eval.checks.push(Check::at_most("trial_errors", errors, 0.0));
    eval
}

fn finish(mut eval: Evaluation) -> Evaluation {
    eval.pass = eval.checks.iter().all(|c| c.passed);
    eval
}

fn check_unit(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::validation(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(v)
}

fn check_min(name: &str, v: usize, min: usize) -> Result<usize> {
    if v < min {
        return Err(Error::validation(format!("{name} must be at least {min}, got {v}")));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------

struct TrivialityBound;

struct TrivialityBoundTrials {
    dim_max: usize,
    k_max: usize,
    alphas: Vec<f64>,
    tolerance: f64,
}

impl Experiment for TrivialityBound {
    fn kind(&self) -> &'static str {
        "triviality-bound"
    }

    fn defaults(&self) -> Vec<(&'static str, ParamValue)> {
        vec![
            ("dim_max", num(8.0)),
            ("k_max", num(5.0)),
            ("alphas", ParamValue::Numbers(vec![0.1, 0.3, 0.5, 0.7, 0.9])),
            ("tolerance", num(1e-9)),
        ]
    }

    fn prepare(&self, p: &Params) -> Result<Box<dyn Trials>> {
        let alphas = numbers(p, "alphas")?.to_vec();
        if alphas.is_empty() {
            return Err(Error::validation("alphas must not be empty"));
        }
        for &a in &alphas {
            check_unit("alpha", a)?;
        }
        Ok(Box::new(TrivialityBoundTrials {
            dim_max: check_min("dim_max", count(p, "dim_max")?, 2)?,
            k_max: check_min("k_max", count(p, "k_max")?, 2)?,
            alphas,
            tolerance: number(p, "tolerance")?,
        }))
    }
}

impl Trials for TrivialityBoundTrials {
    fn columns(&self) -> &'static [&'static str] {
        &["dim", "k", "max_excess", "max_debias_residual"]
    }

    fn run_trial(&self, _trial: u64, mut rng: Stream) -> Result<Vec<f64>> {
        let dim = rng.random_range(2..=self.dim_max);
        let k = rng.random_range(2..=self.k_max);
        let m = random_povm(dim, k, &mut rng)?;
        let rho = random_density_matrix(dim, &mut rng)?;
        let exact = expectation(&m, &rho)?;
        let mut max_excess = f64::NEG_INFINITY;
        let mut max_residual: f64 = 0.0;
        for &alpha in &self.alphas {
            let private = privatize_povm(&m, alpha)?;
            let excess = minimal_triviality(&private).alpha_star - triviality_bound(alpha, k)?;
            max_excess = max_excess.max(excess);
            // exact mean of the debiased label under the privatized measurement
            let debiaser = Debiaser::new(alpha, m.labels())?;
            let probs = outcome_probabilities(&private, &rho)?;
            let debiased: f64 = probs
                .iter()
                .zip(m.labels())
                .map(|(p, &l)| p * debiaser.apply(l))
                .sum();
            max_residual = max_residual.max((debiased - exact).abs());
        }
        Ok(vec![dim as f64, k as f64, max_excess, max_residual])
    }

    fn evaluate(&self, records: &[TrialRecord]) -> Evaluation {
        let mut eval = base_evaluation(records);
        let excess = max(&column(records, 2));
        let residual = max(&column(records, 3));
        eval.aggregates.insert("max_excess".into(), excess);
        eval.aggregates.insert("max_debias_residual".into(), residual);
        eval.checks.push(Check::at_most("max_excess", excess, self.tolerance));
        eval.checks.push(Check::at_most("max_debias_residual", residual, self.tolerance));
        finish(eval)
    }
}

// ---------------------------------------------------------------------------

struct EstimatorConcentration;

struct EstimatorConcentrationTrials {
    dim: usize,
    k: usize,
    tau: f64,
    alpha: f64,
    samples: u64,
    max_failure: f64,
}

impl Experiment for EstimatorConcentration {
    fn kind(&self) -> &'static str {
        "estimator-concentration"
    }

    fn defaults(&self) -> Vec<(&'static str, ParamValue)> {
        vec![
            ("dim", num(2.0)),
            ("k", num(2.0)),
            ("tau", num(0.1)),
            ("alpha", num(0.5)),
            ("delta", num(0.05)),
            ("max_failure", num(0.10)),
        ]
    }

    fn prepare(&self, p: &Params) -> Result<Box<dyn Trials>> {
        let k = check_min("k", count(p, "k")?, 1)?;
        let tau = number(p, "tau")?;
        let alpha = check_unit("alpha", number(p, "alpha")?)?;
        let delta = check_unit("delta", number(p, "delta")?)?;
        let samples = required_samples(k, tau, alpha, delta)?;
        if samples > 50_000_000 {
            return Err(Error::validation(format!("{samples} samples per trial is too many")));
        }
        Ok(Box::new(EstimatorConcentrationTrials {
            dim: check_min("dim", count(p, "dim")?, 1)?,
            k,
            tau,
            alpha,
            samples,
            max_failure: number(p, "max_failure")?,
        }))
    }
}

impl Trials for EstimatorConcentrationTrials {
    fn columns(&self) -> &'static [&'static str] {
        &["samples", "estimate", "exact", "abs_error", "failed"]
    }

    fn run_trial(&self, _trial: u64, mut rng: Stream) -> Result<Vec<f64>> {
        let m = random_povm(self.dim, self.k, &mut rng)?;
        let rho = random_density_matrix(self.dim, &mut rng)?;
        let exact = expectation(&m, &rho)?;
        let n = self.samples as usize;
        let budget = triviality_bound(self.alpha, self.k)?;
        let mut oracle = QldpOracle::new(ProductState::copies(rho, n)?, budget, rng.split(0))?;
        let registers: Vec<usize> = (0..n).collect();
        let estimate = estimate_expectation_via_qldp(&mut oracle, &registers, &m, self.alpha)?;
        let err = (estimate - exact).abs();
        Ok(vec![
            n as f64,
            estimate,
            exact,
            err,
            f64::from(u8::from(err > self.tau)),
        ])
    }

    fn evaluate(&self, records: &[TrialRecord]) -> Evaluation {
        let mut eval = base_evaluation(records);
        let errors = column(records, 3);
        let failure = mean(&column(records, 4));
        eval.aggregates.insert("samples".into(), self.samples as f64);
        eval.aggregates.insert("failure_fraction".into(), failure);
        eval.aggregates.insert("mean_abs_error".into(), mean(&errors));
        eval.aggregates.insert("abs_error_q95".into(), quantile(&errors, 0.95));
        eval.checks.push(Check::at_most("failure_fraction", failure, self.max_failure));
        finish(eval)
    }
}

// ---------------------------------------------------------------------------

struct RejectionDistortion;

struct RejectionDistortionTrials {
    dim_max: usize,
    k_max: usize,
    epsilon_max: f64,
    tau: f64,
}

impl Experiment for RejectionDistortion {
    fn kind(&self) -> &'static str {
        "rejection-distortion"
    }

    fn defaults(&self) -> Vec<(&'static str, ParamValue)> {
        vec![
            ("dim_max", num(4.0)),
            ("k_max", num(4.0)),
            ("epsilon_max", num(1.5)),
            ("tau", num(0.05)),
        ]
    }

    fn prepare(&self, p: &Params) -> Result<Box<dyn Trials>> {
        let k_max = check_min("k_max", count(p, "k_max")?, 2)?;
        if k_max > 16 {
            return Err(Error::validation("k_max above 16 makes sign enumeration too large"));
        }
        let epsilon_max = number(p, "epsilon_max")?;
        if !(epsilon_max > 0.0 && epsilon_max.is_finite()) {
            return Err(Error::validation("epsilon_max must be positive"));
        }
        let tau = number(p, "tau")?;
        if !(tau > 0.0 && tau <= 1.0 / 3.0) {
            return Err(Error::validation("tau must lie in (0, 1/3]"));
        }
        Ok(Box::new(RejectionDistortionTrials {
            dim_max: check_min("dim_max", count(p, "dim_max")?, 2)?,
            k_max,
            epsilon_max,
            tau,
        }))
    }
}

impl Trials for RejectionDistortionTrials {
    fn columns(&self) -> &'static [&'static str] {
        &[
            "dim",
            "k",
            "epsilon",
            "min_p",
            "eligible",
            "clamped_vectors",
            "max_rel_deviation",
            "max_tv",
            "coin_clamped",
            "coin_max_rel_deviation",
        ]
    }

    fn run_trial(&self, _trial: u64, mut rng: Stream) -> Result<Vec<f64>> {
        let dim = rng.random_range(2..=self.dim_max);
        let k = rng.random_range(2..=self.k_max);
        // privatization strength with triviality bound at most epsilon_max
        let e = self.epsilon_max.exp();
        let alpha_max = (e - 1.0) / (k as f64 + e);
        let alpha = rng.random_range(0.05 * alpha_max..alpha_max);
        let m = privatize_povm(&random_povm(dim, k, &mut rng)?, alpha)?;
        let epsilon = minimal_triviality(&m).alpha_star;
        let rho = random_density_matrix(dim, &mut rng)?;
        let p = outcome_probabilities(&m, &rho)?;
        let q = outcome_probabilities(&m, &DensityMatrix::basis_state(dim, 0)?)?;
        let q_min = q.iter().copied().fold(f64::INFINITY, f64::min);
        let eligible = self.tau <= (-epsilon).exp() * q_min / 2.0;

        let tau = self.tau;
        let rel = |out: &[f64]| -> f64 {
            out.iter()
                .zip(&p)
                .map(|(o, pw)| (o / pw - 1.0).abs())
                .fold(0.0, f64::max)
        };
        let mut clamped_vectors = 0u64;
        let mut max_rel: f64 = 0.0;
        let mut max_tv: f64 = 0.0;
        for signs in 0u32..(1 << k) {
            let answers: Vec<AnswerDistribution> = p
                .iter()
                .enumerate()
                .map(|(w, &pw)| {
                    let s = if signs >> w & 1 == 1 { tau } else { -tau };
                    vec![(1.0, pw + s)]
                })
                .collect();
            let analysis = conditional_output(&q, &answers, epsilon, tau)?;
            if analysis.clamped.iter().any(|&c| c) {
                clamped_vectors += 1;
                continue;
            }
            max_rel = max_rel.max(rel(&analysis.output));
            let tv: f64 = analysis.output.iter().zip(&p).map(|(o, pw)| (o - pw).abs()).sum();
            max_tv = max_tv.max(tv / 2.0);
        }
        let coin: Vec<AnswerDistribution> = p
            .iter()
            .map(|&pw| vec![(0.5, pw + tau), (0.5, pw - tau)])
            .collect();
        let coin_analysis = conditional_output(&q, &coin, epsilon, tau)?;
        let coin_clamped = coin_analysis.clamped.iter().any(|&c| c);
        let coin_rel = rel(&coin_analysis.output);
        Ok(vec![
            dim as f64,
            k as f64,
            epsilon,
            p.iter().copied().fold(f64::INFINITY, f64::min),
            f64::from(u8::from(eligible)),
            clamped_vectors as f64,
            max_rel,
            max_tv,
            f64::from(u8::from(coin_clamped)),
            coin_rel,
        ])
    }

    fn evaluate(&self, records: &[TrialRecord]) -> Evaluation {
        let mut eval = base_evaluation(records);
        let eligible = column(records, 4);
        let clamped = column(records, 5);
        let eligible_clamps = total(
            eligible
                .iter()
                .zip(&clamped)
                .filter(|(e, _)| **e == 1.0)
                .map(|(_, c)| *c),
        );
        let rel = max(&column(records, 6));
        eval.aggregates.insert("eligible_instances".into(), total(eligible.iter().copied()));
        eval.aggregates.insert("clamped_vectors".into(), total(clamped.iter().copied()));
        eval.aggregates.insert("max_rel_deviation".into(), rel);
        eval.aggregates.insert("max_tv".into(), max(&column(records, 7)));
        // the fair-coin identity only covers the unclamped loop
        let coin: Vec<f64> = column(records, 8)
            .iter()
            .zip(column(records, 9))
            .filter(|(c, _)| **c == 0.0)
            .map(|(_, d)| d)
            .collect();
        eval.aggregates
            .insert("coin_max_rel_deviation".into(), max(&coin));
        eval.checks
            .push(Check::at_most("max_rel_deviation", rel, 3.0 * self.tau));
        eval.checks
            .push(Check::at_most("eligible_clamped_vectors", eligible_clamps, 0.0));
        finish(eval)
    }
}

// ---------------------------------------------------------------------------

struct TerminationRate;

struct TerminationRateTrials {
    dim: usize,
    epsilon: f64,
    tau: f64,
}

impl Experiment for TerminationRate {
    fn kind(&self) -> &'static str {
        "termination-rate"
    }

    fn defaults(&self) -> Vec<(&'static str, ParamValue)> {
        vec![("dim", num(2.0)), ("epsilon", num(1.0)), ("tau", num(0.01))]
    }

    fn prepare(&self, p: &Params) -> Result<Box<dyn Trials>> {
        let epsilon = number(p, "epsilon")?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::validation("epsilon must be positive"));
        }
        let tau = number(p, "tau")?;
        if !(tau > 0.0 && tau <= 1.0 / 3.0) {
            return Err(Error::validation("tau must lie in (0, 1/3]"));
        }
        Ok(Box::new(TerminationRateTrials {
            dim: check_min("dim", count(p, "dim")?, 2)?,
            epsilon,
            tau,
        }))
    }
}

impl TerminationRateTrials {
    fn bound(&self) -> f64 {
        self.epsilon.exp() * (1.0 + self.tau) / (1.0 - self.tau)
    }
}

impl Trials for TerminationRateTrials {
    fn columns(&self) -> &'static [&'static str] {
        &["iterations", "clamps", "outcome"]
    }

    fn run_trial(&self, _trial: u64, mut rng: Stream) -> Result<Vec<f64>> {
        // two-outcome privatized measurement: triviality bound exactly epsilon
        let e = self.epsilon.exp();
        let alpha = (e - 1.0) / (2.0 + e);
        let m = privatize_povm(&random_povm(self.dim, 2, &mut rng)?, alpha)?;
        let rho = random_density_matrix(self.dim, &mut rng)?;
        let mut oracle = QsqOracle::new(rho, Box::new(Exact), rng.split(0));
        let mut sampler = rng.split(1);
        let out = rejection_sample_measurement(
            &mut oracle,
            &m,
            self.epsilon,
            self.tau,
            &RejectionOptions::default(),
            &mut sampler,
        )?;
        Ok(vec![out.iterations as f64, out.clamps as f64, out.index as f64])
    }

    fn evaluate(&self, records: &[TrialRecord]) -> Evaluation {
        let mut eval = base_evaluation(records);
        let its = column(records, 0);
        let m = mean(&its);
        let n = its.len() as f64;
        let var = its.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let se = (var / n).sqrt();
        eval.aggregates.insert("mean_iterations".into(), m);
        eval.aggregates.insert("standard_error".into(), se);
        eval.aggregates.insert("iterations_q99".into(), quantile(&its, 0.99));
        eval.aggregates.insert("bound".into(), self.bound());
        eval.aggregates
            .insert("clamps".into(), total(column(records, 1)));
        eval.checks
            .push(Check::at_most("mean_iterations", m, self.bound() + 3.0 * se));
        finish(eval)
    }
}

// ---------------------------------------------------------------------------

struct ParityEndToEnd;

#[derive(Clone, Copy, PartialEq)]
enum ParityMode {
    Qsq,
    Qldp,
}

struct ParityTrials {
    d: usize,
    mode: ParityMode,
    epsilon: f64,
    beta: f64,
    tau: f64,
    noise: String,
    copies: u64,
}

impl Experiment for ParityEndToEnd {
    fn kind(&self) -> &'static str {
        "parity-e2e"
    }

    fn defaults(&self) -> Vec<(&'static str, ParamValue)> {
        vec![
            ("d", num(8.0)),
            ("mode", ParamValue::Text("qldp".into())),
            ("epsilon", num(1.0)),
            ("beta", num(0.1)),
            ("tau", num(0.2)),
            ("noise", ParamValue::Text("adversarial_extreme".into())),
        ]
    }

    fn prepare(&self, p: &Params) -> Result<Box<dyn Trials>> {
        let d = count(p, "d")?;
        if d > 12 {
            return Err(Error::validation("d above 12 is beyond the dense simulator"));
        }
        let mode = match text(p, "mode")? {
            "qsq" => ParityMode::Qsq,
            "qldp" => ParityMode::Qldp,
            other => {
                return Err(Error::validation(format!(
                    "mode must be \"qsq\" or \"qldp\", got {other:?}"
                )))
            }
        };
        let noise = text(p, "noise")?.to_string();
        noise_model(&noise)?;
        let epsilon = number(p, "epsilon")?;
        let beta = check_unit("beta", number(p, "beta")?)?;
        let tau = number(p, "tau")?;
        let copies = match mode {
            ParityMode::Qldp => copies_per_bit(d, epsilon, beta, tau)? * d as u64,
            ParityMode::Qsq => 0,
        };
        Ok(Box::new(ParityTrials {
            d,
            mode,
            epsilon,
            beta,
            tau,
            noise,
            copies,
        }))
    }
}

impl Trials for ParityTrials {
    fn columns(&self) -> &'static [&'static str] {
        &[
            "secret",
            "recovered",
            "correct",
            "queries",
            "copies_used",
            "max_register_spent",
            "max_register_queries",
            "charge_deviation",
        ]
    }

    fn run_trial(&self, _trial: u64, mut rng: Stream) -> Result<Vec<f64>> {
        let secret = rng.random_range(0..1u64 << self.d);
        let concept = ParityConcept::from_index(self.d, secret)?;
        let state = quantum_example_state(&concept, &ExampleDistribution::uniform(self.d)?)?;
        let index = |c: &ParityConcept| {
            c.bits()
                .iter()
                .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
        };
        match self.mode {
            ParityMode::Qsq => {
                let mut oracle = QsqOracle::new(state, noise_model(&self.noise)?, rng.split(0));
                let h = learn_parity_qsq(&mut oracle, self.d, self.tau)?;
                Ok(vec![
                    secret as f64,
                    index(&h) as f64,
                    f64::from(u8::from(h == concept)),
                    oracle.queries() as f64,
                    0.0,
                    0.0,
                    0.0,
                    0.0,
                ])
            }
            ParityMode::Qldp => {
                let copies = ProductState::copies(state, self.copies as usize)?;
                let run =
                    learn_parity_qldp(&copies, self.d, self.epsilon, self.beta, self.tau, rng.split(0))?;
                let used = &run.ledger[..run.copies_used as usize];
                let max_spent = used.iter().map(|l| l.spent).fold(0.0, f64::max);
                let max_queries = run.ledger.iter().map(|l| l.queries).max().unwrap_or(0);
                let deviation = used
                    .iter()
                    .map(|l| (l.spent - self.epsilon).abs())
                    .fold(0.0, f64::max);
                Ok(vec![
                    secret as f64,
                    index(&run.hypothesis) as f64,
                    f64::from(u8::from(run.hypothesis == concept)),
                    run.queries as f64,
                    run.copies_used as f64,
                    max_spent,
                    f64::from(max_queries),
                    deviation,
                ])
            }
        }
    }

    fn evaluate(&self, records: &[TrialRecord]) -> Evaluation {
        let mut eval = base_evaluation(records);
        let correct = column(records, 2);
        let n = records.len() as f64;
        let rate = total(correct) / n;
        eval.aggregates.insert("success_rate".into(), rate);
        eval.aggregates.insert("mean_queries".into(), mean(&column(records, 3)));
        match self.mode {
            ParityMode::Qsq => {
                eval.checks.push(Check::at_least("success_rate", rate, 1.0));
            }
            ParityMode::Qldp => {
                let target = 1.0 - self.beta;
                let threshold = target - 3.0 * (target * self.beta / n).sqrt();
                let deviation = max(&column(records, 7));
                let reuse = max(&column(records, 6));
                eval.aggregates.insert("copies_per_run".into(), self.copies as f64);
                eval.aggregates.insert("max_charge_deviation".into(), deviation);
                eval.aggregates.insert("max_register_queries".into(), reuse);
                eval.checks.push(Check::at_least("success_rate", rate, threshold));
                eval.checks.push(Check::at_most("charge_deviation", deviation, 1e-12));
                eval.checks.push(Check::at_most("max_register_queries", reuse, 1.0));
            }
        }
        finish(eval)
    }
}

// ---------------------------------------------------------------------------

struct DpCheckSuite;

struct DpCheckTrials {
    dim_max: usize,
    k_max: usize,
    set_max: usize,
    tolerance: f64,
}

impl Experiment for DpCheckSuite {
    fn kind(&self) -> &'static str {
        "dp-check-suite"
    }

    fn defaults(&self) -> Vec<(&'static str, ParamValue)> {
        vec![
            ("dim_max", num(4.0)),
            ("k_max", num(4.0)),
            ("set_max", num(5.0)),
            ("tolerance", num(1e-9)),
        ]
    }

    fn prepare(&self, p: &Params) -> Result<Box<dyn Trials>> {
        let tolerance = number(p, "tolerance")?;
        if tolerance.is_nan() || tolerance <= 0.0 {
            return Err(Error::validation("tolerance must be positive"));
        }
        Ok(Box::new(DpCheckTrials {
            dim_max: check_min("dim_max", count(p, "dim_max")?, 2)?,
            k_max: check_min("k_max", count(p, "k_max")?, 2)?,
            set_max: check_min("set_max", count(p, "set_max")?, 2)?,
            tolerance,
        }))
    }
}

/// The two-register example: each register measured with the privatized
/// computational basis at `α = 1/2`, outcomes paired up.
pub(crate) fn tensor_example() -> Result<(Povm, Vec<ProductState>)> {
    let single = privatize_povm(&Povm::computational_basis(2)?, 0.5)?;
    let effects = single
        .effects()
        .iter()
        .flat_map(|a| single.effects().iter().map(move |b| a.tensor(b)))
        .collect::<Result<Vec<Operator>>>()?;
    let joint = Povm::with_default_labels(effects)?;
    let basis = |i| DensityMatrix::basis_state(2, i);
    let states = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .into_iter()
        .map(|(a, b)| ProductState::new(vec![basis(a)?, basis(b)?]))
        .collect::<Result<Vec<_>>>()?;
    Ok((joint, states))
}

impl Trials for DpCheckTrials {
    fn columns(&self) -> &'static [&'static str] {
        &["dim", "k", "set_size", "set_triviality", "passes_above", "fails_below"]
    }

    fn run_trial(&self, _trial: u64, mut rng: Stream) -> Result<Vec<f64>> {
        let dim = rng.random_range(2..=self.dim_max);
        let k = rng.random_range(2..=self.k_max);
        let size = rng.random_range(2..=self.set_max);
        let m = random_povm(dim, k, &mut rng)?;
        let states = (0..size)
            .map(|_| random_density_matrix(dim, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let t = minimal_triviality_on_set(&m, &states)?.alpha_star;
        // single-register states: every pair of distinct states are neighbors
        let products = states
            .iter()
            .map(|s| ProductState::new(vec![s.clone()]))
            .collect::<Result<Vec<_>>>()?;
        let above = check_dp(&m, &products, t + self.tolerance)?.passed();
        let below = t <= self.tolerance || !check_dp(&m, &products, t - self.tolerance)?.passed();
        Ok(vec![
            dim as f64,
            k as f64,
            size as f64,
            t,
            f64::from(u8::from(above)),
            f64::from(u8::from(below)),
        ])
    }

    fn evaluate(&self, records: &[TrialRecord]) -> Evaluation {
        let mut eval = base_evaluation(records);
        let inconsistent = column(records, 4)
            .iter()
            .zip(column(records, 5))
            .filter(|(a, b)| **a != 1.0 || *b != 1.0)
            .count() as f64;
        eval.aggregates.insert("inconsistent".into(), inconsistent);
        eval.checks.push(Check::at_most("inconsistent", inconsistent, 0.0));
        let (tensor_pass, tensor_fail) = match tensor_example() {
            Ok((m, states)) => {
                let ln3 = 3f64.ln();
                (
                    check_dp(&m, &states, ln3).map(|v| v.passed()).unwrap_or(false),
                    check_dp(&m, &states, ln3 - 0.01).map(|v| !v.passed()).unwrap_or(false),
                )
            }
            Err(_) => (false, false),
        };
        eval.checks.push(Check::at_least(
            "tensor_example_passes_at_ln3",
            f64::from(u8::from(tensor_pass)),
            1.0,
        ));
        eval.checks.push(Check::at_least(
            "tensor_example_fails_below_ln3",
            f64::from(u8::from(tensor_fail)),
            1.0,
        ));
        finish(eval)
    }
}

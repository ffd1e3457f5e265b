//! Statistical queries answered through nearly trivial measurements.
//!
//! A measurement `M = (E_1..E_k)` is privatized to
//! `E_i' = α E_i + (1-α)/k · I`: run `M` with probability `α`, otherwise
//! report a uniformly random outcome. Each effect then has spectrum inside
//! `[(1-α)/k, α + (1-α)/k]`, so `M'` is `ln((1+αk)/(1-α))`-trivial, and the
//! debiased average of `M'` outcomes over fresh copies concentrates around
//! `E[M(ρ)]` by Hoeffding's inequality.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{Povm, SpectralBounds};
use crate::oracles::{QldpOracle, RegisterLedger};
use crate::quantum::{DensityMatrix, Operator, ProductState};
use crate::rng::Stream;

use super::QsqQueryPlan;

fn check_open_unit(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::validation(format!(
            "{name} must lie in (0, 1), got {value}"
        )));
    }
    Ok(())
}

/// `E_i' = α E_i + ((1-α)/k) I`, labels preserved.
pub fn privatize_povm(m: &Povm, alpha: f64) -> Result<Povm> {
    check_open_unit("alpha", alpha)?;
    let k = m.num_outcomes();
    let shift = (1.0 - alpha) / k as f64;
    let uniform = Operator::identity(m.dim()).scale(shift);
    let effects = m
        .effects()
        .iter()
        .map(|e| &e.scale(alpha) + &uniform)
        .collect();
    // the spectrum moves by the same affine map
    let spectra = m
        .spectra()
        .iter()
        .map(|s| SpectralBounds {
            min: alpha * s.min + shift,
            max: alpha * s.max + shift,
        })
        .collect();
    Povm::from_known_spectra(effects, m.labels().to_vec(), spectra)
}

/// `ln((1 + αk) / (1 - α))`, the triviality of a privatized `k`-outcome measurement.
pub fn triviality_bound(alpha: f64, k: usize) -> Result<f64> {
    check_open_unit("alpha", alpha)?;
    if k == 0 {
        return Err(Error::validation("outcome count must be positive"));
    }
    Ok(((1.0 + alpha * k as f64) / (1.0 - alpha)).ln())
}

/// `x/α + (α-1)/α`.
///
/// This is the unbiased correction only when the outcome labels average to
/// one; [`Debiaser`] handles general labels.
pub fn debias(x: f64, alpha: f64) -> f64 {
    x / alpha + (alpha - 1.0) / alpha
}

/// Affine correction `z = (x - (1-α)·mean(labels)) / α` making a privatized
/// outcome an unbiased estimate of the original expectation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Debiaser {
    alpha: f64,
    label_mean: f64,
}

impl Debiaser {
    pub fn new(alpha: f64, labels: &[f64]) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::validation(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if labels.is_empty() {
            return Err(Error::validation("no labels"));
        }
        Ok(Self {
            alpha,
            label_mean: labels.iter().sum::<f64>() / labels.len() as f64,
        })
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - (1.0 - self.alpha) * self.label_mean) / self.alpha
    }
}

/// `ceil(k² ln(2/δ) / (2 τ² α²))` fresh copies for additive error `τ` with
/// failure probability `δ`.
pub fn required_samples(k: usize, tau: f64, alpha: f64, delta: f64) -> Result<u64> {
    if k == 0 {
        return Err(Error::validation("outcome count must be positive"));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::validation(format!("tau must be positive, got {tau}")));
    }
    check_open_unit("alpha", alpha)?;
    check_open_unit("delta", delta)?;
    let k = k as f64;
    let n = (k * k * (2.0 / delta).ln() / (2.0 * tau * tau * alpha * alpha)).ceil();
    if n > u64::MAX as f64 {
        return Err(Error::validation("required sample count overflows"));
    }
    Ok(n as u64)
}

/// Estimates `E[M(ρ)]` by measuring each listed register once with the
/// privatized `M` and averaging the debiased labels.
pub fn estimate_expectation_via_qldp(
    oracle: &mut QldpOracle,
    registers: &[usize],
    m: &Povm,
    alpha: f64,
) -> Result<f64> {
    if registers.is_empty() {
        return Err(Error::validation("no registers to measure"));
    }
    let mut seen = HashSet::with_capacity(registers.len());
    if let Some(dup) = registers.iter().find(|j| !seen.insert(**j)) {
        return Err(Error::validation(format!("register {dup} listed twice")));
    }
    let private = privatize_povm(m, alpha)?;
    let cost = triviality_bound(alpha, m.num_outcomes())?;
    let debiaser = Debiaser::new(alpha, m.labels())?;
    let mut total = 0.0;
    for &j in registers {
        let answer = oracle.query(j, &private, cost)?;
        total += debiaser.apply(answer.label);
    }
    Ok(total / registers.len() as f64)
}

/// Outcome of running a nonadaptive statistical-query plan on private measurements.
#[derive(Clone, Debug, Serialize)]
pub struct QsqSimulation {
    pub estimates: Vec<f64>,
    /// Copies consumed per query.
    pub samples: Vec<u64>,
    pub registers_used: usize,
    /// Per-register budget of the oracle.
    pub budget: f64,
    pub ledger: Vec<RegisterLedger>,
}

/// Answers every query of `plan` on disjoint fresh copies of `state`.
///
/// Query `j` uses `required_samples(k_j, τ_j, α, β/t)` copies, so by the union
/// bound all `t` answers are within tolerance with probability at least
/// `1 - β`. The oracle budget is the triviality bound for the largest outcome
/// count in the plan; each copy is measured exactly once.
pub fn simulate_nonadaptive_qsq(
    plan: &QsqQueryPlan,
    state: &DensityMatrix,
    alpha: f64,
    beta: f64,
    rng: Stream,
) -> Result<QsqSimulation> {
    check_open_unit("alpha", alpha)?;
    check_open_unit("beta", beta)?;
    let delta = beta / plan.len() as f64;
    let samples = plan
        .queries()
        .iter()
        .map(|q| required_samples(q.povm.num_outcomes(), q.tau, alpha, delta))
        .collect::<Result<Vec<_>>>()?;
    let total: u64 = samples.iter().sum();
    let total = usize::try_from(total)
        .map_err(|_| Error::validation("required copy count overflows"))?;
    let budget = triviality_bound(alpha, plan.max_outcomes())?;
    let mut oracle = QldpOracle::new(ProductState::copies(state.clone(), total)?, budget, rng)?;

    let mut next = 0usize;
    let mut estimates = Vec::with_capacity(plan.len());
    for (q, &n) in plan.queries().iter().zip(&samples) {
        let registers: Vec<usize> = (next..next + n as usize).collect();
        next += n as usize;
        estimates.push(estimate_expectation_via_qldp(&mut oracle, &registers, &q.povm, alpha)?);
    }
    Ok(QsqSimulation {
        estimates,
        samples,
        registers_used: next,
        budget,
        ledger: oracle.ledger().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{expectation, minimal_triviality, outcome_probabilities, random_povm};
    use crate::protocols::QsqQuery;
    use crate::quantum::random_density_matrix;

    fn projective_pair() -> Povm {
        Povm::with_default_labels(vec![
            Operator::diagonal(&[1.0, 0.0]),
            Operator::diagonal(&[0.0, 1.0]),
        ])
        .unwrap()
    }

    #[test]
    fn privatized_projective_pair() {
        let m = privatize_povm(&projective_pair(), 0.5).unwrap();
        assert!(m.effects()[0].max_abs_diff(&Operator::diagonal(&[0.75, 0.25])) < 1e-15);
        assert!(m.effects()[1].max_abs_diff(&Operator::diagonal(&[0.25, 0.75])) < 1e-15);
        assert_eq!(m.labels(), &[1.0, 2.0]);
        let alpha_star = minimal_triviality(&m).alpha_star;
        assert!((alpha_star - 3f64.ln()).abs() < 1e-12);
        assert!(alpha_star <= triviality_bound(0.5, 2).unwrap());
    }

    #[test]
    fn privatize_rejects_closed_endpoints() {
        for alpha in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(privatize_povm(&projective_pair(), alpha), Err(Error::Validation(_))));
        }
    }

    #[test]
    fn privatized_spectra_match_eigendecomposition() {
        let mut rng = Stream::from_seed(12);
        let m = random_povm(4, 3, &mut rng).unwrap();
        let fast = privatize_povm(&m, 0.37).unwrap();
        let slow = Povm::new(fast.effects().to_vec(), fast.labels().to_vec()).unwrap();
        for (a, b) in fast.spectra().iter().zip(slow.spectra()) {
            assert!((a.min - b.min).abs() < 1e-12 && (a.max - b.max).abs() < 1e-12);
        }
    }

    #[test]
    fn triviality_bound_values() {
        assert!((triviality_bound(0.5, 2).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!((triviality_bound(0.5, 4).unwrap() - 6f64.ln()).abs() < 1e-15);
        assert!(triviality_bound(1e-9, 2).unwrap() < 1e-8);
        assert!(triviality_bound(1.0, 2).is_err());
        assert!(triviality_bound(0.5, 0).is_err());
    }

    #[test]
    fn debias_values() {
        assert_eq!(debias(3.7, 1.0), 3.7);
        for alpha in [0.1, 0.5, 0.9] {
            assert!((debias(1.0, alpha) - 1.0).abs() < 1e-12);
        }
        assert_eq!(debias(2.0, 0.5), 3.0);
    }

    #[test]
    fn debiaser_reduces_to_debias_for_unit_mean_labels() {
        let d = Debiaser::new(0.3, &[0.5, 1.5]).unwrap();
        for x in [0.5, 1.5, 7.0] {
            assert!((d.apply(x) - debias(x, 0.3)).abs() < 1e-12);
        }
        assert!(Debiaser::new(0.0, &[1.0]).is_err());
    }

    #[test]
    fn mixture_identity_is_unbiased() {
        let mut rng = Stream::from_seed(77);
        for _ in 0..50 {
            let m = random_povm(3, 4, &mut rng).unwrap().relabeled(vec![0.0, -1.5, 2.0, 7.25]).unwrap();
            let rho = random_density_matrix(3, &mut rng).unwrap();
            let alpha = 0.05 + 0.9 * rand::Rng::random::<f64>(&mut rng);
            let private = privatize_povm(&m, alpha).unwrap();
            let debiaser = Debiaser::new(alpha, m.labels()).unwrap();
            let p = outcome_probabilities(&private, &rho).unwrap();
            let mixed: f64 = p.iter().zip(m.labels()).map(|(pi, &l)| pi * debiaser.apply(l)).sum();
            assert!((mixed - expectation(&m, &rho).unwrap()).abs() <= 1e-9);
        }
    }

    #[test]
    fn required_samples_values() {
        assert_eq!(required_samples(2, 0.1, 0.5, 0.05).unwrap(), 2952);
        let base = 4.0 * 40f64.ln() / (2.0 * 0.01 * 0.25);
        let doubled = 4.0 * 40f64.ln() / (2.0 * 0.04 * 0.25);
        assert!((base / doubled - 4.0).abs() < 1e-12);
        assert_eq!(required_samples(2, 0.2, 0.5, 0.05).unwrap(), (doubled).ceil() as u64);
        assert_eq!(
            required_samples(1, 0.1, 0.5, 0.05).unwrap(),
            (40f64.ln() / 0.005).ceil() as u64
        );
        assert!(required_samples(2, 0.0, 0.5, 0.05).is_err());
        assert!(required_samples(2, 0.1, 0.5, 1.0).is_err());
    }

    fn copies_oracle(state: &DensityMatrix, n: usize, budget: f64, seed: u64) -> QldpOracle {
        QldpOracle::new(ProductState::copies(state.clone(), n).unwrap(), budget, Stream::from_seed(seed))
            .unwrap()
    }

    #[test]
    fn constant_labels_estimate_exactly() {
        let mut rng = Stream::from_seed(5);
        let m = random_povm(2, 3, &mut rng).unwrap().relabeled(vec![4.5; 3]).unwrap();
        let rho = random_density_matrix(2, &mut rng).unwrap();
        let mut oracle = copies_oracle(&rho, 100, 10.0, 1);
        let regs: Vec<usize> = (0..100).collect();
        let est = estimate_expectation_via_qldp(&mut oracle, &regs, &m, 0.4).unwrap();
        assert!((est - 4.5).abs() < 1e-12);
    }

    #[test]
    fn estimate_on_maximally_mixed_state() {
        let n = required_samples(2, 0.1, 0.5, 0.05).unwrap() as usize;
        let rho = DensityMatrix::maximally_mixed(2);
        let regs: Vec<usize> = (0..n).collect();
        let trials = 100;
        let hits = (0..trials)
            .filter(|&t| {
                let mut oracle = copies_oracle(&rho, n, 4f64.ln(), 1000 + t);
                let est = estimate_expectation_via_qldp(&mut oracle, &regs, &projective_pair(), 0.5).unwrap();
                (1.4..=1.6).contains(&est)
            })
            .count();
        assert!(hits as f64 / trials as f64 >= 0.95);
    }

    #[test]
    fn estimate_errors() {
        let rho = DensityMatrix::maximally_mixed(2);
        let mut oracle = copies_oracle(&rho, 4, 4f64.ln(), 0);
        let m = projective_pair();
        assert!(matches!(estimate_expectation_via_qldp(&mut oracle, &[], &m, 0.5), Err(Error::Validation(_))));
        assert!(matches!(estimate_expectation_via_qldp(&mut oracle, &[0, 1, 0], &m, 0.5), Err(Error::Validation(_))));
        estimate_expectation_via_qldp(&mut oracle, &[0, 1], &m, 0.5).unwrap();
        assert!(matches!(
            estimate_expectation_via_qldp(&mut oracle, &[1, 2], &m, 0.5),
            Err(Error::BudgetExceeded { register: 1, .. })
        ));
        let mut tight = copies_oracle(&rho, 4, 1.0, 0);
        assert!(matches!(
            estimate_expectation_via_qldp(&mut tight, &[0], &m, 0.5),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn three_identical_queries_use_disjoint_registers() {
        let rho = DensityMatrix::maximally_mixed(2);
        let q = QsqQuery { povm: projective_pair(), tau: 0.1 };
        let plan = QsqQueryPlan::new(vec![q.clone(), q.clone(), q]).unwrap();
        let sim = simulate_nonadaptive_qsq(&plan, &rho, 0.5, 0.05, Stream::from_seed(3)).unwrap();
        // ceil(4 ln(120) / 0.005) = ceil(3829.993...) = 3830
        assert_eq!(sim.samples, vec![3830; 3]);
        assert_eq!(sim.registers_used, 11490);
        assert!(sim.ledger.iter().all(|r| r.queries == 1 && r.spent == sim.budget));
        for est in &sim.estimates {
            assert!((est - 1.5).abs() < 0.1);
        }
    }

    #[test]
    fn single_query_plan_matches_direct_estimate() {
        let mut rng = Stream::from_seed(8);
        let rho = random_density_matrix(2, &mut rng).unwrap();
        let m = random_povm(2, 3, &mut rng).unwrap();
        let plan = QsqQueryPlan::new(vec![QsqQuery { povm: m.clone(), tau: 0.2 }]).unwrap();
        let sim = simulate_nonadaptive_qsq(&plan, &rho, 0.6, 0.1, Stream::from_seed(99)).unwrap();
        let n = required_samples(3, 0.2, 0.6, 0.1).unwrap() as usize;
        let mut oracle = QldpOracle::new(
            ProductState::copies(rho, n).unwrap(),
            triviality_bound(0.6, 3).unwrap(),
            Stream::from_seed(99),
        )
        .unwrap();
        let regs: Vec<usize> = (0..n).collect();
        let direct = estimate_expectation_via_qldp(&mut oracle, &regs, &m, 0.6).unwrap();
        assert_eq!(sim.estimates, vec![direct]);
        assert_eq!(sim.samples, vec![n as u64]);
    }

    #[test]
    fn heterogeneous_outcome_counts_share_the_largest_budget() {
        let mut rng = Stream::from_seed(10);
        let rho = random_density_matrix(2, &mut rng).unwrap();
        let plan = QsqQueryPlan::new(vec![
            QsqQuery { povm: random_povm(2, 2, &mut rng).unwrap(), tau: 0.3 },
            QsqQuery { povm: random_povm(2, 4, &mut rng).unwrap(), tau: 0.5 },
        ])
        .unwrap();
        let sim = simulate_nonadaptive_qsq(&plan, &rho, 0.5, 0.2, Stream::from_seed(0)).unwrap();
        assert_eq!(sim.budget, triviality_bound(0.5, 4).unwrap());
        let n0 = sim.samples[0] as usize;
        assert!(sim.ledger[..n0].iter().all(|r| r.spent == triviality_bound(0.5, 2).unwrap()));
        assert!(sim.ledger[n0..].iter().all(|r| r.spent == sim.budget && r.queries == 1));
    }
}

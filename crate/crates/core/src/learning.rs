//! Parity learning from quantum examples.
//!
//! Basis index convention: an example `|x, c(x)⟩` with `x ∈ {0,1}^d` lives at
//! index `(x << 1) | c(x)`, where `x` is read with its first bit most
//! significant. Under the uniform distribution,
//! `H^{⊗(d+1)} |ψ_s⟩ = (|0^d, 0⟩ + |s, 1⟩) / √2`, so projecting onto
//! "bit `i` set and label qubit set" after the transform has expectation
//! `s_i / 2`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{Povm, SpectralBounds};
use crate::oracles::{QldpOracle, QsqOracle, RegisterLedger};
use crate::protocols::{estimate_expectation_via_qldp, required_samples, triviality_bound};
use crate::quantum::{
    check_dim, hadamard_conjugate_diagonal, parse_bits, pure_state_density, DensityMatrix,
    Operator, ProductState, C64, DEFAULT_DIM_CAP,
};
use crate::rng::Stream;

/// Per-bit decoding threshold, midway between the expectations 0 and 1/2.
pub const DECODE_THRESHOLD: f64 = 0.25;

/// The concept `c(x) = s · x mod 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParityConcept {
    bits: Vec<bool>,
}

impl ParityConcept {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::validation("parity needs at least one bit"));
        }
        Ok(Self { bits })
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(parse_bits(s)?)
    }

    /// The concept whose bits are the low `d` bits of `index`, first bit most significant.
    pub fn from_index(d: usize, index: u64) -> Result<Self> {
        if d == 0 || d > 63 {
            return Err(Error::validation(format!("unsupported parity length {d}")));
        }
        Self::new((0..d).map(|i| index >> (d - 1 - i) & 1 == 1).collect())
    }

    pub fn d(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    fn as_index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }

    /// `c(x)` for `x` given as an index in `0..2^d`.
    pub fn evaluate(&self, x: usize) -> bool {
        (self.as_index() & x).count_ones() % 2 == 1
    }
}

impl fmt::Display for ParityConcept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A distribution over `{0,1}^d`, as `2^d` weights indexed like [`ParityConcept::evaluate`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExampleDistribution {
    d: usize,
    weights: Vec<f64>,
}

impl ExampleDistribution {
    pub fn new(d: usize, weights: Vec<f64>) -> Result<Self> {
        if d == 0 || d >= 63 || weights.len() as u128 != 1u128 << d {
            return Err(Error::validation(format!(
                "expected 2^{d} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::validation("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { d, weights })
    }

    pub fn uniform(d: usize) -> Result<Self> {
        check_dim(1u128 << d.min(127), DEFAULT_DIM_CAP)?;
        let n = 1usize << d;
        Self::new(d, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(d: usize, x: usize) -> Result<Self> {
        check_dim(1u128 << d.min(127), DEFAULT_DIM_CAP)?;
        let mut weights = vec![0.0; 1usize << d];
        *weights
            .get_mut(x)
            .ok_or_else(|| Error::validation(format!("point {x} outside {{0,1}}^{d}")))? = 1.0;
        Self::new(d, weights)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn example_dim(d: usize) -> Result<usize> {
    if d == 0 || d >= 63 {
        return Err(Error::Capacity {
            requested: if d == 0 { 0 } else { u128::MAX },
            cap: DEFAULT_DIM_CAP,
        });
    }
    check_dim(1u128 << (d + 1), DEFAULT_DIM_CAP)
}

/// `|ψ_c⟩⟨ψ_c|` with `|ψ_c⟩ = Σ_x √X(x) |x, c(x)⟩` on `d + 1` qubits.
pub fn quantum_example_state(c: &ParityConcept, x: &ExampleDistribution) -> Result<DensityMatrix> {
    if c.d() != x.d() {
        return Err(Error::validation("concept and distribution dimensions differ"));
    }
    let dim = example_dim(c.d())?;
    let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
    for (point, &w) in x.weights().iter().enumerate() {
        amplitudes[(point << 1) | usize::from(c.evaluate(point))] = C64::new(w.sqrt(), 0.0);
    }
    pure_state_density(&amplitudes)?.with_registers(vec![1; c.d() + 1])
}

/// Binary POVM `(I - M_i, M_i)`, labels `(0, 1)`, with
/// `M_i = H^{⊗(d+1)} (P_{bit i = 1} ⊗ |1⟩⟨1|) H^{⊗(d+1)}`.
pub fn parity_bit_povm(d: usize, i: usize) -> Result<Povm> {
    let dim = example_dim(d)?;
    if i >= d {
        return Err(Error::validation(format!("bit index {i} out of range for d = {d}")));
    }
    let shift = d - i; // bit i of x sits above the label qubit
    let diag: Vec<f64> = (0..dim)
        .map(|c| if c & 1 == 1 && (c >> shift) & 1 == 1 { 1.0 } else { 0.0 })
        .collect();
    let projector = hadamard_conjugate_diagonal(&diag)?;
    let complement = &Operator::identity(dim) - &projector;
    // both effects are projectors of rank dim/4 and 3·dim/4
    let spectrum = SpectralBounds { min: 0.0, max: 1.0 };
    Povm::from_known_spectra(vec![complement, projector], vec![0.0, 1.0], vec![spectrum; 2])
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < DECODE_THRESHOLD) {
        return Err(Error::validation(format!("tau must lie in (0, 1/4), got {tau}")));
    }
    Ok(())
}

/// Learns `s` from `d` nonadaptive statistical queries at tolerance `tau < 1/4`.
pub fn learn_parity_qsq(oracle: &mut QsqOracle, d: usize, tau: f64) -> Result<ParityConcept> {
    check_tau(tau)?;
    let povms = (0..d).map(|i| parity_bit_povm(d, i)).collect::<Result<Vec<_>>>()?;
    let bits = povms
        .iter()
        .map(|m| Ok(oracle.query(m, tau)? > DECODE_THRESHOLD))
        .collect::<Result<Vec<_>>>()?;
    ParityConcept::new(bits)
}

/// Privatization strength whose two-outcome triviality bound equals `epsilon`:
/// `α = (e^ε - 1) / (2 + e^ε)`.
pub fn alpha_for_epsilon(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::validation(format!("epsilon must be positive, got {epsilon}")));
    }
    let e = epsilon.exp();
    Ok((e - 1.0) / (2.0 + e))
}

/// Copies of the example state needed per bit.
pub fn copies_per_bit(d: usize, epsilon: f64, beta: f64, tau: f64) -> Result<u64> {
    if d == 0 {
        return Err(Error::validation("d must be positive"));
    }
    required_samples(2, tau, alpha_for_epsilon(epsilon)?, beta / d as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct ParityQldpRun {
    #[serde(serialize_with = "serialize_display")]
    pub hypothesis: ParityConcept,
    pub estimates: Vec<f64>,
    pub alpha: f64,
    pub copies_per_bit: u64,
    pub copies_used: u64,
    pub queries: u64,
    /// Budget actually enforced per register (`triviality_bound(α, 2)`).
    pub budget: f64,
    pub ledger: Vec<RegisterLedger>,
}

fn serialize_display<S: serde::Serializer>(v: &ParityConcept, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Runs the `d`-query parity learner through private measurements on `copies`.
///
/// Bit `i` is estimated from its own block of `copies_per_bit` registers with
/// the privatized bit measurement, so every used register is measured once
/// and charged `ε`.
pub fn learn_parity_qldp(
    copies: &ProductState,
    d: usize,
    epsilon: f64,
    beta: f64,
    tau: f64,
    rng: Stream,
) -> Result<ParityQldpRun> {
    check_tau(tau)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::validation(format!("beta must lie in (0, 1), got {beta}")));
    }
    let alpha = alpha_for_epsilon(epsilon)?;
    let per_bit = copies_per_bit(d, epsilon, beta, tau)?;
    let required = per_bit * d as u64;
    if (copies.len() as u64) < required {
        return Err(Error::InsufficientCopies {
            required,
            available: copies.len() as u64,
        });
    }
    let budget = triviality_bound(alpha, 2)?;
    debug_assert!((budget - epsilon).abs() <= 1e-12 * epsilon.max(1.0));
    let mut oracle = QldpOracle::new(copies.clone(), budget, rng)?;

    let povms = (0..d).map(|i| parity_bit_povm(d, i)).collect::<Result<Vec<_>>>()?;
    let per_bit = per_bit as usize;
    let mut estimates = Vec::with_capacity(d);
    for (i, m) in povms.iter().enumerate() {
        let registers: Vec<usize> = (i * per_bit..(i + 1) * per_bit).collect();
        estimates.push(estimate_expectation_via_qldp(&mut oracle, &registers, m, alpha)?);
    }
    let hypothesis = ParityConcept::new(estimates.iter().map(|&e| e > DECODE_THRESHOLD).collect())?;
    Ok(ParityQldpRun {
        hypothesis,
        estimates,
        alpha,
        copies_per_bit: per_bit as u64,
        copies_used: required,
        queries: required,
        budget,
        ledger: oracle.ledger().to_vec(),
    })
}

/// `Pr_{x∼X}[h(x) ≠ c(x)]`.
pub fn generalization_error(
    h: &ParityConcept,
    c: &ParityConcept,
    x: &ExampleDistribution,
) -> Result<f64> {
    if h.d() != c.d() || c.d() != x.d() {
        return Err(Error::validation("parity and distribution dimensions differ"));
    }
    Ok(x.weights()
        .iter()
        .enumerate()
        .filter(|(point, _)| h.evaluate(*point) != c.evaluate(*point))
        .fold(0.0, |acc, (_, w)| acc + w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{expectation, outcome_probabilities};
    use crate::oracles::{AdversarialExtreme, Exact};
    use crate::quantum::walsh_hadamard;

    fn example(s: &str) -> DensityMatrix {
        let c = ParityConcept::parse(s).unwrap();
        quantum_example_state(&c, &ExampleDistribution::uniform(c.d()).unwrap()).unwrap()
    }

    #[test]
    fn example_state_d1() {
        let rho = example("1");
        for i in 0..4 {
            for j in 0..4 {
                let corner = (i == 0 || i == 3) && (j == 0 || j == 3);
                let expected = if corner { 0.5 } else { 0.0 };
                assert!((rho.operator().get(i, j).re - expected).abs() < 1e-12);
            }
        }
        // c ≡ 0: (|0,0⟩ + |1,0⟩)/√2 has support on indices 0 and 2
        let rho = example("0");
        for (i, j) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
            assert!((rho.operator().get(i, j).re - 0.5).abs() < 1e-12);
        }
        assert!((rho.operator().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_mass_gives_basis_state() {
        let c = ParityConcept::parse("101").unwrap();
        let x0 = 0b111;
        let rho = quantum_example_state(&c, &ExampleDistribution::point_mass(3, x0).unwrap()).unwrap();
        let expected = DensityMatrix::basis_state(16, (x0 << 1) | usize::from(c.evaluate(x0))).unwrap();
        assert_eq!(rho.operator(), expected.operator());
    }

    #[test]
    fn basis_measurement_recovers_distribution() {
        let mut rng = Stream::from_seed(0);
        for d in 1..=6 {
            let raw: Vec<f64> = (0..1 << d).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
            let total: f64 = raw.iter().sum();
            let x = ExampleDistribution::new(d, raw.iter().map(|w| w / total).collect()).unwrap();
            let c = ParityConcept::from_index(d, rand::Rng::random_range(&mut rng, 0..1u64 << d)).unwrap();
            let rho = quantum_example_state(&c, &x).unwrap();
            let probs = outcome_probabilities(&Povm::computational_basis(rho.dim()).unwrap(), &rho).unwrap();
            for (point, &w) in x.weights().iter().enumerate() {
                let idx = (point << 1) | usize::from(c.evaluate(point));
                assert!((probs[idx] - w).abs() < 1e-12);
                assert!(probs[idx ^ 1].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bit_povm_expectations_d2() {
        let rho = example("10");
        assert!((expectation(&parity_bit_povm(2, 0).unwrap(), &rho).unwrap() - 0.5).abs() < 1e-12);
        assert!(expectation(&parity_bit_povm(2, 1).unwrap(), &rho).unwrap().abs() < 1e-12);
        let zero = example("00");
        for i in 0..2 {
            assert!(expectation(&parity_bit_povm(2, i).unwrap(), &zero).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn bit_povm_matches_dense_construction() {
        for d in 1..=3 {
            let h = walsh_hadamard(d + 1).unwrap();
            for i in 0..d {
                let dim = 1 << (d + 1);
                let diag: Vec<f64> = (0..dim)
                    .map(|c| if c & 1 == 1 && (c >> (d - i)) & 1 == 1 { 1.0 } else { 0.0 })
                    .collect();
                let dense = &(&h * &Operator::diagonal(&diag)) * &h;
                let fast = parity_bit_povm(d, i).unwrap();
                assert!(fast.effects()[1].max_abs_diff(&dense) < 1e-12);
                let checked = Povm::new(fast.effects().to_vec(), vec![0.0, 1.0]).unwrap();
                for s in checked.spectra() {
                    assert!(s.min.abs() < 1e-12 && (s.max - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bit_povm_errors() {
        assert!(matches!(parity_bit_povm(2, 2), Err(Error::Validation(_))));
        assert!(matches!(parity_bit_povm(12, 0), Err(Error::Capacity { .. })));
    }

    #[test]
    fn qsq_learner_examples() {
        let mut oracle = QsqOracle::new(example("1011"), Box::new(Exact), Stream::from_seed(0));
        assert_eq!(learn_parity_qsq(&mut oracle, 4, 0.2).unwrap().to_string(), "1011");
        assert_eq!(oracle.queries(), 4);
        let mut oracle = QsqOracle::new(example("0000"), Box::new(AdversarialExtreme), Stream::from_seed(1));
        assert_eq!(learn_parity_qsq(&mut oracle, 4, 0.2).unwrap().to_string(), "0000");
        assert!(matches!(learn_parity_qsq(&mut oracle, 4, 0.3), Err(Error::Validation(_))));
    }

    #[test]
    fn alpha_inversion() {
        let alpha = alpha_for_epsilon(1.0).unwrap();
        assert!((alpha - 0.364_175_327_148_743_7).abs() < 1e-15);
        assert!((triviality_bound(alpha, 2).unwrap() - 1.0).abs() < 1e-14);
        assert!(alpha_for_epsilon(0.0).is_err());
    }

    #[test]
    fn copies_fixture() {
        // ceil(1913.374...) computed at 50 digits
        assert_eq!(copies_per_bit(8, 1.0, 0.1, 0.2).unwrap(), 1914);
    }

    #[test]
    fn qldp_learner_small() {
        let s = ParityConcept::parse("101").unwrap();
        let rho = quantum_example_state(&s, &ExampleDistribution::uniform(3).unwrap()).unwrap();
        let per_bit = copies_per_bit(3, 1.0, 0.1, 0.2).unwrap() as usize;
        let copies = ProductState::copies(rho, 3 * per_bit + 5).unwrap();
        let run = learn_parity_qldp(&copies, 3, 1.0, 0.1, 0.2, Stream::from_seed(4)).unwrap();
        assert_eq!(run.hypothesis, s);
        let used = &run.ledger[..3 * per_bit];
        assert!(used.iter().all(|r| r.queries == 1 && (r.spent - 1.0).abs() < 1e-12));
        assert!(run.ledger[3 * per_bit..].iter().all(|r| r.queries == 0));

        let short = ProductState::copies(DensityMatrix::maximally_mixed(16), 10).unwrap();
        assert!(matches!(
            learn_parity_qldp(&short, 3, 1.0, 0.1, 0.2, Stream::from_seed(0)),
            Err(Error::InsufficientCopies { .. })
        ));
    }

    #[test]
    fn generalization_error_examples() {
        let c = ParityConcept::parse("0110").unwrap();
        let h = ParityConcept::parse("0111").unwrap();
        let uniform = ExampleDistribution::uniform(4).unwrap();
        assert_eq!(generalization_error(&c, &c, &uniform).unwrap(), 0.0);
        assert!((generalization_error(&h, &c, &uniform).unwrap() - 0.5).abs() < 1e-15);
        // x = 0110: h(x) = c(x) = 0
        let point = ExampleDistribution::point_mass(4, 0b0110).unwrap();
        assert_eq!(generalization_error(&h, &c, &point).unwrap(), 0.0);
        assert!(generalization_error(&h, &ParityConcept::parse("01").unwrap(), &uniform).is_err());
    }

    #[test]
    fn distinct_parities_disagree_on_half_the_cube() {
        // brute force over all pairs for d = 3
        let uniform = ExampleDistribution::uniform(3).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let (h, c) = (ParityConcept::from_index(3, a).unwrap(), ParityConcept::from_index(3, b).unwrap());
                let disagreements = (0..8).filter(|&x| h.evaluate(x) != c.evaluate(x)).count();
                let expected = if a == b { 0 } else { 4 };
                assert_eq!(disagreements, expected);
                assert!((generalization_error(&h, &c, &uniform).unwrap() - expected as f64 / 8.0).abs() < 1e-15);
            }
        }
    }
}

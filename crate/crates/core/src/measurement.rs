//! POVMs, the Born rule, and certification of triviality and differential
//! privacy.
//!
//! Probability ratios follow the inequality form of the privacy definitions:
//! `0/0` is satisfied and `x/0` with `x > 1e-12` is an infinite ratio.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quantum::{
    check_dim, ginibre, pure_state_density, DensityMatrix, Operator, ProductState, C64,
    DEFAULT_DIM_CAP, PSD_TOL_PER_DIM,
};
use crate::rng::Stream;

/// Allowed max-norm deviation of `Σ E_i` from the identity.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Probabilities at or below this are treated as zero in ratios.
pub const ZERO_PROB: f64 = 1e-12;

/// Slack on log-ratio comparisons against a privacy parameter.
pub const LOG_RATIO_SLACK: f64 = 1e-12;

/// Smallest and largest eigenvalue of an effect.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralBounds {
    pub min: f64,
    pub max: f64,
}

/// Content digest of a POVM (labels and effect entries).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PovmDigest([u8; 32]);

impl fmt::Display for PovmDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(&self.0[..8]))
    }
}

impl fmt::Debug for PovmDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PovmDigest({self})")
    }
}

/// A labeled positive operator-valued measure.
#[derive(Clone, Debug)]
pub struct Povm {
    effects: Vec<Operator>,
    labels: Vec<f64>,
    spectra: Vec<SpectralBounds>,
    digest: OnceLock<PovmDigest>,
}

impl Povm {
    /// Validates effects and labels. Each effect is Hermitized (defects up to
    /// 1e-9), diagonalized, and must be PSD within `1e-9 * dim`; the effects
    /// must sum to the identity within [`COMPLETENESS_TOL`].
    pub fn new(effects: Vec<Operator>, labels: Vec<f64>) -> Result<Self> {
        let effects = effects
            .iter()
            .map(Operator::hermitized)
            .collect::<Result<Vec<_>>>()?;
        let spectra = effects
            .iter()
            .map(|e| {
                let eig = e.hermitian_eigenvalues();
                SpectralBounds {
                    min: eig[0],
                    max: eig[eig.len() - 1],
                }
            })
            .collect();
        Self::assemble(effects, labels, spectra)
    }

    /// Labels default to `1..=k`.
    pub fn with_default_labels(effects: Vec<Operator>) -> Result<Self> {
        let labels = (1..=effects.len()).map(|i| i as f64).collect();
        Self::new(effects, labels)
    }

    /// For constructions whose spectra are known in closed form. Hermiticity
    /// and completeness are still checked; the eigendecomposition is not
    /// repeated.
    pub(crate) fn from_known_spectra(
        effects: Vec<Operator>,
        labels: Vec<f64>,
        spectra: Vec<SpectralBounds>,
    ) -> Result<Self> {
        let effects = effects
            .iter()
            .map(Operator::hermitized)
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(effects, labels, spectra)
    }

    fn assemble(
        effects: Vec<Operator>,
        labels: Vec<f64>,
        spectra: Vec<SpectralBounds>,
    ) -> Result<Self> {
        let k = effects.len();
        if k == 0 {
            return Err(Error::validation("a POVM needs at least one effect"));
        }
        if labels.len() != k || spectra.len() != k {
            return Err(Error::validation(format!(
                "{k} effects but {} labels",
                labels.len()
            )));
        }
        if labels.iter().any(|l| !l.is_finite()) {
            return Err(Error::validation("labels must be finite"));
        }
        let dim = effects[0].dim();
        if effects.iter().any(|e| e.dim() != dim) {
            return Err(Error::validation("effects have mismatched dimensions"));
        }
        let floor = -PSD_TOL_PER_DIM * dim as f64;
        if let Some((i, s)) = spectra.iter().enumerate().find(|(_, s)| s.min < floor) {
            return Err(Error::validation(format!(
                "effect {i} is not PSD (smallest eigenvalue {:e})",
                s.min
            )));
        }
        let mut total = Operator::zeros(dim);
        for e in &effects {
            total = &total + e;
        }
        let defect = total.max_abs_diff(&Operator::identity(dim));
        if defect > COMPLETENESS_TOL {
            return Err(Error::validation(format!(
                "effects do not sum to the identity (defect {defect:e})"
            )));
        }
        Ok(Self {
            effects,
            labels,
            spectra,
            digest: OnceLock::new(),
        })
    }

    /// Projective measurement in the computational basis, labels `0..dim`.
    pub fn computational_basis(dim: usize) -> Result<Self> {
        check_dim(dim as u128, DEFAULT_DIM_CAP)?;
        let effects = (0..dim)
            .map(|i| {
                let mut d = vec![0.0; dim];
                d[i] = 1.0;
                Operator::diagonal(&d)
            })
            .collect();
        let labels = (0..dim).map(|i| i as f64).collect();
        let spectra = (0..dim)
            .map(|_| SpectralBounds {
                min: if dim == 1 { 1.0 } else { 0.0 },
                max: 1.0,
            })
            .collect();
        Self::from_known_spectra(effects, labels, spectra)
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn num_outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn spectra(&self) -> &[SpectralBounds] {
        &self.spectra
    }

    /// Same effects, new labels.
    pub fn relabeled(&self, labels: Vec<f64>) -> Result<Self> {
        Self::assemble(self.effects.clone(), labels, self.spectra.clone())
    }

    /// Binary POVM `(I - E_w, E_w)` with labels `(0, 1)`; its expectation is `Tr(E_w ρ)`.
    pub fn indicator(&self, outcome: usize) -> Result<Self> {
        let effect = self
            .effects
            .get(outcome)
            .ok_or_else(|| Error::validation(format!("outcome {outcome} out of range")))?;
        let s = self.spectra[outcome];
        let complement = &Operator::identity(self.dim()) - effect;
        Self::from_known_spectra(
            vec![complement, effect.clone()],
            vec![0.0, 1.0],
            vec![
                SpectralBounds {
                    min: 1.0 - s.max,
                    max: 1.0 - s.min,
                },
                s,
            ],
        )
    }

    pub fn digest(&self) -> PovmDigest {
        *self.digest.get_or_init(|| {
            let mut hasher = Sha256::new();
            hasher.update((self.dim() as u64).to_le_bytes());
            hasher.update((self.labels.len() as u64).to_le_bytes());
            for l in &self.labels {
                hasher.update(l.to_bits().to_le_bytes());
            }
            for e in &self.effects {
                for z in e.matrix().iter() {
                    hasher.update(z.re.to_bits().to_le_bytes());
                    hasher.update(z.im.to_bits().to_le_bytes());
                }
            }
            PovmDigest(hasher.finalize().into())
        })
    }

    /// Triviality parameter over all density matrices, from the cached spectra.
    pub fn triviality_parameter(&self) -> f64 {
        self.spectra
            .iter()
            .map(|s| spectral_log_ratio(*s))
            .fold(0.0, f64::max)
    }
}

fn spectral_log_ratio(s: SpectralBounds) -> f64 {
    if s.max <= ZERO_PROB {
        0.0
    } else if s.min <= ZERO_PROB {
        f64::INFINITY
    } else {
        (s.max / s.min).ln()
    }
}

/// `ln(a/b)` with the zero-probability conventions.
pub(crate) fn log_ratio(a: f64, b: f64) -> f64 {
    if a <= ZERO_PROB {
        if b <= ZERO_PROB {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else if b <= ZERO_PROB {
        f64::INFINITY
    } else {
        (a / b).ln()
    }
}

fn check_dims(m: &Povm, rho: &DensityMatrix) -> Result<()> {
    if m.dim() != rho.dim() {
        return Err(Error::validation(format!(
            "POVM dimension {} does not match state dimension {}",
            m.dim(),
            rho.dim()
        )));
    }
    Ok(())
}

/// `p_i = Tr(E_i ρ)`, clamped to `[0, 1]`.
pub fn outcome_probabilities(m: &Povm, rho: &DensityMatrix) -> Result<Vec<f64>> {
    check_dims(m, rho)?;
    let mut probs: Vec<f64> = m
        .effects
        .iter()
        .map(|e| e.trace_product(rho.operator()).re.clamp(0.0, 1.0))
        .collect();
    let total: f64 = probs.iter().sum();
    if total > 0.0 && (total - 1.0).abs() <= 1e-9 {
        probs.iter_mut().for_each(|p| *p /= total);
    }
    Ok(probs)
}

/// Draws an index from a probability vector.
pub(crate) fn sample_index(probs: &[f64], rng: &mut Stream) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Born-rule sample: `(index, label)`.
pub fn sample_outcome(m: &Povm, rho: &DensityMatrix, rng: &mut Stream) -> Result<(usize, f64)> {
    let probs = outcome_probabilities(m, rho)?;
    let i = sample_index(&probs, rng);
    Ok((i, m.labels[i]))
}

/// `Σ_i label_i Tr(E_i ρ)`.
pub fn expectation(m: &Povm, rho: &DensityMatrix) -> Result<f64> {
    let probs = outcome_probabilities(m, rho)?;
    Ok(probs.iter().zip(&m.labels).map(|(p, l)| p * l).sum())
}

/// The pair of states realizing a triviality ratio.
#[derive(Clone, Debug)]
pub enum WitnessStates {
    /// Eigenvectors of the effect for its largest and smallest eigenvalue.
    Eigenvectors {
        high: DensityMatrix,
        low: DensityMatrix,
    },
    /// Indices into a caller-supplied state set.
    SetIndices { high: usize, low: usize },
}

#[derive(Clone, Debug)]
pub struct TrivialityWitness {
    pub outcome: usize,
    pub states: WitnessStates,
    /// `Pr[outcome | high] / Pr[outcome | low]`.
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct TrivialityCertificate {
    /// Smallest α for which the measurement is α-trivial; may be `+∞`.
    pub alpha_star: f64,
    pub witness: TrivialityWitness,
}

/// Smallest α such that `m` is α-trivial over all density matrices.
///
/// `Tr(E_i ρ)` ranges exactly over `[λ_min(E_i), λ_max(E_i)]`, so the answer is
/// `max_i ln(λ_max/λ_min)`, attained by the extremal eigenvectors.
pub fn minimal_triviality(m: &Povm) -> TrivialityCertificate {
    let (outcome, alpha_star) = m
        .spectra
        .iter()
        .map(|s| spectral_log_ratio(*s))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, a)| {
            if a > best.1 {
                (i, a)
            } else {
                best
            }
        });
    let eig = m.effects[outcome].hermitian_eigen();
    let low = &eig[0];
    let high = &eig[eig.len() - 1];
    let state = |v: &[C64]| pure_state_density(v).expect("eigenvectors are unit vectors");
    let high_state = state(&high.1);
    let low_state = state(&low.1);
    let effect = &m.effects[outcome];
    let p_high = effect.trace_product(high_state.operator()).re;
    let p_low = effect.trace_product(low_state.operator()).re;
    TrivialityCertificate {
        alpha_star,
        witness: TrivialityWitness {
            outcome,
            states: WitnessStates::Eigenvectors {
                high: high_state,
                low: low_state,
            },
            ratio: log_ratio(p_high, p_low).exp(),
        },
    }
}

/// Smallest α such that `m` is α-trivial on the finite set `states`.
pub fn minimal_triviality_on_set(
    m: &Povm,
    states: &[DensityMatrix],
) -> Result<TrivialityCertificate> {
    if states.is_empty() {
        return Err(Error::validation("state set is empty"));
    }
    let probs = states
        .iter()
        .map(|s| outcome_probabilities(m, s))
        .collect::<Result<Vec<_>>>()?;
    let mut best = (0.0f64, 0usize, 0usize, 0usize);
    for outcome in 0..m.num_outcomes() {
        for (a, pa) in probs.iter().enumerate() {
            for (b, pb) in probs.iter().enumerate() {
                let r = log_ratio(pa[outcome], pb[outcome]);
                if r > best.0 {
                    best = (r, outcome, a, b);
                }
            }
        }
    }
    let (alpha_star, outcome, high, low) = best;
    Ok(TrivialityCertificate {
        alpha_star,
        witness: TrivialityWitness {
            outcome,
            states: WitnessStates::SetIndices { high, low },
            ratio: alpha_star.exp(),
        },
    })
}

/// A neighbor pair and outcome violating the DP inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct DpViolation {
    /// Index of ρ (numerator) in the state list.
    pub rho: usize,
    /// Index of σ (denominator) in the state list.
    pub sigma: usize,
    pub outcome: usize,
    /// `Pr[M(ρ)=y] / Pr[M(σ)=y]`; `+∞` when σ never produces `y`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DpVerdict {
    Pass { neighbor_pairs: usize },
    Violation(DpViolation),
}

impl DpVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, DpVerdict::Pass { .. })
    }
}

/// Checks α-differential privacy of `m` on the listed product states.
///
/// Every ordered pair of listed states that differ in exactly one register is
/// checked on every outcome; the worst violation is reported.
pub fn check_dp(m: &Povm, states: &[ProductState], alpha: f64) -> Result<DpVerdict> {
    check_dp_with_cap(m, states, alpha, DEFAULT_DIM_CAP)
}

pub fn check_dp_with_cap(
    m: &Povm,
    states: &[ProductState],
    alpha: f64,
    cap: usize,
) -> Result<DpVerdict> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::validation("alpha must be nonnegative"));
    }
    let Some(first) = states.first() else {
        return Ok(DpVerdict::Pass { neighbor_pairs: 0 });
    };
    let layout = first.register_dims();
    if states.iter().any(|s| s.register_dims() != layout) {
        return Err(Error::validation("product states have mismatched registers"));
    }
    check_dim(first.total_dim().unwrap_or(u128::MAX), cap)?;
    let probs = states
        .iter()
        .map(|s| outcome_probabilities(m, &s.materialize_with_cap(cap)?))
        .collect::<Result<Vec<_>>>()?;

    let mut pairs = 0;
    let mut worst: Option<(f64, DpViolation)> = None;
    for (a, sa) in states.iter().enumerate() {
        for (b, sb) in states.iter().enumerate() {
            if a == b || sa.differing_registers(sb).len() != 1 {
                continue;
            }
            pairs += 1;
            for (y, (&pa, &pb)) in probs[a].iter().zip(&probs[b]).enumerate() {
                let r = log_ratio(pa, pb);
                if r > alpha + LOG_RATIO_SLACK && worst.as_ref().is_none_or(|w| r > w.0) {
                    worst = Some((
                        r,
                        DpViolation {
                            rho: a,
                            sigma: b,
                            outcome: y,
                            ratio: r.exp(),
                        },
                    ));
                }
            }
        }
    }
    Ok(match worst {
        Some((_, v)) => DpVerdict::Violation(v),
        None => DpVerdict::Pass {
            neighbor_pairs: pairs,
        },
    })
}

/// Condition number above which the normalizer of [`random_povm`] is redrawn.
const MAX_CONDITION: f64 = 1e12;

/// Random POVM: Ginibre-Wishart matrices `A_i` normalized by `S^{-1/2}`,
/// `S = Σ A_i`. Labels `1..=k`.
pub fn random_povm(dim: usize, k: usize, rng: &mut Stream) -> Result<Povm> {
    if dim == 0 || k == 0 {
        return Err(Error::validation("dimension and outcome count must be positive"));
    }
    check_dim(dim as u128, DEFAULT_DIM_CAP)?;
    loop {
        let parts: Vec<DMatrix<C64>> = (0..k)
            .map(|_| {
                let g = ginibre(dim, rng);
                &g * g.adjoint()
            })
            .collect();
        let sum = parts.iter().fold(DMatrix::zeros(dim, dim), |acc, a| acc + a);
        let eig = sum.symmetric_eigen();
        let (lo, hi) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo <= 0.0 || hi / lo > MAX_CONDITION {
            continue;
        }
        let inv_sqrt = DVector::from_iterator(
            dim,
            eig.eigenvalues.iter().map(|&v| C64::new(v.sqrt().recip(), 0.0)),
        );
        let vecs = &eig.eigenvectors;
        let normalizer = vecs * DMatrix::from_diagonal(&inv_sqrt) * vecs.adjoint();
        let effects = parts
            .iter()
            .map(|a| Operator::from_matrix(&normalizer * a * &normalizer).map(|e| e.hermitian_part()))
            .collect::<Result<Vec<_>>>()?;
        match Povm::with_default_labels(effects) {
            Ok(p) => return Ok(p),
            Err(Error::Validation(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{computational_basis_density, random_density_matrix};

    pub(crate) fn projective_pair() -> Povm {
        Povm::with_default_labels(vec![
            Operator::diagonal(&[1.0, 0.0]),
            Operator::diagonal(&[0.0, 1.0]),
        ])
        .unwrap()
    }

    fn soft_pair() -> Povm {
        Povm::with_default_labels(vec![
            Operator::diagonal(&[0.75, 0.25]),
            Operator::diagonal(&[0.25, 0.75]),
        ])
        .unwrap()
    }

    fn half_half() -> Povm {
        Povm::with_default_labels(vec![Operator::diagonal(&[0.5, 0.5]); 2]).unwrap()
    }

    fn ket(bits: &str) -> DensityMatrix {
        computational_basis_density(bits.len(), bits).unwrap()
    }

    #[test]
    fn povm_validation() {
        assert!(Povm::with_default_labels(vec![]).is_err());
        // incomplete
        assert!(Povm::with_default_labels(vec![Operator::diagonal(&[0.5, 0.5])]).is_err());
        // not PSD
        assert!(Povm::with_default_labels(vec![
            Operator::diagonal(&[1.5, 0.0]),
            Operator::diagonal(&[-0.5, 1.0]),
        ])
        .is_err());
        // label count
        assert!(Povm::new(vec![Operator::identity(2)], vec![1.0, 2.0]).is_err());
        assert!(Povm::new(vec![Operator::identity(2)], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn probabilities_examples() {
        assert_eq!(outcome_probabilities(&projective_pair(), &ket("0")).unwrap(), vec![1.0, 0.0]);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_eq!(outcome_probabilities(&projective_pair(), &mixed).unwrap(), vec![0.5, 0.5]);
        let p = outcome_probabilities(&soft_pair(), &ket("1")).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        assert!(outcome_probabilities(&soft_pair(), &ket("00")).is_err());
    }

    #[test]
    fn expectation_examples() {
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((expectation(&projective_pair(), &mixed).unwrap() - 1.5).abs() < 1e-15);
        assert!((expectation(&soft_pair(), &ket("1")).unwrap() - 1.75).abs() < 1e-15);
        let mut rng = Stream::from_seed(11);
        let m = random_povm(3, 4, &mut rng).unwrap().relabeled(vec![2.5; 4]).unwrap();
        let rho = random_density_matrix(3, &mut rng).unwrap();
        assert!((expectation(&m, &rho).unwrap() - 2.5).abs() < 1e-9);
    }

    #[test]
    fn sampling_examples() {
        let mut rng = Stream::from_seed(1);
        for _ in 0..1000 {
            assert_eq!(sample_outcome(&projective_pair(), &ket("0"), &mut rng).unwrap().0, 0);
        }
        let n = 100_000;
        let rho = random_density_matrix(2, &mut rng).unwrap();
        let zeros = (0..n)
            .filter(|_| sample_outcome(&half_half(), &rho, &mut rng).unwrap().0 == 0)
            .count();
        assert!((zeros as f64 / n as f64 - 0.5).abs() <= 0.01);
        let zeros = (0..n)
            .filter(|_| sample_outcome(&soft_pair(), &ket("0"), &mut rng).unwrap().0 == 0)
            .count();
        assert!((zeros as f64 / n as f64 - 0.75).abs() <= 0.01);
    }

    #[test]
    fn sampling_matches_born_rule_in_total_variation() {
        let mut rng = Stream::from_seed(21);
        for k in [2, 5, 8] {
            let m = random_povm(3, k, &mut rng).unwrap();
            let rho = random_density_matrix(3, &mut rng).unwrap();
            let p = outcome_probabilities(&m, &rho).unwrap();
            let n = 100_000;
            let mut counts = vec![0usize; k];
            for _ in 0..n {
                counts[sample_outcome(&m, &rho, &mut rng).unwrap().0] += 1;
            }
            let tv: f64 = counts
                .iter()
                .zip(&p)
                .map(|(&c, &pi)| (c as f64 / n as f64 - pi).abs())
                .sum::<f64>()
                / 2.0;
            assert!(tv <= 0.01, "k={k} tv={tv}");
        }
    }

    #[test]
    fn minimal_triviality_examples() {
        assert_eq!(minimal_triviality(&half_half()).alpha_star, 0.0);
        assert_eq!(minimal_triviality(&projective_pair()).alpha_star, f64::INFINITY);
        let cert = minimal_triviality(&soft_pair());
        assert!((cert.alpha_star - 3f64.ln()).abs() < 1e-12);
        assert!((cert.witness.ratio - 3.0).abs() < 3e-6);
    }

    #[test]
    fn witness_realizes_ratio() {
        let mut rng = Stream::from_seed(4);
        for _ in 0..20 {
            let m = random_povm(4, 3, &mut rng).unwrap();
            let cert = minimal_triviality(&m);
            let WitnessStates::Eigenvectors { high, low } = &cert.witness.states else {
                panic!("expected eigenvector witness");
            };
            let e = &m.effects()[cert.witness.outcome];
            let ratio = e.trace_product(high.operator()).re / e.trace_product(low.operator()).re;
            let expected = cert.alpha_star.exp();
            assert!(((ratio - expected) / expected).abs() <= 1e-6);
        }
    }

    #[test]
    fn triviality_bounds_random_pairs() {
        let mut rng = Stream::from_seed(8);
        let m = random_povm(3, 3, &mut rng).unwrap();
        let bound = minimal_triviality(&m).alpha_star.exp() * (1.0 + 1e-6);
        for _ in 0..1000 {
            let rho = random_density_matrix(3, &mut rng).unwrap();
            let sigma = random_density_matrix(3, &mut rng).unwrap();
            let p = outcome_probabilities(&m, &rho).unwrap();
            let q = outcome_probabilities(&m, &sigma).unwrap();
            for (a, b) in p.iter().zip(&q) {
                assert!(a / b <= bound);
            }
        }
    }

    #[test]
    fn set_triviality_examples() {
        let mut rng = Stream::from_seed(2);
        let rho = random_density_matrix(2, &mut rng).unwrap();
        assert_eq!(minimal_triviality_on_set(&soft_pair(), &[rho]).unwrap().alpha_star, 0.0);
        let set: Vec<_> = (0..4).map(|_| random_density_matrix(2, &mut rng).unwrap()).collect();
        assert_eq!(minimal_triviality_on_set(&half_half(), &set).unwrap().alpha_star, 0.0);
        let cert = minimal_triviality_on_set(&soft_pair(), &[ket("0"), ket("1")]).unwrap();
        assert!((cert.alpha_star - 3f64.ln()).abs() < 1e-12);
        assert!(matches!(
            minimal_triviality_on_set(&soft_pair(), &[ket("00")]),
            Err(Error::Validation(_))
        ));
        let cert = minimal_triviality_on_set(&projective_pair(), &[ket("0"), ket("1")]).unwrap();
        assert_eq!(cert.alpha_star, f64::INFINITY);
    }

    #[test]
    fn set_triviality_is_bounded_by_global() {
        let mut rng = Stream::from_seed(31);
        for _ in 0..30 {
            let m = random_povm(3, 3, &mut rng).unwrap();
            let set: Vec<_> = (0..5).map(|_| random_density_matrix(3, &mut rng).unwrap()).collect();
            let local = minimal_triviality_on_set(&m, &set).unwrap().alpha_star;
            assert!(local <= minimal_triviality(&m).alpha_star + 1e-9);
        }
    }

    fn two_register_example() -> (Povm, Vec<ProductState>) {
        let t = soft_pair();
        let effects = t
            .effects()
            .iter()
            .flat_map(|a| t.effects().iter().map(move |b| a.tensor(b).unwrap()))
            .collect();
        let m = Povm::with_default_labels(effects).unwrap();
        let states = ["00", "01", "10", "11"]
            .iter()
            .map(|bits| {
                ProductState::new(bits.chars().map(|c| ket(&c.to_string())).collect()).unwrap()
            })
            .collect();
        (m, states)
    }

    #[test]
    fn dp_tensor_example() {
        let (m, states) = two_register_example();
        assert!(check_dp(&m, &states, 3f64.ln()).unwrap().passed());
        let DpVerdict::Violation(v) = check_dp(&m, &states, 3f64.ln() - 0.01).unwrap() else {
            panic!("expected violation");
        };
        assert!((v.ratio - 3.0).abs() < 1e-9);
        assert!(check_dp(&m, &states, 1e6).unwrap().passed());
    }

    #[test]
    fn dp_without_neighbors_is_vacuous() {
        let (m, states) = two_register_example();
        let same = vec![states[1].clone(), states[1].clone()];
        assert_eq!(check_dp(&m, &same, 0.0).unwrap(), DpVerdict::Pass { neighbor_pairs: 0 });
        // 00 and 11 differ in two registers: not neighbors
        let far = vec![states[0].clone(), states[3].clone()];
        assert!(check_dp(&m, &far, 0.0).unwrap().passed());
    }

    #[test]
    fn dp_errors() {
        let (m, states) = two_register_example();
        let single = ProductState::new(vec![ket("00")]).unwrap();
        assert!(matches!(
            check_dp(&m, &[states[0].clone(), single], 1.0),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            check_dp_with_cap(&m, &states, 1.0, 2),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn random_povm_examples() {
        let mut rng = Stream::from_seed(13);
        let single = random_povm(3, 1, &mut rng).unwrap();
        assert!(single.effects()[0].max_abs_diff(&Operator::identity(3)) <= 1e-9);
        for (dim, k) in [(2, 2), (4, 3), (8, 5)] {
            let m = random_povm(dim, k, &mut rng).unwrap();
            let total = m.effects().iter().fold(Operator::zeros(dim), |acc, e| &acc + e);
            assert!(total.max_abs_diff(&Operator::identity(dim)) <= 1e-9);
        }
        let a = random_povm(2, 3, &mut Stream::from_seed(42)).unwrap();
        let b = random_povm(2, 3, &mut Stream::from_seed(42)).unwrap();
        assert_eq!(a.effects(), b.effects());
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn indicator_spectra_match_eigendecomposition() {
        let mut rng = Stream::from_seed(17);
        let m = random_povm(3, 3, &mut rng).unwrap();
        for w in 0..3 {
            let fast = m.indicator(w).unwrap();
            let slow = Povm::new(fast.effects().to_vec(), vec![0.0, 1.0]).unwrap();
            for (a, b) in fast.spectra().iter().zip(slow.spectra()) {
                assert!((a.min - b.min).abs() < 1e-12 && (a.max - b.max).abs() < 1e-12);
            }
        }
    }
}

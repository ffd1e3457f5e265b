use std::fmt::Debug;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// How a QSQ oracle perturbs an exact expectation within its tolerance.
pub trait NoiseModel: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// An offset in `[-tau, tau]`. Must not consume randomness when `tau == 0`.
    fn offset(&self, tau: f64, rng: &mut Stream) -> f64;
}

/// Returns the exact expectation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Exact;

impl NoiseModel for Exact {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn offset(&self, _tau: f64, _rng: &mut Stream) -> f64 {
        0.0
    }
}

/// Uniform offset on `(-tau, tau)`.
#[derive(Debug, Default, Clone, Copy)]
pub struct Uniform;

impl NoiseModel for Uniform {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn offset(&self, tau: f64, rng: &mut Stream) -> f64 {
        if tau == 0.0 {
            return 0.0;
        }
        rng.random_range(-tau..tau)
    }
}

/// `+tau` or `-tau` with a fair coin: the worst case the tolerance allows.
#[derive(Debug, Default, Clone, Copy)]
pub struct AdversarialExtreme;

impl NoiseModel for AdversarialExtreme {
    fn name(&self) -> &'static str {
        "adversarial_extreme"
    }

    fn offset(&self, tau: f64, rng: &mut Stream) -> f64 {
        if tau == 0.0 {
            return 0.0;
        }
        if rng.random::<bool>() {
            tau
        } else {
            -tau
        }
    }
}

type Constructor = fn() -> Box<dyn NoiseModel>;

const REGISTRY: &[(&str, Constructor)] = &[
    ("exact", || Box::new(Exact)),
    ("uniform", || Box::new(Uniform)),
    ("adversarial_extreme", || Box::new(AdversarialExtreme)),
];

/// Looks up a noise model by name.
pub fn noise_model(name: &str) -> Result<Box<dyn NoiseModel>> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, make)| make())
        .ok_or_else(|| {
            Error::validation(format!(
                "unknown noise mode {name:?} (expected one of {})",
                noise_model_names().join(", ")
            ))
        })
}

pub fn noise_model_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|(n, _)| *n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_round_trip() {
        for name in noise_model_names() {
            assert_eq!(noise_model(name).unwrap().name(), name);
        }
        assert!(noise_model("gaussian").is_err());
    }

    #[test]
    fn offsets_stay_in_band() {
        let mut rng = Stream::from_seed(0);
        for name in noise_model_names() {
            let model = noise_model(name).unwrap();
            for _ in 0..1000 {
                assert!(model.offset(0.1, &mut rng).abs() <= 0.1);
            }
            let before = rng.clone().random::<u64>();
            assert_eq!(model.offset(0.0, &mut rng), 0.0);
            assert_eq!(rng.clone().random::<u64>(), before);
        }
        for _ in 0..100 {
            assert_eq!(AdversarialExtreme.offset(0.1, &mut rng).abs(), 0.1);
        }
    }
}

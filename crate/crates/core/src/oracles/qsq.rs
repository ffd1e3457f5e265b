use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::measurement::{expectation, Povm, PovmDigest};
use crate::quantum::DensityMatrix;
use crate::rng::Stream;

use super::NoiseModel;

#[derive(Clone, Debug, PartialEq)]
pub struct QsqLogEntry {
    pub povm: PovmDigest,
    pub tolerance: f64,
    pub answer: f64,
}

/// Answers `E[M(ρ)]` up to an additive tolerance for a fixed state `ρ`.
#[derive(Debug)]
pub struct QsqOracle {
    state: DensityMatrix,
    noise: Box<dyn NoiseModel>,
    rng: Stream,
    log: Vec<QsqLogEntry>,
    exact_cache: HashMap<PovmDigest, f64>,
}

impl QsqOracle {
    pub fn new(state: DensityMatrix, noise: Box<dyn NoiseModel>, rng: Stream) -> Self {
        Self {
            state,
            noise,
            rng,
            log: Vec::new(),
            exact_cache: HashMap::new(),
        }
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn noise_mode(&self) -> &'static str {
        self.noise.name()
    }

    pub fn log(&self) -> &[QsqLogEntry] {
        &self.log
    }

    pub fn queries(&self) -> usize {
        self.log.len()
    }

    /// Returns a value within `tau` of `expectation(m, ρ)` and logs the query.
    pub fn query(&mut self, m: &Povm, tau: f64) -> Result<f64> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::validation(format!(
                "tolerance must be finite and nonnegative, got {tau}"
            )));
        }
        let digest = m.digest();
        let exact = match self.exact_cache.get(&digest) {
            Some(&v) => v,
            None => {
                let v = expectation(m, &self.state)?;
                self.exact_cache.insert(digest, v);
                v
            }
        };
        let mut answer = exact + self.noise.offset(tau, &mut self.rng);
        // rounding in the addition can overshoot the tolerance by an ulp
        while (answer - exact).abs() > tau {
            answer = if answer > exact {
                answer.next_down()
            } else {
                answer.next_up()
            };
        }
        self.log.push(QsqLogEntry {
            povm: digest,
            tolerance: tau,
            answer,
        });
        Ok(answer)
    }
}

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{outcome_probabilities, sample_index, Povm, PovmDigest};
use crate::quantum::{DensityMatrix, ProductState};
use crate::rng::Stream;

/// Slack on the declared-versus-verified triviality comparison.
pub const TRIVIALITY_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QldpAnswer {
    pub index: usize,
    pub label: f64,
}

/// Privacy cost charged to one register.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RegisterLedger {
    pub spent: f64,
    pub queries: u32,
}

/// Per-register measurement oracle over a product state.
///
/// Every query must carry a measurement whose triviality (verified here, over
/// all density matrices) is at most the declared cost, and the declared costs
/// on each register must sum to at most the budget. Measured registers are
/// never collapsed: every query sees a fresh copy of its register.
#[derive(Debug)]
pub struct QldpOracle {
    registers: ProductState,
    budget: f64,
    ledger: Vec<RegisterLedger>,
    rng: Stream,
    // registers sharing one `Arc` share outcome probabilities
    class_of: Vec<usize>,
    classes: Vec<Arc<DensityMatrix>>,
    probabilities: HashMap<(usize, PovmDigest), Vec<f64>>,
}

impl QldpOracle {
    pub fn new(registers: ProductState, budget: f64, rng: Stream) -> Result<Self> {
        if !(budget >= 0.0 && budget.is_finite()) {
            return Err(Error::validation(format!(
                "budget must be finite and nonnegative, got {budget}"
            )));
        }
        let mut index: HashMap<*const DensityMatrix, usize> = HashMap::new();
        let mut classes = Vec::new();
        let class_of = (0..registers.len())
            .map(|j| {
                let shared = registers.shared_register(j);
                *index.entry(Arc::as_ptr(shared)).or_insert_with(|| {
                    classes.push(Arc::clone(shared));
                    classes.len() - 1
                })
            })
            .collect();
        Ok(Self {
            ledger: vec![RegisterLedger::default(); registers.len()],
            registers,
            budget,
            rng,
            class_of,
            classes,
            probabilities: HashMap::new(),
        })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn num_registers(&self) -> usize {
        self.registers.len()
    }

    pub fn ledger(&self) -> &[RegisterLedger] {
        &self.ledger
    }

    pub fn remaining_budget(&self, j: usize) -> Result<f64> {
        self.check_register(j)?;
        Ok(self.budget - self.ledger[j].spent)
    }

    fn check_register(&self, j: usize) -> Result<()> {
        if j >= self.registers.len() {
            return Err(Error::validation(format!(
                "register {j} out of range ({} registers)",
                self.registers.len()
            )));
        }
        Ok(())
    }

    /// Measures register `j` with `m`, charging `declared_alpha`.
    ///
    /// All checks run before any randomness is drawn, so a rejected query
    /// leaves the ledger and the sampling stream untouched.
    pub fn query(&mut self, j: usize, m: &Povm, declared_alpha: f64) -> Result<QldpAnswer> {
        self.check_register(j)?;
        let dim = self.registers.register(j).map(DensityMatrix::dim).unwrap_or(0);
        if m.dim() != dim {
            return Err(Error::validation(format!(
                "POVM dimension {} does not match register {j} dimension {dim}",
                m.dim()
            )));
        }
        if !(declared_alpha >= 0.0 && declared_alpha.is_finite()) {
            return Err(Error::validation(format!(
                "declared alpha must be finite and nonnegative, got {declared_alpha}"
            )));
        }
        let required = m.triviality_parameter();
        if required > declared_alpha + TRIVIALITY_SLACK {
            return Err(Error::NotTrivialEnough {
                required,
                declared: declared_alpha,
            });
        }
        let spent = self.ledger[j].spent;
        if spent + declared_alpha > self.budget {
            return Err(Error::BudgetExceeded {
                register: j,
                spent,
                requested: declared_alpha,
                budget: self.budget,
            });
        }

        let class = self.class_of[j];
        let key = (class, m.digest());
        if !self.probabilities.contains_key(&key) {
            let probs = outcome_probabilities(m, &self.classes[class])?;
            self.probabilities.insert(key, probs);
        }
        let index = sample_index(&self.probabilities[&key], &mut self.rng);

        let entry = &mut self.ledger[j];
        entry.spent += declared_alpha;
        entry.queries += 1;
        Ok(QldpAnswer {
            index,
            label: m.labels()[index],
        })
    }
}

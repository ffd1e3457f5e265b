use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::measurement::Povm;
use crate::oracles::TRIVIALITY_SLACK;

#[derive(Clone, Debug)]
pub struct QsqQuery {
    pub povm: Povm,
    pub tau: f64,
}

/// Statistical queries fixed before any answer is seen.
#[derive(Clone, Debug)]
pub struct QsqQueryPlan {
    queries: Vec<QsqQuery>,
}

impl QsqQueryPlan {
    pub fn new(queries: Vec<QsqQuery>) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::validation("query plan is empty"));
        }
        if let Some((i, q)) = queries
            .iter()
            .enumerate()
            .find(|(_, q)| !(q.tau > 0.0 && q.tau.is_finite()))
        {
            return Err(Error::validation(format!(
                "query {i} has tolerance {}, expected a positive value",
                q.tau
            )));
        }
        Ok(Self { queries })
    }

    pub fn queries(&self) -> &[QsqQuery] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Always true: adaptive plans are not representable.
    pub fn is_nonadaptive(&self) -> bool {
        true
    }

    pub fn max_outcomes(&self) -> usize {
        self.queries.iter().map(|q| q.povm.num_outcomes()).max().unwrap_or(1)
    }
}

#[derive(Clone, Debug)]
pub struct QldpQuery {
    pub register: usize,
    pub povm: Povm,
    pub epsilon: f64,
}

/// Local-privacy queries fixed before any answer is seen, with their budget.
#[derive(Clone, Debug)]
pub struct QldpQueryPlan {
    budget: f64,
    queries: Vec<QldpQuery>,
}

impl QldpQueryPlan {
    /// Checks each declared cost against the measurement's triviality and the
    /// per-register sums against `budget`.
    pub fn new(budget: f64, queries: Vec<QldpQuery>) -> Result<Self> {
        if !(budget >= 0.0 && budget.is_finite()) {
            return Err(Error::validation(format!("invalid budget {budget}")));
        }
        if queries.is_empty() {
            return Err(Error::validation("query plan is empty"));
        }
        let mut per_register: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, q) in queries.iter().enumerate() {
            if !(q.epsilon >= 0.0 && q.epsilon.is_finite()) {
                return Err(Error::validation(format!(
                    "query {i} declares invalid epsilon {}",
                    q.epsilon
                )));
            }
            let required = q.povm.triviality_parameter();
            if required > q.epsilon + TRIVIALITY_SLACK {
                return Err(Error::NotTrivialEnough {
                    required,
                    declared: q.epsilon,
                });
            }
            *per_register.entry(q.register).or_default() += q.epsilon;
        }
        if let Some((j, total)) = per_register.iter().find(|(_, &t)| t > budget) {
            return Err(Error::BudgetExceeded {
                register: *j,
                spent: 0.0,
                requested: *total,
                budget,
            });
        }
        Ok(Self { budget, queries })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn queries(&self) -> &[QldpQuery] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Always true: interactive plans are not representable.
    pub fn is_noninteractive(&self) -> bool {
        true
    }
}

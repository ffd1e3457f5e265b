//! Simulation and verification toolkit for quantum local differential privacy.
//!
//! The crate is organized bottom-up:
//!
//! * [`quantum`]: dense complex operators, density matrices, product states.
//! * [`measurement`]: POVMs, the Born rule, triviality and DP certification.
//! * [`oracles`]: the statistical-query oracle and the budget-enforcing local
//!   privacy oracle.
//! * [`protocols`]: simulating statistical queries with private measurements
//!   (privatize and debias) and private measurements with statistical queries
//!   (rejection sampling).
//! * [`learning`]: parity learning from quantum examples, in both models.
//! * [`harness`]: seeded experiments, reports and CSV output.

pub mod error;
pub mod harness;
pub mod io;
pub mod learning;
pub mod measurement;
pub mod oracles;
pub mod protocols;
pub mod quantum;
pub mod rng;

pub use error::{Error, Result};
pub use measurement::Povm;
pub use quantum::{DensityMatrix, Operator, ProductState};
pub use rng::Stream;

/// Toolkit version recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! The statistical-query oracle and the local-privacy oracle.

mod noise;
mod qldp;
mod qsq;

pub use noise::{noise_model, noise_model_names, AdversarialExtreme, Exact, NoiseModel, Uniform};
pub use qldp::{QldpAnswer, QldpOracle, RegisterLedger, TRIVIALITY_SLACK};
pub use qsq::{QsqLogEntry, QsqOracle};

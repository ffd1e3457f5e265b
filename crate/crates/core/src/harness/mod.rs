//! Seeded experiments reproducing the toolkit's guarantees at desk scale.
//!
//! Each experiment kind implements [`Experiment`] and is registered by name
//! in [`registry`]. A run derives one stream per trial from the master seed,
//! so per-trial records do not depend on the degree of parallelism.

mod config;
mod experiments;
mod report;

pub use config::{ConfigOverrides, ExperimentConfig, ParamValue, Params};
pub use experiments::{registry, Check, Evaluation, Experiment, Trials};
pub use report::{emit_csv, Report, TrialRecord};

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Looks up an experiment kind by name.
pub fn experiment(kind: &str) -> Result<&'static dyn Experiment> {
    registry()
        .iter()
        .copied()
        .find(|e| e.kind() == kind)
        .ok_or_else(|| {
            let known: Vec<_> = registry().iter().map(|e| e.kind()).collect();
            Error::validation(format!(
                "unknown experiment kind {kind:?} (expected one of {})",
                known.join(", ")
            ))
        })
}

/// Runs all trials of `config` and evaluates the pass/fail thresholds.
///
/// Configuration errors are returned before any trial runs. A trial that
/// fails (or panics) is recorded with its error and the batch continues.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    if config.trials == 0 {
        return Err(Error::validation("trials must be positive"));
    }
    if config.parallelism == 0 {
        return Err(Error::validation("parallelism must be positive"));
    }
    let exp = experiment(&config.kind)?;
    let params = config.resolved_parameters(exp)?;
    let trials = exp.prepare(&params)?;
    let root = Stream::from_seed(config.master_seed);

    let started = Instant::now();
    let run = |trial: u64| -> TrialRecord {
        let rng = root.split(trial);
        let outcome = catch_unwind(AssertUnwindSafe(|| trials.run_trial(trial, rng)))
            .unwrap_or_else(|panic| {
                let msg = panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "trial panicked".into());
                Err(Error::validation(msg))
            });
        match outcome {
            Ok(values) => TrialRecord {
                trial,
                values,
                error: None,
            },
            Err(e) => TrialRecord {
                trial,
                values: Vec::new(),
                error: Some(e.to_string()),
            },
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::validation(format!("cannot start worker pool: {e}")))?;
    let mut records: Vec<TrialRecord> =
        pool.install(|| (0..config.trials as u64).into_par_iter().map(run).collect());
    records.sort_by_key(|r| r.trial);

    let evaluation = trials.evaluate(&records);
    let mut echo = config.clone();
    echo.parameters = params;
    Ok(Report {
        toolkit_version: crate::VERSION.to_string(),
        config: echo,
        columns: trials.columns().iter().map(|c| c.to_string()).collect(),
        records,
        aggregates: evaluation.aggregates,
        checks: evaluation.checks,
        pass: evaluation.pass,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Experiment;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
    Numbers(Vec<f64>),
}

pub type Params = BTreeMap<String, ParamValue>;

/// One experiment run: kind, parameters, seed and trial layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: String,
    #[serde(default)]
    pub parameters: Params,
    pub master_seed: u64,
    pub trials: usize,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_parallelism() -> usize {
    1
}

/// Config file as written on disk; every field but `kind` may come from flags.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    kind: String,
    #[serde(default)]
    parameters: Params,
    master_seed: Option<u64>,
    trials: Option<usize>,
    parallelism: Option<usize>,
}

/// Command-line values; each one wins over the config file.
#[derive(Clone, Debug, Default)]
pub struct ConfigOverrides {
    pub master_seed: Option<u64>,
    pub trials: Option<usize>,
    pub parallelism: Option<usize>,
    /// Used only when neither the flag nor the file sets a seed.
    pub default_seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(kind: &str, master_seed: u64, trials: usize) -> Self {
        Self {
            kind: kind.to_string(),
            parameters: Params::new(),
            master_seed,
            trials,
            parallelism: 1,
        }
    }

    pub fn with_param(mut self, key: &str, value: ParamValue) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism;
        self
    }

    /// Parses a TOML config and applies overrides.
    pub fn from_toml(text: &str, overrides: &ConfigOverrides) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::validation(format!("config: {e}")))?;
        let master_seed = overrides
            .master_seed
            .or(file.master_seed)
            .or(overrides.default_seed)
            .ok_or_else(|| Error::validation("no master seed given (config, --seed or QLDP_SEED)"))?;
        let trials = overrides
            .trials
            .or(file.trials)
            .ok_or_else(|| Error::validation("no trial count given (config or --trials)"))?;
        Ok(Self {
            kind: file.kind,
            parameters: file.parameters,
            master_seed,
            trials,
            parallelism: overrides.parallelism.or(file.parallelism).unwrap_or(1),
        })
    }

    pub fn load(path: &Path, overrides: &ConfigOverrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, overrides).map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Experiment defaults overlaid with the configured parameters; unknown
    /// keys and type mismatches are rejected.
    pub fn resolved_parameters(&self, exp: &dyn Experiment) -> Result<Params> {
        let mut params: Params = exp
            .defaults()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        for (key, value) in &self.parameters {
            let default = params.get(key).ok_or_else(|| {
                Error::validation(format!(
                    "unknown parameter {key:?} for experiment {:?}",
                    exp.kind()
                ))
            })?;
            if std::mem::discriminant(default) != std::mem::discriminant(value) {
                return Err(Error::validation(format!(
                    "parameter {key:?} has the wrong type (expected {default:?}-like value)"
                )));
            }
            params.insert(key.clone(), value.clone());
        }
        Ok(params)
    }
}

pub(crate) fn number(params: &Params, key: &str) -> Result<f64> {
    match params.get(key) {
        Some(ParamValue::Number(v)) => Ok(*v),
        _ => Err(Error::validation(format!("parameter {key:?} must be a number"))),
    }
}

pub(crate) fn count(params: &Params, key: &str) -> Result<usize> {
    let v = number(params, key)?;
    if v < 1.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(Error::validation(format!(
            "parameter {key:?} must be a positive integer, got {v}"
        )));
    }
    Ok(v as usize)
}

pub(crate) fn text<'a>(params: &'a Params, key: &str) -> Result<&'a str> {
    match params.get(key) {
        Some(ParamValue::Text(v)) => Ok(v),
        _ => Err(Error::validation(format!("parameter {key:?} must be a string"))),
    }
}

pub(crate) fn numbers<'a>(params: &'a Params, key: &str) -> Result<&'a [f64]> {
    match params.get(key) {
        Some(ParamValue::Numbers(v)) => Ok(v),
        _ => Err(Error::validation(format!("parameter {key:?} must be a list of numbers"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_env_is_last() {
        let text = "kind = \"triviality-bound\"\nmaster_seed = 3\ntrials = 10\n";
        let cfg = ExperimentConfig::from_toml(text, &ConfigOverrides::default()).unwrap();
        assert_eq!((cfg.master_seed, cfg.trials, cfg.parallelism), (3, 10, 1));
        let over = ConfigOverrides {
            master_seed: Some(9),
            trials: Some(4),
            parallelism: Some(2),
            default_seed: Some(100),
        };
        let cfg = ExperimentConfig::from_toml(text, &over).unwrap();
        assert_eq!((cfg.master_seed, cfg.trials, cfg.parallelism), (9, 4, 2));
        let no_seed = "kind = \"triviality-bound\"\ntrials = 1\n";
        let env_only = ConfigOverrides { default_seed: Some(100), ..Default::default() };
        assert_eq!(ExperimentConfig::from_toml(no_seed, &env_only).unwrap().master_seed, 100);
        assert!(ExperimentConfig::from_toml(no_seed, &ConfigOverrides::default()).is_err());
    }

    #[test]
    fn unknown_top_level_keys_are_rejected() {
        let text = "kind = \"x\"\nmaster_seed = 1\ntrials = 1\nbogus = 2\n";
        assert!(ExperimentConfig::from_toml(text, &ConfigOverrides::default()).is_err());
    }

    #[test]
    fn parameter_values_parse() {
        let text = "kind = \"x\"\nmaster_seed = 1\ntrials = 1\n[parameters]\nd = 8\nmode = \"qldp\"\nalphas = [0.1, 0.5]\n";
        let cfg = ExperimentConfig::from_toml(text, &ConfigOverrides::default()).unwrap();
        assert_eq!(cfg.parameters["d"], ParamValue::Number(8.0));
        assert_eq!(cfg.parameters["mode"], ParamValue::Text("qldp".into()));
        assert_eq!(cfg.parameters["alphas"], ParamValue::Numbers(vec![0.1, 0.5]));
    }
}

//! JSON file formats.
//!
//! * matrix: `{"dim": d, "entries": [[re, im], …]}`, row-major, `d²` entries
//! * POVM: `{"dim": d, "labels": [..], "effects": [matrix, …]}`
//! * product state: `{"registers": [matrix, …]}`, or a bare matrix for one register
//! * query plan: `{"queries": [{"povm": P, "tau": t} | {"register": j, "povm": P, "epsilon": e}]}`
//!   where `P` is an inline POVM or a path relative to the plan file
//!
//! Parsing is strict: unknown fields, wrong entry counts and non-finite
//! values are validation errors.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::Povm;
use crate::protocols::{QldpQuery, QldpQueryPlan, QsqQuery, QsqQueryPlan};
use crate::quantum::{DensityMatrix, Operator, ProductState, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_operator(op: &Operator) -> Self {
        Self {
            dim: op.dim(),
            entries: op.row_major_entries().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_operator(&self) -> Result<Operator> {
        Operator::from_row_major(
            self.dim,
            self.entries.iter().map(|[re, im]| C64::new(*re, *im)).collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmFile {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<f64>>,
    pub effects: Vec<MatrixFile>,
}

impl PovmFile {
    pub fn from_povm(m: &Povm) -> Self {
        Self {
            dim: m.dim(),
            labels: Some(m.labels().to_vec()),
            effects: m.effects().iter().map(MatrixFile::from_operator).collect(),
        }
    }

    pub fn to_povm(&self) -> Result<Povm> {
        let effects = self
            .effects
            .iter()
            .map(MatrixFile::to_operator)
            .collect::<Result<Vec<_>>>()?;
        if effects.iter().any(|e| e.dim() != self.dim) {
            return Err(Error::validation(format!(
                "POVM declares dim {} but an effect has a different dimension",
                self.dim
            )));
        }
        match &self.labels {
            Some(labels) => Povm::new(effects, labels.clone()),
            None => Povm::with_default_labels(effects),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProductStateFile {
    Registers(RegistersFile),
    Single(MatrixFile),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistersFile {
    pub registers: Vec<MatrixFile>,
}

impl ProductStateFile {
    pub fn to_product_state(&self) -> Result<ProductState> {
        let matrices: Vec<&MatrixFile> = match self {
            ProductStateFile::Registers(r) => r.registers.iter().collect(),
            ProductStateFile::Single(m) => vec![m],
        };
        let states = matrices
            .into_iter()
            .map(|m| DensityMatrix::new(m.to_operator()?))
            .collect::<Result<Vec<_>>>()?;
        ProductState::new(states)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum PovmRef {
    Path(String),
    Inline(PovmFile),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum PlanEntry {
    Qsq(QsqEntry),
    Qldp(QldpEntry),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QsqEntry {
    povm: PovmRef,
    tau: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QldpEntry {
    register: usize,
    povm: PovmRef,
    epsilon: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    queries: Vec<PlanEntry>,
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::validation(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
    fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

fn with_context<T>(path: &Path, result: Result<T>) -> Result<T> {
    result.map_err(|e| match e {
        Error::Validation(msg) if !msg.starts_with(&path.display().to_string()) => {
            Error::validation(format!("{}: {msg}", path.display()))
        }
        other => other,
    })
}

pub fn read_operator(path: &Path) -> Result<Operator> {
    with_context(path, read_json::<MatrixFile>(path)?.to_operator())
}

pub fn read_density_matrix(path: &Path) -> Result<DensityMatrix> {
    with_context(path, read_operator(path).and_then(DensityMatrix::new))
}

pub fn read_povm(path: &Path) -> Result<Povm> {
    with_context(path, read_json::<PovmFile>(path)?.to_povm())
}

pub fn read_product_state(path: &Path) -> Result<ProductState> {
    with_context(path, read_json::<ProductStateFile>(path)?.to_product_state())
}

fn resolve_povm(base: &Path, povm: &PovmRef) -> Result<Povm> {
    match povm {
        PovmRef::Inline(file) => file.to_povm(),
        PovmRef::Path(p) => {
            let path: PathBuf = base.join(p);
            read_povm(&path)
        }
    }
}

fn read_plan(path: &Path) -> Result<(PathBuf, PlanFile)> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((base, read_json(path)?))
}

/// Reads a plan of statistical queries (`{"povm", "tau"}` entries).
pub fn read_qsq_plan(path: &Path) -> Result<QsqQueryPlan> {
    let (base, plan) = read_plan(path)?;
    let queries = plan
        .queries
        .iter()
        .enumerate()
        .map(|(i, entry)| match entry {
            PlanEntry::Qsq(q) => Ok(QsqQuery {
                povm: resolve_povm(&base, &q.povm)?,
                tau: q.tau,
            }),
            PlanEntry::Qldp(_) => Err(Error::validation(format!(
                "query {i} is a local-privacy query; expected {{\"povm\", \"tau\"}}"
            ))),
        })
        .collect::<Result<Vec<_>>>();
    with_context(path, queries.and_then(QsqQueryPlan::new))
}

/// Reads a plan of local-privacy queries (`{"register", "povm", "epsilon"}`
/// entries) with per-register budget `budget`.
pub fn read_qldp_plan(path: &Path, budget: f64) -> Result<QldpQueryPlan> {
    let (base, plan) = read_plan(path)?;
    let queries = plan
        .queries
        .iter()
        .enumerate()
        .map(|(i, entry)| match entry {
            PlanEntry::Qldp(q) => Ok(QldpQuery {
                register: q.register,
                povm: resolve_povm(&base, &q.povm)?,
                epsilon: q.epsilon,
            }),
            PlanEntry::Qsq(_) => Err(Error::validation(format!(
                "query {i} is a statistical query; expected {{\"register\", \"povm\", \"epsilon\"}}"
            ))),
        })
        .collect::<Result<Vec<_>>>();
    with_context(path, queries.and_then(|q| QldpQueryPlan::new(budget, q)))
}

//! Dense complex operators and quantum states.
//!
//! Everything here is an immutable value after construction. States are
//! validated once, when built, so downstream code can rely on the
//! invariants without re-checking them.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::Stream;

pub type C64 = Complex<f64>;

/// Default cap on any materialized matrix dimension.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// Largest tolerated Hermiticity defect; smaller defects are symmetrized away.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Allowed deviation of a density matrix trace from 1.
pub const TRACE_TOL: f64 = 1e-9;

/// Allowed negative eigenvalue, per unit of dimension.
pub const PSD_TOL_PER_DIM: f64 = 1e-9;

/// Max-norm distance beyond which two registers count as different states.
pub const STATE_EQ_TOL: f64 = 1e-9;

pub(crate) fn check_dim(requested: u128, cap: usize) -> Result<usize> {
    if requested > cap as u128 {
        return Err(Error::Capacity { requested, cap });
    }
    Ok(requested as usize)
}

/// A dense square complex matrix.
#[derive(Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator")
            .field("dim", &self.dim())
            .field("entries", &self.mat)
            .finish()
    }
}

impl Operator {
    /// Builds a `dim x dim` operator from row-major entries.
    pub fn from_row_major(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("operator dimension must be positive"));
        }
        if entries.len() != dim * dim {
            return Err(Error::validation(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("operator entries must be finite"));
        }
        Ok(Self {
            mat: DMatrix::from_row_slice(dim, dim, &entries),
        })
    }

    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::validation(format!(
                "operator must be square and nonempty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let diag = DVector::from_iterator(values.len(), values.iter().map(|&v| C64::new(v, 0.0)));
        Self {
            mat: DMatrix::from_diagonal(&diag),
        }
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let u = DVector::from_column_slice(u);
        let v = DVector::from_column_slice(v);
        Self { mat: &u * v.adjoint() }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn row_major_entries(&self) -> Vec<C64> {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.mat[(i, j)])
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mat: self.mat.adjoint(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            mat: self.mat.map(|z| z * factor),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Operator) -> C64 {
        let n = self.dim();
        assert_eq!(n, other.dim(), "trace_product dimension mismatch");
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.mat[(i, j)] * other.mat[(j, i)];
            }
        }
        acc
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_abs_diff dimension mismatch");
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |A[i][j] - conj(A[j][i])|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Returns `(A + A†)/2` when the defect is within [`HERMITIAN_TOL`].
    pub fn hermitized(&self) -> Result<Self> {
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::validation(format!(
                "operator is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(self.hermitian_part())
    }

    pub(crate) fn hermitian_part(&self) -> Self {
        Self {
            mat: (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.mat.clone().symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Eigenpairs of a Hermitian operator, ascending by eigenvalue.
    pub fn hermitian_eigen(&self) -> Vec<(f64, Vec<C64>)> {
        let eig = self.mat.clone().symmetric_eigen();
        let mut pairs: Vec<(f64, Vec<C64>)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, eig.eigenvectors.column(i).iter().copied().collect()))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    }

    /// Kronecker product, subject to [`DEFAULT_DIM_CAP`].
    pub fn tensor(&self, other: &Operator) -> Result<Self> {
        self.tensor_with_cap(other, DEFAULT_DIM_CAP)
    }

    pub fn tensor_with_cap(&self, other: &Operator, cap: usize) -> Result<Self> {
        check_dim(self.dim() as u128 * other.dim() as u128, cap)?;
        Ok(Self {
            mat: self.mat.kronecker(&other.mat),
        })
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

/// `H^{⊗n}`, the n-qubit Walsh-Hadamard transform as a dense matrix.
pub fn walsh_hadamard(num_qubits: usize) -> Result<Operator> {
    let dim = qubit_dim(num_qubits, DEFAULT_DIM_CAP)?;
    let norm = (dim as f64).sqrt().recip();
    let mat = DMatrix::from_fn(dim, dim, |i, j| {
        let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        C64::new(sign * norm, 0.0)
    });
    Ok(Operator { mat })
}

/// `H^{⊗n} diag(values) H^{⊗n}` for `values.len() == 2^n`.
///
/// Entry `(a, b)` depends only on `a XOR b`, so the result is filled from a
/// single fast Walsh-Hadamard transform of the diagonal.
pub fn hadamard_conjugate_diagonal(values: &[f64]) -> Result<Operator> {
    let dim = values.len();
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::validation(format!(
            "diagonal length {dim} is not a power of two"
        )));
    }
    check_dim(dim as u128, DEFAULT_DIM_CAP)?;
    let mut kernel = values.to_vec();
    let mut half = 1;
    while half < dim {
        for block in (0..dim).step_by(2 * half) {
            for i in block..block + half {
                let (x, y) = (kernel[i], kernel[i + half]);
                kernel[i] = x + y;
                kernel[i + half] = x - y;
            }
        }
        half *= 2;
    }
    let scale = (dim as f64).recip();
    let mat = DMatrix::from_fn(dim, dim, |a, b| C64::new(kernel[a ^ b] * scale, 0.0));
    Ok(Operator { mat })
}

fn qubit_dim(num_qubits: usize, cap: usize) -> Result<usize> {
    if num_qubits == 0 {
        return Err(Error::validation("number of qubits must be positive"));
    }
    if num_qubits >= 64 {
        return Err(Error::Capacity {
            requested: u128::MAX,
            cap,
        });
    }
    check_dim(1u128 << num_qubits, cap)
}

/// A positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
    registers: Option<Vec<usize>>,
}

impl DensityMatrix {
    /// Validates `op` as a density matrix: Hermitian (small defects are
    /// symmetrized), trace one, and no eigenvalue below `-1e-9 * dim`.
    pub fn new(op: Operator) -> Result<Self> {
        let op = op.hermitized()?;
        let trace = op.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::validation(format!(
                "density matrix trace is {trace}, expected 1"
            )));
        }
        let floor = -PSD_TOL_PER_DIM * op.dim() as f64;
        let smallest = op.hermitian_eigenvalues()[0];
        if smallest < floor {
            return Err(Error::validation(format!(
                "density matrix has negative eigenvalue {smallest:e}"
            )));
        }
        Ok(Self {
            op,
            registers: None,
        })
    }

    /// Attaches a per-register qubit layout; the qubit counts must cover the dimension.
    pub fn with_registers(mut self, qubits: Vec<usize>) -> Result<Self> {
        let total: usize = qubits.iter().sum();
        if qubits.is_empty() || total >= 64 || 1usize << total != self.dim() {
            return Err(Error::validation(format!(
                "register layout {qubits:?} does not match dimension {}",
                self.dim()
            )));
        }
        self.registers = Some(qubits);
        Ok(self)
    }

    pub fn registers(&self) -> Option<&[usize]> {
        self.registers.as_deref()
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: Operator::identity(dim).scale((dim as f64).recip()),
            registers: None,
        }
    }

    /// Projector onto basis vector `index` of a `dim`-dimensional space.
    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::validation(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        check_dim(dim as u128, DEFAULT_DIM_CAP)?;
        let mut diag = vec![0.0; dim];
        diag[index] = 1.0;
        Ok(Self {
            op: Operator::diagonal(&diag),
            registers: None,
        })
    }

    /// Kronecker product of two states.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        Ok(Self {
            op: self.op.tensor(&other.op)?,
            registers: None,
        })
    }
}

/// `|ψ><ψ|` for a unit-norm amplitude vector.
pub fn pure_state_density(amplitudes: &[C64]) -> Result<DensityMatrix> {
    if amplitudes.is_empty() {
        return Err(Error::validation("amplitude vector is empty"));
    }
    check_dim(amplitudes.len() as u128, DEFAULT_DIM_CAP)?;
    if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::validation("amplitudes must be finite"));
    }
    let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!(
            "amplitude vector has norm {norm}, expected 1"
        )));
    }
    Ok(DensityMatrix {
        op: Operator::outer(amplitudes, amplitudes),
        registers: None,
    })
}

/// Projector onto the computational basis state named by `bits` (most
/// significant qubit first).
pub fn computational_basis_density(num_qubits: usize, bits: &str) -> Result<DensityMatrix> {
    if bits.len() != num_qubits {
        return Err(Error::validation(format!(
            "bitstring {bits:?} does not have {num_qubits} bits"
        )));
    }
    let dim = qubit_dim(num_qubits, DEFAULT_DIM_CAP)?;
    let index = parse_bits(bits)?
        .iter()
        .fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
    let mut state = DensityMatrix::basis_state(dim, index)?;
    state.registers = Some(vec![1; num_qubits]);
    Ok(state)
}

pub(crate) fn parse_bits(bits: &str) -> Result<Vec<bool>> {
    bits.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::validation(format!(
                "invalid bit {other:?} in bitstring {bits:?}"
            ))),
        })
        .collect()
}

pub(crate) fn standard_complex_gaussian(rng: &mut Stream) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix: independent standard complex Gaussian entries.
pub(crate) fn ginibre(dim: usize, rng: &mut Stream) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |_, _| standard_complex_gaussian(rng))
}

/// `G G† / Tr(G G†)` for a Ginibre matrix `G`.
pub fn random_density_matrix(dim: usize, rng: &mut Stream) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(Error::validation("dimension must be positive"));
    }
    check_dim(dim as u128, DEFAULT_DIM_CAP)?;
    if dim == 1 {
        return Ok(DensityMatrix::maximally_mixed(1));
    }
    let g = ginibre(dim, rng);
    let wishart = &g * g.adjoint();
    let trace = wishart.trace().re;
    let op = Operator {
        mat: wishart / C64::new(trace, 0.0),
    }
    .hermitian_part();
    DensityMatrix::new(op)
}

/// Ordered list of registers `ρ_1 ⊗ … ⊗ ρ_n`.
///
/// Registers are shared, so `n` copies of one state cost one matrix.
#[derive(Clone, Debug)]
pub struct ProductState {
    registers: Vec<Arc<DensityMatrix>>,
}

impl ProductState {
    pub fn new(registers: Vec<DensityMatrix>) -> Result<Self> {
        Self::from_shared(registers.into_iter().map(Arc::new).collect())
    }

    pub fn from_shared(registers: Vec<Arc<DensityMatrix>>) -> Result<Self> {
        if registers.is_empty() {
            return Err(Error::validation("product state needs at least one register"));
        }
        Ok(Self { registers })
    }

    /// `n` fresh copies of `state`.
    pub fn copies(state: DensityMatrix, n: usize) -> Result<Self> {
        let shared = Arc::new(state);
        Self::from_shared(vec![shared; n])
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn register(&self, j: usize) -> Option<&DensityMatrix> {
        self.registers.get(j).map(Arc::as_ref)
    }

    pub(crate) fn shared_register(&self, j: usize) -> &Arc<DensityMatrix> {
        &self.registers[j]
    }

    pub fn register_dims(&self) -> Vec<usize> {
        self.registers.iter().map(|r| r.dim()).collect()
    }

    /// Product of register dimensions, or `None` on overflow.
    pub fn total_dim(&self) -> Option<u128> {
        self.registers
            .iter()
            .try_fold(1u128, |acc, r| acc.checked_mul(r.dim() as u128))
    }

    /// Indices of registers that differ from `other` beyond [`STATE_EQ_TOL`].
    pub fn differing_registers(&self, other: &ProductState) -> Vec<usize> {
        self.registers
            .iter()
            .zip(&other.registers)
            .enumerate()
            .filter(|(_, (a, b))| {
                !Arc::ptr_eq(a, b) && a.operator().max_abs_diff(b.operator()) > STATE_EQ_TOL
            })
            .map(|(j, _)| j)
            .collect()
    }

    /// The joint state as one density matrix.
    pub fn materialize(&self) -> Result<DensityMatrix> {
        self.materialize_with_cap(DEFAULT_DIM_CAP)
    }

    pub fn materialize_with_cap(&self, cap: usize) -> Result<DensityMatrix> {
        check_dim(self.total_dim().unwrap_or(u128::MAX), cap)?;
        let mut op = self.registers[0].operator().clone();
        for reg in &self.registers[1..] {
            op = op.tensor_with_cap(reg.operator(), cap)?;
        }
        Ok(DensityMatrix {
            op,
            registers: None,
        })
    }
}

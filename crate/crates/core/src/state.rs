//! States, observables and the distance measures used throughout the crate.
//!
//! Registers in a [`RegisterLayout`] are listed in tensor-product order: the
//! first register is the most significant factor and the last register holds
//! the lowest qubits (qubit 0 is the least significant index bit).

use std::collections::HashSet;
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cap::{check_dim, check_qubits, qubits_for_dim};
use crate::error::{QctError, Result};
use crate::linalg::{
    self, check_finite, eigh, eigvalsh, hermiticity_defect, partial_trace_qubits, projector,
    CMatrix, CVector, C64,
};

/// Tolerance for Hermiticity and normalization.
pub const TAU_UNIT: f64 = 1e-9;
/// Tolerance for eigenvalue positivity.
pub const TAU_PSD: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub qubits: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Register>", into = "Vec<Register>")]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(registers: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let registers: Vec<Register> = registers
            .into_iter()
            .map(|(name, qubits)| Register {
                name: name.into(),
                qubits,
            })
            .collect();
        let mut seen = HashSet::new();
        for r in &registers {
            if !seen.insert(r.name.as_str()) {
                return Err(QctError::InvalidLayout(format!(
                    "duplicate register name `{}`",
                    r.name
                )));
            }
        }
        Ok(RegisterLayout { registers })
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total_qubits(&self) -> usize {
        self.registers.iter().map(|r| r.qubits).sum()
    }

    pub fn dim(&self) -> usize {
        1 << self.total_qubits()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }

    /// Qubit indices occupied by a register.
    pub fn qubits(&self, name: &str) -> Result<Range<usize>> {
        let mut offset = self.total_qubits();
        for r in &self.registers {
            offset -= r.qubits;
            if r.name == name {
                return Ok(offset..offset + r.qubits);
            }
        }
        Err(QctError::UnknownRegister(name.to_string()))
    }

    /// The layout with the given registers removed.
    pub fn without(&self, names: &[&str]) -> RegisterLayout {
        RegisterLayout {
            registers: self
                .registers
                .iter()
                .filter(|r| !names.contains(&r.name.as_str()))
                .cloned()
                .collect(),
        }
    }
}

impl TryFrom<Vec<Register>> for RegisterLayout {
    type Error = QctError;

    fn try_from(value: Vec<Register>) -> Result<Self> {
        RegisterLayout::new(value.into_iter().map(|r| (r.name, r.qubits)))
    }
}

impl From<RegisterLayout> for Vec<Register> {
    fn from(value: RegisterLayout) -> Self {
        value.registers
    }
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(QctError::InvalidState("empty state vector".into()));
        }
        if !amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(QctError::Numeric("non-finite amplitude".into()));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > TAU_UNIT {
            return Err(QctError::InvalidState(format!(
                "state vector has norm {norm}"
            )));
        }
        Ok(PureState { amplitudes })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(v: CVector) -> Result<Self> {
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(QctError::InvalidState("cannot normalize a zero vector".into()));
        }
        PureState::new(v.unscale(norm))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        PureState {
            amplitudes: linalg::basis_vector(dim, index),
        }
    }

    /// `(|0…0⟩ + … + |d−1⟩)/√d`-style maximally entangled state on `dim ⊗ dim`.
    pub fn max_entangled(dim: usize) -> Self {
        PureState {
            amplitudes: linalg::max_entangled_unnormalized(dim).unscale((dim as f64).sqrt()),
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn qubits(&self) -> usize {
        qubits_for_dim(self.dim())
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn overlap(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn projector(&self) -> CMatrix {
        projector(&self.amplitudes)
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator {
            matrix: self.projector(),
        }
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates the density-operator invariants. States failing the
    /// positivity tolerance are rejected, never clipped.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(QctError::InvalidState("density matrix must be square".into()));
        }
        check_finite(&matrix, "density operator")?;
        let defect = hermiticity_defect(&matrix);
        if defect > TAU_UNIT {
            return Err(QctError::InvalidState(format!(
                "not Hermitian (defect {defect:e})"
            )));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > TAU_UNIT || tr.im.abs() > TAU_UNIT {
            return Err(QctError::InvalidState(format!("trace is {tr}")));
        }
        let min_eig = eigvalsh(&matrix)[0];
        if min_eig < -TAU_PSD {
            return Err(QctError::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(DensityOperator { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        DensityOperator { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator {
            matrix: linalg::identity(dim).unscale(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn qubits(&self) -> usize {
        qubits_for_dim(self.dim())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// `alpha·self + (1 − alpha)·other`.
    pub fn mix(&self, other: &DensityOperator, alpha: f64) -> Result<DensityOperator> {
        if self.dim() != other.dim() {
            return Err(QctError::mismatch("mix", self.dim(), other.dim()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(QctError::InvalidParameter(format!(
                "mixing weight {alpha} outside [0, 1]"
            )));
        }
        Ok(DensityOperator {
            matrix: self.matrix.scale(alpha) + other.matrix.scale(1.0 - alpha),
        })
    }

    /// Expectation value `tr(X ρ)` of a Hermitian observable.
    pub fn expectation(&self, observable: &HermitianObservable) -> Result<f64> {
        if observable.dim() != self.dim() {
            return Err(QctError::mismatch("expectation", self.dim(), observable.dim()));
        }
        Ok((observable.matrix() * &self.matrix).trace().re)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianObservable {
    matrix: CMatrix,
    bounds: Option<(f64, f64)>,
}

impl HermitianObservable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(QctError::InvalidParameter("observable must be square".into()));
        }
        check_finite(&matrix, "observable")?;
        let defect = hermiticity_defect(&matrix);
        if defect > TAU_UNIT {
            return Err(QctError::InvalidParameter(format!(
                "observable is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(HermitianObservable {
            matrix,
            bounds: None,
        })
    }

    /// Records the spectral range `[min, max]`.
    pub fn with_spectral_bounds(mut self) -> Self {
        let values = eigvalsh(&self.matrix);
        self.bounds = values.first().zip(values.last()).map(|(a, b)| (*a, *b));
        self
    }

    pub fn spectral_bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Whether `0 ≤ X ≤ I` holds within the positivity tolerance.
    pub fn is_effect(&self) -> bool {
        let values = eigvalsh(&self.matrix);
        values[0] >= -TAU_PSD && values[values.len() - 1] <= 1.0 + TAU_PSD
    }
}

/// Kronecker product, refusing results beyond the desk-scale cap.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl Tensor for CMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        check_dim(self.nrows() * other.nrows(), "tensor product")?;
        Ok(self.kronecker(other))
    }
}

impl Tensor for CVector {
    fn tensor(&self, other: &Self) -> Result<Self> {
        check_dim(self.len() * other.len(), "tensor product")?;
        Ok(self.kronecker(other))
    }
}

impl Tensor for PureState {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(PureState {
            amplitudes: self.amplitudes.tensor(&other.amplitudes)?,
        })
    }
}

impl Tensor for DensityOperator {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(DensityOperator {
            matrix: self.matrix.tensor(&other.matrix)?,
        })
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

/// Traces out the named registers.
pub fn partial_trace(
    rho: &DensityOperator,
    layout: &RegisterLayout,
    discard: &[&str],
) -> Result<DensityOperator> {
    if rho.dim() != layout.dim() {
        return Err(QctError::mismatch("partial_trace", layout.dim(), rho.dim()));
    }
    let mut qubits = Vec::new();
    for name in discard {
        qubits.extend(layout.qubits(name)?);
    }
    qubits.sort_unstable();
    qubits.dedup();
    if qubits.len() == layout.total_qubits() {
        return Err(QctError::ScalarTrace {
            trace: linalg::trace(rho.matrix()).re,
        });
    }
    let reduced = partial_trace_qubits(rho.matrix(), layout.total_qubits(), &qubits);
    DensityOperator::new(reduced)
}

/// Sum of singular values.
pub fn trace_norm(x: &CMatrix) -> Result<f64> {
    if !x.is_square() {
        return Err(QctError::InvalidParameter("trace norm needs a square matrix".into()));
    }
    check_finite(x, "trace_norm")?;
    if hermiticity_defect(x) <= 1e-13 * (1.0 + x.norm()) {
        return Ok(eigvalsh(x).iter().map(|v| v.abs()).sum());
    }
    Ok(linalg::singular_values(x).iter().sum())
}

/// Largest singular value.
pub fn operator_norm(x: &CMatrix) -> Result<f64> {
    if !x.is_square() {
        return Err(QctError::InvalidParameter(
            "operator norm needs a square matrix".into(),
        ));
    }
    check_finite(x, "operator_norm")?;
    if hermiticity_defect(x) <= 1e-13 * (1.0 + x.norm()) {
        return Ok(eigvalsh(x).iter().fold(0.0_f64, |acc, v| acc.max(v.abs())));
    }
    Ok(linalg::singular_values(x).into_iter().fold(0.0, f64::max))
}

/// Trace-norm distance between two density operators.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(QctError::mismatch("trace_distance", a.dim(), b.dim()));
    }
    trace_norm(&(a.matrix() - b.matrix()))
}

/// Purification on `H ⊗ H_ref` (system high, reference low) built from the
/// eigendecomposition: `Σ_i √λ_i |e_i⟩ ⊗ |i⟩`.
pub fn purify(rho: &DensityOperator) -> Result<PureState> {
    let dim = rho.dim();
    check_dim(dim * dim, "purify")?;
    let (values, vectors) = eigh(rho.matrix());
    if values[0] < -TAU_PSD {
        return Err(QctError::InvalidState(format!(
            "negative eigenvalue {:e}",
            values[0]
        )));
    }
    let mut amps = CVector::zeros(dim * dim);
    for (i, &lambda) in values.iter().enumerate() {
        let weight = lambda.max(0.0).sqrt();
        for s in 0..dim {
            amps[s * dim + i] = vectors[(s, i)] * weight;
        }
    }
    PureState::normalized(amps)
}

/// Rotation-invariant random pure state, deterministic per seed.
pub fn random_pure_state(dim: usize, seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pure_state_with(dim, &mut rng)
}

pub fn random_pure_state_with<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
    PureState {
        amplitudes: linalg::random_unit_vector(dim, rng),
    }
}

/// Random mixed state obtained by tracing a Haar-random purification.
pub fn random_density_with<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    let g = CMatrix::from_fn(dim, dim, |_, _| linalg::random_complex_gaussian(rng));
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    DensityOperator {
        matrix: linalg::hermitian_part(&m.unscale(tr)),
    }
}

/// Random effect `0 ≤ X ≤ I` with a Haar-random eigenbasis and uniform spectrum.
pub fn random_effect_with<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianObservable {
    let u = linalg::random_unitary(dim, rng);
    let diag = CMatrix::from_diagonal(&CVector::from_fn(dim, |_, _| {
        C64::new(rng.random::<f64>(), 0.0)
    }));
    HermitianObservable {
        matrix: linalg::hermitian_part(&(&u * diag * u.adjoint())),
        bounds: None,
    }
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityOperator) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues())
}

pub(crate) fn entropy_of_spectrum(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&v| v > 1e-300)
        .map(|&v| -v * v.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Embeds `rho` with `k` fresh qubits in `|0⟩` placed above it.
pub(crate) fn prepend_zero_qubits(m: &CMatrix, k: usize) -> Result<CMatrix> {
    let dim = m.nrows();
    check_qubits(qubits_for_dim(dim) + k, "ancilla introduction")?;
    let new_dim = dim << k;
    let mut out = CMatrix::zeros(new_dim, new_dim);
    out.view_mut((0, 0), (dim, dim)).copy_from(m);
    Ok(out)
}

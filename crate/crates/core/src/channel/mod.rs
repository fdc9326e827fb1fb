//! Channels in Choi form, keyed channel families, diamond-distance
//! estimation and the ε-private check.
//!
//! Choi matrices use output ⊗ input ordering with the unnormalized maximally
//! entangled input, so `tr J = dim_in` and trace preservation reads
//! `tr_out J = I`.

mod diamond;
mod keyed;
mod privacy;

pub use diamond::{
    diamond_distance, diamond_distance_with, map_distance, DiamondEstimate, DiamondOptions,
};
pub use keyed::{KeyedChannelFamily, KEY_ENUMERATION_BUDGET};
pub use privacy::{check_eps_private, PrivacyReport, PrivacyVerdict};

use crate::cap::check_dim;
use crate::error::{QctError, Result};
use crate::linalg::{
    apply_choi_adjoint_on_factor, apply_choi_on_factor, check_finite, eigvalsh,
    hermiticity_defect, identity, max_abs_diff, CMatrix, ZERO,
};
use crate::state::{DensityOperator, TAU_PSD, TAU_UNIT};

/// Tolerance for the trace-preservation check.
pub const TAU_TP: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    dim_in: usize,
    dim_out: usize,
    choi: CMatrix,
}

impl QuantumChannel {
    /// Validates complete positivity and trace preservation.
    pub fn new(dim_in: usize, dim_out: usize, choi: CMatrix) -> Result<Self> {
        let ch = Self::from_choi_unchecked(dim_in, dim_out, choi)?;
        check_finite(&ch.choi, "Choi matrix")?;
        let defect = hermiticity_defect(&ch.choi);
        if defect > TAU_UNIT {
            return Err(QctError::InvalidChannel(format!(
                "Choi matrix is not Hermitian (defect {defect:e})"
            )));
        }
        let min_eig = eigvalsh(&ch.choi)[0];
        if min_eig < -TAU_PSD {
            return Err(QctError::InvalidChannel(format!(
                "Choi matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        let tp = max_abs_diff(&ch.partial_trace_output(), &identity(dim_in));
        if tp > TAU_TP {
            return Err(QctError::InvalidChannel(format!(
                "not trace preserving (deviation {tp:e})"
            )));
        }
        Ok(ch)
    }

    /// Checks shapes and the size cap only.
    pub(crate) fn from_choi_unchecked(dim_in: usize, dim_out: usize, choi: CMatrix) -> Result<Self> {
        check_dim(dim_in * dim_out, "Choi matrix")?;
        let d = dim_in * dim_out;
        if choi.nrows() != d || choi.ncols() != d {
            return Err(QctError::mismatch("Choi matrix", d, choi.nrows()));
        }
        Ok(QuantumChannel {
            dim_in,
            dim_out,
            choi,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::unitary(&identity(dim))
    }

    pub fn unitary(u: &CMatrix) -> Result<Self> {
        Self::from_kraus(&[u.clone()])
    }

    /// `J = Σ_i vec(K_i) vec(K_i)†` with `vec(K)[(o, s)] = K[o, s]`.
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| QctError::InvalidChannel("no Kraus operators".into()))?;
        let (dim_out, dim_in) = first.shape();
        check_dim(dim_in * dim_out, "Choi matrix")?;
        let d = dim_in * dim_out;
        let mut choi = CMatrix::zeros(d, d);
        for k in kraus {
            if k.shape() != (dim_out, dim_in) {
                return Err(QctError::mismatch("Kraus operator", dim_out, k.nrows()));
            }
            let v = CMatrix::from_fn(d, 1, |idx, _| k[(idx / dim_in, idx % dim_in)]);
            choi += &v * v.adjoint();
        }
        Self::new(dim_in, dim_out, choi)
    }

    /// Completely depolarizing map `ρ ↦ tr(ρ) I / dim_out`.
    pub fn depolarizing(in_qubits: usize, out_qubits: usize) -> Result<Self> {
        if out_qubits < in_qubits {
            return Err(QctError::InvalidParameter(format!(
                "depolarizing output ({out_qubits}) must be at least the input ({in_qubits})"
            )));
        }
        crate::cap::check_qubits(in_qubits + out_qubits, "Choi matrix")?;
        let (dim_in, dim_out) = (1usize << in_qubits, 1usize << out_qubits);
        let choi = identity(dim_in * dim_out).unscale(dim_out as f64);
        Self::from_choi_unchecked(dim_in, dim_out, choi)
    }

    /// Convex combination `Σ w_i Φ_i`; weights must be non-negative and sum to 1.
    pub fn mix(parts: &[(f64, &QuantumChannel)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| QctError::InvalidParameter("empty mixture".into()))?;
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > TAU_UNIT {
            return Err(QctError::InvalidParameter(
                "mixture weights must be a probability vector".into(),
            ));
        }
        let mut choi = CMatrix::zeros(first.choi.nrows(), first.choi.ncols());
        for (w, ch) in parts {
            first.check_same_dims(ch)?;
            choi += ch.choi.scale(*w);
        }
        Self::from_choi_unchecked(first.dim_in, first.dim_out, choi)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub(crate) fn check_same_dims(&self, other: &QuantumChannel) -> Result<()> {
        if self.dim_in != other.dim_in {
            return Err(QctError::mismatch("channel input", self.dim_in, other.dim_in));
        }
        if self.dim_out != other.dim_out {
            return Err(QctError::mismatch("channel output", self.dim_out, other.dim_out));
        }
        Ok(())
    }

    /// `tr_out J`, which equals the identity for a trace-preserving map.
    pub fn partial_trace_output(&self) -> CMatrix {
        let (di, dout) = (self.dim_in, self.dim_out);
        CMatrix::from_fn(di, di, |s, sp| {
            (0..dout).fold(ZERO, |acc, o| acc + self.choi[(o * di + s, o * di + sp)])
        })
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        Ok(DensityOperator::from_matrix_unchecked(
            self.apply_with_reference(rho.matrix(), 1)?,
        ))
    }

    /// `(Φ ⊗ id_R)(X)` for `X` on system ⊗ reference, reference dimension
    /// `ref_dim` on the low index.
    pub fn apply_with_reference(&self, x: &CMatrix, ref_dim: usize) -> Result<CMatrix> {
        let expected = self.dim_in * ref_dim;
        if x.nrows() != expected || x.ncols() != expected {
            return Err(QctError::mismatch("channel input", expected, x.nrows()));
        }
        check_dim(self.dim_out * ref_dim, "channel output")?;
        Ok(apply_choi_on_factor(
            &self.choi,
            self.dim_in,
            self.dim_out,
            x,
            &[self.dim_in, ref_dim],
            0,
        ))
    }

    /// Heisenberg-picture map `(Φ† ⊗ id_R)(Y)`.
    pub fn adjoint_with_reference(&self, y: &CMatrix, ref_dim: usize) -> Result<CMatrix> {
        let expected = self.dim_out * ref_dim;
        if y.nrows() != expected || y.ncols() != expected {
            return Err(QctError::mismatch("channel adjoint input", expected, y.nrows()));
        }
        Ok(apply_choi_adjoint_on_factor(
            &self.choi,
            self.dim_in,
            self.dim_out,
            y,
            &[self.dim_out, ref_dim],
            0,
        ))
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &QuantumChannel) -> Result<QuantumChannel> {
        if next.dim_in != self.dim_out {
            return Err(QctError::mismatch("channel composition", self.dim_out, next.dim_in));
        }
        check_dim(next.dim_out * self.dim_in, "Choi matrix")?;
        let choi = apply_choi_on_factor(
            &next.choi,
            next.dim_in,
            next.dim_out,
            &self.choi,
            &[self.dim_out, self.dim_in],
            0,
        );
        Self::from_choi_unchecked(self.dim_in, next.dim_out, choi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{pauli_x, to_channel, CircuitBuilder};
    use crate::linalg::{max_entangled_unnormalized, projector, random_unitary};
    use crate::state::{partial_trace, random_pure_state, PureState, RegisterLayout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn depolarizing_sends_zero_to_mixed() {
        let omega = QuantumChannel::depolarizing(1, 1).unwrap();
        let out = omega.apply(&PureState::basis(2, 0).density()).unwrap();
        assert!(max_abs_diff(out.matrix(), &identity(2).scale(0.5)) <= 1e-15);
    }

    #[test]
    fn depolarizing_random_inputs() {
        let omega = QuantumChannel::depolarizing(2, 2).unwrap();
        for seed in 0..5 {
            let out = omega.apply(&random_pure_state(4, seed).density()).unwrap();
            assert!(max_abs_diff(out.matrix(), &identity(4).scale(0.25)) <= 1e-9);
        }
        assert!(QuantumChannel::depolarizing(2, 1).is_err());
    }

    #[test]
    fn depolarizing_on_half_of_bell_state() {
        let omega = QuantumChannel::depolarizing(1, 1).unwrap();
        let bell = PureState::max_entangled(2);
        let out = omega.apply_with_reference(&bell.projector(), 2).unwrap();
        let expected = crate::linalg::identity(4).scale(0.25);
        assert!(max_abs_diff(&out, &expected) <= 1e-12);
        let layout = RegisterLayout::new([("K", 1), ("R", 1)]).unwrap();
        let reduced =
            partial_trace(&DensityOperator::new(out).unwrap(), &layout, &["K"]).unwrap();
        assert!(max_abs_diff(reduced.matrix(), &identity(2).scale(0.5)) <= 1e-12);
    }

    #[test]
    fn identity_choi() {
        let id = QuantumChannel::identity(2).unwrap();
        let bell = max_entangled_unnormalized(2);
        assert!(max_abs_diff(id.choi(), &projector(&bell)) <= 1e-15);
    }

    #[test]
    fn rejects_non_trace_preserving() {
        let choi = identity(4);
        assert!(matches!(
            QuantumChannel::new(2, 2, choi),
            Err(QctError::InvalidChannel(_))
        ));
    }

    #[test]
    fn composition_matches_concatenated_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut a = CircuitBuilder::new(1);
        a.ancillas(1).unitary(random_unitary(4, &mut rng), vec![0, 1]).trace_out(vec![1]);
        let mut b = CircuitBuilder::new(1);
        b.h(0).ancillas(1).cnot(0, 1).trace_out(vec![0]);
        let (a, b) = (a.build().unwrap(), b.build().unwrap());
        let composed = to_channel(&a).unwrap().then(&to_channel(&b).unwrap()).unwrap();
        let direct = to_channel(&a.then(&b).unwrap()).unwrap();
        assert!(max_abs_diff(composed.choi(), direct.choi()) <= 1e-9);
    }

    #[test]
    fn adjoint_is_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = QuantumChannel::unitary(&pauli_x()).unwrap();
        let mix = QuantumChannel::mix(&[
            (0.3, &x),
            (0.7, &QuantumChannel::depolarizing(1, 1).unwrap()),
        ])
        .unwrap();
        let rho = crate::state::random_density_with(4, &mut rng);
        let y = crate::state::random_effect_with(4, &mut rng);
        let lhs = (mix.apply_with_reference(rho.matrix(), 2).unwrap() * y.matrix()).trace();
        let rhs = (rho.matrix() * mix.adjoint_with_reference(y.matrix(), 2).unwrap()).trace();
        assert!((lhs - rhs).norm() <= 1e-12);
    }
}

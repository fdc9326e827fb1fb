use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    from_json, pauli_keyed_template, to_channel, to_json, CircuitDoc, MixedStateCircuit,
};
use crate::error::{QctError, Result};
use crate::linalg::CMatrix;

use super::QuantumChannel;

/// Largest key length whose channels are enumerated exactly.
pub const KEY_ENUMERATION_BUDGET: usize = 12;

/// Channels `E_k` indexed by classical keys `0 ≤ k < 2^key_bits`, generated
/// from one template circuit whose keyed placeholders are expanded per key.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyedChannelFamily {
    key_bits: usize,
    template: MixedStateCircuit,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyDoc {
    key_bits: usize,
    template: CircuitDoc,
}

impl KeyedChannelFamily {
    pub fn new(key_bits: usize, template: MixedStateCircuit) -> Result<Self> {
        if key_bits >= 64 {
            return Err(QctError::InvalidParameter(format!(
                "{key_bits} key bits do not fit a 64-bit key"
            )));
        }
        let used = template.key_bits_used();
        if used > key_bits {
            return Err(QctError::InvalidParameter(format!(
                "template reads key bit {} but the family has {key_bits} key bits",
                used - 1
            )));
        }
        Ok(KeyedChannelFamily { key_bits, template })
    }

    /// Pauli one-time pad on `qubits` qubits with two key bits per qubit.
    pub fn pauli_otp(qubits: usize) -> Result<Self> {
        Self::new(2 * qubits, pauli_keyed_template(qubits, false)?)
    }

    /// Per-key inverse of [`pauli_otp`](Self::pauli_otp).
    pub fn pauli_otp_decryptor(qubits: usize) -> Result<Self> {
        Self::new(2 * qubits, pauli_keyed_template(qubits, true)?)
    }

    /// Identity on the message for every key.
    pub fn key_ignoring_identity(qubits: usize) -> Result<Self> {
        Self::new(2 * qubits, MixedStateCircuit::identity(qubits))
    }

    pub fn key_bits(&self) -> usize {
        self.key_bits
    }

    pub fn key_count(&self) -> u64 {
        1u64 << self.key_bits
    }

    pub fn template(&self) -> &MixedStateCircuit {
        &self.template
    }

    pub fn input_qubits(&self) -> usize {
        self.template.input_qubits()
    }

    pub fn output_qubits(&self) -> usize {
        self.template.output_qubits()
    }

    pub fn member(&self, key: u64) -> Result<MixedStateCircuit> {
        if key >= self.key_count() {
            return Err(QctError::KeyOutOfRange {
                key,
                bits: self.key_bits,
            });
        }
        Ok(self.template.instantiate(key))
    }

    pub fn channel(&self, key: u64) -> Result<QuantumChannel> {
        to_channel(&self.member(key)?)
    }

    fn check_budget(&self) -> Result<()> {
        if self.key_bits > KEY_ENUMERATION_BUDGET {
            return Err(QctError::BudgetExceeded {
                key_bits: self.key_bits,
                budget: KEY_ENUMERATION_BUDGET,
            });
        }
        Ok(())
    }

    /// Every member channel, in key order.
    pub fn channels(&self) -> Result<Vec<QuantumChannel>> {
        self.check_budget()?;
        if !self.template.has_keyed_gates() {
            // Every key yields the same circuit.
            let ch = to_channel(&self.template)?;
            return Ok(vec![ch; self.key_count() as usize]);
        }
        (0..self.key_count())
            .into_par_iter()
            .map(|k| self.channel(k))
            .collect()
    }

    /// Uniform average `2^{-m} Σ_k E_k`.
    pub fn key_average(&self) -> Result<QuantumChannel> {
        self.check_budget()?;
        if !self.template.has_keyed_gates() {
            return to_channel(&self.template);
        }
        let channels = self.channels()?;
        let first = &channels[0];
        let mut choi = CMatrix::zeros(first.choi().nrows(), first.choi().ncols());
        for ch in &channels {
            choi += ch.choi();
        }
        choi.unscale_mut(channels.len() as f64);
        QuantumChannel::from_choi_unchecked(first.dim_in(), first.dim_out(), choi)
    }

    pub fn parse(text: &[u8]) -> Result<Self> {
        let doc: FamilyDoc = from_json(text)?;
        Self::new(doc.key_bits, doc.template.to_circuit()?)
    }

    pub fn serialize(&self) -> Vec<u8> {
        to_json(&FamilyDoc {
            key_bits: self.key_bits,
            template: CircuitDoc::from_circuit(&self.template),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{pauli_keyed, CircuitBuilder};
    use crate::linalg::{eigvalsh, max_abs_diff};
    use crate::state::PureState;

    #[test]
    fn otp_average_is_depolarizing() {
        for n in 1..=2 {
            let avg = KeyedChannelFamily::pauli_otp(n).unwrap().key_average().unwrap();
            let omega = QuantumChannel::depolarizing(n, n).unwrap();
            assert!(max_abs_diff(avg.choi(), omega.choi()) <= 1e-12);
        }
    }

    #[test]
    fn one_qubit_pauli_chois_are_orthogonal_rank_one() {
        let chans = KeyedChannelFamily::pauli_otp(1).unwrap().channels().unwrap();
        for (i, a) in chans.iter().enumerate() {
            let vals = eigvalsh(a.choi());
            assert!((vals[3] - 2.0).abs() < 1e-12 && vals[2].abs() < 1e-12);
            for b in &chans[i + 1..] {
                assert!((a.choi() * b.choi()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn x_key_flips_zero() {
        let c = pauli_keyed(1, 1).unwrap();
        let out = crate::circuit::evaluate(&c, &PureState::basis(2, 0).density(), 0).unwrap();
        assert!((out.matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_member_average() {
        let mut b = CircuitBuilder::new(1);
        b.h(0);
        let fam = KeyedChannelFamily::new(0, b.build().unwrap()).unwrap();
        let avg = fam.key_average().unwrap();
        assert!(max_abs_diff(avg.choi(), fam.channel(0).unwrap().choi()) <= 1e-15);
    }

    #[test]
    fn budget_is_enforced() {
        let fam = KeyedChannelFamily::new(13, MixedStateCircuit::identity(1)).unwrap();
        assert!(matches!(
            fam.key_average(),
            Err(QctError::BudgetExceeded { key_bits: 13, .. })
        ));
        assert!(KeyedChannelFamily::new(1, pauli_keyed_template(1, false).unwrap()).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let fam = KeyedChannelFamily::pauli_otp(2).unwrap();
        let back = KeyedChannelFamily::parse(&fam.serialize()).unwrap();
        assert_eq!(back, fam);
    }
}

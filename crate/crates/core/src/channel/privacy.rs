use serde::Serialize;

use crate::error::{QctError, Result};

use super::{diamond_distance_with, DiamondOptions, KeyedChannelFamily, QuantumChannel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PrivacyVerdict {
    #[serde(rename = "CONSISTENT-WITH-EPS-PRIVATE")]
    ConsistentWithEpsPrivate,
    #[serde(rename = "VIOLATES")]
    Violates,
}

/// Lower bounds on the decryption error `d1` and the key-average deviation
/// from the depolarizing channel `d2`, with their reference-free
/// trace-norm counterparts.
#[derive(Clone, Debug, Serialize)]
pub struct PrivacyReport {
    pub eps: f64,
    pub d1: f64,
    pub d2: f64,
    pub d1_trace: f64,
    pub d2_trace: f64,
    /// Key attaining `d1`.
    pub worst_key: u64,
    pub verdict: PrivacyVerdict,
}

pub fn check_eps_private(
    family: &KeyedChannelFamily,
    decryptor: &KeyedChannelFamily,
    eps: f64,
    options: DiamondOptions,
) -> Result<PrivacyReport> {
    if decryptor.input_qubits() != family.output_qubits() {
        return Err(QctError::mismatch(
            "decryptor input",
            family.output_qubits(),
            decryptor.input_qubits(),
        ));
    }
    if decryptor.output_qubits() != family.input_qubits() {
        return Err(QctError::mismatch(
            "decryptor output",
            family.input_qubits(),
            decryptor.output_qubits(),
        ));
    }
    if decryptor.key_bits() != family.key_bits() {
        return Err(QctError::mismatch(
            "decryptor key bits",
            family.key_bits(),
            decryptor.key_bits(),
        ));
    }
    let encrypt = family.channels()?;
    let decrypt = decryptor.channels()?;
    let dim_in = 1usize << family.input_qubits();
    let id = QuantumChannel::identity(dim_in)?;
    let (mut d1, mut d1_trace, mut worst_key) = (0.0f64, 0.0f64, 0u64);
    for (k, (e, d)) in encrypt.iter().zip(&decrypt).enumerate() {
        let round = e.then(d)?;
        let full = diamond_distance_with(&round, &id, dim_in, options)?.value;
        let plain = diamond_distance_with(&round, &id, 1, options)?.value;
        if full > d1 {
            d1 = full;
            worst_key = k as u64;
        }
        d1_trace = d1_trace.max(plain);
    }
    let average = family.key_average()?;
    let omega = QuantumChannel::depolarizing(family.input_qubits(), family.output_qubits())?;
    let d2 = diamond_distance_with(&average, &omega, dim_in, options)?.value;
    let d2_trace = diamond_distance_with(&average, &omega, 1, options)?.value;
    let verdict = if d1 <= eps && d2 <= eps {
        PrivacyVerdict::ConsistentWithEpsPrivate
    } else {
        PrivacyVerdict::Violates
    };
    Ok(PrivacyReport {
        eps,
        d1,
        d2,
        d1_trace,
        d2_trace,
        worst_key,
        verdict,
    })
}

use serde::{Deserialize, Serialize};

use crate::circuit::{
    depolarizer_circuit, pauli_keyed, pauli_keyed_template, CircuitBuilder, MixedStateCircuit,
};
use crate::error::Result;

/// Built-in circuit families, each generating one circuit per input width.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum CircuitFamily {
    Identity,
    /// Completely depolarizing channel built from controlled Paulis driven
    /// by `|+⟩` key qubits that are traced out afterwards.
    Depolarizing,
    /// Pauli X on the first input qubit.
    PauliXFirst,
    /// Key-selected Pauli on every qubit. Without a key the generated circuit
    /// is the keyed template, to be instantiated per key.
    PauliKeyed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        key: Option<u64>,
    },
}

impl CircuitFamily {
    pub const NAMES: [&'static str; 4] = ["identity", "depolarizing", "pauli_x_first", "pauli_keyed"];

    pub fn name(&self) -> &'static str {
        match self {
            CircuitFamily::Identity => "identity",
            CircuitFamily::Depolarizing => "depolarizing",
            CircuitFamily::PauliXFirst => "pauli_x_first",
            CircuitFamily::PauliKeyed { .. } => "pauli_keyed",
        }
    }

    pub fn build(&self, qubits: usize) -> Result<MixedStateCircuit> {
        match self {
            CircuitFamily::Identity => Ok(MixedStateCircuit::identity(qubits)),
            CircuitFamily::Depolarizing => depolarizer_circuit(qubits),
            CircuitFamily::PauliXFirst => {
                let mut b = CircuitBuilder::new(qubits);
                if qubits > 0 {
                    b.x(0);
                }
                b.build()
            }
            CircuitFamily::PauliKeyed { key: Some(k) } => pauli_keyed(qubits, *k),
            CircuitFamily::PauliKeyed { key: None } => pauli_keyed_template(qubits, false),
        }
    }
}

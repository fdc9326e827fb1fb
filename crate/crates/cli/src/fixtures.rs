//! Registry of built-in verifiers, circuit families and instances, each with
//! an example JSON document.

use serde::Serialize;
use serde_json::Value;

use qct_core::channel::KeyedChannelFamily;
use qct_core::circuit::serialize_circuit;
use qct_core::protocol::{build_insecure_instance, build_secure_instance};
use qct_core::reduction::{build_ct_circuit, CircuitFamily};
use qct_core::state::PureState;
use qct_core::verifier::{make_toy_verifier, ToyVerifier};
use qct_core::Result;

#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub name: String,
    pub description: String,
    pub example: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Catalog {
    pub verifiers: Vec<Entry>,
    pub families: Vec<Entry>,
    pub instances: Vec<Entry>,
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).expect("built-in documents are valid JSON")
}

fn entry(name: &str, description: &str, example: Value) -> Entry {
    Entry {
        name: name.into(),
        description: description.into(),
        example,
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("fixtures serialize")
}

pub fn catalog() -> Result<Catalog> {
    let plus = PureState::normalized(qct_core::linalg::CVector::from_element(
        2,
        qct_core::linalg::c(1.0, 0.0),
    ))?;
    let rotation = ToyVerifier::rotation_for_accept(0.96)?;
    let verifiers = vec![
        entry(
            "always_reject",
            "Rejects every witness",
            to_value(ToyVerifier::AlwaysReject { witness_qubits: 1 }),
        ),
        entry(
            "target_state",
            "Accepts exactly the given target state",
            to_value(ToyVerifier::target_state(&plus)),
        ),
        entry(
            "rotation",
            "One-qubit rotation accepting |1⟩ with probability sin²(θ/2)",
            to_value(&rotation),
        ),
        entry(
            "random_unitary",
            "Seeded Haar-random verifier unitary",
            to_value(ToyVerifier::RandomUnitary {
                witness_qubits: 1,
                ancilla_qubits: 1,
                seed: 0,
            }),
        ),
        entry(
            "verifier_circuit",
            "Explicit verifier circuit (rotation verifier shown)",
            json(&make_toy_verifier(&rotation)?.serialize()),
        ),
    ];

    let mut families: Vec<Entry> = [
        (CircuitFamily::Identity, "Identity on every input width"),
        (CircuitFamily::Depolarizing, "Completely depolarizing channel via |+⟩-driven controlled Paulis"),
        (CircuitFamily::PauliXFirst, "Pauli X on the first input qubit"),
        (CircuitFamily::PauliKeyed { key: Some(1) }, "Pauli selected by a key; without a key, the keyed template"),
    ]
    .into_iter()
    .map(|(fam, desc)| entry(fam.name(), desc, to_value(&fam)))
    .collect();
    families.push(entry(
        "depolarizing_circuit_1q",
        "Generated depolarizing circuit for one qubit",
        json(&serialize_circuit(&CircuitFamily::Depolarizing.build(1)?)),
    ));
    families.push(entry(
        "pauli_otp_1q",
        "Keyed Pauli one-time pad family on one qubit",
        json(&KeyedChannelFamily::pauli_otp(1)?.serialize()),
    ));

    let v = make_toy_verifier(&rotation)?;
    let instances = vec![
        entry(
            "ct_instance",
            "Circuit-testing instance: rotation verifier, identity vs depolarizing, eps 0.04, delta 0.5",
            json(&build_ct_circuit(&v, &CircuitFamily::Identity, &CircuitFamily::Depolarizing, 0.04, 0.5)?
                .serialize()),
        ),
        entry(
            "secure_otp",
            "Secure instance: Pauli one-time pad on one qubit",
            json(&build_secure_instance(1, 0.01)?.serialize()),
        ),
        entry(
            "insecure_from_verifier",
            "Insecure instance built from the rotation verifier, eps 0.04, delta 1",
            json(&build_insecure_instance(&v, 0.04, 1.0)?.serialize()),
        ),
    ];
    Ok(Catalog {
        verifiers,
        families,
        instances,
    })
}

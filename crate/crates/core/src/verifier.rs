//! Verifier circuits: a unitary on witness ⊗ ancilla that accepts when the
//! output qubit is measured as `|1⟩`.
//!
//! Wires `0..a` are the ancillas (starting in `|0⟩`) and wires `a..a + h`
//! hold the witness, so the initial state is `|ψ⟩ ⊗ |0…0⟩` in tensor order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cap::check_qubits;
use crate::circuit::{
    canonicalize, from_json, ry, to_json, CircuitBuilder, CircuitDoc, GateKind, GateOp,
    MixedStateCircuit,
};
use crate::error::{QctError, Result};
use crate::linalg::{
    identity, is_unitary, random_unitary, top_eigenpair, CMatrix, CVector, ZERO,
};
use crate::state::{HermitianObservable, PureState, TAU_UNIT};

#[derive(Clone, Debug, PartialEq)]
pub struct VerifierCircuit {
    witness_qubits: usize,
    ancilla_qubits: usize,
    circuit: MixedStateCircuit,
    unitary: CMatrix,
    output_qubit: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifierDoc {
    witness_qubits: usize,
    ancilla_qubits: usize,
    circuit: CircuitDoc,
    #[serde(default)]
    output_qubit: usize,
}

impl VerifierCircuit {
    /// Builds a verifier from a unitary-only circuit on `h + a` wires.
    pub fn from_circuit(
        witness_qubits: usize,
        ancilla_qubits: usize,
        circuit: MixedStateCircuit,
        output_qubit: usize,
    ) -> Result<Self> {
        let total = witness_qubits + ancilla_qubits;
        if witness_qubits == 0 {
            return Err(QctError::InvalidParameter(
                "a verifier needs at least one witness qubit".into(),
            ));
        }
        check_qubits(total, "verifier register")?;
        if circuit.input_qubits() != total || circuit.output_qubits() != total {
            return Err(QctError::mismatch(
                "verifier circuit width",
                total,
                circuit.input_qubits(),
            ));
        }
        if output_qubit >= total {
            return Err(QctError::InvalidParameter(format!(
                "output qubit {output_qubit} outside a {total}-qubit register"
            )));
        }
        let canon = canonicalize(&circuit)?;
        if canon.ancilla_qubits() != 0 || !canon.traced_wires().is_empty() {
            return Err(QctError::InvalidParameter(
                "verifier circuit must be unitary (no ancilla or trace-out ops)".into(),
            ));
        }
        let unitary = canon.unitary().clone();
        Ok(VerifierCircuit {
            witness_qubits,
            ancilla_qubits,
            circuit,
            unitary,
            output_qubit,
        })
    }

    pub fn from_unitary(
        witness_qubits: usize,
        ancilla_qubits: usize,
        unitary: CMatrix,
        output_qubit: usize,
    ) -> Result<Self> {
        let total = witness_qubits + ancilla_qubits;
        check_qubits(total, "verifier register")?;
        if unitary.nrows() != 1 << total || !unitary.is_square() {
            return Err(QctError::mismatch("verifier unitary", 1 << total, unitary.nrows()));
        }
        if !is_unitary(&unitary, TAU_UNIT) {
            return Err(QctError::InvalidParameter("verifier matrix is not unitary".into()));
        }
        let circuit = MixedStateCircuit::new(
            total,
            total,
            vec![GateOp::new(GateKind::Unitary(unitary), (0..total).collect())],
        )?;
        Self::from_circuit(witness_qubits, ancilla_qubits, circuit, output_qubit)
    }

    pub fn witness_qubits(&self) -> usize {
        self.witness_qubits
    }

    pub fn ancilla_qubits(&self) -> usize {
        self.ancilla_qubits
    }

    pub fn total_qubits(&self) -> usize {
        self.witness_qubits + self.ancilla_qubits
    }

    pub fn output_qubit(&self) -> usize {
        self.output_qubit
    }

    pub fn circuit(&self) -> &MixedStateCircuit {
        &self.circuit
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// `V (ψ ⊗ |0…0⟩)`.
    pub fn run(&self, witness: &PureState) -> Result<CVector> {
        let dh = 1usize << self.witness_qubits;
        if witness.dim() != dh {
            return Err(QctError::mismatch("witness", dh, witness.dim()));
        }
        let stride = 1usize << self.ancilla_qubits;
        let mut out = CVector::zeros(self.unitary.nrows());
        for (i, &amp) in witness.amplitudes().iter().enumerate() {
            if amp != ZERO {
                out.axpy(amp, &self.unitary.column(i * stride), crate::linalg::ONE);
            }
        }
        Ok(out)
    }

    pub fn accept_probability(&self, witness: &PureState) -> Result<f64> {
        let out = self.run(witness)?;
        let mask = 1usize << self.output_qubit;
        Ok(out
            .iter()
            .enumerate()
            .filter(|(r, _)| r & mask != 0)
            .map(|(_, z)| z.norm_sqr())
            .sum())
    }

    /// POVM element `M` on the witness space with `p(ψ) = ⟨ψ|M|ψ⟩`.
    pub fn acceptance_operator(&self) -> HermitianObservable {
        let dh = 1usize << self.witness_qubits;
        let stride = 1usize << self.ancilla_qubits;
        let mask = 1usize << self.output_qubit;
        let rows: Vec<usize> = (0..self.unitary.nrows()).filter(|r| r & mask != 0).collect();
        let sel = CMatrix::from_fn(rows.len(), dh, |r, i| self.unitary[(rows[r], i * stride)]);
        let m = sel.adjoint() * sel;
        HermitianObservable::new(crate::linalg::hermitian_part(&m))
            .expect("Gram matrices are Hermitian")
    }

    /// Largest acceptance probability over all witnesses and a witness
    /// attaining it.
    pub fn max_accept_probability(&self) -> (f64, PureState) {
        let (p, v) = top_eigenpair(self.acceptance_operator().matrix());
        let witness = PureState::normalized(v).expect("eigenvectors are non-zero");
        (p, witness)
    }

    pub fn parse(text: &[u8]) -> Result<Self> {
        let doc: VerifierDoc = from_json(text)?;
        Self::from_circuit(
            doc.witness_qubits,
            doc.ancilla_qubits,
            doc.circuit.to_circuit()?,
            doc.output_qubit,
        )
    }

    pub fn serialize(&self) -> Vec<u8> {
        to_json(&VerifierDoc {
            witness_qubits: self.witness_qubits,
            ancilla_qubits: self.ancilla_qubits,
            circuit: CircuitDoc::from_circuit(&self.circuit),
            output_qubit: self.output_qubit,
        })
    }
}

/// Fixture verifiers with known acceptance operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ToyVerifier {
    /// `V = I`; the output ancilla stays `|0⟩`, so every witness is rejected.
    AlwaysReject { witness_qubits: usize },
    /// Accepts exactly the given witness state; `M = |s⟩⟨s|`.
    TargetState { target: Vec<[f64; 2]> },
    /// One witness and one ancilla; a rotation by `theta` on the ancilla
    /// controlled by the witness, so `M = diag(0, sin²(θ/2))`.
    Rotation { theta: f64 },
    /// Haar-random `V`.
    RandomUnitary {
        witness_qubits: usize,
        ancilla_qubits: usize,
        seed: u64,
    },
}

impl ToyVerifier {
    /// Rotation verifier whose best witness is accepted with probability `p`.
    pub fn rotation_for_accept(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(QctError::InvalidParameter(format!(
                "acceptance probability {p} outside [0, 1]"
            )));
        }
        Ok(ToyVerifier::Rotation {
            theta: 2.0 * p.sqrt().asin(),
        })
    }

    pub fn target_state(target: &PureState) -> Self {
        ToyVerifier::TargetState {
            target: target.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

pub fn make_toy_verifier(spec: &ToyVerifier) -> Result<VerifierCircuit> {
    match spec {
        ToyVerifier::AlwaysReject { witness_qubits } => {
            let total = witness_qubits + 1;
            VerifierCircuit::from_circuit(*witness_qubits, 1, MixedStateCircuit::identity(total), 0)
        }
        ToyVerifier::TargetState { target } => {
            let amps = CVector::from_iterator(
                target.len(),
                target.iter().map(|[re, im]| crate::linalg::c(*re, *im)),
            );
            let s = PureState::new(amps)?;
            if !s.dim().is_power_of_two() || s.dim() < 2 {
                return Err(QctError::InvalidParameter(
                    "target state must span at least one qubit".into(),
                ));
            }
            let h = s.qubits();
            VerifierCircuit::from_unitary(h, 1, target_state_unitary(&s), 0)
        }
        ToyVerifier::Rotation { theta } => {
            let mut b = CircuitBuilder::new(2);
            b.controlled(1, ry(*theta), vec![0]);
            VerifierCircuit::from_circuit(1, 1, b.build()?, 0)
        }
        ToyVerifier::RandomUnitary {
            witness_qubits,
            ancilla_qubits,
            seed,
        } => {
            let total = witness_qubits + ancilla_qubits;
            check_qubits(total, "verifier register")?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let u = random_unitary(1 << total, &mut rng);
            VerifierCircuit::from_unitary(*witness_qubits, *ancilla_qubits, u, 0)
        }
    }
}

/// `F (W ⊗ I_A)` where `W` sends `s` to `|0…0⟩` and `F` flips the single
/// ancilla when the witness register reads `|0…0⟩`.
fn target_state_unitary(s: &PureState) -> CMatrix {
    let d = s.dim();
    // Unitary with first column s: Gram-Schmidt over s and the standard basis.
    let mut cols: Vec<CVector> = vec![s.amplitudes().clone()];
    for k in 0..d {
        if cols.len() == d {
            break;
        }
        let mut v = crate::linalg::basis_vector(d, k);
        for q in &cols {
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let n = v.norm();
        if n > 1e-6 {
            cols.push(v.unscale(n));
        }
    }
    let basis = CMatrix::from_columns(&cols);
    let w = basis.adjoint();
    let wa = w.kronecker(&identity(2));
    let mut flip = identity(2 * d);
    flip[(0, 0)] = ZERO;
    flip[(1, 1)] = ZERO;
    flip[(0, 1)] = crate::linalg::ONE;
    flip[(1, 0)] = crate::linalg::ONE;
    flip * wa
}

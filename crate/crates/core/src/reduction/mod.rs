//! Compilation of a verifier and two circuit families into a
//! circuit-testing instance, and numerical certificates for both sides.
//!
//! The instance circuit acts on `X = F ⊗ H` (witness wires `0..h`, dummy
//! wires `h..h+f`). It introduces the shared ancilla register `A` and a copy
//! qubit, runs `V` on `(H, A)`, copies the verifier's output bit with a
//! CNOT, undoes `V`, then applies `U₀` when the copy reads `|1⟩` (accept)
//! and `U₁` otherwise, and finally traces out the copy and the garbage.

mod certify;
mod family;

pub use certify::{
    certify_no, certify_yes, copy_stage, product_input, wellformedness_check, CTCertificate,
    CopyStage, Side,
    WellformednessReport,
};
pub use family::CircuitFamily;

use serde::{Deserialize, Serialize};

use crate::cap::check_qubits;
use crate::circuit::{
    canonicalize, from_json, to_json, CircuitDoc, GateKind, GateOp, MixedStateCircuit,
};
use crate::error::{QctError, Result};
use crate::state::RegisterLayout;
use crate::verifier::VerifierCircuit;

/// Number of dummy qubits: the smallest `f` with `f ≥ h (1 − δ) / δ`.
pub fn dummy_qubits(witness_qubits: usize, delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(QctError::InvalidParameter(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    let exact = witness_qubits as f64 * (1.0 - delta) / delta;
    if exact > 1e6 {
        return Err(QctError::Capacity {
            context: "dummy register".into(),
            required: exact.ceil().min(usize::MAX as f64) as usize,
            cap: crate::cap::max_qubits(),
        });
    }
    // Guard against 1.0000000000000002-style rounding pushing the ceiling up.
    Ok((exact - 1e-9).ceil().max(0.0) as usize)
}

/// Trace distances of the post-copy state `|φ'⟩` to `|1⟩|φ⟩` and to
/// `|0⟩|φ⟩`, in that order, for acceptance probability `p`.
pub fn copy_distortion_bounds(p: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QctError::InvalidParameter(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    let yes = 2.0 * (1.0 - p * p).max(0.0).sqrt();
    let no = 2.0 * (1.0 - (1.0 - p) * (1.0 - p)).max(0.0).sqrt();
    Ok((yes, no))
}

/// How a branch circuit enters the instance.
enum Branch {
    Block {
        unitary: crate::linalg::CMatrix,
        ancillas: usize,
        outputs: usize,
    },
    /// Keyed template: a layer of keyed Paulis, controlled on the copy qubit.
    Keyed { template: MixedStateCircuit },
}

fn branch(family: &CircuitFamily, qubits: usize) -> Result<Branch> {
    let circuit = family.build(qubits)?;
    if circuit.has_keyed_gates() {
        let plain = circuit.ops().iter().all(|op| {
            matches!(op.kind, GateKind::KeyedPauli { control: None, .. })
        });
        if !plain {
            return Err(QctError::InvalidParameter(
                "keyed branch templates may only contain uncontrolled keyed Paulis".into(),
            ));
        }
        return Ok(Branch::Keyed { template: circuit });
    }
    let canon = canonicalize(&circuit)?;
    Ok(Branch::Block {
        unitary: canon.ordered_unitary(),
        ancillas: canon.ancilla_qubits(),
        outputs: canon.output_qubits(),
    })
}

impl Branch {
    fn ancillas(&self) -> usize {
        match self {
            Branch::Block { ancillas, .. } => *ancillas,
            Branch::Keyed { .. } => 0,
        }
    }

    fn outputs(&self) -> usize {
        match self {
            Branch::Block { outputs, .. } => *outputs,
            Branch::Keyed { template } => template.output_qubits(),
        }
    }

    fn ops(&self, copy: usize, x_wires: &[usize], a_wires: &[usize]) -> Vec<GateOp> {
        match self {
            Branch::Block {
                unitary, ancillas, ..
            } => {
                let mut targets = x_wires.to_vec();
                targets.extend_from_slice(&a_wires[..*ancillas]);
                if targets.is_empty() {
                    return Vec::new();
                }
                vec![GateOp::new(
                    GateKind::Controlled {
                        control: copy,
                        matrix: unitary.clone(),
                    },
                    targets,
                )]
            }
            Branch::Keyed { template } => template
                .ops()
                .iter()
                .map(|op| match &op.kind {
                    GateKind::KeyedPauli {
                        key_bits, inverse, ..
                    } => GateOp::new(
                        GateKind::KeyedPauli {
                            key_bits: *key_bits,
                            control: Some(copy),
                            inverse: *inverse,
                        },
                        vec![x_wires[op.targets[0]]],
                    ),
                    _ => unreachable!("checked when the branch was built"),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CTInstance {
    circuit: MixedStateCircuit,
    c0: CircuitFamily,
    c1: CircuitFamily,
    eps: f64,
    delta: f64,
    witness_qubits: usize,
    dummy_qubits: usize,
    ancilla_qubits: usize,
    /// Working register after ancilla introduction: copy, A, F, H.
    layout: RegisterLayout,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    eps: f64,
    delta: f64,
    c0: CircuitFamily,
    c1: CircuitFamily,
    witness_qubits: usize,
    dummy_qubits: usize,
    ancilla_qubits: usize,
    layout: RegisterLayout,
    circuit: CircuitDoc,
}

pub fn build_ct_circuit(
    v: &VerifierCircuit,
    c0: &CircuitFamily,
    c1: &CircuitFamily,
    eps: f64,
    delta: f64,
) -> Result<CTInstance> {
    if !(0.0..1.0).contains(&eps) {
        return Err(QctError::InvalidParameter(format!(
            "eps must lie in [0, 1), got {eps}"
        )));
    }
    let h = v.witness_qubits();
    let f = dummy_qubits(h, delta)?;
    let n = h + f;
    check_qubits(n, "circuit-testing input")?;
    let b0 = branch(c0, n)?;
    let b1 = branch(c1, n)?;
    if b0.outputs() != b1.outputs() {
        return Err(QctError::mismatch(
            "branch output width",
            b0.outputs(),
            b1.outputs(),
        ));
    }
    let a_v = v.ancilla_qubits();
    let a = a_v.max(b0.ancillas()).max(b1.ancillas());
    check_qubits(n + a + 1, "circuit-testing instance")?;

    let x_wires: Vec<usize> = (0..n).collect();
    let a_wires: Vec<usize> = (n..n + a).collect();
    let copy = n + a;
    let mut v_targets: Vec<usize> = a_wires[..a_v].to_vec();
    v_targets.extend(0..h);
    let out = v_targets[v.output_qubit()];

    let mut ops = vec![
        GateOp::new(GateKind::IntroduceAncillas(a + 1), Vec::new()),
        GateOp::new(GateKind::Unitary(v.unitary().clone()), v_targets.clone()),
        GateOp::new(GateKind::Cnot, vec![out, copy]),
        GateOp::new(GateKind::Unitary(v.unitary().adjoint()), v_targets),
    ];
    ops.extend(b0.ops(copy, &x_wires, &a_wires));
    ops.push(GateOp::new(GateKind::X, vec![copy]));
    ops.extend(b1.ops(copy, &x_wires, &a_wires));
    ops.push(GateOp::new(GateKind::X, vec![copy]));
    let outputs = b0.outputs();
    let mut garbage: Vec<usize> = x_wires.iter().chain(&a_wires).copied().skip(outputs).collect();
    garbage.push(copy);
    ops.push(GateOp::new(GateKind::TraceOut, garbage));

    let mut input_regs = Vec::new();
    if f > 0 {
        input_regs.push(("F", f));
    }
    input_regs.push(("H", h));
    let circuit = MixedStateCircuit::new(n, outputs, ops)?
        .with_layout(RegisterLayout::new(input_regs)?)?;
    let mut regs = vec![("copy", 1)];
    if a > 0 {
        regs.push(("A", a));
    }
    if f > 0 {
        regs.push(("F", f));
    }
    regs.push(("H", h));
    Ok(CTInstance {
        circuit,
        c0: c0.clone(),
        c1: c1.clone(),
        eps,
        delta,
        witness_qubits: h,
        dummy_qubits: f,
        ancilla_qubits: a,
        layout: RegisterLayout::new(regs)?,
    })
}

impl CTInstance {
    pub fn circuit(&self) -> &MixedStateCircuit {
        &self.circuit
    }

    pub fn c0(&self) -> &CircuitFamily {
        &self.c0
    }

    pub fn c1(&self) -> &CircuitFamily {
        &self.c1
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn witness_qubits(&self) -> usize {
        self.witness_qubits
    }

    pub fn dummy_qubits(&self) -> usize {
        self.dummy_qubits
    }

    pub fn ancilla_qubits(&self) -> usize {
        self.ancilla_qubits
    }

    /// `h + f`.
    pub fn input_qubits(&self) -> usize {
        self.witness_qubits + self.dummy_qubits
    }

    /// `h + f + a + 1`.
    pub fn total_qubits(&self) -> usize {
        self.input_qubits() + self.ancilla_qubits + 1
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    /// Wires traced out at the end: the copy qubit and every non-output
    /// wire of the branch circuits.
    pub fn garbage_wires(&self) -> Vec<usize> {
        match self.circuit.ops().last() {
            Some(GateOp {
                kind: GateKind::TraceOut,
                targets,
            }) => targets.clone(),
            _ => Vec::new(),
        }
    }

    /// Branch circuit `C_i` at the instance's input width.
    pub fn branch_circuit(&self, accepting: bool) -> Result<MixedStateCircuit> {
        let fam = if accepting { &self.c0 } else { &self.c1 };
        fam.build(self.input_qubits())
    }

    pub fn parse(text: &[u8]) -> Result<Self> {
        let doc: InstanceDoc = from_json(text)?;
        let circuit = doc.circuit.to_circuit()?;
        let n = doc.witness_qubits + doc.dummy_qubits;
        if circuit.input_qubits() != n {
            return Err(QctError::mismatch("instance input", n, circuit.input_qubits()));
        }
        if doc.layout.total_qubits() != n + doc.ancilla_qubits + 1 {
            return Err(QctError::mismatch(
                "instance layout",
                n + doc.ancilla_qubits + 1,
                doc.layout.total_qubits(),
            ));
        }
        if dummy_qubits(doc.witness_qubits, doc.delta)? != doc.dummy_qubits {
            return Err(QctError::InvalidParameter(
                "dummy register size does not match delta".into(),
            ));
        }
        let mut input_regs = Vec::new();
        if doc.dummy_qubits > 0 {
            input_regs.push(("F", doc.dummy_qubits));
        }
        input_regs.push(("H", doc.witness_qubits));
        let circuit = circuit.with_layout(RegisterLayout::new(input_regs)?)?;
        Ok(CTInstance {
            circuit,
            c0: doc.c0,
            c1: doc.c1,
            eps: doc.eps,
            delta: doc.delta,
            witness_qubits: doc.witness_qubits,
            dummy_qubits: doc.dummy_qubits,
            ancilla_qubits: doc.ancilla_qubits,
            layout: doc.layout,
        })
    }

    pub fn serialize(&self) -> Vec<u8> {
        to_json(&InstanceDoc {
            eps: self.eps,
            delta: self.delta,
            c0: self.c0.clone(),
            c1: self.c1.clone(),
            witness_qubits: self.witness_qubits,
            dummy_qubits: self.dummy_qubits,
            ancilla_qubits: self.ancilla_qubits,
            layout: self.layout.clone(),
            circuit: CircuitDoc::from_circuit(&self.circuit),
        })
    }
}

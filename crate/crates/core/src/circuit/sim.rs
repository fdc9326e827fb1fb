use crate::cap::check_qubits;
use crate::channel::QuantumChannel;
use crate::error::{QctError, Result};
use crate::linalg::{
    conjugate_by_gate, identity, left_multiply_gate, partial_trace_qubits, CMatrix, ONE, ZERO,
};
use crate::state::{prepend_zero_qubits, DensityOperator};

use super::{GateKind, GateOp, MixedStateCircuit};

/// Applies `c` to an operator on `reference_qubits + input_qubits` qubits.
/// The reference occupies the low qubits and circuit wire `w` is qubit
/// `reference_qubits + w`. Works for any operator, positive or not.
pub(crate) fn evaluate_operator(
    c: &MixedStateCircuit,
    m: &CMatrix,
    reference_qubits: usize,
) -> Result<CMatrix> {
    let expected = 1usize << (reference_qubits + c.input_qubits());
    if m.nrows() != expected || m.ncols() != expected {
        return Err(QctError::mismatch("circuit evaluation input", expected, m.nrows()));
    }
    check_qubits(reference_qubits + c.peak_qubits(), "circuit evaluation")?;
    let mut state = m.clone();
    let mut live = c.input_qubits();
    for op in c.ops() {
        match &op.kind {
            GateKind::IntroduceAncillas(k) => {
                state = prepend_zero_qubits(&state, *k)?;
                live += k;
            }
            GateKind::TraceOut => {
                let discard: Vec<usize> = op.targets.iter().map(|w| w + reference_qubits).collect();
                state = partial_trace_qubits(&state, reference_qubits + live, &discard);
                live -= op.targets.len();
            }
            GateKind::KeyedPauli { .. } => return Err(QctError::UnresolvedKey),
            kind => {
                let (u, controls, targets) = kind
                    .unitary_action(&op.targets)
                    .expect("unitary gate kinds have an action");
                let shift = |ws: &[usize]| -> Vec<usize> {
                    ws.iter().map(|w| w + reference_qubits).collect()
                };
                conjugate_by_gate(&mut state, &u, &shift(targets), &shift(&controls));
            }
        }
    }
    Ok(state)
}

/// `(c ⊗ id_R)(ρ)` with the reference on the low `reference_qubits` qubits.
pub fn evaluate(
    c: &MixedStateCircuit,
    rho: &DensityOperator,
    reference_qubits: usize,
) -> Result<DensityOperator> {
    let out = evaluate_operator(c, rho.matrix(), reference_qubits)?;
    Ok(DensityOperator::from_matrix_unchecked(out))
}

/// A circuit in the form "introduce all ancillas, apply one unitary, trace
/// out garbage". Physical wires `0..input_qubits` are the inputs and the
/// ancillas follow above them.
#[derive(Clone, Debug)]
pub struct CanonicalCircuit {
    input_qubits: usize,
    ancilla_qubits: usize,
    unitary: CMatrix,
    output_wires: Vec<usize>,
    traced_wires: Vec<usize>,
}

impl CanonicalCircuit {
    pub fn input_qubits(&self) -> usize {
        self.input_qubits
    }

    pub fn ancilla_qubits(&self) -> usize {
        self.ancilla_qubits
    }

    pub fn total_qubits(&self) -> usize {
        self.input_qubits + self.ancilla_qubits
    }

    pub fn output_qubits(&self) -> usize {
        self.output_wires.len()
    }

    /// Unitary on inputs ⊗ ancillas in physical wire order.
    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    /// Physical wires that survive, in output order.
    pub fn output_wires(&self) -> &[usize] {
        &self.output_wires
    }

    pub fn traced_wires(&self) -> &[usize] {
        &self.traced_wires
    }

    /// Wire relabelling sending output `i` to wire `i` and the traced wires
    /// to the wires above the outputs.
    fn output_permutation(&self) -> Vec<usize> {
        output_permutation(self.total_qubits(), &self.output_wires, &self.traced_wires)
    }

    /// The unitary followed by the relabelling that puts the outputs on the
    /// low wires and the garbage on top.
    pub fn ordered_unitary(&self) -> CMatrix {
        permute_rows(&self.unitary, &self.output_permutation())
    }

    /// Equivalent mixed-state circuit: ancillas, one unitary block, trace.
    pub fn to_circuit(&self) -> Result<MixedStateCircuit> {
        let total = self.total_qubits();
        let mut ops = Vec::new();
        if self.ancilla_qubits > 0 {
            ops.push(GateOp::new(
                GateKind::IntroduceAncillas(self.ancilla_qubits),
                Vec::new(),
            ));
        }
        if total > 0 {
            ops.push(GateOp::new(
                GateKind::Unitary(self.ordered_unitary()),
                (0..total).collect(),
            ));
        }
        if !self.traced_wires.is_empty() {
            ops.push(GateOp::new(
                GateKind::TraceOut,
                (self.output_qubits()..total).collect(),
            ));
        }
        MixedStateCircuit::new(self.input_qubits, self.output_qubits(), ops)
    }
}

fn output_permutation(total: usize, outputs: &[usize], traced: &[usize]) -> Vec<usize> {
    let mut perm = vec![0; total];
    for (i, &w) in outputs.iter().enumerate() {
        perm[w] = i;
    }
    for (j, &w) in traced.iter().enumerate() {
        perm[w] = outputs.len() + j;
    }
    perm
}

fn scatter_perm(i: usize, perm: &[usize]) -> usize {
    perm.iter()
        .enumerate()
        .fold(0, |acc, (q, &dst)| acc | (((i >> q) & 1) << dst))
}

/// Wire bookkeeping shared by canonicalization and Choi extraction: the
/// physical wire of every op target, the number of ancillas and the final
/// output/garbage split.
struct PhysicalLayout {
    ops: Vec<(CMatrix, Vec<usize>, Vec<usize>)>,
    ancillas: usize,
    outputs: Vec<usize>,
    traced: Vec<usize>,
}

fn physical_layout(c: &MixedStateCircuit) -> Result<PhysicalLayout> {
    let mut live: Vec<usize> = (0..c.input_qubits()).collect();
    let mut next = c.input_qubits();
    let mut traced = Vec::new();
    let mut ops = Vec::new();
    for op in c.ops() {
        match &op.kind {
            GateKind::IntroduceAncillas(k) => {
                live.extend(next..next + k);
                next += k;
            }
            GateKind::TraceOut => {
                let mut gone: Vec<usize> = op.targets.iter().map(|&w| live[w]).collect();
                traced.append(&mut gone.clone());
                gone.sort_unstable();
                live.retain(|w| gone.binary_search(w).is_err());
            }
            GateKind::KeyedPauli { .. } => return Err(QctError::UnresolvedKey),
            kind => {
                let (u, controls, targets) = kind
                    .unitary_action(&op.targets)
                    .expect("unitary gate kinds have an action");
                let map = |ws: &[usize]| -> Vec<usize> { ws.iter().map(|&w| live[w]).collect() };
                ops.push((u.into_owned(), map(targets), map(&controls)));
            }
        }
    }
    check_qubits(next, "canonical circuit")?;
    Ok(PhysicalLayout {
        ops,
        ancillas: next - c.input_qubits(),
        outputs: live,
        traced,
    })
}

/// Hoists every ancilla to the front and defers every trace to the end.
pub fn canonicalize(c: &MixedStateCircuit) -> Result<CanonicalCircuit> {
    let layout = physical_layout(c)?;
    let total = c.input_qubits() + layout.ancillas;
    let mut unitary = identity(1 << total);
    for (u, targets, controls) in &layout.ops {
        left_multiply_gate(&mut unitary, u, targets, controls);
    }
    Ok(CanonicalCircuit {
        input_qubits: c.input_qubits(),
        ancilla_qubits: layout.ancillas,
        unitary,
        output_wires: layout.outputs,
        traced_wires: layout.traced,
    })
}

/// Choi matrix (output ⊗ input, trace `2^input_qubits`) of the channel the
/// circuit implements.
pub fn to_channel(c: &MixedStateCircuit) -> Result<QuantumChannel> {
    check_qubits(c.input_qubits() + c.output_qubits(), "Choi matrix")?;
    let layout = physical_layout(c)?;
    let n = c.input_qubits();
    let total = n + layout.ancillas;
    let d_in = 1usize << n;
    let d_out = 1usize << c.output_qubits();
    // Columns are the images of |i⟩ ⊗ |0…0⟩, i.e. the Stinespring isometry.
    let mut iso = CMatrix::zeros(1 << total, d_in);
    for i in 0..d_in {
        iso[(i, i)] = ONE;
    }
    for (u, targets, controls) in &layout.ops {
        left_multiply_gate(&mut iso, u, targets, controls);
    }
    let iso = permute_rows(&iso, &output_permutation(total, &layout.outputs, &layout.traced));
    let garbage = 1usize << layout.traced.len();
    // J[(o,s),(o',s')] = Σ_g K_g[o,s] conj(K_g[o',s'])
    let kd = d_out * d_in;
    let mut choi = CMatrix::zeros(kd, kd);
    for g in 0..garbage {
        let kraus = CMatrix::from_fn(kd, 1, |idx, _| {
            let (o, s) = (idx / d_in, idx % d_in);
            iso[(o + d_out * g, s)]
        });
        if kraus.iter().all(|&x| x == ZERO) {
            continue;
        }
        choi += &kraus * kraus.adjoint();
    }
    QuantumChannel::from_choi_unchecked(d_in, d_out, choi)
}

fn permute_rows(m: &CMatrix, perm: &[usize]) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for row in 0..m.nrows() {
        out.set_row(scatter_perm(row, perm), &m.row(row));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{depolarizer_circuit, pauli_x, CircuitBuilder};
    use crate::linalg::{max_abs_diff, projector, random_unitary};
    use crate::state::{random_density_with, random_pure_state, tensor, PureState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mid_circuit_ancilla() -> MixedStateCircuit {
        let mut b = CircuitBuilder::new(1);
        b.h(0).ancillas(1).cnot(0, 1).trace_out(vec![0]).h(0);
        b.build().unwrap()
    }

    #[test]
    fn identity_evaluates_to_input() {
        let rho = random_pure_state(4, 3).density();
        let out = evaluate(&MixedStateCircuit::identity(2), &rho, 0).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) <= 1e-12);
    }

    #[test]
    fn x_flips_zero() {
        let mut b = CircuitBuilder::new(1);
        b.x(0);
        let out = evaluate(&b.build().unwrap(), &PureState::basis(2, 0).density(), 0).unwrap();
        assert!(max_abs_diff(out.matrix(), &PureState::basis(2, 1).projector()) <= 1e-15);
    }

    #[test]
    fn depolarizer_outputs_maximally_mixed() {
        let c = depolarizer_circuit(1).unwrap();
        for seed in 0..5 {
            let rho = random_pure_state(2, seed).density();
            let out = evaluate(&c, &rho, 0).unwrap();
            assert!(max_abs_diff(out.matrix(), &identity(2).scale(0.5)) <= 1e-9);
        }
    }

    #[test]
    fn identity_choi_is_unnormalized_bell() {
        let ch = to_channel(&MixedStateCircuit::identity(1)).unwrap();
        let bell = crate::linalg::max_entangled_unnormalized(2);
        assert!(max_abs_diff(ch.choi(), &projector(&bell)) <= 1e-15);
    }

    #[test]
    fn depolarizer_choi_is_scaled_identity() {
        let ch = to_channel(&depolarizer_circuit(1).unwrap()).unwrap();
        assert!(max_abs_diff(ch.choi(), &identity(4).scale(0.5)) <= 1e-12);
    }

    #[test]
    fn canonical_form_hoists_ancilla() {
        let c = mid_circuit_ancilla();
        let canon = canonicalize(&c).unwrap();
        assert_eq!(canon.ancilla_qubits(), 1);
        assert_eq!(canon.output_wires(), &[1]);
        assert_eq!(canon.traced_wires(), &[0]);
        let round = canon.to_circuit().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let rho = random_density_with(2, &mut rng);
            let a = evaluate(&c, &rho, 0).unwrap();
            let b = evaluate(&round, &rho, 0).unwrap();
            assert!(max_abs_diff(a.matrix(), b.matrix()) <= 1e-9);
        }
    }

    #[test]
    fn plain_unitary_canonical_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(4, &mut rng);
        let mut b = CircuitBuilder::new(2);
        b.unitary(u.clone(), vec![0, 1]);
        let canon = canonicalize(&b.build().unwrap()).unwrap();
        assert_eq!(canon.ancilla_qubits(), 0);
        assert!(max_abs_diff(canon.unitary(), &u) <= 1e-12);
    }

    #[test]
    fn reference_is_untouched() {
        let mut b = CircuitBuilder::new(1);
        b.x(0);
        let c = b.build().unwrap();
        let sys = PureState::basis(2, 0);
        let reference = random_pure_state(2, 9);
        let input = tensor(&sys, &reference).unwrap().density();
        let out = evaluate(&c, &input, 1).unwrap();
        let expected = tensor(&PureState::basis(2, 1), &reference).unwrap().projector();
        assert!(max_abs_diff(out.matrix(), &expected) <= 1e-12);
    }

    #[test]
    fn controlled_block_on_high_control() {
        let mut b = CircuitBuilder::new(2);
        b.controlled(1, pauli_x(), vec![0]);
        let c = b.build().unwrap();
        let out = evaluate(&c, &PureState::basis(4, 2).density(), 0).unwrap();
        assert!((out.matrix()[(3, 3)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn keyed_template_must_be_instantiated() {
        let t = crate::circuit::pauli_keyed_template(1, false).unwrap();
        assert_eq!(to_channel(&t).unwrap_err(), QctError::UnresolvedKey);
    }
}

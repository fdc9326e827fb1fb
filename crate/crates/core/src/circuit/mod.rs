//! Mixed-state circuit IR: unitary gates plus ancilla introduction and
//! trace-out pseudo-gates.
//!
//! Wires are always numbered `0..live`. Introducing `k` ancillas appends
//! wires `live..live + k` in `|0⟩`; tracing out a set of wires removes them
//! and renumbers the survivors compactly in their original order. Wire `w`
//! is qubit `w` of the circuit register (wire 0 is the least significant
//! index bit). For multi-qubit blocks, `targets[j]` carries bit `j` of the
//! block's local index.

mod json;
mod sim;

pub use json::{parse_circuit, serialize_circuit, CircuitDoc, OpDoc};
pub(crate) use json::{from_json, to_json};
pub use sim::{canonicalize, evaluate, to_channel, CanonicalCircuit};

use std::f64::consts::FRAC_1_SQRT_2;

use crate::cap::check_qubits;
use crate::error::{QctError, Result};
use crate::linalg::{c, is_unitary, CMatrix, ONE, ZERO};
use crate::state::{RegisterLayout, TAU_UNIT};

#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    H,
    S,
    T,
    X,
    Y,
    Z,
    /// `targets = [control, target]`.
    Cnot,
    /// `targets = [control, control, target]`.
    Ccnot,
    Unitary(CMatrix),
    /// Applies the block to `targets` when the `control` wire is `|1⟩`.
    Controlled { control: usize, matrix: CMatrix },
    IntroduceAncillas(usize),
    /// Removes every wire listed in `targets`.
    TraceOut,
    /// Template placeholder expanded per key to `X^x Z^z` on its single
    /// target, with `x` and `z` read from the two listed key bits. With
    /// `inverse` the expansion is `Z^z X^x`.
    KeyedPauli {
        key_bits: [usize; 2],
        control: Option<usize>,
        inverse: bool,
    },
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::T => "T",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::Cnot => "CNOT",
            GateKind::Ccnot => "CCNOT",
            GateKind::Unitary(_) => "unitary",
            GateKind::Controlled { .. } => "controlled",
            GateKind::IntroduceAncillas(_) => "ancilla",
            GateKind::TraceOut => "traceout",
            GateKind::KeyedPauli { .. } => "keyed_pauli",
        }
    }

    /// Matrix and the split of `targets` into (controls, block targets) for
    /// the unitary gate kinds.
    pub(crate) fn unitary_action<'a>(
        &'a self,
        targets: &'a [usize],
    ) -> Option<(std::borrow::Cow<'a, CMatrix>, Vec<usize>, &'a [usize])> {
        use std::borrow::Cow;
        let single = |m: CMatrix| Some((Cow::Owned(m), Vec::new(), targets));
        match self {
            GateKind::H => single(hadamard()),
            GateKind::S => single(phase(c(0.0, 1.0))),
            GateKind::T => single(phase(c(FRAC_1_SQRT_2, FRAC_1_SQRT_2))),
            GateKind::X => single(pauli_x()),
            GateKind::Y => single(pauli_y()),
            GateKind::Z => single(pauli_z()),
            GateKind::Cnot => Some((Cow::Owned(pauli_x()), vec![targets[0]], &targets[1..])),
            GateKind::Ccnot => Some((
                Cow::Owned(pauli_x()),
                vec![targets[0], targets[1]],
                &targets[2..],
            )),
            GateKind::Unitary(m) => Some((Cow::Borrowed(m), Vec::new(), targets)),
            GateKind::Controlled { control, matrix } => {
                Some((Cow::Borrowed(matrix), vec![*control], targets))
            }
            GateKind::IntroduceAncillas(_) | GateKind::TraceOut | GateKind::KeyedPauli { .. } => {
                None
            }
        }
    }
}

pub fn hadamard() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ONE, ONE, -ONE]).scale(FRAC_1_SQRT_2)
}

fn phase(p: num_complex::Complex64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, p])
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
}

impl GateOp {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Self {
        GateOp { kind, targets }
    }

    fn expected_arity(&self) -> Option<usize> {
        match &self.kind {
            GateKind::H | GateKind::S | GateKind::T | GateKind::X | GateKind::Y | GateKind::Z => {
                Some(1)
            }
            GateKind::Cnot => Some(2),
            GateKind::Ccnot => Some(3),
            GateKind::KeyedPauli { .. } => Some(1),
            GateKind::IntroduceAncillas(_) => Some(0),
            GateKind::Unitary(m) | GateKind::Controlled { matrix: m, .. } => {
                let dim = m.nrows();
                if dim.is_power_of_two() && dim >= 2 {
                    Some(dim.trailing_zeros() as usize)
                } else {
                    None
                }
            }
            GateKind::TraceOut => None,
        }
    }

    /// Checks the op against the number of live wires and returns the live
    /// count after it.
    fn check(&self, index: usize, live: usize) -> Result<usize> {
        let invalid = |reason: String| QctError::InvalidOp { index, reason };
        if let Some(arity) = self.expected_arity() {
            if self.targets.len() != arity {
                return Err(invalid(format!(
                    "{} expects {arity} target(s), got {}",
                    self.kind.name(),
                    self.targets.len()
                )));
            }
        }
        let mut seen = vec![false; live];
        for &t in &self.targets {
            if t >= live {
                return Err(invalid(format!("wire {t} is not live ({live} live wires)")));
            }
            if seen[t] {
                return Err(invalid(format!("wire {t} listed twice")));
            }
            seen[t] = true;
        }
        match &self.kind {
            GateKind::Unitary(m) | GateKind::Controlled { matrix: m, .. } => {
                if !m.is_square() || self.expected_arity().is_none() {
                    return Err(invalid("block matrix must be square with power-of-two size".into()));
                }
                if !is_unitary(m, TAU_UNIT) {
                    return Err(invalid("block matrix is not unitary".into()));
                }
            }
            _ => {}
        }
        let control = match &self.kind {
            GateKind::Controlled { control, .. } => Some(*control),
            GateKind::KeyedPauli { control, .. } => *control,
            _ => None,
        };
        if let Some(ctrl) = control {
            if ctrl >= live {
                return Err(invalid(format!("control wire {ctrl} is not live")));
            }
            if self.targets.contains(&ctrl) {
                return Err(invalid(format!("control wire {ctrl} is also a target")));
            }
        }
        match &self.kind {
            GateKind::IntroduceAncillas(k) => Ok(live + k),
            GateKind::TraceOut => {
                if self.targets.is_empty() {
                    return Err(invalid("traceout needs at least one wire".into()));
                }
                Ok(live - self.targets.len())
            }
            _ => Ok(live),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixedStateCircuit {
    input_qubits: usize,
    output_qubits: usize,
    ops: Vec<GateOp>,
    layout: Option<RegisterLayout>,
}

impl MixedStateCircuit {
    /// Builds a circuit, replaying the ops to check every wire reference and
    /// the declared output width.
    pub fn new(input_qubits: usize, output_qubits: usize, ops: Vec<GateOp>) -> Result<Self> {
        let (out, _peak) = replay(input_qubits, &ops)?;
        if out != output_qubits {
            return Err(QctError::InvalidParameter(format!(
                "circuit leaves {out} live wires but declares {output_qubits} outputs"
            )));
        }
        Ok(MixedStateCircuit {
            input_qubits,
            output_qubits,
            ops,
            layout: None,
        })
    }

    pub fn identity(qubits: usize) -> Self {
        MixedStateCircuit {
            input_qubits: qubits,
            output_qubits: qubits,
            ops: Vec::new(),
            layout: None,
        }
    }

    pub fn with_layout(mut self, layout: RegisterLayout) -> Result<Self> {
        if layout.total_qubits() != self.input_qubits {
            return Err(QctError::mismatch(
                "circuit layout",
                self.input_qubits,
                layout.total_qubits(),
            ));
        }
        self.layout = Some(layout);
        Ok(self)
    }

    pub fn input_qubits(&self) -> usize {
        self.input_qubits
    }

    pub fn output_qubits(&self) -> usize {
        self.output_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn layout(&self) -> Option<&RegisterLayout> {
        self.layout.as_ref()
    }

    /// Largest number of simultaneously live wires.
    pub fn peak_qubits(&self) -> usize {
        replay(self.input_qubits, &self.ops)
            .map(|(_, peak)| peak)
            .unwrap_or(self.input_qubits)
    }

    pub fn has_keyed_gates(&self) -> bool {
        self.ops
            .iter()
            .any(|op| matches!(op.kind, GateKind::KeyedPauli { .. }))
    }

    /// Number of key bits referenced by keyed placeholders.
    pub fn key_bits_used(&self) -> usize {
        self.ops
            .iter()
            .filter_map(|op| match &op.kind {
                GateKind::KeyedPauli { key_bits, .. } => Some(key_bits[0].max(key_bits[1]) + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Expands keyed placeholders for a concrete key.
    pub fn instantiate(&self, key: u64) -> MixedStateCircuit {
        let mut ops = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            match &op.kind {
                GateKind::KeyedPauli {
                    key_bits,
                    control,
                    inverse,
                } => {
                    let x = (key >> key_bits[0]) & 1 == 1;
                    let z = (key >> key_bits[1]) & 1 == 1;
                    let target = op.targets[0];
                    let gate = |m: CMatrix| match control {
                        Some(ctrl) => GateOp::new(
                            GateKind::Controlled {
                                control: *ctrl,
                                matrix: m,
                            },
                            vec![target],
                        ),
                        None => GateOp::new(GateKind::Unitary(m), vec![target]),
                    };
                    let plain = |k: GateKind| match control {
                        Some(_) => None,
                        None => Some(GateOp::new(k, vec![target])),
                    };
                    let mut push = |is_x: bool| {
                        let op = if is_x {
                            plain(GateKind::X).unwrap_or_else(|| gate(pauli_x()))
                        } else {
                            plain(GateKind::Z).unwrap_or_else(|| gate(pauli_z()))
                        };
                        ops.push(op);
                    };
                    // X^x Z^z applies Z first.
                    if *inverse {
                        if x {
                            push(true);
                        }
                        if z {
                            push(false);
                        }
                    } else {
                        if z {
                            push(false);
                        }
                        if x {
                            push(true);
                        }
                    }
                }
                _ => ops.push(op.clone()),
            }
        }
        MixedStateCircuit {
            input_qubits: self.input_qubits,
            output_qubits: self.output_qubits,
            ops,
            layout: self.layout.clone(),
        }
    }

    /// Sequential composition: `self` first, then `next`.
    pub fn then(&self, next: &MixedStateCircuit) -> Result<MixedStateCircuit> {
        if next.input_qubits != self.output_qubits {
            return Err(QctError::mismatch(
                "circuit composition",
                self.output_qubits,
                next.input_qubits,
            ));
        }
        let mut ops = self.ops.clone();
        ops.extend(next.ops.iter().cloned());
        MixedStateCircuit::new(self.input_qubits, next.output_qubits, ops)
    }
}

fn replay(input_qubits: usize, ops: &[GateOp]) -> Result<(usize, usize)> {
    let mut live = input_qubits;
    let mut peak = live;
    for (index, op) in ops.iter().enumerate() {
        live = op.check(index, live)?;
        peak = peak.max(live);
    }
    check_qubits(peak, "circuit width")?;
    Ok((live, peak))
}

/// Accumulates ops single-threaded; `build` validates the whole sequence.
#[derive(Clone, Debug)]
pub struct CircuitBuilder {
    input_qubits: usize,
    live: usize,
    ops: Vec<GateOp>,
}

impl CircuitBuilder {
    pub fn new(input_qubits: usize) -> Self {
        CircuitBuilder {
            input_qubits,
            live: input_qubits,
            ops: Vec::new(),
        }
    }

    pub fn live(&self) -> usize {
        self.live
    }

    pub fn push(&mut self, kind: GateKind, targets: Vec<usize>) -> &mut Self {
        match &kind {
            GateKind::IntroduceAncillas(k) => self.live += k,
            GateKind::TraceOut => self.live = self.live.saturating_sub(targets.len()),
            _ => {}
        }
        self.ops.push(GateOp::new(kind, targets));
        self
    }

    pub fn h(&mut self, w: usize) -> &mut Self {
        self.push(GateKind::H, vec![w])
    }

    pub fn x(&mut self, w: usize) -> &mut Self {
        self.push(GateKind::X, vec![w])
    }

    pub fn z(&mut self, w: usize) -> &mut Self {
        self.push(GateKind::Z, vec![w])
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> &mut Self {
        self.push(GateKind::Cnot, vec![control, target])
    }

    pub fn unitary(&mut self, matrix: CMatrix, targets: Vec<usize>) -> &mut Self {
        self.push(GateKind::Unitary(matrix), targets)
    }

    pub fn controlled(&mut self, control: usize, matrix: CMatrix, targets: Vec<usize>) -> &mut Self {
        self.push(GateKind::Controlled { control, matrix }, targets)
    }

    pub fn ancillas(&mut self, count: usize) -> &mut Self {
        self.push(GateKind::IntroduceAncillas(count), Vec::new())
    }

    pub fn trace_out(&mut self, wires: Vec<usize>) -> &mut Self {
        self.push(GateKind::TraceOut, wires)
    }

    pub fn keyed_pauli(
        &mut self,
        target: usize,
        key_bits: [usize; 2],
        control: Option<usize>,
        inverse: bool,
    ) -> &mut Self {
        self.push(
            GateKind::KeyedPauli {
                key_bits,
                control,
                inverse,
            },
            vec![target],
        )
    }

    pub fn build(&self) -> Result<MixedStateCircuit> {
        MixedStateCircuit::new(self.input_qubits, self.live, self.ops.clone())
    }
}

/// Single-qubit Z rotation `diag(e^{-iθ/2}, e^{iθ/2})`.
pub fn rz(theta: f64) -> CMatrix {
    let h = theta / 2.0;
    CMatrix::from_row_slice(2, 2, &[c(h.cos(), -h.sin()), ZERO, ZERO, c(h.cos(), h.sin())])
}

/// Single-qubit Y rotation.
pub fn ry(theta: f64) -> CMatrix {
    let (s, co) = (theta / 2.0).sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

/// Depolarizer on `qubits` wires: key qubits prepared in `|+⟩`
/// control an X and a Z on each message qubit and are then traced out.
pub fn depolarizer_circuit(qubits: usize) -> Result<MixedStateCircuit> {
    let mut b = CircuitBuilder::new(qubits);
    b.ancillas(2 * qubits);
    for k in 0..2 * qubits {
        b.h(qubits + k);
    }
    for q in 0..qubits {
        b.controlled(qubits + 2 * q, pauli_x(), vec![q]);
    }
    for q in 0..qubits {
        b.controlled(qubits + 2 * q + 1, pauli_z(), vec![q]);
    }
    b.trace_out((qubits..3 * qubits).collect());
    b.build()
}

/// Completely depolarizing map from `in_qubits` to `out_qubits` wires.
pub fn depolarizing_circuit(in_qubits: usize, out_qubits: usize) -> Result<MixedStateCircuit> {
    if out_qubits < in_qubits {
        return Err(QctError::InvalidParameter(format!(
            "depolarizing output ({out_qubits}) must be at least the input ({in_qubits})"
        )));
    }
    let mut pad = CircuitBuilder::new(in_qubits);
    if out_qubits > in_qubits {
        pad.ancillas(out_qubits - in_qubits);
    }
    pad.build()?.then(&depolarizer_circuit(out_qubits)?)
}

/// Circuit applying `X^{x_i} Z^{z_i}` to qubit `i`, with `x_i` = key bit
/// `2i` and `z_i` = key bit `2i + 1`.
pub fn pauli_keyed(qubits: usize, key: u64) -> Result<MixedStateCircuit> {
    let bits = 2 * qubits;
    if bits < 64 && key >= 1u64 << bits {
        return Err(QctError::KeyOutOfRange { key, bits });
    }
    Ok(pauli_keyed_template(qubits, false)?.instantiate(key))
}

/// Inverse of [`pauli_keyed`]: `Z^{z_i} X^{x_i}` per qubit.
pub fn pauli_keyed_inverse(qubits: usize, key: u64) -> Result<MixedStateCircuit> {
    let bits = 2 * qubits;
    if bits < 64 && key >= 1u64 << bits {
        return Err(QctError::KeyOutOfRange { key, bits });
    }
    Ok(pauli_keyed_template(qubits, true)?.instantiate(key))
}

pub fn pauli_keyed_template(qubits: usize, inverse: bool) -> Result<MixedStateCircuit> {
    let mut b = CircuitBuilder::new(qubits);
    for q in 0..qubits {
        b.keyed_pauli(q, [2 * q, 2 * q + 1], None, inverse);
    }
    b.build()
}

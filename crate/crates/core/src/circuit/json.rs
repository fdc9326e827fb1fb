use serde::{Deserialize, Serialize};

use crate::error::{QctError, Result};
use crate::linalg::{c, CMatrix};

use super::{GateKind, GateOp, MixedStateCircuit};

/// On-disk form of a circuit. Other documents embed it as a nested object.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CircuitDoc {
    pub input_qubits: usize,
    pub output_qubits: usize,
    pub ops: Vec<OpDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OpDoc {
    pub kind: String,
    #[serde(default)]
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_bits: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub inverse: bool,
}

impl OpDoc {
    fn bare(kind: &str, targets: Vec<usize>) -> Self {
        OpDoc {
            kind: kind.to_string(),
            targets,
            matrix: None,
            control: None,
            count: None,
            key_bits: None,
            inverse: false,
        }
    }

    fn to_op(&self, index: usize) -> Result<GateOp> {
        let invalid = |reason: &str| QctError::InvalidOp {
            index,
            reason: reason.to_string(),
        };
        let matrix = || -> Result<CMatrix> {
            let entries = self
                .matrix
                .as_ref()
                .ok_or_else(|| invalid("missing `matrix`"))?;
            let dim = (entries.len() as f64).sqrt().round() as usize;
            if dim * dim != entries.len() || dim == 0 {
                return Err(invalid("`matrix` must hold a square number of entries"));
            }
            let data: Vec<_> = entries.iter().map(|[re, im]| c(*re, *im)).collect();
            Ok(CMatrix::from_row_slice(dim, dim, &data))
        };
        let kind = match self.kind.as_str() {
            "H" => GateKind::H,
            "S" => GateKind::S,
            "T" => GateKind::T,
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "CNOT" => GateKind::Cnot,
            "CCNOT" => GateKind::Ccnot,
            "unitary" => GateKind::Unitary(matrix()?),
            "controlled" => GateKind::Controlled {
                control: self.control.ok_or_else(|| invalid("missing `control`"))?,
                matrix: matrix()?,
            },
            "ancilla" => {
                GateKind::IntroduceAncillas(self.count.ok_or_else(|| invalid("missing `count`"))?)
            }
            "traceout" => GateKind::TraceOut,
            "keyed_pauli" => GateKind::KeyedPauli {
                key_bits: self.key_bits.ok_or_else(|| invalid("missing `key_bits`"))?,
                control: self.control,
                inverse: self.inverse,
            },
            other => {
                return Err(QctError::UnsupportedGate {
                    index,
                    kind: other.to_string(),
                })
            }
        };
        Ok(GateOp::new(kind, self.targets.clone()))
    }

    fn from_op(op: &GateOp) -> Self {
        let mut doc = OpDoc::bare(op.kind.name(), op.targets.clone());
        let flatten = |m: &CMatrix| -> Vec<[f64; 2]> {
            let mut out = Vec::with_capacity(m.len());
            for r in 0..m.nrows() {
                for col in 0..m.ncols() {
                    let z = m[(r, col)];
                    out.push([z.re, z.im]);
                }
            }
            out
        };
        match &op.kind {
            GateKind::Unitary(m) => doc.matrix = Some(flatten(m)),
            GateKind::Controlled { control, matrix } => {
                doc.control = Some(*control);
                doc.matrix = Some(flatten(matrix));
            }
            GateKind::IntroduceAncillas(k) => doc.count = Some(*k),
            GateKind::KeyedPauli {
                key_bits,
                control,
                inverse,
            } => {
                doc.key_bits = Some(*key_bits);
                doc.control = *control;
                doc.inverse = *inverse;
            }
            _ => {}
        }
        doc
    }
}

impl CircuitDoc {
    pub fn from_circuit(circuit: &MixedStateCircuit) -> Self {
        CircuitDoc {
            input_qubits: circuit.input_qubits(),
            output_qubits: circuit.output_qubits(),
            ops: circuit.ops().iter().map(OpDoc::from_op).collect(),
        }
    }

    pub fn to_circuit(&self) -> Result<MixedStateCircuit> {
        let ops = self
            .ops
            .iter()
            .enumerate()
            .map(|(i, op)| op.to_op(i))
            .collect::<Result<Vec<_>>>()?;
        MixedStateCircuit::new(self.input_qubits, self.output_qubits, ops)
    }
}

/// Deserializes a JSON document, reporting the field path and line on failure.
pub(crate) fn from_json<T: serde::de::DeserializeOwned>(text: &[u8]) -> Result<T> {
    let mut de = serde_json::Deserializer::from_slice(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        QctError::Parse {
            path,
            message: format!("{inner} (line {}, column {})", inner.line(), inner.column()),
        }
    })
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("documents serialize");
    out.push(b'\n');
    out
}

pub fn parse_circuit(text: &[u8]) -> Result<MixedStateCircuit> {
    from_json::<CircuitDoc>(text)?.to_circuit()
}

pub fn serialize_circuit(circuit: &MixedStateCircuit) -> Vec<u8> {
    to_json(&CircuitDoc::from_circuit(circuit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{depolarizer_circuit, pauli_keyed_template, ry, CircuitBuilder};

    #[test]
    fn round_trip() {
        let mut b = CircuitBuilder::new(2);
        b.h(0)
            .cnot(0, 1)
            .ancillas(1)
            .controlled(2, ry(0.3), vec![1])
            .unitary(crate::circuit::rz(1.1), vec![0])
            .trace_out(vec![2]);
        let circuit = b.build().unwrap();
        let text = serialize_circuit(&circuit);
        let back = parse_circuit(&text).unwrap();
        assert_eq!(back, circuit);
        assert_eq!(serialize_circuit(&back), text);
    }

    #[test]
    fn keyed_template_round_trip() {
        let t = pauli_keyed_template(2, true).unwrap();
        assert_eq!(parse_circuit(&serialize_circuit(&t)).unwrap(), t);
        let d = depolarizer_circuit(1).unwrap();
        assert_eq!(parse_circuit(&serialize_circuit(&d)).unwrap(), d);
    }

    #[test]
    fn cnot_with_one_target() {
        let text = br#"{"input_qubits": 2, "output_qubits": 2,
            "ops": [{"kind": "H", "targets": [0]}, {"kind": "CNOT", "targets": [0]}]}"#;
        let err = parse_circuit(text).unwrap_err();
        assert!(matches!(err, QctError::InvalidOp { index: 1, .. }), "{err}");
    }

    #[test]
    fn unknown_kind() {
        let text = br#"{"input_qubits": 1, "output_qubits": 1, "ops": [{"kind": "SWAP", "targets": [0]}]}"#;
        assert_eq!(
            parse_circuit(text).unwrap_err(),
            QctError::UnsupportedGate {
                index: 0,
                kind: "SWAP".into()
            }
        );
    }

    #[test]
    fn malformed_field_reports_path() {
        let text = br#"{"input_qubits": 1, "output_qubits": 1, "ops": [{"kind": "X", "targets": ["a"]}]}"#;
        match parse_circuit(text).unwrap_err() {
            QctError::Parse { path, message } => {
                assert_eq!(path, "ops[0].targets[0]");
                assert!(message.contains("line 1"));
            }
            other => panic!("unexpected {other}"),
        }
    }
}

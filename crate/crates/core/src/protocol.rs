//! Detecting insecure encryption: keyed-channel instances, the swap test and
//! the two-copy protocol that accepts on the symmetric outcome.
//!
//! A proof lives on `(H ⊗ R) ⊗ (H ⊗ R)` with `dim R = dim H`. Each branch
//! gets an independent uniformly random key; the verifier applies `E_k ⊗ id_R`
//! to each half and measures `{P_sym, I − P_sym}` on the two outputs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cap::check_dim;
use crate::channel::{
    diamond_distance_with, DiamondOptions, KeyedChannelFamily, QuantumChannel,
};
use crate::circuit::{from_json, to_json, CircuitDoc};
use crate::error::{QctError, Result};
use crate::linalg::{
    apply_choi_adjoint_on_factor, apply_choi_on_factor, c, identity, top_eigenpair, CMatrix, CVector, ZERO,
};
use crate::reduction::{build_ct_circuit, CircuitFamily};
use crate::state::{RegisterLayout, random_density_with, random_pure_state_with, trace_norm, PureState, TAU_UNIT};
use crate::verifier::VerifierCircuit;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959963984540054;

const SHOT_CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    SecureOtp,
    InsecureFromVerifier,
    Custom,
}

/// Accepting witness of the verifier an insecure instance was built from,
/// with the width of the dummy register placed above it.
#[derive(Clone, Debug, PartialEq)]
pub struct AcceptingWitness {
    pub witness: PureState,
    pub accept_probability: f64,
    pub dummy_qubits: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DIInstance {
    family: KeyedChannelFamily,
    eps: f64,
    delta: Option<f64>,
    provenance: Provenance,
    accepting: Option<AcceptingWitness>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    key_bits: usize,
    template: CircuitDoc,
    eps: f64,
    #[serde(default)]
    delta: Option<f64>,
    provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layout: Option<RegisterLayout>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    accepting: Option<AcceptingDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AcceptingDoc {
    witness: Vec<[f64; 2]>,
    accept_probability: f64,
    dummy_qubits: usize,
}

pub(crate) fn amplitudes_doc(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

impl DIInstance {
    /// Wraps an arbitrary keyed family. The output must be at least as wide
    /// as the input.
    pub fn custom(family: KeyedChannelFamily, eps: f64, delta: Option<f64>) -> Result<Self> {
        Self::with_provenance(family, eps, delta, Provenance::Custom, None)
    }

    fn with_provenance(
        family: KeyedChannelFamily,
        eps: f64,
        delta: Option<f64>,
        provenance: Provenance,
        accepting: Option<AcceptingWitness>,
    ) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(QctError::InvalidParameter(format!("eps must be non-negative, got {eps}")));
        }
        if family.output_qubits() < family.input_qubits() {
            return Err(QctError::InvalidParameter(format!(
                "output register ({} qubits) is smaller than the message register ({} qubits)",
                family.output_qubits(),
                family.input_qubits()
            )));
        }
        Ok(DIInstance {
            family,
            eps,
            delta,
            provenance,
            accepting,
        })
    }

    pub fn family(&self) -> &KeyedChannelFamily {
        &self.family
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn accepting(&self) -> Option<&AcceptingWitness> {
        self.accepting.as_ref()
    }

    pub fn message_qubits(&self) -> usize {
        self.family.input_qubits()
    }

    pub fn key_bits(&self) -> usize {
        self.family.key_bits()
    }

    pub fn dim_in(&self) -> usize {
        1 << self.family.input_qubits()
    }

    pub fn dim_out(&self) -> usize {
        1 << self.family.output_qubits()
    }

    /// Dimension of one `H ⊗ R` half of a proof.
    pub fn proof_half_dim(&self) -> usize {
        self.dim_in() * self.dim_in()
    }

    pub fn parse(text: &[u8]) -> Result<Self> {
        let doc: InstanceDoc = from_json(text)?;
        let mut template = doc.template.to_circuit()?;
        if let Some(layout) = doc.layout {
            template = template.with_layout(layout)?;
        }
        let family = KeyedChannelFamily::new(doc.key_bits, template)?;
        let accepting = match doc.accepting {
            Some(a) => Some(AcceptingWitness {
                witness: PureState::new(CVector::from_iterator(
                    a.witness.len(),
                    a.witness.iter().map(|&[re, im]| c(re, im)),
                ))?,
                accept_probability: a.accept_probability,
                dummy_qubits: a.dummy_qubits,
            }),
            None => None,
        };
        Self::with_provenance(family, doc.eps, doc.delta, doc.provenance, accepting)
    }

    pub fn serialize(&self) -> Vec<u8> {
        to_json(&InstanceDoc {
            key_bits: self.family.key_bits(),
            template: CircuitDoc::from_circuit(self.family.template()),
            eps: self.eps,
            delta: self.delta,
            provenance: self.provenance,
            layout: self.family.template().layout().cloned(),
            accepting: self.accepting.as_ref().map(|a| AcceptingDoc {
                witness: amplitudes_doc(a.witness.amplitudes()),
                accept_probability: a.accept_probability,
                dummy_qubits: a.dummy_qubits,
            }),
        })
    }

    /// Test probes `|ξ⟩_F |γ⟩_H ⊗ |r⟩_R` inside the accepting subspace: the
    /// doubled-proof half from [`completeness_proof`](Self::completeness_proof),
    /// plus product probes with basis, `|+⟩` and random dummy states.
    pub fn accepting_probes(&self, seed: u64) -> Result<Vec<PureState>> {
        let acc = self.accepting.as_ref().ok_or_else(|| {
            QctError::InvalidParameter("instance carries no accepting witness".into())
        })?;
        let d = self.dim_in();
        let df = 1usize << acc.dummy_qubits;
        let mut probes = vec![self.accepting_half()?];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plus = PureState::normalized(CVector::from_element(df, c(1.0, 0.0)))?;
        let mut dummies = vec![PureState::basis(df, 0), PureState::basis(df, df - 1), plus];
        dummies.push(random_pure_state_with(df, &mut rng));
        for xi in dummies {
            let top = xi.amplitudes().kronecker(acc.witness.amplitudes());
            let r = random_pure_state_with(d, &mut rng);
            probes.push(PureState::normalized(top.kronecker(r.amplitudes()))?);
        }
        Ok(probes)
    }

    /// `Σ_j |j⟩_F |γ⟩_H ⊗ |0⟩_{R_hi} |j⟩_{R_lo} / √2^f`: the dummy register is
    /// maximally entangled with the low part of the reference.
    fn accepting_half(&self) -> Result<PureState> {
        let acc = self.accepting.as_ref().ok_or_else(|| {
            QctError::InvalidParameter("instance carries no accepting witness".into())
        })?;
        let d = self.dim_in();
        let df = 1usize << acc.dummy_qubits;
        let dh = acc.witness.dim();
        let mut v = CVector::zeros(d * d);
        for j in 0..df {
            for (g, amp) in acc.witness.amplitudes().iter().enumerate() {
                v[(j * dh + g) * d + j] = *amp;
            }
        }
        PureState::normalized(v)
    }

    /// `|ψ⟩ ⊗ |ψ⟩` with `|ψ⟩` built from the accepting witness.
    pub fn completeness_proof(&self) -> Result<PureState> {
        let half = self.accepting_half()?;
        PureState::new(half.amplitudes().kronecker(half.amplitudes()))
    }

    fn check_proof_dim(&self, dim: usize) -> Result<()> {
        let half = self.proof_half_dim();
        if dim != half * half {
            return Err(QctError::InvalidParameter(format!(
                "proof has dimension {dim} but (H ⊗ R)⊗2 with dim R = dim H = {} has {}; \
                 larger references do not help because the acceptance probability \
                 stabilizes at dim R = dim H",
                self.dim_in(),
                half * half
            )));
        }
        Ok(())
    }
}

/// Secure instance: the Pauli one-time pad on `qubits` qubits.
pub fn build_secure_instance(qubits: usize, eps: f64) -> Result<DIInstance> {
    DIInstance::with_provenance(
        KeyedChannelFamily::pauli_otp(qubits)?,
        eps,
        None,
        Provenance::SecureOtp,
        None,
    )
}

/// Insecure instance from a verifier that accepts some witness with
/// probability at least `1 − eps`: the circuit-testing construction with the
/// key-discarding identity on accepting inputs and the keyed Pauli pad on
/// rejected ones.
pub fn build_insecure_instance(v: &VerifierCircuit, eps: f64, delta: f64) -> Result<DIInstance> {
    let (p, witness) = v.max_accept_probability();
    if p < 1.0 - eps - TAU_UNIT {
        return Err(QctError::WrongSide(format!(
            "verifier accepts with probability at most {p}, below 1 − ε = {}; \
             the resulting instance would be secure, check it with the ε-private test",
            1.0 - eps
        )));
    }
    let inst = build_ct_circuit(
        v,
        &CircuitFamily::Identity,
        &CircuitFamily::PauliKeyed { key: None },
        eps,
        delta,
    )?;
    let n = inst.input_qubits();
    let family = KeyedChannelFamily::new(2 * n, inst.circuit().clone())?;
    DIInstance::with_provenance(
        family,
        eps,
        Some(delta),
        Provenance::InsecureFromVerifier,
        Some(AcceptingWitness {
            witness,
            accept_probability: p,
            dummy_qubits: inst.dummy_qubits(),
        }),
    )
}

/// Largest `‖(E_k ⊗ id_R)(ρ) − ρ‖_tr` over keys, per probe.
pub fn per_key_probe_distances(inst: &DIInstance, probes: &[PureState]) -> Result<Vec<f64>> {
    if inst.dim_in() != inst.dim_out() {
        return Err(QctError::mismatch("probe output", inst.dim_in(), inst.dim_out()));
    }
    let channels = inst.family.channels()?;
    let d = inst.dim_in();
    probes
        .iter()
        .map(|probe| {
            if probe.dim() != d * d {
                return Err(QctError::mismatch("probe", d * d, probe.dim()));
            }
            let rho = probe.projector();
            let per_key = channels
                .par_iter()
                .map(|ch| trace_norm(&(ch.apply_with_reference(&rho, d)? - &rho)))
                .collect::<Result<Vec<f64>>>()?;
            Ok(per_key.into_iter().fold(0.0, f64::max))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SwapTest {
    dim: usize,
    projector: CMatrix,
}

impl SwapTest {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim * dim, "swap test")?;
        let n = dim * dim;
        let mut p = identity(n).scale(0.5);
        for i in 0..dim {
            for j in 0..dim {
                p[(i * dim + j, j * dim + i)] += c(0.5, 0.0);
            }
        }
        Ok(SwapTest { dim, projector: p })
    }

    /// Dimension of each of the two swapped systems.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(I + W)/2`.
    pub fn projector(&self) -> &CMatrix {
        &self.projector
    }

    /// `tr(P_sym X)` for an operator on the doubled system.
    pub fn symmetric_probability(&self, x: &CMatrix) -> Result<f64> {
        let n = self.dim * self.dim;
        if x.nrows() != n || x.ncols() != n {
            return Err(QctError::mismatch("swap test input", n, x.nrows()));
        }
        // tr(P X) = Σ_{ij} P_ij X_ji, P is sparse: diagonal halves plus swaps.
        let mut acc = ZERO;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let a = i * self.dim + j;
                let b = j * self.dim + i;
                acc += x[(a, a)] * 0.5 + x[(b, a)] * 0.5;
            }
        }
        Ok(acc.re)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProtocolMode {
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledStats {
    pub shots: u64,
    pub accepts: u64,
    pub freq: f64,
    pub ci95: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolResult {
    pub mode: ProtocolMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampled: Option<SampledStats>,
    pub proof_spec: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn proof_matrix(inst: &DIInstance, proof: &CMatrix) -> Result<()> {
    if !proof.is_square() {
        return Err(QctError::InvalidState("proof operator is not square".into()));
    }
    inst.check_proof_dim(proof.nrows())
}

/// `(A ⊗ id_R ⊗ B ⊗ id_R)(X)` for channels on the two proof halves.
fn apply_branches(
    a: &QuantumChannel,
    b: &QuantumChannel,
    x: &CMatrix,
    d_r: usize,
) -> Result<CMatrix> {
    let (di, dout) = (a.dim_in(), a.dim_out());
    check_dim(dout * d_r * dout * d_r, "protocol output")?;
    let first = apply_choi_on_factor(a.choi(), di, dout, x, &[di, d_r, di, d_r], 0);
    Ok(apply_choi_on_factor(b.choi(), di, dout, &first, &[dout, d_r, di, d_r], 2))
}

/// Acceptance probability averaged over both keys, computed by applying the
/// key-averaged channel to each branch.
pub fn exact_accept_probability(
    inst: &DIInstance,
    proof: &CMatrix,
    proof_spec: &str,
) -> Result<ProtocolResult> {
    proof_matrix(inst, proof)?;
    let avg = inst.family.key_average()?;
    let d_r = inst.dim_in();
    let out = apply_branches(&avg, &avg, proof, d_r)?;
    let swap = SwapTest::new(inst.dim_out() * d_r)?;
    let p = swap.symmetric_probability(&out)?;
    Ok(ProtocolResult {
        mode: ProtocolMode::Exact,
        p: Some(p),
        sampled: None,
        proof_spec: proof_spec.to_string(),
        seed: None,
    })
}

/// The same probability by enumerating every key pair.
pub fn accept_probability_by_keys(inst: &DIInstance, proof: &CMatrix) -> Result<f64> {
    proof_matrix(inst, proof)?;
    let channels = inst.family.channels()?;
    let d_r = inst.dim_in();
    let swap = SwapTest::new(inst.dim_out() * d_r)?;
    let k = channels.len();
    let total = (0..k * k)
        .into_par_iter()
        .map(|idx| {
            let out = apply_branches(&channels[idx / k], &channels[idx % k], proof, d_r)?;
            swap.symmetric_probability(&out)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(total.iter().sum::<f64>() / (k * k) as f64)
}

/// Acceptance observable pulled back through both key-averaged branches.
pub fn acceptance_observable(inst: &DIInstance) -> Result<CMatrix> {
    let half = inst.proof_half_dim();
    check_dim(half * half, "protocol proof")?;
    let avg = inst.family.key_average()?;
    let (di, dout, d_r) = (avg.dim_in(), avg.dim_out(), inst.dim_in());
    let swap = SwapTest::new(dout * d_r)?;
    let second =
        apply_choi_adjoint_on_factor(avg.choi(), di, dout, swap.projector(), &[dout, d_r, dout, d_r], 2);
    Ok(apply_choi_adjoint_on_factor(avg.choi(), di, dout, &second, &[dout, d_r, di, d_r], 0))
}

/// Best acceptance probability over all proofs and a proof attaining it.
pub fn optimal_proof_accept(inst: &DIInstance) -> Result<(f64, PureState)> {
    let obs = acceptance_observable(inst)?;
    let (p, v) = top_eigenpair(&obs);
    Ok((p, PureState::normalized(v)?))
}

/// Wilson score interval for `accepts` successes in `shots` trials.
pub fn wilson_interval(accepts: u64, shots: u64, z: f64) -> [f64; 2] {
    let n = shots as f64;
    let phat = accepts as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    // The endpoints are exactly 0 and 1 at the extreme counts.
    let lo = if accepts == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if accepts == shots { 1.0 } else { (center + half).min(1.0) };
    [lo, hi]
}

/// Runs the protocol shot by shot: draws both keys, applies the keyed
/// channels and samples the swap-test outcome. Shots are split into chunks
/// with their own RNG streams, so the result depends only on `seed`.
pub fn run_protocol_sampled(
    inst: &DIInstance,
    proof: &CMatrix,
    proof_spec: &str,
    shots: u64,
    seed: u64,
) -> Result<ProtocolResult> {
    if shots == 0 {
        return Err(QctError::InvalidParameter("shots must be at least 1".into()));
    }
    proof_matrix(inst, proof)?;
    let keys = inst.family.key_count();
    let chunks = shots.div_ceil(SHOT_CHUNK as u64);
    let draws: Vec<(u64, u64, f64)> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let len = (shots - chunk * SHOT_CHUNK as u64).min(SHOT_CHUNK as u64);
            (0..len)
                .map(|_| {
                    let k1 = rng.random_range(0..keys);
                    let k2 = rng.random_range(0..keys);
                    (k1, k2, rng.random::<f64>())
                })
                .collect::<Vec<_>>()
        })
        .collect();

    // Symmetric-outcome probability per key pair, computed once per pair
    // that was drawn.
    let mut pairs: Vec<(u64, u64)> = draws.iter().map(|&(a, b, _)| (a, b)).collect();
    pairs.sort_unstable();
    pairs.dedup();
    let mut used: Vec<u64> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    used.sort_unstable();
    used.dedup();
    let channels: BTreeMap<u64, QuantumChannel> = used
        .par_iter()
        .map(|&k| Ok((k, inst.family.channel(k)?)))
        .collect::<Result<_>>()?;
    let d_r = inst.dim_in();
    let swap = SwapTest::new(inst.dim_out() * d_r)?;
    let q: BTreeMap<(u64, u64), f64> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let out = apply_branches(&channels[&a], &channels[&b], proof, d_r)?;
            Ok(((a, b), swap.symmetric_probability(&out)?))
        })
        .collect::<Result<_>>()?;

    let accepts = draws.iter().filter(|&&(a, b, u)| u < q[&(a, b)]).count() as u64;
    Ok(ProtocolResult {
        mode: ProtocolMode::Sampled,
        p: None,
        sampled: Some(SampledStats {
            shots,
            accepts,
            freq: accepts as f64 / shots as f64,
            ci95: wilson_interval(accepts, shots, Z_95),
        }),
        proof_spec: proof_spec.to_string(),
        seed: Some(seed),
    })
}

/// Single-copy deviation `d₂` of the key average from the depolarizing
/// channel, and the largest two-copy deviation
/// `‖((Ē ⊗ Ē − Ω ⊗ Ω) ⊗ id)(ρ)‖_tr` over sampled proof states.
#[derive(Clone, Debug, Serialize)]
pub struct TensorizedCheck {
    pub d2: f64,
    pub two_copy: f64,
    pub samples: usize,
}

pub fn tensorized_security(
    inst: &DIInstance,
    samples: usize,
    options: DiamondOptions,
) -> Result<TensorizedCheck> {
    let avg = inst.family.key_average()?;
    let omega = QuantumChannel::depolarizing(inst.family.input_qubits(), inst.family.output_qubits())?;
    let d_r = inst.dim_in();
    let d2 = diamond_distance_with(&avg, &omega, d_r, options)?.value;
    let half = inst.proof_half_dim();
    check_dim(half * half, "two-copy deviation")?;
    let two_copy = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(s as u64);
            // Alternate pure and mixed inputs.
            let rho = if s % 2 == 0 {
                random_pure_state_with(half * half, &mut rng).projector()
            } else {
                random_density_with(half * half, &mut rng).into_matrix()
            };
            let a = apply_branches(&avg, &avg, &rho, d_r)?;
            let b = apply_branches(&omega, &omega, &rho, d_r)?;
            trace_norm(&(a - b))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(TensorizedCheck {
        d2,
        two_copy,
        samples,
    })
}

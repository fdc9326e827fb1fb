use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channel::{diamond_distance, QuantumChannel};
use crate::circuit::{evaluate, to_channel};
use crate::error::{QctError, Result};
use crate::linalg::{basis_vector, c, permute_qubits, projector, CMatrix, CVector};
use crate::state::{
    random_pure_state_with, tensor, trace_norm, DensityOperator, PureState,
};
use crate::verifier::VerifierCircuit;

use super::{CTInstance, CircuitFamily};

/// Slack for comparing a computed distance with its analytic bound.
const TAU_BOUND: f64 = 1e-9;
/// Slack for the diamond-ascent lower bound.
const TAU_DIAMOND: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
}

#[derive(Clone, Debug, Serialize)]
pub struct CTCertificate {
    pub side: Side,
    /// `3√ε`.
    pub claimed_bound: f64,
    /// Largest distance over all probes or samples.
    pub measured_bound: f64,
    pub distances: Vec<f64>,
    /// Ascent lower bound on the diamond distance (NO side only).
    pub diamond_lower_bound: Option<f64>,
    /// Best verifier witness (YES side) or diamond ascent witness (NO side).
    pub witness: Vec<[f64; 2]>,
    pub subspace_dim_claimed: f64,
    pub subspace_dim_achieved: f64,
    /// Spread of the product-probe distances across dummy-register states.
    pub probe_spread: Option<f64>,
    /// A sampled upper check cannot prove the diamond bound itself.
    pub heuristic: bool,
    pub passes: bool,
}

fn amplitudes(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// States around the copy step for a witness `ψ` on `H`.
#[derive(Clone, Debug)]
pub struct CopyStage {
    /// Acceptance probability of `ψ`.
    pub p: f64,
    /// `V(ψ ⊗ |0⟩_A)`.
    pub phi: PureState,
    /// After the CNOT onto a fresh copy qubit, with the copy as the most
    /// significant factor.
    pub phi_prime: PureState,
    /// `‖φ'φ'† − |0⟩⟨0| ⊗ φφ†‖_tr`.
    pub distance_to_zero: f64,
    /// `‖φ'φ'† − |1⟩⟨1| ⊗ φφ†‖_tr`.
    pub distance_to_one: f64,
}

pub fn copy_stage(v: &VerifierCircuit, witness: &PureState) -> Result<CopyStage> {
    let phi = v.run(witness)?;
    let p = v.accept_probability(witness)?;
    let dim = phi.len();
    let mask = 1usize << v.output_qubit();
    let mut prime = CVector::zeros(2 * dim);
    for (r, &z) in phi.iter().enumerate() {
        let copied = if r & mask != 0 { r + dim } else { r };
        prime[copied] = z;
    }
    let phi_proj = projector(&phi);
    let prime_proj = projector(&prime);
    let zero = projector(&basis_vector(2, 0)).kronecker(&phi_proj);
    let one = projector(&basis_vector(2, 1)).kronecker(&phi_proj);
    Ok(CopyStage {
        p,
        distance_to_zero: trace_norm(&(&prime_proj - zero))?,
        distance_to_one: trace_norm(&(&prime_proj - one))?,
        phi: PureState::normalized(phi)?,
        phi_prime: PureState::normalized(prime)?,
    })
}

fn branch_distance(
    inst: &CTInstance,
    branch: &crate::circuit::MixedStateCircuit,
    rho: &DensityOperator,
    reference_qubits: usize,
) -> Result<f64> {
    let a = evaluate(inst.circuit(), rho, reference_qubits)?;
    let b = evaluate(branch, rho, reference_qubits)?;
    trace_norm(&(a.matrix() - b.matrix()))
}

/// State `|γ⟩_H ⊗ |χ⟩_{F R}` laid out as `F ⊗ H ⊗ R`.
fn witness_with_dummy_and_reference(gamma: &PureState, chi: &CVector, f: usize, r: usize) -> CVector {
    let h = gamma.qubits();
    let joint = gamma.amplitudes().kronecker(chi);
    // Source qubits: R at 0..r, F at r..r+f, H above. Target: R, H, F.
    let perm: Vec<usize> = (0..r)
        .chain((r..r + f).map(|q| q + h))
        .chain((r + f..r + f + h).map(|q| q - f))
        .collect();
    let m = CMatrix::from_column_slice(joint.len(), 1, joint.as_slice());
    CVector::from_column_slice(permute_qubits(&m, &perm).as_slice())
}

/// Probes the accepting subspace `|γ⟩ ⊗ F` against the accepting branch.
pub fn certify_yes(inst: &CTInstance, v: &VerifierCircuit, seed: u64) -> Result<CTCertificate> {
    if v.witness_qubits() != inst.witness_qubits() {
        return Err(QctError::mismatch(
            "verifier witness",
            inst.witness_qubits(),
            v.witness_qubits(),
        ));
    }
    let (p_star, gamma) = v.max_accept_probability();
    let eps = inst.eps();
    if p_star < 1.0 - eps - 1e-12 {
        return Err(QctError::WrongSide(format!(
            "best acceptance {p_star} is below 1 - eps = {}",
            1.0 - eps
        )));
    }
    let branch = inst.branch_circuit(true)?;
    let f = inst.dummy_qubits();
    let df = 1usize << f;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut dummy_probes = vec![basis_vector(df, 0)];
    if df > 1 {
        dummy_probes.push(basis_vector(df, df - 1));
        let plus = CVector::from_element(df, c(1.0 / (df as f64).sqrt(), 0.0));
        dummy_probes.push(plus);
        dummy_probes.push(random_pure_state_with(df, &mut rng).into_amplitudes());
    }
    let mut product = Vec::new();
    for xi in &dummy_probes {
        let psi = PureState::normalized(xi.kronecker(gamma.amplitudes()))?;
        product.push(branch_distance(inst, &branch, &psi.density(), 0)?);
    }

    // With a reference: |γ⟩ ⊗ χ for a maximally entangled and a random
    // state χ of F ⊗ R. Without dummy qubits R is a lone qubit.
    let r = f.max(1);
    let dr = 1usize << r;
    let chis = if f == 0 {
        vec![basis_vector(dr, 0), random_pure_state_with(dr, &mut rng).into_amplitudes()]
    } else {
        vec![
            crate::linalg::max_entangled_unnormalized(df).unscale((df as f64).sqrt()),
            random_pure_state_with(df * dr, &mut rng).into_amplitudes(),
        ]
    };
    let mut entangled = Vec::new();
    for chi in &chis {
        let psi = PureState::normalized(witness_with_dummy_and_reference(&gamma, chi, f, r))?;
        entangled.push(branch_distance(inst, &branch, &psi.density(), r)?);
    }

    let spread = product.iter().cloned().fold(f64::MIN, f64::max)
        - product.iter().cloned().fold(f64::MAX, f64::min);
    let distances: Vec<f64> = product.into_iter().chain(entangled).collect();
    let measured = distances.iter().cloned().fold(0.0, f64::max);
    let claimed = 3.0 * eps.sqrt();
    let n = inst.input_qubits() as f64;
    let claimed_log = n * (1.0 - inst.delta());
    let dims_ok = f as f64 >= claimed_log - 1e-9;
    Ok(CTCertificate {
        side: Side::Yes,
        claimed_bound: claimed,
        measured_bound: measured,
        passes: dims_ok && measured <= claimed + TAU_BOUND,
        distances,
        diamond_lower_bound: None,
        witness: amplitudes(gamma.amplitudes()),
        subspace_dim_claimed: claimed_log.exp2(),
        subspace_dim_achieved: df as f64,
        probe_spread: Some(spread),
        heuristic: false,
    })
}

/// Compares the instance with the rejecting branch: diamond ascent plus
/// random entangled inputs.
pub fn certify_no(
    inst: &CTInstance,
    v: &VerifierCircuit,
    restarts: usize,
    samples: usize,
    seed: u64,
) -> Result<CTCertificate> {
    let (p_star, _) = v.max_accept_probability();
    let eps = inst.eps();
    if p_star > eps + 1e-12 {
        return Err(QctError::WrongSide(format!(
            "best acceptance {p_star} exceeds eps = {eps}"
        )));
    }
    let instance_channel = to_channel(inst.circuit())?;
    let branch_channel = to_channel(&inst.branch_circuit(false)?)?;
    let est = diamond_distance(&instance_channel, &branch_channel, restarts, seed)?;
    let distances = sampled_distances(&instance_channel, &branch_channel, samples, seed)?;
    let sampled_max = distances.iter().cloned().fold(0.0, f64::max);
    let claimed = 3.0 * eps.sqrt();
    Ok(CTCertificate {
        side: Side::No,
        claimed_bound: claimed,
        measured_bound: sampled_max,
        passes: est.value <= claimed + TAU_DIAMOND && sampled_max <= claimed + TAU_BOUND,
        distances,
        diamond_lower_bound: Some(est.value),
        witness: amplitudes(est.witness.amplitudes()),
        subspace_dim_claimed: 0.0,
        subspace_dim_achieved: 0.0,
        probe_spread: None,
        heuristic: true,
    })
}

/// `‖((a − b) ⊗ id)(ψψ†)‖_tr` for Haar-random `ψ` on input ⊗ reference with
/// a reference as large as the input.
fn sampled_distances(
    a: &QuantumChannel,
    b: &QuantumChannel,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let d = a.dim_in();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    (0..samples)
        .map(|_| {
            let psi = random_pure_state_with(d * d, &mut rng).projector();
            let diff = a.apply_with_reference(&psi, d)? - b.apply_with_reference(&psi, d)?;
            trace_norm(&diff)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct WellformednessReport {
    pub eps: f64,
    pub delta: f64,
    pub width: usize,
    pub min_distance: f64,
    /// Input (on input ⊗ reference, or input alone for product probes)
    /// attaining the minimum.
    pub argmin: Vec<[f64; 2]>,
    pub probes: usize,
    /// Some probe came within `2ε` of making the families agree.
    pub suspect: bool,
    /// The subspace-dimension side of the condition is only decidable by
    /// this sampler when `δ = 1`.
    pub subspace_condition_checked: bool,
}

/// Looks for pure inputs on which the two families nearly agree.
pub fn wellformedness_check(
    c0: &CircuitFamily,
    c1: &CircuitFamily,
    eps: f64,
    delta: f64,
    width: usize,
    samples: usize,
    seed: u64,
) -> Result<WellformednessReport> {
    let a = to_channel(&c0.build(width)?)?;
    let b = to_channel(&c1.build(width)?)?;
    a.check_same_dims(&b)?;
    let d = a.dim_in();
    let mut best = (f64::INFINITY, Vec::new());
    let mut probes = 0;
    let mut consider = |value: f64, psi: &CVector| {
        probes += 1;
        if value < best.0 {
            best = (value, amplitudes(psi));
        }
    };
    let mut product: Vec<CVector> = (0..d).map(|i| basis_vector(d, i)).collect();
    product.push(CVector::from_element(d, c(1.0 / (d as f64).sqrt(), 0.0)));
    for psi in &product {
        let rho = projector(psi);
        let diff = a.apply_with_reference(&rho, 1)? - b.apply_with_reference(&rho, 1)?;
        consider(trace_norm(&diff)?, psi);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let psi = random_pure_state_with(d * d, &mut rng);
        let rho = psi.projector();
        let diff = a.apply_with_reference(&rho, d)? - b.apply_with_reference(&rho, d)?;
        consider(trace_norm(&diff)?, psi.amplitudes());
    }
    Ok(WellformednessReport {
        eps,
        delta,
        width,
        min_distance: best.0,
        argmin: best.1,
        probes,
        suspect: best.0 <= 2.0 * eps + TAU_BOUND,
        subspace_condition_checked: delta >= 1.0,
    })
}

/// Witness `γ` with dummy state `ξ`, laid out as `F ⊗ H`.
pub fn product_input(gamma: &PureState, xi: &PureState) -> Result<DensityOperator> {
    Ok(tensor(xi, gamma)?.density())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::build_ct_circuit;
    use crate::verifier::{make_toy_verifier, ToyVerifier};

    #[test]
    fn wellformedness_examples() {
        let r = wellformedness_check(
            &CircuitFamily::Identity,
            &CircuitFamily::Depolarizing,
            0.1,
            1.0,
            1,
            50,
            1,
        )
        .unwrap();
        assert!((r.min_distance - 1.0).abs() < 1e-9, "{r:?}");
        assert!(!r.suspect);
        let same = wellformedness_check(
            &CircuitFamily::Identity,
            &CircuitFamily::Identity,
            0.0,
            1.0,
            1,
            10,
            1,
        )
        .unwrap();
        assert!(same.min_distance.abs() < 1e-12 && same.suspect);
        let x = wellformedness_check(
            &CircuitFamily::Identity,
            &CircuitFamily::PauliXFirst,
            0.1,
            1.0,
            1,
            10,
            1,
        )
        .unwrap();
        assert!(x.min_distance < 1e-12 && x.suspect);
    }

    #[test]
    fn copy_stage_closed_forms() {
        for k in 0..=10 {
            let p = k as f64 / 10.0;
            let v = make_toy_verifier(&ToyVerifier::rotation_for_accept(p).unwrap()).unwrap();
            let stage = copy_stage(&v, &PureState::basis(2, 1)).unwrap();
            let (yes, no) = super::super::copy_distortion_bounds(p).unwrap();
            assert!((stage.p - p).abs() < 1e-12);
            assert!((stage.distance_to_one - yes).abs() < 1e-9);
            assert!((stage.distance_to_zero - no).abs() < 1e-9);
        }
    }

    #[test]
    fn target_state_yes_side_is_exact() {
        let s = crate::state::random_pure_state(2, 4);
        let v = make_toy_verifier(&ToyVerifier::target_state(&s)).unwrap();
        let inst =
            build_ct_circuit(&v, &CircuitFamily::Identity, &CircuitFamily::Depolarizing, 0.0, 0.5)
                .unwrap();
        let cert = certify_yes(&inst, &v, 3).unwrap();
        assert!(cert.passes && cert.measured_bound <= 1e-9, "{cert:?}");
        assert!(cert.distances.len() >= 3);
    }

    #[test]
    fn wrong_side_is_reported() {
        let v = make_toy_verifier(&ToyVerifier::AlwaysReject { witness_qubits: 1 }).unwrap();
        let inst =
            build_ct_circuit(&v, &CircuitFamily::Identity, &CircuitFamily::Depolarizing, 0.1, 1.0)
                .unwrap();
        assert!(matches!(certify_yes(&inst, &v, 0), Err(QctError::WrongSide(_))));
        let good = make_toy_verifier(&ToyVerifier::Rotation { theta: 3.0 }).unwrap();
        assert!(matches!(certify_no(&inst, &good, 2, 2, 0), Err(QctError::WrongSide(_))));
    }

    #[test]
    fn product_input_orders_dummy_high() {
        let g = PureState::basis(2, 1);
        let xi = PureState::basis(2, 0);
        let rho = product_input(&g, &xi).unwrap();
        assert_eq!(rho.matrix()[(1, 1)].re, 1.0);
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qct_core::channel::{DiamondOptions, KeyedChannelFamily, QuantumChannel};
use qct_core::circuit::{depolarizer_circuit, to_channel};
use qct_core::linalg::{max_abs_diff, projector};
use qct_core::protocol::{
    accept_probability_by_keys, build_insecure_instance, build_secure_instance,
    exact_accept_probability, optimal_proof_accept, per_key_probe_distances,
    run_protocol_sampled, tensorized_security, DIInstance, SwapTest,
};
use qct_core::state::{
    random_density_with, random_pure_state_with, tensor, PureState,
};
use qct_core::verifier::{make_toy_verifier, ToyVerifier};
use qct_core::QctError;

fn doubled(psi: &PureState) -> qct_core::linalg::CMatrix {
    projector(&psi.amplitudes().kronecker(psi.amplitudes()))
}

#[test]
fn secure_instance_structure() {
    for n in 1..=2 {
        let inst = build_secure_instance(n, 0.01).unwrap();
        assert_eq!(inst.key_bits(), 2 * n);
        let omega = QuantumChannel::depolarizing(n, n).unwrap();
        let avg = inst.family().key_average().unwrap();
        assert!(max_abs_diff(avg.choi(), omega.choi()) <= 1e-12);
        let dec = KeyedChannelFamily::pauli_otp_decryptor(n).unwrap();
        let id = QuantumChannel::identity(1 << n).unwrap();
        for k in 0..inst.family().key_count() {
            let round = inst
                .family()
                .channel(k)
                .unwrap()
                .then(&dec.channel(k).unwrap())
                .unwrap();
            assert!(max_abs_diff(round.choi(), id.choi()) <= 1e-12);
        }
    }
}

#[test]
fn quantum_key_register_matches_classical_average() {
    // Key qubits prepared in |+⟩ and traced out after controlling the Paulis
    // behave exactly like a uniformly random classical key.
    for n in 1..=2 {
        let quantum = to_channel(&depolarizer_circuit(n).unwrap()).unwrap();
        let classical = KeyedChannelFamily::pauli_otp(n).unwrap().key_average().unwrap();
        assert!(max_abs_diff(quantum.choi(), classical.choi()) <= 1e-12);
    }
}

#[test]
fn insecure_target_state_probes_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let gamma = random_pure_state_with(2, &mut rng);
    let v = make_toy_verifier(&ToyVerifier::target_state(&gamma)).unwrap();
    let inst = build_insecure_instance(&v, 0.0, 0.5).unwrap();
    assert_eq!(inst.message_qubits(), 2);
    let probes = inst.accepting_probes(3).unwrap();
    let d = per_key_probe_distances(&inst, &probes).unwrap();
    assert!(d.iter().all(|&x| x <= 1e-9), "{d:?}");
}

#[test]
fn insecure_rotation_probes_within_budget() {
    let v = make_toy_verifier(&ToyVerifier::rotation_for_accept(0.96).unwrap()).unwrap();
    let inst = build_insecure_instance(&v, 0.04, 0.5).unwrap();
    let probes = inst.accepting_probes(4).unwrap();
    let d = per_key_probe_distances(&inst, &probes).unwrap();
    assert!(d.iter().all(|&x| x <= 0.6 + 1e-9), "{d:?}");
    assert!(d.iter().any(|&x| x > 1e-6));
}

#[test]
fn always_reject_is_the_wrong_side() {
    let v = make_toy_verifier(&ToyVerifier::AlwaysReject { witness_qubits: 1 }).unwrap();
    let err = build_insecure_instance(&v, 0.1, 0.5).unwrap_err();
    assert!(matches!(err, QctError::WrongSide(_)));
}

#[test]
fn completeness_from_accepting_witness() {
    for p in [1.0, 0.96, 0.9] {
        let eps = 1.0 - p;
        let v = make_toy_verifier(&ToyVerifier::rotation_for_accept(p).unwrap()).unwrap();
        let inst = build_insecure_instance(&v, eps, 0.5).unwrap();
        let proof = inst.completeness_proof().unwrap();
        let r = exact_accept_probability(&inst, &proof.projector(), "doubled_accepting").unwrap();
        let got = r.p.unwrap();
        assert!(got >= 1.0 - 2.0 * eps - 1e-9, "p={p}: {got}");
    }
}

#[test]
fn soundness_gap_at_one_qubit() {
    let insecure =
        DIInstance::custom(KeyedChannelFamily::key_ignoring_identity(1).unwrap(), 0.0, None)
            .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let psi = random_pure_state_with(4, &mut rng);
    let complete = exact_accept_probability(&insecure, &doubled(&psi), "doubled")
        .unwrap()
        .p
        .unwrap();
    assert!((complete - 1.0).abs() <= 1e-12);

    let secure = build_secure_instance(1, 0.0).unwrap();
    let (p_star, proof) = optimal_proof_accept(&secure).unwrap();
    assert!((p_star - 0.75).abs() <= 1e-9);
    assert!((p_star - (0.5 + 1.0 / (2.0 * 2.0))).abs() <= 1e-12);
    let r = exact_accept_probability(&secure, &proof.projector(), "optimal").unwrap();
    assert!((r.p.unwrap() - p_star).abs() <= 1e-9);
    assert!(complete - p_star >= 0.25 - 1e-6);

    // No proof does better than the top eigenvalue.
    for _ in 0..20 {
        let rho = random_density_with(16, &mut rng);
        let p = exact_accept_probability(&secure, rho.matrix(), "random").unwrap().p.unwrap();
        assert!(p <= p_star + 1e-12);
    }
}

#[test]
fn otp_product_proof_matches_overlap_law() {
    // Each branch sees a maximally entangled H–R pair; the outputs are
    // σ = I/2 ⊗ I/2, so the symmetric probability is (1 + tr σ²)/2.
    let secure = build_secure_instance(1, 0.0).unwrap();
    let bell = PureState::max_entangled(2);
    let r = exact_accept_probability(&secure, &doubled(&bell), "doubled_bell").unwrap();
    let avg = secure.family().key_average().unwrap();
    let sigma = avg.apply_with_reference(&bell.projector(), 2).unwrap();
    let purity = (&sigma * &sigma).trace().re;
    assert!((r.p.unwrap() - (1.0 + purity) / 2.0).abs() <= 1e-12);
    assert!((r.p.unwrap() - 0.625).abs() <= 1e-12);
}

#[test]
fn sampled_mode_agrees_with_exact() {
    let ident =
        DIInstance::custom(KeyedChannelFamily::key_ignoring_identity(1).unwrap(), 0.0, None)
            .unwrap();
    let bell = PureState::max_entangled(2);
    let r = run_protocol_sampled(&ident, &doubled(&bell), "doubled_bell", 1000, 5).unwrap();
    let s = r.sampled.unwrap();
    assert_eq!(s.accepts, 1000);
    assert_eq!(s.freq, 1.0);

    let secure = build_secure_instance(1, 0.0).unwrap();
    let (_, proof) = optimal_proof_accept(&secure).unwrap();
    let a = run_protocol_sampled(&secure, &proof.projector(), "optimal", 20_000, 11).unwrap();
    let b = run_protocol_sampled(&secure, &proof.projector(), "optimal", 20_000, 11).unwrap();
    assert_eq!(a, b);
    let s = a.sampled.unwrap();
    assert!(s.ci95[0] <= 0.75 && 0.75 <= s.ci95[1], "{s:?}");
}

#[test]
fn key_linearity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let secure = build_secure_instance(1, 0.0).unwrap();
    let v = make_toy_verifier(&ToyVerifier::rotation_for_accept(0.9).unwrap()).unwrap();
    let insecure = build_insecure_instance(&v, 0.1, 1.0).unwrap();
    for inst in [&secure, &insecure] {
        let dim = inst.proof_half_dim() * inst.proof_half_dim();
        for _ in 0..3 {
            let rho = random_density_with(dim, &mut rng);
            let fast = exact_accept_probability(inst, rho.matrix(), "random").unwrap().p.unwrap();
            let slow = accept_probability_by_keys(inst, rho.matrix()).unwrap();
            assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
        }
    }
}

#[test]
fn tensorized_deviation_is_at_most_twice_single_copy() {
    let v = make_toy_verifier(&ToyVerifier::rotation_for_accept(0.9).unwrap()).unwrap();
    let instances = [
        build_secure_instance(1, 0.0).unwrap(),
        DIInstance::custom(KeyedChannelFamily::key_ignoring_identity(1).unwrap(), 0.0, None)
            .unwrap(),
        build_insecure_instance(&v, 0.1, 1.0).unwrap(),
    ];
    let opts = DiamondOptions {
        restarts: 10,
        seed: 4,
    };
    for inst in &instances {
        let t = tensorized_security(inst, 20, opts).unwrap();
        assert!(t.two_copy <= 2.0 * t.d2 + 1e-9, "{t:?}");
    }
}

#[test]
fn swap_test_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for d in [2, 4] {
        let swap = SwapTest::new(d).unwrap();
        for _ in 0..20 {
            let psi = random_pure_state_with(d, &mut rng);
            let phi = random_pure_state_with(d, &mut rng);
            let joint = tensor(&psi, &phi).unwrap();
            let p = swap.symmetric_probability(&joint.projector()).unwrap();
            let want = (1.0 + psi.overlap(&phi).norm_sqr()) / 2.0;
            assert!((p - want).abs() <= 1e-9);

            let rho = random_density_with(d, &mut rng);
            let sigma = random_density_with(d, &mut rng);
            let joint = tensor(&rho, &sigma).unwrap();
            let p = swap.symmetric_probability(joint.matrix()).unwrap();
            let want = (1.0 + (rho.matrix() * sigma.matrix()).trace().re) / 2.0;
            assert!((p - want).abs() <= 1e-9);
        }
    }
}

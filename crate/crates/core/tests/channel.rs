use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qct_core::channel::{
    check_eps_private, diamond_distance, diamond_distance_with, DiamondOptions,
    KeyedChannelFamily, PrivacyVerdict, QuantumChannel,
};
use qct_core::circuit::{pauli_x, rz, to_channel, CircuitBuilder};
use qct_core::linalg::{max_abs_diff, random_unitary};
use qct_core::state::{random_density_with, trace_norm};

#[test]
fn diamond_oracle_values() {
    for (n, want) in [(1, 1.5), (2, 1.875)] {
        let id = QuantumChannel::identity(1 << n).unwrap();
        let omega = QuantumChannel::depolarizing(n, n).unwrap();
        let est = diamond_distance(&id, &omega, 20, 0).unwrap();
        assert!((est.value - want).abs() <= 1e-6, "{n}: {}", est.value);
        // 2(1 − 1/d²) in closed form.
        let d2 = (1u64 << (2 * n)) as f64;
        assert!((want - 2.0 * (1.0 - 1.0 / d2)).abs() < 1e-15);
    }
    let id = QuantumChannel::identity(2).unwrap();
    let x = QuantumChannel::unitary(&pauli_x()).unwrap();
    assert!((diamond_distance(&id, &x, 20, 0).unwrap().value - 2.0).abs() <= 1e-6);
}

#[test]
fn unitary_pairs_follow_eigenvalue_arc() {
    let id = QuantumChannel::identity(2).unwrap();
    for k in 1..8 {
        let theta = 0.4 * k as f64;
        let z = QuantumChannel::unitary(&rz(theta)).unwrap();
        let est = diamond_distance(&id, &z, 10, 1).unwrap();
        let want = 2.0 * (theta / 2.0).sin().abs();
        assert!((est.value - want).abs() <= 1e-6, "{theta}: {}", est.value);
    }
}

#[test]
fn diamond_metric_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = QuantumChannel::unitary(&random_unitary(2, &mut rng)).unwrap();
    let b = QuantumChannel::depolarizing(1, 1).unwrap();
    let c = QuantumChannel::mix(&[(0.3, &a), (0.7, &b)]).unwrap();
    let opts = DiamondOptions {
        restarts: 12,
        seed: 5,
    };
    let ab = diamond_distance_with(&a, &b, 2, opts).unwrap().value;
    let ba = diamond_distance_with(&b, &a, 2, opts).unwrap().value;
    assert!((ab - ba).abs() <= 1e-6);
    let ac = diamond_distance_with(&a, &c, 2, opts).unwrap().value;
    let cb = diamond_distance_with(&c, &b, 2, opts).unwrap().value;
    assert!(ab <= ac + cb + 1e-6);
    assert!(ab <= 2.0 + 1e-12);
    // The reference-free variant never exceeds the stabilized one.
    let plain = diamond_distance_with(&a, &b, 1, opts).unwrap().value;
    assert!(plain <= ab + 1e-9);
    // The witness attains the reported value.
    let est = diamond_distance_with(&a, &b, 2, opts).unwrap();
    let rho = est.witness.projector();
    let diff = a.apply_with_reference(&rho, 2).unwrap() - b.apply_with_reference(&rho, 2).unwrap();
    assert!((trace_norm(&diff).unwrap() - est.value).abs() <= 1e-9);
}

#[test]
fn entangled_inputs_can_beat_product_inputs() {
    // For id vs Ω the entangled value 1.5 exceeds the best product value 1.
    let id = QuantumChannel::identity(2).unwrap();
    let omega = QuantumChannel::depolarizing(1, 1).unwrap();
    let opts = DiamondOptions::default();
    let plain = diamond_distance_with(&id, &omega, 1, opts).unwrap().value;
    let full = diamond_distance_with(&id, &omega, 2, opts).unwrap().value;
    assert!((plain - 1.0).abs() <= 1e-6);
    assert!((full - 1.5).abs() <= 1e-6);
}

#[test]
fn diamond_estimates_are_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = QuantumChannel::unitary(&random_unitary(4, &mut rng)).unwrap();
    let b = QuantumChannel::depolarizing(2, 2).unwrap();
    let x = diamond_distance(&a, &b, 6, 99).unwrap();
    let y = diamond_distance(&a, &b, 6, 99).unwrap();
    assert_eq!(x.value.to_bits(), y.value.to_bits());
    assert_eq!(x.witness, y.witness);
}

#[test]
fn privacy_verdicts() {
    let opts = DiamondOptions {
        restarts: 20,
        seed: 0,
    };
    for n in 1..=2 {
        let r = check_eps_private(
            &KeyedChannelFamily::pauli_otp(n).unwrap(),
            &KeyedChannelFamily::pauli_otp_decryptor(n).unwrap(),
            0.01,
            opts,
        )
        .unwrap();
        assert_eq!(r.verdict, PrivacyVerdict::ConsistentWithEpsPrivate);
        assert!(r.d1 <= 1e-9 && r.d2 <= 1e-9);
    }
    let r = check_eps_private(
        &KeyedChannelFamily::key_ignoring_identity(1).unwrap(),
        &KeyedChannelFamily::key_ignoring_identity(1).unwrap(),
        0.1,
        opts,
    )
    .unwrap();
    assert_eq!(r.verdict, PrivacyVerdict::Violates);
    assert!(r.d2 >= 1.5 - 1e-6);
    assert!(r.d1 <= 1e-9);
}

#[test]
fn circuit_and_channel_composition_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = random_unitary(4, &mut rng);
    let mut b = CircuitBuilder::new(2);
    b.unitary(u.clone(), vec![0, 1]);
    b.ancillas(1);
    b.cnot(1, 2);
    b.trace_out(vec![2]);
    let ch = to_channel(&b.build().unwrap()).unwrap();

    let first = QuantumChannel::unitary(&u).unwrap();
    let mut d = CircuitBuilder::new(2);
    d.ancillas(1);
    d.cnot(1, 2);
    d.trace_out(vec![2]);
    let dephase = to_channel(&d.build().unwrap()).unwrap();
    let composed = first.then(&dephase).unwrap();
    assert!(max_abs_diff(ch.choi(), composed.choi()) <= 1e-12);

    let rho = random_density_with(4, &mut rng);
    let lhs = ch.apply(&rho).unwrap();
    let rhs = dephase.apply(&first.apply(&rho).unwrap()).unwrap();
    assert!(max_abs_diff(lhs.matrix(), rhs.matrix()) <= 1e-12);
}

//! The experiment catalog. Each experiment appends report rows; seeds are
//! derived from the config seed with fixed offsets so rows do not depend on
//! which other experiments ran.

use qct_core::applications::{
    measure_then_x, min_output_entropy, nonidentity_stat, nonisometry_stat,
    pure_fixed_point_search,
};
use qct_core::channel::{
    check_eps_private, diamond_distance, DiamondOptions, KeyedChannelFamily, PrivacyVerdict,
    QuantumChannel,
};
use qct_core::circuit::{pauli_x, to_channel, CircuitBuilder};
use qct_core::linalg::{c, max_abs_diff, projector, random_unitary, CVector};
use qct_core::protocol::{
    accept_probability_by_keys, build_insecure_instance, build_secure_instance,
    exact_accept_probability, optimal_proof_accept, per_key_probe_distances,
    run_protocol_sampled, tensorized_security, DIInstance, SwapTest,
};
use qct_core::reduction::{build_ct_circuit, certify_no, certify_yes, copy_stage, CircuitFamily};
use qct_core::state::{
    random_density_with, random_effect_with, random_pure_state_with, tensor, trace_norm,
    von_neumann_entropy, DensityOperator,
};
use qct_core::verifier::{make_toy_verifier, ToyVerifier};
use qct_core::Result;
use rand_chacha::rand_core::SeedableRng;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::report::{Check, ReportRow, RowSink};

type Rng = rand_chacha::ChaCha8Rng;

fn rng(seed: u64, offset: u64) -> Rng {
    Rng::seed_from_u64(seed.wrapping_add(offset.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

fn at_most(tol: f64) -> Check {
    Check::AtMost { tol }
}

fn at_least(tol: f64) -> Check {
    Check::AtLeast { tol }
}

fn near(tol: f64) -> Check {
    Check::Near { tol }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, sink: &mut RowSink) -> Result<()> {
    match cfg.experiment {
        ExperimentKind::Norms => norms(cfg, sink),
        ExperimentKind::Reduction => reduction(cfg, sink),
        ExperimentKind::Applications => applications(cfg, sink),
        ExperimentKind::DiProtocol => di_protocol(cfg, sink),
        ExperimentKind::FullSuite => {
            norms(cfg, sink)?;
            reduction(cfg, sink)?;
            applications(cfg, sink)?;
            di_protocol(cfg, sink)
        }
    }
}

pub fn norms(cfg: &ExperimentConfig, sink: &mut RowSink) -> Result<()> {
    const E: &str = "norms";
    for n in 1..=2 {
        let avg = KeyedChannelFamily::pauli_otp(n)?.key_average()?;
        let omega = QuantumChannel::depolarizing(n, n)?;
        sink.push(ReportRow::new(
            E,
            format!("otp-key-average-equals-depolarizing-{n}q"),
            max_abs_diff(avg.choi(), omega.choi()),
            1e-12,
            at_most(0.0),
        ));
    }

    // Measurement continuity: tr(Xρ) ≤ tr(Xσ) + ‖ρ − σ‖_tr for effects X.
    let mut r = rng(cfg.seed, 1);
    let mut violations = 0usize;
    let mut worst_slack = f64::INFINITY;
    for dim in [2, 4, 8] {
        for _ in 0..200 {
            let x = random_effect_with(dim, &mut r);
            let rho = random_density_with(dim, &mut r);
            let sigma = random_density_with(dim, &mut r);
            let slack = sigma.expectation(&x)? + trace_norm(&(rho.matrix() - sigma.matrix()))?
                - rho.expectation(&x)?;
            worst_slack = worst_slack.min(slack);
            if slack < -1e-9 {
                violations += 1;
            }
        }
    }
    sink.push(ReportRow::new(E, "measurement-continuity-violations", violations as f64, 0.0, at_most(0.0)));
    sink.push(ReportRow::new(E, "measurement-continuity-min-slack", worst_slack, 0.0, at_least(1e-9)));

    let restarts = cfg.params.restarts;
    for (n, want) in [(1usize, 1.5), (2, 1.875)] {
        let id = QuantumChannel::identity(1 << n)?;
        let omega = QuantumChannel::depolarizing(n, n)?;
        let est = diamond_distance(&id, &omega, restarts, cfg.seed)?;
        sink.push(ReportRow::new(
            E,
            format!("diamond-identity-vs-depolarizing-{n}q"),
            est.value,
            want,
            near(1e-6),
        ));
    }
    let est = diamond_distance(
        &QuantumChannel::identity(2)?,
        &QuantumChannel::unitary(&pauli_x())?,
        restarts,
        cfg.seed,
    )?;
    sink.push(ReportRow::new(E, "diamond-identity-vs-pauli-x", est.value, 2.0, near(1e-6)));

    let opts = DiamondOptions {
        restarts,
        seed: cfg.seed,
    };
    let otp = check_eps_private(
        &KeyedChannelFamily::pauli_otp(1)?,
        &KeyedChannelFamily::pauli_otp_decryptor(1)?,
        0.01,
        opts,
    )?;
    sink.push(ReportRow::new(E, "otp-decryption-error", otp.d1, 1e-9, at_most(0.0)));
    sink.push(ReportRow::new(E, "otp-key-average-deviation", otp.d2, 1e-9, at_most(0.0)));
    sink.push(ReportRow::new(
        E,
        "otp-consistent-with-eps-private",
        indicator(otp.verdict == PrivacyVerdict::ConsistentWithEpsPrivate),
        1.0,
        near(0.0),
    ));
    let ignoring = KeyedChannelFamily::key_ignoring_identity(1)?;
    let leak = check_eps_private(&ignoring, &ignoring, 0.1, opts)?;
    sink.push(ReportRow::new(E, "key-ignoring-key-average-deviation", leak.d2, 1.5, at_least(1e-6)));
    sink.push(ReportRow::new(
        E,
        "key-ignoring-violates-eps-private",
        indicator(leak.verdict == PrivacyVerdict::Violates),
        1.0,
        near(0.0),
    ));
    sink.detail("privacy_otp", &otp);
    sink.detail("privacy_key_ignoring", &leak);
    Ok(())
}

fn deltas(cfg: &ExperimentConfig) -> Vec<f64> {
    let mut d = vec![1.0];
    if cfg.params.delta != 1.0 {
        d.push(cfg.params.delta);
    }
    d
}

pub fn reduction(cfg: &ExperimentConfig, sink: &mut RowSink) -> Result<()> {
    const E: &str = "reduction";
    let eps = cfg.params.eps;
    let bound = 3.0 * eps.sqrt();

    // Copy step against its closed forms and 3√· majorants.
    let mut worst_err: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for k in 0..10 {
        let p = 0.05 + 0.1 * k as f64;
        let v = make_toy_verifier(&ToyVerifier::rotation_for_accept(p)?)?;
        let (_, gamma) = v.max_accept_probability();
        let stage = copy_stage(&v, &gamma)?;
        let to_zero = 2.0 * (1.0 - (1.0 - p) * (1.0 - p)).sqrt();
        let to_one = 2.0 * (1.0 - p * p).sqrt();
        worst_err = worst_err
            .max((stage.distance_to_zero - to_zero).abs())
            .max((stage.distance_to_one - to_one).abs());
        worst_ratio = worst_ratio
            .max(stage.distance_to_zero / (3.0 * p.sqrt()))
            .max(stage.distance_to_one / (3.0 * (1.0 - p).sqrt()));
    }
    sink.push(ReportRow::new(E, "copy-step-closed-form-error", worst_err, 0.0, at_most(1e-9)));
    sink.push(ReportRow::new(E, "copy-step-majorant-ratio", worst_ratio, 1.0, Check::Below));

    let accepting = make_toy_verifier(&ToyVerifier::rotation_for_accept(1.0 - eps)?)?;
    let mut r = rng(cfg.seed, 2);
    let target = random_pure_state_with(2, &mut r);
    let exact = make_toy_verifier(&ToyVerifier::target_state(&target))?;
    let mut certs = Vec::new();
    for delta in deltas(cfg) {
        let inst =
            build_ct_circuit(&accepting, &CircuitFamily::Identity, &CircuitFamily::Depolarizing, eps, delta)?;
        let cert = certify_yes(&inst, &accepting, cfg.seed)?;
        sink.push(ReportRow::new(
            E,
            format!("yes-side-distance-delta-{delta}"),
            cert.measured_bound,
            bound,
            at_most(1e-9),
        ));
        let n = inst.input_qubits() as f64;
        sink.push(ReportRow::new(
            E,
            format!("dummy-register-width-delta-{delta}"),
            inst.dummy_qubits() as f64,
            n * (1.0 - delta),
            at_least(1e-9),
        ));
        certs.push(cert);

        let inst =
            build_ct_circuit(&exact, &CircuitFamily::Identity, &CircuitFamily::Depolarizing, 0.0, delta)?;
        let cert = certify_yes(&inst, &exact, cfg.seed)?;
        sink.push(ReportRow::new(
            E,
            format!("yes-side-exact-acceptance-delta-{delta}"),
            cert.measured_bound,
            0.0,
            at_most(1e-9),
        ));
        certs.push(cert);
    }

    let reject = make_toy_verifier(&ToyVerifier::AlwaysReject { witness_qubits: 1 })?;
    let inst = build_ct_circuit(&reject, &CircuitFamily::Identity, &CircuitFamily::Depolarizing, eps, cfg.params.delta)?;
    let cert = certify_no(&inst, &reject, cfg.params.restarts, cfg.params.samples, cfg.seed)?;
    sink.push(ReportRow::new(E, "no-side-always-reject-sampled", cert.measured_bound, 0.0, at_most(1e-9)));
    certs.push(cert);

    let rejecting = make_toy_verifier(&ToyVerifier::rotation_for_accept(eps)?)?;
    let inst = build_ct_circuit(&rejecting, &CircuitFamily::Identity, &CircuitFamily::Depolarizing, eps, cfg.params.delta)?;
    let cert = certify_no(&inst, &rejecting, cfg.params.restarts, cfg.params.samples, cfg.seed)?;
    sink.push(ReportRow::new(E, "no-side-rejecting-sampled", cert.measured_bound, bound, at_most(1e-6)));
    sink.push(ReportRow::new(
        E,
        "no-side-rejecting-diamond",
        cert.diamond_lower_bound.unwrap_or(f64::NAN),
        bound,
        at_most(1e-6),
    ));
    certs.push(cert);
    sink.detail("certificates", &certs);
    Ok(())
}

/// Fibonacci-sphere grid of `count` pure qubit states.
pub fn bloch_grid(count: usize) -> Vec<CVector> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let theta = z.acos();
            let phi = golden * i as f64;
            CVector::from_vec(vec![
                c((theta / 2.0).cos(), 0.0),
                c((theta / 2.0).sin() * phi.cos(), (theta / 2.0).sin() * phi.sin()),
            ])
        })
        .collect()
}

pub fn applications(cfg: &ExperimentConfig, sink: &mut RowSink) -> Result<()> {
    const E: &str = "applications";
    let p = &cfg.params;
    let mut r = rng(cfg.seed, 3);
    let mut verdicts = Vec::new();

    for n in 1..=p.n {
        let u = QuantumChannel::unitary(&random_unitary(1 << n, &mut r))?;
        let v = min_output_entropy(&u, p.eps, p.restarts, p.iters, cfg.seed)?;
        sink.push(ReportRow::new(E, format!("min-entropy-unitary-{n}q"), v.statistic, 0.0, near(1e-9)));
        verdicts.push(v);
        let omega = QuantumChannel::depolarizing(n, n)?;
        let v = min_output_entropy(&omega, p.eps, p.restarts, p.iters, cfg.seed)?;
        sink.push(ReportRow::new(
            E,
            format!("min-entropy-depolarizing-{n}q"),
            v.statistic,
            n as f64,
            near(1e-9),
        ));
        verdicts.push(v);
    }

    let half = QuantumChannel::mix(&[
        (0.5, &QuantumChannel::identity(2)?),
        (0.5, &QuantumChannel::depolarizing(1, 1)?),
    ])?;
    let oracle = bloch_grid(1000)
        .iter()
        .map(|psi| {
            let out = half.apply_with_reference(&projector(psi), 1)?;
            Ok(von_neumann_entropy(&DensityOperator::new(out)?))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let v = min_output_entropy(&half, p.eps, p.restarts, p.iters, cfg.seed)?;
    sink.push(ReportRow::new(E, "min-entropy-half-depolarizing-vs-grid", v.statistic, oracle, near(1e-3)));
    verdicts.push(v);

    let v = pure_fixed_point_search(&QuantumChannel::identity(2)?, p.eps, p.restarts, p.iters, cfg.seed)?;
    sink.push(ReportRow::new(E, "fixed-point-identity", v.statistic, 0.0, at_most(1e-9)));
    verdicts.push(v);
    let v = pure_fixed_point_search(&measure_then_x(), p.eps, p.restarts, p.iters, cfg.seed)?;
    sink.push(ReportRow::new(E, "fixed-point-measure-then-x", v.statistic, 1.0, at_least(1e-6)));
    verdicts.push(v);

    let mut b = CircuitBuilder::new(2);
    b.trace_out(vec![1]);
    let tr = to_channel(&b.build()?)?;
    let v = nonisometry_stat(&tr, p.eps, p.restarts, cfg.seed)?;
    sink.push(ReportRow::new(E, "nonisometry-trace-one-of-two", v.statistic, 0.5, at_most(1e-9)));
    verdicts.push(v);

    let v = nonidentity_stat(&QuantumChannel::unitary(&pauli_x())?, p.eps, p.restarts, cfg.seed)?;
    sink.push(ReportRow::new(E, "nonidentity-pauli-x", v.statistic, 2.0, near(1e-6)));
    verdicts.push(v);
    sink.detail("verdicts", &verdicts);
    Ok(())
}

pub fn di_protocol(cfg: &ExperimentConfig, sink: &mut RowSink) -> Result<()> {
    const E: &str = "di-protocol";
    let p = &cfg.params;
    let mut r = rng(cfg.seed, 4);

    for d in [2, 4] {
        let swap = SwapTest::new(d)?;
        let (mut pure_err, mut mixed_err): (f64, f64) = (0.0, 0.0);
        for _ in 0..20 {
            let psi = random_pure_state_with(d, &mut r);
            let phi = random_pure_state_with(d, &mut r);
            let got = swap.symmetric_probability(&tensor(&psi, &phi)?.projector())?;
            pure_err = pure_err.max((got - (1.0 + psi.overlap(&phi).norm_sqr()) / 2.0).abs());
            let rho = random_density_with(d, &mut r);
            let sigma = random_density_with(d, &mut r);
            let got = swap.symmetric_probability(tensor(&rho, &sigma)?.matrix())?;
            let want = (1.0 + (rho.matrix() * sigma.matrix()).trace().re) / 2.0;
            mixed_err = mixed_err.max((got - want).abs());
        }
        sink.push(ReportRow::new(E, format!("swap-test-pure-law-d{d}"), pure_err, 0.0, at_most(1e-9)));
        sink.push(ReportRow::new(E, format!("swap-test-mixed-law-d{d}"), mixed_err, 0.0, at_most(1e-9)));
    }

    let n = p.n;
    let d = (1u64 << n) as f64;
    let identity_family = DIInstance::custom(KeyedChannelFamily::key_ignoring_identity(n)?, 0.0, None)?;
    let psi = random_pure_state_with(identity_family.proof_half_dim(), &mut r);
    let doubled = projector(&psi.amplitudes().kronecker(psi.amplitudes()));
    let complete = exact_accept_probability(&identity_family, &doubled, "doubled_random")?;
    let p_complete = complete.p.unwrap_or(f64::NAN);
    sink.push(ReportRow::new(E, "protocol-completeness-identity-family", p_complete, 1.0, near(1e-9)));
    let sampled_complete = run_protocol_sampled(&identity_family, &doubled, "doubled_random", 1000, cfg.seed)?;
    let freq = sampled_complete.sampled.as_ref().map_or(f64::NAN, |s| s.freq);
    sink.push(ReportRow::new(E, "protocol-completeness-identity-family-sampled", freq, 1.0, near(0.0)));

    let secure = build_secure_instance(n, 0.0)?;
    let (p_star, proof) = optimal_proof_accept(&secure)?;
    let analytic = 0.5 + 1.0 / (2.0 * d);
    sink.push(ReportRow::new(E, "protocol-soundness-optimal-proof", p_star, analytic, near(1e-9)));
    let sampled = run_protocol_sampled(&secure, &proof.projector(), "optimal", p.shots, cfg.seed)?;
    let stats = sampled.sampled.clone().expect("sampled mode reports counts");
    sink.push(ReportRow::new(
        E,
        "protocol-soundness-sampled-wilson",
        stats.freq,
        analytic,
        Check::IntervalContains {
            lo: stats.ci95[0],
            hi: stats.ci95[1],
        },
    ));
    sink.push(ReportRow::new(E, "protocol-gap", p_complete - p_star, 0.5 - 1.0 / (2.0 * d), at_least(1e-6)));

    let accepting = make_toy_verifier(&ToyVerifier::rotation_for_accept(1.0 - p.eps)?)?;
    let insecure = build_insecure_instance(&accepting, p.eps, p.delta)?;
    let probes = insecure.accepting_probes(cfg.seed)?;
    let worst = per_key_probe_distances(&insecure, &probes)?
        .into_iter()
        .fold(0.0, f64::max);
    sink.push(ReportRow::new(E, "insecure-per-key-probe-distance", worst, 3.0 * p.eps.sqrt(), at_most(1e-9)));
    let witness_proof = insecure.completeness_proof()?;
    let from_witness = exact_accept_probability(&insecure, &witness_proof.projector(), "doubled_accepting")?;
    sink.push(ReportRow::new(
        E,
        "protocol-completeness-from-verifier",
        from_witness.p.unwrap_or(f64::NAN),
        1.0 - 2.0 * p.eps,
        at_least(1e-9),
    ));

    let mut linearity: f64 = 0.0;
    for inst in [&secure, &insecure] {
        let half = inst.proof_half_dim();
        let rho = random_density_with(half * half, &mut r);
        let fast = exact_accept_probability(inst, rho.matrix(), "random")?.p.unwrap_or(f64::NAN);
        let slow = accept_probability_by_keys(inst, rho.matrix())?;
        linearity = linearity.max((fast - slow).abs());
    }
    sink.push(ReportRow::new(E, "protocol-key-linearity", linearity, 0.0, at_most(1e-12)));

    let opts = DiamondOptions {
        restarts: p.restarts,
        seed: cfg.seed,
    };
    let tensorized = tensorized_security(&identity_family, p.samples.min(20), opts)?;
    sink.push(ReportRow::new(E, "tensorized-two-copy-deviation", tensorized.two_copy, 2.0 * tensorized.d2, at_most(1e-9)));

    sink.detail("completeness", &complete);
    sink.detail("soundness_sampled", &sampled);
    sink.detail("tensorized", &tensorized);
    Ok(())
}

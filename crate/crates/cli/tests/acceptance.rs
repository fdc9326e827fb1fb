//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints its PASS/FAIL line even when output capture is on.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use qct::config::{ExperimentConfig, Overrides};
use qct::report::{ReportBody, ReportRow};
use qct_core::channel::KeyedChannelFamily;
use qct_core::linalg::CMatrix;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> ExperimentConfig {
    let path = repo().join("configs").join(name);
    ExperimentConfig::load(&path, &Overrides::default()).unwrap_or_else(|e| panic!("{e}"))
}

fn suite() -> &'static ReportBody {
    static SUITE: OnceLock<ReportBody> = OnceLock::new();
    SUITE.get_or_init(|| qct::run(&config("full-suite.toml")).expect("full suite runs").0)
}

fn row<'a>(body: &'a ReportBody, experiment: &str, claim: &str) -> &'a ReportRow {
    body.rows
        .iter()
        .find(|r| r.experiment == experiment && r.claim == claim)
        .unwrap_or_else(|| panic!("missing row {experiment}/{claim}"))
}

/// Asserts the row passed and that its check has the stated tolerance shape.
fn expect(body: &ReportBody, experiment: &str, claim: &str) -> String {
    let r = row(body, experiment, claim);
    assert!(
        r.pass,
        "{experiment}/{claim}: measured {} vs bound {} ({:?})",
        r.measured, r.bound, r.check
    );
    format!("{claim}={:.3e}", r.measured)
}

fn criterion_1() -> String {
    let body = suite();
    let mut notes = vec![];
    for n in 1..=2usize {
        notes.push(expect(body, "norms", &format!("otp-key-average-equals-depolarizing-{n}q")));
        // Independent oracle: Ω has Choi matrix I/2^n in the output⊗input layout.
        let avg = KeyedChannelFamily::pauli_otp(n).unwrap().key_average().unwrap();
        let d = 1usize << n;
        let want = CMatrix::identity(d * d, d * d) / qct_core::linalg::c(d as f64, 0.0);
        let err = (avg.choi() - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err <= 1e-12, "n={n}: entrywise error {err}");
    }
    notes.join(" ")
}

fn criterion_2() -> String {
    let body = suite();
    let v = row(body, "norms", "measurement-continuity-violations");
    assert_eq!(v.measured, 0.0);
    expect(body, "norms", "measurement-continuity-violations");
    expect(body, "norms", "measurement-continuity-min-slack")
}

fn criterion_3() -> String {
    let body = suite();
    let mut notes = vec![];
    for d in [2, 4] {
        for law in ["pure", "mixed"] {
            let claim = format!("swap-test-{law}-law-d{d}");
            let r = row(body, "di-protocol", &claim);
            assert!(r.measured <= 1e-9);
            notes.push(expect(body, "di-protocol", &claim));
        }
    }
    notes.join(" ")
}

fn criterion_4() -> String {
    let body = suite();
    let err = row(body, "reduction", "copy-step-closed-form-error");
    assert!(err.measured <= 1e-9);
    let ratio = row(body, "reduction", "copy-step-majorant-ratio");
    assert!(ratio.measured < 1.0);
    [
        expect(body, "reduction", "copy-step-closed-form-error"),
        expect(body, "reduction", "copy-step-majorant-ratio"),
    ]
    .join(" ")
}

fn criterion_5() -> String {
    let body = suite();
    assert_eq!(body.params["eps"].as_f64(), Some(0.04));
    let mut notes = vec![];
    for delta in ["1", "0.5"] {
        let yes = row(body, "reduction", &format!("yes-side-distance-delta-{delta}"));
        assert!(yes.measured <= 0.6 + 1e-9);
        let exact = row(body, "reduction", &format!("yes-side-exact-acceptance-delta-{delta}"));
        assert!(exact.measured <= 1e-9);
        notes.push(expect(body, "reduction", &format!("yes-side-distance-delta-{delta}")));
        notes.push(expect(body, "reduction", &format!("yes-side-exact-acceptance-delta-{delta}")));
        notes.push(expect(body, "reduction", &format!("dummy-register-width-delta-{delta}")));
    }
    notes.join(" ")
}

fn criterion_6() -> String {
    let body = suite();
    assert_eq!(body.params["samples"].as_u64(), Some(50));
    let always = row(body, "reduction", "no-side-always-reject-sampled");
    assert!(always.measured <= 1e-9);
    for claim in ["no-side-rejecting-sampled", "no-side-rejecting-diamond"] {
        assert!(row(body, "reduction", claim).measured <= 0.6 + 1e-6);
    }
    [
        expect(body, "reduction", "no-side-always-reject-sampled"),
        expect(body, "reduction", "no-side-rejecting-sampled"),
        expect(body, "reduction", "no-side-rejecting-diamond"),
    ]
    .join(" ")
}

fn criterion_7() -> String {
    let body = suite();
    assert_eq!(body.params["restarts"].as_u64(), Some(20));
    let mut notes = vec![];
    for (claim, want) in [
        ("diamond-identity-vs-depolarizing-1q", 1.5),
        ("diamond-identity-vs-depolarizing-2q", 1.875),
        ("diamond-identity-vs-pauli-x", 2.0),
    ] {
        let r = row(body, "norms", claim);
        assert!((r.measured - want).abs() <= 1e-6, "{claim}: {}", r.measured);
        notes.push(expect(body, "norms", claim));
    }
    notes.join(" ")
}

fn criterion_8() -> String {
    let body = suite();
    let complete = row(body, "di-protocol", "protocol-completeness-identity-family");
    assert!((complete.measured - 1.0).abs() <= 1e-9);
    let p_star = row(body, "di-protocol", "protocol-soundness-optimal-proof");
    assert!((p_star.measured - 0.75).abs() <= 1e-9);

    let sampled = &body.details["soundness_sampled"]["sampled"];
    let shots = sampled["shots"].as_u64().unwrap();
    assert_eq!(shots, 100_000);
    let freq = sampled["freq"].as_f64().unwrap();
    // 0.75 lies in the Wilson interval of `freq` exactly when the score
    // statistic at 0.75 is within z.
    let z = 1.959963984540054;
    let score = (freq - 0.75).abs() / (0.75 * 0.25 / shots as f64).sqrt();
    assert!(score <= z, "score {score}");
    expect(body, "di-protocol", "protocol-soundness-sampled-wilson");

    let gap = row(body, "di-protocol", "protocol-gap");
    assert!(gap.measured >= 0.25 - 1e-6);
    [
        expect(body, "di-protocol", "protocol-completeness-identity-family"),
        expect(body, "di-protocol", "protocol-soundness-optimal-proof"),
        format!("freq={freq} score={score:.3}"),
        expect(body, "di-protocol", "protocol-gap"),
    ]
    .join(" ")
}

fn criterion_9() -> String {
    let body = suite();
    let otp = &body.details["privacy_otp"];
    assert_eq!(otp["verdict"], "CONSISTENT-WITH-EPS-PRIVATE");
    assert!(otp["d1"].as_f64().unwrap() <= 1e-9);
    assert!(otp["d2"].as_f64().unwrap() <= 1e-9);
    let leak = &body.details["privacy_key_ignoring"];
    assert_eq!(leak["verdict"], "VIOLATES");
    assert!(leak["d2"].as_f64().unwrap() >= 1.5 - 1e-6);
    [
        expect(body, "norms", "otp-decryption-error"),
        expect(body, "norms", "otp-key-average-deviation"),
        expect(body, "norms", "otp-consistent-with-eps-private"),
        expect(body, "norms", "key-ignoring-key-average-deviation"),
        expect(body, "norms", "key-ignoring-violates-eps-private"),
    ]
    .join(" ")
}

fn criterion_10() -> String {
    let body = suite();
    let two = qct::run(&config("applications-2q.toml")).expect("applications run").0;
    let mut notes = vec![];
    for (b, n) in [(body, 1), (&two, 2)] {
        let u = row(b, "applications", &format!("min-entropy-unitary-{n}q"));
        assert!(u.measured.abs() <= 1e-9);
        let o = row(b, "applications", &format!("min-entropy-depolarizing-{n}q"));
        assert!((o.measured - n as f64).abs() <= 1e-9);
        notes.push(expect(b, "applications", &format!("min-entropy-unitary-{n}q")));
        notes.push(expect(b, "applications", &format!("min-entropy-depolarizing-{n}q")));
    }
    let grid = row(body, "applications", "min-entropy-half-depolarizing-vs-grid");
    assert!((grid.measured - grid.bound).abs() <= 1e-3);
    assert!(row(body, "applications", "fixed-point-identity").measured.abs() <= 1e-9);
    assert!(row(body, "applications", "fixed-point-measure-then-x").measured >= 1.0 - 1e-6);
    assert!(row(body, "applications", "nonisometry-trace-one-of-two").measured <= 0.5 + 1e-9);
    for claim in [
        "min-entropy-half-depolarizing-vs-grid",
        "fixed-point-identity",
        "fixed-point-measure-then-x",
        "nonisometry-trace-one-of-two",
    ] {
        notes.push(expect(body, "applications", claim));
    }
    notes.join(" ")
}

fn criterion_11() -> String {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo().join("configs/full-suite.toml");
    let mut outputs = vec![];
    for i in 0..2 {
        let out = dir.path().join(format!("run{i}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_qct"))
            .arg("run")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .expect("binary runs");
        assert!(status.status.success(), "run {i} exited with {:?}", status.status);
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1], "reports differ between runs");
    assert_eq!(outputs[0], suite().to_json().into_bytes(), "library and binary reports differ");
    format!("{} identical bytes", outputs[0].len())
}

fn main() {
    let criteria: [(&str, fn() -> String); 11] = [
        ("OTP key average equals the depolarizing channel", criterion_1),
        ("measurement continuity over random triples", criterion_2),
        ("swap-test laws", criterion_3),
        ("copy-step closed forms and majorants", criterion_4),
        ("YES-side certification", criterion_5),
        ("NO-side certification", criterion_6),
        ("diamond-norm oracle values", criterion_7),
        ("protocol completeness/soundness gap", criterion_8),
        ("eps-private verdicts", criterion_9),
        ("applications sanity", criterion_10),
        ("full-suite determinism", criterion_11),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {title} [{secs:.2}s] {detail}", i + 1),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL criterion {}: {title} [{secs:.2}s] {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

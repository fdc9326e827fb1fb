//! Numerical checkers for four circuit-testing special cases: non-identity,
//! non-isometry, pure fixed point and minimum output entropy.
//!
//! Each statistic is a max or min over pure inputs found by multi-restart
//! local search, so it certifies one side of its promise (a witness attains
//! it) and is only heuristic evidence for the other.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{diamond_distance, QuantumChannel};
use crate::error::{QctError, Result};
use crate::linalg::{
    basis_vector, eigh, max_entangled_unnormalized, projector, random_unit_vector, CMatrix,
    CVector,
};
use crate::state::{entropy_of_spectrum, trace_norm, PureState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Problem {
    NonIdentity,
    NonIsometry,
    PureFixedPoint,
    MinOutputEntropy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictSide {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
    /// Inside the promise gap.
    #[serde(rename = "GAP")]
    Gap,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProblemVerdict {
    pub problem: Problem,
    pub statistic: f64,
    pub eps: f64,
    pub yes_bound: f64,
    pub no_bound: f64,
    pub side: VerdictSide,
    /// The statistic landed on one side of the promise.
    pub side_consistent: bool,
    /// The side rests on the search not finding a better input.
    pub heuristic: bool,
    /// Part of the YES condition that this checker does not verify.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unaudited: Option<&'static str>,
    pub witness: Vec<[f64; 2]>,
    pub seed: u64,
}

impl ProblemVerdict {
    fn new(
        problem: Problem,
        statistic: f64,
        eps: f64,
        witness: &PureState,
        seed: u64,
        log_dim: f64,
    ) -> Self {
        // Larger-is-YES problems compare against (yes ≥ …, no ≤ …).
        let (yes_bound, no_bound, larger_is_yes) = match problem {
            Problem::NonIdentity => (2.0 - eps, eps, true),
            Problem::NonIsometry => (eps, 1.0 - eps, false),
            Problem::PureFixedPoint => (eps, 2.0 - eps, false),
            Problem::MinOutputEntropy => (eps * log_dim, (1.0 - eps) * log_dim, false),
        };
        let (yes, no) = if larger_is_yes {
            (statistic >= yes_bound, statistic <= no_bound)
        } else {
            (statistic <= yes_bound, statistic >= no_bound)
        };
        let side = match (yes, no) {
            (true, _) => VerdictSide::Yes,
            (false, true) => VerdictSide::No,
            _ => VerdictSide::Gap,
        };
        // The ascent certifies large diamond values and the minimizers certify
        // small statistics, so only NO rests on the search.
        let heuristic = side == VerdictSide::No;
        ProblemVerdict {
            problem,
            statistic,
            eps,
            yes_bound,
            no_bound,
            side,
            side_consistent: side != VerdictSide::Gap,
            heuristic,
            unaudited: match problem {
                Problem::NonIdentity => {
                    Some("existence of an efficient unitary far from identity that C approximates on some state")
                }
                _ => None,
            },
            witness: witness.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
            seed,
        }
    }
}

fn require_square(c: &QuantumChannel) -> Result<()> {
    if c.dim_in() != c.dim_out() {
        return Err(QctError::mismatch("channel output", c.dim_in(), c.dim_out()));
    }
    Ok(())
}

fn log2_dim(d: usize) -> f64 {
    (d as f64).log2()
}

pub fn nonidentity_stat(
    c: &QuantumChannel,
    eps: f64,
    restarts: usize,
    seed: u64,
) -> Result<ProblemVerdict> {
    require_square(c)?;
    let id = QuantumChannel::identity(c.dim_in())?;
    let est = diamond_distance(c, &id, restarts, seed)?;
    Ok(ProblemVerdict::new(
        Problem::NonIdentity,
        est.value,
        eps,
        &est.witness,
        seed,
        log2_dim(c.dim_in()),
    ))
}

const SMOOTHING: f64 = 32.0;
const DESCENT_ITERS: usize = 400;

/// Riemannian descent on the unit sphere with backtracking. `objective`
/// returns (smoothed value, reported value, Euclidean gradient direction).
fn sphere_descent(
    start: CVector,
    iters: usize,
    objective: &(dyn Fn(&CVector) -> (f64, f64, CVector) + Sync),
) -> (f64, CVector) {
    let mut psi = start;
    let (mut smooth, reported, mut grad) = objective(&psi);
    let mut best = (reported, psi.clone());
    let mut step = 1.0;
    for _ in 0..iters {
        let radial = psi.dotc(&grad);
        let tangent = &grad - &psi * radial;
        let tn = tangent.norm();
        if tn < 1e-14 {
            break;
        }
        let mut moved = false;
        for _ in 0..40 {
            let trial = &psi - &tangent * crate::linalg::c(step / tn, 0.0);
            let trial = trial.unscale(trial.norm());
            let (s, r, g) = objective(&trial);
            if s < smooth {
                psi = trial;
                smooth = s;
                grad = g;
                if r < best.0 {
                    best = (r, psi.clone());
                }
                moved = true;
                step = (step * 2.0).min(1.0);
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    best
}

/// Runs `descent` from the given deterministic candidates and from
/// `restarts` Haar-random starts; returns the smallest reported value, ties
/// going to the earliest start.
fn multistart(
    dim: usize,
    fixed: Vec<CVector>,
    restarts: usize,
    seed: u64,
    descent: &(dyn Fn(CVector) -> (f64, CVector) + Sync),
) -> (f64, CVector) {
    let randoms: Vec<CVector> = (0..restarts)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            random_unit_vector(dim, &mut rng)
        })
        .collect();
    let starts: Vec<CVector> = fixed.into_iter().chain(randoms).collect();
    let runs: Vec<(f64, CVector)> = starts.into_par_iter().map(descent).collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.0 < runs[best].0 {
            best = i;
        }
    }
    runs[best].clone()
}

/// Smallest largest-eigenvalue of `(C ⊗ id)(ψψ†)` over pure `ψ` on input ⊗
/// input.
pub fn nonisometry_stat(
    c: &QuantumChannel,
    eps: f64,
    restarts: usize,
    seed: u64,
) -> Result<ProblemVerdict> {
    let d = c.dim_in();
    crate::cap::check_dim(c.dim_out() * d, "non-isometry search")?;
    let objective = |psi: &CVector| -> (f64, f64, CVector) {
        let y = c
            .apply_with_reference(&projector(psi), d)
            .expect("dimensions checked above");
        let (vals, vecs) = eigh(&y);
        let top = vals.last().copied().unwrap_or(0.0).max(1e-300);
        // (tr Y^q)^{1/q}, computed relative to the top eigenvalue.
        let mut sum = 0.0;
        let mut weighted = CMatrix::zeros(y.nrows(), y.ncols());
        for (i, &v) in vals.iter().enumerate() {
            let r = (v.max(0.0) / top).powf(SMOOTHING - 1.0);
            sum += r * v.max(0.0) / top;
            if r > 1e-18 {
                let col = vecs.column(i);
                weighted += (&col * col.adjoint()).scale(r);
            }
        }
        let smooth = top * sum.powf(1.0 / SMOOTHING);
        let pulled = c
            .adjoint_with_reference(&weighted, d)
            .expect("dimensions checked above");
        (smooth, top, pulled * psi)
    };
    let bell = max_entangled_unnormalized(d).unscale((d as f64).sqrt());
    let (value, psi) = multistart(d * d, vec![bell], restarts, seed, &|start| {
        sphere_descent(start, DESCENT_ITERS, &objective)
    });
    Ok(ProblemVerdict::new(
        Problem::NonIsometry,
        value,
        eps,
        &PureState::normalized(psi)?,
        seed,
        log2_dim(d),
    ))
}

/// Iterates `ψ ← top eigenvector of C(ψψ†)` from deterministic and random
/// starts and reports the smallest `‖C(ψψ†) − ψψ†‖_tr` seen.
pub fn pure_fixed_point_search(
    c: &QuantumChannel,
    eps: f64,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<ProblemVerdict> {
    require_square(c)?;
    let d = c.dim_in();
    let distance = |psi: &CVector| -> (f64, CMatrix) {
        let rho = projector(psi);
        let out = c.apply_with_reference(&rho, 1).expect("dimension checked");
        let dist = trace_norm(&(&out - &rho)).unwrap_or(f64::INFINITY);
        (dist, out)
    };
    let iterate = |start: CVector| -> (f64, CVector) {
        let mut psi = start;
        let (mut dist, mut out) = distance(&psi);
        let mut best = (dist, psi.clone());
        for _ in 0..iters {
            let next = top_eigenvector_near(&out, &psi);
            if (next.dotc(&psi)).norm() > 1.0 - 1e-15 {
                break;
            }
            psi = next;
            (dist, out) = distance(&psi);
            if dist < best.0 {
                best = (dist, psi.clone());
            }
        }
        best
    };
    // Deterministic starts: the uniform superposition, then the basis states.
    let mut fixed = vec![CVector::from_element(d, crate::linalg::c(1.0 / (d as f64).sqrt(), 0.0))];
    fixed.extend((0..d).map(|i| basis_vector(d, i)));
    let (value, psi) = multistart(d, fixed, restarts, seed, &iterate);
    Ok(ProblemVerdict::new(
        Problem::PureFixedPoint,
        value,
        eps,
        &PureState::normalized(psi)?,
        seed,
        log2_dim(d),
    ))
}

/// Top eigenvector of a Hermitian matrix; on a degenerate top eigenvalue,
/// the unit vector of that eigenspace closest to `previous`.
fn top_eigenvector_near(m: &CMatrix, previous: &CVector) -> CVector {
    let (vals, vecs) = eigh(m);
    let top = *vals.last().expect("non-empty matrix");
    let n = vals.len();
    let mut proj = CVector::zeros(n);
    let mut count = 0;
    for i in (0..n).rev() {
        if top - vals[i] > 1e-9 {
            break;
        }
        count += 1;
        let col = vecs.column(i);
        proj += &col * col.dotc(previous);
    }
    let norm = proj.norm();
    if count > 1 && norm > 1e-9 {
        proj.unscale(norm)
    } else {
        vecs.column(n - 1).into_owned()
    }
}

/// Smallest von Neumann entropy (bits) of `C(ψψ†)` over pure inputs.
pub fn min_output_entropy(
    c: &QuantumChannel,
    eps: f64,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<ProblemVerdict> {
    let d = c.dim_in();
    let objective = |psi: &CVector| -> (f64, f64, CVector) {
        let y = c.apply_with_reference(&projector(psi), 1).expect("dimension checked");
        let (vals, vecs) = eigh(&y);
        let s = entropy_of_spectrum(&vals);
        let mut neg_log = CMatrix::zeros(y.nrows(), y.ncols());
        for (i, &v) in vals.iter().enumerate() {
            let col = vecs.column(i);
            neg_log += (&col * col.adjoint()).scale(-v.max(1e-14).log2());
        }
        let pulled = c.adjoint_with_reference(&neg_log, 1).expect("dimension checked");
        (s, s, pulled * psi)
    };
    let fixed: Vec<CVector> = (0..d).map(|i| basis_vector(d, i)).collect();
    let (value, psi) = multistart(d, fixed, restarts, seed, &|start| {
        sphere_descent(start, iters, &objective)
    });
    Ok(ProblemVerdict::new(
        Problem::MinOutputEntropy,
        value,
        eps,
        &PureState::normalized(psi)?,
        seed,
        log2_dim(d),
    ))
}

/// Computational-basis measurement followed by Pauli X on one qubit.
pub fn measure_then_x() -> QuantumChannel {
    let k0 = CMatrix::from_fn(2, 2, |r, c| crate::linalg::c((r == 1 && c == 0) as u8 as f64, 0.0));
    let k1 = CMatrix::from_fn(2, 2, |r, c| crate::linalg::c((r == 0 && c == 1) as u8 as f64, 0.0));
    QuantumChannel::from_kraus(&[k0, k1]).expect("valid Kraus pair")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{pauli_x, rz, to_channel, CircuitBuilder};

    #[test]
    fn nonidentity_examples() {
        let id = QuantumChannel::identity(2).unwrap();
        let v = nonidentity_stat(&id, 0.1, 3, 1).unwrap();
        assert!(v.statistic.abs() < 1e-12);
        assert_eq!(v.side, VerdictSide::No);
        assert!(v.heuristic);

        let x = QuantumChannel::unitary(&pauli_x()).unwrap();
        let v = nonidentity_stat(&x, 0.1, 3, 1).unwrap();
        assert!((v.statistic - 2.0).abs() < 1e-6);
        assert_eq!(v.side, VerdictSide::Yes);

        for theta in [0.4, 1.3, 2.5] {
            let z = QuantumChannel::unitary(&rz(theta)).unwrap();
            let v = nonidentity_stat(&z, 0.1, 5, 2).unwrap();
            let want = 2.0 * (theta / 2.0).sin().abs();
            assert!((v.statistic - want).abs() < 1e-6, "{theta}: {}", v.statistic);
        }
    }

    #[test]
    fn nonisometry_examples() {
        let omega = QuantumChannel::depolarizing(1, 1).unwrap();
        let v = nonisometry_stat(&omega, 0.1, 3, 1).unwrap();
        assert!(v.statistic <= 0.5 + 1e-9);

        let u = QuantumChannel::unitary(&rz(0.7)).unwrap();
        let v = nonisometry_stat(&u, 0.1, 3, 1).unwrap();
        assert!((v.statistic - 1.0).abs() < 1e-9);
        assert_eq!(v.side, VerdictSide::No);

        let mut b = CircuitBuilder::new(2);
        b.trace_out(vec![1]);
        let tr = to_channel(&b.build().unwrap()).unwrap();
        let v = nonisometry_stat(&tr, 0.1, 3, 1).unwrap();
        assert!(v.statistic <= 0.5 + 1e-9, "{}", v.statistic);
        assert!(v.statistic >= 0.5 - 1e-9);
    }

    #[test]
    fn fixed_point_examples() {
        let id = QuantumChannel::identity(2).unwrap();
        let v = pure_fixed_point_search(&id, 0.1, 3, 20, 1).unwrap();
        assert!(v.statistic < 1e-9);
        assert_eq!(v.side, VerdictSide::Yes);

        let omega = QuantumChannel::depolarizing(1, 1).unwrap();
        let v = pure_fixed_point_search(&omega, 0.1, 3, 20, 1).unwrap();
        assert!((v.statistic - 1.0).abs() < 1e-9);
        assert_eq!(v.side, VerdictSide::Gap);

        let v = pure_fixed_point_search(&measure_then_x(), 0.1, 8, 50, 1).unwrap();
        assert!(v.statistic >= 1.0 - 1e-6, "{}", v.statistic);
    }

    #[test]
    fn entropy_examples() {
        let u = QuantumChannel::unitary(&rz(0.3)).unwrap();
        assert!(min_output_entropy(&u, 0.1, 2, 50, 1).unwrap().statistic.abs() < 1e-9);
        let omega = QuantumChannel::depolarizing(2, 2).unwrap();
        let v = min_output_entropy(&omega, 0.1, 2, 50, 1).unwrap();
        assert!((v.statistic - 2.0).abs() < 1e-9);
        assert_eq!(v.side, VerdictSide::No);
    }
}

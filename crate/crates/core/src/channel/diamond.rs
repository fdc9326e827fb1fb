use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cap::check_dim;
use crate::error::{QctError, Result};
use crate::linalg::{
    apply_choi_adjoint_on_factor, apply_choi_on_factor, eigh, projector, random_unit_vector,
    top_eigenpair, CMatrix, CVector,
};
use crate::state::PureState;

use super::QuantumChannel;

const MAX_ITERS: usize = 1000;
const STALL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiamondOptions {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for DiamondOptions {
    fn default() -> Self {
        DiamondOptions {
            restarts: 20,
            seed: 0,
        }
    }
}

/// Best input found by the ascent. `value` is a lower bound on the
/// distance it estimates.
#[derive(Clone, Debug)]
pub struct DiamondEstimate {
    pub value: f64,
    pub witness: PureState,
    pub restart: usize,
}

/// Lower bound on `‖a − b‖_⋄`, maximizing over pure inputs on
/// input ⊗ reference with a reference as large as the input.
pub fn diamond_distance(
    a: &QuantumChannel,
    b: &QuantumChannel,
    restarts: usize,
    seed: u64,
) -> Result<DiamondEstimate> {
    diamond_distance_with(a, b, a.dim_in(), DiamondOptions { restarts, seed })
}

/// Same ascent with an arbitrary reference dimension. `ref_dim = 1` gives
/// the reference-free trace-norm distance `max_ψ ‖(a − b)(ψψ†)‖_tr`.
pub fn diamond_distance_with(
    a: &QuantumChannel,
    b: &QuantumChannel,
    ref_dim: usize,
    options: DiamondOptions,
) -> Result<DiamondEstimate> {
    a.check_same_dims(b)?;
    let diff = a.choi() - b.choi();
    map_distance(&diff, a.dim_in(), a.dim_out(), ref_dim, options)
}

/// Ascent for an arbitrary Hermiticity-preserving map given by its Choi
/// matrix (output ⊗ input ordering).
pub fn map_distance(
    choi: &CMatrix,
    dim_in: usize,
    dim_out: usize,
    ref_dim: usize,
    options: DiamondOptions,
) -> Result<DiamondEstimate> {
    if choi.nrows() != dim_in * dim_out {
        return Err(QctError::mismatch("difference map", dim_in * dim_out, choi.nrows()));
    }
    if ref_dim == 0 || options.restarts == 0 {
        return Err(QctError::InvalidParameter(
            "distance ascent needs a reference and at least one restart".into(),
        ));
    }
    check_dim(dim_in * ref_dim, "distance ascent input")?;
    check_dim(dim_out * ref_dim, "distance ascent output")?;
    let runs: Vec<(f64, CVector)> = (0..options.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(r as u64);
            let start = random_unit_vector(dim_in * ref_dim, &mut rng);
            ascend(choi, dim_in, dim_out, ref_dim, start)
        })
        .collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.0 > runs[best].0 {
            best = i;
        }
    }
    let (value, psi) = runs[best].clone();
    Ok(DiamondEstimate {
        value,
        witness: PureState::normalized(psi)?,
        restart: best,
    })
}

/// Trace norm of the map's output on `psi` and the sign observable that
/// attains it.
fn evaluate(
    choi: &CMatrix,
    dim_in: usize,
    dim_out: usize,
    ref_dim: usize,
    psi: &CVector,
) -> (f64, CMatrix) {
    let y = apply_choi_on_factor(choi, dim_in, dim_out, &projector(psi), &[dim_in, ref_dim], 0);
    let (vals, vecs) = eigh(&y);
    let mut sign = CMatrix::zeros(y.nrows(), y.ncols());
    let mut norm = 0.0;
    for (i, &v) in vals.iter().enumerate() {
        norm += v.abs();
        let col = vecs.column(i);
        let p = &col * col.adjoint();
        if v >= 0.0 {
            sign += p;
        } else {
            sign -= p;
        }
    }
    (norm, sign)
}

fn ascend(
    choi: &CMatrix,
    dim_in: usize,
    dim_out: usize,
    ref_dim: usize,
    start: CVector,
) -> (f64, CVector) {
    let mut psi = start;
    let (mut value, mut sign) = evaluate(choi, dim_in, dim_out, ref_dim, &psi);
    for _ in 0..MAX_ITERS {
        let pulled =
            apply_choi_adjoint_on_factor(choi, dim_in, dim_out, &sign, &[dim_out, ref_dim], 0);
        let (_, next) = top_eigenpair(&pulled);
        let (next_value, next_sign) = evaluate(choi, dim_in, dim_out, ref_dim, &next);
        if next_value <= value + STALL {
            if next_value > value {
                value = next_value;
                psi = next;
            }
            break;
        }
        value = next_value;
        psi = next;
        sign = next_sign;
    }
    (value, psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::pauli_x;

    #[test]
    fn same_channel_is_zero() {
        let omega = QuantumChannel::depolarizing(1, 1).unwrap();
        let est = diamond_distance(&omega, &omega, 3, 1).unwrap();
        assert!(est.value.abs() <= 1e-12);
    }

    #[test]
    fn identity_vs_x() {
        let id = QuantumChannel::identity(2).unwrap();
        let x = QuantumChannel::unitary(&pauli_x()).unwrap();
        let est = diamond_distance(&id, &x, 5, 3).unwrap();
        assert!((est.value - 2.0).abs() <= 1e-6, "{}", est.value);
    }

    #[test]
    fn deterministic_per_seed() {
        let id = QuantumChannel::identity(2).unwrap();
        let omega = QuantumChannel::depolarizing(1, 1).unwrap();
        let a = diamond_distance(&id, &omega, 4, 11).unwrap();
        let b = diamond_distance(&id, &omega, 4, 11).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.witness, b.witness);
    }
}

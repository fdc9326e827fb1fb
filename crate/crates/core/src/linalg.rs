//! Dense complex kernels over qubit-indexed matrices.
//!
//! Index convention: qubit 0 is the least significant bit of a basis index,
//! so in a Kronecker product `a ⊗ b` the factor `b` occupies the low qubits.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{QctError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn basis_vector(dim: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[index] = ONE;
    v
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Only the Hermitian part of `m` is decomposed.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    eigh(m).0
}

/// Largest eigenpair of a Hermitian matrix.
pub fn top_eigenpair(m: &CMatrix) -> (f64, CVector) {
    let (values, vectors) = eigh(m);
    let last = values.len() - 1;
    (values[last], vectors.column(last).into_owned())
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = eigh(m);
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let s = f(lambda);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    scaled * vectors.adjoint()
}

pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    u.is_square() && max_abs_diff(&(u.adjoint() * u), &identity(u.nrows())) <= tol
}

/// Unnormalized maximally entangled vector `Σ_i |i⟩ ⊗ |i⟩`.
pub fn max_entangled_unnormalized(dim: usize) -> CVector {
    let mut v = CVector::zeros(dim * dim);
    for i in 0..dim {
        v[i * dim + i] = ONE;
    }
    v
}

fn scatter_bits(value: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (bit, &pos)| acc | (((value >> bit) & 1) << pos))
}

/// Multiplies every column of `m` by the gate `u` acting on `targets`,
/// conditioned on every qubit in `controls` being 1.
fn apply_left(m: &mut CMatrix, u: &CMatrix, targets: &[usize], controls: &[usize]) {
    let dim = m.nrows();
    let k = targets.len();
    let block = 1usize << k;
    let target_mask = targets.iter().fold(0, |acc, &t| acc | (1 << t));
    let control_mask = controls.iter().fold(0, |acc, &t| acc | (1 << t));
    let offsets: Vec<usize> = (0..block).map(|l| scatter_bits(l, targets)).collect();
    let bases: Vec<usize> = (0..dim)
        .filter(|&i| i & target_mask == 0 && i & control_mask == control_mask)
        .collect();
    let mut gathered = vec![ZERO; block];
    let cols = m.ncols();
    let data = m.as_mut_slice();
    for col in 0..cols {
        let column = &mut data[col * dim..(col + 1) * dim];
        for &base in &bases {
            for (l, off) in offsets.iter().enumerate() {
                gathered[l] = column[base | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (l, g) in gathered.iter().enumerate() {
                    acc += u[(r, l)] * g;
                }
                column[base | off] = acc;
            }
        }
    }
}

/// `m ← G m G†` where `G` applies `u` to `targets` under `controls`.
///
/// `targets[j]` carries bit `j` of the local index of `u`.
pub fn conjugate_by_gate(m: &mut CMatrix, u: &CMatrix, targets: &[usize], controls: &[usize]) {
    apply_left(m, u, targets, controls);
    let mut adj = m.adjoint();
    apply_left(&mut adj, u, targets, controls);
    *m = adj.adjoint();
}

/// `v ← G v` for a state vector.
pub fn apply_gate_to_vector(v: &mut CVector, u: &CMatrix, targets: &[usize], controls: &[usize]) {
    let n = v.len();
    let mut as_matrix = CMatrix::from_column_slice(n, 1, v.as_slice());
    apply_left(&mut as_matrix, u, targets, controls);
    v.copy_from_slice(as_matrix.as_slice());
}

/// `m ← G m` for an arbitrary matrix, used when accumulating unitaries.
pub fn left_multiply_gate(m: &mut CMatrix, u: &CMatrix, targets: &[usize], controls: &[usize]) {
    apply_left(m, u, targets, controls);
}

/// Partial trace over a set of qubits of an operator on `n_qubits` qubits.
/// Kept qubits are renumbered compactly in their original order.
pub fn partial_trace_qubits(m: &CMatrix, n_qubits: usize, discard: &[usize]) -> CMatrix {
    let kept: Vec<usize> = (0..n_qubits).filter(|q| !discard.contains(q)).collect();
    let kept_idx: Vec<usize> = (0..1usize << kept.len())
        .map(|i| scatter_bits(i, &kept))
        .collect();
    let disc_idx: Vec<usize> = (0..1usize << discard.len())
        .map(|i| scatter_bits(i, discard))
        .collect();
    let kd = kept_idx.len();
    let mut out = CMatrix::zeros(kd, kd);
    for (i, &ki) in kept_idx.iter().enumerate() {
        for (j, &kj) in kept_idx.iter().enumerate() {
            let mut acc = ZERO;
            for &d in &disc_idx {
                acc += m[(ki | d, kj | d)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Reorders qubits: qubit `q` of the input becomes qubit `perm[q]` of the output.
pub fn permute_qubits(m: &CMatrix, perm: &[usize]) -> CMatrix {
    let dim = m.nrows();
    let map: Vec<usize> = (0..dim).map(|i| scatter_bits_perm(i, perm)).collect();
    let mut out = CMatrix::zeros(dim, m.ncols());
    if m.ncols() == 1 {
        for i in 0..dim {
            out[(map[i], 0)] = m[(i, 0)];
        }
        return out;
    }
    for i in 0..dim {
        for j in 0..dim {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    out
}

fn scatter_bits_perm(i: usize, perm: &[usize]) -> usize {
    perm.iter()
        .enumerate()
        .fold(0, |acc, (q, &dst)| acc | (((i >> q) & 1) << dst))
}

/// Extracts the `d_out × d_out` block `J[(·, s), (·, s')]` of a Choi matrix
/// laid out as output ⊗ input.
fn choi_blocks(choi: &CMatrix, d_in: usize, d_out: usize) -> Vec<CMatrix> {
    let mut blocks = Vec::with_capacity(d_in * d_in);
    for s in 0..d_in {
        for sp in 0..d_in {
            blocks.push(CMatrix::from_fn(d_out, d_out, |o, op| {
                choi[(o * d_in + s, op * d_in + sp)]
            }));
        }
    }
    blocks
}

/// Applies the linear map with Choi matrix `choi` (output ⊗ input ordering)
/// to factor `pos` of an operator on the tensor product of `dims`, leaving
/// the remaining factors untouched. The map need not be positive.
pub fn apply_choi_on_factor(
    choi: &CMatrix,
    d_in: usize,
    d_out: usize,
    m: &CMatrix,
    dims: &[usize],
    pos: usize,
) -> CMatrix {
    assert_eq!(dims[pos], d_in);
    let before: usize = dims[..pos].iter().product();
    let after: usize = dims[pos + 1..].iter().product();
    let in_index = |b: usize, s: usize, a: usize| (b * d_in + s) * after + a;
    let out_index = |b: usize, o: usize, a: usize| (b * d_out + o) * after + a;
    let blocks = choi_blocks(choi, d_in, d_out);
    let out_dim = before * d_out * after;
    let mut out = CMatrix::zeros(out_dim, out_dim);
    for b in 0..before {
        for a in 0..after {
            for bp in 0..before {
                for ap in 0..after {
                    for s in 0..d_in {
                        for sp in 0..d_in {
                            let x = m[(in_index(b, s, a), in_index(bp, sp, ap))];
                            if x == ZERO {
                                continue;
                            }
                            let blk = &blocks[s * d_in + sp];
                            for o in 0..d_out {
                                for op in 0..d_out {
                                    out[(out_index(b, o, a), out_index(bp, op, ap))] +=
                                        blk[(o, op)] * x;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Adjoint (Heisenberg picture) of [`apply_choi_on_factor`]: maps an operator
/// on the output-side tensor product back to the input side.
pub fn apply_choi_adjoint_on_factor(
    choi: &CMatrix,
    d_in: usize,
    d_out: usize,
    m: &CMatrix,
    dims_out: &[usize],
    pos: usize,
) -> CMatrix {
    assert_eq!(dims_out[pos], d_out);
    let before: usize = dims_out[..pos].iter().product();
    let after: usize = dims_out[pos + 1..].iter().product();
    let in_index = |b: usize, s: usize, a: usize| (b * d_in + s) * after + a;
    let out_index = |b: usize, o: usize, a: usize| (b * d_out + o) * after + a;
    let blocks = choi_blocks(choi, d_in, d_out);
    let in_dim = before * d_in * after;
    let mut res = CMatrix::zeros(in_dim, in_dim);
    for b in 0..before {
        for a in 0..after {
            for bp in 0..before {
                for ap in 0..after {
                    for s in 0..d_in {
                        for sp in 0..d_in {
                            // Z[(s),(s')] = Σ_{o,o'} J[(o',s'),(o,s)] Y[(o),(o')]
                            let blk = &blocks[sp * d_in + s];
                            let mut acc = ZERO;
                            for o in 0..d_out {
                                for op in 0..d_out {
                                    acc += blk[(op, o)]
                                        * m[(out_index(b, o, a), out_index(bp, op, ap))];
                                }
                            }
                            res[(in_index(b, s, a), in_index(bp, sp, ap))] = acc;
                        }
                    }
                }
            }
        }
    }
    res
}

pub fn random_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Rotation-invariant random unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| random_complex_gaussian(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v.unscale(norm);
        }
    }
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| random_complex_gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn check_finite(m: &CMatrix, context: &str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(QctError::Numeric(format!("{context}: non-finite entries")))
    }
}

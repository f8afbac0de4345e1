// SPDX-License-Identifier: Apache-2.0

//! Reference computations for the integration tests. Everything here is
//! built from dense nalgebra factorizations and avoids the crate's own
//! kernels, so it can serve as an oracle for them.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn normal_mat(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Uniform on `[lo, hi]` in log scale.
pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

/// A vector of norm `norm` with uniformly random direction.
pub fn vec_with_norm(rng: &mut impl Rng, d: usize, norm: f64) -> DVector<f64> {
    let v = normal_vec(rng, d);
    v.normalize() * norm
}

/// Haar-distributed orthogonal `k × k` matrix.
pub fn random_orthogonal(rng: &mut impl Rng, k: usize) -> DMatrix<f64> {
    let qr = normal_mat(rng, k, k).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `n × d` matrix with orthonormal columns.
pub fn random_basis(rng: &mut impl Rng, n: usize, d: usize) -> DMatrix<f64> {
    random_orthogonal(rng, n).columns(0, d).into_owned()
}

/// Dense SVD with singular values sorted in decreasing order.
pub fn sorted_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u_sorted = DMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let s_sorted = DVector::from_fn(order.len(), |j, _| s[order[j]]);
    (u_sorted, s_sorted)
}

/// Sine of the largest principal angle between the spans of two matrices
/// with orthonormal columns, `|(I - A A^T) B|_2`. Accurate for tiny angles.
pub fn max_principal_sine(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "spans of different dimension");
    let resid = b - a * (a.transpose() * b);
    resid.singular_values().max()
}

/// Orthonormal basis for the span of `a` (assumed full column rank).
pub fn orth(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (u, _) = sorted_svd(a);
    u.columns(0, a.ncols()).into_owned()
}

/// Minimum-norm least squares via the eigendecomposition of `A^T A`.
pub fn lstsq_oracle(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(a.transpose() * a);
    let top = eig.eigenvalues.max();
    let atb = a.transpose() * b;
    let coords = eig.eigenvectors.transpose() * atb;
    let scaled = DVector::from_fn(coords.len(), |i, _| {
        let l = eig.eigenvalues[i];
        if l > top * 1e-13 {
            coords[i] / l
        } else {
            0.0
        }
    });
    &eig.eigenvectors * scaled
}

/// `d - |U^T T|_F^2` accumulated with compensated summation.
pub fn subspace_error_oracle(u: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    let g = u.transpose() * truth;
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &x in g.iter() {
        let y = x * x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    truth.ncols() as f64 - sum
}

/// `|A^T A - I|_F`.
pub fn drift(a: &DMatrix<f64>) -> f64 {
    (a.transpose() * a - DMatrix::identity(a.ncols(), a.ncols())).norm()
}

// SPDX-License-Identifier: Apache-2.0

//! Numerical building blocks shared by the trackers.
//!
//! The central object is the `(d+1) × (d+1)` update matrix
//!
//! ```text
//!     A = [ I   w  ]
//!         [ 0  |r| ]
//! ```
//!
//! whose Gram matrix `A A^T` has `d - 1` unit eigenvalues (eigenvectors
//! `(z; 0)` with `z ⟂ w`) and two further eigenvalues, the roots of
//! `λ² - λ(|w|² + |r|² + 1) + |r|²`. The eigenvector for the larger root has
//! the form `(α w; β)`. Everything in this module that depends on `A` is
//! computed from those closed forms; no dense factorization is involved.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::subspace::{Observation, SubspaceEstimate};

/// A QR diagonal entry this small relative to the largest sends the
/// least-squares solve to the pseudoinverse path.
const QR_RANK_TOL: f64 = 1e-10;

/// Relative threshold below which a Gram-Schmidt column counts as dependent.
const RANK_LOSS_TOL: f64 = 1e-10;

/// Maximum disagreement allowed between the `arcsin` and `arccos` forms of
/// the greedy step angle, before conditioning slack.
const ANGLE_AGREEMENT_TOL: f64 = 1e-9;

/// Minimum-norm solution of `min_w |U_Ω w - v_Ω|²`.
///
/// Rank-deficient restrictions (fewer revealed rows than `d`, or rows on
/// which the basis vanishes) are handled through the pseudoinverse, so an
/// observation that carries no information yields `w = 0`.
pub fn restricted_least_squares(u: &SubspaceEstimate, obs: &Observation) -> Result<DVector<f64>> {
    obs.validate(u.n())?;
    let u_omega = obs.restrict_rows(u.basis());
    let (m, d) = u_omega.shape();

    // Householder QR when the restriction is clearly full rank. The SVD path
    // is kept for rank-deficient cases only: its solutions can leave a
    // normal-equation residual orders of magnitude above roundoff, which
    // then shows up as lost orthonormality in the updated basis.
    if m >= d {
        let qr = u_omega.clone().qr();
        let r = qr.r();
        let diag = r.diagonal().abs();
        if diag.min() > QR_RANK_TOL * diag.max() {
            let mut rhs = obs.values().clone();
            qr.q_tr_mul(&mut rhs);
            let mut w = rhs.rows(0, d).into_owned();
            if r.solve_upper_triangular_mut(&mut w) {
                return Ok(w);
            }
        }
    }

    let svd = u_omega.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * (m.max(d) as f64) * f64::EPSILON;
    svd.solve(obs.values(), eps)
        .map_err(|e| Error::ContractViolation(e.to_string()))
}

/// Per-step quantities shared by all partial-data algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateIntermediates {
    /// Least-squares weights, length `d`.
    pub w: DVector<f64>,
    /// Prediction `U w`, length `n`.
    pub p: DVector<f64>,
    /// Residual on the revealed rows, exactly zero elsewhere.
    pub r: DVector<f64>,
    /// `|r| |p|`.
    pub sigma: f64,
}

impl UpdateIntermediates {
    pub fn w_norm(&self) -> f64 {
        self.w.norm()
    }

    pub fn r_norm(&self) -> f64 {
        self.r.norm()
    }

    pub fn p_norm(&self) -> f64 {
        self.p.norm()
    }
}

pub fn compute_intermediates(
    u: &SubspaceEstimate,
    obs: &Observation,
    w: &DVector<f64>,
) -> Result<UpdateIntermediates> {
    obs.validate(u.n())?;
    if w.len() != u.d() {
        return Err(Error::DimensionMismatch(format!(
            "weight vector has length {}, basis has {} columns",
            w.len(),
            u.d()
        )));
    }
    let p = u.basis() * w;
    let mut r = DVector::zeros(u.n());
    for (&i, &v) in obs.indices().iter().zip(obs.values().iter()) {
        r[i] = v - p[i];
    }
    let sigma = r.norm() * p.norm();
    Ok(UpdateIntermediates {
        w: w.clone(),
        p,
        r,
        sigma,
    })
}

/// Fills the unrevealed entries of the observation with the prediction `U w`.
pub fn impute(u: &SubspaceEstimate, obs: &Observation, w: &DVector<f64>) -> Result<DVector<f64>> {
    obs.validate(u.n())?;
    if w.len() != u.d() {
        return Err(Error::DimensionMismatch(format!(
            "weight vector has length {}, basis has {} columns",
            w.len(),
            u.d()
        )));
    }
    let mut v = u.basis() * w;
    for (&i, &x) in obs.indices().iter().zip(obs.values().iter()) {
        v[i] = x;
    }
    Ok(v)
}

/// Both roots of `λ² - λ(|w|² + |r|² + 1) + |r|²`, larger first.
///
/// The discriminant is expanded as a sum of nonnegative terms and the
/// smaller root comes from the product of roots, so neither loses relative
/// accuracy when `|r|` or `|w|` is small.
pub fn nonunit_eigenvalues(w_norm_sq: f64, r_norm_sq: f64) -> (f64, f64) {
    let b = w_norm_sq + r_norm_sq + 1.0;
    let lambda_max = 0.5 * (b + discriminant(w_norm_sq, r_norm_sq).sqrt());
    let lambda_min = r_norm_sq / lambda_max;
    (lambda_max, lambda_min)
}

/// `(|w|² + |r|² + 1)² - 4|r|²` without cancellation.
fn discriminant(w2: f64, r2: f64) -> f64 {
    let a = r2 - 1.0;
    a * a + w2 * (w2 + 2.0 * r2 + 2.0)
}

/// `λ_max - |r|²`, which is strictly positive when `w ≠ 0`.
///
/// Uses `(λ - 1)(λ - |r|²) = λ|w|²` to switch to the non-cancelling branch
/// when `|r|² > 1 + |w|²`.
fn lambda_max_minus_r2(w2: f64, r2: f64, lambda_max: f64) -> f64 {
    let sq = discriminant(w2, r2).sqrt();
    let direct = w2 + 1.0 - r2;
    if direct >= 0.0 {
        0.5 * (direct + sq)
    } else {
        let lambda_minus_one = 0.5 * (w2 + r2 - 1.0 + sq);
        lambda_max * w2 / lambda_minus_one
    }
}

/// `(α|w|, β)`: the unit eigenvector `(α w; β)` for `λ_max`, with `α ≥ 0`.
fn leading_coefficients(w_norm: f64, r_norm: f64, lambda_max: f64) -> (f64, f64) {
    let w2 = w_norm * w_norm;
    let r2 = r_norm * r_norm;
    let delta = lambda_max_minus_r2(w2, r2, lambda_max);
    let off = r_norm * w_norm;
    let h = delta.hypot(off);
    (delta / h, off / h)
}

/// `(α'|w|, β')` for the eigenvector belonging to `λ_min`.
fn trailing_coefficients(w_norm: f64, r_norm: f64, lambda_min: f64) -> (f64, f64) {
    let gap = 1.0 + w_norm * w_norm - lambda_min;
    let off = r_norm * w_norm;
    let h = off.hypot(gap);
    (off / h, -gap / h)
}

/// Scalars that make GROUSE and the partial-data incremental SVD coincide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Scalars {
    /// Larger non-unit eigenvalue of `A A^T`.
    pub lambda: f64,
    /// Last component of the leading eigenvector; `sin(σ η)`.
    pub beta: f64,
    /// Coefficient of `w` in the leading eigenvector; `α|w| = cos(σ η)`.
    pub alpha: f64,
    /// Step length.
    pub eta: f64,
}

impl Theorem1Scalars {
    /// The rotation angle `σ η`.
    pub fn angle(&self, sigma: f64) -> f64 {
        sigma * self.eta
    }
}

pub fn theorem1_scalars(w_norm: f64, r_norm: f64, sigma: f64) -> Result<Theorem1Scalars> {
    if !(w_norm > 0.0) {
        return Err(Error::DegenerateUpdate("|w| must be positive"));
    }
    if !(r_norm > 0.0) {
        return Err(Error::DegenerateUpdate("|r| must be positive"));
    }
    if !(sigma > 0.0) {
        return Err(Error::DegenerateUpdate("sigma must be positive"));
    }
    let (lambda, _) = nonunit_eigenvalues(w_norm * w_norm, r_norm * r_norm);
    let (cos_part, beta) = leading_coefficients(w_norm, r_norm, lambda);
    let alpha = cos_part / w_norm;

    let from_sin = beta.asin();
    let from_cos = cos_part.acos();
    // asin and acos amplify rounding by 1/cos and 1/sin respectively.
    let slack = f64::EPSILON / cos_part.min(beta).max(f64::MIN_POSITIVE);
    if (from_sin - from_cos).abs() > ANGLE_AGREEMENT_TOL + slack {
        return Err(Error::ContractViolation(format!(
            "arcsin(beta) = {from_sin} disagrees with arccos(alpha |w|) = {from_cos}"
        )));
    }
    let eta = beta.atan2(cos_part) / sigma;
    Ok(Theorem1Scalars {
        lambda,
        beta,
        alpha,
        eta,
    })
}

/// Closed-form left singular structure of `[I w; 0 |r|]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredSvd {
    /// Left singular vectors with the last (smallest) one removed,
    /// `(d+1) × d`: first column `(α w; β)`, then `(Z; 0)`.
    pub u_hat: DMatrix<f64>,
    /// `(α w; β)`.
    pub leading_vector: DVector<f64>,
    /// Left singular vector for the smallest singular value.
    pub trailing_vector: DVector<f64>,
    /// `√λ_max, 1, …, 1, √λ_min`, length `d + 1`.
    pub singular_values: DVector<f64>,
}

impl StructuredSvd {
    /// The full orthogonal `(d+1) × (d+1)` left factor.
    pub fn left_factor(&self) -> DMatrix<f64> {
        let d = self.u_hat.ncols();
        let mut full = self.u_hat.clone().insert_column(d, 0.0);
        full.set_column(d, &self.trailing_vector);
        full
    }
}

/// Left singular structure of `[I w; 0 |r|]` using the Householder
/// complement of `w` from [`complement_basis`].
pub fn structured_update_svd(w: &DVector<f64>, r_norm: f64) -> Result<StructuredSvd> {
    let z = complement_basis(w)?;
    structured_svd(w, r_norm, &z, false)
}

/// As [`structured_update_svd`], with a caller-chosen orthonormal basis `Z`
/// (`d × (d-1)`) of the complement of `w`.
pub fn structured_update_svd_with_complement(
    w: &DVector<f64>,
    r_norm: f64,
    z: &DMatrix<f64>,
) -> Result<StructuredSvd> {
    structured_svd(w, r_norm, z, true)
}

/// Shared body; `check_z` is off for complements built by
/// [`complement_basis`], whose validation would cost `O(d³)`.
pub(crate) fn structured_svd(
    w: &DVector<f64>,
    r_norm: f64,
    z: &DMatrix<f64>,
    check_z: bool,
) -> Result<StructuredSvd> {
    let d = w.len();
    if d == 0 {
        return Err(Error::DimensionMismatch("w must be non-empty".into()));
    }
    let w_norm = w.norm();
    if !(w_norm > 0.0) {
        return Err(Error::DegenerateUpdate(
            "w = 0 leaves the complement basis undefined",
        ));
    }
    if !(r_norm > 0.0) {
        return Err(Error::DegenerateUpdate("|r| must be positive"));
    }
    if check_z {
        check_complement(w, z)?;
    }

    let (lambda_max, lambda_min) = nonunit_eigenvalues(w_norm * w_norm, r_norm * r_norm);
    let (lead_w, lead_last) = leading_coefficients(w_norm, r_norm, lambda_max);
    let (trail_w, trail_last) = trailing_coefficients(w_norm, r_norm, lambda_min);

    let direction = w / w_norm;
    let mut leading_vector = DVector::zeros(d + 1);
    leading_vector
        .rows_mut(0, d)
        .copy_from(&(&direction * lead_w));
    leading_vector[d] = lead_last;
    let mut trailing_vector = DVector::zeros(d + 1);
    trailing_vector
        .rows_mut(0, d)
        .copy_from(&(&direction * trail_w));
    trailing_vector[d] = trail_last;

    let mut u_hat = DMatrix::zeros(d + 1, d);
    u_hat.set_column(0, &leading_vector);
    u_hat.view_mut((0, 1), (d, d - 1)).copy_from(z);

    let mut singular_values = DVector::from_element(d + 1, 1.0);
    singular_values[0] = lambda_max.sqrt();
    singular_values[d] = lambda_min.sqrt();

    Ok(StructuredSvd {
        u_hat,
        leading_vector,
        trailing_vector,
        singular_values,
    })
}

fn check_complement(w: &DVector<f64>, z: &DMatrix<f64>) -> Result<()> {
    let d = w.len();
    if z.shape() != (d, d - 1) {
        return Err(Error::DimensionMismatch(format!(
            "complement basis must be {}x{}, got {}x{}",
            d,
            d - 1,
            z.nrows(),
            z.ncols()
        )));
    }
    if d == 1 {
        return Ok(());
    }
    let drift = crate::subspace::orthonormality_drift(z);
    let overlap = (z.tr_mul(w)).norm() / w.norm();
    if drift > 1e-8 || overlap > 1e-8 {
        return Err(Error::ContractViolation(format!(
            "complement basis is not orthonormal and orthogonal to w (drift {drift:e}, overlap {overlap:e})"
        )));
    }
    Ok(())
}

/// Orthonormal basis `Z` of `w^⊥`, `d × (d-1)`: the trailing columns of the
/// Householder reflector that maps `w/|w|` onto a multiple of `e_1`.
pub fn complement_basis(w: &DVector<f64>) -> Result<DMatrix<f64>> {
    let d = w.len();
    let w_norm = w.norm();
    if d == 0 {
        return Err(Error::DimensionMismatch("w must be non-empty".into()));
    }
    if !(w_norm > 0.0) {
        return Err(Error::DegenerateUpdate(
            "w = 0 has no well-defined complement",
        ));
    }
    let mut v = w / w_norm;
    v[0] += if v[0] >= 0.0 { 1.0 } else { -1.0 };
    let scale = 2.0 / v.norm_squared();
    let mut z = DMatrix::zeros(d, d - 1);
    for j in 1..d {
        for i in 0..d {
            let delta = if i == j { 1.0 } else { 0.0 };
            z[(i, j - 1)] = delta - scale * v[i] * v[j];
        }
    }
    Ok(z)
}

/// The orthogonal matrix `[w/|w| | Z]` with `Z` from [`complement_basis`].
pub fn build_rotation(w: &DVector<f64>) -> Result<DMatrix<f64>> {
    let z = complement_basis(w)?;
    Ok(rotation_from_complement(w, &z))
}

pub(crate) fn rotation_from_complement(w: &DVector<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    let d = w.len();
    let mut rot = DMatrix::zeros(d, d);
    rot.set_column(0, &(w / w.norm()));
    rot.view_mut((0, 1), (d, d - 1)).copy_from(z);
    rot
}

/// Gram-Schmidt with one reorthogonalization pass. Columns keep their order
/// and orientation, so an orthonormal input is returned (nearly) unchanged.
pub fn orthonormalize_columns(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut q = a.clone();
    for j in 0..q.ncols() {
        let original = a.column(j).norm();
        let mut col = q.column(j).into_owned();
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let coef = qi.dot(&col);
                col.axpy(-coef, &qi, 1.0);
            }
        }
        let norm = col.norm();
        if !(norm > RANK_LOSS_TOL * original) || !norm.is_finite() {
            return Err(Error::RankLoss { column: j });
        }
        q.set_column(j, &(col / norm));
    }
    Ok(q)
}

/// Restores exact orthonormality of a drifted basis without changing its span.
pub fn reorthonormalize(basis: &DMatrix<f64>) -> Result<SubspaceEstimate> {
    SubspaceEstimate::new(orthonormalize_columns(basis)?)
}

/// `d - |U^T Ū|_F²`, clamped to `[0, d]`, where `d` is the dimension of the
/// reference subspace.
///
/// `u` may have fewer columns than `truth` (a growing incremental SVD); the
/// missing directions then count as fully wrong.
pub fn subspace_error(u: &DMatrix<f64>, truth: &SubspaceEstimate) -> Result<f64> {
    if u.nrows() != truth.n() || u.ncols() > truth.d() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compare a {}x{} basis with a {}x{} reference",
            u.nrows(),
            u.ncols(),
            truth.n(),
            truth.d()
        )));
    }
    let d = truth.d() as f64;
    let overlap = u.tr_mul(truth.basis()).norm_squared();
    Ok((d - overlap).clamp(0.0, d))
}

/// Principal angles (radians, ascending) between the spans of two
/// orthonormal bases with the same number of columns.
///
/// Small angles come from the sines (singular values of `B - A A^T B`),
/// large ones from the cosines, so both ends stay accurate.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DVector<f64>> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "principal angles need equal shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let cross = a.tr_mul(b);
    let residual = b - a * &cross;
    let mut cosines: Vec<f64> = cross.singular_values().iter().copied().collect();
    let mut sines: Vec<f64> = residual.singular_values().iter().copied().collect();
    cosines.sort_by(|x, y| y.total_cmp(x));
    sines.sort_by(|x, y| x.total_cmp(y));
    let angles = cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| {
            if c * c >= 0.5 {
                s.min(1.0).asin()
            } else {
                c.min(1.0).acos()
            }
        })
        .collect::<Vec<_>>();
    Ok(DVector::from_vec(angles))
}

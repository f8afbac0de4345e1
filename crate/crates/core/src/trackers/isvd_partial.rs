// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;

use super::{is_degenerate, ReorthPolicy, StepReport, Tracker, TrackerState};
use crate::error::{Error, Result};
use crate::kernels::{
    complement_basis, compute_intermediates, impute, restricted_least_squares,
    rotation_from_complement, structured_svd, UpdateIntermediates,
};
use crate::subspace::{orthonormality_drift, Observation, SubspaceEstimate};

/// Column rotation applied after the incremental SVD step.
///
/// The new basis is `[U  r/|r|] · Û · R`. Any orthogonal `R` yields the same
/// span; the two `W`-based choices make the iterate coincide with GROUSE.
#[derive(Debug, Clone, PartialEq)]
pub enum Rotation {
    /// `R = W^T` with `W = [w/|w| | Z]` and the Householder complement `Z`.
    Theorem1Default,
    /// `R = W^T` with a caller-supplied complement basis `Z` (`d × (d-1)`),
    /// also used for the unit-singular-value columns of `Û`.
    Complement(DMatrix<f64>),
    /// Any `d × d` orthogonal matrix, applied as is.
    Explicit(DMatrix<f64>),
}

impl Rotation {
    fn validate(&self, d: usize) -> Result<()> {
        if let Rotation::Explicit(r) = self {
            if r.shape() != (d, d) {
                return Err(Error::DimensionMismatch(format!(
                    "rotation must be {d}x{d}, got {}x{}",
                    r.nrows(),
                    r.ncols()
                )));
            }
            let drift = orthonormality_drift(r);
            if drift > 1e-8 {
                return Err(Error::ContractViolation(format!(
                    "supplied rotation is not orthogonal (|R^T R - I|_F = {drift:e})"
                )));
            }
        }
        Ok(())
    }
}

/// One step of the incremental SVD for partially observed vectors: impute
/// the missing entries from the current fit, append the residual direction,
/// take the closed-form SVD of `[I w; 0 |r|]`, drop the weakest direction
/// and rotate.
pub fn isvd_partial_update(
    state: &TrackerState,
    obs: &Observation,
    rotation: &Rotation,
) -> Result<(TrackerState, StepReport)> {
    let u = &state.estimate;
    rotation.validate(u.d())?;
    let w = restricted_least_squares(u, obs)?;
    let filled = impute(u, obs, &w)?;
    let p = u.basis() * &w;
    let r = &filled - &p;
    let im = UpdateIntermediates {
        sigma: r.norm() * p.norm(),
        w,
        p,
        r,
    };
    debug_assert!({
        let reference = compute_intermediates(u, obs, &im.w)?;
        (reference.r - &im.r).amax() <= 1e-12 * (1.0 + obs.values().amax())
    });
    if is_degenerate(&im, obs) {
        let next = state.advance(None, &im);
        let report = next.report(true);
        return Ok((next, report));
    }

    let (z, supplied) = match rotation {
        Rotation::Complement(z) => (z.clone(), true),
        _ => (complement_basis(&im.w)?, false),
    };
    let svd = structured_svd(&im.w, im.r_norm(), &z, supplied)?;
    let right = match rotation {
        Rotation::Explicit(r) => r.clone(),
        _ => rotation_from_complement(&im.w, &z).transpose(),
    };

    let d = u.d();
    let mut extended = u.basis().clone().insert_column(d, 0.0);
    extended.set_column(d, &(&im.r / im.r_norm()));
    let basis = extended * (svd.u_hat * right);

    let next = state.advance(Some(basis), &im);
    let report = next.report(false);
    Ok((next, report))
}

/// Partial-data incremental SVD tracker with singular values reset each step.
#[derive(Debug, Clone)]
pub struct IsvdPartial {
    state: TrackerState,
    rotation: Rotation,
    reorth: ReorthPolicy,
}

impl IsvdPartial {
    pub fn new(initial: SubspaceEstimate) -> Self {
        Self {
            state: TrackerState::new(initial),
            rotation: Rotation::Theorem1Default,
            reorth: ReorthPolicy::default(),
        }
    }

    pub fn with_rotation(mut self, rotation: Rotation) -> Result<Self> {
        rotation.validate(self.state.estimate.d())?;
        self.rotation = rotation;
        Ok(self)
    }

    pub fn with_reorth(mut self, reorth: ReorthPolicy) -> Self {
        self.reorth = reorth;
        self
    }

    pub fn state(&self) -> &TrackerState {
        &self.state
    }

    pub fn estimate(&self) -> &SubspaceEstimate {
        &self.state.estimate
    }
}

impl Tracker for IsvdPartial {
    fn name(&self) -> &'static str {
        "isvd-partial"
    }

    fn basis(&self) -> &DMatrix<f64> {
        self.state.estimate.basis()
    }

    fn step_count(&self) -> usize {
        self.state.step_count
    }

    fn observe(&mut self, obs: &Observation) -> Result<StepReport> {
        let (mut next, report) = isvd_partial_update(&self.state, obs, &self.rotation)?;
        self.reorth.apply(next.step_count, &mut next.estimate)?;
        self.state = next;
        Ok(report)
    }
}

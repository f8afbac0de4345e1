// SPDX-License-Identifier: Apache-2.0

//! Streaming trackers behind a common [`Tracker`] interface.

mod brand;
mod grouse;
mod isvd_full;
mod isvd_partial;

pub use brand::{brand_update, Brand, BrandState};
pub use grouse::{grouse_update, Grouse};
pub use isvd_full::{isvd_full_step, FullSvdState, IsvdFull};
pub use isvd_partial::{isvd_partial_update, IsvdPartial, Rotation};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{self, subspace_error, UpdateIntermediates};
use crate::subspace::{orthonormality_drift, Observation, SubspaceEstimate};

/// A residual smaller than this fraction of `|v_Ω|` is treated as zero.
pub const DEGENERATE_RESIDUAL_TOL: f64 = 1e-12;

/// Diagnostics for one processed observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub residual_norm: f64,
    pub sigma: f64,
    /// The update was skipped because `w = 0` or `r = 0`.
    pub skipped: bool,
}

pub trait Tracker {
    fn name(&self) -> &'static str;

    /// Current basis estimate (`n × k`; `k = d` except for a growing full
    /// incremental SVD).
    fn basis(&self) -> &DMatrix<f64>;

    fn step_count(&self) -> usize;

    fn observe(&mut self, obs: &Observation) -> Result<StepReport>;
}

/// State shared by the fixed-rank trackers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    pub estimate: SubspaceEstimate,
    pub step_count: usize,
    pub last_residual_norm: f64,
    pub last_sigma: f64,
}

impl TrackerState {
    pub fn new(estimate: SubspaceEstimate) -> Self {
        Self {
            estimate,
            step_count: 0,
            last_residual_norm: 0.0,
            last_sigma: 0.0,
        }
    }

    pub(crate) fn advance(&self, basis: Option<DMatrix<f64>>, im: &UpdateIntermediates) -> Self {
        Self {
            estimate: basis
                .map(SubspaceEstimate::from_update)
                .unwrap_or_else(|| self.estimate.clone()),
            step_count: self.step_count + 1,
            last_residual_norm: im.r_norm(),
            last_sigma: im.sigma,
        }
    }

    pub fn report(&self, skipped: bool) -> StepReport {
        StepReport {
            residual_norm: self.last_residual_norm,
            sigma: self.last_sigma,
            skipped,
        }
    }
}

/// Step length selection for GROUSE.
#[derive(Debug, Clone, PartialEq)]
pub enum StepPolicy {
    /// The step that reproduces the partial-data incremental SVD iterate.
    Greedy,
    Fixed(f64),
    /// `eta_t` indexed by step; the last entry is reused once exhausted.
    Schedule(Vec<f64>),
}

impl StepPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = |eta: f64| eta.is_finite() && eta > 0.0;
        match self {
            StepPolicy::Greedy => Ok(()),
            StepPolicy::Fixed(eta) if ok(*eta) => Ok(()),
            StepPolicy::Fixed(eta) => Err(Error::ContractViolation(format!(
                "fixed step must be positive and finite, got {eta}"
            ))),
            StepPolicy::Schedule(s) if !s.is_empty() && s.iter().all(|&e| ok(e)) => Ok(()),
            StepPolicy::Schedule(_) => Err(Error::ContractViolation(
                "step schedule must be non-empty with positive finite entries".into(),
            )),
        }
    }

    /// The rotation angle `σ η` for step `t` (zero-based).
    pub(crate) fn angle(&self, t: usize, im: &UpdateIntermediates) -> Result<f64> {
        let eta = match self {
            StepPolicy::Greedy => {
                kernels::theorem1_scalars(im.w_norm(), im.r_norm(), im.sigma)?.eta
            }
            StepPolicy::Fixed(eta) => *eta,
            StepPolicy::Schedule(s) => s[t.min(s.len() - 1)],
        };
        Ok(im.sigma * eta)
    }

    pub fn label(&self) -> String {
        match self {
            StepPolicy::Greedy => "greedy".into(),
            StepPolicy::Fixed(eta) => format!("fixed({eta})"),
            StepPolicy::Schedule(s) => format!("schedule({} entries)", s.len()),
        }
    }
}

/// When the fixed-rank trackers restore exact orthonormality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReorthPolicy {
    /// Every this many steps; 0 disables the periodic pass.
    pub interval: usize,
    /// Also whenever `|U^T U - I|_F` exceeds this.
    pub drift_tol: f64,
}

impl Default for ReorthPolicy {
    fn default() -> Self {
        Self {
            interval: 100,
            drift_tol: 1e-8,
        }
    }
}

impl ReorthPolicy {
    pub fn disabled() -> Self {
        Self {
            interval: 0,
            drift_tol: f64::INFINITY,
        }
    }

    pub(crate) fn apply(&self, step_count: usize, estimate: &mut SubspaceEstimate) -> Result<()> {
        let periodic = self.interval > 0 && step_count.is_multiple_of(self.interval);
        if periodic || (self.drift_tol.is_finite() && estimate.drift() > self.drift_tol) {
            *estimate = kernels::reorthonormalize(estimate.basis())?;
        }
        Ok(())
    }
}

/// True when the step carries no usable direction.
pub(crate) fn is_degenerate(im: &UpdateIntermediates, obs: &Observation) -> bool {
    let scale = obs.values().norm();
    im.w_norm() == 0.0 || im.sigma == 0.0 || im.r_norm() <= DEGENERATE_RESIDUAL_TOL * scale
}

/// One post-update record of a stream run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// One-based position in the stream.
    pub step: usize,
    /// Subspace error against the ground truth, when one is supplied.
    pub error: Option<f64>,
    pub residual_norm: f64,
    pub sigma: f64,
}

/// Feeds `stream` through `tracker` in order and records diagnostics after
/// every update. `hook` sees each record, with the updated basis, as soon as
/// it exists. An error from the tracker or the hook stops the run and is
/// tagged with its step.
pub fn process_stream<T, I, F>(
    tracker: &mut T,
    stream: I,
    truth: Option<&SubspaceEstimate>,
    mut hook: F,
) -> Result<Vec<StepRecord>>
where
    T: Tracker + ?Sized,
    I: IntoIterator,
    I::Item: std::borrow::Borrow<Observation>,
    F: FnMut(&StepRecord, &DMatrix<f64>) -> Result<()>,
{
    use std::borrow::Borrow;

    let mut records = Vec::new();
    for (i, obs) in stream.into_iter().enumerate() {
        let step = i + 1;
        let tag = |e| Error::at_step(step, e);
        let report = tracker.observe(obs.borrow()).map_err(tag)?;
        let error = truth
            .map(|t| subspace_error(tracker.basis(), t))
            .transpose()
            .map_err(tag)?;
        let record = StepRecord {
            step,
            error,
            residual_norm: report.residual_norm,
            sigma: report.sigma,
        };
        hook(&record, tracker.basis()).map_err(tag)?;
        records.push(record);
    }
    Ok(records)
}

/// `|U^T U - I|_F` of a tracker's current basis.
pub fn tracker_drift<T: Tracker + ?Sized>(tracker: &T) -> f64 {
    orthonormality_drift(tracker.basis())
}

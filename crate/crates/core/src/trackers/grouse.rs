// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;

use super::{is_degenerate, ReorthPolicy, StepPolicy, StepReport, Tracker, TrackerState};
use crate::error::Result;
use crate::kernels::{compute_intermediates, restricted_least_squares};
use crate::subspace::{Observation, SubspaceEstimate};

/// One GROUSE step: rotate the basis along the geodesic that turns the
/// prediction `p = U w` towards the residual `r` by the angle `σ η`.
///
/// Degenerate steps (`w = 0` or `r = 0`) leave the basis unchanged but still
/// count as a processed observation. No re-orthonormalization happens here.
pub fn grouse_update(
    state: &TrackerState,
    obs: &Observation,
    policy: &StepPolicy,
) -> Result<(TrackerState, StepReport)> {
    let u = &state.estimate;
    let w = restricted_least_squares(u, obs)?;
    let im = compute_intermediates(u, obs, &w)?;
    if is_degenerate(&im, obs) {
        let next = state.advance(None, &im);
        let report = next.report(true);
        return Ok((next, report));
    }

    let theta = policy.angle(state.step_count, &im)?;
    let (sin, cos) = theta.sin_cos();
    let direction = im.p.scale((cos - 1.0) / im.p_norm()) + im.r.scale(sin / im.r_norm());
    let w_unit = im.w.scale(1.0 / im.w_norm());

    let mut basis: DMatrix<f64> = u.basis().clone();
    basis.ger(1.0, &direction, &w_unit, 1.0);

    let next = state.advance(Some(basis), &im);
    let report = next.report(false);
    Ok((next, report))
}

/// GROUSE tracker with a step policy and periodic re-orthonormalization.
#[derive(Debug, Clone)]
pub struct Grouse {
    state: TrackerState,
    policy: StepPolicy,
    reorth: ReorthPolicy,
}

impl Grouse {
    pub fn new(initial: SubspaceEstimate, policy: StepPolicy) -> Result<Self> {
        policy.validate()?;
        Ok(Self {
            state: TrackerState::new(initial),
            policy,
            reorth: ReorthPolicy::default(),
        })
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

    pub fn policy(&self) -> &StepPolicy {
        &self.policy
    }
}

impl Tracker for Grouse {
    fn name(&self) -> &'static str {
        "grouse"
    }

    fn basis(&self) -> &DMatrix<f64> {
        self.state.estimate.basis()
    }

    fn step_count(&self) -> usize {
        self.state.step_count
    }

    fn observe(&mut self, obs: &Observation) -> Result<StepReport> {
        let (mut next, report) = grouse_update(&self.state, obs, &self.policy)?;
        self.reorth.apply(next.step_count, &mut next.estimate)?;
        self.state = next;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::orthonormality_drift;
    use nalgebra::DVector;

    fn setup() -> (TrackerState, Observation) {
        let u = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let state = TrackerState::new(SubspaceEstimate::new(u).unwrap());
        let obs = Observation::new(vec![0, 1, 2], vec![1.0, 2.0, 3.0]).unwrap();
        (state, obs)
    }

    #[test]
    fn zero_angle_is_identity() {
        let (state, obs) = setup();
        let policy = StepPolicy::Fixed(1e-300);
        let (next, report) = grouse_update(&state, &obs, &policy).unwrap();
        assert!(!report.skipped);
        assert!((next.estimate.basis() - state.estimate.basis()).norm() < 1e-15);
        assert_eq!(next.step_count, 1);
    }

    #[test]
    fn quarter_turn_replaces_prediction_with_residual() {
        let (state, obs) = setup();
        let u = state.estimate.basis();
        let w = restricted_least_squares(&state.estimate, &obs).unwrap();
        let im = compute_intermediates(&state.estimate, &obs, &w).unwrap();
        let eta = std::f64::consts::FRAC_PI_2 / im.sigma;
        let (next, _) = grouse_update(&state, &obs, &StepPolicy::Fixed(eta)).unwrap();

        let dir = im.r.scale(1.0 / im.r_norm()) - im.p.scale(1.0 / im.p_norm());
        let expected = u + dir * im.w.transpose() / im.w_norm();
        assert!((next.estimate.basis() - expected).norm() < 1e-14);
        assert!(orthonormality_drift(next.estimate.basis()) < 1e-14);
    }

    #[test]
    fn in_span_observation_is_skipped() {
        let (state, _) = setup();
        let v = DVector::from_vec(vec![3.0, -1.0, 0.0, 0.0]);
        let (next, report) =
            grouse_update(&state, &Observation::full(&v), &StepPolicy::Greedy).unwrap();
        assert!(report.skipped);
        assert_eq!(next.estimate, state.estimate);
        assert_eq!(next.step_count, 1);
    }

    #[test]
    fn greedy_step_moves_towards_observation() {
        let (state, _) = setup();
        let v = DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0]);
        let before = state.estimate.basis().tr_mul(&v).norm();
        let (next, _) = grouse_update(&state, &Observation::full(&v), &StepPolicy::Greedy).unwrap();
        let after = next.estimate.basis().tr_mul(&v).norm();
        assert!(after > before);
        assert!(orthonormality_drift(next.estimate.basis()) < 1e-14);
    }
}

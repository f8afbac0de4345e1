// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};

use super::{ReorthPolicy, StepReport, Tracker, DEGENERATE_RESIDUAL_TOL};
use crate::error::{Error, Result};
use crate::kernels::{compute_intermediates, restricted_least_squares};
use crate::subspace::{Observation, SubspaceEstimate};

/// Fixed-rank incremental SVD state that carries singular values forward.
#[derive(Debug, Clone, PartialEq)]
pub struct BrandState {
    pub estimate: SubspaceEstimate,
    /// Length `d`, nonincreasing.
    pub singular_values: DVector<f64>,
    /// Down-weight `γ ∈ (0, 1]` applied to the old singular values.
    pub decay: f64,
    pub step_count: usize,
    pub last_residual_norm: f64,
    pub last_sigma: f64,
}

impl BrandState {
    /// Starts from zero singular values.
    pub fn new(estimate: SubspaceEstimate, decay: f64) -> Result<Self> {
        let d = estimate.d();
        Self::with_singular_values(estimate, DVector::zeros(d), decay)
    }

    pub fn with_singular_values(
        estimate: SubspaceEstimate,
        singular_values: DVector<f64>,
        decay: f64,
    ) -> Result<Self> {
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(Error::ContractViolation(format!(
                "decay must lie in (0, 1], got {decay}"
            )));
        }
        if singular_values.len() != estimate.d() {
            return Err(Error::DimensionMismatch(format!(
                "{} singular values for a rank-{} basis",
                singular_values.len(),
                estimate.d()
            )));
        }
        if singular_values.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::ContractViolation(
                "singular values must be nonnegative".into(),
            ));
        }
        if singular_values.as_slice().windows(2).any(|p| p[0] < p[1]) {
            return Err(Error::ContractViolation(
                "singular values must be nonincreasing".into(),
            ));
        }
        Ok(Self {
            estimate,
            singular_values,
            decay,
            step_count: 0,
            last_residual_norm: 0.0,
            last_sigma: 0.0,
        })
    }
}

/// One down-weighted incremental SVD step on a partially observed vector.
///
/// The core `[γ Σ  w; 0 |r|]` has no closed-form SVD, so it goes through a
/// dense factorization. The result is truncated back to `d` columns by
/// keeping the largest singular values.
pub fn brand_update(state: &BrandState, obs: &Observation) -> Result<(BrandState, StepReport)> {
    let u = &state.estimate;
    let d = u.d();
    let w = restricted_least_squares(u, obs)?;
    let im = compute_intermediates(u, obs, &w)?;
    let r_norm = im.r_norm();
    let has_residual = r_norm > DEGENERATE_RESIDUAL_TOL * obs.values().norm();

    let rows = if has_residual { d + 1 } else { d };
    let mut core = DMatrix::zeros(rows, d + 1);
    for i in 0..d {
        core[(i, i)] = state.decay * state.singular_values[i];
        core[(i, d)] = im.w[i];
    }
    if has_residual {
        core[(d, d)] = r_norm;
    }
    // Sorted in decreasing order, columns of U permuted to match.
    let svd = core.svd(true, false);
    let core_u = svd.u.expect("left factor requested");

    let left = if has_residual {
        let mut ext = u.basis().clone().insert_column(d, 0.0);
        ext.set_column(d, &(&im.r / r_norm));
        ext
    } else {
        u.basis().clone()
    };
    let basis = left * core_u.columns(0, d);
    let singular_values = svd.singular_values.rows(0, d).into_owned();

    let next = BrandState {
        estimate: SubspaceEstimate::from_update(basis),
        singular_values,
        decay: state.decay,
        step_count: state.step_count + 1,
        last_residual_norm: r_norm,
        last_sigma: im.sigma,
    };
    let report = StepReport {
        residual_norm: r_norm,
        sigma: im.sigma,
        skipped: !has_residual,
    };
    Ok((next, report))
}

#[derive(Debug, Clone)]
pub struct Brand {
    state: BrandState,
    reorth: ReorthPolicy,
}

impl Brand {
    pub fn new(state: BrandState) -> Self {
        Self {
            state,
            reorth: ReorthPolicy::default(),
        }
    }

    pub fn with_reorth(mut self, reorth: ReorthPolicy) -> Self {
        self.reorth = reorth;
        self
    }

    pub fn state(&self) -> &BrandState {
        &self.state
    }
}

impl Tracker for Brand {
    fn name(&self) -> &'static str {
        "brand"
    }

    fn basis(&self) -> &DMatrix<f64> {
        self.state.estimate.basis()
    }

    fn step_count(&self) -> usize {
        self.state.step_count
    }

    fn observe(&mut self, obs: &Observation) -> Result<StepReport> {
        let (mut next, report) = brand_update(&self.state, obs)?;
        self.reorth.apply(next.step_count, &mut next.estimate)?;
        self.state = next;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::principal_angles;
    use crate::subspace::orthonormality_drift;

    fn start(decay: f64, sv: &[f64]) -> BrandState {
        let u = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        BrandState::with_singular_values(
            SubspaceEstimate::new(u).unwrap(),
            DVector::from_row_slice(sv),
            decay,
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        let u = SubspaceEstimate::new(DMatrix::identity(3, 1)).unwrap();
        assert!(BrandState::new(u.clone(), 0.0).is_err());
        assert!(BrandState::new(u.clone(), 1.5).is_err());
        assert!(
            BrandState::with_singular_values(u, DVector::from_vec(vec![1.0, 2.0]), 1.0).is_err()
        );
    }

    #[test]
    fn in_span_update_keeps_span() {
        let st = start(0.5, &[3.0, 1.0]);
        let v = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        let (next, report) = brand_update(&st, &Observation::full(&v)).unwrap();
        assert!(report.skipped);
        let angles = principal_angles(next.estimate.basis(), st.estimate.basis()).unwrap();
        assert!(angles.max() < 1e-14);
        // Singular values of [γΣ w] = [[1.5, 0, 1], [0, 0.5, 1]].
        let core = DMatrix::from_row_slice(2, 3, &[1.5, 0.0, 1.0, 0.0, 0.5, 1.0]);
        let expected = core.singular_values();
        let mut expected: Vec<f64> = expected.iter().copied().collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        assert!((next.singular_values[0] - expected[0]).abs() < 1e-14);
        assert!((next.singular_values[1] - expected[1]).abs() < 1e-14);
    }

    #[test]
    fn new_direction_enters_when_strong() {
        let st = start(1.0, &[1.0, 0.1]);
        let v = DVector::from_vec(vec![0.0, 0.0, 5.0, 0.0]);
        let (next, _) = brand_update(&st, &Observation::full(&v)).unwrap();
        assert!((next.singular_values[0] - 5.0).abs() < 1e-14);
        assert!((next.estimate.basis().column(0).dot(&v) / 5.0).abs() > 1.0 - 1e-14);
        assert!(orthonormality_drift(next.estimate.basis()) < 1e-14);
        assert!(next.singular_values[0] >= next.singular_values[1]);
    }
}

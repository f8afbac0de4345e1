// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector};

use super::{StepReport, Tracker};
use crate::error::{Error, Result};
use crate::kernels::orthonormalize_columns;
use crate::subspace::Observation;

/// Rank grows only when the residual exceeds this fraction of the largest
/// singular value (or of 1 before any column has been seen).
pub const RANK_GROWTH_REL_TOL: f64 = 1e-10;

/// Thin SVD `U diag(S) V^T` of all columns seen so far.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSvdState {
    /// `n × k`.
    pub u: DMatrix<f64>,
    /// Length `k`, nonincreasing.
    pub s: DVector<f64>,
    /// `t × k`.
    pub v: DMatrix<f64>,
    /// Set once a direction has been discarded by the rank cap.
    pub truncated: bool,
}

impl FullSvdState {
    pub fn empty(n: usize) -> Self {
        Self {
            u: DMatrix::zeros(n, 0),
            s: DVector::zeros(0),
            v: DMatrix::zeros(0, 0),
            truncated: false,
        }
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn columns_seen(&self) -> usize {
        self.v.nrows()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.s) * self.v.transpose()
    }
}

/// Appends column `col` to the factored matrix.
///
/// With `w = U^T c` and `r = c - U w`, the new factors come from the SVD of
/// the small core `[diag(S) w; 0 |r|]`. When `|r|` is negligible the core
/// loses its last row and the rank stays put. With `rank_cap`, the weakest
/// direction is dropped once the rank would exceed it.
pub fn isvd_full_step(
    state: &FullSvdState,
    col: &DVector<f64>,
    rank_cap: Option<usize>,
) -> Result<(FullSvdState, StepReport)> {
    let n = state.n();
    if col.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "column has length {}, expected {n}",
            col.len()
        )));
    }
    let k = state.rank();
    let t = state.columns_seen();

    // Classical Gram-Schmidt twice keeps r orthogonal to U at roundoff level.
    let mut w = state.u.tr_mul(col);
    let mut r = col - &state.u * &w;
    let correction = state.u.tr_mul(&r);
    r -= &state.u * &correction;
    w += correction;
    let r_norm = r.norm();
    let p_norm = (col - &r).norm();

    let scale = if k == 0 { 1.0 } else { state.s[0] };
    let grow = r_norm > RANK_GROWTH_REL_TOL * scale;

    let core_rows = if grow { k + 1 } else { k };
    let mut core = DMatrix::zeros(core_rows, k + 1);
    for i in 0..k {
        core[(i, i)] = state.s[i];
        core[(i, k)] = w[i];
    }
    if grow {
        core[(k, k)] = r_norm;
    }

    // [V 0; 0 1]
    let mut v_ext = DMatrix::zeros(t + 1, k + 1);
    v_ext.view_mut((0, 0), (t, k)).copy_from(&state.v);
    v_ext[(t, k)] = 1.0;

    let (mut u, mut s, mut v) = if core_rows == 0 {
        // Nothing seen yet and a zero column: nothing to factor.
        (state.u.clone(), state.s.clone(), DMatrix::zeros(t + 1, 0))
    } else {
        let svd = core.svd(true, true);
        let core_u = svd.u.expect("left factor requested");
        let core_vt = svd.v_t.expect("right factor requested");
        let left = if grow {
            let mut ext = state.u.clone().insert_column(k, 0.0);
            ext.set_column(k, &(&r / r_norm));
            ext
        } else {
            state.u.clone()
        };
        (
            left * core_u,
            svd.singular_values,
            v_ext * core_vt.transpose(),
        )
    };

    let mut truncated = state.truncated;
    if let Some(cap) = rank_cap {
        if s.len() > cap {
            u = u.columns(0, cap).into_owned();
            s = s.rows(0, cap).into_owned();
            v = v.columns(0, cap).into_owned();
            truncated = true;
        }
    }
    // Drop exactly-zero directions that a rank-deficient core can produce.
    let keep = s.iter().take_while(|&&x| x > 0.0).count();
    if keep < s.len() {
        u = u.columns(0, keep).into_owned();
        s = s.rows(0, keep).into_owned();
        v = v.columns(0, keep).into_owned();
    }

    let next = FullSvdState { u, s, v, truncated };
    let report = StepReport {
        residual_norm: r_norm,
        sigma: r_norm * p_norm,
        skipped: !grow,
    };
    Ok((next, report))
}

/// Column-append incremental SVD for fully observed vectors.
#[derive(Debug, Clone)]
pub struct IsvdFull {
    state: FullSvdState,
    rank_cap: Option<usize>,
    steps: usize,
    /// Re-orthonormalize `U` every this many steps (0 disables).
    reorth_interval: usize,
}

impl IsvdFull {
    pub fn new(n: usize) -> Self {
        Self {
            state: FullSvdState::empty(n),
            rank_cap: None,
            steps: 0,
            reorth_interval: 100,
        }
    }

    pub fn with_rank_cap(mut self, cap: usize) -> Self {
        self.rank_cap = Some(cap);
        self
    }

    pub fn with_reorth_interval(mut self, interval: usize) -> Self {
        self.reorth_interval = interval;
        self
    }

    pub fn state(&self) -> &FullSvdState {
        &self.state
    }

    pub fn push_column(&mut self, col: &DVector<f64>) -> Result<StepReport> {
        let (mut next, report) = isvd_full_step(&self.state, col, self.rank_cap)?;
        self.steps += 1;
        if self.reorth_interval > 0
            && self.steps.is_multiple_of(self.reorth_interval)
            && next.rank() > 0
        {
            next.u = orthonormalize_columns(&next.u)?;
        }
        self.state = next;
        Ok(report)
    }
}

impl Tracker for IsvdFull {
    fn name(&self) -> &'static str {
        "isvd-full"
    }

    fn basis(&self) -> &DMatrix<f64> {
        &self.state.u
    }

    fn step_count(&self) -> usize {
        self.steps
    }

    fn observe(&mut self, obs: &Observation) -> Result<StepReport> {
        let n = self.state.n();
        obs.validate(n)?;
        if !obs.is_full(n) {
            return Err(Error::ContractViolation(format!(
                "full incremental SVD needs all {n} entries, got {}",
                obs.len()
            )));
        }
        self.push_column(obs.values())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::orthonormality_drift;

    #[test]
    fn first_column_is_its_own_svd() {
        let v = DVector::from_vec(vec![3.0, 4.0, 0.0]);
        let (st, _) = isvd_full_step(&FullSvdState::empty(3), &v, None).unwrap();
        assert_eq!(st.rank(), 1);
        assert!((st.s[0] - 5.0).abs() < 1e-15);
        let u = st.u.column(0) * st.v[(0, 0)].signum();
        assert!((u - DVector::from_vec(vec![0.6, 0.8, 0.0])).norm() < 1e-15);
        assert!((st.v[(0, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn in_span_column_keeps_rank() {
        let mut t = IsvdFull::new(3);
        t.push_column(&DVector::from_vec(vec![1.0, 0.0, 0.0]))
            .unwrap();
        t.push_column(&DVector::from_vec(vec![0.0, 2.0, 0.0]))
            .unwrap();
        let report = t
            .push_column(&DVector::from_vec(vec![1.0, 1.0, 0.0]))
            .unwrap();
        assert!(report.skipped);
        assert_eq!(t.state().rank(), 2);
        let expected =
            DMatrix::from_column_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 1.0, 1.0, 0.0]);
        assert!((t.state().reconstruct() - expected).norm() < 1e-14);
        assert!(orthonormality_drift(&t.state().v) < 1e-14);
    }

    #[test]
    fn zero_first_column() {
        let mut t = IsvdFull::new(2);
        t.push_column(&DVector::zeros(2)).unwrap();
        assert_eq!(t.state().rank(), 0);
        assert_eq!(t.state().columns_seen(), 1);
        t.push_column(&DVector::from_vec(vec![0.0, 1.0])).unwrap();
        let expected = DMatrix::from_column_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!((t.state().reconstruct() - expected).norm() < 1e-15);
    }

    #[test]
    fn rank_cap_truncates() {
        let mut t = IsvdFull::new(3).with_rank_cap(1);
        t.push_column(&DVector::from_vec(vec![2.0, 0.0, 0.0]))
            .unwrap();
        t.push_column(&DVector::from_vec(vec![0.0, 1.0, 0.0]))
            .unwrap();
        assert_eq!(t.state().rank(), 1);
        assert!(t.state().truncated);
        assert!((t.state().s[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn partial_observation_rejected() {
        let mut t = IsvdFull::new(3);
        let obs = Observation::new(vec![0, 1], vec![1.0, 2.0]).unwrap();
        assert!(matches!(t.observe(&obs), Err(Error::ContractViolation(_))));
    }
}

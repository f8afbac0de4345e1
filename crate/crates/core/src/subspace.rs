// SPDX-License-Identifier: Apache-2.0

//! Basis and observation types shared by every tracker.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default tolerance on `|U^T U - I|_F` for a basis to count as orthonormal.
pub const ORTHO_TOL: f64 = 1e-10;

/// An `n × d` matrix with orthonormal columns, `0 < d < n`.
///
/// Only the column span carries meaning; two estimates that differ by a
/// right rotation describe the same subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceEstimate {
    basis: DMatrix<f64>,
}

impl SubspaceEstimate {
    /// Validates shape and orthonormality (to [`ORTHO_TOL`]).
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(basis, ORTHO_TOL)
    }

    pub fn with_tolerance(basis: DMatrix<f64>, tol: f64) -> Result<Self> {
        let (n, d) = basis.shape();
        if d == 0 || d >= n {
            return Err(Error::DimensionMismatch(format!(
                "subspace dimension must satisfy 0 < d < n, got n={n}, d={d}"
            )));
        }
        let drift = orthonormality_drift(&basis);
        if !(drift <= tol) {
            return Err(Error::NotOrthonormal { drift });
        }
        Ok(Self { basis })
    }

    /// Wraps a basis produced by an update that preserves orthonormality in
    /// exact arithmetic. Shape is still checked.
    pub(crate) fn from_update(basis: DMatrix<f64>) -> Self {
        debug_assert!(basis.ncols() > 0 && basis.ncols() < basis.nrows());
        Self { basis }
    }

    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    pub fn d(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn into_basis(self) -> DMatrix<f64> {
        self.basis
    }

    /// `|U^T U - I|_F`.
    pub fn drift(&self) -> f64 {
        orthonormality_drift(&self.basis)
    }
}

/// `|A^T A - I|_F` for any matrix `A`.
pub fn orthonormality_drift(a: &DMatrix<f64>) -> f64 {
    let k = a.ncols();
    let mut gram = a.tr_mul(a);
    for i in 0..k {
        gram[(i, i)] -= 1.0;
    }
    gram.norm()
}

/// The revealed entries of one stream vector.
///
/// Indices are zero-based, strictly increasing and non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    indices: Vec<usize>,
    values: DVector<f64>,
}

impl Observation {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::ContractViolation(
                "observation must reveal at least one entry".into(),
            ));
        }
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} indices but {} values",
                indices.len(),
                values.len()
            )));
        }
        if let Some(pos) = indices.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::ContractViolation(format!(
                "observation indices must be strictly increasing (position {})",
                pos + 1
            )));
        }
        Ok(Self {
            indices,
            values: DVector::from_vec(values),
        })
    }

    /// Every entry of `v` revealed.
    pub fn full(v: &DVector<f64>) -> Self {
        Self {
            indices: (0..v.len()).collect(),
            values: v.clone(),
        }
    }

    /// Reveals `v` at `indices`, which must already be sorted and unique.
    pub fn from_mask(v: &DVector<f64>, indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= v.len()) {
            return Err(Error::DimensionMismatch(format!(
                "index {bad} out of range for vector of length {}",
                v.len()
            )));
        }
        let values = indices.iter().map(|&i| v[i]).collect();
        Self::new(indices, values)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self, n: usize) -> bool {
        self.indices.len() == n
    }

    /// Checks that every index is below `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self.indices.last() {
            Some(&last) if last >= n => Err(Error::DimensionMismatch(format!(
                "observation index {last} out of range for ambient dimension {n}"
            ))),
            _ => Ok(()),
        }
    }

    /// Rows of `m` selected by this observation's indices.
    pub fn restrict_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        m.select_rows(self.indices.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(SubspaceEstimate::new(DMatrix::identity(3, 3)).is_err());
        assert!(SubspaceEstimate::new(DMatrix::zeros(3, 0)).is_err());
        assert!(SubspaceEstimate::new(DMatrix::identity(3, 2)).is_ok());
    }

    #[test]
    fn rejects_non_orthonormal() {
        let m = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
        assert!(matches!(
            SubspaceEstimate::new(m),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn observation_validation() {
        assert!(Observation::new(vec![], vec![]).is_err());
        assert!(Observation::new(vec![0, 0], vec![1.0, 2.0]).is_err());
        assert!(Observation::new(vec![2, 1], vec![1.0, 2.0]).is_err());
        assert!(Observation::new(vec![0, 1], vec![1.0]).is_err());
        let obs = Observation::new(vec![0, 4], vec![1.0, 2.0]).unwrap();
        assert!(obs.validate(5).is_ok());
        assert!(obs.validate(4).is_err());
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the benchmarks.

use nalgebra::{DMatrix, DVector};
use subtrack::datagen::{initial_basis, GroundTruth, StreamConfig, StreamGenerator};
use subtrack::kernels::restricted_least_squares;
use subtrack::{Observation, SubspaceEstimate};

/// A starting basis and one partial observation at the given scale.
pub struct StepFixture {
    pub basis: SubspaceEstimate,
    pub observation: Observation,
}

impl StepFixture {
    pub fn new(n: usize, d: usize, obs: usize) -> Self {
        let config = StreamConfig {
            n,
            d,
            num_steps: 1,
            obs_count: obs,
            noise_stddev: 0.0,
            seed: 1,
            init_seed: 2,
        };
        let truth = GroundTruth::for_config(&config).expect("valid configuration");
        let observation = StreamGenerator::new(&config, &truth)
            .expect("valid configuration")
            .next()
            .expect("one step")
            .observation;
        Self {
            basis: initial_basis(&config).expect("valid configuration"),
            observation,
        }
    }

    /// Least-squares weights and residual norm for the closed-form SVD.
    pub fn weights(&self) -> (DVector<f64>, f64) {
        let w = restricted_least_squares(&self.basis, &self.observation).expect("valid fixture");
        let u = self.observation.restrict_rows(self.basis.basis());
        let r = (self.observation.values() - u * &w).norm();
        (w, r)
    }
}

/// `[I w; 0 r]`, the matrix the closed form factorizes.
pub fn update_matrix(w: &DVector<f64>, r_norm: f64) -> DMatrix<f64> {
    let d = w.len();
    let mut m = DMatrix::identity(d + 1, d + 1);
    m.view_mut((0, d), (d, 1)).copy_from(w);
    m[(d, d)] = r_norm;
    m
}

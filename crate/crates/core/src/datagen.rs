// SPDX-License-Identifier: Apache-2.0

//! Synthetic streams drawn from a fixed random subspace.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`, with separate ChaCha stream ids for the ground truth, the
//! observations and the initial estimate. Normals are drawn with
//! `rand_distr::StandardNormal` and masks with `rand::seq::index::sample`;
//! all three are portable, so a given configuration yields the same stream on
//! every platform.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::orthonormalize_columns;
use crate::subspace::{Observation, SubspaceEstimate};

/// ChaCha stream id for the ground-truth basis.
pub const TRUTH_STREAM: u64 = 0;
/// ChaCha stream id for coefficients, noise and masks.
pub const OBSERVATION_STREAM: u64 = 1;
/// ChaCha stream id for the trackers' initial basis.
pub const INIT_STREAM: u64 = 2;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_dims(n: usize, d: usize) -> Result<()> {
    if d == 0 || d >= n {
        return Err(Error::ContractViolation(format!(
            "need 0 < d < n, got n={n}, d={d}"
        )));
    }
    Ok(())
}

/// Orthonormalized `n × d` standard-normal matrix from the given ChaCha stream.
pub fn random_orthonormal_from_stream(
    n: usize,
    d: usize,
    seed: u64,
    stream: u64,
) -> Result<SubspaceEstimate> {
    check_dims(n, d)?;
    let mut rng = rng(seed, stream);
    let gaussian = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    SubspaceEstimate::new(orthonormalize_columns(&gaussian)?)
}

/// Random orthonormal basis, deterministic in `seed`.
pub fn random_orthonormal(n: usize, d: usize, seed: u64) -> Result<SubspaceEstimate> {
    random_orthonormal_from_stream(n, d, seed, TRUTH_STREAM)
}

/// Initial tracker basis for a configuration.
pub fn initial_basis(config: &StreamConfig) -> Result<SubspaceEstimate> {
    random_orthonormal_from_stream(config.n, config.d, config.init_seed, INIT_STREAM)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub n: usize,
    pub d: usize,
    pub num_steps: usize,
    /// Revealed entries per step.
    pub obs_count: usize,
    pub noise_stddev: f64,
    pub seed: u64,
    pub init_seed: u64,
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        check_dims(self.n, self.d)?;
        if self.obs_count == 0 || self.obs_count > self.n {
            return Err(Error::ContractViolation(format!(
                "observed entries per step must lie in [1, {}], got {}",
                self.n, self.obs_count
            )));
        }
        if !(self.noise_stddev >= 0.0) || !self.noise_stddev.is_finite() {
            return Err(Error::ContractViolation(format!(
                "noise standard deviation must be finite and nonnegative, got {}",
                self.noise_stddev
            )));
        }
        Ok(())
    }
}

/// The target subspace; coefficients are i.i.d. standard normal.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub basis: SubspaceEstimate,
}

impl GroundTruth {
    pub fn for_config(config: &StreamConfig) -> Result<Self> {
        Ok(Self {
            basis: random_orthonormal(config.n, config.d, config.seed)?,
        })
    }
}

/// One generated step: the revealed observation and the complete vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStep {
    pub observation: Observation,
    pub full: DVector<f64>,
}

/// Iterator over `config.num_steps` observations of `Ū s_t + noise`.
///
/// Per step the draw order is: `d` coefficients, then `n` noise values (only
/// when the noise level is positive), then the mask.
#[derive(Debug, Clone)]
pub struct StreamGenerator {
    config: StreamConfig,
    truth: DMatrix<f64>,
    rng: ChaCha8Rng,
    emitted: usize,
}

impl StreamGenerator {
    pub fn new(config: &StreamConfig, truth: &GroundTruth) -> Result<Self> {
        config.validate()?;
        if truth.basis.n() != config.n || truth.basis.d() != config.d {
            return Err(Error::DimensionMismatch(format!(
                "ground truth is {}x{}, configuration asks for {}x{}",
                truth.basis.n(),
                truth.basis.d(),
                config.n,
                config.d
            )));
        }
        Ok(Self {
            config: config.clone(),
            truth: truth.basis.basis().clone(),
            rng: rng(config.seed, OBSERVATION_STREAM),
            emitted: 0,
        })
    }

    fn draw(&mut self) -> GeneratedStep {
        let StreamConfig {
            n,
            d,
            obs_count,
            noise_stddev,
            ..
        } = self.config;
        let rng = &mut self.rng;
        let coeffs = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut full = &self.truth * coeffs;
        if noise_stddev > 0.0 {
            for x in full.iter_mut() {
                *x += noise_stddev * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let mut mask = index::sample(rng, n, obs_count).into_vec();
        mask.sort_unstable();
        let observation = Observation::from_mask(&full, mask)
            .expect("mask indices are sorted, unique and in range");
        GeneratedStep { observation, full }
    }
}

impl Iterator for StreamGenerator {
    type Item = GeneratedStep;

    fn next(&mut self) -> Option<GeneratedStep> {
        if self.emitted >= self.config.num_steps {
            return None;
        }
        self.emitted += 1;
        Some(self.draw())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.config.num_steps - self.emitted;
        (left, Some(left))
    }
}

impl ExactSizeIterator for StreamGenerator {}

/// Convenience: the observations of a whole stream.
pub fn generate_stream(config: &StreamConfig, truth: &GroundTruth) -> Result<Vec<GeneratedStep>> {
    Ok(StreamGenerator::new(config, truth)?.collect())
}

// SPDX-License-Identifier: Apache-2.0

//! Experiment driver: builds a tracker and a stream from a configuration,
//! runs it and writes traces and basis snapshots.

mod equivalence;
pub mod io;

pub use equivalence::{check_equivalence, EquivalenceConfig, EquivalenceReport, TrialResult};

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::datagen::{initial_basis, GroundTruth, StreamConfig, StreamGenerator};
use crate::error::{Error, Result};
use crate::subspace::{Observation, SubspaceEstimate};
use crate::trackers::{
    process_stream, Brand, BrandState, Grouse, IsvdFull, IsvdPartial, ReorthPolicy, StepPolicy,
    StepRecord, Tracker,
};

/// Decay used by the down-weighted incremental SVD unless overridden.
pub const DEFAULT_DECAY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Grouse,
    IsvdFull,
    IsvdPartial,
    Brand,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Grouse => "grouse",
            Algorithm::IsvdFull => "isvd-full",
            Algorithm::IsvdPartial => "isvd-partial",
            Algorithm::Brand => "brand",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "grouse" => Algorithm::Grouse,
            "isvd-full" => Algorithm::IsvdFull,
            "isvd-partial" => Algorithm::IsvdPartial,
            "brand" => Algorithm::Brand,
            other => {
                return Err(Error::ContractViolation(format!(
                    "unknown algorithm `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub step: StepPolicy,
    pub decay: f64,
    pub stream: StreamConfig,
    pub reorth: ReorthPolicy,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, stream: StreamConfig) -> Self {
        Self {
            algorithm,
            step: StepPolicy::Greedy,
            decay: DEFAULT_DECAY,
            stream,
            reorth: ReorthPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stream.validate()?;
        self.step.validate()?;
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::ContractViolation(format!(
                "decay must lie in (0, 1], got {}",
                self.decay
            )));
        }
        if self.algorithm == Algorithm::IsvdFull && self.stream.obs_count != self.stream.n {
            return Err(Error::ContractViolation(
                "isvd-full needs fully observed vectors (obs = n)".into(),
            ));
        }
        Ok(())
    }

    /// Builds the tracker, starting from `init` for the fixed-rank methods.
    pub fn build_tracker(&self, init: SubspaceEstimate) -> Result<Box<dyn Tracker + Send>> {
        Ok(match self.algorithm {
            Algorithm::Grouse => {
                Box::new(Grouse::new(init, self.step.clone())?.with_reorth(self.reorth))
            }
            Algorithm::IsvdPartial => Box::new(IsvdPartial::new(init).with_reorth(self.reorth)),
            Algorithm::Brand => {
                Box::new(Brand::new(BrandState::new(init, self.decay)?).with_reorth(self.reorth))
            }
            Algorithm::IsvdFull => {
                let cap = self.stream.d;
                Box::new(IsvdFull::new(self.stream.n).with_rank_cap(cap))
            }
        })
    }
}

/// Observations drawn from the configured generator.
pub fn generated_observations(config: &StreamConfig) -> Result<Vec<Observation>> {
    let truth = GroundTruth::for_config(config)?;
    Ok(StreamGenerator::new(config, &truth)?
        .map(|s| s.observation)
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceMetadata {
    pub algorithm: Algorithm,
    pub stream: StreamConfig,
    pub step_policy: String,
    pub decay: Option<f64>,
    pub duration_secs: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentTrace {
    pub records: Vec<StepRecord>,
    pub metadata: TraceMetadata,
    pub final_basis: DMatrix<f64>,
}

impl ExperimentTrace {
    pub fn final_error(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.error)
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&self.metadata).expect("metadata is plain data")
    }
}

/// Optional per-step basis checkpoints.
#[derive(Debug, Clone)]
pub struct SnapshotSpec {
    pub every: usize,
    /// Path prefix; files are named `<prefix>.step<t>.basis`.
    pub prefix: PathBuf,
}

impl SnapshotSpec {
    pub fn path_for(&self, step: usize) -> PathBuf {
        let mut name = self.prefix.clone().into_os_string();
        name.push(format!(".step{step}.basis"));
        PathBuf::from(name)
    }
}

/// Runs one experiment over `observations`, writing CSV rows to `csv` as they
/// are produced. On a mid-run failure, the rows written so far are flushed
/// before the error is returned.
pub fn run_experiment<W: Write>(
    config: &ExperimentConfig,
    observations: &[Observation],
    csv: W,
    snapshots: Option<&SnapshotSpec>,
) -> Result<ExperimentTrace> {
    config.validate()?;
    let truth = GroundTruth::for_config(&config.stream)?;
    let init = initial_basis(&config.stream)?;
    let mut tracker = config.build_tracker(init)?;
    let mut writer = io::TraceWriter::new(csv)?;

    let started = Instant::now();
    let result = process_stream(
        tracker.as_mut(),
        observations,
        Some(&truth.basis),
        |rec, basis| {
            writer.write(rec)?;
            if let Some(spec) = snapshots {
                if spec.every > 0 && rec.step % spec.every == 0 {
                    io::save_basis(&spec.path_for(rec.step), basis)?;
                }
            }
            Ok(())
        },
    );
    writer.flush()?;
    let records = result?;

    Ok(ExperimentTrace {
        records,
        metadata: TraceMetadata {
            algorithm: config.algorithm,
            stream: config.stream.clone(),
            step_policy: match config.algorithm {
                Algorithm::Grouse => config.step.label(),
                _ => "n/a".into(),
            },
            decay: (config.algorithm == Algorithm::Brand).then_some(config.decay),
            duration_secs: started.elapsed().as_secs_f64(),
        },
        final_basis: tracker.basis().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(n: usize, d: usize, obs: usize, steps: usize) -> StreamConfig {
        StreamConfig {
            n,
            d,
            num_steps: steps,
            obs_count: obs,
            noise_stddev: 0.0,
            seed: 3,
            init_seed: 4,
        }
    }

    #[test]
    fn zero_steps_writes_header_only() {
        let cfg = ExperimentConfig::new(Algorithm::Grouse, stream(20, 2, 10, 0));
        let obs = generated_observations(&cfg.stream).unwrap();
        let mut csv = Vec::new();
        let trace = run_experiment(&cfg, &obs, &mut csv, None).unwrap();
        assert!(trace.records.is_empty());
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "step,error,residual_norm,sigma\n"
        );
    }

    #[test]
    fn isvd_full_requires_full_observations() {
        let cfg = ExperimentConfig::new(Algorithm::IsvdFull, stream(20, 2, 10, 5));
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in [
            Algorithm::Grouse,
            Algorithm::IsvdFull,
            Algorithm::IsvdPartial,
            Algorithm::Brand,
        ] {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("svd".parse::<Algorithm>().is_err());
    }

    #[test]
    fn failure_flushes_partial_trace() {
        let cfg = ExperimentConfig::new(Algorithm::Grouse, stream(20, 2, 10, 3));
        let mut obs = generated_observations(&cfg.stream).unwrap();
        obs.push(Observation::new(vec![25], vec![1.0]).unwrap());
        let mut csv = Vec::new();
        let err = run_experiment(&cfg, &obs, &mut csv, None).unwrap_err();
        assert!(matches!(err, Error::AtStep { step: 4, .. }));
        let rows = io::read_trace(csv.as_slice()).unwrap();
        assert_eq!(rows.len(), 3);
    }
}

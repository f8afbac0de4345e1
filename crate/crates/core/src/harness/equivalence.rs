// SPDX-License-Identifier: Apache-2.0

//! Lockstep comparison of GROUSE (greedy step) and the partial-data
//! incremental SVD (default rotation). In exact arithmetic the two produce
//! the same basis after every step, so the observed distance is pure
//! roundoff.

use std::io::Write;

use rayon::prelude::*;

use crate::datagen::{initial_basis, GroundTruth, StreamConfig, StreamGenerator};
use crate::error::{Error, Result};
use crate::trackers::{Grouse, IsvdPartial, ReorthPolicy, StepPolicy, Tracker};

use super::io::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceConfig {
    pub trials: usize,
    /// Trial `i` uses `seed + i` and `init_seed + i`.
    pub stream: StreamConfig,
    pub threshold: f64,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            stream: StreamConfig {
                n: 200,
                d: 10,
                num_steps: 50,
                obs_count: 60,
                noise_stddev: 0.0,
                seed: 0,
                init_seed: 0,
            },
            threshold: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    /// One-based step with the largest distance (0 for an empty trial).
    pub worst_step: usize,
    pub max_discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub trials: usize,
    pub max_step_discrepancy: f64,
    pub per_trial: Vec<TrialResult>,
    pub threshold: f64,
}

impl EquivalenceReport {
    /// Strict: a threshold of zero can never pass.
    pub fn passed(&self) -> bool {
        self.max_step_discrepancy < self.threshold
    }

    pub fn summary(&self) -> String {
        format!(
            "trials={} max_step_discrepancy={:e} threshold={:e} result={}",
            self.trials,
            self.max_step_discrepancy,
            self.threshold,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }

    /// CSV with header `trial,worst_step,max_discrepancy`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "trial,worst_step,max_discrepancy")?;
        for t in &self.per_trial {
            writeln!(
                out,
                "{},{},{}",
                t.trial,
                t.worst_step,
                fmt_f64(t.max_discrepancy)
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

fn trial_config(base: &StreamConfig, trial: usize) -> StreamConfig {
    StreamConfig {
        seed: base.seed.wrapping_add(trial as u64),
        init_seed: base.init_seed.wrapping_add(trial as u64),
        ..base.clone()
    }
}

/// Runs one trial and returns the worst per-step Frobenius distance.
pub fn run_trial(base: &StreamConfig, trial: usize) -> Result<TrialResult> {
    let config = trial_config(base, trial);
    let truth = GroundTruth::for_config(&config)?;
    let init = initial_basis(&config)?;
    let mut grouse =
        Grouse::new(init.clone(), StepPolicy::Greedy)?.with_reorth(ReorthPolicy::disabled());
    let mut isvd = IsvdPartial::new(init).with_reorth(ReorthPolicy::disabled());

    let mut worst = TrialResult {
        trial,
        worst_step: 0,
        max_discrepancy: 0.0,
    };
    for (i, step) in StreamGenerator::new(&config, &truth)?.enumerate() {
        let tag = |e| Error::at_step(i + 1, e);
        let a = grouse.observe(&step.observation).map_err(tag)?;
        let b = isvd.observe(&step.observation).map_err(tag)?;
        if a.skipped != b.skipped {
            return Err(Error::at_step(
                i + 1,
                Error::ContractViolation("only one of the two algorithms skipped the step".into()),
            ));
        }
        let dist = (grouse.basis() - isvd.basis()).norm();
        if !(dist <= worst.max_discrepancy) {
            worst.max_discrepancy = dist;
            worst.worst_step = i + 1;
        }
    }
    Ok(worst)
}

/// Runs all trials (in parallel) and reduces to the largest discrepancy.
/// The report does not depend on scheduling.
pub fn check_equivalence(config: &EquivalenceConfig) -> Result<EquivalenceReport> {
    config.stream.validate()?;
    if !(config.threshold >= 0.0) {
        return Err(Error::ContractViolation(format!(
            "threshold must be nonnegative, got {}",
            config.threshold
        )));
    }
    let per_trial = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(&config.stream, t))
        .collect::<Result<Vec<_>>>()?;
    let max_step_discrepancy = per_trial
        .iter()
        .map(|t| t.max_discrepancy)
        .fold(0.0, f64::max);
    Ok(EquivalenceReport {
        trials: config.trials,
        max_step_discrepancy,
        per_trial,
        threshold: config.threshold,
    })
}

// SPDX-License-Identifier: Apache-2.0

//! Streaming subspace tracking from partially observed vectors.
//!
//! The crate provides four trackers that maintain an `n × d` orthonormal
//! basis estimate from a stream of (possibly partial) observations:
//!
//! * [`trackers::Grouse`]: the Grassmannian rank-one geodesic update.
//! * [`trackers::IsvdPartial`]: incremental SVD with imputation of the
//!   missing entries, singular values reset to one every step and the
//!   basis kept at `d` columns.
//! * [`trackers::IsvdFull`]: the classical column-append incremental SVD
//!   for fully observed columns.
//! * [`trackers::Brand`]: incremental SVD with imputation that carries
//!   down-weighted singular values between steps.
//!
//! With the greedy step length from [`kernels::theorem1_scalars`], GROUSE and
//! the partial-data incremental SVD produce the same iterate; the harness
//! module checks this to machine precision.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod subspace;
pub mod trackers;

pub use error::{Error, Result};
pub use subspace::{Observation, SubspaceEstimate};
pub use trackers::{StepPolicy, StepReport, Tracker};

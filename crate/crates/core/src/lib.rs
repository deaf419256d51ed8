//! Testable learning with distribution shift (TDS) for real-valued regression.
//!
//! Two learner/tester pipelines are provided:
//!
//! - [`tds_kernel`]: for bounded, hypercontractive training marginals. Fits a
//!   norm-constrained kernel regressor on reference samples and runs a spectral
//!   test that compares the second-moment matrices of a data-dependent feature
//!   map on fresh train and test verification samples.
//! - [`tds_moment`]: for strictly subexponential training marginals. Checks
//!   low-degree moments of the test marginal against the training marginal and
//!   fits a box-constrained polynomial regressor.
//!
//! Either pipeline rejects when it detects shift, or accepts and returns a
//! clipped hypothesis. The supporting machinery lives in [`kernels`], [`nets`],
//! [`polyapprox`] and [`scenarios`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod kernels;
pub mod linalg;
pub mod nets;
pub mod outcome;
pub mod params;
pub mod polyapprox;
pub mod rng;
pub mod scenarios;
pub mod serde_f64;
pub mod source;
pub mod tds_kernel;
pub mod tds_moment;

pub use data::{clip, clip_labels, squared_loss, DataError, Dataset, DatasetFormat, LabeledSample};
pub use outcome::{Hypothesis, RejectReason, TdsOutcome};
pub use params::{ParamsError, ScaleMode, TdsParams};

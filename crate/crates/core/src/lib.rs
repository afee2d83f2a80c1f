//! Localization of discontinuities in the outputs of expensive black-box models.
//!
//! The pipeline has three stages:
//!
//! 1. [`refine`] runs a divide-and-conquer search driven by one-dimensional
//!    polynomial annihilation ([`pa`]) to find a handful of edge points and
//!    estimate the local jump size, then labels nearby evaluations by value.
//! 2. [`svm`] fits a Gaussian-kernel support vector classifier to the labeled
//!    evaluations; its zero level set approximates the separating surface.
//! 3. [`sampler`] proposes new evaluations on the classifier boundary, labels
//!    them by comparing against the nearest labeled point of each class, and
//!    the [`detector`] retrains until no new points can be placed.
//!
//! [`models`] holds the benchmark functions with their ground-truth oracles and
//! [`harness`] scores classifiers and runs repeated-seed studies.

pub mod detector;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod models;
pub mod pa;
pub mod refine;
pub mod rng;
pub mod sampler;
pub mod store;
pub mod svm;

pub use detector::{detect, DetectorConfig, Detection, InitialPoints, RunRecord, RunTrace};
pub use error::{Error, Result};
pub use geometry::{Domain, Label, LabeledPoint};
pub use models::{Benchmark, Model, ModelAdapter, ModelError, Truth};
pub use svm::Classifier;

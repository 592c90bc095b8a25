//! Counterfactual explanations for linear support vector machines.
//!
//! Given a linear SVM `sign(<w, x> + b)` and an instance `x`, the crate finds
//! the closest `x'` (under a weighted quadratic, Mahalanobis or L1 cost) that
//! lands on the far side of the model's margin, `y' (<w, x'> + b) >= 1`.
//! Categorical features are one-hot encoded, so the search space is mixed
//! integer; problems are solved exactly by the branch-and-bound solver in
//! [`optim`].
//!
//! The crate is `no_std` (with `alloc`). The default `std` feature only adds
//! wall-clock time limits to the solver.
//!
//! Module map:
//!
//! - [`dataset`]: feature schema, validated data, percentiles, covariance, prototypes
//! - [`model`]: linear SVM, interior-point trainer, canonical margin scaling
//! - [`optim`]: convex QP/LP active-set solver and branch-and-bound for binaries
//! - [`counterfactual`]: problem builders for each explanation variant, stability checks
//! - [`evaluate`]: percentile-shift cost functions and the benchmark harness
//! - [`audit`]: cohort-level aggregation and linear attributions
//! - [`synth`]: seeded synthetic datasets used by examples and tests

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod audit;
pub mod counterfactual;
pub mod dataset;
pub mod evaluate;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod synth;

mod math;

pub use audit::{AuditError, AuditReport};
pub use counterfactual::{
    Counterfactual, CounterfactualQuery, ExplainError, Explainer, Method, PlausibilityRadius, Statistics, Variant,
};
pub use dataset::{
    ClassPrototypes, CovarianceModel, Dataset, DatasetError, EmpiricalDistribution, FeatureKind, FeatureSchema,
    FeatureSpec, Label,
};
pub use evaluate::{CostReport, EvaluateError};
pub use model::{LinearSvm, ModelError, TrainConfig};
pub use optim::{MixedIntegerProgram, SolveResult, SolveStatus, SolverConfig, SolverError};

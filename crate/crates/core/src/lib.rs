//! Fairness, privacy and utility machinery for building Pareto frontiers.
//!
//! The crate covers two private learning frameworks with a demographic-parity
//! mitigation placed where the privacy mechanism lives:
//!
//! * [`aggregation`]: Confident-GNMax and Confident&Fair-GNMax teacher vote
//!   aggregation (the PATE query phase),
//! * [`learners`]: DP-SGD and fair DP-SGD with a demographic parity loss,
//!
//! together with the [`accounting`] needed to report their privacy cost, the
//! [`fairness`] estimators and stream processors, the [`pareto`] frontier
//! primitives used by a decision maker and the experiment [`harness`] that
//! produces `frontier.json`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accounting;
pub mod aggregation;
pub mod domain;
pub mod error;
pub mod fairness;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod pareto;
pub mod rng;

pub use domain::{
    Classifier, ExperimentRecord, Framework, GroupClassCounter, LabeledExample, Prediction, PrivacyBudget,
    VoteHistogram,
};
pub use error::{Error, Result};
pub use rng::SeededRng;

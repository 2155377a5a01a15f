//! Nonparametric estimation of intervention effects from observational data.
//!
//! The library estimates dose-response curves `E[Y | do(X = x)]` for known
//! causal structure. Its main estimator fits a regression of the response on
//! the intervention variable and a backdoor adjustment set (an additive
//! start refined by kernel boosting) and then marginally integrates the
//! adjustment coordinates over their empirical distribution. Alternative
//! estimators simulate fitted structural equations along causal paths.
//! Supporting modules provide DAG utilities (backdoor checking, path
//! enumeration, random graphs), synthetic data generators, benchmark studies
//! and stability-based ranking of intervention effects.

pub mod curve;
pub mod data;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod harness;
pub mod pathsim;
pub mod seed;
pub mod sem;
pub mod smoothers;

pub use data::Dataset;
pub use error::{Error, Result};
pub use graph::{AdjustmentSet, Dag, NodePath, Provenance};

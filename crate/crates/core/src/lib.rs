//! Simulation study of data-splitting strategies for predictive model
//! building: data generators, model fitting and selection, the FD/SD/SAFE/
//! VALID estimators, the score decomposition, and the experiment harness.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boxcox;
pub mod data;
pub mod decomp;
pub mod error;
pub mod glm;
pub mod harness;
pub mod linalg;
pub mod linmod;
pub mod predictive;
pub mod randgen;
pub mod rng;
pub mod select;
pub mod strategy;

pub use data::{Dataset, ResponseKind};
pub use decomp::DecompositionEstimate;
pub use error::{Error, Result};
pub use harness::{RunConfig, ScenarioCell};
pub use predictive::{log_score, PredictiveDistribution};
pub use randgen::{ScenarioDesign, ScenarioKind, ScenarioParams};
pub use select::{ModelForm, SelectedModel, StepwiseStart};
pub use strategy::{Analysis, AnalysisOptions, Fraction, OutlierTransfer, SplitPlan, Strategy};

//! Representational similarity analysis over arbitrary activity patterns.
//!
//! The pipeline has three levels. First-order: pool per-token activations
//! into sentence vectors and build representational dissimilarity matrices
//! (RDMs) from them. Second-order: compare RDMs to each other, either whole
//! (RSM) or row-by-row (per-condition layer agreement). Third-order:
//! correlate per-condition agreement against external difficulty measures
//! such as fixation durations, Yngve scores, word frequency, and sense
//! counts.

pub mod anova;
pub mod condition;
pub mod error;
pub mod ingest;
pub mod io;
pub mod lingfeat;
pub mod orders;
pub mod rankstats;
pub mod rdm;
pub mod rng;
pub mod synth;

mod linalg;
mod special;

pub use condition::ConditionSet;
pub use error::{Error, Result};
pub use ingest::{
    ActivityMatrix, FeatureVector, FixationMeasure, LayerId, SkipPolicy, TokenActivations,
    TokenFixationTable,
};
pub use rdm::{CovarianceEstimate, DissimilarityMeasure, Rdm};

//! finelens: predict GDPR enforcement fines from case meta-data and
//! decision-document text.
//!
//! The pipeline stages are ordinary functions over immutable inputs:
//! [`corpus`] loads and merges enforcement cases, [`textprep`] runs the
//! tokenize/stopword/lemmatize steps, [`features`] builds TF, TF-IDF, and
//! dummy-variable design matrices, [`linreg`] holds the estimators, and
//! [`eval`] the cross-validation harness. [`anova`] answers the
//! which-articles question, [`synthgen`] produces seeded corpora with known
//! ground truth.

pub mod anova;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod linalg;
pub mod linreg;
pub mod rng;
pub mod stats;
pub mod synthgen;
pub mod textprep;

pub use error::{Error, Result};

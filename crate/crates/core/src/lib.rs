//! Trust classification for social media users: corpus handling, sentiment
//! scoring, feature extraction, acquaintance reputation, the DeepTrust
//! network, baseline classifiers and cross-validated evaluation.

pub mod baselines;
pub mod classifier;
pub mod data;
pub mod deeptrust;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod model_io;
pub mod neural;
pub mod pipeline;
pub mod reputation;
pub mod sentiment;
pub mod text;

pub use classifier::{Classifier, Learner};
pub use data::{Corpus, Label, LabelSet};
pub use error::{Error, Result};
pub use features::{Dataset, FeatureVector};

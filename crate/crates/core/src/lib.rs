//! Interpretable humor classification from per-token channel series.
//!
//! The pipeline: a [`corpus`] of channel time series is turned into a
//! [`matrix::FeatureMatrix`] of proxy features by the [`featurizer`], using a
//! [`theory::TheoryConfig`] built from the [`tsfeatures`] catalog. One
//! [`ga2m`] classifier is trained per theory, the classifiers are combined by
//! weighted soft voting in [`ensemble`], and [`explain`] exports feature
//! functions, local contributions and global importances.

pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod explain;
pub mod featurizer;
pub mod ga2m;
pub mod matrix;
pub mod shipped;
pub mod synthgen;
pub mod theory;
pub mod tsfeatures;

pub use corpus::{read_corpus, write_corpus, InstanceRecord};
pub use ensemble::{EnsembleModel, EvaluationReport, SimplexSettings};
pub use error::{Error, Result};
pub use featurizer::{feature_name, featurize, FeaturizationReport};
pub use ga2m::{train, train_theory, Ga2mModel, TrainSettings};
pub use matrix::{read_feature_matrix, write_feature_matrix, FeatureMatrix, FeatureRow};
pub use synthgen::SynthSpec;
pub use theory::{read_theory_config, ProxyFeatureSpec, TheoryConfig};
pub use tsfeatures::Calculator;

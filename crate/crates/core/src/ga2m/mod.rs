//! Generalized additive models with pairwise interactions.
//!
//! A model predicts `logit = intercept + sum_j f_j(x_j) + sum_jk f_jk(x_j, x_k)`
//! where every `f` is a lookup table over quantile bins. Tables are learned
//! by bagged cyclic gradient boosting: main terms first, then pair terms on
//! the residuals.

mod binning;
mod boost;
mod model;
mod settings;

pub use binning::{build_bins, quantile_cuts, FeatureBins};
pub use boost::{pair_name, train, train_theory};
pub use model::{
    read_model, sigmoid, write_model, BagMetrics, FeatureMeta, Ga2mModel, StageTrace,
    TermContribution, TermFunction, TermKind, TrainMetrics, MODEL_VERSION,
};
pub use settings::TrainSettings;

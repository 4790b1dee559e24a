//! Posterior realizations: deep ensembles of small MLPs and an exact
//! finite-hypothesis Bayesian classifier.

pub mod discrete;
pub mod ensemble;
pub mod mlp;

pub use discrete::{DiscreteBayesModel, Likelihood};
pub use ensemble::{train_ensemble, PosteriorEnsemble, TrainConfig, TrainingSet};
pub use mlp::Mlp;

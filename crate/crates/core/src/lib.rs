//! Information-theoretic active learning over Monte-Carlo predictive samples.
//!
//! Scores are in nats. The universal input is [`PredictiveSamples`], an
//! `S x N x C` tensor of class probabilities, one slice per posterior sample
//! (an ensemble member, or a weighted hypothesis of [`DiscreteBayesModel`]).
//!
//! - [`info`]: entropy, BALD, joint predictives, BatchBALD and batch selection.
//! - [`epig`]: EPIG-BALD with a distilled or pseudo-label-conditioned posterior,
//!   and the exact EPIG forms on the discrete model.
//! - [`models`]: deep ensembles of small MLPs and the exact discrete model.
//! - [`sim`]: the closed active-learning loop with an OoD-contaminated pool.
//! - [`config`], [`idx`], [`synthetic`], [`report`], [`cli`]: I/O.

pub mod cli;
pub mod config;
pub mod data;
pub mod epig;
pub mod error;
pub mod identities;
pub mod idx;
pub mod info;
pub mod models;
pub mod predictive;
pub mod report;
pub mod rng;
pub mod sim;
pub mod synthetic;

pub use config::{ExperimentConfig, Method};
pub use data::{AcquisitionResult, ExperimentPools, LabeledExample, RunLog, Target};
pub use error::{Error, Result};
pub use models::{DiscreteBayesModel, PosteriorEnsemble, TrainConfig};
pub use predictive::PredictiveSamples;

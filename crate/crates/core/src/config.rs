//! Experiment configuration: a sectioned `key = value` document (TOML), with
//! every field defaulted and unknown keys rejected.
//!
//! ```toml
//! [dataset]
//! source = "synthetic"        # or "idx" with images/labels paths
//! initial_train = 10
//! pool_size = 2000            # total, OoD included
//! eval_size = 200
//! test_size = 2000
//!
//! [ood]
//! source = "junk_box"         # "idx" or "none"
//! contamination = 0.5
//! mode = "rejection"          # or "exposure"
//!
//! [acquisition]
//! method = "epig_bald_topk"
//! acquisition_size = 5
//! rounds = 40
//!
//! [model]
//! hidden = [64, 64]
//! members = 8
//!
//! [experiment]
//! trials = 5
//! seed = 0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::info::{DEFAULT_JOINT_CAP, DEFAULT_MC_SAMPLES, DEFAULT_SOFTMAX_TEMPERATURE};
use crate::models::ensemble::TrainConfig;
use crate::synthetic::{JunkBox, MixtureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic,
    Idx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub source: DataSource,
    /// Class count for IDX data; synthetic data takes it from the mixture.
    pub classes: usize,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub initial_train: usize,
    pub pool_size: usize,
    pub eval_size: usize,
    pub test_size: usize,
    pub mixture: MixtureSpec,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            classes: 10,
            images: None,
            labels: None,
            initial_train: 10,
            pool_size: 2000,
            eval_size: 200,
            test_size: 2000,
            mixture: MixtureSpec::default(),
        }
    }
}

impl DatasetConfig {
    pub fn classes(&self) -> usize {
        match self.source {
            DataSource::Synthetic => self.mixture.classes,
            DataSource::Idx => self.classes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OodSource {
    None,
    JunkBox,
    Idx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OodMode {
    /// Acquired OoD items are dropped; they still use up the round's budget.
    Rejection,
    /// Acquired OoD items join the training set with uniform targets.
    Exposure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OodConfig {
    pub source: OodSource,
    pub contamination: f64,
    pub mode: OodMode,
    /// In rejection mode, keep selecting until the batch holds `b`
    /// in-distribution items (or the pool runs dry).
    pub replace_rejected: bool,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub junk: JunkBox,
}

impl Default for OodConfig {
    fn default() -> Self {
        Self {
            source: OodSource::JunkBox,
            contamination: 0.5,
            mode: OodMode::Rejection,
            replace_rejected: false,
            images: None,
            labels: None,
            junk: JunkBox::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Uniform,
    BaldTopk,
    Batchbald,
    SoftmaxBald,
    EpigBaldTopk,
    EpigBaldGreedy,
    EpigEntropy,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Uniform,
        Method::BaldTopk,
        Method::Batchbald,
        Method::SoftmaxBald,
        Method::EpigBaldTopk,
        Method::EpigBaldGreedy,
        Method::EpigEntropy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Uniform => "uniform",
            Method::BaldTopk => "bald_topk",
            Method::Batchbald => "batchbald",
            Method::SoftmaxBald => "softmax_bald",
            Method::EpigBaldTopk => "epig_bald_topk",
            Method::EpigBaldGreedy => "epig_bald_greedy",
            Method::EpigEntropy => "epig_entropy",
        }
    }

    /// Methods that need a conditioned posterior each round.
    pub fn uses_eval_set(self) -> bool {
        matches!(
            self,
            Method::EpigBaldTopk | Method::EpigBaldGreedy | Method::EpigEntropy
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config {
                field: "acquisition.method".into(),
                message: format!("unknown method `{s}`"),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    Distilled,
    PseudoEnsemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionConfig {
    pub method: Method,
    pub acquisition_size: usize,
    pub rounds: usize,
    /// Inverse temperature for softmax acquisition: weight = exp(temperature * score).
    pub softmax_temperature: f64,
    pub conditioning: Conditioning,
    pub pseudo_label_sets: usize,
    /// Loss weight of evaluation points relative to training points when
    /// conditioning.
    pub eval_weight: f64,
    pub joint_cap: usize,
    pub mc_samples: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            method: Method::EpigBaldTopk,
            acquisition_size: 5,
            rounds: 40,
            softmax_temperature: DEFAULT_SOFTMAX_TEMPERATURE,
            conditioning: Conditioning::Distilled,
            pseudo_label_sets: crate::epig::DEFAULT_PSEUDO_LABEL_SETS,
            eval_weight: 1.0,
            joint_cap: DEFAULT_JOINT_CAP,
            mc_samples: DEFAULT_MC_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub trials: usize,
    pub seed: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self { trials: 5, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub ood: OodConfig,
    pub acquisition: AcquisitionConfig,
    pub model: TrainConfig,
    pub experiment: ExperimentSection,
}

fn constraint(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        if d.initial_train == 0 {
            return Err(constraint("dataset.initial_train", "must be >= 1"));
        }
        if d.test_size == 0 {
            return Err(constraint("dataset.test_size", "must be >= 1"));
        }
        match d.source {
            DataSource::Synthetic => d.mixture.validate()?,
            DataSource::Idx => {
                if d.images.is_none() || d.labels.is_none() {
                    return Err(constraint(
                        "dataset.images",
                        "idx source needs images and labels paths",
                    ));
                }
                if d.classes < 2 {
                    return Err(constraint("dataset.classes", "need at least 2 classes"));
                }
            }
        }
        let o = &self.ood;
        if !(0.0..=1.0).contains(&o.contamination) {
            return Err(constraint("ood.contamination", "must be in [0, 1]"));
        }
        match o.source {
            OodSource::JunkBox if d.source == DataSource::Synthetic => {
                o.junk.validate(d.mixture.dim())?
            }
            OodSource::JunkBox => o.junk.validate(o.junk.low.len())?,
            OodSource::Idx if o.images.is_none() || o.labels.is_none() => {
                return Err(constraint(
                    "ood.images",
                    "idx OoD source needs images and labels paths",
                ));
            }
            OodSource::None if o.contamination > 0.0 => {
                return Err(constraint(
                    "ood.contamination",
                    "must be 0 when ood.source = \"none\"",
                ));
            }
            _ => {}
        }
        let a = &self.acquisition;
        if a.acquisition_size == 0 {
            return Err(constraint("acquisition.acquisition_size", "must be >= 1"));
        }
        if a.rounds == 0 {
            return Err(constraint("acquisition.rounds", "must be >= 1"));
        }
        if !(a.softmax_temperature > 0.0) || !a.softmax_temperature.is_finite() {
            return Err(constraint(
                "acquisition.softmax_temperature",
                "must be positive",
            ));
        }
        if a.pseudo_label_sets == 0 {
            return Err(constraint("acquisition.pseudo_label_sets", "must be >= 1"));
        }
        if !(a.eval_weight >= 0.0) || !a.eval_weight.is_finite() {
            return Err(constraint("acquisition.eval_weight", "must be >= 0"));
        }
        if a.mc_samples == 0 {
            return Err(constraint("acquisition.mc_samples", "must be >= 1"));
        }
        self.model.validate()?;
        if a.method != Method::Uniform && self.model.members < 2 {
            return Err(constraint(
                "model.members",
                "scoring needs at least 2 members",
            ));
        }
        if self.experiment.trials == 0 {
            return Err(constraint("experiment.trials", "must be >= 1"));
        }
        if self.experiment.seed > i64::MAX as u64 {
            return Err(constraint(
                "experiment.seed",
                "must fit in a signed 64-bit integer",
            ));
        }
        Ok(())
    }

    /// Number of OoD items in the pool.
    pub fn ood_count(&self) -> usize {
        if self.ood.source == OodSource::None {
            return 0;
        }
        (self.dataset.pool_size as f64 * self.ood.contamination).round() as usize
    }

    /// Canonical serialization: every field, defaults included.
    pub fn to_canonical_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_canonical_string().as_bytes());
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Parse and validate a configuration document.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ConfigParse(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        let c = parse_config_str("").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.digest(), parse_config_str("").unwrap().digest());
        assert_eq!(c.digest().len(), 64);
    }

    #[test]
    fn zero_acquisition_size_names_the_field() {
        let err = parse_config_str("[acquisition]\nacquisition_size = 0\n").unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "acquisition.acquisition_size"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_keys_and_syntax_errors() {
        let err = parse_config_str("[acquisition]\nbatch = 3\n").unwrap_err();
        assert!(err.to_string().contains("batch"), "{err}");
        let err = parse_config_str("[dataset\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse(_)));
        assert!(err.to_string().contains("line 1"), "{err}");
        assert!(parse_config_str("[acquisition]\nmethod = \"random\"\n").is_err());
    }

    #[test]
    fn round_trip_is_lossless() {
        let text = "[acquisition]\nmethod = \"batchbald\"\nsoftmax_temperature = 0.1\n\
                    [ood]\nmode = \"exposure\"\ncontamination = 0.3\n[model]\nlearning_rate = 0.0123\n";
        let c = parse_config_str(text).unwrap();
        let again = parse_config_str(&c.to_canonical_string()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.digest(), again.digest());
        assert_ne!(c.digest(), ExperimentConfig::default().digest());
    }

    #[test]
    fn constraints() {
        for (text, field) in [
            ("[ood]\ncontamination = 1.5\n", "ood.contamination"),
            ("[acquisition]\nrounds = 0\n", "acquisition.rounds"),
            ("[experiment]\ntrials = 0\n", "experiment.trials"),
            ("[model]\nmembers = 1\n", "model.members"),
            ("[dataset]\nsource = \"idx\"\n", "dataset.images"),
        ] {
            match parse_config_str(text) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
    }
}

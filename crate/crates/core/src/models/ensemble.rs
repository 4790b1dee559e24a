//! Deep ensembles as posterior samples.
//!
//! Each member is an independently initialized and shuffled [`Mlp`] trained
//! on the same data; member `s` supplies slice `s` of the
//! [`PredictiveSamples`] tensor.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mlp::{train_step, Dense, Mlp, StepParams, Velocity};
use crate::data::{check_dataset, LabeledExample};
use crate::error::{Error, Result};
use crate::predictive::PredictiveSamples;
use crate::rng::{child_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub hidden: Vec<usize>,
    pub members: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            members: 8,
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 200,
            batch_size: 32,
            weight_decay: 1e-4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: &str| {
            Err(Error::Config {
                field: format!("model.{field}"),
                message: message.into(),
            })
        };
        if self.members == 0 {
            return bad("members", "must be >= 1");
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden", "layer widths must be >= 1");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate", "must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", "must be in [0, 1)");
        }
        if self.epochs == 0 {
            return bad("epochs", "must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be >= 1");
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return bad("weight_decay", "must be >= 0");
        }
        Ok(())
    }
}

/// Training data in matrix form with per-example loss weights.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub x: Array2<f64>,
    pub targets: Array2<f64>,
    pub weights: Array1<f64>,
}

impl TrainingSet {
    pub fn from_examples(data: &[LabeledExample], classes: usize) -> Result<Self> {
        let dim = check_dataset(data, classes)?;
        let mut x = Array2::zeros((data.len(), dim));
        let mut targets = Array2::zeros((data.len(), classes));
        for (i, example) in data.iter().enumerate() {
            x.row_mut(i)
                .assign(&ndarray::ArrayView1::from(&example.x[..]));
            let probs = example.target.to_probs(classes)?;
            targets.row_mut(i).assign(&Array1::from(probs));
        }
        Ok(Self {
            x,
            targets,
            weights: Array1::ones(data.len()),
        })
    }

    /// Append examples with soft targets and a common loss weight.
    pub fn extend_soft(
        &mut self,
        xs: &[Vec<f64>],
        targets: &[Vec<f64>],
        weight: f64,
    ) -> Result<()> {
        for (x, t) in xs.iter().zip(targets) {
            if x.len() != self.x.ncols() || t.len() != self.targets.ncols() {
                return Err(Error::Shape("appended example has the wrong shape".into()));
            }
            self.x
                .push_row(ndarray::ArrayView1::from(&x[..]))
                .map_err(|e| Error::Shape(e.to_string()))?;
            self.targets
                .push_row(ndarray::ArrayView1::from(&t[..]))
                .map_err(|e| Error::Shape(e.to_string()))?;
        }
        let mut w = self.weights.to_vec();
        w.extend(std::iter::repeat_n(weight, xs.len()));
        self.weights = Array1::from(w);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorEnsemble {
    pub members: Vec<Mlp>,
    pub member_seeds: Vec<u64>,
    pub config: TrainConfig,
    pub classes: usize,
}

/// Train `config.members` networks on the examples (hard or soft targets).
pub fn train_ensemble(
    data: &[LabeledExample],
    classes: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<PosteriorEnsemble> {
    let set = TrainingSet::from_examples(data, classes)?;
    train_ensemble_on(&set, classes, config, seed)
}

pub fn train_ensemble_on(
    set: &TrainingSet,
    classes: usize,
    config: &TrainConfig,
    seed: u64,
) -> Result<PosteriorEnsemble> {
    config.validate()?;
    if set.is_empty() {
        return Err(Error::InsufficientData(
            "cannot train on an empty dataset".into(),
        ));
    }
    if classes < 2 || set.targets.ncols() != classes {
        return Err(Error::Shape(format!(
            "targets have {} columns for {classes} classes",
            set.targets.ncols()
        )));
    }
    let member_seeds: Vec<u64> = (0..config.members as u64)
        .map(|m| child_seed(seed, m))
        .collect();
    let members = member_seeds
        .par_iter()
        .map(|&s| train_member(set, classes, config, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorEnsemble {
        members,
        member_seeds,
        config: config.clone(),
        classes,
    })
}

fn train_member(set: &TrainingSet, classes: usize, config: &TrainConfig, seed: u64) -> Result<Mlp> {
    let mut rng = rng_from_seed(seed);
    let mut sizes = vec![set.x.ncols()];
    sizes.extend(&config.hidden);
    sizes.push(classes);
    let mut net = Mlp::init(&sizes, &mut rng);
    let mut velocity = Velocity::zeros(&net);
    let params = StepParams {
        learning_rate: config.learning_rate,
        momentum: config.momentum,
        weight_decay: config.weight_decay,
    };
    let mut order: Vec<usize> = (0..set.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let x = set.x.select(Axis(0), chunk);
            let t = set.targets.select(Axis(0), chunk);
            let w = set.weights.select(Axis(0), chunk);
            total += train_step(&mut net, &mut velocity, x.view(), t.view(), &w, &params)
                * chunk.len() as f64;
        }
        let loss = total / set.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                seed,
                epoch,
                loss,
                config: format!("{config:?}"),
            });
        }
    }
    Ok(net)
}

pub(crate) fn stack_features(xs: &[Vec<f64>], dim: usize) -> Result<Array2<f64>> {
    let mut x = Array2::zeros((xs.len(), dim));
    for (i, row) in xs.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Shape(format!(
                "input {i} has {} features, model expects {dim}",
                row.len()
            )));
        }
        x.row_mut(i).assign(&ndarray::ArrayView1::from(&row[..]));
    }
    Ok(x)
}

impl PosteriorEnsemble {
    pub fn input_dim(&self) -> usize {
        self.members[0].input_dim()
    }

    /// One predictive slice per member.
    pub fn predict_samples(&self, xs: &[Vec<f64>]) -> Result<PredictiveSamples> {
        if xs.is_empty() {
            return PredictiveSamples::empty(self.members.len(), self.classes);
        }
        let x = stack_features(xs, self.input_dim())?;
        let slices: Vec<Array2<f64>> = self
            .members
            .par_iter()
            .map(|m| m.predict_proba(x.view()))
            .collect();
        let mut probs = Vec::with_capacity(slices.len() * xs.len() * self.classes);
        for slice in &slices {
            probs.extend(slice.iter());
        }
        PredictiveSamples::new(self.members.len(), xs.len(), self.classes, probs)
    }

    /// Top-1 accuracy of the mean predictive on hard-labeled examples.
    pub fn accuracy(&self, data: &[LabeledExample]) -> Result<f64> {
        let labeled: Vec<&LabeledExample> =
            data.iter().filter(|e| e.target.hard().is_some()).collect();
        if labeled.is_empty() {
            return Ok(0.0);
        }
        let xs: Vec<Vec<f64>> = labeled.iter().map(|e| e.x.clone()).collect();
        let ps = self.predict_samples(&xs)?;
        let correct = labeled
            .iter()
            .enumerate()
            .filter(|(n, e)| {
                let mean = ps.mean_row(*n);
                let pred = crate::info::argmax_lowest(mean.into_iter().enumerate()).map(|(c, _)| c);
                pred == e.target.hard()
            })
            .count();
        Ok(correct as f64 / labeled.len() as f64)
    }

    /// Write a versioned text checkpoint. Parameters are stored as the hex
    /// bit patterns of their `f64` values, so loading is bit-exact.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::new();
        let c = &self.config;
        writeln!(s, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}").unwrap();
        writeln!(s, "classes {}", self.classes).unwrap();
        writeln!(
            s,
            "config {} {} {} {} {} {} {}",
            join_usize(&c.hidden),
            c.members,
            hex_f64(c.learning_rate),
            hex_f64(c.momentum),
            c.epochs,
            c.batch_size,
            hex_f64(c.weight_decay)
        )
        .unwrap();
        writeln!(s, "members {}", self.members.len()).unwrap();
        for (net, seed) in self.members.iter().zip(&self.member_seeds) {
            writeln!(s, "member {seed} {}", net.layers.len()).unwrap();
            for layer in &net.layers {
                let (rows, cols) = layer.weights.dim();
                writeln!(s, "layer {rows} {cols}").unwrap();
                writeln!(s, "{}", join_hex(layer.weights.iter())).unwrap();
                writeln!(s, "{}", join_hex(layer.bias.iter())).unwrap();
            }
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = move || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Checkpoint("unexpected end of file".into()))?
                .map_err(Error::from)
        };
        let header = next()?;
        if header != format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}") {
            return Err(Error::Checkpoint(format!("unsupported header `{header}`")));
        }
        let classes = keyed(&next()?, "classes")?[0].parse().map_err(bad_number)?;
        let cfg = keyed(&next()?, "config")?;
        if cfg.len() != 7 {
            return Err(Error::Checkpoint("malformed config line".into()));
        }
        let hidden = if cfg[0] == "-" {
            Vec::new()
        } else {
            cfg[0]
                .split(',')
                .map(|v| v.parse().map_err(bad_number))
                .collect::<Result<Vec<usize>>>()?
        };
        let config = TrainConfig {
            hidden,
            members: cfg[1].parse().map_err(bad_number)?,
            learning_rate: parse_hex(&cfg[2])?,
            momentum: parse_hex(&cfg[3])?,
            epochs: cfg[4].parse().map_err(bad_number)?,
            batch_size: cfg[5].parse().map_err(bad_number)?,
            weight_decay: parse_hex(&cfg[6])?,
        };
        let count: usize = keyed(&next()?, "members")?[0].parse().map_err(bad_number)?;
        let mut members = Vec::with_capacity(count);
        let mut member_seeds = Vec::with_capacity(count);
        for _ in 0..count {
            let head = keyed(&next()?, "member")?;
            member_seeds.push(head[0].parse().map_err(bad_number)?);
            let layer_count: usize = head[1].parse().map_err(bad_number)?;
            let mut layers = Vec::with_capacity(layer_count);
            for _ in 0..layer_count {
                let dims = keyed(&next()?, "layer")?;
                let rows: usize = dims[0].parse().map_err(bad_number)?;
                let cols: usize = dims[1].parse().map_err(bad_number)?;
                let weights = parse_hex_line(&next()?, rows * cols)?;
                let bias = parse_hex_line(&next()?, cols)?;
                layers.push(Dense {
                    weights: Array2::from_shape_vec((rows, cols), weights)
                        .map_err(|e| Error::Checkpoint(e.to_string()))?,
                    bias: Array1::from(bias),
                });
            }
            members.push(Mlp { layers });
        }
        if members.is_empty() {
            return Err(Error::Checkpoint("checkpoint has no members".into()));
        }
        Ok(Self {
            members,
            member_seeds,
            config,
            classes,
        })
    }
}

const CHECKPOINT_MAGIC: &str = "epig-ensemble";
const CHECKPOINT_VERSION: u32 = 1;

fn hex_f64(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn join_hex<'a>(values: impl Iterator<Item = &'a f64>) -> String {
    values.map(|&v| hex_f64(v)).collect::<Vec<_>>().join(" ")
}

fn join_usize(values: &[usize]) -> String {
    if values.is_empty() {
        return "-".into();
    }
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_hex(token: &str) -> Result<f64> {
    u64::from_str_radix(token, 16)
        .map(f64::from_bits)
        .map_err(|e| Error::Checkpoint(format!("bad parameter `{token}`: {e}")))
}

fn parse_hex_line(line: &str, expected: usize) -> Result<Vec<f64>> {
    let values = line
        .split_whitespace()
        .map(parse_hex)
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expected {
        return Err(Error::Checkpoint(format!(
            "expected {expected} parameters, found {}",
            values.len()
        )));
    }
    Ok(values)
}

fn keyed(line: &str, key: &str) -> Result<Vec<String>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(Error::Checkpoint(format!(
            "expected `{key}` line, got `{line}`"
        )));
    }
    let rest: Vec<String> = parts.map(str::to_string).collect();
    if rest.is_empty() {
        return Err(Error::Checkpoint(format!("`{key}` line has no values")));
    }
    Ok(rest)
}

fn bad_number(e: std::num::ParseIntError) -> Error {
    Error::Checkpoint(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::bald_scores;

    fn small_config() -> TrainConfig {
        TrainConfig {
            hidden: vec![16],
            members: 3,
            epochs: 60,
            ..TrainConfig::default()
        }
    }

    fn blobs() -> Vec<LabeledExample> {
        let mut rng = rng_from_seed(5);
        use rand_distr::{Distribution, Normal};
        let noise = Normal::new(0.0, 0.5).unwrap();
        (0..80)
            .map(|i| {
                let class = i % 2;
                let centre = if class == 0 { -3.0 } else { 3.0 };
                LabeledExample::hard(
                    vec![centre + noise.sample(&mut rng), noise.sample(&mut rng)],
                    class,
                )
            })
            .collect()
    }

    #[test]
    fn separable_blobs_are_learned() {
        let data = blobs();
        let ens = train_ensemble(&data, 2, &TrainConfig::default(), 1).unwrap();
        assert!(ens.accuracy(&data).unwrap() >= 0.99);
    }

    #[test]
    fn single_example_is_memorized() {
        let data = vec![LabeledExample::hard(vec![0.5, -1.0], 1)];
        let ens = train_ensemble(&data, 2, &small_config(), 2).unwrap();
        let ps = ens.predict_samples(&[data[0].x.clone()]).unwrap();
        for s in 0..ps.samples() {
            assert!(ps.row(s, 0)[1] > 0.9);
        }
    }

    #[test]
    fn uniform_soft_targets_give_high_entropy() {
        let data: Vec<LabeledExample> = blobs()
            .into_iter()
            .map(|e| LabeledExample::soft(e.x, vec![0.5, 0.5]))
            .collect();
        let ens = train_ensemble(&data, 2, &small_config(), 3).unwrap();
        let xs: Vec<Vec<f64>> = data.iter().map(|e| e.x.clone()).collect();
        let ps = ens.predict_samples(&xs).unwrap();
        let mean_entropy: f64 =
            crate::info::predictive_entropies(&ps).iter().sum::<f64>() / xs.len() as f64;
        assert!(mean_entropy >= 0.6, "{mean_entropy}");
    }

    #[test]
    fn identical_members_have_zero_bald() {
        let data = blobs();
        let single = TrainConfig {
            members: 1,
            ..small_config()
        };
        let ens = train_ensemble(&data, 2, &single, 9).unwrap();
        let twin = PosteriorEnsemble {
            members: vec![ens.members[0].clone(), ens.members[0].clone()],
            member_seeds: vec![ens.member_seeds[0]; 2],
            config: ens.config.clone(),
            classes: 2,
        };
        let xs: Vec<Vec<f64>> = data.iter().map(|e| e.x.clone()).collect();
        let ps = twin.predict_samples(&xs).unwrap();
        assert!(bald_scores(&ps).iter().all(|&b| b == 0.0));
    }

    #[test]
    fn empty_prediction_and_dimension_mismatch() {
        let ens = train_ensemble(&blobs(), 2, &small_config(), 4).unwrap();
        let empty = ens.predict_samples(&[]).unwrap();
        assert_eq!(
            (empty.samples(), empty.inputs(), empty.classes()),
            (3, 0, 2)
        );
        assert!(matches!(
            ens.predict_samples(&[vec![1.0]]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let a = train_ensemble(&blobs(), 2, &small_config(), 11).unwrap();
        let b = train_ensemble(&blobs(), 2, &small_config(), 11).unwrap();
        assert_eq!(a, b);
        let c = train_ensemble(&blobs(), 2, &small_config(), 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn divergence_is_reported() {
        let config = TrainConfig {
            learning_rate: 1e200,
            ..small_config()
        };
        let err = train_ensemble(&blobs(), 2, &config, 1).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let ens = train_ensemble(&blobs(), 2, &small_config(), 6).unwrap();
        let mut buf = Vec::new();
        ens.save(&mut buf).unwrap();
        let loaded = PosteriorEnsemble::load(&buf[..]).unwrap();
        assert_eq!(loaded, ens);
        let mut again = Vec::new();
        loaded.save(&mut again).unwrap();
        assert_eq!(buf, again);
        assert!(PosteriorEnsemble::load(&b"epig-ensemble 2\n"[..]).is_err());
        assert!(PosteriorEnsemble::load(&buf[..buf.len() / 2]).is_err());
    }
}

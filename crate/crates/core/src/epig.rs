//! EPIG and EPIG-BALD acquisition.
//!
//! EPIG-BALD scores a candidate `x` as the BALD score under the current
//! posterior minus the expected BALD score under the posterior that has also
//! seen pseudo-labels on the evaluation set:
//!
//! ```text
//! score(x) = I[Y; Omega | x, D] - E_{y_eval} I[Y; Omega | x, y_eval, x_eval, D]
//! ```
//!
//! The conditioned posterior is approximated either by self-distillation (one
//! student ensemble trained on the teacher's soft predictions over the
//! evaluation inputs) or by an ensemble of students, one per jointly sampled
//! pseudo-label set. On [`DiscreteBayesModel`] everything is exact and the
//! three algebraic forms of EPIG are available for cross-checking.

use rayon::prelude::*;

use crate::data::{AcquisitionResult, LabeledExample};
use crate::error::{Error, Result};
use crate::info::{
    bald_scores, configuration_count, draw_class, draw_sample, entropy_of, greedy_batchbald,
    greedy_incremental, predictive_entropies, topk_select, JointMode,
};
use crate::models::discrete::DiscreteBayesModel;
use crate::models::ensemble::{train_ensemble_on, PosteriorEnsemble, TrainConfig, TrainingSet};
use crate::predictive::PredictiveSamples;
use crate::rng::{child_seed, rng_from_seed};

pub const DEFAULT_PSEUDO_LABEL_SETS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabelSet {
    pub labels: Vec<usize>,
    pub source_sample: usize,
    pub seed: u64,
}

/// Draw `count` jointly consistent pseudo-label sets: each set first draws a
/// posterior sample, then labels every evaluation input from that sample.
pub fn sample_pseudo_label_sets(
    eval_preds: &PredictiveSamples,
    count: usize,
    seed: u64,
) -> Vec<PseudoLabelSet> {
    (0..count as u64)
        .map(|j| {
            let set_seed = child_seed(seed, j);
            let mut rng = rng_from_seed(set_seed);
            let s = draw_sample(&mut rng, eval_preds);
            let labels = (0..eval_preds.inputs())
                .map(|n| draw_class(&mut rng, eval_preds.row(s, n)))
                .collect();
            PseudoLabelSet {
                labels,
                source_sample: s,
                seed: set_seed,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditioningKind {
    /// One student distilled from the teacher's mean predictive on `eval_x`.
    Distilled,
    /// One student per pseudo-label set.
    PseudoEnsemble { sets: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedPosterior {
    pub kind: ConditioningKind,
    pub students: Vec<PosteriorEnsemble>,
    pub pseudo_labels: Vec<PseudoLabelSet>,
}

impl ConditionedPosterior {
    /// Predictions of every student on `xs`.
    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<Vec<PredictiveSamples>> {
        self.students
            .iter()
            .map(|s| s.predict_samples(xs))
            .collect()
    }
}

/// Approximate `p(omega | y_eval, x_eval, D_train)` with student ensembles.
///
/// `eval_weight` scales the loss on evaluation inputs relative to training
/// examples. With no evaluation inputs the student is the teacher recipe
/// retrained on `train` with a fresh seed.
#[allow(clippy::too_many_arguments)]
pub fn condition_posterior(
    teacher: &PosteriorEnsemble,
    train: &[LabeledExample],
    eval_x: &[Vec<f64>],
    kind: ConditioningKind,
    config: &TrainConfig,
    eval_weight: f64,
    seed: u64,
) -> Result<ConditionedPosterior> {
    let classes = teacher.classes;
    let base = TrainingSet::from_examples(train, classes)?;
    if eval_x.is_empty() {
        let students = match kind {
            ConditioningKind::Distilled => 1,
            ConditioningKind::PseudoEnsemble { sets } => sets.max(1),
        };
        let students = (0..students as u64)
            .map(|j| train_ensemble_on(&base, classes, config, child_seed(seed, j)))
            .collect::<Result<Vec<_>>>()?;
        return Ok(ConditionedPosterior {
            kind,
            students,
            pseudo_labels: Vec::new(),
        });
    }
    let eval_preds = teacher.predict_samples(eval_x)?;
    match kind {
        ConditioningKind::Distilled => {
            let mut set = base;
            set.extend_soft(eval_x, &eval_preds.mean_rows(), eval_weight)?;
            let student = train_ensemble_on(&set, classes, config, child_seed(seed, 0))?;
            Ok(ConditionedPosterior {
                kind,
                students: vec![student],
                pseudo_labels: Vec::new(),
            })
        }
        ConditioningKind::PseudoEnsemble { sets } => {
            if sets == 0 {
                return Err(Error::InvalidArgument(
                    "pseudo-label ensemble needs at least one set".into(),
                ));
            }
            let pseudo = sample_pseudo_label_sets(&eval_preds, sets, child_seed(seed, u64::MAX));
            let students = pseudo
                .par_iter()
                .enumerate()
                .map(|(j, labels)| {
                    let one_hot: Vec<Vec<f64>> = labels
                        .labels
                        .iter()
                        .map(|&y| {
                            let mut v = vec![0.0; classes];
                            v[y] = 1.0;
                            v
                        })
                        .collect();
                    let mut set = base.clone();
                    set.extend_soft(eval_x, &one_hot, eval_weight)?;
                    train_ensemble_on(&set, classes, config, child_seed(seed, j as u64))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ConditionedPosterior {
                kind,
                students,
                pseudo_labels: pseudo,
            })
        }
    }
}

/// Per-candidate EPIG-BALD scores with their two BALD terms.
#[derive(Debug, Clone, PartialEq)]
pub struct EpigScores {
    pub scores: Vec<f64>,
    pub bald: Vec<f64>,
    pub conditional_bald: Vec<f64>,
}

fn check_conditioned(
    teacher: &PredictiveSamples,
    conditioned: &[PredictiveSamples],
    weights: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if conditioned.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one conditioned prediction tensor".into(),
        ));
    }
    for c in conditioned {
        if c.inputs() != teacher.inputs() || c.classes() != teacher.classes() {
            return Err(Error::Shape(format!(
                "conditioned tensor covers {}x{} but teacher covers {}x{}",
                c.inputs(),
                c.classes(),
                teacher.inputs(),
                teacher.classes()
            )));
        }
    }
    match weights {
        None => Ok(vec![1.0 / conditioned.len() as f64; conditioned.len()]),
        Some(w) if w.len() == conditioned.len() => Ok(w.to_vec()),
        Some(_) => Err(Error::Shape("one weight per conditioned tensor".into())),
    }
}

/// EPIG-BALD: teacher BALD minus the (uniformly averaged) conditioned BALD.
pub fn epig_bald_scores(
    teacher: &PredictiveSamples,
    conditioned: &[PredictiveSamples],
) -> Result<EpigScores> {
    epig_bald_scores_weighted(teacher, conditioned, None)
}

/// EPIG-BALD with explicit weights over the conditioned tensors (for exact
/// expectations over pseudo-label configurations).
pub fn epig_bald_scores_weighted(
    teacher: &PredictiveSamples,
    conditioned: &[PredictiveSamples],
    weights: Option<&[f64]>,
) -> Result<EpigScores> {
    let weights = check_conditioned(teacher, conditioned, weights)?;
    let bald = bald_scores(teacher);
    let mut conditional_bald = vec![0.0; teacher.inputs()];
    for (c, w) in conditioned.iter().zip(&weights) {
        for (acc, v) in conditional_bald.iter_mut().zip(bald_scores(c)) {
            *acc += w * v;
        }
    }
    let scores = bald
        .iter()
        .zip(&conditional_bald)
        .map(|(b, c)| b - c)
        .collect();
    Ok(EpigScores {
        scores,
        bald,
        conditional_bald,
    })
}

/// The entropy form of EPIG: predictive entropy under the teacher minus the
/// (averaged) predictive entropy under the conditioned posteriors.
pub fn epig_entropy_scores(
    teacher: &PredictiveSamples,
    conditioned: &[PredictiveSamples],
) -> Result<Vec<f64>> {
    epig_entropy_scores_weighted(teacher, conditioned, None)
}

pub fn epig_entropy_scores_weighted(
    teacher: &PredictiveSamples,
    conditioned: &[PredictiveSamples],
    weights: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let weights = check_conditioned(teacher, conditioned, weights)?;
    let mut scores = predictive_entropies(teacher);
    for (c, w) in conditioned.iter().zip(&weights) {
        for (acc, h) in scores.iter_mut().zip(predictive_entropies(c)) {
            *acc -= w * h;
        }
    }
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpigBatchMode {
    TopK,
    GreedyJoint,
}

/// Select a batch by EPIG-BALD.
///
/// `TopK` ranks candidates by their individual scores. `GreedyJoint` greedily
/// maximizes `BatchBALD_teacher(batch) - mean_j BatchBALD_j(batch)` with one
/// conditioned posterior reused for every candidate.
pub fn epig_greedy_batch(
    teacher: &PredictiveSamples,
    conditioned: &[PredictiveSamples],
    b: usize,
    mode: EpigBatchMode,
    joint_mode: JointMode,
) -> Result<AcquisitionResult> {
    let scores = epig_bald_scores(teacher, conditioned)?;
    if b > teacher.inputs() {
        return Err(Error::BatchTooLarge {
            requested: b,
            available: teacher.inputs(),
        });
    }
    let decomposition = Some(
        scores
            .bald
            .iter()
            .cloned()
            .zip(scores.conditional_bald.iter().cloned())
            .collect(),
    );
    let mut result = match mode {
        EpigBatchMode::TopK => {
            let mut r = topk_select(&scores.scores, b)?;
            r.method = "epig_bald_topk".into();
            r
        }
        EpigBatchMode::GreedyJoint => {
            let cap = match joint_mode {
                JointMode::Exact { cap } | JointMode::Auto { cap, .. } => cap,
                JointMode::MonteCarlo { .. } => 0,
            };
            let mut r = if configuration_count(teacher.classes(), b) <= cap as f64 {
                let weight = 1.0 / conditioned.len() as f64;
                let negative: Vec<(f64, &PredictiveSamples)> =
                    conditioned.iter().map(|c| (weight, c)).collect();
                greedy_incremental(&[(1.0, teacher)], &negative, teacher.inputs(), b)?
            } else {
                let mut calls = 0u64;
                crate::info::greedy_select(
                    |batch| {
                        calls += 1;
                        let mode = reseeded(joint_mode, calls);
                        let t = crate::info::batchbald_score(teacher, batch, mode)?;
                        let mut c = 0.0;
                        for cond in conditioned {
                            c += crate::info::batchbald_score(cond, batch, mode)?;
                        }
                        Ok(t - c / conditioned.len() as f64)
                    },
                    teacher.inputs(),
                    b,
                )?
            };
            r.method = "epig_bald_greedy".into();
            r
        }
    };
    result.decomposition = decomposition;
    if mode == EpigBatchMode::TopK {
        result.scores = scores.scores;
    }
    Ok(result)
}

fn reseeded(mode: JointMode, call: u64) -> JointMode {
    match mode {
        JointMode::MonteCarlo { samples, seed } => JointMode::MonteCarlo {
            samples,
            seed: child_seed(seed, call),
        },
        JointMode::Auto { cap, samples, seed } => JointMode::Auto {
            cap,
            samples,
            seed: child_seed(seed, call),
        },
        exact => exact,
    }
}

/// Plain BALD/BatchBALD selection with the same entry point, for comparison.
pub fn batchbald_batch(
    teacher: &PredictiveSamples,
    b: usize,
    joint_mode: JointMode,
) -> Result<AcquisitionResult> {
    greedy_batchbald(teacher, b, joint_mode)
}

/// EPIG of a candidate batch computed three ways on the exact model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpigForms {
    /// `H[Y_eval] - E_{y} H[Y_eval | y]`
    pub eval_side: f64,
    /// `H[Y] - E_{y_eval} H[Y | y_eval]`
    pub candidate_side: f64,
    /// `I[Y; Omega] - E_{y_eval} I[Y; Omega | y_eval]`
    pub bald_difference: f64,
}

impl EpigForms {
    pub fn max_deviation(&self) -> f64 {
        let v = [self.eval_side, self.candidate_side, self.bald_difference];
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Mixture over hypotheses: `sum_k w_k table_k[config]`.
fn mixture(weights: &[f64], tables: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; tables[0].len()];
    for (w, t) in weights.iter().zip(tables) {
        for (o, v) in out.iter_mut().zip(t) {
            *o += w * v;
        }
    }
    out
}

/// Posterior after observing configuration `config` of the table.
fn updated(weights: &[f64], tables: &[Vec<f64>], config: usize) -> (f64, Vec<f64>) {
    let joint: Vec<f64> = weights
        .iter()
        .zip(tables)
        .map(|(w, t)| w * t[config])
        .collect();
    let evidence: f64 = joint.iter().sum();
    if evidence > 0.0 {
        (evidence, joint.into_iter().map(|v| v / evidence).collect())
    } else {
        (0.0, weights.to_vec())
    }
}

/// `I[Y_config; Omega]` for a per-hypothesis configuration table.
fn joint_bald(weights: &[f64], tables: &[Vec<f64>]) -> f64 {
    let marginal = entropy_of(&mixture(weights, tables));
    let conditional: f64 = weights
        .iter()
        .zip(tables)
        .map(|(w, t)| w * entropy_of(t))
        .sum();
    marginal - conditional
}

/// `H[A] - E_{b} H[A | b]` with exact Bayes updates on `b`.
fn entropy_reduction(weights: &[f64], a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let prior = entropy_of(&mixture(weights, a));
    let expected: f64 = (0..b[0].len())
        .map(|config| {
            let (p, w) = updated(weights, b, config);
            if p > 0.0 {
                p * entropy_of(&mixture(&w, a))
            } else {
                0.0
            }
        })
        .sum();
    prior - expected
}

/// `I[Y_a; Omega] - E_{b} I[Y_a; Omega | b]`.
fn bald_reduction(weights: &[f64], a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let prior = joint_bald(weights, a);
    let expected: f64 = (0..b[0].len())
        .map(|config| {
            let (p, w) = updated(weights, b, config);
            if p > 0.0 {
                p * joint_bald(&w, a)
            } else {
                0.0
            }
        })
        .sum();
    prior - expected
}

/// Exact EPIG `I[Y_eval; Y_batch | x_eval, x_batch, D]` of a candidate batch in
/// all three forms, by enumerating every label configuration.
pub fn exact_epig_batch_forms(
    model: &DiscreteBayesModel,
    eval_x: &[Vec<f64>],
    batch_x: &[Vec<f64>],
    cap: usize,
) -> Result<EpigForms> {
    if eval_x.is_empty() || batch_x.is_empty() {
        return Ok(EpigForms {
            eval_side: 0.0,
            candidate_side: 0.0,
            bald_difference: 0.0,
        });
    }
    let weights = model.posterior();
    let eval = model.configuration_likelihoods(eval_x, cap)?;
    let batch = model.configuration_likelihoods(batch_x, cap)?;
    Ok(EpigForms {
        eval_side: entropy_reduction(&weights, &eval, &batch),
        candidate_side: entropy_reduction(&weights, &batch, &eval),
        bald_difference: bald_reduction(&weights, &batch, &eval),
    })
}

/// Exact EPIG of a single candidate in all three forms.
pub fn exact_epig_all_forms(
    model: &DiscreteBayesModel,
    eval_x: &[Vec<f64>],
    candidate_x: &[f64],
) -> Result<EpigForms> {
    exact_epig_batch_forms(
        model,
        eval_x,
        &[candidate_x.to_vec()],
        crate::models::discrete::DEFAULT_ENUMERATION_CAP,
    )
}

/// Exact conditioned predictions for the discrete model: one weighted tensor
/// over `candidates` per evaluation-label configuration, with the
/// configuration probabilities as weights.
pub fn exact_conditioned_predictions(
    model: &DiscreteBayesModel,
    eval_x: &[Vec<f64>],
    candidates: &[Vec<f64>],
    cap: usize,
) -> Result<(Vec<PredictiveSamples>, Vec<f64>)> {
    if eval_x.is_empty() {
        return Ok((vec![model.predict(candidates)?], vec![1.0]));
    }
    let weights = model.posterior();
    let eval = model.configuration_likelihoods(eval_x, cap)?;
    let table = model.hypothesis_predictions(candidates)?;
    let base = PredictiveSamples::from_nested(&table)?;
    let mut tensors = Vec::new();
    let mut probs = Vec::new();
    for config in 0..eval[0].len() {
        let (p, w) = updated(&weights, &eval, config);
        if p > 0.0 {
            tensors.push(base.clone().with_weights(w)?);
            probs.push(p);
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok((tensors, probs))
}

/// Conditioned predictions for the discrete model from sampled pseudo-label
/// sets, each followed by an exact Bayes update. Used when the evaluation set
/// is too large to enumerate.
pub fn sampled_conditioned_predictions(
    model: &DiscreteBayesModel,
    eval_x: &[Vec<f64>],
    candidates: &[Vec<f64>],
    sets: usize,
    seed: u64,
) -> Result<Vec<PredictiveSamples>> {
    if eval_x.is_empty() {
        return Ok(vec![model.predict(candidates)?]);
    }
    let eval_preds = model.predict(eval_x)?;
    sample_pseudo_label_sets(&eval_preds, sets, seed)
        .into_iter()
        .map(|set| {
            let data: Vec<LabeledExample> = eval_x
                .iter()
                .zip(&set.labels)
                .map(|(x, &y)| LabeledExample::hard(x.clone(), y))
                .collect();
            model.condition(&data)?.predict(candidates)
        })
        .collect()
}

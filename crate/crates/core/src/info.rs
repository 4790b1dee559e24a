//! Entropy, BALD, BatchBALD and batch-selection strategies.
//!
//! All quantities are in nats. Sample weights on [`PredictiveSamples`] are
//! honored everywhere: the marginal predictive is `sum_s w_s p_s`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::data::AcquisitionResult;
use crate::error::{Error, Result};
use crate::predictive::{PredictiveSamples, NORMALIZATION_TOLERANCE};
use crate::rng::rng_from_seed;

pub const DEFAULT_JOINT_CAP: usize = 1_000_000;
pub const DEFAULT_MC_SAMPLES: usize = 10_000;
pub const DEFAULT_SOFTMAX_TEMPERATURE: f64 = 8.0;

/// `-sum p ln p` with `0 ln 0 = 0`. No validation.
#[inline]
pub(crate) fn entropy_of(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

/// Shannon entropy of a categorical distribution, in nats.
pub fn entropy(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty distribution".into()));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidDistribution(
            "entries must be finite and non-negative".into(),
        ));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("sums to {sum}")));
    }
    Ok(entropy_of(p))
}

/// Posterior-weighted expected entropy `sum_s w_s H[p_s(.|x_n)]`.
pub(crate) fn expected_entropy(ps: &PredictiveSamples, n: usize) -> f64 {
    (0..ps.samples())
        .map(|s| ps.weight(s) * entropy_of(ps.row(s, n)))
        .sum()
}

/// BALD score of one input: `H[mean_s p_s] - mean_s H[p_s]`.
pub fn bald_score(ps: &PredictiveSamples, n: usize) -> f64 {
    entropy_of(&ps.mean_row(n)) - expected_entropy(ps, n)
}

/// BALD scores for every input of the tensor.
pub fn bald_scores(ps: &PredictiveSamples) -> Vec<f64> {
    (0..ps.inputs())
        .into_par_iter()
        .map(|n| bald_score(ps, n))
        .collect()
}

/// Entropy of the mean predictive for every input.
pub fn predictive_entropies(ps: &PredictiveSamples) -> Vec<f64> {
    (0..ps.inputs())
        .into_par_iter()
        .map(|n| entropy_of(&ps.mean_row(n)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointMode {
    /// Enumerate all `C^b` configurations; error past `cap`.
    Exact { cap: usize },
    /// Sample `samples` configurations.
    MonteCarlo { samples: usize, seed: u64 },
    /// Exact up to `cap`, otherwise Monte Carlo with a logged warning.
    Auto {
        cap: usize,
        samples: usize,
        seed: u64,
    },
}

impl JointMode {
    pub fn exact() -> Self {
        JointMode::Exact {
            cap: DEFAULT_JOINT_CAP,
        }
    }
}

impl Default for JointMode {
    fn default() -> Self {
        JointMode::Auto {
            cap: DEFAULT_JOINT_CAP,
            samples: DEFAULT_MC_SAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum JointDistribution {
    /// Full table in odometer order (last batch index fastest).
    Exact(Vec<f64>),
    /// Distinct sampled configurations with their empirical weights and
    /// their exact model probabilities.
    Sampled {
        configurations: Vec<Vec<usize>>,
        weights: Vec<f64>,
        model_probs: Vec<f64>,
        draws: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointPredictive {
    pub batch: Vec<usize>,
    pub classes: usize,
    pub dist: JointDistribution,
}

impl JointPredictive {
    /// Probability of a configuration under the exact table (exact mode only).
    pub fn exact_prob(&self, configuration: &[usize]) -> Option<f64> {
        match &self.dist {
            JointDistribution::Exact(table) => {
                let idx = configuration
                    .iter()
                    .fold(0usize, |acc, &y| acc * self.classes + y);
                table.get(idx).copied()
            }
            JointDistribution::Sampled { .. } => None,
        }
    }
}

pub(crate) fn configuration_count(classes: usize, len: usize) -> f64 {
    (classes as f64).powi(len as i32)
}

fn check_batch(ps: &PredictiveSamples, batch: &[usize]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut seen = vec![false; ps.inputs()];
    for &i in batch {
        if i >= ps.inputs() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: ps.inputs(),
            });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    Ok(())
}

/// Per-sample product table `prod_i p_s(y_i | x_i)` over all configurations.
fn sample_product_table(ps: &PredictiveSamples, s: usize, batch: &[usize]) -> Vec<f64> {
    let c = ps.classes();
    let mut table = vec![1.0];
    for &i in batch {
        let row = ps.row(s, i);
        let mut next = Vec::with_capacity(table.len() * c);
        for &t in &table {
            next.extend(row.iter().map(|&p| t * p));
        }
        table = next;
    }
    table
}

fn exact_joint_table(ps: &PredictiveSamples, batch: &[usize]) -> Vec<f64> {
    let size = ps.classes().pow(batch.len() as u32);
    let mut joint = vec![0.0; size];
    for s in 0..ps.samples() {
        let w = ps.weight(s);
        for (j, p) in joint.iter_mut().zip(sample_product_table(ps, s, batch)) {
            *j += w * p;
        }
    }
    joint
}

/// Model probability of one configuration: `sum_s w_s prod_i p_s(y_i|x_i)`.
fn configuration_prob(ps: &PredictiveSamples, batch: &[usize], configuration: &[usize]) -> f64 {
    (0..ps.samples())
        .map(|s| {
            ps.weight(s)
                * batch
                    .iter()
                    .zip(configuration)
                    .map(|(&i, &y)| ps.row(s, i)[y])
                    .product::<f64>()
        })
        .sum()
}

fn draw_index<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding: fall back to the last index with positive mass
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// Draw a posterior sample index according to the sample weights.
pub(crate) fn draw_sample<R: Rng>(rng: &mut R, ps: &PredictiveSamples) -> usize {
    match ps.weights() {
        Some(w) => draw_index(rng, w),
        None => rng.random_range(0..ps.samples()),
    }
}

pub(crate) fn draw_class<R: Rng>(rng: &mut R, row: &[f64]) -> usize {
    draw_index(rng, row)
}

fn sampled_joint(
    ps: &PredictiveSamples,
    batch: &[usize],
    samples: usize,
    seed: u64,
) -> Result<JointDistribution> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "Monte-Carlo joint needs at least one sample".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for _ in 0..samples {
        let s = draw_sample(&mut rng, ps);
        let config: Vec<usize> = batch
            .iter()
            .map(|&i| draw_class(&mut rng, ps.row(s, i)))
            .collect();
        *counts.entry(config).or_default() += 1;
    }
    let mut configurations = Vec::with_capacity(counts.len());
    let mut weights = Vec::with_capacity(counts.len());
    let mut model_probs = Vec::with_capacity(counts.len());
    for (config, count) in counts {
        model_probs.push(configuration_prob(ps, batch, &config));
        weights.push(count as f64 / samples as f64);
        configurations.push(config);
    }
    Ok(JointDistribution::Sampled {
        configurations,
        weights,
        model_probs,
        draws: samples,
    })
}

/// Joint predictive `p(y_1..y_b) = sum_s w_s prod_i p_s(y_i | x_i)` over a batch.
pub fn joint_predictive(
    ps: &PredictiveSamples,
    batch: &[usize],
    mode: JointMode,
) -> Result<JointPredictive> {
    check_batch(ps, batch)?;
    let count = configuration_count(ps.classes(), batch.len());
    let dist = match mode {
        JointMode::Exact { cap } => {
            if count > cap as f64 {
                return Err(Error::CapExceeded {
                    configurations: count,
                    cap,
                });
            }
            JointDistribution::Exact(exact_joint_table(ps, batch))
        }
        JointMode::MonteCarlo { samples, seed } => sampled_joint(ps, batch, samples, seed)?,
        JointMode::Auto { cap, samples, seed } => {
            if count > cap as f64 {
                log::warn!(
                    "{count} joint configurations exceed cap {cap}; falling back to {samples} Monte-Carlo samples"
                );
                sampled_joint(ps, batch, samples, seed)?
            } else {
                JointDistribution::Exact(exact_joint_table(ps, batch))
            }
        }
    };
    Ok(JointPredictive {
        batch: batch.to_vec(),
        classes: ps.classes(),
        dist,
    })
}

/// Joint entropy in nats. Exact tables use the plug-in entropy; sampled
/// joints use `-(1/m) sum ln p(config)` with exact model probabilities,
/// which is unbiased for the joint entropy.
pub fn joint_entropy(jp: &JointPredictive) -> f64 {
    match &jp.dist {
        JointDistribution::Exact(table) => entropy_of(table),
        JointDistribution::Sampled {
            weights,
            model_probs,
            ..
        } => -weights
            .iter()
            .zip(model_probs)
            .map(|(w, p)| w * p.ln())
            .sum::<f64>(),
    }
}

/// Standard error of the sampled joint-entropy estimator (0 for exact tables).
pub fn joint_entropy_standard_error(jp: &JointPredictive) -> f64 {
    match &jp.dist {
        JointDistribution::Exact(_) => 0.0,
        JointDistribution::Sampled {
            weights,
            model_probs,
            draws,
            ..
        } => {
            let mean = joint_entropy(jp);
            let second: f64 = weights
                .iter()
                .zip(model_probs)
                .map(|(w, p)| w * p.ln() * p.ln())
                .sum();
            let m = *draws as f64;
            // unbiased sample variance of -ln p(config)
            let var = ((second - mean * mean) * m / (m - 1.0).max(1.0)).max(0.0);
            (var / m).sqrt()
        }
    }
}

/// BatchBALD: `H[Y_1..Y_b] - sum_i E_s H[Y_i | omega_s]`.
pub fn batchbald_score(ps: &PredictiveSamples, batch: &[usize], mode: JointMode) -> Result<f64> {
    let jp = joint_predictive(ps, batch, mode)?;
    let conditional: f64 = batch.iter().map(|&i| expected_entropy(ps, i)).sum();
    Ok(joint_entropy(&jp) - conditional)
}

/// Incrementally maintained exact joint for greedy BatchBALD.
pub(crate) struct IncrementalJoint<'a> {
    ps: &'a PredictiveSamples,
    /// Per-sample product tables for the current batch, `[s][config]`.
    tables: Vec<Vec<f64>>,
    conditional: f64,
    expected: Vec<f64>,
}

impl<'a> IncrementalJoint<'a> {
    pub(crate) fn new(ps: &'a PredictiveSamples) -> Self {
        let expected = (0..ps.inputs()).map(|n| expected_entropy(ps, n)).collect();
        Self {
            ps,
            tables: vec![vec![1.0]; ps.samples()],
            conditional: 0.0,
            expected,
        }
    }

    /// BatchBALD of the current batch extended by `n`.
    pub(crate) fn score_with(&self, n: usize) -> f64 {
        let c = self.ps.classes();
        let size = self.tables[0].len() * c;
        let mut joint = vec![0.0; size];
        for (s, table) in self.tables.iter().enumerate() {
            let w = self.ps.weight(s);
            let row = self.ps.row(s, n);
            for (k, &t) in table.iter().enumerate() {
                let wt = w * t;
                for (j, &p) in row.iter().enumerate() {
                    joint[k * c + j] += wt * p;
                }
            }
        }
        entropy_of(&joint) - (self.conditional + self.expected[n])
    }

    pub(crate) fn push(&mut self, n: usize) {
        let c = self.ps.classes();
        for (s, table) in self.tables.iter_mut().enumerate() {
            let row = self.ps.row(s, n);
            let mut next = Vec::with_capacity(table.len() * c);
            for &t in table.iter() {
                next.extend(row.iter().map(|&p| t * p));
            }
            *table = next;
        }
        self.conditional += self.expected[n];
    }

    pub(crate) fn next_size(&self) -> usize {
        self.tables[0].len() * self.ps.classes()
    }
}

/// Pick `argmax` with ties broken by the lowest index. NaN never wins.
pub(crate) fn argmax_lowest(
    values: impl IntoIterator<Item = (usize, f64)>,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ if v.is_nan() => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

/// Greedy maximization of a set function over `0..n`.
///
/// Each of the `b` rounds adds the index with the largest marginal gain
/// (ties to the lowest index). The empty set scores 0 and is never passed to
/// the scorer. `scores` holds the singleton values from the first round.
pub fn greedy_select<F>(mut scorer: F, n: usize, b: usize) -> Result<AcquisitionResult>
where
    F: FnMut(&[usize]) -> Result<f64>,
{
    if b == 0 {
        return Err(Error::InvalidArgument(
            "acquisition size must be >= 1".into(),
        ));
    }
    if b > n {
        return Err(Error::BatchTooLarge {
            requested: b,
            available: n,
        });
    }
    let mut selected: Vec<usize> = Vec::with_capacity(b);
    let mut in_batch = vec![false; n];
    let mut current = 0.0;
    let mut gains = Vec::with_capacity(b);
    let mut singletons = vec![f64::NAN; n];
    let mut candidate = Vec::with_capacity(b);
    for round in 0..b {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in (0..n).filter(|&i| !in_batch[i]) {
            candidate.clear();
            candidate.extend_from_slice(&selected);
            candidate.push(i);
            let value = scorer(&candidate)?;
            if round == 0 {
                singletons[i] = value;
            }
            let gain = value - current;
            match best {
                Some((_, g, _)) if !(gain > g) => {}
                _ if gain.is_nan() => {}
                _ => best = Some((i, gain, value)),
            }
        }
        let (i, gain, value) = best.ok_or_else(|| {
            Error::InvalidArgument("scorer returned NaN for every candidate".into())
        })?;
        selected.push(i);
        in_batch[i] = true;
        gains.push(gain);
        current = value;
    }
    Ok(AcquisitionResult {
        selected,
        scores: singletons,
        decomposition: None,
        gains,
        batch_score: Some(current),
        method: "greedy".into(),
    })
}

/// Greedy BatchBALD over every input of `ps`, using incremental exact joints
/// while they fit under `cap` and [`batchbald_score`] in `mode` otherwise.
pub fn greedy_batchbald(
    ps: &PredictiveSamples,
    b: usize,
    mode: JointMode,
) -> Result<AcquisitionResult> {
    let cap = match mode {
        JointMode::Exact { cap } | JointMode::Auto { cap, .. } => cap,
        JointMode::MonteCarlo { .. } => 0,
    };
    let exact_fits = configuration_count(ps.classes(), b) <= cap as f64;
    let mut result = if exact_fits {
        greedy_incremental(&[(1.0, ps)], &[], ps.inputs(), b)?
    } else {
        let mut calls = 0u64;
        greedy_select(
            |batch| {
                calls += 1;
                batchbald_score(ps, batch, reseed(mode, calls))
            },
            ps.inputs(),
            b,
        )?
    };
    result.method = "batchbald".into();
    Ok(result)
}

/// Fresh seed per Monte-Carlo evaluation.
fn reseed(mode: JointMode, call: u64) -> JointMode {
    match mode {
        JointMode::MonteCarlo { samples, seed } => JointMode::MonteCarlo {
            samples,
            seed: crate::rng::child_seed(seed, call),
        },
        JointMode::Auto { cap, samples, seed } => JointMode::Auto {
            cap,
            samples,
            seed: crate::rng::child_seed(seed, call),
        },
        exact => exact,
    }
}

/// Greedy on `sum_k a_k BatchBALD_k(batch) - sum_j c_j BatchBALD_j(batch)`
/// with incremental exact joints.
pub(crate) fn greedy_incremental(
    positive: &[(f64, &PredictiveSamples)],
    negative: &[(f64, &PredictiveSamples)],
    n: usize,
    b: usize,
) -> Result<AcquisitionResult> {
    if b == 0 {
        return Err(Error::InvalidArgument(
            "acquisition size must be >= 1".into(),
        ));
    }
    if b > n {
        return Err(Error::BatchTooLarge {
            requested: b,
            available: n,
        });
    }
    let mut pos: Vec<(f64, IncrementalJoint)> = positive
        .iter()
        .map(|&(a, ps)| (a, IncrementalJoint::new(ps)))
        .collect();
    let mut neg: Vec<(f64, IncrementalJoint)> = negative
        .iter()
        .map(|&(a, ps)| (a, IncrementalJoint::new(ps)))
        .collect();
    let mut selected = Vec::with_capacity(b);
    let mut in_batch = vec![false; n];
    let mut gains = Vec::with_capacity(b);
    let mut current = 0.0;
    let mut singletons = vec![f64::NAN; n];
    for round in 0..b {
        let values: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .filter(|&i| !in_batch[i])
            .map(|i| {
                let p: f64 = pos.iter().map(|(a, j)| a * j.score_with(i)).sum();
                let q: f64 = neg.iter().map(|(a, j)| a * j.score_with(i)).sum();
                (i, p - q)
            })
            .collect();
        if round == 0 {
            for &(i, v) in &values {
                singletons[i] = v;
            }
        }
        let (i, value) = argmax_lowest(values.iter().map(|&(i, v)| (i, v - current)))
            .map(|(i, g)| (i, g + current))
            .ok_or_else(|| Error::InvalidArgument("no finite candidate scores".into()))?;
        gains.push(value - current);
        current = value;
        selected.push(i);
        in_batch[i] = true;
        if round + 1 < b {
            for (_, j) in pos.iter_mut().chain(neg.iter_mut()) {
                if j.next_size() > DEFAULT_JOINT_CAP {
                    return Err(Error::CapExceeded {
                        configurations: j.next_size() as f64,
                        cap: DEFAULT_JOINT_CAP,
                    });
                }
                j.push(i);
            }
        }
    }
    Ok(AcquisitionResult {
        selected,
        scores: singletons,
        decomposition: None,
        gains,
        batch_score: Some(current),
        method: "greedy".into(),
    })
}

fn check_scores(scores: &[f64], b: usize) -> Result<()> {
    if b > scores.len() {
        return Err(Error::BatchTooLarge {
            requested: b,
            available: scores.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "score {i} is not finite: {}",
            scores[i]
        )));
    }
    Ok(())
}

/// Indices of the `b` largest scores in descending order, ties to the lowest index.
pub fn topk_select(scores: &[f64], b: usize) -> Result<AcquisitionResult> {
    check_scores(scores, b)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    order.truncate(b);
    Ok(AcquisitionResult::from_ranking(
        order,
        scores.to_vec(),
        "topk",
    ))
}

/// Stochastic acquisition: draw `b` indices without replacement with
/// probability proportional to `exp(temperature * score)`, renormalizing over
/// the remaining indices after each draw.
pub fn softmax_select(
    scores: &[f64],
    b: usize,
    temperature: f64,
    seed: u64,
) -> Result<AcquisitionResult> {
    check_scores(scores, b)?;
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut remaining: Vec<usize> = (0..scores.len()).collect();
    let mut selected = Vec::with_capacity(b);
    let mut weights = Vec::with_capacity(scores.len());
    for _ in 0..b {
        let max = remaining
            .iter()
            .map(|&i| scores[i])
            .fold(f64::NEG_INFINITY, f64::max);
        weights.clear();
        weights.extend(
            remaining
                .iter()
                .map(|&i| (temperature * (scores[i] - max)).exp()),
        );
        let total: f64 = weights.iter().sum();
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = remaining.len() - 1;
        for (k, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = k;
                break;
            }
        }
        selected.push(remaining.remove(pick));
    }
    Ok(AcquisitionResult::from_ranking(
        selected,
        scores.to_vec(),
        "softmax",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ps(nested: &[Vec<Vec<f64>>]) -> PredictiveSamples {
        PredictiveSamples::from_nested(nested).unwrap()
    }

    // -0.8 ln 0.8 - 0.2 ln 0.2, evaluated to 20 digits with mpmath
    const H_08: f64 = 0.500_402_423_538_187_9;
    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(entropy(&[0.5, 0.5]).unwrap(), LN2, epsilon = 1e-15);
        assert_eq!(entropy(&[1.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(entropy(&[0.8, 0.2]).unwrap(), H_08, epsilon = 1e-15);
        assert!(entropy(&[0.5, 0.6]).is_err());
        assert!(entropy(&[]).is_err());
    }

    #[test]
    fn bald_examples() {
        let disagree = ps(&[vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]]]);
        assert_abs_diff_eq!(bald_scores(&disagree)[0], LN2, epsilon = 1e-15);

        let same = ps(&vec![vec![vec![0.3, 0.7]]; 5]);
        assert_eq!(bald_scores(&same)[0], 0.0);

        let soft = ps(&[vec![vec![0.8, 0.2]], vec![vec![0.2, 0.8]]]);
        assert_abs_diff_eq!(bald_scores(&soft)[0], LN2 - H_08, epsilon = 1e-15);
        assert_abs_diff_eq!(bald_scores(&soft)[0], 0.192745, epsilon = 1e-6);
    }

    #[test]
    fn joint_of_one_is_mean_row() {
        let p = ps(&[vec![vec![0.8, 0.2]], vec![vec![0.4, 0.6]]]);
        let jp = joint_predictive(&p, &[0], JointMode::exact()).unwrap();
        assert_eq!(jp.dist, JointDistribution::Exact(p.mean_row(0)));
    }

    #[test]
    fn single_sample_joint_is_outer_product() {
        let p = ps(&[vec![vec![0.8, 0.2], vec![0.3, 0.7]]]);
        let jp = joint_predictive(&p, &[0, 1], JointMode::exact()).unwrap();
        let JointDistribution::Exact(t) = &jp.dist else {
            panic!()
        };
        let expect = [0.8 * 0.3, 0.8 * 0.7, 0.2 * 0.3, 0.2 * 0.7];
        for (a, b) in t.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(jp.exact_prob(&[1, 0]), Some(t[2]));
    }

    fn duplicated_extreme() -> PredictiveSamples {
        ps(&[
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            vec![vec![0.0, 1.0], vec![0.0, 1.0]],
        ])
    }

    #[test]
    fn duplicates_are_perfectly_correlated() {
        let jp = joint_predictive(&duplicated_extreme(), &[0, 1], JointMode::exact()).unwrap();
        assert_eq!(jp.dist, JointDistribution::Exact(vec![0.5, 0.0, 0.0, 0.5]));
        assert_abs_diff_eq!(joint_entropy(&jp), LN2, epsilon = 1e-15);
        let bb = batchbald_score(&duplicated_extreme(), &[0, 1], JointMode::exact()).unwrap();
        assert_abs_diff_eq!(bb, LN2, epsilon = 1e-15);
    }

    #[test]
    fn mc_joint_entropy_converges_on_duplicates() {
        let mode = JointMode::MonteCarlo {
            samples: 10_000,
            seed: 7,
        };
        let jp = joint_predictive(&duplicated_extreme(), &[0, 1], mode).unwrap();
        assert!((joint_entropy(&jp) - LN2).abs() < 0.02);
    }

    #[test]
    fn joint_errors() {
        let p = duplicated_extreme();
        assert!(matches!(
            joint_predictive(&p, &[], JointMode::exact()),
            Err(Error::EmptyBatch)
        ));
        assert!(matches!(
            joint_predictive(&p, &[0, 1], JointMode::Exact { cap: 3 }),
            Err(Error::CapExceeded { .. })
        ));
        let auto = JointMode::Auto {
            cap: 3,
            samples: 100,
            seed: 1,
        };
        let jp = joint_predictive(&p, &[0, 1], auto).unwrap();
        assert!(matches!(jp.dist, JointDistribution::Sampled { .. }));
    }

    #[test]
    fn batchbald_of_one_is_bald() {
        let p = ps(&[vec![vec![0.8, 0.2]], vec![vec![0.2, 0.8]]]);
        let bb = batchbald_score(&p, &[0], JointMode::exact()).unwrap();
        assert_abs_diff_eq!(bb, LN2 - H_08, epsilon = 1e-12);
        let same = ps(&vec![vec![vec![0.3, 0.7], vec![0.6, 0.4]]; 3]);
        assert_abs_diff_eq!(
            batchbald_score(&same, &[0, 1], JointMode::exact()).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn topk_examples() {
        assert_eq!(
            topk_select(&[0.1, 0.9, 0.5], 2).unwrap().selected,
            vec![1, 2]
        );
        assert_eq!(
            topk_select(&[0.3, 0.3, 0.3], 2).unwrap().selected,
            vec![0, 1]
        );
        assert_eq!(
            topk_select(&[0.1, 0.9, 0.5], 3).unwrap().selected,
            vec![1, 2, 0]
        );
        assert!(matches!(
            topk_select(&[0.1], 2),
            Err(Error::BatchTooLarge { .. })
        ));
        assert!(topk_select(&[f64::NAN, 0.1], 1).is_err());
    }

    #[test]
    fn softmax_large_temperature_is_topk() {
        let scores = [0.1, 0.9, 0.5, 0.7, 0.2];
        let soft = softmax_select(&scores, 3, 1e6, 3).unwrap();
        assert_eq!(soft.selected, topk_select(&scores, 3).unwrap().selected);
        assert!(softmax_select(&scores, 1, 0.0, 0).is_err());
        assert!(softmax_select(&[f64::INFINITY], 1, 1.0, 0).is_err());
    }

    #[test]
    fn softmax_is_deterministic_per_seed() {
        let scores = [0.1, 0.9, 0.5, 0.7, 0.2];
        let a = softmax_select(&scores, 3, 8.0, 11).unwrap();
        let b = softmax_select(&scores, 3, 8.0, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn greedy_modular_picks_topk() {
        let values = [0.3, 1.2, 0.7, 0.1, 0.9];
        let r = greedy_select(|s| Ok(s.iter().map(|&i| values[i]).sum()), 5, 3).unwrap();
        assert_eq!(r.selected, vec![1, 4, 2]);
        let all = greedy_select(|s| Ok(s.iter().map(|&i| values[i]).sum()), 5, 5).unwrap();
        assert_eq!(all.selected, vec![1, 4, 2, 0, 3]);
        assert!(matches!(
            greedy_select(|_| Ok(0.0), 2, 3),
            Err(Error::BatchTooLarge { .. })
        ));
    }

    #[test]
    fn greedy_batchbald_avoids_duplicates() {
        let p = ps(&[
            vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.9, 0.1]],
            vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![0.2, 0.8]],
        ]);
        let r = greedy_batchbald(&p, 2, JointMode::exact()).unwrap();
        assert_eq!(r.selected, vec![0, 2]);
        let topk = topk_select(&bald_scores(&p), 2).unwrap();
        assert_eq!(topk.selected, vec![0, 1]);
    }
}

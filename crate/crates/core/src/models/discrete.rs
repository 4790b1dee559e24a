//! Exact Bayesian inference over a finite set of hypotheses.
//!
//! Used as the enumeration oracle: every information quantity computed on
//! this model is exact up to floating-point rounding.

use crate::data::LabeledExample;
use crate::error::{Error, Result};
use crate::info::{configuration_count, joint_predictive, JointMode, JointPredictive};
use crate::predictive::PredictiveSamples;

/// Default cap on label configurations enumerated by the exact oracle.
pub const DEFAULT_ENUMERATION_CAP: usize = 4096;

/// A hypothesis `omega_k`: a map from features to a class distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum Likelihood {
    /// Binary logistic model, `p(y = 1 | x) = sigmoid(w . x + b)`.
    Logistic { weights: Vec<f64>, bias: f64 },
    /// Multiclass linear softmax, one weight row and bias per class.
    Softmax {
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
    },
}

impl Likelihood {
    pub fn classes(&self) -> usize {
        match self {
            Likelihood::Logistic { .. } => 2,
            Likelihood::Softmax { biases, .. } => biases.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Likelihood::Logistic { weights, .. } => weights.len(),
            Likelihood::Softmax { weights, .. } => weights.first().map_or(0, Vec::len),
        }
    }

    pub fn probs(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Likelihood::Logistic { weights, bias } => {
                let z = dot(weights, x) + bias;
                // evaluate both tails without cancellation
                let p1 = if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                };
                let p0 = if z >= 0.0 {
                    let e = (-z).exp();
                    e / (1.0 + e)
                } else {
                    1.0 / (1.0 + z.exp())
                };
                vec![p0, p1]
            }
            Likelihood::Softmax { weights, biases } => {
                let logits: Vec<f64> = weights
                    .iter()
                    .zip(biases)
                    .map(|(w, b)| dot(w, x) + b)
                    .collect();
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                exps.into_iter().map(|e| e / sum).collect()
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normalize log-weights with log-sum-exp.
fn normalize_log(log_w: &mut [f64]) -> Result<()> {
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateEvidence);
    }
    let lse = max + log_w.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    log_w.iter_mut().for_each(|v| *v -= lse);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBayesModel {
    hypotheses: Vec<Likelihood>,
    classes: usize,
    log_prior: Vec<f64>,
    log_posterior: Vec<f64>,
}

impl DiscreteBayesModel {
    /// A model with the given prior weights (uniform when `None`).
    pub fn new(hypotheses: Vec<Likelihood>, prior: Option<Vec<f64>>) -> Result<Self> {
        let first = hypotheses
            .first()
            .ok_or_else(|| Error::InvalidArgument("need at least one hypothesis".into()))?;
        let (classes, dim) = (first.classes(), first.dim());
        if classes < 2 {
            return Err(Error::Shape("hypotheses need at least two classes".into()));
        }
        if hypotheses
            .iter()
            .any(|h| h.classes() != classes || h.dim() != dim)
        {
            return Err(Error::Shape(
                "hypotheses disagree on classes or feature dimension".into(),
            ));
        }
        let k = hypotheses.len();
        let mut log_prior = match prior {
            None => vec![0.0; k],
            Some(p) => {
                if p.len() != k || p.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidDistribution(
                        "prior must have one non-negative weight per hypothesis".into(),
                    ));
                }
                p.iter().map(|v| v.ln()).collect()
            }
        };
        normalize_log(&mut log_prior)?;
        Ok(Self {
            hypotheses,
            classes,
            log_posterior: log_prior.clone(),
            log_prior,
        })
    }

    /// Logistic hypotheses on the Cartesian grid `weight_values^dim x bias_values`,
    /// uniform prior.
    pub fn logistic_grid(dim: usize, weight_values: &[f64], bias_values: &[f64]) -> Result<Self> {
        let mut grids: Vec<Vec<f64>> = vec![Vec::new()];
        for _ in 0..dim {
            grids = grids
                .into_iter()
                .flat_map(|g| {
                    weight_values.iter().map(move |&w| {
                        let mut next = g.clone();
                        next.push(w);
                        next
                    })
                })
                .collect();
        }
        let hypotheses = grids
            .into_iter()
            .flat_map(|w| {
                bias_values.iter().map(move |&b| Likelihood::Logistic {
                    weights: w.clone(),
                    bias: b,
                })
            })
            .collect();
        Self::new(hypotheses, None)
    }

    pub fn hypotheses(&self) -> &[Likelihood] {
        &self.hypotheses
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn dim(&self) -> usize {
        self.hypotheses[0].dim()
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.log_prior
    }

    pub fn log_posterior(&self) -> &[f64] {
        &self.log_posterior
    }

    pub fn posterior(&self) -> Vec<f64> {
        let w: Vec<f64> = self.log_posterior.iter().map(|v| v.exp()).collect();
        let sum: f64 = w.iter().sum();
        w.into_iter().map(|v| v / sum).collect()
    }

    /// Entropy of the posterior over hypotheses, in nats.
    pub fn posterior_entropy(&self) -> f64 {
        crate::info::entropy_of(&self.posterior())
    }

    /// The same hypotheses with the posterior replaced by `weights`.
    pub fn with_posterior(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.hypotheses.len() {
            return Err(Error::Shape("one weight per hypothesis required".into()));
        }
        let mut log_posterior: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
        normalize_log(&mut log_posterior)?;
        Ok(Self {
            log_posterior,
            ..self.clone()
        })
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Bayes update on hard-labeled data.
    pub fn condition(&self, data: &[LabeledExample]) -> Result<Self> {
        let mut log_posterior = self.log_posterior.clone();
        for example in data {
            self.check_x(&example.x)?;
            let y = example.target.hard().ok_or_else(|| {
                Error::InvalidArgument("exact conditioning needs hard labels".into())
            })?;
            if y >= self.classes {
                return Err(Error::IndexOutOfRange {
                    index: y,
                    len: self.classes,
                });
            }
            for (lp, h) in log_posterior.iter_mut().zip(&self.hypotheses) {
                *lp += h.probs(&example.x)[y].ln();
            }
        }
        normalize_log(&mut log_posterior)?;
        Ok(Self {
            log_posterior,
            ..self.clone()
        })
    }

    /// Per-hypothesis predictions `[k][n][c]`.
    pub fn hypothesis_predictions(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<Vec<f64>>>> {
        for x in xs {
            self.check_x(x)?;
        }
        Ok(self
            .hypotheses
            .iter()
            .map(|h| xs.iter().map(|x| h.probs(x)).collect())
            .collect())
    }

    /// The `K x N x C` table weighted by the posterior.
    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<PredictiveSamples> {
        if xs.is_empty() {
            return PredictiveSamples::empty(self.hypotheses.len(), self.classes)?
                .with_weights(self.posterior());
        }
        let table = self.hypothesis_predictions(xs)?;
        PredictiveSamples::from_nested(&table)?.with_weights(self.posterior())
    }

    /// Per-hypothesis likelihood of every label configuration of `xs`,
    /// `[k][config]` in odometer order.
    pub(crate) fn configuration_likelihoods(
        &self,
        xs: &[Vec<f64>],
        cap: usize,
    ) -> Result<Vec<Vec<f64>>> {
        let count = configuration_count(self.classes, xs.len());
        if count > cap as f64 {
            return Err(Error::CapExceeded {
                configurations: count,
                cap,
            });
        }
        let table = self.hypothesis_predictions(xs)?;
        Ok(table
            .iter()
            .map(|rows| {
                let mut t = vec![1.0];
                for row in rows {
                    t = t
                        .iter()
                        .flat_map(|&v| row.iter().map(move |&p| v * p))
                        .collect();
                }
                t
            })
            .collect())
    }

    /// Exact joint `p(y_1..y_m | x_1..x_m) = sum_k w_k prod_i p(y_i | x_i, omega_k)`.
    pub fn label_joint(&self, xs: &[Vec<f64>], cap: usize) -> Result<JointPredictive> {
        let count = configuration_count(self.classes, xs.len());
        if count > cap as f64 {
            return Err(Error::CapExceeded {
                configurations: count,
                cap,
            });
        }
        let ps = self.predict(xs)?;
        let batch: Vec<usize> = (0..xs.len()).collect();
        joint_predictive(&ps, &batch, JointMode::Exact { cap })
    }
}

/// Free-function forms matching the operation names.
pub fn discrete_condition(
    model: &DiscreteBayesModel,
    data: &[LabeledExample],
) -> Result<DiscreteBayesModel> {
    model.condition(data)
}

pub fn discrete_predict(model: &DiscreteBayesModel, xs: &[Vec<f64>]) -> Result<PredictiveSamples> {
    model.predict(xs)
}

pub fn discrete_label_joint(
    model: &DiscreteBayesModel,
    xs: &[Vec<f64>],
) -> Result<JointPredictive> {
    model.label_joint(xs, DEFAULT_ENUMERATION_CAP)
}

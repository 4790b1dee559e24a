//! Dataset, pool and result containers shared across the crate.

use crate::error::{Error, Result};
use crate::predictive::NORMALIZATION_TOLERANCE;

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Hard(usize),
    Soft(Vec<f64>),
}

impl Target {
    /// The uniform soft target over `classes` classes.
    pub fn uniform(classes: usize) -> Self {
        Target::Soft(vec![1.0 / classes as f64; classes])
    }

    /// Target as a probability vector over `classes` classes.
    pub fn to_probs(&self, classes: usize) -> Result<Vec<f64>> {
        match self {
            Target::Hard(c) if *c < classes => {
                let mut v = vec![0.0; classes];
                v[*c] = 1.0;
                Ok(v)
            }
            Target::Hard(c) => Err(Error::IndexOutOfRange {
                index: *c,
                len: classes,
            }),
            Target::Soft(p) => {
                check_soft(p, classes)?;
                Ok(p.clone())
            }
        }
    }

    pub fn hard(&self) -> Option<usize> {
        match self {
            Target::Hard(c) => Some(*c),
            Target::Soft(_) => None,
        }
    }
}

fn check_soft(p: &[f64], classes: usize) -> Result<()> {
    if p.len() != classes {
        return Err(Error::Shape(format!(
            "soft target has {} entries, expected {classes}",
            p.len()
        )));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidDistribution(
            "soft target entries must be finite and non-negative".into(),
        ));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "soft target sums to {sum}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub x: Vec<f64>,
    pub target: Target,
    /// Ground-truth metadata; acquisition never reads it.
    pub is_ood: bool,
}

impl LabeledExample {
    pub fn hard(x: Vec<f64>, class: usize) -> Self {
        Self {
            x,
            target: Target::Hard(class),
            is_ood: false,
        }
    }

    pub fn soft(x: Vec<f64>, probs: Vec<f64>) -> Self {
        Self {
            x,
            target: Target::Soft(probs),
            is_ood: false,
        }
    }
}

/// Check that every example has the same feature dimension and a valid target.
pub fn check_dataset(data: &[LabeledExample], classes: usize) -> Result<usize> {
    let dim = data
        .first()
        .map(|e| e.x.len())
        .ok_or_else(|| Error::InsufficientData("empty dataset".into()))?;
    for (i, example) in data.iter().enumerate() {
        if example.x.len() != dim {
            return Err(Error::Shape(format!(
                "example {i} has {} features, expected {dim}",
                example.x.len()
            )));
        }
        example.target.to_probs(classes)?;
    }
    Ok(dim)
}

/// Unlabeled candidates whose targets and OoD flags stay hidden until the
/// oracle reveals them.
#[derive(Debug, Clone, Default)]
pub struct Pool {
    ids: Vec<usize>,
    features: Vec<Vec<f64>>,
    hidden: Vec<(Target, bool)>,
}

impl Pool {
    pub fn new(examples: Vec<LabeledExample>) -> Self {
        let ids = (0..examples.len()).collect();
        let (features, hidden) = examples
            .into_iter()
            .map(|e| (e.x, (e.target, e.is_ood)))
            .unzip();
        Self {
            ids,
            features,
            hidden,
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    /// Original pool ids of the remaining candidates, aligned with `features`.
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    /// Number of remaining OoD candidates. Diagnostics only.
    pub fn hidden_ood_count(&self) -> usize {
        self.hidden.iter().filter(|(_, ood)| *ood).count()
    }

    /// Remove the candidates at `positions` and hand back their hidden data.
    pub(crate) fn take(&mut self, positions: &[usize]) -> Result<Vec<(usize, LabeledExample)>> {
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateIndex(pair[0]));
            }
        }
        if let Some(&last) = sorted.last() {
            if last >= self.len() {
                return Err(Error::IndexOutOfRange {
                    index: last,
                    len: self.len(),
                });
            }
        }
        let taken = positions
            .iter()
            .map(|&p| {
                let (target, is_ood) = self.hidden[p].clone();
                (
                    self.ids[p],
                    LabeledExample {
                        x: self.features[p].clone(),
                        target,
                        is_ood,
                    },
                )
            })
            .collect();
        for &p in sorted.iter().rev() {
            self.ids.remove(p);
            self.features.remove(p);
            self.hidden.remove(p);
        }
        Ok(taken)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPools {
    pub classes: usize,
    pub train: Vec<LabeledExample>,
    pub pool: Pool,
    pub eval_x: Vec<Vec<f64>>,
    pub test: Vec<LabeledExample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionResult {
    /// Selected pool positions in selection order.
    pub selected: Vec<usize>,
    /// Per-candidate score in nats (singleton value for greedy selection).
    pub scores: Vec<f64>,
    /// Per-candidate `(bald_term, conditional_bald_term)`.
    pub decomposition: Option<Vec<(f64, f64)>>,
    /// Marginal gain of each selected item at the time it was picked.
    pub gains: Vec<f64>,
    /// Objective value of the whole batch, for joint objectives.
    pub batch_score: Option<f64>,
    pub method: String,
}

impl AcquisitionResult {
    pub(crate) fn from_ranking(selected: Vec<usize>, scores: Vec<f64>, method: &str) -> Self {
        let gains = selected.iter().map(|&i| scores[i]).collect();
        Self {
            selected,
            scores,
            decomposition: None,
            gains,
            batch_score: None,
            method: method.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub labeled: usize,
    pub accuracy: f64,
    pub ood_ratio: f64,
    pub acquired: usize,
    pub acquired_ood: usize,
    pub wall_seconds: f64,
    /// Original pool ids acquired this round.
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub trial: usize,
    pub method: String,
    pub seed: u64,
    pub config_digest: String,
    pub rounds: Vec<RoundRecord>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_to_probs() {
        assert_eq!(Target::Hard(1).to_probs(3).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(Target::Hard(3).to_probs(3).is_err());
        assert!(Target::Soft(vec![0.5, 0.6]).to_probs(2).is_err());
        assert_eq!(Target::uniform(4).to_probs(4).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn dataset_dimension_must_be_constant() {
        let data = vec![
            LabeledExample::hard(vec![0.0, 1.0], 0),
            LabeledExample::hard(vec![0.0], 1),
        ];
        assert!(matches!(check_dataset(&data, 2), Err(Error::Shape(_))));
    }

    #[test]
    fn pool_take_removes_and_reveals() {
        let mut pool = Pool::new(vec![
            LabeledExample::hard(vec![0.0], 0),
            LabeledExample {
                x: vec![1.0],
                target: Target::uniform(2),
                is_ood: true,
            },
            LabeledExample::hard(vec![2.0], 1),
        ]);
        assert_eq!(pool.hidden_ood_count(), 1);
        let taken = pool.take(&[2, 1]).unwrap();
        assert_eq!(taken[0].0, 2);
        assert!(taken[1].1.is_ood);
        assert_eq!(pool.ids(), &[0]);
        assert!(matches!(pool.take(&[0, 0]), Err(Error::DuplicateIndex(0))));
        assert!(pool.take(&[5]).is_err());
    }
}

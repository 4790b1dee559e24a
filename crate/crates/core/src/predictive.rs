//! Posterior-sampled predictive distributions.
//!
//! A [`PredictiveSamples`] tensor holds `S` categorical predictive
//! distributions (one per posterior sample) for each of `N` inputs over `C`
//! classes. Every acquisition function in this crate consumes it.
//!
//! Samples may carry posterior weights. Ensembles leave them unset (uniform
//! `1/S`), the exact finite-hypothesis model sets them to its posterior.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Rows whose sum deviates from 1 by at most this much are renormalized on
/// ingestion; larger deviations are rejected.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSamples {
    samples: usize,
    inputs: usize,
    classes: usize,
    /// Row-major `[s][n][c]`.
    probs: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl PredictiveSamples {
    /// Build a tensor from a flat `[s][n][c]` buffer, renormalizing rows that
    /// are within [`NORMALIZATION_TOLERANCE`] of summing to one.
    pub fn new(samples: usize, inputs: usize, classes: usize, mut probs: Vec<f64>) -> Result<Self> {
        check_extents(samples, inputs, classes)?;
        if probs.len() != samples * inputs * classes {
            return Err(Error::Shape(format!(
                "buffer of length {} does not match {samples}x{inputs}x{classes}",
                probs.len()
            )));
        }
        for s in 0..samples {
            for n in 0..inputs {
                let start = (s * inputs + n) * classes;
                let row = &mut probs[start..start + classes];
                let sum = check_row(row, s, n)?;
                if sum != 1.0 {
                    row.iter_mut().for_each(|p| *p /= sum);
                }
            }
        }
        Ok(Self {
            samples,
            inputs,
            classes,
            probs,
            weights: None,
        })
    }

    /// Build from nested `[s][n][c]` vectors.
    pub fn from_nested(nested: &[Vec<Vec<f64>>]) -> Result<Self> {
        let samples = nested.len();
        let inputs = nested.first().map_or(0, Vec::len);
        let classes = nested.first().and_then(|s| s.first()).map_or(0, Vec::len);
        let mut probs = Vec::with_capacity(samples * inputs * classes);
        for (s, slice) in nested.iter().enumerate() {
            if slice.len() != inputs {
                return Err(Error::Shape(format!(
                    "sample {s} has {} inputs, expected {inputs}",
                    slice.len()
                )));
            }
            for (n, row) in slice.iter().enumerate() {
                if row.len() != classes {
                    return Err(Error::Shape(format!(
                        "row (sample {s}, input {n}) has {} classes, expected {classes}",
                        row.len()
                    )));
                }
                probs.extend_from_slice(row);
            }
        }
        Self::new(samples, inputs, classes, probs)
    }

    /// A tensor over zero inputs. It is the prediction of a model on an empty
    /// input set and is deliberately rejected by [`validate_predictive`].
    pub fn empty(samples: usize, classes: usize) -> Result<Self> {
        if samples == 0 || classes < 2 {
            return Err(Error::Shape(format!(
                "empty tensor needs S >= 1 and C >= 2, got S={samples}, C={classes}"
            )));
        }
        Ok(Self {
            samples,
            inputs: 0,
            classes,
            probs: Vec::new(),
            weights: None,
        })
    }

    /// Attach posterior weights to the samples. Weights must be non-negative
    /// and sum to one (within 1e-9; they are renormalized exactly).
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.samples {
            return Err(Error::Shape(format!(
                "{} weights for {} samples",
                weights.len(),
                self.samples
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "sample weights must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "sample weights sum to {sum}"
            )));
        }
        self.weights = Some(weights.into_iter().map(|w| w / sum).collect());
        Ok(self)
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn raw(&self) -> &[f64] {
        &self.probs
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Weight of posterior sample `s` (`1/S` when unweighted).
    #[inline]
    pub fn weight(&self, s: usize) -> f64 {
        match &self.weights {
            Some(w) => w[s],
            None => 1.0 / self.samples as f64,
        }
    }

    /// All sample weights, materialized.
    pub fn weight_vec(&self) -> Vec<f64> {
        (0..self.samples).map(|s| self.weight(s)).collect()
    }

    #[inline]
    pub fn row(&self, s: usize, n: usize) -> &[f64] {
        let start = (s * self.inputs + n) * self.classes;
        &self.probs[start..start + self.classes]
    }

    /// Posterior-weighted mean predictive distribution for input `n`.
    pub fn mean_row(&self, n: usize) -> Vec<f64> {
        let mut mean = vec![0.0; self.classes];
        for s in 0..self.samples {
            let w = self.weight(s);
            for (m, p) in mean.iter_mut().zip(self.row(s, n)) {
                *m += w * p;
            }
        }
        mean
    }

    /// Mean predictive rows for every input.
    pub fn mean_rows(&self) -> Vec<Vec<f64>> {
        (0..self.inputs).map(|n| self.mean_row(n)).collect()
    }

    /// Nested `[s][n][c]` copy of the probabilities.
    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.samples)
            .map(|s| (0..self.inputs).map(|n| self.row(s, n).to_vec()).collect())
            .collect()
    }

    /// Sub-tensor over the given inputs, preserving sample order and weights.
    pub fn slice_candidates(&self, indices: &[usize]) -> Result<Self> {
        let mut seen = HashSet::with_capacity(indices.len());
        for &i in indices {
            if i >= self.inputs {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.inputs,
                });
            }
            if !seen.insert(i) {
                return Err(Error::DuplicateIndex(i));
            }
        }
        let mut probs = Vec::with_capacity(self.samples * indices.len() * self.classes);
        for s in 0..self.samples {
            for &i in indices {
                probs.extend_from_slice(self.row(s, i));
            }
        }
        Ok(Self {
            samples: self.samples,
            inputs: indices.len(),
            classes: self.classes,
            probs,
            weights: self.weights.clone(),
        })
    }

    /// Check every invariant of the tensor.
    pub fn validate(&self) -> Result<()> {
        check_extents(self.samples, self.inputs, self.classes)?;
        if self.probs.len() != self.samples * self.inputs * self.classes {
            return Err(Error::Shape("buffer length mismatch".into()));
        }
        for s in 0..self.samples {
            for n in 0..self.inputs {
                let sum = check_row(self.row(s, n), s, n)?;
                if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    return Err(Error::Normalization {
                        sample: s,
                        input: n,
                        sum,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Free-function form of [`PredictiveSamples::validate`].
pub fn validate_predictive(ps: &PredictiveSamples) -> Result<()> {
    ps.validate()
}

/// Free-function form of [`PredictiveSamples::slice_candidates`].
pub fn slice_candidates(ps: &PredictiveSamples, indices: &[usize]) -> Result<PredictiveSamples> {
    ps.slice_candidates(indices)
}

fn check_extents(samples: usize, inputs: usize, classes: usize) -> Result<()> {
    if samples == 0 || inputs == 0 || classes < 2 {
        return Err(Error::Shape(format!(
            "need S >= 1, N >= 1, C >= 2; got S={samples}, N={inputs}, C={classes}"
        )));
    }
    Ok(())
}

fn check_row(row: &[f64], sample: usize, input: usize) -> Result<f64> {
    for (class, &value) in row.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::NonFinite {
                sample,
                input,
                class,
                value,
            });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Normalization { sample, input, sum });
    }
    Ok(sum)
}

//! Seeded 2D-and-up synthetic data: isotropic Gaussian mixtures for the
//! in-distribution classes and a uniform "junk" box for OoD pool items.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{LabeledExample, Target};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixtureSpec {
    pub classes: usize,
    pub means: Vec<Vec<f64>>,
    /// Isotropic standard deviation per component.
    pub stds: Vec<f64>,
    pub component_classes: Vec<usize>,
    /// Mixing proportions; normalized on use.
    pub component_weights: Vec<f64>,
}

impl Default for MixtureSpec {
    /// Eight components on a ring of radius 3, classes alternating, so every
    /// class owns two opposite blobs and neighbours overlap.
    fn default() -> Self {
        let means = (0..8)
            .map(|k| {
                let angle = k as f64 * std::f64::consts::PI / 4.0;
                vec![3.0 * angle.cos(), 3.0 * angle.sin()]
            })
            .collect();
        Self {
            classes: 4,
            means,
            stds: vec![0.7; 8],
            component_classes: (0..8).map(|k| k % 4).collect(),
            component_weights: vec![1.0; 8],
        }
    }
}

impl MixtureSpec {
    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| {
            Err(Error::Config {
                field: format!("dataset.mixture.{field}"),
                message,
            })
        };
        if self.classes < 2 {
            return bad("classes", "need at least 2 classes".into());
        }
        let k = self.means.len();
        if k == 0 {
            return bad("means", "need at least one component".into());
        }
        let dim = self.dim();
        if dim == 0
            || self
                .means
                .iter()
                .any(|m| m.len() != dim || m.iter().any(|v| !v.is_finite()))
        {
            return bad(
                "means",
                "components need equal, non-zero dimension and finite values".into(),
            );
        }
        if self.stds.len() != k
            || self.component_classes.len() != k
            || self.component_weights.len() != k
        {
            return bad(
                "stds",
                format!("stds, component_classes and component_weights need {k} entries each"),
            );
        }
        if let Some(s) = self.stds.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return bad("stds", format!("degenerate covariance: std {s}"));
        }
        if let Some(c) = self.component_classes.iter().find(|&&c| c >= self.classes) {
            return bad("component_classes", format!("class {c} out of range"));
        }
        if self
            .component_weights
            .iter()
            .any(|w| !(*w >= 0.0) || !w.is_finite())
            || self.component_weights.iter().sum::<f64>() <= 0.0
        {
            return bad(
                "component_weights",
                "weights must be non-negative with positive sum".into(),
            );
        }
        Ok(())
    }

    /// Class proportions implied by the component weights.
    pub fn class_proportions(&self) -> Vec<f64> {
        let total: f64 = self.component_weights.iter().sum();
        let mut p = vec![0.0; self.classes];
        for (&c, &w) in self.component_classes.iter().zip(&self.component_weights) {
            p[c] += w / total;
        }
        p
    }
}

/// Draw `n` labeled examples from the mixture.
pub fn gen_synthetic(spec: &MixtureSpec, n: usize, seed: u64) -> Result<Vec<LabeledExample>> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let total: f64 = spec.component_weights.iter().sum();
    let examples = (0..n)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            let mut k = spec.means.len() - 1;
            for (i, w) in spec.component_weights.iter().enumerate() {
                if u < *w {
                    k = i;
                    break;
                }
                u -= w;
            }
            let x = spec.means[k]
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + spec.stds[k] * z
                })
                .collect();
            LabeledExample::hard(x, spec.component_classes[k])
        })
        .collect();
    Ok(examples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JunkBox {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl Default for JunkBox {
    fn default() -> Self {
        Self {
            low: vec![5.0, -5.0],
            high: vec![9.0, 5.0],
        }
    }
}

impl JunkBox {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.low.len() != dim || self.high.len() != dim {
            return Err(Error::Config {
                field: "ood.junk.low".into(),
                message: format!("junk box needs {dim} bounds per side"),
            });
        }
        if self
            .low
            .iter()
            .zip(&self.high)
            .any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::Config {
                field: "ood.junk.high".into(),
                message: "each upper bound must be finite and >= its lower bound".into(),
            });
        }
        Ok(())
    }
}

/// Uniform OoD points over the box. Their hidden target is uniform: junk has
/// no meaningful class.
pub fn gen_junk(
    bounds: &JunkBox,
    classes: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    bounds.validate(bounds.low.len())?;
    let mut rng = rng_from_seed(seed);
    Ok((0..n)
        .map(|_| {
            let x = bounds
                .low
                .iter()
                .zip(&bounds.high)
                .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                .collect();
            LabeledExample {
                x,
                target: Target::uniform(classes),
                is_ood: true,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_std_collapses_to_means() {
        let spec = MixtureSpec {
            classes: 2,
            means: vec![vec![1.0, -2.0], vec![4.0, 0.5]],
            stds: vec![0.0, 0.0],
            component_classes: vec![0, 1],
            component_weights: vec![1.0, 1.0],
        };
        for e in gen_synthetic(&spec, 50, 1).unwrap() {
            let c = e.target.hard().unwrap();
            assert_eq!(e.x, spec.means[c]);
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let spec = MixtureSpec::default();
        assert_eq!(
            gen_synthetic(&spec, 100, 7).unwrap(),
            gen_synthetic(&spec, 100, 7).unwrap()
        );
        assert_ne!(
            gen_synthetic(&spec, 100, 7).unwrap(),
            gen_synthetic(&spec, 100, 8).unwrap()
        );
    }

    #[test]
    fn class_proportions_match() {
        let spec = MixtureSpec {
            component_weights: vec![3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            ..MixtureSpec::default()
        };
        let expected = spec.class_proportions();
        let data = gen_synthetic(&spec, 10_000, 3).unwrap();
        let mut counts = vec![0usize; 4];
        for e in &data {
            counts[e.target.hard().unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip(expected) {
            assert!((*c as f64 / 1e4 - p).abs() < 0.02, "{c} vs {p}");
        }
    }

    #[test]
    fn degenerate_covariance_is_rejected() {
        let mut spec = MixtureSpec::default();
        spec.stds[2] = -0.1;
        assert!(matches!(
            gen_synthetic(&spec, 1, 0),
            Err(Error::Config { .. })
        ));
        spec.stds[2] = f64::NAN;
        assert!(gen_synthetic(&spec, 1, 0).is_err());
    }

    #[test]
    fn junk_stays_in_box() {
        let b = JunkBox::default();
        let junk = gen_junk(&b, 4, 500, 2).unwrap();
        for e in junk {
            assert!(e.is_ood);
            assert_eq!(e.target, Target::uniform(4));
            for ((v, l), h) in e.x.iter().zip(&b.low).zip(&b.high) {
                assert!(l <= v && v <= h);
            }
        }
    }
}

//! BALD and EPIG-BALD over a 2D grid, for the toy picture of where each
//! method wants to acquire.

use super::pools::{build_pools, pool_seed};
use super::runner::{conditioning_kind, StepSeeds};
use crate::config::ExperimentConfig;
use crate::epig::{
    condition_posterior, epig_bald_scores, epig_bald_scores_weighted, exact_conditioned_predictions,
};
use crate::error::{Error, Result};
use crate::info::bald_scores;
use crate::models::discrete::DiscreteBayesModel;
use crate::models::ensemble::train_ensemble;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    pub grid: Vec<Vec<f64>>,
    pub bald: Vec<f64>,
    pub epig_bald: Vec<f64>,
    /// Initial training points with their classes.
    pub train: Vec<(Vec<f64>, Option<usize>)>,
    pub eval_x: Vec<Vec<f64>>,
    /// Pool features, for plotting only.
    pub pool: Vec<Vec<f64>>,
}

/// A `steps x steps` grid covering `points` with a 10% margin.
pub fn default_grid(points: &[Vec<f64>], steps: usize) -> Result<Vec<Vec<f64>>> {
    if points.iter().any(|p| p.len() != 2) {
        return Err(Error::InvalidArgument("score maps need 2D features".into()));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument(
            "grid needs at least 2 steps per axis".into(),
        ));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    if points.is_empty() {
        (lo, hi) = ([-1.0; 2], [1.0; 2]);
    }
    let axis = |d: usize| -> Vec<f64> {
        let margin = 0.1 * (hi[d] - lo[d]).max(1e-9);
        let (a, b) = (lo[d] - margin, hi[d] + margin);
        (0..steps)
            .map(|i| a + (b - a) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let (xs, ys) = (axis(0), axis(1));
    Ok(ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| vec![x, y]))
        .collect())
}

/// Scores of trial 0's first acquisition round over `grid`: the teacher is
/// trained on the initial training set and conditioned on the evaluation set
/// exactly as the simulator would.
pub fn score_map(config: &ExperimentConfig, grid: &[Vec<f64>]) -> Result<ScoreMap> {
    config.validate()?;
    let pools = build_pools(config, pool_seed(config, 0))?;
    if pools.train.first().is_some_and(|e| e.x.len() != 2) || grid.iter().any(|g| g.len() != 2) {
        return Err(Error::InvalidArgument("score maps need 2D features".into()));
    }
    let teacher = train_ensemble(
        &pools.train,
        pools.classes,
        &config.model,
        derive_seed(config.experiment.seed, 0, 0, "teacher"),
    )?;
    let seeds = StepSeeds::for_round(config, 0, 1);
    let conditioned = condition_posterior(
        &teacher,
        &pools.train,
        &pools.eval_x,
        conditioning_kind(config),
        &config.model,
        config.acquisition.eval_weight,
        seeds.condition,
    )?;
    let ps = teacher.predict_samples(grid)?;
    let scores = epig_bald_scores(&ps, &conditioned.predict(grid)?)?;
    Ok(ScoreMap {
        grid: grid.to_vec(),
        bald: scores.bald,
        epig_bald: scores.scores,
        train: pools
            .train
            .iter()
            .map(|e| (e.x.clone(), e.target.hard()))
            .collect(),
        eval_x: pools.eval_x.clone(),
        pool: pools.pool.features().to_vec(),
    })
}

/// Exact BALD and EPIG-BALD maps for a discrete model.
pub fn score_map_discrete(
    model: &DiscreteBayesModel,
    eval_x: &[Vec<f64>],
    grid: &[Vec<f64>],
    cap: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let teacher = model.predict(grid)?;
    let (conditioned, weights) = exact_conditioned_predictions(model, eval_x, grid, cap)?;
    let scores = epig_bald_scores_weighted(&teacher, &conditioned, Some(&weights))?;
    Ok((bald_scores(&teacher), scores.scores))
}

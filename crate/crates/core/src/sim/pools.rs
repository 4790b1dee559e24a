use rand::seq::SliceRandom;

use crate::config::{DataSource, ExperimentConfig, OodSource};
use crate::data::{check_dataset, ExperimentPools, LabeledExample, Pool, Target};
use crate::error::{Error, Result};
use crate::idx::load_idx;
use crate::rng::{derive_seed, rng_from_seed};
use crate::synthetic::{gen_junk, gen_synthetic};

/// Seed of trial `trial`'s pools. Depends only on the base seed and the trial,
/// so every method sees the same pools.
pub fn pool_seed(config: &ExperimentConfig, trial: usize) -> u64 {
    derive_seed(config.experiment.seed, trial as u64, 0, "pools")
}

fn split_seed(seed: u64, tag: &str) -> u64 {
    derive_seed(seed, 0, 0, tag)
}

/// Build the four disjoint splits.
///
/// Each split is drawn from its own seeded stream, and the evaluation set is
/// drawn last from its stream, so evaluation sets of different sizes are
/// prefixes of one another and never change the other splits.
pub fn build_pools(config: &ExperimentConfig, seed: u64) -> Result<ExperimentPools> {
    config.validate()?;
    let d = &config.dataset;
    let classes = d.classes();
    let n_ood = config.ood_count();
    let n_id = d.pool_size.saturating_sub(n_ood);

    let (train, pool_id, test, eval_x) = match d.source {
        DataSource::Synthetic => {
            let m = &d.mixture;
            (
                gen_synthetic(m, d.initial_train, split_seed(seed, "train"))?,
                gen_synthetic(m, n_id, split_seed(seed, "pool"))?,
                gen_synthetic(m, d.test_size, split_seed(seed, "test"))?,
                gen_synthetic(m, d.eval_size, split_seed(seed, "eval"))?
                    .into_iter()
                    .map(|e| e.x)
                    .collect::<Vec<_>>(),
            )
        }
        DataSource::Idx => {
            let (images, labels) = (d.images.as_ref().unwrap(), d.labels.as_ref().unwrap());
            let mut all = load_idx(images, labels)?;
            if let Some(e) = all
                .iter()
                .find(|e| e.target.hard().is_some_and(|y| y >= classes))
            {
                return Err(Error::Config {
                    field: "dataset.classes".into(),
                    message: format!("label {:?} out of range", e.target.hard()),
                });
            }
            let need = d.initial_train + n_id + d.test_size + d.eval_size;
            if all.len() < need {
                return Err(Error::InsufficientData(format!(
                    "splits need {need} in-distribution examples, dataset has {}",
                    all.len()
                )));
            }
            all.shuffle(&mut rng_from_seed(split_seed(seed, "permute")));
            let mut rest = all.into_iter();
            let train: Vec<_> = rest.by_ref().take(d.initial_train).collect();
            let pool: Vec<_> = rest.by_ref().take(n_id).collect();
            let test: Vec<_> = rest.by_ref().take(d.test_size).collect();
            let eval: Vec<_> = rest.take(d.eval_size).map(|e| e.x).collect();
            (train, pool, test, eval)
        }
    };

    let ood = match config.ood.source {
        OodSource::None => Vec::new(),
        OodSource::JunkBox => gen_junk(&config.ood.junk, classes, n_ood, split_seed(seed, "junk"))?,
        OodSource::Idx => {
            let o = &config.ood;
            let mut all = load_idx(o.images.as_ref().unwrap(), o.labels.as_ref().unwrap())?;
            if all.len() < n_ood {
                return Err(Error::InsufficientData(format!(
                    "pool needs {n_ood} OoD examples, OoD dataset has {}",
                    all.len()
                )));
            }
            all.shuffle(&mut rng_from_seed(split_seed(seed, "permute-ood")));
            all.into_iter()
                .take(n_ood)
                .map(|e| LabeledExample {
                    x: e.x,
                    target: Target::uniform(classes),
                    is_ood: true,
                })
                .collect()
        }
    };

    let mut pool: Vec<LabeledExample> = pool_id.into_iter().chain(ood).collect();
    pool.shuffle(&mut rng_from_seed(split_seed(seed, "pool-order")));
    let dim = check_dataset(&train, classes)?;
    if !pool.is_empty() && check_dataset(&pool, classes)? != dim {
        return Err(Error::Shape(
            "pool and train feature dimensions differ".into(),
        ));
    }
    if eval_x.iter().any(|x| x.len() != dim) {
        return Err(Error::Shape(
            "eval and train feature dimensions differ".into(),
        ));
    }
    Ok(ExperimentPools {
        classes,
        train,
        pool: Pool::new(pool),
        eval_x,
        test,
    })
}

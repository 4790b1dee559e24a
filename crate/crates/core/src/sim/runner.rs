use std::time::Instant;

use rand::seq::index::sample;
use rayon::prelude::*;

use super::oracle::query_oracle;
use super::pools::{build_pools, pool_seed};
use crate::config::{Conditioning, ExperimentConfig, Method, OodMode};
use crate::data::{AcquisitionResult, ExperimentPools, LabeledExample, RoundRecord, RunLog};
use crate::epig::{
    condition_posterior, epig_entropy_scores, epig_greedy_batch, ConditioningKind, EpigBatchMode,
};
use crate::error::{Error, Result};
use crate::info::{bald_scores, greedy_batchbald, softmax_select, topk_select, JointMode};
use crate::models::ensemble::{train_ensemble, PosteriorEnsemble};
use crate::rng::{child_seed, derive_seed, rng_from_seed};

/// Seeds for the stochastic parts of one acquisition step.
#[derive(Debug, Clone, Copy)]
pub struct StepSeeds {
    pub condition: u64,
    pub select: u64,
}

impl StepSeeds {
    pub fn for_round(config: &ExperimentConfig, trial: usize, round: usize) -> Self {
        let base = config.experiment.seed;
        Self {
            condition: derive_seed(base, trial as u64, round as u64, "condition"),
            select: derive_seed(base, trial as u64, round as u64, "select"),
        }
    }
}

pub fn conditioning_kind(config: &ExperimentConfig) -> ConditioningKind {
    match config.acquisition.conditioning {
        Conditioning::Distilled => ConditioningKind::Distilled,
        Conditioning::PseudoEnsemble => ConditioningKind::PseudoEnsemble {
            sets: config.acquisition.pseudo_label_sets,
        },
    }
}

/// Choose `b` of `candidates` with `method`.
///
/// Only features and model outputs are visible here: hidden pool labels and
/// OoD flags never reach the scorer.
#[allow(clippy::too_many_arguments)]
pub fn select_batch(
    config: &ExperimentConfig,
    method: Method,
    teacher: &PosteriorEnsemble,
    train: &[LabeledExample],
    eval_x: &[Vec<f64>],
    candidates: &[Vec<f64>],
    b: usize,
    seeds: StepSeeds,
) -> Result<AcquisitionResult> {
    let a = &config.acquisition;
    if b > candidates.len() {
        return Err(Error::BatchTooLarge {
            requested: b,
            available: candidates.len(),
        });
    }
    if method == Method::Uniform {
        let mut rng = rng_from_seed(seeds.select);
        let selected = sample(&mut rng, candidates.len(), b).into_vec();
        let mut r =
            AcquisitionResult::from_ranking(selected, vec![0.0; candidates.len()], "uniform");
        r.gains = vec![0.0; b];
        return Ok(r);
    }
    let ps = teacher.predict_samples(candidates)?;
    let joint_mode = JointMode::Auto {
        cap: a.joint_cap,
        samples: a.mc_samples,
        seed: seeds.select,
    };
    let mut result = match method {
        Method::Uniform => unreachable!(),
        Method::BaldTopk => topk_select(&bald_scores(&ps), b)?,
        Method::Batchbald => greedy_batchbald(&ps, b, joint_mode)?,
        Method::SoftmaxBald => {
            softmax_select(&bald_scores(&ps), b, a.softmax_temperature, seeds.select)?
        }
        Method::EpigBaldTopk | Method::EpigBaldGreedy | Method::EpigEntropy => {
            let conditioned = condition_posterior(
                teacher,
                train,
                eval_x,
                conditioning_kind(config),
                &config.model,
                a.eval_weight,
                seeds.condition,
            )?;
            let cps = conditioned.predict(candidates)?;
            match method {
                Method::EpigBaldTopk => {
                    epig_greedy_batch(&ps, &cps, b, EpigBatchMode::TopK, joint_mode)?
                }
                Method::EpigBaldGreedy => {
                    epig_greedy_batch(&ps, &cps, b, EpigBatchMode::GreedyJoint, joint_mode)?
                }
                _ => topk_select(&epig_entropy_scores(&ps, &cps)?, b)?,
            }
        }
    };
    result.method = method.as_str().to_string();
    Ok(result)
}

fn teacher_seed(config: &ExperimentConfig, trial: usize, round: usize) -> u64 {
    derive_seed(
        config.experiment.seed,
        trial as u64,
        round as u64,
        "teacher",
    )
}

/// Run one trial on prebuilt pools.
pub fn run_trial(
    config: &ExperimentConfig,
    mut pools: ExperimentPools,
    trial: usize,
) -> Result<RunLog> {
    let wrap = |round: usize| {
        move |e: Error| Error::Trial {
            trial,
            round,
            source: Box::new(e),
        }
    };
    let a = &config.acquisition;
    let classes = pools.classes;
    let start = Instant::now();
    let mut teacher = train_ensemble(
        &pools.train,
        classes,
        &config.model,
        teacher_seed(config, trial, 0),
    )
    .map_err(wrap(0))?;
    let mut rounds = vec![RoundRecord {
        round: 0,
        labeled: pools.train.len(),
        accuracy: teacher.accuracy(&pools.test).map_err(wrap(0))?,
        ood_ratio: 0.0,
        acquired: 0,
        acquired_ood: 0,
        wall_seconds: start.elapsed().as_secs_f64(),
        selected: Vec::new(),
    }];
    let (mut acquired, mut acquired_ood) = (0usize, 0usize);

    for round in 1..=a.rounds {
        if pools.pool.is_empty() {
            log::warn!("trial {trial}: pool exhausted before round {round}");
            break;
        }
        let start = Instant::now();
        let seeds = StepSeeds::for_round(config, trial, round);
        let mut wanted = a.acquisition_size.min(pools.pool.len());
        let mut selected_ids = Vec::new();
        let mut attempt = 0u64;
        while wanted > 0 && !pools.pool.is_empty() {
            // replacement draws (rejection mode only) get fresh selection seeds
            let step_seeds = StepSeeds {
                condition: seeds.condition,
                select: if attempt == 0 {
                    seeds.select
                } else {
                    child_seed(seeds.select, attempt)
                },
            };
            let b = wanted.min(pools.pool.len());
            let result = select_batch(
                config,
                a.method,
                &teacher,
                &pools.train,
                &pools.eval_x,
                pools.pool.features(),
                b,
                step_seeds,
            )
            .map_err(wrap(round))?;
            let outcomes =
                query_oracle(&mut pools.pool, &result.selected, config.ood.mode, classes)
                    .map_err(wrap(round))?;
            wanted = 0;
            for outcome in outcomes {
                acquired += 1;
                selected_ids.push(outcome.pool_id);
                if outcome.is_ood {
                    acquired_ood += 1;
                }
                match outcome.example {
                    Some(example) => pools.train.push(example),
                    None => wanted += 1,
                }
            }
            if !(config.ood.replace_rejected && config.ood.mode == OodMode::Rejection) {
                break;
            }
            attempt += 1;
        }
        teacher = train_ensemble(
            &pools.train,
            classes,
            &config.model,
            teacher_seed(config, trial, round),
        )
        .map_err(wrap(round))?;
        let accuracy = teacher.accuracy(&pools.test).map_err(wrap(round))?;
        let record = RoundRecord {
            round,
            labeled: pools.train.len(),
            accuracy,
            ood_ratio: if acquired == 0 {
                0.0
            } else {
                acquired_ood as f64 / acquired as f64
            },
            acquired,
            acquired_ood,
            wall_seconds: start.elapsed().as_secs_f64(),
            selected: selected_ids,
        };
        log::info!(
            "{} trial {trial} round {round}: labeled {} accuracy {:.4} ood ratio {:.3} ({:.2}s)",
            a.method,
            record.labeled,
            record.accuracy,
            record.ood_ratio,
            record.wall_seconds
        );
        rounds.push(record);
    }
    Ok(RunLog {
        trial,
        method: a.method.as_str().to_string(),
        seed: config.experiment.seed,
        config_digest: config.digest(),
        rounds,
    })
}

/// Run every trial of the experiment. Trials run concurrently; logs come back
/// in trial order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunLog>> {
    config.validate()?;
    (0..config.experiment.trials)
        .into_par_iter()
        .map(|trial| {
            let pools =
                build_pools(config, pool_seed(config, trial)).map_err(|e| Error::Trial {
                    trial,
                    round: 0,
                    source: Box::new(e),
                })?;
            run_trial(config, pools, trial)
        })
        .collect()
}

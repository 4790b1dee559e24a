//! Randomized checks of the information identities against exact
//! enumeration. Shared by `epig-bench check-identities` and the tests.

use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::epig::{
    epig_bald_scores_weighted, exact_conditioned_predictions, exact_epig_all_forms,
    exact_epig_batch_forms,
};
use crate::error::Result;
use crate::info::{
    bald_scores, batchbald_score, greedy_batchbald, joint_entropy, joint_entropy_standard_error,
    joint_predictive, topk_select, JointMode,
};
use crate::models::discrete::{DiscreteBayesModel, Likelihood, DEFAULT_ENUMERATION_CAP};
use crate::predictive::PredictiveSamples;
use crate::rng::{child_seed, rng_from_seed};

pub const IDENTITY_TOLERANCE: f64 = 1e-9;
pub const MC_STANDARD_ERRORS: f64 = 3.0;
pub const MC_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub instances: usize,
    pub checks: usize,
    pub failures: usize,
    /// Largest observed violation (or deviation) in nats.
    pub worst: f64,
    pub first_failure: Option<String>,
    pub elapsed: Duration,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            instances: 0,
            checks: 0,
            failures: 0,
            worst: 0.0,
            first_failure: None,
            elapsed: Duration::ZERO,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    /// Record a check whose `violation` must not exceed `tolerance`.
    fn check(&mut self, violation: f64, tolerance: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        if violation > self.worst || violation.is_nan() {
            self.worst = violation;
        }
        if !(violation <= tolerance) {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{:<28} {} instances={} checks={} failures={} worst={:.3e} time={:.2}s{}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.instances,
            self.checks,
            self.failures,
            self.worst,
            self.elapsed.as_secs_f64(),
            self.first_failure
                .as_ref()
                .map(|f| format!(" first: {f}"))
                .unwrap_or_default()
        )
    }
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Random binary logistic hypotheses with a random prior.
pub fn random_discrete_model(rng: &mut ChaCha8Rng, k: usize, dim: usize) -> DiscreteBayesModel {
    let w = Normal::new(0.0, 1.5).unwrap();
    let hyps = (0..k)
        .map(|_| Likelihood::Logistic {
            weights: (0..dim).map(|_| w.sample(rng)).collect(),
            bias: StandardNormal.sample(rng),
        })
        .collect();
    let prior: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    DiscreteBayesModel::new(hyps, Some(prior)).expect("valid random model")
}

/// Random ensemble-style tensor: `s` samples of `n` rows over `c` classes.
pub fn random_tensor(rng: &mut ChaCha8Rng, s: usize, n: usize, c: usize) -> PredictiveSamples {
    let logit = Normal::new(0.0, 2.0).unwrap();
    let mut probs = Vec::with_capacity(s * n * c);
    for _ in 0..s * n {
        let row: Vec<f64> = (0..c).map(|_| f64::exp(logit.sample(rng))).collect();
        let total: f64 = row.iter().sum();
        probs.extend(row.into_iter().map(|v| v / total));
    }
    PredictiveSamples::new(s, n, c, probs).expect("valid random tensor")
}

/// One instance of the EPIG identity suite: model, evaluation set, candidate.
pub struct EpigInstance {
    pub model: DiscreteBayesModel,
    pub eval_x: Vec<Vec<f64>>,
    pub candidate: Vec<f64>,
}

/// K <= 8 hypotheses, C = 2, |eval| <= 4.
pub fn epig_instance(seed: u64, index: usize) -> EpigInstance {
    let mut rng = rng_from_seed(child_seed(seed, index as u64));
    let k = rng.random_range(1..=8);
    let model = random_discrete_model(&mut rng, k, 2);
    let n_eval = rng.random_range(0..=4);
    EpigInstance {
        model,
        eval_x: (0..n_eval).map(|_| random_point(&mut rng, 2)).collect(),
        candidate: random_point(&mut rng, 2),
    }
}

/// The three forms of EPIG agree, and none is negative.
pub fn epig_forms_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut report = SuiteReport::new("epig_three_forms");
    for i in 0..instances {
        let inst = epig_instance(seed, i);
        let forms = exact_epig_all_forms(&inst.model, &inst.eval_x, &inst.candidate)?;
        report.instances += 1;
        report.check(forms.max_deviation(), IDENTITY_TOLERANCE, || {
            format!("instance {i}: forms {forms:?}")
        });
        let min = forms
            .eval_side
            .min(forms.candidate_side)
            .min(forms.bald_difference);
        report.check(-min, IDENTITY_TOLERANCE, || {
            format!("instance {i}: negative form {min}")
        });
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// On the exact model, the expected BALD after seeing evaluation labels never
/// exceeds the current BALD.
pub fn conditioning_inequality_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut report = SuiteReport::new("conditioning_inequality");
    for i in 0..instances {
        let inst = epig_instance(seed, i);
        let candidates = [inst.candidate.clone()];
        let teacher = inst.model.predict(&candidates)?;
        let (conditioned, weights) = exact_conditioned_predictions(
            &inst.model,
            &inst.eval_x,
            &candidates,
            DEFAULT_ENUMERATION_CAP,
        )?;
        let s = epig_bald_scores_weighted(&teacher, &conditioned, Some(&weights))?;
        report.instances += 1;
        let excess = s.conditional_bald[0] - s.bald[0];
        report.check(excess, IDENTITY_TOLERANCE, || {
            format!(
                "instance {i}: conditional {} > bald {}",
                s.conditional_bald[0], s.bald[0]
            )
        });
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Check monotonicity and diminishing returns of a set function given on all
/// subsets of an `n`-element ground set (indexed by bitmask).
fn check_submodular(report: &mut SuiteReport, f: &[f64], n: usize, instance: usize) {
    let full = 1usize << n;
    for b in 0..full {
        for x in (0..n).filter(|x| b & (1 << x) == 0) {
            let gain_b = f[b | 1 << x] - f[b];
            report.check(-gain_b, IDENTITY_TOLERANCE, || {
                format!("instance {instance}: negative gain {gain_b} adding {x} to {b:#b}")
            });
            // every subset a of b
            let mut a = b;
            loop {
                let gain_a = f[a | 1 << x] - f[a];
                report.check(gain_b - gain_a, IDENTITY_TOLERANCE, || {
                    format!("instance {instance}: gain {gain_b} at {b:#b} exceeds {gain_a} at {a:#b} for {x}")
                });
                if a == 0 {
                    break;
                }
                a = (a - 1) & b;
            }
        }
    }
}

fn members(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

/// BatchBALD is monotone submodular on small exact instances
/// (pool <= 6, S <= 4, C <= 3).
pub fn batchbald_submodularity_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut report = SuiteReport::new("batchbald_submodularity");
    for i in 0..instances {
        let mut rng = rng_from_seed(child_seed(seed, i as u64));
        let s = rng.random_range(1..=4);
        let c = rng.random_range(2..=3);
        let n = rng.random_range(2..=6);
        let ps = random_tensor(&mut rng, s, n, c);
        let f = (0..1usize << n)
            .map(|mask| {
                let batch = members(mask, n);
                if batch.is_empty() {
                    Ok(0.0)
                } else {
                    batchbald_score(&ps, &batch, JointMode::exact())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        report.instances += 1;
        check_submodular(&mut report, &f, n, i);
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Joint EPIG `I[Y_eval; Y_batch]` on the exact model, checked for
/// diminishing returns over every subset of a small candidate pool.
pub fn epig_submodularity_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut report = SuiteReport::new("epig_submodularity");
    for i in 0..instances {
        let mut rng = rng_from_seed(child_seed(seed, i as u64));
        let k = rng.random_range(2..=8);
        let model = random_discrete_model(&mut rng, k, 2);
        let n = rng.random_range(2..=5);
        let n_eval = rng.random_range(1..=3);
        let pool: Vec<Vec<f64>> = (0..n).map(|_| random_point(&mut rng, 2)).collect();
        let eval_x: Vec<Vec<f64>> = (0..n_eval).map(|_| random_point(&mut rng, 2)).collect();
        let f = (0..1usize << n)
            .map(|mask| {
                let batch: Vec<Vec<f64>> = members(mask, n)
                    .into_iter()
                    .map(|j| pool[j].clone())
                    .collect();
                exact_epig_batch_forms(&model, &eval_x, &batch, DEFAULT_ENUMERATION_CAP)
                    .map(|f| f.eval_side)
            })
            .collect::<Result<Vec<_>>>()?;
        report.instances += 1;
        check_submodular(&mut report, &f, n, i);
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Greedy BatchBALD reaches at least (1 - 1/e) of the best 3-subset of 8.
pub fn greedy_bound_suite(instances: usize, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut report = SuiteReport::new("greedy_bound");
    let bound = 1.0 - (-1.0f64).exp();
    let (n, b) = (8, 3);
    for i in 0..instances {
        let mut rng = rng_from_seed(child_seed(seed, i as u64));
        let s = rng.random_range(2..=4);
        let c = rng.random_range(2..=3);
        let ps = random_tensor(&mut rng, s, n, c);
        let greedy = greedy_batchbald(&ps, b, JointMode::exact())?;
        let achieved = batchbald_score(&ps, &greedy.selected, JointMode::exact())?;
        let mut best = f64::NEG_INFINITY;
        for x in 0..n {
            for y in x + 1..n {
                for z in y + 1..n {
                    best = best.max(batchbald_score(&ps, &[x, y, z], JointMode::exact())?);
                }
            }
        }
        report.instances += 1;
        report.check(bound * best - achieved, 1e-12, || {
            format!("instance {i}: greedy {achieved} < (1-1/e) * {best}")
        });
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Two copies of a maximal-disagreement point: BatchBALD of the pair is ln 2,
/// top-k BALD counts it twice.
pub fn redundancy_suite() -> Result<SuiteReport> {
    let start = Instant::now();
    let mut report = SuiteReport::new("batchbald_redundancy");
    let ps = PredictiveSamples::from_nested(&[
        vec![vec![1.0, 0.0], vec![1.0, 0.0]],
        vec![vec![0.0, 1.0], vec![0.0, 1.0]],
    ])?;
    let pair = batchbald_score(&ps, &[0, 1], JointMode::exact())?;
    let bald = bald_scores(&ps);
    let top = topk_select(&bald, 2)?;
    let top_sum: f64 = top.selected.iter().map(|&i| bald[i]).sum();
    report.instances = 1;
    report.check((pair - LN_2).abs(), IDENTITY_TOLERANCE, || {
        format!("pair score {pair}")
    });
    report.check((top_sum - 2.0 * LN_2).abs(), IDENTITY_TOLERANCE, || {
        format!("top-k sum {top_sum}")
    });
    report.elapsed = start.elapsed();
    Ok(report)
}

/// `(classes, batch)` pairs with at most 64 joint configurations.
pub fn mc_fixture_shapes() -> Vec<(usize, usize)> {
    let mut shapes = Vec::new();
    for c in [2usize, 3, 4, 8] {
        let mut b = 1;
        while c.pow(b as u32) <= 64 {
            shapes.push((c, b));
            b += 1;
        }
    }
    shapes
}

/// The sampled joint-entropy estimator lands within three standard errors of
/// the exact value on every fixture.
pub fn mc_estimator_suite(seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut report = SuiteReport::new("mc_joint_entropy");
    for (i, (c, b)) in mc_fixture_shapes().into_iter().enumerate() {
        let mut rng = rng_from_seed(child_seed(seed, i as u64));
        let ps = random_tensor(&mut rng, 6, b, c);
        let batch: Vec<usize> = (0..b).collect();
        let exact = joint_entropy(&joint_predictive(&ps, &batch, JointMode::exact())?);
        let sampled = joint_predictive(
            &ps,
            &batch,
            JointMode::MonteCarlo {
                samples: MC_SAMPLES,
                seed: child_seed(seed ^ 0x9e37_79b9, i as u64),
            },
        )?;
        let estimate = joint_entropy(&sampled);
        let se = joint_entropy_standard_error(&sampled);
        report.instances += 1;
        // in units of standard errors; the 1e-12 floor covers the zero-variance case
        let excess = (estimate - exact).abs() - MC_STANDARD_ERRORS * se;
        report.check(excess, 1e-12, || {
            format!("C={c} b={b}: estimate {estimate} exact {exact} se {se}")
        });
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Every suite, as run by `check-identities`.
pub fn check_identities(instances: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        epig_forms_suite(instances, seed)?,
        conditioning_inequality_suite(instances, seed)?,
        batchbald_submodularity_suite(instances, seed)?,
        epig_submodularity_suite(instances, seed)?,
        greedy_bound_suite(instances, seed)?,
        redundancy_suite()?,
        mc_estimator_suite(seed)?,
    ])
}

//! Closed-loop active-learning experiments with a contaminated pool.

pub mod ablation;
pub mod oracle;
pub mod pools;
pub mod runner;
pub mod score_map;

pub use ablation::{ablate_eval_size, final_accuracies, AblationEntry};
pub use oracle::{query_oracle, OracleOutcome, OracleResponse};
pub use pools::{build_pools, pool_seed};
pub use runner::{run_experiment, run_trial, select_batch, StepSeeds};
pub use score_map::{default_grid, score_map, score_map_discrete, ScoreMap};

/// Median with the midpoint convention for even counts; NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

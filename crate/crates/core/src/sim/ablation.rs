use super::median;
use super::runner::run_experiment;
use crate::config::ExperimentConfig;
use crate::data::RunLog;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct AblationEntry {
    pub eval_size: usize,
    pub logs: Vec<RunLog>,
    pub median_final_accuracy: f64,
}

/// Final accuracy of each trial, in trial order.
pub fn final_accuracies(logs: &[RunLog]) -> Vec<f64> {
    logs.iter()
        .filter_map(|l| l.rounds.last().map(|r| r.accuracy))
        .collect()
}

/// Rerun the experiment once per evaluation-set size. Everything but the
/// evaluation set is shared between sizes (same seeds, same pools), and the
/// smaller evaluation sets are prefixes of the larger ones.
pub fn ablate_eval_size(config: &ExperimentConfig, sizes: &[usize]) -> Result<Vec<AblationEntry>> {
    sizes
        .iter()
        .map(|&eval_size| {
            let mut c = config.clone();
            c.dataset.eval_size = eval_size;
            let logs = run_experiment(&c)?;
            Ok(AblationEntry {
                eval_size,
                median_final_accuracy: median(&final_accuracies(&logs)),
                logs,
            })
        })
        .collect()
}

//! Python bindings. Tensors cross the boundary as nested lists of shape
//! `[samples][inputs][classes]`.

use epig::info::{self, JointMode};
use epig::models::discrete::DEFAULT_ENUMERATION_CAP;
use epig::{DiscreteBayesModel, PredictiveSamples};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: epig::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn tensor(nested: Vec<Vec<Vec<f64>>>) -> PyResult<PredictiveSamples> {
    PredictiveSamples::from_nested(&nested).map_err(err)
}

/// BALD score of every input.
#[pyfunction]
fn bald(probs: Vec<Vec<Vec<f64>>>) -> PyResult<Vec<f64>> {
    Ok(info::bald_scores(&tensor(probs)?))
}

/// Entropy of the mean prediction of every input.
#[pyfunction]
fn predictive_entropy(probs: Vec<Vec<Vec<f64>>>) -> PyResult<Vec<f64>> {
    Ok(info::predictive_entropies(&tensor(probs)?))
}

/// Joint mutual information of a batch, exact up to the enumeration cap.
#[pyfunction]
fn batchbald(probs: Vec<Vec<Vec<f64>>>, batch: Vec<usize>) -> PyResult<f64> {
    info::batchbald_score(&tensor(probs)?, &batch, JointMode::exact()).map_err(err)
}

/// EPIG-BALD from a teacher tensor and conditioned tensors (uniform weights).
/// Returns `(scores, bald, conditional_bald)`.
#[pyfunction]
fn epig_bald(
    teacher: Vec<Vec<Vec<f64>>>,
    conditioned: Vec<Vec<Vec<Vec<f64>>>>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let conditioned = conditioned
        .into_iter()
        .map(tensor)
        .collect::<PyResult<Vec<_>>>()?;
    let s = epig::epig::epig_bald_scores(&tensor(teacher)?, &conditioned).map_err(err)?;
    Ok((s.scores, s.bald, s.conditional_bald))
}

#[pyfunction]
fn epig_entropy(
    teacher: Vec<Vec<Vec<f64>>>,
    conditioned: Vec<Vec<Vec<Vec<f64>>>>,
) -> PyResult<Vec<f64>> {
    let conditioned = conditioned
        .into_iter()
        .map(tensor)
        .collect::<PyResult<Vec<_>>>()?;
    epig::epig::epig_entropy_scores(&tensor(teacher)?, &conditioned).map_err(err)
}

/// Finite hypothesis space of logistic models with exact Bayes updates.
#[pyclass(name = "DiscreteModel")]
struct PyDiscreteModel(DiscreteBayesModel);

#[pymethods]
impl PyDiscreteModel {
    /// Every combination of the given weight values per dimension and bias values.
    #[staticmethod]
    fn logistic_grid(dim: usize, weights: Vec<f64>, biases: Vec<f64>) -> PyResult<Self> {
        DiscreteBayesModel::logistic_grid(dim, &weights, &biases)
            .map(Self)
            .map_err(err)
    }

    fn posterior(&self) -> Vec<f64> {
        self.0.posterior()
    }

    /// Predictive samples over `xs`, one row per hypothesis, plus the posterior weights.
    fn predict(&self, xs: Vec<Vec<f64>>) -> PyResult<(Vec<Vec<Vec<f64>>>, Vec<f64>)> {
        let ps = epig::models::discrete::discrete_predict(&self.0, &xs).map_err(err)?;
        Ok((ps.to_nested(), ps.weight_vec()))
    }

    /// Exact EPIG of a batch in its three forms: `(eval_side, candidate_side, bald_difference)`.
    fn exact_epig(
        &self,
        eval_x: Vec<Vec<f64>>,
        batch_x: Vec<Vec<f64>>,
    ) -> PyResult<(f64, f64, f64)> {
        let f =
            epig::epig::exact_epig_batch_forms(&self.0, &eval_x, &batch_x, DEFAULT_ENUMERATION_CAP)
                .map_err(err)?;
        Ok((f.eval_side, f.candidate_side, f.bald_difference))
    }
}

/// Parse and validate a TOML config; returns its digest.
#[pyfunction]
fn config_digest(text: &str) -> PyResult<String> {
    epig::config::parse_config_str(text)
        .map(|c| c.digest())
        .map_err(err)
}

/// Run every trial of a config and return `(rounds_csv, summary_csv)`.
#[pyfunction]
fn run(py: Python<'_>, text: &str) -> PyResult<(String, String)> {
    let config = epig::config::parse_config_str(text).map_err(err)?;
    let logs = py
        .detach(|| epig::sim::run_experiment(&config))
        .map_err(err)?;
    Ok((
        epig::report::rounds_csv(&logs).map_err(err)?,
        epig::report::summary_csv(&logs).map_err(err)?,
    ))
}

#[pymodule]
fn pyepig(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(bald, m)?)?;
    m.add_function(wrap_pyfunction!(predictive_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(batchbald, m)?)?;
    m.add_function(wrap_pyfunction!(epig_bald, m)?)?;
    m.add_function(wrap_pyfunction!(epig_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(config_digest, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_class::<PyDiscreteModel>()?;
    Ok(())
}

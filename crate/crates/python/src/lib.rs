//! Python bindings: dataset generation, algorithm runs and the two scores.

use ercot_core::data::io::write_dataset;
use ercot_core::harness::{resolve_dataset, run_runs, Algorithm, ExperimentConfig};
use ercot_core::metrics::{nmi_labels, rand_index_labels};
use ercot_core::EngineConfig;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: ercot_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Dataset as CSV text with header `t,sample_id,x1..xd[,label]`.
#[pyfunction]
#[pyo3(signature = (name, seed = 0))]
fn generate(name: &str, seed: u64) -> PyResult<String> {
    let data = resolve_dataset(name, seed).map_err(err)?;
    let mut buf = Vec::new();
    write_dataset(&data, &mut buf).map_err(err)?;
    String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Run an algorithm `runs` times (seeds `seed`, `seed + 1`, ...).
///
/// Returns one dict per run with `seed`, `partitions` (per time, a list of
/// `(sample_id, cluster)`), `alphas`, `n_clusters` and, for labelled data,
/// `m_ri` and `m_nmi`.
#[pyfunction]
#[pyo3(signature = (
    dataset, algorithm = "ercot", seed = 0, runs = 1, data_seed = 0, pop = 100, cmax = 8,
    budget = 1000, reinit_p = 0.8, cx_rate = 0.9, mut_rate = 0.9, mut_eta = 20.0,
    cv_folds = 500, k = None, alpha = 0.5
))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    dataset: &str,
    algorithm: &str,
    seed: u64,
    runs: usize,
    data_seed: u64,
    pop: usize,
    cmax: usize,
    budget: usize,
    reinit_p: f64,
    cx_rate: f64,
    mut_rate: f64,
    mut_eta: f64,
    cv_folds: usize,
    k: Option<usize>,
    alpha: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = ExperimentConfig {
        dataset: dataset.to_string(),
        data_seed,
        algorithm: algorithm.parse::<Algorithm>().map_err(err)?,
        engine: EngineConfig {
            population: pop,
            c_max: cmax,
            budget,
            reinit_fraction: reinit_p,
            crossover_rate: cx_rate,
            mutation_rate: mut_rate,
            mutation_eta: mut_eta,
            seed,
            cv_folds,
        },
        runs,
        k,
        alpha,
        ..ExperimentConfig::default()
    };
    cfg.validate().map_err(err)?;
    let data = resolve_dataset(dataset, data_seed).map_err(err)?;
    let exp = py.detach(|| run_runs(&data, &cfg)).map_err(err)?;
    exp.results
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let d = PyDict::new(py);
            d.set_item("seed", r.seed)?;
            let parts: Vec<Vec<(u64, usize)>> = r.partitions().iter().map(|p| p.iter().collect()).collect();
            d.set_item("partitions", parts)?;
            d.set_item("alphas", r.alphas())?;
            d.set_item("n_clusters", r.n_clusters())?;
            if let Some(s) = exp.scores.as_ref().map(|s| &s[i]) {
                d.set_item("m_ri", s.m_ri)?;
                d.set_item("m_nmi", s.m_nmi)?;
            }
            Ok(d)
        })
        .collect()
}

/// Rand index between two label sequences.
#[pyfunction]
fn rand_index(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    rand_index_labels(&a, &b).map_err(err)
}

/// Normalized mutual information (geometric mean) between two label sequences.
#[pyfunction]
fn nmi(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    nmi_labels(&a, &b).map_err(err)
}

#[pymodule]
fn ercot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    Ok(())
}

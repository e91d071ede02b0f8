use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use relsynth::coreset::{build_coreset, CoresetError, ProbeConfig};
use relsynth::eval::{self, BaselineConfig, ClassifierKind, EvalError};
use relsynth::experiment::{self, ExperimentError, RunConfig};
use relsynth::fidelity::{self, FidelityError};
use relsynth::pipeline::{gateway_for, run_pipeline, PipelineConfig, PipelineError};
use relsynth::stats;
use relsynth::tabular::{self, Benchmark, Schema, TabularError};
use thiserror::Error;

create_exception!(relsynth, RelsynthError, PyException);

#[derive(Debug, Error)]
pub enum BindingError {
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    Coreset(#[from] CoresetError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Fidelity(#[from] FidelityError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("bad JSON config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

impl From<BindingError> for PyErr {
    fn from(e: BindingError) -> PyErr {
        RelsynthError::new_err(e.to_string())
    }
}

type Result<T> = std::result::Result<T, BindingError>;

/// Parses an optional JSON object into a config type, falling back to defaults.
pub fn parse_config<T: serde::de::DeserializeOwned + Default>(json: Option<&str>) -> Result<T> {
    match json {
        Some(text) if !text.trim().is_empty() => Ok(serde_json::from_str(text)?),
        _ => Ok(T::default()),
    }
}

fn to_py(py: Python<'_>, json: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (json,))?.unbind())
}

/// A labelled table with a fixed schema.
#[pyclass(name = "Dataset", module = "relsynth")]
pub struct PyDataset {
    inner: tabular::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Draws `n` rows from a named synthetic benchmark.
    #[staticmethod]
    #[pyo3(signature = (name, n = 1000, seed = 0))]
    fn benchmark(name: &str, n: usize, seed: u64) -> PyResult<Self> {
        let which: Benchmark = name.parse().map_err(BindingError::from)?;
        Ok(Self {
            inner: tabular::generate_benchmark(which, n, seed).map_err(BindingError::from)?,
        })
    }

    /// Reads a CSV file. `schema` is a benchmark name or a schema as JSON.
    #[staticmethod]
    fn from_csv(path: &str, schema: &str) -> PyResult<Self> {
        let schema = resolve_schema(schema)?;
        Ok(Self {
            inner: tabular::load_csv(path, &schema).map_err(BindingError::from)?,
        })
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        self.inner.schema().names().map(str::to_string).collect()
    }

    #[getter]
    fn classes(&self) -> Vec<String> {
        self.inner.schema().classes().to_vec()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.schema().label().to_string()
    }

    fn labels(&self) -> Vec<usize> {
        self.inner.labels()
    }

    /// Values of a numeric attribute.
    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let schema = self.inner.schema();
        match schema.index_of(name) {
            Some(j) if schema.attribute(j).is_numeric() => Ok(self.inner.column(j)),
            Some(_) => Err(BindingError::Invalid(format!("'{name}' is not numeric")).into()),
            None => Err(BindingError::Invalid(format!("no attribute '{name}'")).into()),
        }
    }

    fn class_counts(&self) -> Vec<(String, usize)> {
        let s = tabular::class_stats(&self.inner);
        s.classes.into_iter().zip(s.counts).collect()
    }

    fn schema_json(&self) -> String {
        serde_json::to_string(self.inner.schema()).expect("serializable")
    }

    fn to_csv(&self) -> String {
        tabular::to_csv_string(&self.inner)
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        experiment::write_file(path.as_ref(), &self.to_csv()).map_err(BindingError::from)?;
        Ok(())
    }

    /// Stratified split into (train, test).
    #[pyo3(signature = (train_fraction = 0.8, seed = 0))]
    fn split(&self, train_fraction: f64, seed: u64) -> PyResult<(Self, Self)> {
        let (a, b) = tabular::train_test_split(&self.inner, train_fraction, seed).map_err(BindingError::from)?;
        Ok((Self { inner: a }, Self { inner: b }))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(rows={}, attributes={}, classes={:?})",
            self.inner.len(),
            self.inner.schema().len(),
            self.inner.schema().classes()
        )
    }
}

fn resolve_schema(spec: &str) -> Result<Schema> {
    if spec.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(spec)?);
    }
    Ok(tabular::benchmark_schema(spec.parse()?))
}

#[pyfunction]
fn benchmark_names() -> Vec<&'static str> {
    Benchmark::ALL.iter().map(|b| b.name()).collect()
}

#[pyfunction]
fn ks_statistic(a: Vec<f64>, b: Vec<f64>) -> Option<f64> {
    stats::ks_statistic(&a, &b)
}

/// Binned KL divergence of real against synthetic values, in nats.
#[pyfunction]
#[pyo3(signature = (real, synth, bins = 50))]
fn kl_divergence(real: Vec<f64>, synth: Vec<f64>, bins: usize) -> PyResult<f64> {
    Ok(fidelity::kl_divergence_binned(&real, &synth, bins).map_err(BindingError::from)?)
}

/// Per-attribute KL and correlation-matrix differences as a dict.
#[pyfunction(name = "fidelity")]
#[pyo3(signature = (real, synth, bins = 50))]
fn fidelity_py(py: Python<'_>, real: &PyDataset, synth: &PyDataset, bins: usize) -> PyResult<Py<PyAny>> {
    let r = fidelity::fidelity_report(&real.inner, &synth.inner, bins).map_err(BindingError::from)?;
    to_py(py, &r.to_json())
}

#[pyfunction]
fn classification_metrics(
    py: Python<'_>,
    y_true: Vec<usize>,
    y_pred: Vec<usize>,
    n_classes: usize,
    minority: usize,
) -> PyResult<Py<PyAny>> {
    let r = eval::classification_metrics(&y_true, &y_pred, n_classes, minority).map_err(BindingError::from)?;
    to_py(py, &serde_json::to_string(&r).expect("serializable"))
}

/// Row indices of the core set, grouped by class in schema order.
#[pyfunction]
#[pyo3(signature = (train, k = 100, probe = None))]
fn select_coreset(train: &PyDataset, k: usize, probe: Option<&str>) -> PyResult<Vec<Vec<usize>>> {
    let cfg: ProbeConfig = parse_config(probe)?;
    let (core, _) = build_coreset(&train.inner, &cfg, k).map_err(BindingError::from)?;
    Ok(core.per_class)
}

/// Runs the generation loop on `train`. `config` is a pipeline config as JSON.
/// Returns the synthetic rows and the run report.
#[pyfunction]
#[pyo3(signature = (train, config = None))]
fn synthesize(py: Python<'_>, train: &PyDataset, config: Option<&str>) -> PyResult<(PyDataset, Py<PyAny>)> {
    let cfg: PipelineConfig = parse_config(config)?;
    let report = py
        .detach(|| -> Result<_> {
            let mut gw = gateway_for(&cfg)?;
            Ok(run_pipeline(&train.inner, cfg, &mut gw)?)
        })?;
    let json = report.to_json();
    Ok((PyDataset { inner: report.synthetic }, to_py(py, &json)?))
}

/// Original-vs-augmented baseline metrics as a dict.
#[pyfunction]
#[pyo3(signature = (train, synth, test, kinds = vec!["logistic".to_string(), "knn".to_string()], seeds = vec![0, 1, 2, 3, 4]))]
fn evaluate(
    py: Python<'_>,
    train: &PyDataset,
    synth: &PyDataset,
    test: &PyDataset,
    kinds: Vec<String>,
    seeds: Vec<u64>,
) -> PyResult<Py<PyAny>> {
    let kinds = kinds
        .iter()
        .map(|k| k.parse::<ClassifierKind>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| BindingError::Invalid(e.to_string()))?;
    let table = eval::evaluate_augmentation(
        &train.inner,
        &synth.inner,
        &test.inner,
        &kinds,
        &seeds,
        None,
        &BaselineConfig::default(),
    )
    .map_err(BindingError::from)?;
    to_py(py, &table.to_json())
}

/// Full run from a JSON run config; writes artifacts and returns the manifest.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str) -> PyResult<Py<PyAny>> {
    let cfg: RunConfig = parse_config(Some(config))?;
    let outcome = py.detach(|| experiment::run_all(&cfg, false)).map_err(BindingError::from)?;
    to_py(py, &serde_json::to_string(&outcome.manifest).expect("serializable"))
}

#[pymodule]
#[pyo3(name = "relsynth")]
fn relsynth_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RelsynthError", m.py().get_type::<RelsynthError>())?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(benchmark_names, m)?)?;
    m.add_function(wrap_pyfunction!(ks_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity_py, m)?)?;
    m.add_function(wrap_pyfunction!(classification_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(select_coreset, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

//! Python bindings: datasets, training, scoring, metrics and claim checks.
//! Structured results cross the boundary as JSON-decoded Python objects.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use fairod_core::claimcheck::{verify_claim1, verify_claim2};
use fairod_core::dataset::{self, group_view, LabeledDataset};
use fairod_core::evalmetrics::{self, build_report, HmConvention, ReportInputs};
use fairod_core::losses::{self, Variant};
use fairod_core::numgrad::DenseMatrix;
use fairod_core::training::{self, TrainConfig, TrainedModel};

create_exception!(fairod, FairodError, PyException);

fn err(e: fairod_core::Error) -> PyErr {
    FairodError::new_err(e.to_string())
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| FairodError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    DenseMatrix::from_rows(&rows).map_err(err)
}

/// Rows with features, protected group ids and optional 0/1 labels.
#[pyclass(module = "fairod", skip_from_py_object)]
#[derive(Clone)]
pub struct Dataset {
    inner: LabeledDataset,
}

#[pymethods]
impl Dataset {
    #[new]
    #[pyo3(signature = (features, pv, labels=None, name="data"))]
    fn new(features: Vec<Vec<f64>>, pv: Vec<u32>, labels: Option<Vec<u8>>, name: &str) -> PyResult<Self> {
        let inner = LabeledDataset::new(name, matrix(features)?, pv, labels).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names.clone()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        (0..self.inner.len())
            .map(|r| self.inner.features.row(r).to_vec())
            .collect()
    }

    #[getter]
    fn pv(&self) -> Vec<u32> {
        self.inner.pv.clone()
    }

    #[getter]
    fn labels(&self) -> Option<Vec<u8>> {
        self.inner.labels.clone()
    }

    /// Copy with the protected column replaced.
    fn with_pv(&self, pv: Vec<u32>) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_pv(pv).map_err(err)?,
        })
    }

    fn save_csv(&self, path: &str) -> PyResult<()> {
        dataset::save_csv(&self.inner, path).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(name={:?}, n_rows={}, dim={})",
            self.inner.name,
            self.inner.len(),
            self.inner.dim()
        )
    }
}

/// A trained detector. Scoring takes raw feature rows only.
#[pyclass(module = "fairod", skip_from_py_object)]
#[derive(Clone)]
pub struct Model {
    inner: TrainedModel,
}

#[pymethods]
impl Model {
    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.fit.variant.as_str()
    }

    #[getter]
    fn init_seed(&self) -> u64 {
        self.inner.fit.init_seed
    }

    /// Scores of the training rows.
    #[getter]
    fn training_scores(&self) -> Vec<f64> {
        self.inner.fit.scores.clone()
    }

    /// Loss breakdown per epoch as a list of dicts.
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.fit.trace)
    }

    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.fit.config)
    }

    fn score(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.score_raw(&matrix(features)?).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: TrainedModel::from_json(text).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(variant={:?}, init_seed={}, epochs={})",
            self.variant(),
            self.inner.fit.init_seed,
            self.inner.fit.trace.len()
        )
    }
}

#[pyfunction]
fn make_synth1(n_major: usize, n_minor: usize, n_outlier: usize, seed: u64) -> PyResult<Dataset> {
    let inner = dataset::make_synth1(n_major, n_minor, n_outlier, seed).map_err(err)?;
    Ok(Dataset { inner })
}

#[pyfunction]
#[pyo3(signature = (n_major, n_minor, n_outlier, seed, x1_inlier_std=1.44))]
fn make_synth2(
    n_major: usize,
    n_minor: usize,
    n_outlier: usize,
    seed: u64,
    x1_inlier_std: f64,
) -> PyResult<Dataset> {
    let opts = dataset::Synth2Options { x1_inlier_std };
    let inner = dataset::make_synth2_with(n_major, n_minor, n_outlier, seed, opts).map_err(err)?;
    Ok(Dataset { inner })
}

#[pyfunction]
#[pyo3(signature = (path, pv_column="pv", label_column=None))]
fn load_csv(path: &str, pv_column: &str, label_column: Option<&str>) -> PyResult<Dataset> {
    let inner = dataset::load_csv(path, pv_column, label_column).map_err(err)?;
    Ok(Dataset { inner })
}

/// Trains base autoencoders from several seeds on standardized features and
/// keeps the best.
#[pyfunction]
#[pyo3(signature = (data, seed, epochs=1000, learning_rate=0.01, base_seeds=5, hidden_dim=None))]
fn train_base(
    data: &Dataset,
    seed: u64,
    epochs: usize,
    learning_rate: f64,
    base_seeds: usize,
    hidden_dim: Option<usize>,
) -> PyResult<Model> {
    let cfg = TrainConfig {
        variant: Variant::BaseOnly,
        seed,
        epochs,
        learning_rate,
        base_seeds,
        hidden_dim,
        ..TrainConfig::default()
    };
    let (x, standardizer) = dataset::standardize(&data.inner).map_err(err)?;
    let fit = training::select_base(&x, &cfg).map_err(err)?;
    Ok(Model {
        inner: TrainedModel {
            feature_names: data.inner.feature_names.clone(),
            standardizer,
            fit,
        },
    })
}

/// Trains a fairness-regularized model against a base model.
#[pyfunction]
#[pyo3(signature = (data, base, seed, variant="fairod", alpha=0.5, gamma=0.1, epochs=1000, learning_rate=0.01, c=50.0))]
#[allow(clippy::too_many_arguments)]
fn train_fair(
    data: &Dataset,
    base: &Model,
    seed: u64,
    variant: &str,
    alpha: f64,
    gamma: f64,
    epochs: usize,
    learning_rate: f64,
    c: f64,
) -> PyResult<Model> {
    let variant: Variant = variant.parse().map_err(err)?;
    let cfg = TrainConfig {
        variant,
        alpha,
        gamma,
        c,
        seed,
        epochs,
        learning_rate,
        ..TrainConfig::default()
    };
    let x = LabeledDataset {
        features: base.inner.standardizer.transform(&data.inner.features).map_err(err)?,
        ..data.inner.clone()
    };
    let fit = training::fit_fairod(&x, &base.inner.fit, &cfg).map_err(err)?;
    Ok(Model {
        inner: TrainedModel {
            feature_names: data.inner.feature_names.clone(),
            standardizer: base.inner.standardizer.clone(),
            fit,
        },
    })
}

/// Full evaluation report as a dict.
#[pyfunction]
#[pyo3(signature = (scores, pv, labels=None, base_scores=None, flag_fraction=0.05, literal_hm=false))]
fn evaluate<'py>(
    py: Python<'py>,
    scores: Vec<f64>,
    pv: Vec<u32>,
    labels: Option<Vec<u8>>,
    base_scores: Option<Vec<f64>>,
    flag_fraction: f64,
    literal_hm: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let report = build_report(ReportInputs {
        model: "python".into(),
        scores: &scores,
        pv: &pv,
        labels: labels.as_deref(),
        base_scores: base_scores.as_deref(),
        flag_fraction,
        k: None,
        hm_convention: if literal_hm {
            HmConvention::Literal
        } else {
            HmConvention::Standard
        },
        config: None,
    })
    .map_err(err)?;
    json_to_py(py, &report)
}

/// Ratio of the smaller to the larger group flag rate; `None` if undefined.
#[pyfunction]
#[pyo3(signature = (scores, pv, flag_fraction=0.05))]
fn fairness(scores: Vec<f64>, pv: Vec<u32>, flag_fraction: f64) -> PyResult<Option<f64>> {
    let flags = evalmetrics::flag_top_fraction(&scores, flag_fraction).map_err(err)?;
    Ok(evalmetrics::fairness_metric(&flags, &group_view(&pv)).value())
}

/// Statistical-parity loss and its gradient with respect to the scores.
#[pyfunction]
fn loss_sp(scores: Vec<f64>, pv: Vec<u32>) -> PyResult<(f64, Vec<f64>)> {
    let t = losses::loss_sp(&scores, &pv).map_err(err)?;
    Ok((t.value, t.grad))
}

/// Exhaustive check of both parity claims up to `max_n` rows.
#[pyfunction]
#[pyo3(signature = (max_n=10))]
fn verify_claims<'py>(py: Python<'py>, max_n: usize) -> PyResult<Bound<'py, PyAny>> {
    let verdicts = vec![
        verify_claim1(max_n).map_err(err)?,
        verify_claim2(max_n).map_err(err)?,
    ];
    json_to_py(py, &verdicts)
}

#[pymodule]
fn fairod(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FairodError", m.py().get_type::<FairodError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Dataset>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(make_synth1, m)?)?;
    m.add_function(wrap_pyfunction!(make_synth2, m)?)?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add_function(wrap_pyfunction!(train_base, m)?)?;
    m.add_function(wrap_pyfunction!(train_fair, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(fairness, m)?)?;
    m.add_function(wrap_pyfunction!(loss_sp, m)?)?;
    m.add_function(wrap_pyfunction!(verify_claims, m)?)?;
    Ok(())
}

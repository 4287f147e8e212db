//! Python bindings. Matrices cross the boundary as lists of rows.

use std::collections::BTreeMap;
use std::path::PathBuf;

use ndarray::Array2;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use balcmp_core::balancing::{self, BalancerSpec, Method};
use balcmp_core::compare;
use balcmp_core::data::{self, SimulationScenario, Source};
use balcmp_core::explain::{self, GridConstruction};
use balcmp_core::learners::{self, Family, LearnerSpec};
use balcmp_core::runner::{self, ExperimentConfig};
use balcmp_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<Array2<f64>> {
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    Array2::from_shape_vec((rows.len(), m), rows.concat()).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_rows(a: ndarray::ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

/// A continuous feature matrix with a binary 0/1 target.
#[pyclass(name = "Dataset", frozen, from_py_object)]
#[derive(Clone)]
struct PyDataset(data::Dataset);

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (features, target, feature_names=None, name="data"))]
    fn new(features: Vec<Vec<f64>>, target: Vec<u8>, feature_names: Option<Vec<String>>, name: &str) -> PyResult<Self> {
        let x = to_matrix(&features)?;
        let names = feature_names.unwrap_or_else(|| (1..=x.ncols()).map(|j| format!("x{j}")).collect());
        data::Dataset::new(name, x, names, target, Source::Derived).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, target="target"))]
    fn from_csv(path: PathBuf, target: &str) -> PyResult<Self> {
        data::load_csv(path, target).map(Self).map_err(py_err)
    }

    #[pyo3(signature = (path, target="target"))]
    fn to_csv(&self, path: PathBuf, target: &str) -> PyResult<()> {
        data::write_csv(&self.0, path, target, None).map_err(py_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.0.feature_names().to_vec()
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.0.n_rows()
    }

    #[getter]
    fn n_cols(&self) -> usize {
        self.0.n_cols()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        to_rows(self.0.features())
    }

    fn target(&self) -> Vec<u8> {
        self.0.target().to_vec()
    }

    fn class_counts(&self) -> (usize, usize) {
        let [a, b] = self.0.class_counts();
        (a, b)
    }

    fn imbalance_ratio(&self) -> f64 {
        self.0.summarize().imbalance_ratio
    }

    /// Stratified (train, test) split.
    #[pyo3(signature = (test_fraction=0.2, seed=0))]
    fn split(&self, test_fraction: f64, seed: u64) -> PyResult<(Self, Self)> {
        let s = data::stratified_split(&self.0, test_fraction, seed).map_err(py_err)?;
        Ok((Self(s.train), Self(s.test)))
    }

    fn __repr__(&self) -> String {
        let [a, b] = self.0.class_counts();
        format!("Dataset({:?}, rows={}, cols={}, classes=({a}, {b}))", self.0.name(), self.0.n_rows(), self.0.n_cols())
    }
}

/// Output of a balancing call.
#[pyclass(name = "BalancedDataset", frozen, get_all)]
struct PyBalanced {
    data: PyDataset,
    synthetic_mask: Vec<bool>,
    links_removed: usize,
    warnings: Vec<String>,
}

#[pyfunction]
#[pyo3(signature = (dataset, method, seed=0, k_neighbors=None, m_neighbors=None, near_miss_k=None, standardize=false))]
fn balance(
    dataset: &PyDataset,
    method: &str,
    seed: u64,
    k_neighbors: Option<usize>,
    m_neighbors: Option<usize>,
    near_miss_k: Option<usize>,
    standardize: bool,
) -> PyResult<PyBalanced> {
    let method: Method = method.parse().map_err(py_err)?;
    let mut spec = BalancerSpec::new(method).with_seed(seed);
    spec.k_neighbors = k_neighbors.unwrap_or(spec.k_neighbors);
    spec.m_neighbors = m_neighbors.unwrap_or(spec.m_neighbors);
    spec.near_miss_k = near_miss_k.unwrap_or(spec.near_miss_k);
    spec.standardize = standardize;
    let b = balancing::balance(&dataset.0, &spec).map_err(py_err)?;
    Ok(PyBalanced {
        data: PyDataset(b.data),
        synthetic_mask: b.synthetic_mask,
        links_removed: b.links_removed,
        warnings: b.warnings,
    })
}

#[pyfunction]
#[pyo3(signature = (beta0, variance, n_samples=10_000, seed=0))]
fn simulate(beta0: f64, variance: f64, n_samples: usize, seed: u64) -> PyResult<PyDataset> {
    let s = SimulationScenario::new(beta0, variance, n_samples, seed).map_err(py_err)?;
    data::simulate(&s).map(PyDataset).map_err(py_err)
}

/// A trained classifier.
#[pyclass(name = "Model", frozen)]
struct PyModel(learners::TrainedModel);

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        learners::load_model(&path).map(Self).map_err(py_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        learners::save_model(&self.0, &path).map_err(py_err)
    }

    #[getter]
    fn id(&self) -> String {
        self.0.id().to_string()
    }

    #[getter]
    fn family(&self) -> String {
        self.0.spec.family.to_string()
    }

    #[getter]
    fn hyperparameters(&self) -> BTreeMap<String, f64> {
        self.0.spec.resolved()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.0.feature_names.clone()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.0.warnings.clone()
    }

    fn predict_proba(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.0.predict_proba(to_matrix(&rows)?.view()).map_err(py_err)
    }

    #[pyo3(signature = (rows, threshold=0.5))]
    fn predict(&self, rows: Vec<Vec<f64>>, threshold: f64) -> PyResult<Vec<u8>> {
        self.0.predict_label(to_matrix(&rows)?.view(), threshold).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Model({:?})", self.0.id())
    }
}

#[pyfunction]
#[pyo3(signature = (dataset, family, seed=0, hyperparameters=None))]
fn train(dataset: &PyDataset, family: &str, seed: u64, hyperparameters: Option<BTreeMap<String, f64>>) -> PyResult<PyModel> {
    let family: Family = family.parse().map_err(py_err)?;
    let spec = LearnerSpec::new(family, hyperparameters.unwrap_or_default(), seed).map_err(py_err)?;
    learners::train(&spec, &dataset.0).map(PyModel).map_err(py_err)
}

/// A PDP or ALE curve.
#[pyclass(name = "Profile", frozen, from_py_object)]
#[derive(Clone)]
struct PyProfile(explain::Profile);

#[pymethods]
impl PyProfile {
    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind.as_str()
    }

    #[getter]
    fn variable(&self) -> String {
        self.0.variable.clone()
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.0.grid.points.clone()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values.clone()
    }

    #[getter]
    fn model_id(&self) -> String {
        self.0.model_id.clone()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.0.warnings.clone()
    }

    fn __len__(&self) -> usize {
        self.0.values.len()
    }
}

#[pyfunction]
#[pyo3(signature = (model, background, variable, grid_k=explain::DEFAULT_GRID_POINTS, quantile=false))]
fn pdp(model: &PyModel, background: &PyDataset, variable: &str, grid_k: usize, quantile: bool) -> PyResult<PyProfile> {
    let construction = if quantile { GridConstruction::Quantile } else { GridConstruction::Uniform };
    let grid = explain::make_grid(&background.0, variable, grid_k, construction).map_err(py_err)?;
    explain::pdp(&model.0, &background.0, &grid).map(PyProfile).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (model, background, variable, n_bins=explain::DEFAULT_ALE_BINS))]
fn ale(model: &PyModel, background: &PyDataset, variable: &str, n_bins: usize) -> PyResult<PyProfile> {
    explain::ale(&model.0, &background.0, variable, n_bins).map(PyProfile).map_err(py_err)
}

/// Returns `(variables, mean, raw)` where `raw` has one row per repeat.
#[pyfunction]
#[pyo3(signature = (model, background, repeats=explain::DEFAULT_VI_REPEATS, seed=0))]
fn permutation_importance(
    model: &PyModel,
    background: &PyDataset,
    repeats: usize,
    seed: u64,
) -> PyResult<(Vec<String>, Vec<f64>, Vec<Vec<f64>>)> {
    let vi = explain::permutation_importance(&model.0, &background.0, repeats, seed).map_err(py_err)?;
    Ok((vi.variables.clone(), vi.mean.clone(), to_rows(vi.raw.view())))
}

#[pyfunction]
fn sdd(p1: &PyProfile, p2: &PyProfile) -> PyResult<f64> {
    compare::sdd(&p1.0, &p2.0).map(|r| r.sdd).map_err(py_err)
}

#[pyfunction]
fn asdd(p1: Vec<PyProfile>, p2: Vec<PyProfile>) -> PyResult<f64> {
    let a: Vec<_> = p1.into_iter().map(|p| p.0).collect();
    let b: Vec<_> = p2.into_iter().map(|p| p.0).collect();
    compare::asdd(&a, &b).map(|r| r.asdd).map_err(py_err)
}

#[pyfunction]
fn balanced_accuracy(y_true: Vec<u8>, y_pred: Vec<u8>) -> PyResult<f64> {
    compare::balanced_accuracy(&y_true, &y_pred).map_err(py_err)
}

/// Returns `(statistic, p_value, exact)`.
#[pyfunction]
fn wilcoxon(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64, bool)> {
    let r = compare::wilcoxon_signed_rank(&x, &y).map_err(py_err)?;
    Ok((r.statistic, r.p_value, r.exact))
}

#[pyfunction]
fn fdr_adjust(p_values: Vec<f64>) -> PyResult<Vec<f64>> {
    compare::fdr_adjust(&p_values).map_err(py_err)
}

/// Run an experiment from a JSON config string. Returns one dictionary per
/// results row; failed cells carry `None` for their numbers.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str) -> PyResult<Vec<Py<PyDict>>> {
    let config = ExperimentConfig::from_json(config_json).map_err(py_err)?;
    let out = py.detach(|| runner::run(&config)).map_err(py_err)?;
    let mut rows = Vec::with_capacity(out.cells.len());
    for r in out.cells.iter().map(|c| c.row()) {
        let d = PyDict::new(py);
        d.set_item("dataset", r.dataset)?;
        d.set_item("model", r.model)?;
        d.set_item("method", r.method)?;
        d.set_item("asdd_pdp", r.asdd_pdp)?;
        d.set_item("asdd_ale", r.asdd_ale)?;
        d.set_item("ba_base", r.ba_base)?;
        d.set_item("ba_balanced", r.ba_balanced)?;
        d.set_item("vi_p", r.vi_p)?;
        d.set_item("vi_p_adjusted", r.vi_p_adjusted)?;
        d.set_item("vi_rejected", r.vi_rejected)?;
        d.set_item("gain", r.gain)?;
        d.set_item("failed", r.failed)?;
        d.set_item("warnings", r.warnings)?;
        rows.push(d.unbind());
    }
    Ok(rows)
}

#[pyfunction]
fn registry_csv() -> PyResult<String> {
    data::registry_csv().map_err(py_err)
}

#[pymodule]
fn balcmp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyBalanced>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(balance, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(pdp, m)?)?;
    m.add_function(wrap_pyfunction!(ale, m)?)?;
    m.add_function(wrap_pyfunction!(permutation_importance, m)?)?;
    m.add_function(wrap_pyfunction!(sdd, m)?)?;
    m.add_function(wrap_pyfunction!(asdd, m)?)?;
    m.add_function(wrap_pyfunction!(balanced_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon, m)?)?;
    m.add_function(wrap_pyfunction!(fdr_adjust, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(registry_csv, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

//! Python bindings. Curves and weights cross the boundary as plain lists.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use fdcore::bandwidth::VariantKind;
use fdcore::experiments::{Eta, ProcessSpec, RegressionSpec};
use fdcore::{
    BandwidthPlan, Dataset, EigenBasis, FitResult, Grid, Metric, PseudometricSpec, ReferenceCurve,
    RegularKernel,
};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: fdcore::Error) -> PyErr {
    match e {
        fdcore::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for fdcore::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(frozen, skip_from_py_object, name = "Grid", module = "fdreg")]
#[derive(Clone)]
struct PyGrid(Arc<Grid>);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(points: Vec<f64>) -> PyResult<Self> {
        Ok(Self(Arc::new(Grid::from_points(points).py()?)))
    }

    /// Equispaced grid with `intervals` intervals on [0, 1].
    #[staticmethod]
    #[pyo3(signature = (intervals = fdcore::DEFAULT_REFERENCE_INTERVALS))]
    fn uniform(intervals: usize) -> PyResult<Self> {
        Ok(Self(Arc::new(fdcore::make_uniform_grid(intervals).py()?)))
    }

    #[getter]
    fn points(&self) -> Vec<f64> {
        self.0.points().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.0.weights().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Grid(intervals={})", self.0.intervals())
    }
}

#[pyclass(frozen, skip_from_py_object, name = "Curve", module = "fdreg")]
#[derive(Clone)]
struct PyCurve(ReferenceCurve);

#[pymethods]
impl PyCurve {
    #[new]
    fn new(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self(ReferenceCurve::new(Arc::clone(&grid.0), values).py()?))
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(Arc::clone(self.0.grid()))
    }

    fn integral(&self) -> f64 {
        self.0.integral()
    }

    fn l2_norm(&self) -> f64 {
        fdcore::l2_norm(&self.0)
    }

    fn h1_norm(&self) -> PyResult<f64> {
        fdcore::h1_norm(&self.0).py()
    }

    fn __len__(&self) -> usize {
        self.0.values().len()
    }
}

#[pyclass(frozen, skip_from_py_object, name = "Dataset", module = "fdreg")]
#[derive(Clone)]
struct PyDataset(Dataset);

#[pymethods]
impl PyDataset {
    #[new]
    fn new(curves: Vec<PyRef<'_, PyCurve>>, responses: Vec<f64>) -> PyResult<Self> {
        let curves = curves.iter().map(|c| c.0.clone()).collect();
        Ok(Self(Dataset::new(curves, responses).py()?))
    }

    #[staticmethod]
    fn read(curves_path: PathBuf, responses_path: PathBuf) -> PyResult<Self> {
        Ok(Self(fdcore::io::read_dataset(&curves_path, &responses_path).py()?))
    }

    fn write(&self, curves_path: PathBuf, responses_path: PathBuf) -> PyResult<()> {
        fdcore::io::write_dataset(&curves_path, &responses_path, &self.0).py()
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(Arc::clone(self.0.grid()))
    }

    #[getter]
    fn curves(&self) -> Vec<PyCurve> {
        self.0.curves().iter().cloned().map(PyCurve).collect()
    }

    #[getter]
    fn responses(&self) -> Vec<f64> {
        self.0.responses().to_vec()
    }

    #[getter]
    fn meta(&self) -> BTreeMap<String, String> {
        self.0.meta().clone()
    }

    fn select(&self, rows: Vec<usize>) -> PyResult<Self> {
        Ok(Self(self.0.select(&rows).py()?))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(frozen, skip_from_py_object, name = "Kernel", module = "fdreg")]
#[derive(Clone)]
struct PyKernel(RegularKernel);

fn kernel_by_name(name: &str) -> PyResult<RegularKernel> {
    match name {
        "uniform" => Ok(fdcore::uniform_kernel()),
        "shifted_linear" => Ok(fdcore::shifted_linear_kernel()),
        other => Err(PyValueError::new_err(format!(
            "unknown kernel {other:?}; expected \"uniform\" or \"shifted_linear\""
        ))),
    }
}

fn kernel_or_default(k: Option<&PyKernel>) -> RegularKernel {
    k.map_or_else(fdcore::uniform_kernel, |k| k.0.clone())
}

#[pymethods]
impl PyKernel {
    #[new]
    #[pyo3(signature = (name = "uniform"))]
    fn new(name: &str) -> PyResult<Self> {
        Ok(Self(kernel_by_name(name)?))
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn c1(&self) -> f64 {
        self.0.c1()
    }

    #[getter]
    fn c2(&self) -> f64 {
        self.0.c2()
    }

    fn __call__(&self, u: f64) -> f64 {
        self.0.evaluate(u)
    }
}

#[pyclass(frozen, skip_from_py_object, name = "EigenBasis", module = "fdreg")]
#[derive(Clone)]
struct PyEigenBasis(Arc<EigenBasis>);

#[pymethods]
impl PyEigenBasis {
    /// Leading `rank` eigenpairs of the sample covariance operator.
    #[staticmethod]
    fn empirical(data: &PyDataset, rank: usize) -> PyResult<Self> {
        Ok(Self(Arc::new(fdcore::empirical_basis(&data.0, rank).py()?)))
    }

    #[staticmethod]
    #[pyo3(signature = (path, grid, mean = None))]
    fn read(path: PathBuf, grid: &PyGrid, mean: Option<&PyCurve>) -> PyResult<Self> {
        let mean = mean.map(|m| m.0.clone());
        Ok(Self(Arc::new(
            fdcore::io::read_basis(&path, Arc::clone(&grid.0), mean).py()?,
        )))
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        fdcore::io::write_basis(&path, &self.0).py()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues().to_vec()
    }

    #[getter]
    fn eigenfunctions(&self) -> Vec<PyCurve> {
        self.0.eigenfunctions().iter().cloned().map(PyCurve).collect()
    }

    fn scores(&self, x: &PyCurve, p: usize) -> PyResult<Vec<f64>> {
        Ok(fdcore::scores(&x.0, &self.0, p).py()?.0)
    }

    fn tail_sum(&self, p: usize) -> PyResult<f64> {
        fdcore::tail_sum(&self.0, p).py()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(frozen, skip_from_py_object, name = "Pseudometric", module = "fdreg")]
#[derive(Clone)]
struct PyPseudometric(PseudometricSpec);

#[pymethods]
impl PyPseudometric {
    #[staticmethod]
    fn discretize(p: usize) -> PyResult<Self> {
        Ok(Self(PseudometricSpec::discretize(p).py()?))
    }

    /// Kernel smoother of the p coarse values; `h` defaults to 1/p.
    #[staticmethod]
    #[pyo3(signature = (p, h = None, kernel = None))]
    fn smooth(p: usize, h: Option<f64>, kernel: Option<&PyKernel>) -> PyResult<Self> {
        Ok(Self(PseudometricSpec::smooth(p, h, kernel_or_default(kernel)).py()?))
    }

    #[staticmethod]
    fn eigen(p: usize, basis: &PyEigenBasis) -> PyResult<Self> {
        Ok(Self(PseudometricSpec::eigen(p, Arc::clone(&basis.0)).py()?))
    }

    #[getter]
    fn p(&self) -> usize {
        self.0.p()
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.0.variant_name()
    }

    fn distance(&self, a: &PyCurve, b: &PyCurve) -> PyResult<f64> {
        fdcore::pseudo_distance(&a.0, &b.0, &self.0).py()
    }

    fn reconstruct(&self, x: &PyCurve) -> PyResult<PyCurve> {
        Ok(PyCurve(fdcore::reconstruct(&x.0, &self.0).py()?))
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

fn metric_of(m: Option<&PyPseudometric>) -> Metric {
    m.map_or(Metric::Full, |s| Metric::Pseudo(s.0.clone()))
}

#[pyclass(frozen, skip_from_py_object, name = "BandwidthPlan", module = "fdreg", get_all)]
#[derive(Clone, Copy)]
struct PyPlan {
    h_star: f64,
    c_np: f64,
    #[pyo3(name = "C")]
    c: f64,
    h_n: f64,
    h_np: f64,
}

impl From<BandwidthPlan> for PyPlan {
    fn from(p: BandwidthPlan) -> Self {
        Self {
            h_star: p.h_star,
            c_np: p.c_np,
            c: p.c,
            h_n: p.h_n,
            h_np: p.h_np,
        }
    }
}

impl PyPlan {
    fn plan(&self) -> BandwidthPlan {
        BandwidthPlan {
            h_star: self.h_star,
            c_np: self.c_np,
            c: self.c,
            h_n: self.h_n,
            h_np: self.h_np,
        }
    }
}

#[pymethods]
impl PyPlan {
    fn __repr__(&self) -> String {
        format!(
            "BandwidthPlan(h_star={}, c_np={}, C={}, h_n={}, h_np={})",
            self.h_star, self.c_np, self.c, self.h_n, self.h_np
        )
    }
}

#[pyclass(frozen, skip_from_py_object, name = "Fit", module = "fdreg", get_all)]
struct PyFit {
    prediction: f64,
    weights: Vec<f64>,
    effective_neighbors: usize,
    plan: PyPlan,
}

impl From<FitResult> for PyFit {
    fn from(f: FitResult) -> Self {
        Self {
            prediction: f.prediction,
            weights: f.weights.0,
            effective_neighbors: f.effective_neighbors,
            plan: f.plan.into(),
        }
    }
}

#[pyfunction]
fn l2_distance(a: &PyCurve, b: &PyCurve) -> PyResult<f64> {
    fdcore::l2_distance(&a.0, &b.0).py()
}

#[pyfunction]
#[pyo3(signature = (x, data, h, kernel = None, metric = None))]
fn kernel_weights(
    x: &PyCurve,
    data: &PyDataset,
    h: f64,
    kernel: Option<&PyKernel>,
    metric: Option<&PyPseudometric>,
) -> PyResult<Vec<f64>> {
    let w = fdcore::kernel_weights(&x.0, &data.0, h, &kernel_or_default(kernel), &metric_of(metric)).py()?;
    Ok(w.0)
}

#[pyfunction]
#[pyo3(signature = (x, data, h, kernel = None))]
fn predict_full(x: &PyCurve, data: &PyDataset, h: f64, kernel: Option<&PyKernel>) -> PyResult<PyFit> {
    Ok(fdcore::predict_full(&x.0, &data.0, h, &kernel_or_default(kernel)).py()?.into())
}

/// k defaults to ⌈√n⌉.
#[pyfunction]
#[pyo3(signature = (x, data, k = None, kernel = None))]
fn predict_knn(x: &PyCurve, data: &PyDataset, k: Option<usize>, kernel: Option<&PyKernel>) -> PyResult<PyFit> {
    let k = k.unwrap_or_else(|| fdcore::default_k(data.0.len()));
    Ok(fdcore::predict_knn(&x.0, &data.0, k, &kernel_or_default(kernel)).py()?.into())
}

#[pyfunction]
#[pyo3(signature = (x, data, metric, plan, kernel = None))]
fn predict_discretized(
    x: &PyCurve,
    data: &PyDataset,
    metric: &PyPseudometric,
    plan: &PyPlan,
    kernel: Option<&PyKernel>,
) -> PyResult<PyFit> {
    let fit = fdcore::predict_discretized(&x.0, &data.0, &metric.0, plan.plan(), &kernel_or_default(kernel));
    Ok(fit.py()?.into())
}

#[pyfunction]
#[pyo3(signature = (h_star, c_np, C = 1.0))]
#[allow(non_snake_case)]
fn build_plan(h_star: f64, c_np: f64, C: f64) -> PyResult<PyPlan> {
    Ok(fdcore::build_plan(h_star, c_np, C).py()?.into())
}

#[pyfunction]
#[pyo3(signature = (x, data, metric = None))]
fn empirical_h_star(x: &PyCurve, data: &PyDataset, metric: Option<&PyPseudometric>) -> PyResult<f64> {
    fdcore::empirical_h_star(&x.0, &data.0, &metric_of(metric)).py()
}

#[pyfunction]
#[pyo3(signature = (x, data, k, metric = None))]
fn knn_distance(x: &PyCurve, data: &PyDataset, k: usize, metric: Option<&PyPseudometric>) -> PyResult<f64> {
    fdcore::knn_distance(&x.0, &data.0, k, &metric_of(metric)).py()
}

fn variant_by_name(name: &str) -> PyResult<VariantKind> {
    match name {
        "discretize" => Ok(VariantKind::Discretize),
        "smooth" => Ok(VariantKind::Smooth),
        "eigen" => Ok(VariantKind::Eigen),
        other => Err(PyValueError::new_err(format!("unknown variant {other:?}"))),
    }
}

/// c_np from the shipped schedule for `variant`, times `scale`.
#[pyfunction]
#[pyo3(signature = (variant, n, p, scale = 1.0, basis = None))]
fn cnp(variant: &str, n: usize, p: usize, scale: f64, basis: Option<&PyEigenBasis>) -> PyResult<f64> {
    let basis = basis.map(|b| Arc::clone(&b.0));
    let schedule = fdcore::cnp_schedule_scaled(variant_by_name(variant)?, basis, scale).py()?;
    schedule.value(n, p).py()
}

fn eta_by_name(name: &str, value: f64) -> PyResult<Eta> {
    match name {
        "integral_mean" => Ok(Eta::IntegralMean),
        "squared_norm" => Ok(Eta::SquaredNorm),
        "sine_of_integral" => Ok(Eta::SineOfIntegral),
        "constant" => Ok(Eta::Constant { value }),
        other => Err(PyValueError::new_err(format!("unknown eta {other:?}"))),
    }
}

/// Draws n (curve, response) pairs. `process` is "brownian" or
/// "smooth_fourier"; `eta_value` is only read for the constant η.
#[pyfunction]
#[pyo3(signature = (
    n, grid, process = "brownian", eta = "integral_mean", noise_sd = 0.0, seed = 0,
    modes = 20, decay = 1.0, eta_value = 0.0
))]
#[allow(clippy::too_many_arguments)]
fn generate(
    n: usize,
    grid: &PyGrid,
    process: &str,
    eta: &str,
    noise_sd: f64,
    seed: u64,
    modes: usize,
    decay: f64,
    eta_value: f64,
) -> PyResult<PyDataset> {
    let spec = match process {
        "brownian" => ProcessSpec::brownian(seed),
        "smooth_fourier" => ProcessSpec::smooth_fourier(modes, decay, seed).py()?,
        other => return Err(PyValueError::new_err(format!("unknown process {other:?}"))),
    };
    let reg = RegressionSpec::new(eta_by_name(eta, eta_value)?, noise_sd).py()?;
    Ok(PyDataset(fdcore::generate(&spec, &reg, n, Arc::clone(&grid.0)).py()?))
}

#[pyfunction]
fn default_k(n: usize) -> usize {
    fdcore::default_k(n)
}

#[pyfunction]
fn h_star_neighbors(n: usize) -> usize {
    fdcore::h_star_neighbors(n)
}

#[pymodule]
#[pyo3(name = "fdreg")]
fn fdreg_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("DEFAULT_REFERENCE_INTERVALS", fdcore::DEFAULT_REFERENCE_INTERVALS)?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyCurve>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PyEigenBasis>()?;
    m.add_class::<PyPseudometric>()?;
    m.add_class::<PyPlan>()?;
    m.add_class::<PyFit>()?;
    m.add_function(wrap_pyfunction!(l2_distance, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_weights, m)?)?;
    m.add_function(wrap_pyfunction!(predict_full, m)?)?;
    m.add_function(wrap_pyfunction!(predict_knn, m)?)?;
    m.add_function(wrap_pyfunction!(predict_discretized, m)?)?;
    m.add_function(wrap_pyfunction!(build_plan, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_h_star, m)?)?;
    m.add_function(wrap_pyfunction!(knn_distance, m)?)?;
    m.add_function(wrap_pyfunction!(cnp, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(default_k, m)?)?;
    m.add_function(wrap_pyfunction!(h_star_neighbors, m)?)?;
    Ok(())
}

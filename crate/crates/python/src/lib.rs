//! Python module `despeckle_rs`: grayscale grids, solver parameters,
//! speckle synthesis, the solvers, metrics and PGM I/O.

use pyo3::exceptions::{PyIOError, PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use despeckle::experiment::apply_param;
use despeckle::phantom::Phantom;
use despeckle::solver::default_dt;
use despeckle::{presets, Error, Model, NoiseSpec, SsimConfig};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Divergence { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Row-major grayscale image with its nominal intensity range.
#[pyclass(name = "ImageGrid", module = "despeckle_rs", skip_from_py_object)]
#[derive(Clone)]
pub struct PyImageGrid {
    inner: despeckle::ImageGrid,
}

#[pymethods]
impl PyImageGrid {
    #[new]
    #[pyo3(signature = (width, height, data, range_max = 255.0))]
    fn new(width: usize, height: usize, data: Vec<f64>, range_max: f64) -> PyResult<Self> {
        let inner = despeckle::ImageGrid::new(width, height, data, range_max).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Builds a grid from a list of equal-length rows.
    #[staticmethod]
    #[pyo3(signature = (rows, range_max = 255.0))]
    fn from_rows(rows: Vec<Vec<f64>>, range_max: f64) -> PyResult<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(PyValueError::new_err("rows have different lengths"));
        }
        Self::new(width, height, rows.concat(), range_max)
    }

    /// Synthetic test image: `parrots`, `texture` or `blocks`.
    #[staticmethod]
    #[pyo3(signature = (kind, size = 256, seed = 7))]
    fn phantom(kind: &str, size: usize, seed: u64) -> PyResult<Self> {
        let p: Phantom = kind.parse().map_err(py_err)?;
        Ok(Self { inner: p.render(size, seed).map_err(py_err)? })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn range_max(&self) -> f64 {
        self.inner.range_max()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.inner.height() || j >= self.inner.width() {
            return Err(PyIndexError::new_err(format!("({i}, {j}) out of bounds")));
        }
        Ok(self.inner.get(i, j))
    }

    fn to_list(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.inner.data().chunks(self.inner.width()).map(<[f64]>::to_vec).collect()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn min(&self) -> f64 {
        self.inner.min()
    }

    fn max(&self) -> f64 {
        self.inner.max()
    }

    /// Copy with values clamped to `[0, range_max]`.
    fn clamped(&self) -> Self {
        Self { inner: self.inner.clamped() }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "ImageGrid(width={}, height={}, range_max={})",
            self.inner.width(),
            self.inner.height(),
            self.inner.range_max()
        )
    }
}

/// Solver settings. Keyword arguments use the config-file keys
/// (`alpha`, `k`, `gamma`, `lambda`, `weight_a`, `dt`, `tol`, `max_iters`, ...).
#[pyclass(name = "SolverParams", module = "despeckle_rs", skip_from_py_object)]
#[derive(Clone)]
pub struct PySolverParams {
    inner: despeckle::SolverParams,
}

#[pymethods]
impl PySolverParams {
    #[new]
    #[pyo3(signature = (model = "model1", preset = None, looks = None, **kwargs))]
    fn new(
        model: &str,
        preset: Option<&str>,
        looks: Option<u32>,
        kwargs: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<Self> {
        let model: Model = model.parse().map_err(py_err)?;
        let mut p = match preset {
            Some(image) => {
                let look = looks.ok_or_else(|| PyValueError::new_err("preset needs looks"))?;
                presets::lookup(image, model, look).map_err(py_err)?.params()
            }
            None => despeckle::SolverParams::for_model(model),
        };
        let mut dt_given = false;
        if let Some(kw) = kwargs {
            for (key, value) in kw.iter() {
                let key: String = key.extract()?;
                let value = value.str()?.to_string();
                dt_given |= key == "dt";
                if !apply_param(&mut p, &key, &value).map_err(py_err)? {
                    return Err(PyValueError::new_err(format!("unknown parameter {key:?}")));
                }
            }
        }
        if !dt_given {
            p.dt = default_dt(p.model, p.weight_a);
        }
        p.validate().map_err(py_err)?;
        Ok(Self { inner: p })
    }

    #[getter]
    fn model(&self) -> &'static str {
        self.inner.model.name()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn k(&self) -> f64 {
        self.inner.k
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn weight_a(&self) -> f64 {
        self.inner.weight_a
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn tol(&self) -> f64 {
        self.inner.tol
    }

    #[getter]
    fn max_iters(&self) -> usize {
        self.inner.max_iters
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "SolverParams(model={}, alpha={}, k={}, gamma={}, lambda={}, weight_a={}, dt={}, max_iters={})",
            p.model, p.alpha, p.k, p.gamma, p.lambda, p.weight_a, p.dt, p.max_iters
        )
    }
}

/// Multiplies `image` by L-look unit-mean gamma speckle.
#[pyfunction]
#[pyo3(signature = (image, looks, seed = 42))]
fn apply_speckle(image: &PyImageGrid, looks: u32, seed: u64) -> PyResult<PyImageGrid> {
    let spec = NoiseSpec::new(looks, seed).map_err(py_err)?;
    let inner = despeckle::apply_speckle(&image.inner, spec).map_err(py_err)?;
    Ok(PyImageGrid { inner })
}

/// Runs the solver. Returns `(restored, trace)` where `trace` is a dict with
/// `iterations`, `stop_reason`, `rel_changes` and, given a reference,
/// `psnr` and `mssim` per iteration.
#[pyfunction]
#[pyo3(signature = (noisy, params, reference = None))]
fn denoise<'py>(
    py: Python<'py>,
    noisy: &PyImageGrid,
    params: &PySolverParams,
    reference: Option<&PyImageGrid>,
) -> PyResult<(PyImageGrid, Bound<'py, PyDict>)> {
    let (f, p, r) = (noisy.inner.clone(), params.inner.clone(), reference.map(|r| r.inner.clone()));
    let (out, trace) = py
        .detach(move || despeckle::run_solver(&f, &p, r.as_ref()))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("iterations", trace.iterations)?;
    d.set_item("stop_reason", trace.stop_reason.as_str())?;
    d.set_item("rel_changes", trace.rel_changes)?;
    if let Some(v) = trace.psnr_per_iter {
        d.set_item("psnr", v)?;
    }
    if let Some(v) = trace.mssim_per_iter {
        d.set_item("mssim", v)?;
    }
    Ok((PyImageGrid { inner: out }, d))
}

#[pyfunction]
#[pyo3(signature = (reference, test, peak = None))]
fn psnr(reference: &PyImageGrid, test: &PyImageGrid, peak: Option<f64>) -> PyResult<f64> {
    let peak = peak.unwrap_or(reference.inner.range_max());
    despeckle::metrics::psnr_with_peak(&reference.inner, &test.inner, peak).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (reference, test, dynamic_range = None))]
fn mssim(reference: &PyImageGrid, test: &PyImageGrid, dynamic_range: Option<f64>) -> PyResult<f64> {
    let cfg = SsimConfig::for_range(dynamic_range.unwrap_or(reference.inner.range_max()));
    despeckle::mssim(&reference.inner, &test.inner, &cfg).map_err(py_err)
}

#[pyfunction]
fn speckle_index(image: &PyImageGrid) -> PyResult<f64> {
    despeckle::speckle_index(&image.inner).map_err(py_err)
}

#[pyfunction]
fn load_pgm(path: &str) -> PyResult<PyImageGrid> {
    Ok(PyImageGrid { inner: despeckle::load_pgm(path).map_err(py_err)? })
}

#[pyfunction]
fn save_pgm(image: &PyImageGrid, path: &str) -> PyResult<()> {
    despeckle::save_pgm(&image.inner, path).map_err(py_err)
}

#[pymodule]
fn despeckle_rs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImageGrid>()?;
    m.add_class::<PySolverParams>()?;
    m.add_function(wrap_pyfunction!(apply_speckle, m)?)?;
    m.add_function(wrap_pyfunction!(denoise, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(mssim, m)?)?;
    m.add_function(wrap_pyfunction!(speckle_index, m)?)?;
    m.add_function(wrap_pyfunction!(load_pgm, m)?)?;
    m.add_function(wrap_pyfunction!(save_pgm, m)?)?;
    m.add("MODELS", ["tdm", "tdfm", "model1", "model2"])?;
    Ok(())
}

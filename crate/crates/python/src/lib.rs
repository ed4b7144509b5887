//! Python bindings for `music-scatter`.
//!
//! Matrices and maps cross the boundary as nested lists; complex entries map
//! to Python `complex`.

use std::path::PathBuf;

use music_scatter::io::config::SceneFile;
use music_scatter::io::map_file::{map_to_csv, read_map_csv};
use music_scatter::io::msr_file::{msr_to_string, read_msr, write_msr};
use music_scatter::io::Provenance;
use music_scatter::scene::fresnel_mask;
use music_scatter::specfun;
use music_scatter::{self as core, Error, Vec2};
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Resonance { .. } | Error::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn point(p: (f64, f64)) -> Vec2 {
    Vec2::new(p.0, p.1)
}

fn parse_mode(s: &str) -> PyResult<core::ContrastMode> {
    match s {
        "permittivity" | "tm" => Ok(core::ContrastMode::Permittivity),
        "permeability" | "te" => Ok(core::ContrastMode::Permeability),
        _ => Err(PyValueError::new_err(format!("unknown contrast mode '{s}'"))),
    }
}

fn parse_side(s: &str) -> PyResult<core::Side> {
    match s {
        "left" => Ok(core::Side::Left),
        "right" => Ok(core::Side::Right),
        "both" => Ok(core::Side::Both),
        _ => Err(PyValueError::new_err(format!("unknown side '{s}'"))),
    }
}

fn parse_generator(s: &str) -> PyResult<core::Generator> {
    match s {
        "born" => Ok(core::Generator::Born),
        "foldy-lax" | "foldy_lax" => Ok(core::Generator::FoldyLax),
        _ => Err(PyValueError::new_err(format!("unknown generator '{s}'"))),
    }
}

fn parse_polarization(s: &str) -> PyResult<core::Polarization> {
    match s {
        "tm" => Ok(core::Polarization::Tm),
        "te" => Ok(core::Polarization::Te),
        _ => Err(PyValueError::new_err(format!("unknown polarization '{s}'"))),
    }
}

/// `"tm"`, `"te"` (xi along x), `"te-sweep"` or an angle in degrees as `"te:<deg>"`.
fn parse_family(s: &str) -> PyResult<core::TestFamily> {
    match s {
        "tm" => Ok(core::TestFamily::Tm),
        "te" => Ok(core::TestFamily::te_angle(0.0)),
        "te-sweep" => Ok(core::TestFamily::TeSweep),
        _ => {
            let deg = s
                .strip_prefix("te:")
                .and_then(|d| d.parse::<f64>().ok())
                .ok_or_else(|| PyValueError::new_err(format!("unknown test family '{s}'")))?;
            Ok(core::TestFamily::te_angle(deg))
        }
    }
}

#[pyclass(name = "Scene", module = "music_scatter_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyScene {
    inner: core::Scene,
}

#[pymethods]
impl PyScene {
    /// Three-disk scene used in the examples: contrast 5, radius 0.01 m.
    #[staticmethod]
    fn paper(mode: &str, frequency: f64) -> PyResult<Self> {
        let setup = core::paper_scene(parse_mode(mode)?, frequency, 3).map_err(to_py)?;
        Ok(PyScene { inner: setup.scene })
    }

    /// Disks given as `(x, y, radius, eps_rel, mu_rel)` in a vacuum background.
    #[staticmethod]
    fn disks(mode: &str, frequency: f64, disks: Vec<(f64, f64, f64, f64, f64)>) -> PyResult<Self> {
        let bg = core::Background::vacuum(frequency).map_err(to_py)?;
        let incs = disks
            .into_iter()
            .map(|(x, y, r, e, m)| {
                core::Inhomogeneity::new(Vec2::new(x, y), r, e * bg.epsilon_b, m * bg.mu_b)
            })
            .collect::<core::Result<Vec<_>>>()
            .map_err(to_py)?;
        let inner = core::Scene::new(bg, parse_mode(mode)?, incs).map_err(to_py)?;
        Ok(PyScene { inner })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let f = SceneFile::from_toml(text).map_err(to_py)?;
        Ok(PyScene { inner: f.scene })
    }

    fn to_toml(&self) -> PyResult<String> {
        SceneFile {
            scene: self.inner.clone(),
            grid: None,
        }
        .to_toml()
        .map_err(to_py)
    }

    fn at_frequency(&self, frequency: f64) -> PyResult<Self> {
        let inner = self.inner.at_frequency(frequency).map_err(to_py)?;
        Ok(PyScene { inner })
    }

    #[getter]
    fn wavenumber(&self) -> f64 {
        self.inner.wavenumber()
    }

    #[getter]
    fn frequency(&self) -> f64 {
        self.inner.background.frequency
    }

    #[getter]
    fn centers(&self) -> Vec<(f64, f64)> {
        self.inner.centers().iter().map(|c| (c.x, c.y)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scene({}, f={:e} Hz, {} inclusions)",
            self.inner.contrast_mode,
            self.inner.background.frequency,
            self.inner.inhomogeneities.len()
        )
    }
}

#[pyclass(name = "ArrayConfig", module = "music_scatter_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyArrayConfig {
    inner: core::ArrayConfig,
}

#[pymethods]
impl PyArrayConfig {
    /// `n` uniform directions, receivers opposite the transmitters.
    #[staticmethod]
    fn symmetric(n: usize) -> PyResult<Self> {
        let inner = core::ArrayConfig::symmetric(n).map_err(to_py)?;
        Ok(PyArrayConfig { inner })
    }

    /// 36 transmitters, 72 receivers, restricted receiver range.
    #[staticmethod]
    fn fresnel() -> Self {
        PyArrayConfig {
            inner: core::ArrayConfig::fresnel(),
        }
    }

    #[getter]
    fn n_transmitters(&self) -> usize {
        self.inner.n_transmitters()
    }

    #[getter]
    fn n_receivers(&self) -> usize {
        self.inner.n_receivers()
    }
}

#[pyclass(name = "MsrMatrix", module = "music_scatter_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMsrMatrix {
    inner: core::MsrMatrix,
}

#[pymethods]
impl PyMsrMatrix {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let (inner, _) = read_msr(&path).map_err(to_py)?;
        Ok(PyMsrMatrix { inner })
    }

    #[pyo3(signature = (path, seed=None))]
    fn write(&self, path: PathBuf, seed: Option<u64>) -> PyResult<()> {
        write_msr(&path, &self.inner, &Provenance::new("python", seed)).map_err(to_py)
    }

    fn to_text(&self) -> String {
        msr_to_string(&self.inner, &Provenance::new("python", None))
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    #[getter]
    fn frequency(&self) -> f64 {
        self.inner.frequency
    }

    #[getter]
    fn wavenumber(&self) -> f64 {
        self.inner.wavenumber
    }

    /// Rows are receivers, columns transmitters.
    fn entries(&self) -> Vec<Vec<Complex64>> {
        let m = &self.inner.entries;
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
            .collect()
    }

    fn mask(&self) -> Vec<Vec<bool>> {
        let (rows, cols) = self.inner.shape();
        (0..rows)
            .map(|r| (0..cols).map(|c| self.inner.mask.get(r, c)).collect())
            .collect()
    }

    fn strip_diagonal(&self) -> PyResult<Self> {
        let inner = core::strip_diagonal(&self.inner).map_err(to_py)?;
        Ok(PyMsrMatrix { inner })
    }

    fn apply_fresnel_mask(&self) -> PyResult<Self> {
        let inner = core::apply_mask(&self.inner, &fresnel_mask()).map_err(to_py)?;
        Ok(PyMsrMatrix { inner })
    }

    fn add_noise(&self, snr_db: f64, seed: u64) -> PyResult<Self> {
        let inner = core::add_noise(&self.inner, &core::NoiseSpec { snr_db, seed }).map_err(to_py)?;
        Ok(PyMsrMatrix { inner })
    }

    fn __repr__(&self) -> String {
        let (r, c) = self.inner.shape();
        format!("MsrMatrix({}, {r}x{c}, f={:e} Hz)", self.inner.kind.as_str(), self.inner.frequency)
    }
}

#[pyclass(name = "Decomposition", module = "music_scatter_py", frozen, skip_from_py_object)]
struct PyDecomposition {
    inner: core::SubspaceDecomposition,
}

#[pymethods]
impl PyDecomposition {
    #[getter]
    fn singular_values(&self) -> Vec<f64> {
        self.inner.singular_values.clone()
    }

    fn normalized_spectrum(&self) -> Vec<f64> {
        self.inner.normalized_spectrum()
    }

    /// Signal rank for a fixed `rank` or a relative `threshold`.
    #[pyo3(signature = (rank=None, threshold=None))]
    fn select_rank(&self, rank: Option<usize>, threshold: Option<f64>) -> PyResult<usize> {
        let policy = rank_policy(rank, threshold)?;
        core::select_signal_rank(&self.inner.singular_values, policy).map_err(to_py)
    }

    #[pyo3(signature = (half_width=0.1, n=256, family="tm", side="left", rank=None, threshold=None, peak_cap=1e6))]
    #[allow(clippy::too_many_arguments)]
    fn image(
        &self,
        py: Python<'_>,
        half_width: f64,
        n: usize,
        family: &str,
        side: &str,
        rank: Option<usize>,
        threshold: Option<f64>,
        peak_cap: f64,
    ) -> PyResult<PyImagingMap> {
        let grid = core::RoiGrid::square(half_width, n).map_err(to_py)?;
        let family = parse_family(family)?;
        let side = parse_side(side)?;
        let dec = self
            .inner
            .clone()
            .with_rank(rank_policy(rank, threshold)?)
            .map_err(to_py)?;
        let inner = py
            .detach(|| core::image_map(&dec, &grid, family, side, peak_cap))
            .map_err(to_py)?;
        Ok(PyImagingMap { inner })
    }
}

fn rank_policy(rank: Option<usize>, threshold: Option<f64>) -> PyResult<core::RankPolicy> {
    match (rank, threshold) {
        (Some(_), Some(_)) => Err(PyValueError::new_err("give rank or threshold, not both")),
        (Some(r), None) => Ok(core::RankPolicy::Fixed(r)),
        (None, Some(t)) => Ok(core::RankPolicy::Threshold(t)),
        (None, None) => Ok(core::RankPolicy::default()),
    }
}

#[pyclass(name = "ImagingMap", module = "music_scatter_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyImagingMap {
    inner: core::ImagingMap,
}

#[pymethods]
impl PyImagingMap {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let (inner, _) = read_map_csv(&path).map_err(to_py)?;
        Ok(PyImagingMap { inner })
    }

    /// Values as `values[j][i]`, row `j` along y.
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner
            .values
            .chunks(self.inner.grid.nx)
            .map(<[f64]>::to_vec)
            .collect()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.grid.ny, self.inner.grid.nx)
    }

    #[getter]
    fn signal_rank(&self) -> usize {
        self.inner.meta.signal_rank
    }

    /// Pixel `(i, j)` of the global maximum.
    fn argmax(&self) -> (usize, usize) {
        self.inner.argmax()
    }

    fn point(&self, i: usize, j: usize) -> (f64, f64) {
        let p = self.inner.grid.point(i, j);
        (p.x, p.y)
    }

    fn local_maxima(&self) -> Vec<(usize, usize)> {
        self.inner.local_maxima()
    }

    fn to_csv(&self) -> String {
        map_to_csv(&self.inner, &Provenance::new("python", None))
    }
}

#[pyfunction]
#[pyo3(signature = (scene, array, generator="born"))]
fn assemble_msr(scene: &PyScene, array: &PyArrayConfig, generator: &str) -> PyResult<PyMsrMatrix> {
    let inner = core::assemble_msr(&scene.inner, &array.inner, parse_generator(generator)?)
        .map_err(to_py)?;
    Ok(PyMsrMatrix { inner })
}

#[pyfunction]
fn decompose(py: Python<'_>, msr: &PyMsrMatrix) -> PyResult<PyDecomposition> {
    let inner = py.detach(|| core::decompose(&msr.inner)).map_err(to_py)?;
    Ok(PyDecomposition { inner })
}

/// Single-inclusion predicted map for the diagonal-free data.
#[pyfunction]
#[pyo3(signature = (n, wavenumber, center, polarization="tm", half_width=0.1, grid_n=256, peak_cap=1e6))]
fn predicted_map(
    n: usize,
    wavenumber: f64,
    center: (f64, f64),
    polarization: &str,
    half_width: f64,
    grid_n: usize,
    peak_cap: f64,
) -> PyResult<PyImagingMap> {
    let grid = core::RoiGrid::square(half_width, grid_n).map_err(to_py)?;
    let params = core::TheoryParams::new(n, wavenumber, point(center)).map_err(to_py)?;
    let inner = core::predicted_map(&grid, &params, parse_polarization(polarization)?, peak_cap)
        .map_err(to_py)?;
    Ok(PyImagingMap { inner })
}

/// Metrics on `1/F`: `(linf, l2_rel, correlation, pixels)`.
#[pyfunction]
#[pyo3(signature = (empirical, predicted, centers, exclusion_radius))]
fn compare_maps(
    empirical: &PyImagingMap,
    predicted: &PyImagingMap,
    centers: Vec<(f64, f64)>,
    exclusion_radius: f64,
) -> PyResult<(f64, f64, f64, usize)> {
    let centers: Vec<Vec2> = centers.into_iter().map(point).collect();
    let r = core::compare_maps(&empirical.inner, &predicted.inner, &centers, exclusion_radius)
        .map_err(to_py)?;
    Ok((r.linf, r.l2_rel, r.correlation, r.pixels))
}

#[pyfunction]
fn bessel_j(order: u32, x: f64) -> PyResult<f64> {
    specfun::bessel_j(order, x).map_err(to_py)
}

#[pyfunction]
fn hankel1(order: u32, x: f64) -> PyResult<Complex64> {
    specfun::hankel1(order, x).map_err(to_py)
}

#[pymodule]
fn music_scatter_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyScene>()?;
    m.add_class::<PyArrayConfig>()?;
    m.add_class::<PyMsrMatrix>()?;
    m.add_class::<PyDecomposition>()?;
    m.add_class::<PyImagingMap>()?;
    m.add_function(wrap_pyfunction!(assemble_msr, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_map, m)?)?;
    m.add_function(wrap_pyfunction!(compare_maps, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(hankel1, m)?)?;
    Ok(())
}

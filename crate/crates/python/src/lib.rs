//! Python bindings: meshes, synthetic humanoids, the virtual tailor, the
//! part-based shape model, the measurement map and silhouette regression.

use std::collections::BTreeMap;

use bodyshape::humanoid;
use bodyshape::mesh::{load_obj, save_obj};
use bodyshape::segmentation::PartSegmentation;
use bodyshape::semantic::{self, LinearMap, MappingDataset};
use bodyshape::shape_model::{self, BodyShapeModel, ShapeCoeffs};
use bodyshape::silhouette::{self, RegressorModel, SilhouetteFeatures, View};
use bodyshape::tailor::{self, MeasurementVector, TailorConfig, SLOTS, SLOT_COUNT};
use bodyshape::{PartLabel, TriMesh, Vec3};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn err(e: bodyshape::Error) -> PyErr {
    match e {
        bodyshape::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_dict(m: &MeasurementVector) -> BTreeMap<String, f64> {
    SLOTS.iter().zip(m.0).map(|(s, v)| (s.name.to_string(), v)).collect()
}

fn from_dict(values: &BTreeMap<String, f64>) -> PyResult<MeasurementVector> {
    let mut m = MeasurementVector([f64::NAN; SLOT_COUNT]);
    for (name, v) in values {
        m.set(name, *v).map_err(err)?;
    }
    Ok(m)
}

fn tailor_config(json: Option<&str>) -> PyResult<TailorConfig> {
    json.map_or(Ok(TailorConfig::default()), |t| TailorConfig::from_json(t).map_err(err))
}

/// A triangle mesh in millimetres.
#[pyclass(name = "Mesh", module = "bodyshape_py", from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: TriMesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> PyResult<Self> {
        let vertices = vertices.into_iter().map(|[x, y, z]| Vec3::new(x, y, z)).collect();
        Ok(PyMesh { inner: TriMesh::new(vertices, faces).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyMesh { inner: load_obj(path).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_obj(&self.inner, path).map_err(err)
    }

    #[getter]
    fn vertices(&self) -> Vec<[f64; 3]> {
        self.inner.vertices.iter().map(|v| [v.x, v.y, v.z]).collect()
    }

    #[getter]
    fn faces(&self) -> Vec<[usize; 3]> {
        self.inner.faces.clone()
    }

    fn is_watertight(&self) -> bool {
        self.inner.validate().is_watertight()
    }

    /// `((min_x, min_y, min_z), (max_x, max_y, max_z))`.
    fn bounds(&self) -> Option<([f64; 3], [f64; 3])> {
        self.inner.bounds().map(|(lo, hi)| ([lo.x, lo.y, lo.z], [hi.x, hi.y, hi.z]))
    }

    fn __len__(&self) -> usize {
        self.inner.vertex_count()
    }

    fn __repr__(&self) -> String {
        format!("Mesh({} vertices, {} faces)", self.inner.vertex_count(), self.inner.face_count())
    }
}

/// Vertex-to-part assignment with part interfaces.
#[pyclass(name = "Segmentation", module = "bodyshape_py", from_py_object)]
#[derive(Clone)]
struct PySegmentation {
    inner: PartSegmentation,
}

#[pymethods]
impl PySegmentation {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PySegmentation { inner: PartSegmentation::from_json(text).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PySegmentation { inner: bodyshape::segmentation::load_segmentation(path).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn parts(&self) -> Vec<String> {
        self.inner.labels().map(|l| l.to_string()).collect()
    }
}

/// A synthetic body with its segmentation and exact measurements.
#[pyclass(name = "Humanoid", module = "bodyshape_py", skip_from_py_object)]
struct PyHumanoid {
    #[pyo3(get)]
    mesh: PyMesh,
    #[pyo3(get)]
    segmentation: PySegmentation,
    truth: MeasurementVector,
    params: String,
}

#[pymethods]
impl PyHumanoid {
    #[getter]
    fn truth(&self) -> BTreeMap<String, f64> {
        to_dict(&self.truth)
    }

    #[getter]
    fn params_json(&self) -> String {
        self.params.clone()
    }
}

impl From<humanoid::Humanoid> for PyHumanoid {
    fn from(h: humanoid::Humanoid) -> Self {
        PyHumanoid {
            params: h.params.to_json(),
            mesh: PyMesh { inner: h.mesh },
            segmentation: PySegmentation { inner: h.segmentation },
            truth: h.truth,
        }
    }
}

/// The default humanoid, or one described by a parameter JSON document.
#[pyfunction]
#[pyo3(signature = (params_json=None))]
fn generate_humanoid(params_json: Option<&str>) -> PyResult<PyHumanoid> {
    let params = match params_json {
        Some(text) => humanoid::HumanoidParams::from_json(text).map_err(err)?,
        None => humanoid::HumanoidParams::default(),
    };
    Ok(humanoid::generate_humanoid(&params).map_err(err)?.into())
}

#[pyfunction]
#[pyo3(signature = (seed, n, spread=0.05))]
fn sample_population(py: Python<'_>, seed: u64, n: usize, spread: f64) -> PyResult<Vec<PyHumanoid>> {
    let bodies = py.detach(|| humanoid::sample_population(seed, n, spread)).map_err(err)?;
    Ok(bodies.into_iter().map(PyHumanoid::from).collect())
}

#[pyfunction]
fn slot_names() -> Vec<&'static str> {
    SLOTS.iter().map(|s| s.name).collect()
}

/// Virtual tailor measurements keyed by slot name; unmeasurable slots are NaN.
#[pyfunction]
#[pyo3(signature = (mesh, segmentation, config_json=None))]
fn measure(
    py: Python<'_>,
    mesh: &PyMesh,
    segmentation: &PySegmentation,
    config_json: Option<&str>,
) -> PyResult<BTreeMap<String, f64>> {
    let cfg = tailor_config(config_json)?;
    let report = py
        .detach(|| tailor::measure_body(&mesh.inner, &segmentation.inner, &cfg))
        .map_err(err)?;
    Ok(to_dict(&report.vector))
}

/// Per-part PCA shape model.
#[pyclass(name = "ShapeModel", module = "bodyshape_py", skip_from_py_object)]
struct PyShapeModel {
    inner: BodyShapeModel,
}

#[pymethods]
impl PyShapeModel {
    #[staticmethod]
    #[pyo3(signature = (meshes, segmentation, components=shape_model::DEFAULT_COMPONENTS))]
    fn fit(py: Python<'_>, meshes: Vec<PyMesh>, segmentation: &PySegmentation, components: usize) -> PyResult<Self> {
        let meshes: Vec<TriMesh> = meshes.into_iter().map(|m| m.inner).collect();
        let inner = py
            .detach(|| shape_model::fit_body_model(&meshes, &segmentation.inner, components))
            .map_err(err)?;
        Ok(PyShapeModel { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyShapeModel { inner: shape_model::load_model(path).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        shape_model::save_model(&self.inner, path).map_err(err)
    }

    #[getter]
    fn segmentation(&self) -> PySegmentation {
        PySegmentation { inner: self.inner.segmentation.clone() }
    }

    fn total_components(&self) -> usize {
        self.inner.total_components()
    }

    /// Explained-variance ratios of the kept components, per part.
    fn explained_variance(&self) -> BTreeMap<String, Vec<f64>> {
        self.inner
            .parts
            .iter()
            .map(|(l, p)| (l.to_string(), shape_model::explained_variance(p)))
            .collect()
    }

    fn project(&self, mesh: &PyMesh) -> PyResult<BTreeMap<String, Vec<f64>>> {
        let coeffs = self.inner.project_body(&mesh.inner).map_err(err)?;
        Ok(coeffs.0.into_iter().map(|(l, b)| (l.to_string(), b)).collect())
    }

    /// Assembles a body from per-part coefficients.
    fn synthesize(&self, coeffs: BTreeMap<String, Vec<f64>>) -> PyResult<PyMesh> {
        let mut parsed = BTreeMap::new();
        for (name, beta) in coeffs {
            let label: PartLabel = name.parse().map_err(err)?;
            parsed.insert(label, beta);
        }
        let inner = semantic::body_from_coeffs(&ShapeCoeffs(parsed), &self.inner).map_err(err)?;
        Ok(PyMesh { inner })
    }
}

/// Linear map from measurements to shape coefficients.
#[pyclass(name = "MeasurementMap", module = "bodyshape_py", skip_from_py_object)]
struct PyMeasurementMap {
    inner: LinearMap,
}

#[pymethods]
impl PyMeasurementMap {
    /// Fits on `(measurements, mesh)` pairs; meshes are projected onto the model.
    #[staticmethod]
    #[pyo3(signature = (model, measurements, meshes, ridge=1e-6))]
    fn fit(
        model: &PyShapeModel,
        measurements: Vec<BTreeMap<String, f64>>,
        meshes: Vec<PyMesh>,
        ridge: f64,
    ) -> PyResult<Self> {
        let ms = measurements.iter().map(from_dict).collect::<PyResult<Vec<_>>>()?;
        let coeffs = meshes
            .iter()
            .map(|m| model.inner.project_body(&m.inner))
            .collect::<bodyshape::Result<Vec<_>>>()
            .map_err(err)?;
        let ds = MappingDataset::from_measurements(&ms, &coeffs).map_err(err)?;
        Ok(PyMeasurementMap { inner: semantic::fit_linear_map(&ds, ridge).map_err(err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyMeasurementMap { inner: semantic::load_map(path).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        semantic::save_map(&self.inner, path).map_err(err)
    }

    fn reconstruct(&self, py: Python<'_>, model: &PyShapeModel, measurements: BTreeMap<String, f64>) -> PyResult<PyMesh> {
        let m = from_dict(&measurements)?;
        let inner = py.detach(|| semantic::reconstruct_body(&m, &self.inner, &model.inner)).map_err(err)?;
        Ok(PyMesh { inner })
    }

    /// Changes the given slots by millimetre deltas; returns the new mesh
    /// and its re-measured values.
    #[pyo3(signature = (model, mesh, deltas, config_json=None))]
    fn edit(
        &self,
        py: Python<'_>,
        model: &PyShapeModel,
        mesh: &PyMesh,
        deltas: BTreeMap<String, f64>,
        config_json: Option<&str>,
    ) -> PyResult<(PyMesh, BTreeMap<String, f64>)> {
        let cfg = tailor_config(config_json)?;
        let mut delta = BTreeMap::new();
        for (name, d) in deltas {
            delta.insert(tailor::resolve_slot(&name).map_err(err)?, d);
        }
        py.detach(|| {
            let base = tailor::measure_body(&mesh.inner, &model.inner.segmentation, &cfg)?.vector;
            let edited = semantic::edit_body(&base, &delta, &self.inner, &model.inner, &cfg)?;
            let after = tailor::measure_body(&edited.mesh, &model.inner.segmentation, &cfg)?.vector;
            Ok((PyMesh { inner: edited.mesh }, to_dict(&after)))
        })
        .map_err(err)
    }
}

fn parse_view(view: &str) -> PyResult<View> {
    match view {
        "frontal" => Ok(View::Frontal),
        "lateral" => Ok(View::Lateral),
        other => Err(PyValueError::new_err(format!("unknown view {other:?}, expected frontal or lateral"))),
    }
}

/// Binary silhouette as a PGM byte string.
#[pyfunction]
#[pyo3(signature = (mesh, view, height=None))]
fn render_silhouette(mesh: &PyMesh, view: &str, height: Option<f64>) -> PyResult<Vec<u8>> {
    let height = match height {
        Some(h) => h,
        None => mesh.inner.bounds().map_or(0.0, |(lo, hi)| hi.y - lo.y),
    };
    let img = silhouette::render_silhouette(&mesh.inner, parse_view(view)?, height).map_err(err)?;
    Ok(img.to_pgm())
}

/// Frontal and lateral silhouette features, concatenated.
#[pyfunction]
fn silhouette_features(mesh: &PyMesh) -> PyResult<Vec<f64>> {
    Ok(SilhouetteFeatures::from_mesh(&mesh.inner).map_err(err)?.concat())
}

/// Ridge regressor from silhouettes to measurements.
#[pyclass(name = "SilhouetteRegressor", module = "bodyshape_py", skip_from_py_object)]
struct PyRegressor {
    inner: RegressorModel,
}

#[pymethods]
impl PyRegressor {
    #[staticmethod]
    #[pyo3(signature = (meshes, measurements, ridge=100.0))]
    fn train(py: Python<'_>, meshes: Vec<PyMesh>, measurements: Vec<BTreeMap<String, f64>>, ridge: f64) -> PyResult<Self> {
        if meshes.len() != measurements.len() {
            return Err(PyValueError::new_err("meshes and measurements differ in length"));
        }
        let targets = measurements.iter().map(from_dict).collect::<PyResult<Vec<_>>>()?;
        let inner = py
            .detach(|| {
                let pairs = meshes
                    .iter()
                    .zip(targets)
                    .map(|(m, t)| Ok((SilhouetteFeatures::from_mesh(&m.inner)?, t)))
                    .collect::<bodyshape::Result<Vec<_>>>()?;
                silhouette::train_regressor(&pairs, ridge)
            })
            .map_err(err)?;
        Ok(PyRegressor { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyRegressor { inner: silhouette::load_regressor(path).map_err(err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        silhouette::save_regressor(&self.inner, path).map_err(err)
    }

    fn predict(&self, mesh: &PyMesh) -> PyResult<BTreeMap<String, f64>> {
        let f = SilhouetteFeatures::from_mesh(&mesh.inner).map_err(err)?;
        Ok(to_dict(&self.inner.predict(&f).map_err(err)?))
    }
}

#[pymodule]
fn bodyshape_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PySegmentation>()?;
    m.add_class::<PyHumanoid>()?;
    m.add_class::<PyShapeModel>()?;
    m.add_class::<PyMeasurementMap>()?;
    m.add_class::<PyRegressor>()?;
    m.add_function(wrap_pyfunction!(generate_humanoid, m)?)?;
    m.add_function(wrap_pyfunction!(sample_population, m)?)?;
    m.add_function(wrap_pyfunction!(slot_names, m)?)?;
    m.add_function(wrap_pyfunction!(measure, m)?)?;
    m.add_function(wrap_pyfunction!(render_silhouette, m)?)?;
    m.add_function(wrap_pyfunction!(silhouette_features, m)?)?;
    Ok(())
}

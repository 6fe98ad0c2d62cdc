//! Python bindings for the slowman library.
//!
//! The native module is built as `slowman_py._native`; the thin Python
//! package re-exports everything from it. States, vectors, and matrices
//! cross the boundary as plain lists (no numpy dependency); labels cross
//! as strings using the same vocabulary as the CLI (`"curvature"`,
//! `"torsion"`, `"exact"`, `"unit_gradient"`, …).

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyComplex, PyDict, PyList};

use slowman::geom::{Matrix, Vector};
use slowman::kinematics::{self, JerkMode};
use slowman::levelset::{self, GridSpec, SurfaceMode};
use slowman::manifold::{self, Branch, FieldKind, ImplicitField, Normalization};
use slowman::model::{self, ModelSpec};
use slowman::tls;
use slowman::trajectory::{self, Control, CrossingDirection, SectionSpec};
use slowman::verify;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_vector(xs: &[f64]) -> PyResult<Vector> {
    Vector::from_slice(xs)
        .ok_or_else(|| PyValueError::new_err("expected 2 or 3 components"))
}

fn vec_out(v: &Vector) -> Vec<f64> {
    v.as_slice().to_vec()
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    let dim = rows.len();
    if !(2..=3).contains(&dim) || rows.iter().any(|r| r.len() != dim) {
        return Err(PyValueError::new_err("expected a square 2x2 or 3x3 matrix"));
    }
    let mut m = Matrix::zeros(dim);
    for (i, row) in rows.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            m.set(i, j, *x);
        }
    }
    Ok(m)
}

fn jerk_mode(label: &str) -> PyResult<JerkMode> {
    JerkMode::from_label(label)
        .ok_or_else(|| PyValueError::new_err(format!("unknown jerk mode '{label}'")))
}

fn params_list(params: Option<BTreeMap<String, f64>>) -> Vec<(String, f64)> {
    params.map(|p| p.into_iter().collect()).unwrap_or_default()
}

/// A vector field of dimension 2 or 3 with closed-form or expression-based
/// evaluators. Immutable; `with_params` returns a modified copy.
#[pyclass(frozen, skip_from_py_object, module = "slowman_py")]
#[derive(Clone)]
struct Model {
    inner: ModelSpec,
}

#[pymethods]
impl Model {
    /// Look up a built-in system, optionally overriding parameters.
    #[staticmethod]
    #[pyo3(signature = (name, params=None))]
    fn builtin(name: &str, params: Option<BTreeMap<String, f64>>) -> PyResult<Model> {
        let inner = model::builtin(name, &params_list(params)).map_err(err)?;
        Ok(Model { inner })
    }

    /// Parse the `dim 2; dx = ...; dy = ...;` text format.
    #[staticmethod]
    #[pyo3(signature = (source, name=None))]
    fn parse(source: &str, name: Option<&str>) -> PyResult<Model> {
        let mut inner = model::parse_model(source).map_err(err)?;
        if let Some(name) = name {
            inner.rename(name);
        }
        Ok(Model { inner })
    }

    fn with_params(&self, params: BTreeMap<String, f64>) -> PyResult<Model> {
        let mut inner = self.inner.clone();
        inner
            .set_params(&params.into_iter().collect::<Vec<_>>())
            .map_err(err)?;
        Ok(Model { inner })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn params(&self) -> BTreeMap<String, f64> {
        self.inner.params().clone()
    }

    /// Index of the ε-scaled (fast) component, if the system declares one.
    #[getter]
    fn epsilon_axis(&self) -> Option<usize> {
        self.inner.epsilon_axis()
    }

    fn field(&self, state: Vec<f64>) -> PyResult<Vec<f64>> {
        let s = to_vector(&state)?;
        Ok(vec_out(&self.inner.eval_field(&s).map_err(err)?))
    }

    fn jacobian(&self, state: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let s = to_vector(&state)?;
        let j = self.inner.eval_jacobian(&s).map_err(err)?;
        Ok((0..j.dim()).map(|i| vec_out(&j.row(i))).collect())
    }

    fn __repr__(&self) -> String {
        format!("Model(name='{}', dim={})", self.inner.name(), self.inner.dim())
    }
}

/// An integrated orbit: node times/states plus dense (cubic Hermite)
/// output between nodes.
#[pyclass(frozen, module = "slowman_py")]
struct Trajectory {
    inner: trajectory::Trajectory,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn states(&self) -> Vec<Vec<f64>> {
        self.inner.states.iter().map(vec_out).collect()
    }

    /// Vector field evaluated at each node.
    #[getter]
    fn velocities(&self) -> Vec<Vec<f64>> {
        self.inner.velocities.iter().map(vec_out).collect()
    }

    #[getter]
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        d.set_item("accepted", self.inner.stats.accepted)?;
        d.set_item("rejected", self.inner.stats.rejected)?;
        d.set_item("max_error_estimate", self.inner.stats.max_error_estimate)?;
        Ok(d)
    }

    fn state_at(&self, t: f64) -> Option<Vec<f64>> {
        self.inner.state_at(t).map(|s| vec_out(&s))
    }

    fn final_state(&self) -> Vec<f64> {
        vec_out(self.inner.final_state())
    }

    fn final_time(&self) -> f64 {
        self.inner.final_time()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(model='{}', nodes={}, t=[{}, {}])",
            self.inner.model_name,
            self.inner.len(),
            self.inner.times.first().copied().unwrap_or(f64::NAN),
            self.inner.final_time(),
        )
    }
}

/// A rectangular sampling grid: per-axis bounds and *cell* counts
/// (so each axis carries `resolution + 1` samples).
#[pyclass(frozen, skip_from_py_object, module = "slowman_py")]
#[derive(Clone)]
struct Grid {
    inner: GridSpec,
}

#[pymethods]
impl Grid {
    #[new]
    fn new(bounds: Vec<(f64, f64)>, resolution: Vec<usize>) -> PyResult<Grid> {
        Ok(Grid { inner: GridSpec::new(bounds, resolution).map_err(err)? })
    }

    #[getter]
    fn bounds(&self) -> Vec<(f64, f64)> {
        self.inner.bounds().to_vec()
    }

    #[getter]
    fn resolution(&self) -> Vec<usize> {
        self.inner.resolution().to_vec()
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        self.inner.coord(axis, i)
    }

    fn cell_diagonal(&self) -> f64 {
        self.inner.cell_diagonal()
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(bounds={:?}, resolution={:?})",
            self.inner.bounds(),
            self.inner.resolution()
        )
    }
}

/// An extracted zero set: vertices, per-vertex residuals/annotations, and
/// connectivity (polylines in 2D, triangles in 3D).
#[pyclass(frozen, module = "slowman_py")]
struct LevelSet {
    inner: levelset::LevelSet,
}

#[pymethods]
impl LevelSet {
    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.label()
    }

    #[getter]
    fn vertices(&self) -> Vec<Vec<f64>> {
        self.inner.vertices.iter().map(vec_out).collect()
    }

    /// |φ| at each vertex under the source field's normalization.
    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn annotations<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let out = PyList::empty(py);
        for a in &self.inner.annotations {
            let d = PyDict::new(py);
            d.set_item("torsion", a.torsion)?;
            d.set_item("attractivity", a.attractivity)?;
            d.set_item("domain", a.domain.map(|c| c.label()))?;
            out.append(d)?;
        }
        Ok(out)
    }

    #[getter]
    fn polylines(&self) -> Vec<Vec<usize>> {
        self.inner.polylines.clone()
    }

    #[getter]
    fn triangles(&self) -> Vec<[usize; 3]> {
        self.inner.triangles.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "LevelSet(kind='{}', vertices={}, polylines={}, triangles={})",
            self.inner.kind.label(),
            self.inner.len(),
            self.inner.polylines.len(),
            self.inner.triangles.len()
        )
    }
}

fn control_from(dt: Option<f64>, rtol: Option<f64>, atol: Option<f64>) -> PyResult<Control> {
    match (dt, rtol, atol) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(PyValueError::new_err(
            "dt is mutually exclusive with rtol/atol",
        )),
        (Some(dt), None, None) => Ok(Control::Fixed { dt }),
        (None, r, a) => {
            let Control::Adaptive { rtol, atol } = Control::adaptive_default() else {
                unreachable!()
            };
            Ok(Control::Adaptive { rtol: r.unwrap_or(rtol), atol: a.unwrap_or(atol) })
        }
    }
}

/// Integrate `model` from `x0` over [t0, t1]; fixed-step RK4 when `dt`
/// is given, adaptive RK45 otherwise.
#[pyfunction]
#[pyo3(signature = (model, x0, t0, t1, *, dt=None, rtol=None, atol=None))]
fn integrate(
    model: &Model,
    x0: Vec<f64>,
    t0: f64,
    t1: f64,
    dt: Option<f64>,
    rtol: Option<f64>,
    atol: Option<f64>,
) -> PyResult<Trajectory> {
    let control = control_from(dt, rtol, atol)?;
    let x0 = to_vector(&x0)?;
    let inner = trajectory::integrate(&model.inner, &x0, t0, t1, control).map_err(err)?;
    Ok(Trajectory { inner })
}

fn section_from(point: &[f64], normal: &[f64], direction: &str) -> PyResult<SectionSpec> {
    let dir = CrossingDirection::from_label(direction)
        .ok_or_else(|| PyValueError::new_err(format!("unknown direction '{direction}'")))?;
    SectionSpec::from_unnormalized(to_vector(point)?, to_vector(normal)?, dir).map_err(err)
}

/// Times and states where the trajectory crosses the plane through
/// `point` with the given `normal` (direction: "positive" | "negative" |
/// "both").
#[pyfunction]
#[pyo3(signature = (traj, point, normal, direction="both"))]
fn poincare_crossings(
    traj: &Trajectory,
    point: Vec<f64>,
    normal: Vec<f64>,
    direction: &str,
) -> PyResult<Vec<(f64, Vec<f64>)>> {
    let section = section_from(&point, &normal, direction)?;
    let crossings = trajectory::poincare_crossings(&traj.inner, &section).map_err(err)?;
    Ok(crossings.iter().map(|(t, s)| (*t, vec_out(s))).collect())
}

/// Full kinematic sample at a state: velocity, acceleration, jerk,
/// tangential/normal acceleration, curvature, torsion, domain label.
#[pyfunction]
#[pyo3(signature = (model, state, jerk="exact"))]
fn kinematics_at<'py>(
    py: Python<'py>,
    model: &Model,
    state: Vec<f64>,
    jerk: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let s = to_vector(&state)?;
    let k = kinematics::sample(&model.inner, &s, jerk_mode(jerk)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("velocity", vec_out(&k.v))?;
    d.set_item("acceleration", vec_out(&k.gamma))?;
    d.set_item("jerk", vec_out(&k.jerk))?;
    d.set_item("gamma_tau", k.gamma_tau)?;
    d.set_item("gamma_nu", k.gamma_nu)?;
    d.set_item("curvature", k.curvature)?;
    d.set_item("torsion", k.torsion)?;
    d.set_item("domain", k.domain.map(|c| c.label()))?;
    d.set_item("jerk_mode", k.jerk_mode.label())?;
    Ok(d)
}

fn field_for<'m>(
    model: &'m ModelSpec,
    method: &str,
    jerk: &str,
    normalization: Option<&str>,
) -> PyResult<ImplicitField<'m>> {
    let kind = match (method, model.dim()) {
        ("curvature", _) => FieldKind::Curvature2d,
        ("torsion", _) => FieldKind::Torsion3d,
        ("singular", _) => FieldKind::SingularApprox,
        ("tls-poly", 2) => FieldKind::TlsPoly2d,
        ("tls-poly", _) => FieldKind::TlsPoly3d,
        _ => {
            return Err(PyValueError::new_err(format!(
                "unknown method '{method}' (curvature | torsion | singular | tls-poly)"
            )))
        }
    };
    let default_norm = match kind {
        FieldKind::Curvature2d | FieldKind::TlsPoly2d => Normalization::Raw,
        _ => Normalization::UnitGradient,
    };
    let norm = match normalization {
        None => default_norm,
        Some(label) => Normalization::from_label(label).ok_or_else(|| {
            PyValueError::new_err(format!("unknown normalization '{label}'"))
        })?,
    };
    let field = ImplicitField::new(model, kind)
        .map_err(err)?
        .with_jerk_mode(jerk_mode(jerk)?)
        .with_normalization(norm);
    Ok(field)
}

/// Evaluate a slow-manifold condition at one state (normalized as the
/// extraction would normalize it).
#[pyfunction]
#[pyo3(signature = (model, state, method="curvature", jerk="exact", normalization=None))]
fn phi(
    model: &Model,
    state: Vec<f64>,
    method: &str,
    jerk: &str,
    normalization: Option<&str>,
) -> PyResult<f64> {
    let field = field_for(&model.inner, method, jerk, normalization)?;
    field.eval(&to_vector(&state)?).map_err(err)
}

/// V·∇φ at a state and its classification
/// ("attractive" | "tangent" | "repulsive").
#[pyfunction]
#[pyo3(signature = (model, state, method="curvature", jerk="exact", h=None))]
fn attractivity(
    model: &Model,
    state: Vec<f64>,
    method: &str,
    jerk: &str,
    h: Option<f64>,
) -> PyResult<(f64, &'static str)> {
    let field = field_for(&model.inner, method, jerk, None)?;
    let (value, class) = manifold::attractivity(&field, &to_vector(&state)?, h).map_err(err)?;
    Ok((value, class.label()))
}

/// Slow/fast/boundary classification by the sign of γ·V.
#[pyfunction]
fn classify_domain(model: &Model, state: Vec<f64>) -> PyResult<&'static str> {
    let c = manifold::classify_domain(&model.inner, &to_vector(&state)?).map_err(err)?;
    Ok(c.label())
}

/// Closed-form Van der Pol slow-curve branch ("upper" | "lower").
#[pyfunction]
#[pyo3(signature = (x, eps, branch="upper"))]
fn vanderpol_slow_curve(x: f64, eps: f64, branch: &str) -> PyResult<f64> {
    let b = match branch {
        "upper" => Branch::Upper,
        "lower" => Branch::Lower,
        _ => return Err(PyValueError::new_err("branch must be 'upper' or 'lower'")),
    };
    manifold::vanderpol_slow_curve(x, eps, b).map_err(err)
}

/// Closed-form Van der Pol singular-approximation curve.
#[pyfunction]
fn vanderpol_singular_curve(x: f64, eps: f64) -> PyResult<f64> {
    manifold::vanderpol_singular_curve(x, eps).map_err(err)
}

fn complex_out<'py>(py: Python<'py>, z: num_complex::Complex64) -> Bound<'py, PyComplex> {
    PyComplex::from_doubles(py, z.re, z.im)
}

/// Jacobian eigen-decomposition at a state, split into the fast
/// (dominant |Re λ|) eigenvalue and the slow rest.
#[pyfunction]
fn eigen<'py>(py: Python<'py>, model: &Model, state: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let s = to_vector(&state)?;
    let j = model.inner.eval_jacobian(&s).map_err(err)?;
    let e = tls::eigen_matrix(&j).map_err(err)?;
    let d = PyDict::new(py);
    let dim = j.dim();
    let values: Vec<_> = e.eigenvalues.iter().map(|z| complex_out(py, *z)).collect();
    let vectors = |vs: &[tls::CVec]| -> Vec<Vec<Bound<'py, PyComplex>>> {
        vs.iter()
            .map(|v| (0..dim).map(|i| complex_out(py, v.get(i))).collect())
            .collect()
    };
    d.set_item("eigenvalues", values)?;
    d.set_item("right", vectors(&e.right))?;
    d.set_item("left", vectors(&e.left))?;
    d.set_item("fast_index", e.fast_index)?;
    d.set_item("slow_indices", e.slow_indices.clone())?;
    d.set_item("is_real", e.is_real.clone())?;
    Ok(d)
}

/// Residual of the conjugate-product equivalence between the eigenvalue
/// route and the kinematic route at a state.
#[pyfunction]
fn conjugate_product_check(model: &Model, state: Vec<f64>) -> PyResult<f64> {
    let s = to_vector(&state)?;
    tls::conjugate_product_check(&model.inner, &s).map_err(err)
}

/// Eigenvalue-free 2D manifold polynomial for an explicit (J, v) pair.
#[pyfunction]
fn polynomial_phi_2d(jacobian: Vec<Vec<f64>>, v: Vec<f64>) -> PyResult<f64> {
    Ok(tls::polynomial_phi_2d(&to_matrix(&jacobian)?, &to_vector(&v)?))
}

/// Eigenvalue-free 3D manifold cubic for an explicit (J, v) pair.
#[pyfunction]
fn polynomial_phi_3d(jacobian: Vec<Vec<f64>>, v: Vec<f64>) -> PyResult<f64> {
    Ok(tls::polynomial_phi_3d(&to_matrix(&jacobian)?, &to_vector(&v)?))
}

/// Extract the zero set of a slow-manifold condition over a grid.
/// `mode` selects 3D output: "triangles" (marching cubes) or "points".
#[pyfunction]
#[pyo3(signature = (model, grid, method=None, mode="triangles", jerk="exact", normalization=None))]
fn extract(
    model: &Model,
    grid: &Grid,
    method: Option<&str>,
    mode: &str,
    jerk: &str,
    normalization: Option<&str>,
) -> PyResult<LevelSet> {
    let method = method.unwrap_or(if model.inner.dim() == 2 { "curvature" } else { "torsion" });
    let field = field_for(&model.inner, method, jerk, normalization)?;
    let inner = if model.inner.dim() == 2 {
        levelset::extract_zero_2d(&field, &grid.inner).map_err(err)?
    } else {
        let mode = SurfaceMode::from_label(mode)
            .ok_or_else(|| PyValueError::new_err(format!("unknown mode '{mode}'")))?;
        levelset::extract_zero_3d(&field, &grid.inner, mode).map_err(err)?
    };
    Ok(LevelSet { inner })
}

/// Keep only vertices on the attractive sheet (negative torsion).
#[pyfunction]
fn filter_attractive(ls: &LevelSet, model: &Model) -> PyResult<LevelSet> {
    Ok(LevelSet { inner: levelset::filter_attractive(&ls.inner, &model.inner).map_err(err)? })
}

/// Half-width used for section-band selection when none is given.
#[pyfunction]
fn default_band(grid: &Grid) -> f64 {
    levelset::default_band(&grid.inner)
}

/// Intersect an extracted surface with the plane through `point` /
/// `normal`: the singular manifold, ordered into one polyline.
#[pyfunction]
#[pyo3(signature = (ls, point, normal, band))]
fn singular_manifold(
    ls: &LevelSet,
    point: Vec<f64>,
    normal: Vec<f64>,
    band: f64,
) -> PyResult<LevelSet> {
    let section = section_from(&point, &normal, "both")?;
    Ok(LevelSet { inner: levelset::singular_manifold(&ls.inner, &section, band).map_err(err)? })
}

/// Deploy a singular-manifold curve by the flow over the given horizons.
/// Returns {"horizons", "sets", "skipped"}.
#[pyfunction]
#[pyo3(signature = (model, curve, times, *, rtol=1e-9, atol=1e-12))]
fn deploy<'py>(
    py: Python<'py>,
    model: &Model,
    curve: &LevelSet,
    times: Vec<f64>,
    rtol: f64,
    atol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let control = Control::Adaptive { rtol, atol };
    let dep = levelset::deploy(&model.inner, &curve.inner, &times, control).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("horizons", dep.horizons.clone())?;
    let sets: Vec<_> = dep
        .sets
        .into_iter()
        .map(|inner| LevelSet { inner }.into_pyobject(py))
        .collect::<Result<_, _>>()?;
    d.set_item("sets", sets)?;
    d.set_item("skipped", dep.skipped.clone())?;
    Ok(d)
}

/// Run the seeded cross-check suite; one dict per check.
#[pyfunction]
#[pyo3(signature = (seed=0, trials=verify::DEFAULT_TRIALS))]
fn run_verify<'py>(py: Python<'py>, seed: u64, trials: u64) -> PyResult<Bound<'py, PyList>> {
    let out = PyList::empty(py);
    for r in verify::run_suite(seed, trials) {
        let d = PyDict::new(py);
        d.set_item("check", &r.check)?;
        d.set_item("trials", r.trials)?;
        d.set_item("max_residual", r.max_residual)?;
        d.set_item("pass", r.pass)?;
        out.append(d)?;
    }
    Ok(out)
}

/// Names of the built-in systems.
#[pyfunction]
fn builtin_names() -> Vec<&'static str> {
    model::BUILTIN_NAMES.to_vec()
}

/// All built-in systems at their default parameters.
#[pyfunction]
fn catalog() -> Vec<Model> {
    model::catalog().into_iter().map(|inner| Model { inner }).collect()
}

#[pymodule]
#[pyo3(name = "_native")]
fn native(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Trajectory>()?;
    m.add_class::<Grid>()?;
    m.add_class::<LevelSet>()?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(poincare_crossings, m)?)?;
    m.add_function(wrap_pyfunction!(kinematics_at, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(attractivity, m)?)?;
    m.add_function(wrap_pyfunction!(classify_domain, m)?)?;
    m.add_function(wrap_pyfunction!(vanderpol_slow_curve, m)?)?;
    m.add_function(wrap_pyfunction!(vanderpol_singular_curve, m)?)?;
    m.add_function(wrap_pyfunction!(eigen, m)?)?;
    m.add_function(wrap_pyfunction!(conjugate_product_check, m)?)?;
    m.add_function(wrap_pyfunction!(polynomial_phi_2d, m)?)?;
    m.add_function(wrap_pyfunction!(polynomial_phi_3d, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(filter_attractive, m)?)?;
    m.add_function(wrap_pyfunction!(default_band, m)?)?;
    m.add_function(wrap_pyfunction!(singular_manifold, m)?)?;
    m.add_function(wrap_pyfunction!(deploy, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_names, m)?)?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    Ok(())
}

//! Python bindings: operators, measures, capacities, hole families,
//! perforated and relaxed solves, scenario sweeps and the self-test suite.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use relaxlab::capacity::{self, CapacityMeasure};
use relaxlab::harness::{self, ConvergenceReport, ReportFormat, ScenarioConfig};
use relaxlab::linalg::SolverOptions;
use relaxlab::operator::{Coefficient, ScalarField};
use relaxlab::pde::{self, Load, PerforationOptions};
use relaxlab::perforation::{self, HoleFamily};
use relaxlab::{Error, Rect};

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyArithmeticError::new_err(e.to_string()),
        3 => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for relaxlab::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn domain_of(domain: Option<([f64; 2], [f64; 2])>) -> PyResult<Rect> {
    match domain {
        None => Ok(Rect::unit()),
        Some((min, max)) => Rect::new(min, max).py(),
    }
}

/// Uniformly elliptic operator `-div(A ∇u)`.
#[pyclass(name = "EllipticOperator", module = "relaxlab_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyOperator(relaxlab::EllipticOperator);

#[pymethods]
impl PyOperator {
    #[staticmethod]
    fn laplace() -> Self {
        PyOperator(relaxlab::EllipticOperator::laplace())
    }

    #[staticmethod]
    #[pyo3(signature = (a11, a12, a22, alpha))]
    fn matrix(a11: f64, a12: f64, a22: f64, alpha: f64) -> PyResult<Self> {
        relaxlab::EllipticOperator::new(Coefficient::Matrix { a11, a12, a22 }, alpha).map(PyOperator).py()
    }

    #[staticmethod]
    fn scalar(a: f64, alpha: f64) -> PyResult<Self> {
        relaxlab::EllipticOperator::new(Coefficient::Scalar(ScalarField::Constant(a)), alpha).map(PyOperator).py()
    }

    #[staticmethod]
    fn checkerboard(a: f64, b: f64, k: u32, alpha: f64) -> PyResult<Self> {
        relaxlab::EllipticOperator::new(Coefficient::Scalar(ScalarField::Checkerboard { a, b, k }), alpha)
            .map(PyOperator)
            .py()
    }

    /// `laplace` or `type=matrix; a11=..; a12=..; a22=..; alpha=..`.
    #[staticmethod]
    fn from_spec(spec: &str) -> PyResult<Self> {
        harness::parse_operator_spec(spec).map(PyOperator).py()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.0.fingerprint()
    }

    fn matrix_at(&self, x: f64, y: f64) -> [f64; 3] {
        self.0.matrix_at([x, y])
    }

    fn __repr__(&self) -> String {
        format!("EllipticOperator({})", self.0.fingerprint())
    }
}

fn op_or_laplace(op: Option<&PyOperator>) -> relaxlab::EllipticOperator {
    op.map_or_else(relaxlab::EllipticOperator::laplace, |o| o.0.clone())
}

/// Positive measure: density plus atoms and line segments.
#[pyclass(name = "Measure", module = "relaxlab_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMeasure(relaxlab::MeasureSpec);

#[pymethods]
impl PyMeasure {
    #[staticmethod]
    #[pyo3(signature = (domain=None))]
    fn zero(domain: Option<([f64; 2], [f64; 2])>) -> PyResult<Self> {
        Ok(PyMeasure(relaxlab::MeasureSpec::zero(domain_of(domain)?)))
    }

    #[staticmethod]
    #[pyo3(signature = (value, domain=None))]
    fn constant(value: f64, domain: Option<([f64; 2], [f64; 2])>) -> PyResult<Self> {
        relaxlab::MeasureSpec::constant(domain_of(domain)?, value).map(PyMeasure).py()
    }

    fn with_atom(&self, x: f64, y: f64, mass: f64) -> PyResult<Self> {
        self.0.clone().with_atom([x, y], mass).map(PyMeasure).py()
    }

    fn with_segment(&self, start: [f64; 2], end: [f64; 2], density: f64) -> PyResult<Self> {
        self.0.clone().with_segment(start, end, density).map(PyMeasure).py()
    }

    /// Mass of the half-open lattice cube `[i/h, (i+1)/h) x [j/h, (j+1)/h)`.
    fn mass_on_box(&self, h: u32, i: i64, j: i64) -> PyResult<f64> {
        let cube = relaxlab::geometry::LatticeCube::new(h, [i, j]).py()?;
        Ok(self.0.mass_on_box(&cube))
    }

    fn total_mass(&self) -> f64 {
        self.0.total_mass()
    }

    /// `(mu0, mu1)`: the atom-free part and the atoms.
    fn decompose(&self) -> (PyMeasure, PyMeasure) {
        let d = self.0.decompose();
        (PyMeasure(d.mu0), PyMeasure(d.mu1))
    }

    fn truncate_density(&self, k: f64) -> Self {
        PyMeasure(self.0.truncate_density(k))
    }

    #[pyo3(signature = (min, max, n=2))]
    fn kato_norm(&self, min: [f64; 2], max: [f64; 2], n: u32) -> PyResult<f64> {
        let rect = Rect::new(min, max).py()?;
        self.0.kato_norm(&rect, n).py()
    }

    #[getter]
    fn has_atoms(&self) -> bool {
        self.0.has_atoms()
    }

    fn __repr__(&self) -> String {
        format!(
            "Measure(density={:?}, atoms={}, segments={})",
            self.0.density,
            self.0.atoms.len(),
            self.0.segments.len()
        )
    }
}

/// Plate or container of a condenser.
#[pyclass(name = "Region", module = "relaxlab_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyRegion(relaxlab::Region);

#[pymethods]
impl PyRegion {
    #[staticmethod]
    fn disk(center: [f64; 2], radius: f64) -> Self {
        PyRegion(relaxlab::Region::disk(center, radius))
    }

    #[staticmethod]
    fn rect(min: [f64; 2], max: [f64; 2]) -> PyResult<Self> {
        Ok(PyRegion(relaxlab::Region::Rect(Rect::new(min, max).py()?)))
    }

    #[staticmethod]
    fn union(parts: Vec<PyRegion>) -> Self {
        PyRegion(relaxlab::Region::Union(parts.into_iter().map(|p| p.0).collect()))
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        self.0.contains_closed([x, y])
    }
}

#[pyfunction]
#[pyo3(signature = (rho, r, n=2))]
fn cap_concentric_closed_form(rho: f64, r: f64, n: u32) -> PyResult<f64> {
    capacity::cap_concentric_closed_form(rho, r, n).py()
}

/// Discrete `cap^L(V, U)` at the given spacing.
#[pyfunction]
#[pyo3(signature = (inner, outer, spacing, op=None))]
fn cap_variational(inner: &PyRegion, outer: &PyRegion, spacing: f64, op: Option<&PyOperator>) -> PyResult<f64> {
    capacity::cap_variational(&inner.0, &outer.0, &op_or_laplace(op), spacing).py()
}

/// Capacity and total masses of the inner and outer distributions.
#[pyfunction]
#[pyo3(signature = (inner, outer, spacing, op=None))]
fn capacitary_distributions(
    inner: &PyRegion,
    outer: &PyRegion,
    spacing: f64,
    op: Option<&PyOperator>,
) -> PyResult<(f64, f64, f64)> {
    let p = capacity::capacitary_potential(&inner.0, &outer.0, &op_or_laplace(op), spacing).py()?;
    Ok((p.cap_value, p.gamma_total(), p.nu_total()))
}

/// `cap_μ^L(E, A)`; `mu=None` is the hard constraint on `E`.
#[pyfunction]
#[pyo3(signature = (e, a, spacing, mu=None, op=None))]
fn mu_capacity(e: &PyRegion, a: &PyRegion, spacing: f64, mu: Option<&PyMeasure>, op: Option<&PyOperator>) -> PyResult<f64> {
    let m = match mu {
        Some(m) => CapacityMeasure::Measure(&m.0),
        None => CapacityMeasure::Infinite,
    };
    capacity::mu_capacity(&e.0, &a.0, m, &op_or_laplace(op), spacing).py()
}

#[pyfunction]
#[pyo3(signature = (target, r, op=None, tol=1e-6))]
fn hole_radius(target: f64, r: f64, op: Option<&PyOperator>, tol: f64) -> PyResult<f64> {
    capacity::hole_radius(target, r, &op_or_laplace(op), tol).py()
}

#[pyfunction]
#[pyo3(signature = (mu, r, center=[0.5, 0.5], op=None, corpus_size=100))]
fn poincare_modulus_estimate(mu: &PyMeasure, r: f64, center: [f64; 2], op: Option<&PyOperator>, corpus_size: usize) -> PyResult<f64> {
    capacity::poincare_modulus_estimate(&mu.0, r, center, &op_or_laplace(op), corpus_size).py()
}

/// Capacity-matched holes at one lattice level.
#[pyclass(name = "HoleFamily", module = "relaxlab_py", frozen)]
struct PyHoleFamily(HoleFamily);

#[pymethods]
impl PyHoleFamily {
    #[getter]
    fn h(&self) -> u32 {
        self.0.h
    }

    #[getter]
    fn reference_radius(&self) -> f64 {
        self.0.reference_radius()
    }

    /// `(i, j, cx, cy, radius, mass)` per interior cube.
    #[getter]
    fn holes(&self) -> Vec<(i64, i64, f64, f64, f64, f64)> {
        self.0
            .holes
            .iter()
            .map(|h| (h.i[0], h.i[1], h.center[0], h.center[1], h.radius, h.mass))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.0.holes.len()
    }

    fn report(&self, spacing: f64) -> BTreeMap<&'static str, f64> {
        let r = perforation::holes_report(&self.0, spacing);
        BTreeMap::from([
            ("count", r.count as f64),
            ("active", r.active as f64),
            ("min_radius", r.min_radius),
            ("max_radius", r.max_radius),
            ("total_capacity", r.total_capacity),
            ("spacing", r.spacing),
            ("resolvable", if r.resolvable { 1.0 } else { 0.0 }),
        ])
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().py()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        HoleFamily::from_json(text).map(PyHoleFamily).py()
    }
}

#[pyfunction]
#[pyo3(signature = (mu, h, op=None))]
fn build_holes(mu: &PyMeasure, h: u32, op: Option<&PyOperator>) -> PyResult<PyHoleFamily> {
    perforation::build_holes(&mu.0.domain, &mu.0, &op_or_laplace(op), h).map(PyHoleFamily).py()
}

/// Nodal field on a uniform grid.
#[pyclass(name = "Field", module = "relaxlab_py", frozen)]
struct PyField(relaxlab::Field);

#[pymethods]
impl PyField {
    /// `(nodes_x, nodes_y)`; values are stored row by row in `y`.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.mesh.nodes_x(), self.0.mesh.nodes_y())
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.mesh.spacing()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values.clone()
    }

    fn eval(&self, x: f64, y: f64) -> Option<f64> {
        self.0.eval([x, y])
    }

    fn l2_norm(&self) -> f64 {
        relaxlab::assembly::l2_norm_sq(&self.0).sqrt()
    }

    /// `(l2, h1, linf)` norms of `self - other`.
    fn distance(&self, other: &PyField) -> PyResult<(f64, f64, f64)> {
        let m = pde::field_metrics(&self.0, &other.0).py()?;
        Ok((m.l2, m.h1, m.linf))
    }
}

fn load_of(kind: &str, amplitude: f64) -> PyResult<Load> {
    match kind {
        "zero" => Ok(Load::Zero),
        "constant" => Ok(Load::Constant(amplitude)),
        "product-sine" => Ok(Load::ProductSine { amplitude }),
        other => Err(PyValueError::new_err(format!("unknown load {other:?} (zero | constant | product-sine)"))),
    }
}

/// Perforated Dirichlet solve on the unit-spaced grid of the family's
/// measure domain.
#[pyfunction]
#[pyo3(signature = (family, spacing, load="product-sine", amplitude=1.0, op=None, domain=None, pin_nearest=false))]
fn solve_perforated(
    family: &PyHoleFamily,
    spacing: f64,
    load: &str,
    amplitude: f64,
    op: Option<&PyOperator>,
    domain: Option<([f64; 2], [f64; 2])>,
    pin_nearest: bool,
) -> PyResult<PyField> {
    let mesh = relaxlab::Mesh::new(&domain_of(domain)?, spacing).py()?;
    let opts = PerforationOptions { solver: SolverOptions::default(), pin_nearest };
    let (u, _) = pde::solve_dirichlet_perforated(&family.0, &op_or_laplace(op), &load_of(load, amplitude)?, &mesh, &opts).py()?;
    Ok(PyField(u))
}

/// Relaxed solve `Lu + μ₀u = f` on `μ`'s domain.
#[pyfunction]
#[pyo3(signature = (mu, spacing, load="product-sine", amplitude=1.0, op=None))]
fn solve_relaxed(mu: &PyMeasure, spacing: f64, load: &str, amplitude: f64, op: Option<&PyOperator>) -> PyResult<PyField> {
    let mesh = relaxlab::Mesh::new(&mu.0.domain, spacing).py()?;
    let (u, _) = pde::solve_relaxed(&mu.0, &op_or_laplace(op), &load_of(load, amplitude)?, &mesh, &SolverOptions::default()).py()?;
    Ok(PyField(u))
}

#[pyfunction]
#[pyo3(signature = (family, spacing, op=None, domain=None))]
fn corrector(family: &PyHoleFamily, spacing: f64, op: Option<&PyOperator>, domain: Option<([f64; 2], [f64; 2])>) -> PyResult<PyField> {
    let mesh = relaxlab::Mesh::new(&domain_of(domain)?, spacing).py()?;
    pde::corrector_field(&family.0, &op_or_laplace(op), &mesh).map(PyField).py()
}

/// Parsed scenario file.
#[pyclass(name = "Scenario", module = "relaxlab_py", frozen)]
struct PyScenario(ScenarioConfig);

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        harness::parse_config(text).map(PyScenario).py()
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        harness::load_config(&path).map(PyScenario).py()
    }

    #[getter]
    fn h_list(&self) -> Vec<u32> {
        self.0.h_list.clone()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.0.mode.name()
    }

    #[getter]
    fn measure(&self) -> PyMeasure {
        PyMeasure(self.0.measure.clone())
    }

    #[getter]
    fn operator(&self) -> PyOperator {
        PyOperator(self.0.operator.clone())
    }

    fn run(&self, py: Python<'_>) -> PyResult<PyReport> {
        let cfg = self.0.clone();
        py.detach(move || harness::run_sweep(&cfg)).map(PyReport).py()
    }
}

/// Convergence report of a sweep.
#[pyclass(name = "Report", module = "relaxlab_py", frozen)]
struct PyReport(ConvergenceReport);

#[pymethods]
impl PyReport {
    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().py()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ConvergenceReport::from_json(text).map(PyReport).py()
    }

    /// Rows as dicts keyed by the CSV column names; missing values are `None`.
    fn rows(&self) -> Vec<BTreeMap<&'static str, Option<f64>>> {
        self.0
            .rows
            .iter()
            .map(|r| {
                BTreeMap::from([
                    ("h", Some(r.h as f64)),
                    ("holes", Some(r.holes as f64)),
                    ("min_radius", Some(r.min_radius)),
                    ("max_radius", Some(r.max_radius)),
                    ("spacing", Some(r.spacing)),
                    ("l2_err", r.l2_err),
                    ("rel_l2_err", r.rel_l2_err),
                    ("h1_err", r.h1_err),
                    ("energy", r.energy),
                    ("corrector_l2", r.corrector_l2),
                    ("runtime_ms", Some(r.runtime_ms)),
                ])
            })
            .collect()
    }

    #[pyo3(signature = (path, format="csv"))]
    fn write(&self, path: std::path::PathBuf, format: &str) -> PyResult<()> {
        let f: ReportFormat = format.parse().py()?;
        harness::emit_report(&self.0, f, &path).py()
    }
}

/// Runs the self-test suites; returns `(passed, summary)`.
#[pyfunction]
#[pyo3(signature = (alpha=None))]
fn selftest(py: Python<'_>, alpha: Option<f64>) -> (bool, String) {
    let s = py.detach(move || harness::selftest(alpha));
    (s.passed(), s.render())
}

#[pymodule]
fn relaxlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOperator>()?;
    m.add_class::<PyMeasure>()?;
    m.add_class::<PyRegion>()?;
    m.add_class::<PyHoleFamily>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(cap_concentric_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(cap_variational, m)?)?;
    m.add_function(wrap_pyfunction!(capacitary_distributions, m)?)?;
    m.add_function(wrap_pyfunction!(mu_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(hole_radius, m)?)?;
    m.add_function(wrap_pyfunction!(poincare_modulus_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(build_holes, m)?)?;
    m.add_function(wrap_pyfunction!(solve_perforated, m)?)?;
    m.add_function(wrap_pyfunction!(solve_relaxed, m)?)?;
    m.add_function(wrap_pyfunction!(corrector, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}

//! Python bindings for the driftfem solver.
//!
//! Exposes meshes, coefficient sets (built from the expression grammar),
//! solves, resolvent operations and the estimate constants. Build the
//! importable module with
//! `cargo build --release -p driftfem-py --features extension-module`
//! and rename `libdriftfem_py.so` to `driftfem_py.so` (see `python/build.sh`).

use std::collections::BTreeMap;
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use driftfem::estimates::EstimateConstants;
use driftfem::fields::{lp_norm, CoefficientSet, MatrixField, ScalarField, VectorField};
use driftfem::harness::{
    self, mms_convergence_study, solve_primal, verify_bounds, MmsCase,
};
use driftfem::mesh::{build_structured_mesh, refine_uniform, Rect};
use driftfem::resolvent::DiscreteResolvent;

fn err(e: driftfem::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Structured triangulation of an axis-aligned rectangle.
#[pyclass(name = "Mesh", frozen)]
struct PyMesh {
    inner: Arc<driftfem::Mesh>,
}

#[pymethods]
impl PyMesh {
    /// Mesh(nx, ny=None, rect=None): `ny` defaults to `nx`, `rect` to the
    /// unit square given as (x0, y0, x1, y1).
    #[new]
    #[pyo3(signature = (nx, ny=None, rect=None))]
    fn new(nx: usize, ny: Option<usize>, rect: Option<(f64, f64, f64, f64)>) -> PyResult<Self> {
        let ny = ny.unwrap_or(nx);
        let rect = match rect {
            Some((x0, y0, x1, y1)) => Rect::new(x0, y0, x1, y1).map_err(err)?,
            None => Rect::unit_square(),
        };
        Ok(PyMesh { inner: Arc::new(build_structured_mesh(nx, ny, rect).map_err(err)?) })
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_triangles(&self) -> usize {
        self.inner.n_triangles()
    }

    #[getter]
    fn n_interior(&self) -> usize {
        self.inner.n_interior()
    }

    #[getter]
    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    /// Vertex coordinates as a list of (x, y) pairs.
    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p[0], p[1])).collect()
    }

    /// Triangle connectivity as vertex-index triples.
    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.inner.triangles().iter().map(|t| (t[0], t[1], t[2])).collect()
    }

    /// One level of uniform refinement.
    fn refine(&self) -> PyMesh {
        PyMesh { inner: Arc::new(refine_uniform(&self.inner)) }
    }

    fn __repr__(&self) -> String {
        let (nx, ny) = self.inner.subdivisions();
        format!("Mesh({nx}x{ny}, {} vertices)", self.inner.n_vertices())
    }
}

/// Coefficient set built from expressions over `x`, `y`.
#[pyclass(name = "Problem")]
struct PyProblem {
    coeffs: CoefficientSet,
}

#[pymethods]
impl PyProblem {
    /// Problem(a=("1","0","0","1"), b=("0","0"), c="0", alpha=1.0, f="1",
    /// flux=("0","0"), lam=1.0, upper=1.0, two_star=1.5, q=2.0,
    /// b_singular=None, c_singular=None, f_singular=None)
    #[new]
    #[pyo3(signature = (
        a=("1".into(), "0".into(), "0".into(), "1".into()),
        b=("0".into(), "0".into()),
        c="0".into(),
        alpha=1.0,
        f="1".into(),
        flux=("0".into(), "0".into()),
        lam=1.0,
        upper=1.0,
        two_star=1.5,
        q=2.0,
        b_singular=None,
        c_singular=None,
        f_singular=None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        a: (String, String, String, String),
        b: (String, String),
        c: String,
        alpha: f64,
        f: String,
        flux: (String, String),
        lam: f64,
        upper: f64,
        two_star: f64,
        q: f64,
        b_singular: Option<(f64, f64)>,
        c_singular: Option<(f64, f64)>,
        f_singular: Option<(f64, f64)>,
    ) -> PyResult<Self> {
        let diffusion = MatrixField::from_exprs([&a.0, &a.1, &a.2, &a.3]).map_err(err)?;
        let mut drift = VectorField::from_exprs(&b.0, &b.1).map_err(err)?;
        if let Some(p) = b_singular {
            drift = drift.with_singular_points(vec![[p.0, p.1]]);
        }
        let mut reaction = ScalarField::from_expr(&c).map_err(err)?;
        if let Some(p) = c_singular {
            reaction = reaction.with_singular_points(vec![[p.0, p.1]]);
        }
        let mut source = ScalarField::from_expr(&f).map_err(err)?;
        if let Some(p) = f_singular {
            source = source.with_singular_points(vec![[p.0, p.1]]);
        }
        let flux = VectorField::from_exprs(&flux.0, &flux.1).map_err(err)?;
        let coeffs = CoefficientSet::new(diffusion, drift, reaction, alpha, source, flux, lam, upper)
            .and_then(|c| c.with_exponents(two_star, q))
            .map_err(err)?;
        Ok(PyProblem { coeffs })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.coeffs.alpha
    }

    /// Galerkin solve on the mesh.
    fn solve(&self, mesh: &PyMesh) -> PyResult<PySolution> {
        let sol = solve_primal(&self.coeffs, &mesh.inner).map_err(err)?;
        Ok(PySolution { inner: sol })
    }

    /// Energy, sup-norm and L^r bound checks; returns one dict per check.
    #[pyo3(signature = (mesh, rs=vec![1.0, 2.0], slack=0.02))]
    fn verify(
        &self,
        py: Python<'_>,
        mesh: &PyMesh,
        rs: Vec<f64>,
        slack: f64,
    ) -> PyResult<Vec<Py<PyAny>>> {
        let (_, records) =
            verify_bounds(&self.coeffs, &mesh.inner, &rs, slack, "py").map_err(err)?;
        records
            .into_iter()
            .map(|r| {
                let d = pyo3::types::PyDict::new(py);
                d.set_item("check", r.check)?;
                d.set_item("measured", r.measured)?;
                d.set_item("bound", r.bound)?;
                d.set_item("slack", r.slack)?;
                d.set_item("pass", r.pass)?;
                Ok(d.into_any().unbind())
            })
            .collect()
    }

    /// Relative residual of the discrete duality identity for a nodal
    /// multiplier.
    fn duality_residual(&self, mesh: &PyMesh, psi: Vec<f64>) -> PyResult<f64> {
        if psi.len() != mesh.inner.n_vertices() {
            return Err(PyValueError::new_err(format!(
                "multiplier has {} entries, mesh has {} vertices",
                psi.len(),
                mesh.inner.n_vertices()
            )));
        }
        harness::duality_check(&self.coeffs, &mesh.inner, &psi).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Problem({})", self.coeffs.describe())
    }
}

/// A solved problem: nodal values plus norms of the discrete function.
#[pyclass(name = "Solution", frozen)]
struct PySolution {
    inner: harness::Solution,
}

#[pymethods]
impl PySolution {
    /// Nodal values over all mesh vertices (zero on the boundary).
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.nodal().to_vec()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual()
    }

    /// L^p norm of the finite element function; `p = inf` accepted as
    /// float('inf').
    fn lp(&self, p: f64) -> f64 {
        self.inner.lp(p)
    }

    fn grad_l2(&self) -> f64 {
        self.inner.grad_l2()
    }

    fn h10(&self) -> f64 {
        self.inner.h10_norm()
    }
}

/// Discrete resolvent of the problem's operator (its shift is ignored).
#[pyclass(name = "Resolvent", frozen)]
struct PyResolvent {
    inner: DiscreteResolvent,
}

#[pymethods]
impl PyResolvent {
    #[new]
    fn new(problem: &PyProblem, mesh: &PyMesh) -> PyResult<Self> {
        Ok(PyResolvent {
            inner: DiscreteResolvent::new(&problem.coeffs, &mesh.inner).map_err(err)?,
        })
    }

    /// Applies `G_alpha` to full nodal data.
    fn apply(&self, alpha: f64, f: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply(alpha, &f).map_err(err)
    }

    /// Range check for data in [0, 1]; returns (pass, min, max, tol).
    #[pyo3(signature = (alpha, f, tol=None))]
    fn check_submarkov(
        &self,
        alpha: f64,
        f: Vec<f64>,
        tol: Option<f64>,
    ) -> PyResult<(bool, f64, f64, f64)> {
        let rep = self.inner.check_submarkov(alpha, &f, tol).map_err(err)?;
        Ok((rep.pass, rep.min, rep.max, rep.tol))
    }

    /// Whether the operator passes the matrix sign test for the exact
    /// maximum principle.
    #[getter]
    fn strict_tier(&self) -> bool {
        self.inner.strict_tier()
    }

    /// `||alpha G_alpha f - f||_{L^1}` per shift.
    fn strong_continuity(&self, f: Vec<f64>, alphas: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
        self.inner.strong_continuity_sweep(&f, &alphas).map_err(err)
    }
}

/// Explicit estimate constants as a dict.
#[pyfunction]
#[pyo3(signature = (d=2, q=2.0, lam=1.0, volume=1.0, two_star=1.5))]
fn constants(d: usize, q: f64, lam: f64, volume: f64, two_star: f64) -> PyResult<BTreeMap<String, f64>> {
    let c = EstimateConstants::compute(d, q, lam, two_star, volume).map_err(err)?;
    Ok(c.table().into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

/// L^p norm of an expression over a mesh.
#[pyfunction]
fn lp_norm_expr(expr: &str, p: f64, mesh: &PyMesh) -> PyResult<f64> {
    let f = ScalarField::from_expr(expr).map_err(err)?;
    lp_norm(&f, p, &mesh.inner).map_err(err)
}

/// One convergence row: (n, h, l2_error, h1_error, l2_order, h1_order).
type MmsRow = (usize, f64, f64, f64, Option<f64>, Option<f64>);

/// Manufactured-solution convergence table.
#[pyfunction]
#[pyo3(signature = (case="diffusion", levels=vec![8, 16, 32]))]
fn mms_study(case: &str, levels: Vec<usize>) -> PyResult<Vec<MmsRow>> {
    let case = match case {
        "diffusion" => MmsCase::PureDiffusion,
        "drift" => MmsCase::ConstantDrift,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown case {other:?}; expected diffusion or drift"
            )))
        }
    };
    let rows = mms_convergence_study(case, &levels).map_err(err)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.n, r.h, r.l2_error, r.h1_error, r.l2_order, r.h1_order))
        .collect())
}

#[pymodule]
fn driftfem_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyResolvent>()?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(lp_norm_expr, m)?)?;
    m.add_function(wrap_pyfunction!(mms_study, m)?)?;
    Ok(())
}

//! Coefficient fields, their validators, and the mollification pipeline.
//!
//! A field is evaluated only at quadrature points (or, for nodal sampling, at
//! mesh vertices), in one of three ways: an analytic map over `(x, y)`, a
//! per-element constant, or per-vertex nodal values with linear interpolation.
//! Analytic fields may declare finitely many singular points at which
//! evaluation is an error; singular centers are required to sit on vertices or
//! the boundary so quadrature points never coincide with them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mesh::{Mesh, Point, QuadRule};

/// Componentwise linear structure shared by scalar, vector and matrix values.
pub trait FieldValue: Copy + Send + Sync + 'static {
    fn zero() -> Self;
    fn scaled_add(self, c: f64, v: Self) -> Self;
    fn scale(self, c: f64) -> Self;
    fn sub(self, v: Self) -> Self;
    fn is_finite(&self) -> bool;
    /// Pointwise magnitude: |v| for scalars, Euclidean norm for vectors,
    /// Frobenius norm for matrices.
    fn magnitude(&self) -> f64;
}

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];

impl FieldValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scaled_add(self, c: f64, v: Self) -> Self {
        self + c * v
    }
    fn scale(self, c: f64) -> Self {
        c * self
    }
    fn sub(self, v: Self) -> Self {
        self - v
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl FieldValue for Vec2 {
    fn zero() -> Self {
        [0.0; 2]
    }
    fn scaled_add(self, c: f64, v: Self) -> Self {
        [self[0] + c * v[0], self[1] + c * v[1]]
    }
    fn scale(self, c: f64) -> Self {
        [c * self[0], c * self[1]]
    }
    fn sub(self, v: Self) -> Self {
        [self[0] - v[0], self[1] - v[1]]
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
    fn magnitude(&self) -> f64 {
        self[0].hypot(self[1])
    }
}

impl FieldValue for Mat2 {
    fn zero() -> Self {
        [[0.0; 2]; 2]
    }
    fn scaled_add(self, c: f64, v: Self) -> Self {
        [
            [self[0][0] + c * v[0][0], self[0][1] + c * v[0][1]],
            [self[1][0] + c * v[1][0], self[1][1] + c * v[1][1]],
        ]
    }
    fn scale(self, c: f64) -> Self {
        [
            [c * self[0][0], c * self[0][1]],
            [c * self[1][0], c * self[1][1]],
        ]
    }
    fn sub(self, v: Self) -> Self {
        [
            [self[0][0] - v[0][0], self[0][1] - v[0][1]],
            [self[1][0] - v[1][0], self[1][1] - v[1][1]],
        ]
    }
    fn is_finite(&self) -> bool {
        self.iter().flatten().all(|v| v.is_finite())
    }
    fn magnitude(&self) -> f64 {
        self.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

enum Kind<T> {
    Analytic(Arc<dyn Fn(f64, f64) -> T + Send + Sync>),
    PerElement(Arc<Vec<T>>),
    Nodal(Arc<Vec<T>>),
}

impl<T> Clone for Kind<T> {
    fn clone(&self) -> Self {
        match self {
            Kind::Analytic(f) => Kind::Analytic(f.clone()),
            Kind::PerElement(v) => Kind::PerElement(v.clone()),
            Kind::Nodal(v) => Kind::Nodal(v.clone()),
        }
    }
}

/// A coefficient field with values of type `T`.
#[derive(Clone)]
pub struct Field<T> {
    kind: Kind<T>,
    singular: Vec<Point>,
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<Vec2>;
pub type MatrixField = Field<Mat2>;

const SINGULAR_RADIUS: f64 = 1e-13;

impl<T: FieldValue> Field<T> {
    pub fn analytic(f: impl Fn(f64, f64) -> T + Send + Sync + 'static) -> Self {
        Field { kind: Kind::Analytic(Arc::new(f)), singular: Vec::new() }
    }

    pub fn constant(v: T) -> Self {
        Field::analytic(move |_, _| v)
    }

    pub fn per_element(values: Vec<T>) -> Self {
        Field { kind: Kind::PerElement(Arc::new(values)), singular: Vec::new() }
    }

    pub fn nodal(values: Vec<T>) -> Self {
        Field { kind: Kind::Nodal(Arc::new(values)), singular: Vec::new() }
    }

    /// Declares isolated singular points; evaluation there is an error.
    pub fn with_singular_points(mut self, points: Vec<Point>) -> Self {
        self.singular = points;
        self
    }

    pub fn singular_points(&self) -> &[Point] {
        &self.singular
    }

    pub fn is_nodal(&self) -> bool {
        matches!(self.kind, Kind::Nodal(_))
    }

    /// Evaluates the field at point `p` inside element `elem`.
    pub fn eval(&self, mesh: &Mesh, elem: usize, p: Point) -> Result<T> {
        for s in &self.singular {
            if (p[0] - s[0]).hypot(p[1] - s[1]) <= SINGULAR_RADIUS {
                return Err(Error::FieldEval {
                    x: p[0],
                    y: p[1],
                    reason: "declared singular point".into(),
                });
            }
        }
        let v = match &self.kind {
            Kind::Analytic(f) => f(p[0], p[1]),
            Kind::PerElement(vals) => vals[elem],
            Kind::Nodal(vals) => {
                let l = mesh.barycentric(elem, p);
                let tri = mesh.triangle(elem);
                T::zero()
                    .scaled_add(l[0], vals[tri[0]])
                    .scaled_add(l[1], vals[tri[1]])
                    .scaled_add(l[2], vals[tri[2]])
            }
        };
        if !v.is_finite() {
            return Err(Error::FieldEval {
                x: p[0],
                y: p[1],
                reason: "non-finite value".into(),
            });
        }
        Ok(v)
    }

    /// Nodal samples at every mesh vertex (errors at singular vertices).
    pub fn sample_nodal(&self, mesh: &Mesh) -> Result<Vec<T>> {
        match &self.kind {
            Kind::Nodal(vals) => {
                if vals.len() != mesh.n_vertices() {
                    return Err(Error::InvalidParameter(format!(
                        "nodal field has {} values for a mesh with {} vertices",
                        vals.len(),
                        mesh.n_vertices()
                    )));
                }
                Ok(vals.as_ref().clone())
            }
            _ => (0..mesh.n_vertices())
                .map(|v| {
                    let p = mesh.vertex(v);
                    // Vertex sampling bypasses element lookup for analytic and
                    // per-element kinds; element 0 is a placeholder.
                    self.eval_at_point(p)
                })
                .collect(),
        }
    }

    fn eval_at_point(&self, p: Point) -> Result<T> {
        for s in &self.singular {
            if (p[0] - s[0]).hypot(p[1] - s[1]) <= SINGULAR_RADIUS {
                return Err(Error::FieldEval {
                    x: p[0],
                    y: p[1],
                    reason: "declared singular point".into(),
                });
            }
        }
        let v = match &self.kind {
            Kind::Analytic(f) => f(p[0], p[1]),
            _ => {
                return Err(Error::InvalidParameter(
                    "point evaluation without an element requires an analytic field".into(),
                ))
            }
        };
        if !v.is_finite() {
            return Err(Error::FieldEval {
                x: p[0],
                y: p[1],
                reason: "non-finite value".into(),
            });
        }
        Ok(v)
    }
}

impl ScalarField {
    /// Builds an analytic scalar field from the config expression grammar.
    pub fn from_expr(src: &str) -> Result<Self> {
        let e = Expr::parse(src)?;
        Ok(Field::analytic(move |x, y| e.eval(x, y)))
    }
}

impl VectorField {
    pub fn zero() -> Self {
        Field::constant([0.0, 0.0])
    }

    pub fn from_exprs(src_x: &str, src_y: &str) -> Result<Self> {
        let ex = Expr::parse(src_x)?;
        let ey = Expr::parse(src_y)?;
        Ok(Field::analytic(move |x, y| [ex.eval(x, y), ey.eval(x, y)]))
    }
}

impl MatrixField {
    pub fn identity() -> Self {
        Field::constant([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn diagonal(a: f64, b: f64) -> Self {
        Field::constant([[a, 0.0], [0.0, b]])
    }

    pub fn from_exprs(entries: [&str; 4]) -> Result<Self> {
        let e: Vec<Expr> = entries
            .iter()
            .map(|s| Expr::parse(s))
            .collect::<Result<_>>()?;
        let [e11, e12, e21, e22]: [Expr; 4] = e.try_into().expect("four entries");
        Ok(Field::analytic(move |x, y| {
            [
                [e11.eval(x, y), e12.eval(x, y)],
                [e21.eval(x, y), e22.eval(x, y)],
            ]
        }))
    }

    /// The transposed matrix field, with the same singular set.
    pub fn transposed(&self) -> Self {
        let inner = self.clone();
        let singular = self.singular.clone();
        let mut f = Field::analytic(move |_x, _y| [[0.0; 2]; 2]);
        // Transposition must go through the element-aware path so nodal and
        // per-element kinds keep working; wrap instead of closing over eval.
        f.kind = match &inner.kind {
            Kind::Analytic(g) => {
                let g = g.clone();
                Kind::Analytic(Arc::new(move |x, y| {
                    let m = g(x, y);
                    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
                }))
            }
            Kind::PerElement(vals) => Kind::PerElement(Arc::new(
                vals.iter()
                    .map(|m| [[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
                    .collect(),
            )),
            Kind::Nodal(vals) => Kind::Nodal(Arc::new(
                vals.iter()
                    .map(|m| [[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
                    .collect(),
            )),
        };
        f.singular = singular;
        f
    }
}

/// Drift with an unbounded magnitude but admissible sign structure:
/// `B(x) = -(x - center) * ||x - center||^(-gamma)` for `gamma` in `(1, 2)`.
///
/// The magnitude `||x - center||^(1 - gamma)` blows up at the center yet stays
/// square integrable in two dimensions, and the distributional divergence
/// `-(2 - gamma) * ||x - center||^(-gamma)` is nonpositive. The center is
/// declared singular and must sit on a vertex or the boundary.
pub fn make_singular_drift(gamma: f64, center: Point) -> Result<VectorField> {
    if !(1.0 < gamma && gamma < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "drift exponent must lie in (1, 2), got {gamma}"
        )));
    }
    let field = Field::analytic(move |x, y| {
        let dx = x - center[0];
        let dy = y - center[1];
        let r = dx.hypot(dy);
        let s = -r.powf(-gamma);
        [s * dx, s * dy]
    });
    Ok(field.with_singular_points(vec![center]))
}

/// Number of midpoint samples per axis in the mollifier quadrature.
const MOLLIFY_GRID: usize = 16;

/// Convolves `field` (extended by zero outside the mesh rectangle) with the
/// standard compactly supported bump of radius `delta / (2n)` and samples the
/// result at mesh vertices, yielding a bounded nodal field.
///
/// The kernel is `exp(-1 / (1 - ||x/eps||^2))` on the unit ball of radius
/// `eps`, discretized by midpoint quadrature on a 16x16 sub-grid and
/// renormalized to unit mass so constants are reproduced exactly.
pub fn mollify_field<T: FieldValue>(
    field: &Field<T>,
    n: usize,
    delta: f64,
    mesh: &Mesh,
) -> Result<Field<T>> {
    if n == 0 || delta <= 0.0 {
        return Err(Error::InvalidParameter(
            "mollification needs n >= 1 and delta > 0".into(),
        ));
    }
    if mesh.rect().shrink(delta).is_none() {
        return Err(Error::InvalidParameter(format!(
            "shrunk domain is empty for delta = {delta}"
        )));
    }
    let eps = delta / (2.0 * n as f64);

    // Midpoint grid on [-eps, eps]^2; the bump vanishes outside the disk.
    let mut offsets = Vec::with_capacity(MOLLIFY_GRID * MOLLIFY_GRID);
    let step = 2.0 * eps / MOLLIFY_GRID as f64;
    let mut total = 0.0;
    for k in 0..MOLLIFY_GRID {
        for l in 0..MOLLIFY_GRID {
            let ox = -eps + (k as f64 + 0.5) * step;
            let oy = -eps + (l as f64 + 0.5) * step;
            let r2 = (ox * ox + oy * oy) / (eps * eps);
            if r2 < 1.0 {
                let w = (-1.0 / (1.0 - r2)).exp();
                offsets.push((ox, oy, w));
                total += w;
            }
        }
    }
    for o in &mut offsets {
        o.2 /= total;
    }

    let mut values = Vec::with_capacity(mesh.n_vertices());
    for v in 0..mesh.n_vertices() {
        let p = mesh.vertex(v);
        let mut acc = T::zero();
        for &(ox, oy, w) in &offsets {
            let q = [p[0] - ox, p[1] - oy];
            let Some(elem) = mesh.locate(q) else {
                continue; // zero extension outside the domain
            };
            match field.eval(mesh, elem, q) {
                Ok(val) => acc = acc.scaled_add(w, val),
                // A sample landing exactly on a singular point carries no mass
                // in the integral; treat it as the zero extension does.
                Err(Error::FieldEval { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        values.push(acc);
    }
    Ok(Field::nodal(values))
}

/// `L^p` norm of a field over the mesh, `p` in `[1, inf]`.
///
/// Finite `p` uses the shared quadrature rule; `p = inf` takes the maximum of
/// the pointwise magnitude over all quadrature points.
pub fn lp_norm<T: FieldValue>(field: &Field<T>, p: f64, mesh: &Mesh) -> Result<f64> {
    lp_norm_of(mesh, p, |elem, pt| field.eval(mesh, elem, pt).map(|v| v.magnitude()))
}

/// `L^p` norm of the pointwise difference `a - b`.
pub fn lp_diff_norm<T: FieldValue>(
    a: &Field<T>,
    b: &Field<T>,
    p: f64,
    mesh: &Mesh,
) -> Result<f64> {
    lp_norm_of(mesh, p, |elem, pt| {
        Ok(a.eval(mesh, elem, pt)?.sub(b.eval(mesh, elem, pt)?).magnitude())
    })
}

/// Shared quadrature loop over a pointwise magnitude.
pub fn lp_norm_of(
    mesh: &Mesh,
    p: f64,
    mut magnitude: impl FnMut(usize, Point) -> Result<f64>,
) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "Lebesgue exponent must satisfy p >= 1, got {p}"
        )));
    }
    let rule = QuadRule::degree4();
    if p.is_infinite() {
        let mut max = 0.0_f64;
        for t in 0..mesh.n_triangles() {
            for k in 0..6 {
                let pt = mesh.barycentric_to_point(t, rule.barycentric[k]);
                max = max.max(magnitude(t, pt)?);
            }
        }
        return Ok(max);
    }
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        for k in 0..6 {
            let pt = mesh.barycentric_to_point(t, rule.barycentric[k]);
            acc += rule.weights[k] * area * magnitude(t, pt)?.powf(p);
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// Result of a coefficient validation.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub pass: bool,
    /// Worst observed value: the minimal eigenvalue of the symmetric part for
    /// ellipticity, the minimal hat-function integral for drift divergence.
    pub worst_value: f64,
    pub worst_point: Point,
    pub detail: String,
}

/// Checks uniform ellipticity of the symmetric part and the entry bound at
/// every quadrature point.
pub fn check_ellipticity(
    a: &MatrixField,
    mesh: &Mesh,
    lambda: f64,
    upper_bound: f64,
) -> Result<ValidationReport> {
    let rule = QuadRule::degree4();
    let mut worst_eig = f64::INFINITY;
    let mut worst_point = [f64::NAN; 2];
    let mut worst_entry = 0.0_f64;
    for t in 0..mesh.n_triangles() {
        for k in 0..6 {
            let pt = mesh.barycentric_to_point(t, rule.barycentric[k]);
            let m = a.eval(mesh, t, pt)?;
            let s12 = 0.5 * (m[0][1] + m[1][0]);
            let mean = 0.5 * (m[0][0] + m[1][1]);
            let rad = (0.25 * (m[0][0] - m[1][1]).powi(2) + s12 * s12).sqrt();
            let min_eig = mean - rad;
            if min_eig < worst_eig {
                worst_eig = min_eig;
                worst_point = pt;
            }
            worst_entry = worst_entry.max(m.iter().flatten().fold(0.0_f64, |a, &v| a.max(v.abs())));
        }
    }
    let pass = worst_eig >= lambda - 1e-12 && worst_entry <= upper_bound + 1e-12;
    Ok(ValidationReport {
        pass,
        worst_value: worst_eig,
        worst_point,
        detail: format!(
            "min symmetric-part eigenvalue {worst_eig:.6e} (required >= {lambda:.6e}), \
             max entry {worst_entry:.6e} (allowed <= {upper_bound:.6e})"
        ),
    })
}

/// Checks the weak sign condition on the drift divergence against every
/// interior nodal hat function: the quadrature value of the drift paired with
/// each hat gradient must be `>= -tol`.
pub fn check_weak_divergence(b: &VectorField, mesh: &Mesh, tol: f64) -> Result<ValidationReport> {
    check_weak_divergence_within(b, mesh, tol, None)
}

/// Same check restricted to hat functions supported inside `region`.
///
/// Mollified fields carry the sign condition only on the shrunk domain (the
/// zero extension acquires surface divergence on the boundary), so their
/// validation passes the inner rectangle here.
pub fn check_weak_divergence_within(
    b: &VectorField,
    mesh: &Mesh,
    tol: f64,
    region: Option<crate::mesh::Rect>,
) -> Result<ValidationReport> {
    let rule = QuadRule::degree4();
    let mut integrals = vec![0.0_f64; mesh.n_vertices()];
    let mut support_ok = vec![true; mesh.n_vertices()];
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangle(t);
        let grads = mesh.basis_gradients(t);
        let area = mesh.area(t);
        if let Some(r) = region {
            let inside = tri.iter().all(|&v| r.contains(mesh.vertex(v)));
            if !inside {
                for &v in &tri {
                    support_ok[v] = false;
                }
            }
        }
        for k in 0..6 {
            let pt = mesh.barycentric_to_point(t, rule.barycentric[k]);
            let bv = b.eval(mesh, t, pt)?;
            let w = rule.weights[k] * area;
            for (local, &v) in tri.iter().enumerate() {
                integrals[v] += w * (bv[0] * grads[local][0] + bv[1] * grads[local][1]);
            }
        }
    }
    let mut min_val = f64::INFINITY;
    let mut worst_point = [f64::NAN; 2];
    let mut tested = 0usize;
    for &v in mesh.interior_vertices() {
        if !support_ok[v] {
            continue;
        }
        tested += 1;
        if integrals[v] < min_val {
            min_val = integrals[v];
            worst_point = mesh.vertex(v);
        }
    }
    if tested == 0 {
        min_val = 0.0;
    }
    Ok(ValidationReport {
        pass: min_val >= -tol,
        worst_value: min_val,
        worst_point,
        detail: format!("min hat-function drift integral {min_val:.6e} (required >= {:.1e})", -tol),
    })
}

/// The full problem data for the Dirichlet problem
/// `-div(A grad u) + <B, grad u> + (c + alpha) u = f - div F`.
#[derive(Clone)]
pub struct CoefficientSet {
    /// Diffusion matrix `A`, possibly non-symmetric.
    pub diffusion: MatrixField,
    /// Drift `B` of weakly nonpositive divergence.
    pub drift: VectorField,
    /// Nonnegative reaction coefficient `c`.
    pub reaction: ScalarField,
    /// Resolvent shift `alpha >= 0`.
    pub alpha: f64,
    /// Scalar source `f`.
    pub source: ScalarField,
    /// Flux source `F` (enters the load as `<F, grad phi>`).
    pub flux: VectorField,
    /// Ellipticity lower bound of the symmetric part of `A`.
    pub lambda: f64,
    /// Upper bound on the entries of `A`.
    pub upper_bound: f64,
    /// Lower Sobolev-conjugate exponent, in `(1, 2)` for the planar solver.
    pub two_star: f64,
    /// Integrability exponent for the boundedness estimates, `q > d/2`,
    /// `q >= two_star`.
    pub q: f64,
    /// Tolerance for the weak-divergence validator; `None` skips the check
    /// (perturbed problems in the stability sweep need no sign condition).
    pub div_tol: Option<f64>,
    /// Skips all validators when set (stress-test override).
    pub skip_validation: bool,
}

impl CoefficientSet {
    /// Plain Poisson-type data: identity diffusion, no drift, no reaction.
    pub fn laplace(alpha: f64, source: ScalarField) -> Result<Self> {
        CoefficientSet::new(
            MatrixField::identity(),
            VectorField::zero(),
            ScalarField::constant(0.0),
            alpha,
            source,
            VectorField::zero(),
            1.0,
            1.0,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        diffusion: MatrixField,
        drift: VectorField,
        reaction: ScalarField,
        alpha: f64,
        source: ScalarField,
        flux: VectorField,
        lambda: f64,
        upper_bound: f64,
    ) -> Result<Self> {
        let set = CoefficientSet {
            diffusion,
            drift,
            reaction,
            alpha,
            source,
            flux,
            lambda,
            upper_bound,
            two_star: 1.5,
            q: 2.0,
            div_tol: Some(1e-9),
            skip_validation: false,
        };
        set.check_scalars()?;
        Ok(set)
    }

    pub fn with_exponents(mut self, two_star: f64, q: f64) -> Result<Self> {
        self.two_star = two_star;
        self.q = q;
        self.check_scalars()?;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    fn check_scalars(&self) -> Result<()> {
        if self.alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be nonnegative, got {}",
                self.alpha
            )));
        }
        if self.lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "ellipticity constant must be positive, got {}",
                self.lambda
            )));
        }
        if !(1.0 < self.two_star && self.two_star < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "planar problems need the lower exponent in (1, 2), got {}",
                self.two_star
            )));
        }
        if !(self.q > 1.0 && self.q >= self.two_star) {
            return Err(Error::InvalidParameter(format!(
                "boundedness exponent must satisfy q > d/2 and q >= {}, got {}",
                self.two_star, self.q
            )));
        }
        Ok(())
    }

    /// Runs the field validators on a mesh. Assembly refuses invalid data
    /// unless `skip_validation` is set.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        if self.skip_validation {
            return Ok(());
        }
        let ell = check_ellipticity(&self.diffusion, mesh, self.lambda, self.upper_bound)?;
        if !ell.pass {
            return Err(Error::Validation(format!("ellipticity: {}", ell.detail)));
        }
        if let Some(tol) = self.div_tol {
            let div = check_weak_divergence(&self.drift, mesh, tol)?;
            if !div.pass {
                return Err(Error::Validation(format!("drift divergence sign: {}", div.detail)));
            }
        }
        // c >= 0 at every sampled quadrature point.
        let rule = QuadRule::degree4();
        for t in 0..mesh.n_triangles() {
            for k in 0..6 {
                let pt = mesh.barycentric_to_point(t, rule.barycentric[k]);
                let c = self.reaction.eval(mesh, t, pt)?;
                if c < -1e-12 {
                    return Err(Error::Validation(format!(
                        "reaction coefficient is negative ({c:.6e}) at ({}, {})",
                        pt[0], pt[1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// One-line description used in report metadata.
    pub fn describe(&self) -> String {
        format!(
            "alpha={:.3e} lambda={:.3e} two_star={} q={}",
            self.alpha, self.lambda, self.two_star, self.q
        )
    }
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("alpha", &self.alpha)
            .field("lambda", &self.lambda)
            .field("two_star", &self.two_star)
            .field("q", &self.q)
            .finish_non_exhaustive()
    }
}

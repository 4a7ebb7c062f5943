//! Structured conforming triangulations of axis-aligned rectangles.
//!
//! A rectangle is subdivided into `nx × ny` cells and every cell is split
//! along the lower-left to upper-right diagonal, so all triangles are right
//! triangles (non-obtuse). This keeps the pure-diffusion stiffness matrix an
//! M-matrix, which the resolvent positivity checks rely on.

use crate::error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rectangle [{x0}, {x1}] x [{y0}, {y1}] has non-positive side lengths"
            )));
        }
        Ok(Rect { x0, y0, x1, y1 })
    }

    pub fn unit_square() -> Self {
        Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    /// Inner rectangle at distance `eps` from every side, or `None` when the
    /// offset swallows the shorter side.
    pub fn shrink(&self, eps: f64) -> Option<Rect> {
        assert!(eps > 0.0, "shrink distance must be positive");
        let half_min = 0.5 * self.width().min(self.height());
        if eps >= half_min {
            return None;
        }
        Some(Rect {
            x0: self.x0 + eps,
            y0: self.y0 + eps,
            x1: self.x1 - eps,
            y1: self.y1 - eps,
        })
    }
}

/// Symmetric 6-point triangle rule, exact for polynomials of total degree 4.
///
/// Points are stored in barycentric coordinates; weights sum to one and are
/// scaled by the element area on use.
pub struct QuadRule {
    pub barycentric: [[f64; 3]; 6],
    pub weights: [f64; 6],
}

const QA1: f64 = 0.816_847_572_980_459;
const QB1: f64 = 0.091_576_213_509_771;
const QW1: f64 = 0.109_951_743_655_322;
const QA2: f64 = 0.108_103_018_168_070;
const QB2: f64 = 0.445_948_490_915_965;
const QW2: f64 = 0.223_381_589_678_011;

static QUAD_DEGREE4: QuadRule = QuadRule {
    barycentric: [
        [QA1, QB1, QB1],
        [QB1, QA1, QB1],
        [QB1, QB1, QA1],
        [QA2, QB2, QB2],
        [QB2, QA2, QB2],
        [QB2, QB2, QA2],
    ],
    weights: [QW1, QW1, QW1, QW2, QW2, QW2],
};

impl QuadRule {
    /// The fixed rule shared by every integral in the crate.
    pub fn degree4() -> &'static QuadRule {
        &QUAD_DEGREE4
    }
}

/// Conforming triangulation of a rectangle.
///
/// Immutable after construction; cheap to share by reference across threads.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
    areas: Vec<f64>,
    interior: Vec<usize>,
    interior_index: Vec<Option<usize>>,
    h: f64,
    rect: Rect,
    nx: usize,
    ny: usize,
}

/// Builds the structured `nx × ny` triangulation of `rect`.
///
/// Vertices are numbered row-major (`j * (nx + 1) + i`); each cell yields two
/// triangles, both oriented counter-clockwise.
pub fn build_structured_mesh(nx: usize, ny: usize, rect: Rect) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter(format!(
            "subdivision counts must be positive, got nx={nx}, ny={ny}"
        )));
    }
    let dx = rect.width() / nx as f64;
    let dy = rect.height() / ny as f64;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary_vertex = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Hit the far edges exactly so boundary vertices sit on the rectangle.
            let x = if i == nx { rect.x1 } else { rect.x0 + i as f64 * dx };
            let y = if j == ny { rect.y1 } else { rect.y0 + j as f64 * dy };
            vertices.push([x, y]);
            boundary_vertex.push(i == 0 || i == nx || j == 0 || j == ny);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v00 = j * (nx + 1) + i;
            let v10 = v00 + 1;
            let v01 = v00 + (nx + 1);
            let v11 = v01 + 1;
            // Diagonal fixed from lower-left to upper-right.
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let areas: Vec<f64> = triangles.iter().map(|t| signed_area(&vertices, t)).collect();
    for (t, &a) in triangles.iter().zip(&areas) {
        if a <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "triangle {t:?} has non-positive area {a}"
            )));
        }
    }

    let mut interior = Vec::new();
    let mut interior_index = vec![None; vertices.len()];
    for (v, &bnd) in boundary_vertex.iter().enumerate() {
        if !bnd {
            interior_index[v] = Some(interior.len());
            interior.push(v);
        }
    }

    let h = triangles
        .iter()
        .map(|t| max_edge_length(&vertices, t))
        .fold(0.0_f64, f64::max);

    Ok(Mesh {
        vertices,
        triangles,
        boundary_vertex,
        areas,
        interior,
        interior_index,
        h,
        rect,
        nx,
        ny,
    })
}

/// One level of uniform (midpoint) refinement.
///
/// On a structured mesh this coincides with doubling the subdivision counts:
/// every coarse triangle is covered by exactly four nested fine triangles and
/// the coarse vertex positions are all retained.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    build_structured_mesh(2 * mesh.nx, 2 * mesh.ny, mesh.rect)
        .expect("refinement of a valid mesh cannot fail")
}

/// Inner rectangle at distance `eps` from the boundary; `None` when empty.
pub fn shrink_domain(rect: Rect, eps: f64) -> Option<Rect> {
    rect.shrink(eps)
}

fn signed_area(vertices: &[Point], t: &[usize; 3]) -> f64 {
    let [a, b, c] = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn max_edge_length(vertices: &[Point], t: &[usize; 3]) -> f64 {
    let mut h: f64 = 0.0;
    for k in 0..3 {
        let p = vertices[t[k]];
        let q = vertices[t[(k + 1) % 3]];
        h = h.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
    }
    h
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    /// Interior vertex ids in ascending order; these index the assembled systems.
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior
    }

    /// Position of vertex `v` in the interior numbering, if interior.
    pub fn interior_index(&self, v: usize) -> Option<usize> {
        self.interior_index[v]
    }

    /// Mesh diameter: the longest edge.
    pub fn diameter(&self) -> f64 {
        self.h
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn subdivisions(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn domain_area(&self) -> f64 {
        self.rect.area()
    }

    /// Physical coordinates of the barycentric point `(l0, l1, l2)` in triangle `t`.
    pub fn barycentric_to_point(&self, t: usize, l: [f64; 3]) -> Point {
        let [a, b, c] = self.triangle_vertices(t);
        [
            l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
            l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
        ]
    }

    pub fn triangle_vertices(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangle_vertices(t);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Constant gradients of the three nodal basis functions on triangle `t`.
    pub fn basis_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangle_vertices(t);
        let inv2a = 1.0 / (2.0 * self.areas[t]);
        [
            [(b[1] - c[1]) * inv2a, (c[0] - b[0]) * inv2a],
            [(c[1] - a[1]) * inv2a, (a[0] - c[0]) * inv2a],
            [(a[1] - b[1]) * inv2a, (b[0] - a[0]) * inv2a],
        ]
    }

    /// Element containing `p`, or `None` outside the rectangle.
    ///
    /// Points on the cell diagonal resolve to the lower triangle.
    pub fn locate(&self, p: Point) -> Option<usize> {
        if !self.rect.contains(p) {
            return None;
        }
        let dx = self.rect.width() / self.nx as f64;
        let dy = self.rect.height() / self.ny as f64;
        let i = (((p[0] - self.rect.x0) / dx).floor() as usize).min(self.nx - 1);
        let j = (((p[1] - self.rect.y0) / dy).floor() as usize).min(self.ny - 1);
        let xi = (p[0] - self.rect.x0) / dx - i as f64;
        let eta = (p[1] - self.rect.y0) / dy - j as f64;
        let cell = 2 * (j * self.nx + i);
        Some(if eta <= xi { cell } else { cell + 1 })
    }

    /// Distinct edges as sorted vertex pairs with their incidence counts.
    pub fn edge_census(&self) -> std::collections::BTreeMap<(usize, usize), usize> {
        let mut edges = std::collections::BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                *edges.entry(key).or_insert(0) += 1;
            }
        }
        edges
    }

    /// Writes the vertex and triangle tables as plain text.
    ///
    /// Layout: a `# vertices` section with rows `id,x,y,boundary` followed by
    /// a `# triangles` section with rows `id,v0,v1,v2,area`.
    pub fn export<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# vertices {}", self.n_vertices())?;
        writeln!(w, "id,x,y,boundary")?;
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{}",
                i,
                v[0],
                v[1],
                u8::from(self.boundary_vertex[i])
            )?;
        }
        writeln!(w, "# triangles {}", self.n_triangles())?;
        writeln!(w, "id,v0,v1,v2,area")?;
        for (i, t) in self.triangles.iter().enumerate() {
            writeln!(w, "{},{},{},{},{:.16e}", i, t[0], t[1], t[2], self.areas[i])?;
        }
        Ok(())
    }
}

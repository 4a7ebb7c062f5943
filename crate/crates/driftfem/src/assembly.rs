//! Galerkin assembly of the primal and dual bilinear forms on P1 elements.
//!
//! Primal entry: `int <A grad phi_j, grad phi_i> + <B, grad phi_j> phi_i
//! + (c + alpha) phi_j phi_i`; the dual form moves the drift onto the test
//! function: `int <A grad phi_j, grad phi_i> + phi_j <B, grad phi_i>
//! + (c + alpha) phi_j phi_i`. Homogeneous Dirichlet data is imposed by
//! eliminating boundary rows and columns, and all terms share one quadrature
//! rule so the algebraic identities between the assembled operators hold at
//! machine precision (in particular the dual of `A` equals the transposed
//! primal of `A` transposed, and the shift enters exactly as `alpha * M`).

use crate::error::Result;
use crate::fields::{CoefficientSet, ScalarField, VectorField};
use crate::mesh::{Mesh, QuadRule};
use crate::sparse::Csr;

/// Assembled linear system over the interior nodes.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    /// Operator matrix with boundary rows/columns eliminated.
    pub k: Csr,
    /// Mass matrix on the same sparsity pattern.
    pub m: Csr,
    /// Load vector `int f phi_i + <F, grad phi_i>`.
    pub b: Vec<f64>,
    /// Shift used during assembly.
    pub alpha: f64,
    /// Largest mesh Peclet number `||B|| h / (2 lambda)` over quadrature
    /// points; above one the plain Galerkin form may oscillate.
    pub peclet: f64,
    /// Vertex count of the originating mesh (consistency guard).
    pub mesh_vertices: usize,
    /// Short description of the coefficient set.
    pub fingerprint: String,
}

/// Interior-node sparsity pattern induced by mesh adjacency.
fn interior_pattern(mesh: &Mesh) -> Vec<Vec<usize>> {
    let n = mesh.n_interior();
    let mut columns: Vec<Vec<usize>> = vec![Vec::with_capacity(8); n];
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangle(t);
        for &vi in &tri {
            let Some(i) = mesh.interior_index(vi) else { continue };
            for &vj in &tri {
                if let Some(j) = mesh.interior_index(vj) {
                    columns[i].push(j);
                }
            }
        }
    }
    for row in &mut columns {
        row.sort_unstable();
        row.dedup();
    }
    columns
}

/// Mass matrix `int phi_j phi_i` over interior nodes.
pub fn assemble_mass(mesh: &Mesh) -> Csr {
    let pattern = interior_pattern(mesh);
    let n = mesh.n_interior();
    let mut m = Csr::from_pattern(n, n, pattern);
    let rule = QuadRule::degree4();
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangle(t);
        let area = mesh.area(t);
        for k in 0..6 {
            let l = rule.barycentric[k];
            let w = rule.weights[k] * area;
            for (a, &va) in tri.iter().enumerate() {
                let Some(i) = mesh.interior_index(va) else { continue };
                for (b, &vb) in tri.iter().enumerate() {
                    if let Some(j) = mesh.interior_index(vb) {
                        m.add_to(i, j, w * l[a] * l[b]);
                    }
                }
            }
        }
    }
    m
}

/// Load vector over interior nodes.
pub fn assemble_load(f: &ScalarField, flux: &VectorField, mesh: &Mesh) -> Result<Vec<f64>> {
    let all = assemble_load_all_nodes(f, flux, mesh)?;
    Ok(mesh.interior_vertices().iter().map(|&v| all[v]).collect())
}

/// Diagnostic load over every node, boundary included; the interior slice of
/// this vector is the actual right-hand side.
pub fn assemble_load_all_nodes(
    f: &ScalarField,
    flux: &VectorField,
    mesh: &Mesh,
) -> Result<Vec<f64>> {
    let rule = QuadRule::degree4();
    let mut b = vec![0.0; mesh.n_vertices()];
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangle(t);
        let grads = mesh.basis_gradients(t);
        let area = mesh.area(t);
        for k in 0..6 {
            let l = rule.barycentric[k];
            let pt = mesh.barycentric_to_point(t, l);
            let w = rule.weights[k] * area;
            let fv = f.eval(mesh, t, pt)?;
            let gv = flux.eval(mesh, t, pt)?;
            for (a, &va) in tri.iter().enumerate() {
                b[va] += w * (fv * l[a] + gv[0] * grads[a][0] + gv[1] * grads[a][1]);
            }
        }
    }
    Ok(b)
}

/// Assembles the primal operator and load.
pub fn assemble_primal(coeffs: &CoefficientSet, mesh: &Mesh) -> Result<AssembledSystem> {
    assemble(coeffs, mesh, false)
}

/// Assembles the dual operator (drift paired with the test gradient) and the
/// same load functional.
pub fn assemble_dual(coeffs: &CoefficientSet, mesh: &Mesh) -> Result<AssembledSystem> {
    assemble(coeffs, mesh, true)
}

fn assemble(coeffs: &CoefficientSet, mesh: &Mesh, dual: bool) -> Result<AssembledSystem> {
    coeffs.validate(mesh)?;
    let pattern = interior_pattern(mesh);
    let n = mesh.n_interior();
    let mut k = Csr::from_pattern(n, n, pattern);
    let rule = QuadRule::degree4();
    let h = mesh.diameter();
    let mut peclet = 0.0_f64;

    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangle(t);
        let grads = mesh.basis_gradients(t);
        let area = mesh.area(t);
        let mut local = [[0.0_f64; 3]; 3];
        for q in 0..6 {
            let l = rule.barycentric[q];
            let pt = mesh.barycentric_to_point(t, l);
            let w = rule.weights[q] * area;
            let a = coeffs.diffusion.eval(mesh, t, pt)?;
            let b = coeffs.drift.eval(mesh, t, pt)?;
            let c = coeffs.reaction.eval(mesh, t, pt)? + coeffs.alpha;
            peclet = peclet.max(b[0].hypot(b[1]) * h / (2.0 * coeffs.lambda));
            for jb in 0..3 {
                let agrad = [
                    a[0][0] * grads[jb][0] + a[0][1] * grads[jb][1],
                    a[1][0] * grads[jb][0] + a[1][1] * grads[jb][1],
                ];
                for ia in 0..3 {
                    let diffusion = agrad[0] * grads[ia][0] + agrad[1] * grads[ia][1];
                    let drift = if dual {
                        // <B, grad phi_i> phi_j
                        (b[0] * grads[ia][0] + b[1] * grads[ia][1]) * l[jb]
                    } else {
                        // <B, grad phi_j> phi_i
                        (b[0] * grads[jb][0] + b[1] * grads[jb][1]) * l[ia]
                    };
                    local[ia][jb] += w * (diffusion + drift + c * l[jb] * l[ia]);
                }
            }
        }
        for (ia, &va) in tri.iter().enumerate() {
            let Some(i) = mesh.interior_index(va) else { continue };
            for (jb, &vb) in tri.iter().enumerate() {
                if let Some(j) = mesh.interior_index(vb) {
                    k.add_to(i, j, local[ia][jb]);
                }
            }
        }
    }

    let m = assemble_mass(mesh);
    let b = assemble_load(&coeffs.source, &coeffs.flux, mesh)?;
    Ok(AssembledSystem {
        k,
        m,
        b,
        alpha: coeffs.alpha,
        peclet,
        mesh_vertices: mesh.n_vertices(),
        fingerprint: coeffs.describe(),
    })
}

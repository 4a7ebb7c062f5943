//! Finite element solver and verification harness for planar Dirichlet
//! problems of the form
//!
//! ```text
//! -div(A grad u) + <B, grad u> + (c + alpha) u = f - div F   in U
//!                                            u = 0           on the boundary
//! ```
//!
//! with merely bounded (possibly non-symmetric) diffusion `A`, square
//! integrable drift `B` of weakly nonpositive divergence, and a nonnegative
//! singular reaction `c`. Alongside the P1 Galerkin solver the crate computes
//! the explicit constants of the underlying energy, boundedness, contraction
//! and stability estimates and certifies them numerically on structured
//! meshes: resolvent algebra to machine precision, sub-Markov range checks,
//! `L^r` contraction, duality identities, and coefficient-perturbation
//! stability sweeps.

pub mod assembly;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimates;
pub mod expr;
pub mod fields;
pub mod harness;
pub mod linsolve;
pub mod mesh;
pub mod resolvent;
pub mod sparse;

pub use error::{Error, Result};
pub use fields::{
    check_ellipticity, check_weak_divergence, check_weak_divergence_within, lp_diff_norm,
    lp_norm, make_singular_drift, mollify_field, CoefficientSet, Field, MatrixField,
    ScalarField, VectorField,
};
pub use mesh::{build_structured_mesh, refine_uniform, shrink_domain, Mesh, Point, Rect};

//! Discrete resolvent family `G_alpha = (K0 + alpha M)^{-1} M`.
//!
//! `K0` is the operator assembled with zero shift (diffusion + drift +
//! reaction), `M` the mass matrix on the same pattern. Because the family is
//! defined through exact matrix algebra, the resolvent identity
//! `G_a - G_b = (b - a) G_b G_a` holds to solver precision, and `G_alpha f`
//! is precisely the Galerkin solution of the shifted problem with load `M f`.

use std::sync::Arc;

use crate::assembly::assemble_primal;
use crate::error::{Error, Result};
use crate::fields::{lp_norm, CoefficientSet, ScalarField};
use crate::linsolve::BandLu;
use crate::mesh::Mesh;
use crate::sparse::Csr;

/// Sub-Markov range tolerance when the shifted operator passes the M-matrix
/// sign test (the discrete maximum principle is then exact).
pub const SUBMARKOV_TOL_STRICT: f64 = 1e-12;
/// Relaxed tolerance otherwise: plain Galerkin with drift can overshoot the
/// range slightly.
pub const SUBMARKOV_TOL_RELAXED: f64 = 1e-3;

/// The discrete resolvent data: shift-free operator and mass matrix.
pub struct DiscreteResolvent {
    k0: Csr,
    m: Csr,
    mesh: Arc<Mesh>,
    strict_tier: bool,
}

/// A factorization of `K0 + alpha M` reusable across many applications.
pub struct ResolventOp {
    lu: BandLu,
    alpha: f64,
}

impl DiscreteResolvent {
    /// Assembles `K0` and `M` from the coefficient set (its shift and load
    /// data are ignored).
    pub fn new(coeffs: &CoefficientSet, mesh: &Arc<Mesh>) -> Result<DiscreteResolvent> {
        let mut zero_shift = coeffs.clone();
        zero_shift.alpha = 0.0;
        let sys = assemble_primal(&zero_shift, mesh)?;
        // The sign structure of K0 decides the tolerance tier for the range
        // checks: with nonpositive off-diagonal entries and nonnegative row
        // sums the maximum principle is exact.
        let strict_tier = sys.k.is_m_matrix(1e-13, 1e-10);
        Ok(DiscreteResolvent { k0: sys.k, m: sys.m, mesh: mesh.clone(), strict_tier })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn n_interior(&self) -> usize {
        self.k0.n_rows()
    }

    pub fn operator(&self) -> &Csr {
        &self.k0
    }

    pub fn mass(&self) -> &Csr {
        &self.m
    }

    /// Whether the strict (machine precision) range tolerance applies.
    pub fn strict_tier(&self) -> bool {
        self.strict_tier
    }

    /// Default sub-Markov tolerance for this operator.
    pub fn auto_tolerance(&self) -> f64 {
        if self.strict_tier {
            SUBMARKOV_TOL_STRICT
        } else {
            SUBMARKOV_TOL_RELAXED
        }
    }

    /// Factors `K0 + alpha M` for repeated application.
    pub fn factorize(&self, alpha: f64) -> Result<ResolventOp> {
        if alpha <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "resolvent parameter must be positive, got {alpha}"
            )));
        }
        let shifted = self.k0.add_scaled(alpha, &self.m);
        let lu = BandLu::factor(&shifted)?;
        Ok(ResolventOp { lu, alpha })
    }

    /// Applies `G_alpha` to a full nodal vector; boundary entries of the
    /// input are ignored and the output vanishes on the boundary.
    pub fn apply(&self, alpha: f64, f: &[f64]) -> Result<Vec<f64>> {
        self.factorize(alpha)?.apply(self, f)
    }

    /// Gathers the interior entries of a full nodal vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.mesh.interior_vertices().iter().map(|&v| full[v]).collect()
    }

    /// Scatters an interior vector into a full nodal vector with zero
    /// boundary values.
    pub fn extend(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.mesh.n_vertices()];
        for (k, &v) in self.mesh.interior_vertices().iter().enumerate() {
            full[v] = interior[k];
        }
        full
    }

    /// Mass-weighted norm of a full nodal vector: exactly the L2 norm of the
    /// piecewise-linear function it represents (with zero boundary trace).
    pub fn m_norm(&self, full: &[f64]) -> f64 {
        let v = self.restrict(full);
        let mv = self.m.matvec(&v);
        v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }

    /// Range check for the sub-Markov property: for nodal data in `[0, 1]`,
    /// `alpha G_alpha f` must stay in `[-tol, 1 + tol]`.
    pub fn check_submarkov(
        &self,
        alpha: f64,
        f: &[f64],
        tol: Option<f64>,
    ) -> Result<SubmarkovReport> {
        for (v, &fv) in f.iter().enumerate() {
            if !(-1e-14..=1.0 + 1e-14).contains(&fv) {
                return Err(Error::InvalidParameter(format!(
                    "sub-Markov input must lie in [0, 1]; node {v} has {fv}"
                )));
            }
        }
        let tol = tol.unwrap_or_else(|| self.auto_tolerance());
        let u = self.apply(alpha, f)?;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in self.mesh.interior_vertices() {
            let s = alpha * u[v];
            min = min.min(s);
            max = max.max(s);
        }
        if self.n_interior() == 0 {
            min = 0.0;
            max = 0.0;
        }
        Ok(SubmarkovReport { pass: min >= -tol && max <= 1.0 + tol, min, max, tol })
    }

    /// `L^r` contraction check: the resolvent output must satisfy
    /// `||G_alpha f||_r <= (1 + slack) / alpha * ||f||_r`.
    ///
    /// Analytic inputs are sampled nodally for the solve while their norm is
    /// measured on the analytic field itself.
    pub fn check_lr_contraction(
        &self,
        alpha: f64,
        f: &ScalarField,
        r: f64,
        slack: f64,
    ) -> Result<ContractionReport> {
        let f_nodal = f.sample_nodal(&self.mesh)?;
        let u = self.apply(alpha, &f_nodal)?;
        let u_field = ScalarField::nodal(u);
        let measured = lp_norm(&u_field, r, &self.mesh)?;
        let f_norm = lp_norm(f, r, &self.mesh)?;
        let bound = f_norm / alpha;
        Ok(ContractionReport {
            pass: measured <= (1.0 + slack) * bound,
            measured,
            bound,
            r,
            slack,
        })
    }

    /// Strong-continuity diagnostic: the `L^1` error `||alpha G_alpha f - f||`
    /// per shift, for an increasing list of shifts.
    pub fn strong_continuity_sweep(&self, f: &[f64], alphas: &[f64]) -> Result<Vec<(f64, f64)>> {
        if alphas.windows(2).any(|w| w[0] >= w[1]) || alphas.iter().any(|&a| a <= 0.0) {
            return Err(Error::InvalidParameter(
                "shift list must be positive and strictly increasing".into(),
            ));
        }
        let mut out = Vec::with_capacity(alphas.len());
        for &alpha in alphas {
            let u = self.apply(alpha, f)?;
            let diff: Vec<f64> = u
                .iter()
                .zip(f)
                .map(|(&ui, &fi)| alpha * ui - fi)
                .collect();
            let err = lp_norm(&ScalarField::nodal(diff), 1.0, &self.mesh)?;
            out.push((alpha, err));
        }
        Ok(out)
    }
}

impl ResolventOp {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Applies the factored resolvent to a full nodal vector.
    pub fn apply(&self, r: &DiscreteResolvent, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != r.mesh.n_vertices() {
            return Err(Error::InvalidParameter(format!(
                "nodal vector has length {}, mesh has {} vertices",
                f.len(),
                r.mesh.n_vertices()
            )));
        }
        let fi = r.restrict(f);
        let rhs = r.m.matvec(&fi);
        let mut u = rhs;
        self.lu.solve_in_place(&mut u);
        Ok(r.extend(&u))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SubmarkovReport {
    pub pass: bool,
    pub min: f64,
    pub max: f64,
    pub tol: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ContractionReport {
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
    pub r: f64,
    pub slack: f64,
}

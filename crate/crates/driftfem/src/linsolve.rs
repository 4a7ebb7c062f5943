//! Sparse linear solvers for the assembled non-symmetric systems.
//!
//! The default path factors the matrix in banded storage with partial
//! pivoting; structured-mesh systems have small bandwidth under the row-major
//! node ordering, so this is a deterministic sparse direct solve. Larger or
//! wide-band systems fall back to BiCGStab preconditioned with ILU(0).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, norm2, Csr};

/// Solver configuration.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Target relative residual.
    pub tol: f64,
    /// Iteration cap for the iterative path.
    pub max_iter: usize,
    /// Unknown-count ceiling for the direct path.
    pub direct_threshold: usize,
    /// Force a particular method instead of choosing by size.
    pub method: MethodChoice,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 4000,
            direct_threshold: 200_000,
            method: MethodChoice::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodChoice {
    Auto,
    Direct,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Direct,
    BiCgStab,
}

/// Outcome of a linear solve.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub u: Vec<f64>,
    /// Relative residual `||Ku - b|| / ||b||` (absolute when `b = 0`).
    pub residual: f64,
    pub method: Method,
    /// Iteration count; zero for the direct path.
    pub iterations: usize,
}

/// Solves `K u = b`.
pub fn solve_sparse(k: &Csr, b: &[f64], opts: &SolveOptions) -> Result<SolveReport> {
    let n = k.n_rows();
    if k.n_cols() != n || b.len() != n {
        return Err(Error::InvalidParameter(format!(
            "system shape mismatch: {}x{} matrix, rhs of length {}",
            n,
            k.n_cols(),
            b.len()
        )));
    }
    if n == 0 {
        return Ok(SolveReport { u: Vec::new(), residual: 0.0, method: Method::Direct, iterations: 0 });
    }
    let use_direct = match opts.method {
        MethodChoice::Direct => true,
        MethodChoice::Iterative => false,
        MethodChoice::Auto => n <= opts.direct_threshold,
    };
    if use_direct {
        let lu = BandLu::factor(k)?;
        let mut u = lu.solve(b);
        // One step of iterative refinement tightens the last digits cheaply.
        let mut residual = rel_residual(k, &u, b);
        if residual > 1e-14 {
            let mut r = b.to_vec();
            let ku = k.matvec(&u);
            for (ri, kui) in r.iter_mut().zip(&ku) {
                *ri -= kui;
            }
            let du = lu.solve(&r);
            axpy(&mut u, 1.0, &du);
            residual = rel_residual(k, &u, b);
        }
        if residual > opts.tol {
            return Err(Error::NonConvergence { residual, iterations: 0 });
        }
        Ok(SolveReport { u, residual, method: Method::Direct, iterations: 0 })
    } else {
        let ilu = Ilu0::factor(k)?;
        let (u, iterations, residual) = bicgstab(k, b, &ilu, opts.tol, opts.max_iter)?;
        Ok(SolveReport { u, residual, method: Method::BiCgStab, iterations })
    }
}

fn rel_residual(k: &Csr, u: &[f64], b: &[f64]) -> f64 {
    let ku = k.matvec(u);
    let mut r = 0.0;
    for (kui, bi) in ku.iter().zip(b) {
        r += (kui - bi) * (kui - bi);
    }
    let nb = norm2(b);
    if nb > 0.0 {
        r.sqrt() / nb
    } else {
        r.sqrt()
    }
}

/// LU factorization in banded storage with partial pivoting.
///
/// Storage follows the LAPACK band layout: column `j` lives in a strip of
/// height `2*kl + ku + 1`, entry `(i, j)` at offset `kl + ku + i - j`, with
/// the top `kl` rows reserved for pivoting fill.
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn factor(k: &Csr) -> Result<BandLu> {
        let n = k.n_rows();
        let (kl, ku) = k.bandwidths();
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ldab * n];
        for i in 0..n {
            let (cols, vals) = k.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                ab[j * ldab + (kv + i - j)] = v;
            }
        }
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize; // last column touched by previous pivot swaps

        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let (head, tail) = ab.split_at_mut((j + 1) * ldab);
            let col_j = &mut head[j * ldab..];
            // Pivot search down column j.
            let mut jp = 0usize;
            let mut best = col_j[kv].abs();
            for i in 1..=km {
                let a = col_j[kv + i].abs();
                if a > best {
                    best = a;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            let pivot = col_j[kv + jp];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularSystem(format!(
                    "zero pivot in column {j} of the band factorization"
                )));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            // Swap rows j and j + jp across the active columns.
            if jp != 0 {
                col_j.swap(kv, kv + jp);
                for col in j + 1..=ju {
                    let base = (col - j - 1) * ldab;
                    let a = kv + j - col;
                    tail.swap(base + a, base + a + jp);
                }
            }
            // Multipliers.
            let inv = 1.0 / col_j[kv];
            for i in 1..=km {
                col_j[kv + i] *= inv;
            }
            if km == 0 || ju == j {
                continue;
            }
            // Rank-1 update of the trailing window; columns are independent.
            let multipliers = &col_j[kv + 1..kv + 1 + km];
            let window = &mut tail[..(ju - j) * ldab];
            let update = |(off, col): (usize, &mut [f64])| {
                let col_idx = j + 1 + off;
                let a = kv + j - col_idx;
                let ujc = col[a];
                if ujc != 0.0 {
                    for (i, &m) in multipliers.iter().enumerate() {
                        col[a + 1 + i] -= m * ujc;
                    }
                }
            };
            if (ju - j) * km > 32_768 {
                window.par_chunks_mut(ldab).enumerate().for_each(update);
            } else {
                window.chunks_mut(ldab).enumerate().for_each(update);
            }
        }
        Ok(BandLu { n, kl, ku, ldab, ab, ipiv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let kv = self.kl + self.ku;
        // Forward: apply pivots and L (unit diagonal).
        for j in 0..self.n {
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = self.kl.min(self.n - 1 - j);
            let col = &self.ab[j * self.ldab..];
            let xj = x[j];
            for i in 1..=km {
                x[j + i] -= col[kv + i] * xj;
            }
        }
        // Backward: U has bandwidth kl + ku after pivoting.
        for j in (0..self.n).rev() {
            let col = &self.ab[j * self.ldab..];
            x[j] /= col[kv];
            let xj = x[j];
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                x[i] -= col[kv + i - j] * xj;
            }
        }
    }

    /// Solves the transposed system `K^T x = b` with the same factorization.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_transpose_in_place(&mut x);
        x
    }

    pub fn solve_transpose_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let kv = self.kl + self.ku;
        // Forward with U^T (lower triangular of bandwidth kl + ku).
        for j in 0..self.n {
            let col = &self.ab[j * self.ldab..];
            let lo = j.saturating_sub(kv);
            let mut acc = x[j];
            for i in lo..j {
                acc -= col[kv + i - j] * x[i];
            }
            x[j] = acc / col[kv];
        }
        // Backward with the transposed elimination and pivots in reverse.
        for j in (0..self.n).rev() {
            let km = self.kl.min(self.n - 1 - j);
            let col = &self.ab[j * self.ldab..];
            let mut acc = x[j];
            for i in 1..=km {
                acc -= col[kv + i] * x[j + i];
            }
            x[j] = acc;
            let p = self.ipiv[j];
            if p != j {
                x.swap(j, p);
            }
        }
    }
}

/// ILU(0): incomplete LU on the original sparsity pattern.
pub struct Ilu0 {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    #[allow(clippy::needless_range_loop)]
    pub fn factor(k: &Csr) -> Result<Ilu0> {
        let n = k.n_rows();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(k.nnz());
        let mut values = Vec::with_capacity(k.nnz());
        indptr.push(0);
        for i in 0..n {
            let (cols, vals) = k.row(i);
            indices.extend_from_slice(cols);
            values.extend_from_slice(vals);
            indptr.push(indices.len());
        }
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in indptr[i]..indptr[i + 1] {
                if indices[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::SingularSystem(format!(
                    "row {i} has no diagonal entry; ILU(0) needs a full diagonal"
                )));
            }
        }
        // Standard IKJ-ordered incomplete elimination on the fixed pattern.
        let mut work = vec![usize::MAX; n];
        for i in 0..n {
            for k in indptr[i]..indptr[i + 1] {
                work[indices[k]] = k;
            }
            let mut kk = indptr[i];
            while kk < indptr[i + 1] {
                let j = indices[kk];
                if j >= i {
                    break;
                }
                let piv = values[diag[j]];
                if piv == 0.0 {
                    return Err(Error::SingularSystem(format!(
                        "zero pivot in ILU(0) at row {j}"
                    )));
                }
                let lij = values[kk] / piv;
                values[kk] = lij;
                for m in diag[j] + 1..indptr[j + 1] {
                    let col = indices[m];
                    let pos = work[col];
                    if pos != usize::MAX {
                        values[pos] -= lij * values[m];
                    }
                }
                kk += 1;
            }
            for k in indptr[i]..indptr[i + 1] {
                work[indices[k]] = usize::MAX;
            }
        }
        Ok(Ilu0 { n, indptr, indices, values, diag })
    }

    /// Applies `(LU)^{-1}` to `r`.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut y = r.to_vec();
        // L y = r with unit diagonal.
        for i in 0..self.n {
            let mut acc = y[i];
            for k in self.indptr[i]..self.diag[i] {
                acc -= self.values[k] * y[self.indices[k]];
            }
            y[i] = acc;
        }
        // U x = y.
        for i in (0..self.n).rev() {
            let mut acc = y[i];
            for k in self.diag[i] + 1..self.indptr[i + 1] {
                acc -= self.values[k] * y[self.indices[k]];
            }
            y[i] = acc / self.values[self.diag[i]];
        }
        y
    }
}

/// Right-preconditioned BiCGStab.
fn bicgstab(
    k: &Csr,
    b: &[f64],
    precond: &Ilu0,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = b.len();
    let nb = norm2(b);
    if nb == 0.0 {
        return Ok((vec![0.0; n], 0, 0.0));
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut best = (x.clone(), norm2(&r) / nb);

    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let ph = precond.apply(&p);
        v = k.matvec(&ph);
        alpha = rho / dot(&r0, &v);
        let mut s = r.clone();
        axpy(&mut s, -alpha, &v);
        if norm2(&s) / nb <= tol {
            axpy(&mut x, alpha, &ph);
            let res = rel_residual(k, &x, b);
            return Ok((x, it, res));
        }
        let sh = precond.apply(&s);
        let t = k.matvec(&sh);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm2(&r) / nb;
        if rel < best.1 {
            best = (x.clone(), rel);
        }
        if rel <= tol {
            let res = rel_residual(k, &x, b);
            if res <= tol {
                return Ok((x, it, res));
            }
        }
        if omega == 0.0 {
            break;
        }
    }
    Err(Error::NonConvergence { residual: best.1, iterations: max_iter })
}

//! Compressed sparse row matrices sized for the assembled systems.

/// Square or rectangular CSR matrix with sorted column indices per row.
#[derive(Clone, Debug)]
pub struct Csr {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    /// Builds a zero matrix with the given sparsity pattern. `columns[i]`
    /// must be sorted and duplicate free.
    pub fn from_pattern(n_rows: usize, n_cols: usize, columns: Vec<Vec<usize>>) -> Csr {
        assert_eq!(columns.len(), n_rows);
        let mut indptr = Vec::with_capacity(n_rows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        for row in &columns {
            debug_assert!(row.windows(2).all(|w| w[0] < w[1]));
            indices.extend_from_slice(row);
            indptr.push(indices.len());
        }
        let nnz = indices.len();
        Csr { n_rows, n_cols, indptr, indices, values: vec![0.0; nnz] }
    }

    pub fn identity(n: usize) -> Csr {
        let mut m = Csr::from_pattern(n, n, (0..n).map(|i| vec![i]).collect());
        m.values.iter_mut().for_each(|v| *v = 1.0);
        m
    }

    /// Dense constructor for small test matrices; zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Csr {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for row in rows {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Csr { n_rows, n_cols, indptr, indices, values }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Adds `v` to entry `(i, j)`, which must exist in the pattern.
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        let k = self.indices[lo..hi]
            .binary_search(&j)
            .unwrap_or_else(|_| panic!("entry ({i}, {j}) outside the sparsity pattern"));
        self.values[lo + k] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        let mut y = vec![0.0; self.n_rows];
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            *yi = acc;
        }
        y
    }

    pub fn transpose(&self) -> Csr {
        let mut counts = vec![0usize; self.n_cols];
        for &j in &self.indices {
            counts[j] += 1;
        }
        let mut indptr = vec![0usize; self.n_cols + 1];
        for j in 0..self.n_cols {
            indptr[j + 1] = indptr[j] + counts[j];
        }
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = indptr.clone();
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let k = next[j];
                indices[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        Csr { n_rows: self.n_cols, n_cols: self.n_rows, indptr, indices, values }
    }

    /// `self + c * other` for a matrix with the identical sparsity pattern.
    pub fn add_scaled(&self, c: f64, other: &Csr) -> Csr {
        assert_eq!(self.indptr, other.indptr, "sparsity patterns differ");
        assert_eq!(self.indices, other.indices, "sparsity patterns differ");
        let mut out = self.clone();
        for (v, &w) in out.values.iter_mut().zip(&other.values) {
            *v += c * w;
        }
        out
    }

    pub fn same_pattern(&self, other: &Csr) -> bool {
        self.indptr == other.indptr && self.indices == other.indices
    }

    /// Largest absolute entrywise difference; patterns must match.
    pub fn max_abs_diff(&self, other: &Csr) -> f64 {
        assert!(self.same_pattern(other), "sparsity patterns differ");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Lower and upper bandwidths `(kl, ku)` of the pattern.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0usize;
        let mut ku = 0usize;
        for i in 0..self.n_rows {
            let (cols, _) = self.row(i);
            for &j in cols {
                if i > j {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    /// Off-diagonal entries nonpositive and row sums nonnegative, within
    /// tolerances; the sign structure behind the discrete maximum principle.
    pub fn is_m_matrix(&self, offdiag_tol: f64, rowsum_tol: f64) -> bool {
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut sum = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i && v > offdiag_tol {
                    return false;
                }
                sum += v;
            }
            if sum < -rowsum_tol {
                return false;
            }
        }
        true
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, row) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        out
    }

    /// Writes the matrix as `row,col,value` coordinate text.
    pub fn export_coo<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "row,col,value")?;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(w, "{i},{j},{v:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += c * x`.
pub fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

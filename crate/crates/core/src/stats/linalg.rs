//! Dense row-major matrices and a column-ordered Householder QR.

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major storage.
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "ragged matrix columns");
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// The sub-matrix made of the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (k, &j) in cols.iter().enumerate() {
                m.set(i, k, self.get(i, j));
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }
}

/// Result of [`qr_least_squares`].
#[derive(Debug, Clone)]
pub struct QrSolution {
    /// Coefficients for the independent columns (0 for dependent ones).
    pub coefficients: Vec<f64>,
    /// Columns found linearly dependent on earlier ones.
    pub dependent: Vec<usize>,
    /// Upper-triangular factor restricted to the independent columns.
    pub r: Vec<Vec<f64>>,
    /// Indices of the independent columns, matching the rows of `r`.
    pub independent: Vec<usize>,
}

/// Least squares by Householder reflections, taking columns in order. A
/// column whose remaining norm falls below `tol` times its original norm is
/// declared dependent and skipped, so earlier columns always win.
pub fn qr_least_squares(x: &Matrix, y: &[f64], tol: f64) -> QrSolution {
    let (n, p) = (x.rows, x.cols);
    assert_eq!(y.len(), n, "response length must match the row count");
    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();
    let mut b = y.to_vec();
    let mut independent = Vec::new();
    let mut dependent = Vec::new();
    let mut k = 0usize;
    for j in 0..p {
        let orig_norm = a[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        let tail_norm = a[j][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if k >= n || orig_norm == 0.0 || tail_norm <= tol * orig_norm {
            dependent.push(j);
            continue;
        }
        // reflector v with H = I - 2 v v^T / (v^T v) mapping a[j][k..] to -sign * norm e1
        let alpha = if a[j][k] >= 0.0 { -tail_norm } else { tail_norm };
        let mut v: Vec<f64> = a[j][k..].to_vec();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv > 0.0 {
            let apply = |col: &mut [f64]| {
                let dot: f64 = col.iter().zip(&v).map(|(c, vi)| c * vi).sum();
                let s = 2.0 * dot / vtv;
                for (c, vi) in col.iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            };
            for col in a.iter_mut().skip(j) {
                apply(&mut col[k..]);
            }
            apply(&mut b[k..]);
        }
        independent.push(j);
        k += 1;
    }
    let r: Vec<Vec<f64>> = (0..independent.len())
        .map(|row| independent.iter().map(|&c| a[c][row]).collect())
        .collect();
    let m = independent.len();
    let mut beta_ind = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|c| r[i][c] * beta_ind[c]).sum();
        beta_ind[i] = (b[i] - s) / r[i][i];
    }
    let mut coefficients = vec![0.0; p];
    for (&c, &v) in independent.iter().zip(&beta_ind) {
        coefficients[c] = v;
    }
    QrSolution {
        coefficients,
        dependent,
        r,
        independent,
    }
}

/// Inverse of an upper-triangular matrix.
pub fn upper_triangular_inverse(r: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = r.len();
    let mut inv = vec![vec![0.0; m]; m];
    for col in 0..m {
        inv[col][col] = 1.0 / r[col][col];
        for i in (0..col).rev() {
            let s: f64 = (i + 1..=col).map(|k| r[i][k] * inv[k][col]).sum();
            inv[i][col] = -s / r[i][i];
        }
    }
    inv
}

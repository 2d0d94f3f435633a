//! Direct solvers: partial-pivot LU, Householder least squares, and the
//! Kronecker-product discrete Lyapunov solve used to warm-start the LMI
//! search.

use super::{LinalgError, Mat};

/// LU decomposition with partial pivoting.
pub struct LuFactors {
    lu: Mat,
    perm: Vec<usize>,
    sign: f64,
}

impl LuFactors {
    pub fn new(a: &Mat) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_val = lu[(col, col)].abs();
            for r in col + 1..n {
                if lu[(r, col)].abs() > pivot_val {
                    pivot_val = lu[(r, col)].abs();
                    pivot_row = r;
                }
            }
            if pivot_val == 0.0 || !pivot_val.is_finite() {
                return Err(LinalgError::Singular {
                    pivot: pivot_val,
                    col,
                });
            }
            if pivot_row != col {
                for j in 0..n {
                    let tmp = lu[(col, j)];
                    lu[(col, j)] = lu[(pivot_row, j)];
                    lu[(pivot_row, j)] = tmp;
                }
                perm.swap(col, pivot_row);
                sign = -sign;
            }
            for r in col + 1..n {
                let factor = lu[(r, col)] / lu[(col, col)];
                lu[(r, col)] = factor;
                for j in col + 1..n {
                    let sub = factor * lu[(col, j)];
                    lu[(r, j)] -= sub;
                }
            }
        }
        Ok(LuFactors { lu, perm, sign })
    }

    pub fn det(&self) -> f64 {
        let n = self.lu.rows();
        (0..n).fold(self.sign, |acc, i| acc * self.lu[(i, i)])
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[self.perm[i]];
            for (j, yj) in y.iter().enumerate().take(i) {
                sum -= self.lu[(i, j)] * yj;
            }
            y[i] = sum;
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let sub = self.lu[(i, j)] * y[j];
                y[i] -= sub;
            }
            y[i] /= self.lu[(i, i)];
        }
        y
    }

    pub fn solve_mat(&self, b: &Mat) -> Mat {
        let n = self.lu.rows();
        assert_eq!(b.rows(), n);
        let mut out = Mat::zeros(n, b.cols());
        for j in 0..b.cols() {
            let col: Vec<f64> = (0..n).map(|i| b[(i, j)]).collect();
            let x = self.solve_vec(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    }
}

/// Solves `A X = B` for square `A`.
pub fn lu_solve(a: &Mat, b: &Mat) -> Result<Mat, LinalgError> {
    Ok(LuFactors::new(a)?.solve_mat(b))
}

/// Least-squares solution of the overdetermined system `A x = b` for every
/// column of `b`, via Householder QR. `A` must have full column rank.
pub fn lstsq(a: &Mat, b: &Mat) -> Result<Mat, LinalgError> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(LinalgError::DimensionMismatch(format!(
            "least squares needs rows >= cols, got {m}x{n}"
        )));
    }
    if b.rows() != m {
        return Err(LinalgError::DimensionMismatch("rhs row count".into()));
    }
    let mut r = a.clone();
    let mut rhs = b.clone();
    for k in 0..n {
        // Householder vector for column k.
        let mut norm = 0.0;
        for i in k..m {
            norm += r[(i, k)] * r[(i, k)];
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            return Err(LinalgError::Singular { pivot: 0.0, col: k });
        }
        let alpha = if r[(k, k)] >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            let apply = |mat: &mut Mat, col: usize| {
                let mut dot = 0.0;
                for i in k..mat.rows() {
                    dot += v[i - k] * mat[(i, col)];
                }
                let scale = 2.0 * dot / vnorm2;
                for i in k..mat.rows() {
                    let sub = scale * v[i - k];
                    mat[(i, col)] -= sub;
                }
            };
            for j in k..n {
                apply(&mut r, j);
            }
            for j in 0..rhs.cols() {
                apply(&mut rhs, j);
            }
        }
        r[(k, k)] = alpha;
    }
    // Back-substitution on the upper-triangular part.
    let mut x = Mat::zeros(n, b.cols());
    for j in 0..b.cols() {
        for i in (0..n).rev() {
            let mut sum = rhs[(i, j)];
            for l in i + 1..n {
                sum -= r[(i, l)] * x[(l, j)];
            }
            if r[(i, i)] == 0.0 {
                return Err(LinalgError::Singular { pivot: 0.0, col: i });
            }
            x[(i, j)] = sum / r[(i, i)];
        }
    }
    Ok(x)
}

/// Solves the discrete Lyapunov equation `A^T P A - P = -Q` by
/// vectorization; feasible because every caller works at order <= 8.
pub fn discrete_lyapunov(a: &Mat, q: &Mat) -> Result<Mat, LinalgError> {
    if !a.is_square() || !q.is_square() || a.rows() != q.rows() {
        return Err(LinalgError::DimensionMismatch("lyapunov shapes".into()));
    }
    let n = a.rows();
    let at = a.transpose();
    // vec(A^T P A) = (A^T kron A^T) vec(P), column-major vec.
    let mut system = Mat::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    // (kron)_{(j*n+i),(l*n+k)} = at[j][l] * at[i][k]
                    system[(j * n + i, l * n + k)] = at[(j, l)] * at[(i, k)];
                }
            }
        }
    }
    let ident = Mat::identity(n * n);
    let lhs = ident.sub(&system);
    let rhs_vec: Vec<f64> = {
        let mut v = vec![0.0; n * n];
        for l in 0..n {
            for k in 0..n {
                v[l * n + k] = q[(k, l)];
            }
        }
        v
    };
    let sol = LuFactors::new(&lhs)?.solve_vec(&rhs_vec);
    let mut p = Mat::zeros(n, n);
    for l in 0..n {
        for k in 0..n {
            p[(k, l)] = sol[l * n + k];
        }
    }
    Ok(p.symmetrize())
}

//! Cyclic Jacobi eigendecomposition for small dense symmetric matrices.
//! Foolproof at the orders used here and it hands back orthonormal
//! eigenvectors, which the LMI subgradient needs.

use super::{LinalgError, Mat};

const TOLERANCE: f64 = 1e-15;
const MAX_SWEEPS: usize = 50;

/// Eigenvalues and eigenvectors of a symmetric matrix. Returns
/// `(eigenvalues, V)` with the i-th column of `V` the eigenvector for
/// `eigenvalues[i]`; eigenvalues are sorted ascending.
pub fn symmetric_eigen(a: &Mat) -> Result<(Vec<f64>, Mat), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = a.rows();
    let mut m = a.symmetrize();
    let mut v = Mat::identity(n);
    let scale = m.norm_max().max(1.0);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = {
            let mut s = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    s += m[(p, q)].abs();
                }
            }
            s
        };
        if off < TOLERANCE * scale {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() < TOLERANCE * scale * 1e-3 {
                    continue;
                }
                let theta = 0.5 * (m[(q, q)] - m[(p, p)]) / apq;
                let t = {
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Apply the rotation to rows/columns p and q.
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((eigenvalues, vectors))
}

/// Largest eigenvalue of a symmetric matrix with its eigenvector.
pub fn sym_eig_max(a: &Mat) -> Result<(f64, Vec<f64>), LinalgError> {
    let (vals, vecs) = symmetric_eigen(a)?;
    let n = a.rows();
    let v: Vec<f64> = (0..n).map(|i| vecs[(i, n - 1)]).collect();
    Ok((vals[n - 1], v))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn sym_eig_min(a: &Mat) -> Result<f64, LinalgError> {
    Ok(symmetric_eigen(a)?.0[0])
}

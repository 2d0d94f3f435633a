//! Eigenvalues of small real nonsymmetric matrices: radix balancing,
//! elimination to upper Hessenberg form, then the Francis double-shift QR
//! sweep, with complex conjugate pairs extracted from the real Schur
//! blocks. Eigenvalues only; nothing here needs eigenvectors.

use super::{LinalgError, Mat};
use num_complex::Complex64;

const RADIX: f64 = 2.0;

fn balance(a: &mut Mat) {
    let n = a.rows();
    let sqrdx = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                let mut c_local = c;
                while c_local < g {
                    f *= RADIX;
                    c_local *= sqrdx;
                }
                g = r * RADIX;
                while c_local > g {
                    f /= RADIX;
                    c_local /= sqrdx;
                }
                if (c_local + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            return;
        }
    }
}

fn to_hessenberg(a: &mut Mat) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    for m in 1..n - 1 {
        let mut x = 0.0f64;
        let mut pivot = m;
        for j in m..n {
            if a[(j, m - 1)].abs() > x.abs() {
                x = a[(j, m - 1)];
                pivot = j;
            }
        }
        if pivot != m {
            for j in m - 1..n {
                let tmp = a[(pivot, j)];
                a[(pivot, j)] = a[(m, j)];
                a[(m, j)] = tmp;
            }
            for j in 0..n {
                let tmp = a[(j, pivot)];
                a[(j, pivot)] = a[(j, m)];
                a[(j, m)] = tmp;
            }
        }
        if x != 0.0 {
            for i in m + 1..n {
                let mut y = a[(i, m - 1)];
                if y != 0.0 {
                    y /= x;
                    a[(i, m - 1)] = y;
                    for j in m..n {
                        let sub = y * a[(m, j)];
                        a[(i, j)] -= sub;
                    }
                    for j in 0..n {
                        let acc = y * a[(j, i)];
                        a[(j, m)] += acc;
                    }
                }
            }
        }
    }
    // The elimination left multipliers below the subdiagonal; the QR sweep
    // expects zeros there.
    for i in 2..n {
        for j in 0..i - 1 {
            a[(i, j)] = 0.0;
        }
    }
}

fn sign_with(magnitude: f64, sign_of: f64) -> f64 {
    if sign_of >= 0.0 {
        magnitude.abs()
    } else {
        -magnitude.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix. Returns the
/// eigenvalues in no particular order.
fn hqr(a: &mut Mat) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.rows();
    let mut eigs: Vec<Complex64> = Vec::with_capacity(n);
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            // Look for a single small subdiagonal element.
            let mut l = nn;
            while l >= 1 {
                let s =
                    a[(l as usize - 1, l as usize - 1)].abs() + a[(l as usize, l as usize)].abs();
                let s = if s == 0.0 { anorm } else { s };
                if a[(l as usize, l as usize - 1)].abs() + s == s {
                    a[(l as usize, l as usize - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let x = a[(nn as usize, nn as usize)];
            if l == nn {
                // One root found.
                eigs.push(Complex64::new(x + t, 0.0));
                nn -= 1;
                break;
            }
            let y = a[(nn as usize - 1, nn as usize - 1)];
            let w = a[(nn as usize, nn as usize - 1)] * a[(nn as usize - 1, nn as usize)];
            if l == nn - 1 {
                // Two roots found.
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x = x + t;
                if q >= 0.0 {
                    let z = p + sign_with(z, p);
                    let r1 = x + z;
                    let r2 = if z != 0.0 { x - w / z } else { x + z };
                    eigs.push(Complex64::new(r1, 0.0));
                    eigs.push(Complex64::new(r2, 0.0));
                } else {
                    eigs.push(Complex64::new(x + p, z));
                    eigs.push(Complex64::new(x + p, -z));
                }
                nn -= 2;
                break;
            }
            // No root yet; perform a QR iteration.
            if its == 30 {
                return Err(LinalgError::NoConvergence);
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // Exceptional shift.
                t += x;
                for i in 0..=nn as usize {
                    a[(i, i)] -= x;
                }
                let s = a[(nn as usize, nn as usize - 1)].abs()
                    + a[(nn as usize - 1, nn as usize - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            // Form the first column of (H - s1)(H - s2) and look for two
            // consecutive small subdiagonal elements.
            let mut m = nn - 2;
            let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
            while m >= l {
                let mu = m as usize;
                let z = a[(mu, mu)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(mu + 1, mu)] + a[(mu, mu + 1)];
                q = a[(mu + 1, mu + 1)] - z - rr - ss;
                r = a[(mu + 2, mu + 1)];
                let scale = p.abs() + q.abs() + r.abs();
                p /= scale;
                q /= scale;
                r /= scale;
                if m == l {
                    break;
                }
                let u = a[(mu, mu - 1)].abs() * (q.abs() + r.abs());
                let v = z.abs() * (p.abs() + a[(mu - 1, mu - 1)].abs() + a[(mu + 1, mu + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                let iu = i as usize;
                a[(iu, iu - 2)] = 0.0;
                if i > m + 2 {
                    a[(iu, iu - 3)] = 0.0;
                }
            }
            // Double QR step on rows l..nn and columns m..nn.
            for k in m..=nn - 1 {
                let ku = k as usize;
                if k != m {
                    p = a[(ku, ku - 1)];
                    q = a[(ku + 1, ku - 1)];
                    r = if k != nn - 1 {
                        a[(ku + 2, ku - 1)]
                    } else {
                        0.0
                    };
                    let x_scale = p.abs() + q.abs() + r.abs();
                    if x_scale != 0.0 {
                        p /= x_scale;
                        q /= x_scale;
                        r /= x_scale;
                    }
                    x = x_scale;
                }
                let s = sign_with((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[(ku, ku - 1)] = -a[(ku, ku - 1)];
                        }
                    } else {
                        a[(ku, ku - 1)] = -s * x;
                    }
                    p += s;
                    let xf = p / s;
                    let yf = q / s;
                    let zf = r / s;
                    q /= p;
                    r /= p;
                    for j in ku..=nn as usize {
                        let mut pp = a[(ku, j)] + q * a[(ku + 1, j)];
                        if k != nn - 1 {
                            pp += r * a[(ku + 2, j)];
                            let sub = pp * zf;
                            a[(ku + 2, j)] -= sub;
                        }
                        let sub1 = pp * yf;
                        a[(ku + 1, j)] -= sub1;
                        let sub0 = pp * xf;
                        a[(ku, j)] -= sub0;
                    }
                    let mmin = if nn < k + 3 { nn as usize } else { ku + 3 };
                    for i in l as usize..=mmin {
                        let mut pp = xf * a[(i, ku)] + yf * a[(i, ku + 1)];
                        if k != nn - 1 {
                            pp += zf * a[(i, ku + 2)];
                            let sub = pp * r;
                            a[(i, ku + 2)] -= sub;
                        }
                        let sub1 = pp * q;
                        a[(i, ku + 1)] -= sub1;
                        a[(i, ku)] -= pp;
                    }
                }
            }
        }
    }
    Ok(eigs)
}

/// Eigenvalues of a square real matrix.
pub fn eigenvalues(m: &Mat) -> Result<Vec<Complex64>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let n = m.rows();
    match n {
        0 => Ok(Vec::new()),
        1 => Ok(vec![Complex64::new(m[(0, 0)], 0.0)]),
        2 => {
            // Closed form keeps the common 2x2 case exact.
            let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let tr = a + d;
            let det = a * d - b * c;
            let disc = tr * tr / 4.0 - det;
            if disc >= 0.0 {
                let root = disc.sqrt();
                Ok(vec![
                    Complex64::new(tr / 2.0 + root, 0.0),
                    Complex64::new(tr / 2.0 - root, 0.0),
                ])
            } else {
                let root = (-disc).sqrt();
                Ok(vec![
                    Complex64::new(tr / 2.0, root),
                    Complex64::new(tr / 2.0, -root),
                ])
            }
        }
        _ => {
            let mut work = m.clone();
            balance(&mut work);
            to_hessenberg(&mut work);
            hqr(&mut work)
        }
    }
}

/// Largest eigenvalue magnitude of a square real matrix.
pub fn spectral_radius(m: &Mat) -> Result<f64, LinalgError> {
    Ok(eigenvalues(m)?.iter().map(|e| e.norm()).fold(0.0, f64::max))
}

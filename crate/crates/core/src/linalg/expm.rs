//! Matrix exponential by scaling-and-squaring with a degree-13 Padé
//! approximant, the standard Higham construction: scale so the 1-norm is
//! below the order-13 threshold, evaluate the rational approximant, square
//! back.

use super::{lu_solve, LinalgError, Mat};

/// 1-norm threshold under which the degree-13 approximant is accurate to
/// double precision.
const THETA_13: f64 = 5.371920351148152;

const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

pub fn expm(m: &Mat) -> Result<Mat, LinalgError> {
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
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let norm = m.norm_one();
    if norm == 0.0 {
        return Ok(Mat::identity(n));
    }

    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let a = m.scale(0.5f64.powi(squarings as i32));

    let id = Mat::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);

    // U = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let u_inner = a6
        .matmul(&a6.scale(B[13]).add(&a4.scale(B[11])).add(&a2.scale(B[9])))
        .add(&a6.scale(B[7]))
        .add(&a4.scale(B[5]))
        .add(&a2.scale(B[3]))
        .add(&id.scale(B[1]));
    let u = a.matmul(&u_inner);

    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let v = a6
        .matmul(&a6.scale(B[12]).add(&a4.scale(B[10])).add(&a2.scale(B[8])))
        .add(&a6.scale(B[6]))
        .add(&a4.scale(B[4]))
        .add(&a2.scale(B[2]))
        .add(&id.scale(B[0]));

    // (V - U) X = (V + U)
    let mut x = lu_solve(&v.sub(&u), &v.add(&u))?;
    for _ in 0..squarings {
        x = x.matmul(&x);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_core::Rng;

    fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
        a.sub(b).norm_max()
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = expm(&Mat::zeros(3, 3)).unwrap();
        assert_eq!(e, Mat::identity(3));
    }

    #[test]
    fn exp_of_nilpotent_matches_closed_form() {
        // [[0, 1], [0, 0]] * t  ->  [[1, t], [0, 1]]
        let t = 0.025;
        let m = Mat::from_rows(&[vec![0.0, t], vec![0.0, 0.0]]).unwrap();
        let e = expm(&m).unwrap();
        let expect = Mat::from_rows(&[vec![1.0, t], vec![0.0, 1.0]]).unwrap();
        assert!(max_abs_diff(&e, &expect) < 1e-15);
    }

    #[test]
    fn exp_of_diagonal_is_entrywise_exp() {
        let m = Mat::from_rows(&[vec![-1.0, 0.0], vec![0.0, 2.5]]).unwrap();
        let e = expm(&m).unwrap();
        assert!((e[(0, 0)] - (-1.0f64).exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - 2.5f64.exp()).abs() < 1e-12);
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn semigroup_property_on_random_matrices() {
        let mut stream = rng::stream(31, 0);
        for _ in 0..25 {
            let n = 2 + (stream.next_u64() % 3) as usize;
            let a = Mat::from_fn(n, n, |_, _| rng::uniform_f64(&mut stream) * 4.0 - 2.0);
            // keep ||A|| <= 5
            let a = a.scale(5.0 / a.norm_one().max(5.0));
            let s = 0.3 + rng::uniform_f64(&mut stream);
            let t = 0.2 + rng::uniform_f64(&mut stream);
            let whole = expm(&a.scale(s + t)).unwrap();
            let parts = expm(&a.scale(s))
                .unwrap()
                .matmul(&expm(&a.scale(t)).unwrap());
            let rel = max_abs_diff(&whole, &parts) / whole.norm_max();
            assert!(rel < 1e-10, "semigroup violation: {rel}");
        }
    }

    #[test]
    fn large_norm_takes_squaring_path() {
        // diag(10, -3): norm >> theta_13 forces squaring.
        let m = Mat::from_rows(&[vec![10.0, 0.0], vec![0.0, -3.0]]).unwrap();
        let e = expm(&m).unwrap();
        assert!((e[(0, 0)] - 10.0f64.exp()).abs() / 10.0f64.exp() < 1e-12);
        assert!((e[(1, 1)] - (-3.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(
            expm(&Mat::zeros(2, 3)),
            Err(LinalgError::NotSquare { .. })
        ));
    }
}

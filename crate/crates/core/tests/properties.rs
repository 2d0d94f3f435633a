//! Property tests for the crate-level invariants that hold over whole input
//! domains rather than at hand-picked points.

use proptest::prelude::*;

use encctl_core::delay::{total_delay_bound, CostConstants, LinkModel};
use encctl_core::discretization::{discretize, gamma_split, PlantModel};
use encctl_core::linalg::Mat;
use encctl_core::lwe::{
    centered_mod, decrypt, encrypt, gadget_decompose, gadget_reconstruct, keygen, Ciphertext,
    CryptoParams,
};

fn params_257() -> CryptoParams {
    CryptoParams::new(4, num_bigint::BigUint::from(257u32), 0.0).unwrap()
}

proptest! {
    #[test]
    fn centered_mod_is_a_canonical_residue(a in any::<i64>(), q_idx in 0usize..4) {
        let q: u128 = [3, 7, 257, 8191][q_idx];
        let r = centered_mod(a as i128, q).unwrap();
        let half = ((q - 1) / 2) as i128;
        prop_assert!(r >= -half && r <= half);
        // r == a (mod q)
        prop_assert_eq!((r - a as i128).rem_euclid(q as i128), 0);
    }

    #[test]
    fn zero_noise_round_trip_over_plaintext_space(m in -128i128..=128) {
        let p = params_257();
        let sk = keygen(&p, 1);
        let ct = encrypt(m, &sk, &p, m.unsigned_abs() as u64).unwrap();
        prop_assert_eq!(decrypt(&ct, &sk, &p).unwrap(), m);
    }

    #[test]
    fn gadget_reconstruction_is_identity(entries in prop::collection::vec(-128i128..=128, 5)) {
        let p = params_257();
        let ct = Ciphertext::from_entries(entries.clone(), &p).unwrap();
        let digits = gadget_decompose(&ct, &p).unwrap();
        prop_assert!(digits.iter().all(|&g| g.abs() <= 1));
        prop_assert_eq!(gadget_reconstruct(&digits, &p).unwrap(), entries);
    }

    #[test]
    fn delay_budget_decomposes_exactly(
        rate in 1e5f64..1e10,
        delta in 0.0f64..0.05,
        c in 1e-12f64..1e-6,
        log2n in 4u32..10,
    ) {
        let link = LinkModel { rate_bits_per_s: rate, propagation_s: delta };
        let consts = CostConstants { c_enc: c, c_dec: 2.0 * c, c_mul: 0.5 * c };
        let params = CryptoParams::from_bits(log2n, 30, 3.2).unwrap();
        let budget = total_delay_bound(&link, &consts, &params, 2, 1).unwrap();
        prop_assert_eq!(budget.total, budget.comm + budget.compute);
        prop_assert!(budget.comm >= 2.0 * delta);
        prop_assert!(budget.compute > 0.0);
    }

    #[test]
    fn input_integral_split_conserves_gamma(
        a00 in -2.0f64..2.0,
        a01 in -2.0f64..2.0,
        a10 in -2.0f64..2.0,
        a11 in -2.0f64..2.0,
        frac in 0.0f64..=1.0,
    ) {
        let plant = PlantModel::new(
            Mat::from_rows(&[vec![a00, a01], vec![a10, a11]]).unwrap(),
            Mat::from_rows(&[vec![0.5], vec![1.0]]).unwrap(),
            0.05,
            vec![0.0, 0.0],
        )
        .unwrap();
        let dp = discretize(&plant).unwrap();
        let (g0, g1) = gamma_split(&plant, frac * plant.ts).unwrap();
        let err = g0.add(&g1).sub(&dp.gamma).norm_fro();
        prop_assert!(err <= 1e-10 * dp.gamma.norm_fro().max(1e-300), "err {}", err);
    }
}

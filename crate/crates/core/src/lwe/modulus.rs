//! Modulus selection and centered residue arithmetic.
//!
//! Plaintexts and ciphertext entries are centered residues: integers in
//! `[-q/2, q/2)`, stored as `i128`. Arithmetic on residues requires
//! `q < 2^126` so that sums of two residues stay inside `i128`; parameter
//! sets with wider moduli (they occur in delay budgeting, where only the
//! digit count matters) are represented exactly as big integers but refuse
//! ciphertext operations.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use super::LweError;
use crate::rng;

/// Largest modulus for which centered-residue arithmetic is available.
pub const MAX_ARITHMETIC_MODULUS_BITS: u32 = 126;

/// Maps an unsigned residue in `[0, q)` to the centered representative.
#[inline]
pub(crate) fn centered_from_unsigned(v: u128, q: u128) -> i128 {
    debug_assert!(v < q);
    let half = (q - 1) / 2;
    if v <= half {
        v as i128
    } else {
        v as i128 - q as i128
    }
}

/// Centered residue of an arbitrary integer, `q` assumed valid (odd, >= 3,
/// < 2^126). This is the hot-path reduction; the public, validating wrapper
/// is [`crate::lwe::centered_mod`].
#[inline]
pub(crate) fn centered(a: i128, q: u128) -> i128 {
    let r = a.rem_euclid(q as i128);
    centered_from_unsigned(r as u128, q)
}

/// Centered product with a full-width intermediate.
pub(crate) fn mul_mod(a: i128, b: i128, q: u128) -> i128 {
    let prod = BigUint::from(a.unsigned_abs()) * BigUint::from(b.unsigned_abs());
    let rem = prod % BigUint::from(q);
    let rem_u128: u128 = to_u128(&rem).expect("remainder < q fits u128");
    let unsigned = if (a < 0) ^ (b < 0) && rem_u128 != 0 {
        q - rem_u128
    } else {
        rem_u128
    };
    centered_from_unsigned(unsigned, q)
}

pub(crate) fn to_u128(v: &BigUint) -> Option<u128> {
    let digits = v.to_u64_digits();
    match digits.len() {
        0 => Some(0),
        1 => Some(digits[0] as u128),
        2 => Some(((digits[1] as u128) << 64) | digits[0] as u128),
        _ => None,
    }
}

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Miller-Rabin primality test with deterministic pseudo-random bases.
/// 64 rounds puts the error probability below 4^-64.
pub fn is_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    // n - 1 = 2^s * d
    let n_minus_1 = n - BigUint::one();
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;

    let mut base_rng = rng::stream(0xD1CE_BA5E, n.to_u64_digits()[0]);
    let span = n - BigUint::from(3u32);
    'rounds: for _ in 0..64 {
        let base = {
            use rand_core::Rng;
            // Uniform-enough base in [2, n-2].
            let r = BigUint::from(base_rng.next_u64()) % &span;
            r + two.clone()
        };
        let mut x = base.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'rounds;
            }
        }
        return false;
    }
    true
}

/// Largest prime strictly below `2^bits`. Results are cached; the search is
/// deterministic.
pub fn prime_below(bits: u32) -> Result<BigUint, LweError> {
    if bits < 2 {
        return Err(LweError::InvalidModulus(format!(
            "no odd prime below 2^{bits}"
        )));
    }
    static CACHE: OnceLock<Mutex<HashMap<u32, BigUint>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&bits) {
        return Ok(hit.clone());
    }
    let mut candidate = (BigUint::one() << bits) - BigUint::one();
    if (&candidate % 2u32).is_zero() {
        candidate -= BigUint::one();
    }
    let three = BigUint::from(3u32);
    while candidate >= three {
        if is_prime(&candidate) {
            cache.lock().unwrap().insert(bits, candidate.clone());
            return Ok(candidate);
        }
        candidate -= BigUint::from(2u32);
    }
    Err(LweError::InvalidModulus(format!(
        "no prime found below 2^{bits}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_matches_floor_formula() {
        // Reference: a - floor((a + q/2) / q) * q, evaluated in rationals as
        // floor((2a + q) / (2q)).
        let cases: [(i128, u128); 7] = [
            (0, 7),
            (5, 7),
            (-4, 7),
            (123, 257),
            (-300, 257),
            (128, 257),
            (-129, 257),
        ];
        for (a, q) in cases {
            let shift = 2 * a + q as i128;
            let denom = 2 * q as i128;
            let floored = shift.div_euclid(denom);
            let reference = a - floored * q as i128;
            assert_eq!(centered(a, q), reference, "a={a} q={q}");
        }
        assert_eq!(centered(0, 7), 0);
        assert_eq!(centered(5, 7), -2);
        assert_eq!(centered(-4, 7), 3);
    }

    #[test]
    fn mul_mod_matches_small_cases() {
        assert_eq!(mul_mod(3, 5, 7), centered(15, 7));
        assert_eq!(mul_mod(-3, 5, 7), centered(-15, 7));
        let q: u128 = (1 << 61) - 1; // Mersenne prime
        let a: i128 = (1 << 60) - 17;
        let b: i128 = -((1 << 59) + 3);
        // Oracle through BigInt arithmetic in both directions.
        let expect = {
            use num_bigint::BigInt;
            let p = BigInt::from(a) * BigInt::from(b);
            let r = ((p % q as i128) + q as i128) % q as i128;
            let r: i128 = r.try_into().unwrap();
            centered(r, q)
        };
        assert_eq!(mul_mod(a, b, q), expect);
    }

    #[test]
    fn small_primes_recognized() {
        for p in [3u32, 5, 7, 257, 8191, 65537] {
            assert!(is_prime(&BigUint::from(p)), "{p}");
        }
        for c in [9u32, 15, 255, 8191 * 3, 65536] {
            assert!(!is_prime(&BigUint::from(c)), "{c}");
        }
    }

    #[test]
    fn prime_below_small_bit_lengths() {
        assert_eq!(prime_below(2).unwrap(), BigUint::from(3u32));
        assert_eq!(prime_below(3).unwrap(), BigUint::from(7u32));
        assert_eq!(prime_below(9).unwrap(), BigUint::from(509u32));
        assert_eq!(prime_below(13).unwrap(), BigUint::from(8191u32));
    }

    #[test]
    fn prime_below_109_bits_has_exact_bit_length() {
        let q = prime_below(109).unwrap();
        assert_eq!(q.bits(), 109);
        assert!(is_prime(&q));
        // Deterministic across calls (and cached).
        assert_eq!(q, prime_below(109).unwrap());
    }
}

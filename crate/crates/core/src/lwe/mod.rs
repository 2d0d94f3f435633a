//! LWE-based cryptosystem with a GSW-style homomorphic matrix-vector
//! product.
//!
//! Two encryption routines share one secret key: [`encrypt`] produces
//! vector ciphertexts in `Z_q^{N+1}` for the multiplicand, and
//! [`encrypt_gsw`] produces matrix ciphertexts in `Z_q^{(N+1) x d(N+1)}`
//! for the multiplier, `d = ceil(log2 q)`. [`hom_matvec`] combines them
//! through gadget decomposition so that decrypting the result yields the
//! plaintext matrix-vector product modulo `q`, up to the injected noise
//! (exactly, when `sigma = 0`).
//!
//! Layout conventions, fixed once and used everywhere:
//! * a vector ciphertext is `c = (b, a_1, ..., a_N)` with
//!   `b = <a, s> + m + e mod q`; the message sits in the low bits, scaling
//!   is the caller's business;
//! * the gadget matrix is `G = I_{N+1} (x) (1, 2, ..., 2^{d-1})`, so column
//!   `j = e*d + t` of `G` carries `2^t` in row `e`;
//! * GSW ciphertexts are `C = m*G + Z mod q`, each column of `Z` an
//!   independent encryption of zero.
//!
//! GSW ciphertexts are stored seed-compressed: the uniform mask of every
//! zero-encryption column is regenerated on demand from a per-column
//! stream, so a full-size ciphertext (`N = 2^12`, 109-bit modulus) costs
//! ~14 MB instead of ~29 GB. Expansion is deterministic, so serialization
//! stays bit-exact.

mod gsw;
mod modulus;
mod serialize;

pub use gsw::{encrypt_gsw, gadget_decompose, gadget_reconstruct, GswCiphertext};
pub use modulus::{is_prime, prime_below, MAX_ARITHMETIC_MODULUS_BITS};
pub use serialize::{
    deserialize_ciphertext, deserialize_gsw, deserialize_secret_key, serialize_ciphertext,
    serialize_gsw, serialize_secret_key,
};

use num_bigint::BigUint;
use rand_core::Rng;
use thiserror::Error;

use crate::rng;
use modulus::{centered, centered_from_unsigned, to_u128};

/// Centered product `a b mod q` with a full-width intermediate; the
/// plaintext-side companion to the homomorphic product, used by oracles
/// and overflow gates.
pub fn mul_mod(a: i128, b: i128, q: u128) -> i128 {
    modulus::mul_mod(a, b, q)
}

/// A plaintext: a centered residue in `Z_q = Z intersect [-q/2, q/2)`.
pub type Plaintext = i128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LweError {
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("sigma must be finite and >= 0")]
    InvalidSigma,
    #[error("plaintext {value} outside [-q/2, q/2)")]
    PlaintextRange { value: i128 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("modulus has {bits} bits; ciphertext arithmetic supports < {max} bits", max = MAX_ARITHMETIC_MODULUS_BITS)]
    ModulusTooWide { bits: u32 },
    #[error("malformed serialized data: {0}")]
    Serialization(String),
}

/// Cryptographic parameter set: ring dimension `N`, odd prime modulus `q`,
/// error standard deviation `sigma`, and the derived digit count
/// `d = ceil(log2 q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CryptoParams {
    n_dim: usize,
    q: BigUint,
    q_word: Option<u128>,
    sigma: f64,
    d: u32,
}

impl CryptoParams {
    pub fn new(n_dim: usize, q: BigUint, sigma: f64) -> Result<Self, LweError> {
        if n_dim < 2 || !n_dim.is_power_of_two() {
            return Err(LweError::InvalidDimension(format!(
                "N must be a power of two >= 2, got {n_dim}"
            )));
        }
        if q < BigUint::from(3u32) || (&q % 2u32) == BigUint::from(0u32) || !is_prime(&q) {
            return Err(LweError::InvalidModulus(
                "q must be an odd prime >= 3".into(),
            ));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(LweError::InvalidSigma);
        }
        // q is never a power of two (it is odd and >= 3), so the bit length
        // equals ceil(log2 q) exactly.
        let d = q.bits() as u32;
        let q_word = if d < MAX_ARITHMETIC_MODULUS_BITS {
            to_u128(&q)
        } else {
            None
        };
        Ok(CryptoParams {
            n_dim,
            q,
            q_word,
            sigma,
            d,
        })
    }

    /// Builds the parameter set `N = 2^log2_n`, `q` the largest prime below
    /// `2^log2_q` (so `d = log2_q`), with error deviation `sigma`.
    pub fn from_bits(log2_n: u32, log2_q: u32, sigma: f64) -> Result<Self, LweError> {
        if log2_n == 0 || log2_n > 30 {
            return Err(LweError::InvalidDimension(format!(
                "log2 N out of range: {log2_n}"
            )));
        }
        Self::new(1usize << log2_n, prime_below(log2_q)?, sigma)
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    /// The modulus as a machine word; errors when the parameter set is too
    /// wide for ciphertext arithmetic (delay budgeting still works).
    pub fn q_word(&self) -> Result<u128, LweError> {
        self.q_word.ok_or(LweError::ModulusTooWide { bits: self.d })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Digit count `d = ceil(log2 q)`.
    pub fn digits(&self) -> u32 {
        self.d
    }

    /// Entries per gadget-decomposed ciphertext, `d * (N + 1)`.
    pub fn gadget_len(&self) -> usize {
        self.d as usize * (self.n_dim + 1)
    }

    /// Validates that `m` is a centered residue.
    pub fn check_plaintext(&self, m: Plaintext) -> Result<(), LweError> {
        let q = self.q_word()?;
        let half = ((q - 1) / 2) as i128;
        if m < -half || m > half {
            return Err(LweError::PlaintextRange { value: m });
        }
        Ok(())
    }
}

/// Ternary secret key of length `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecretKey {
    entries: Vec<i8>,
}

impl SecretKey {
    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    pub fn from_entries(entries: Vec<i8>) -> Result<Self, LweError> {
        if entries.iter().any(|&e| !(-1..=1).contains(&e)) {
            return Err(LweError::InvalidDimension(
                "secret key entries must be ternary".into(),
            ));
        }
        Ok(SecretKey { entries })
    }
}

/// Vector ciphertext `(b, a_1, ..., a_N)`, all entries centered residues.
#[derive(Debug, Clone, PartialEq)]
pub struct Ciphertext {
    entries: Vec<i128>,
}

impl Ciphertext {
    pub fn entries(&self) -> &[i128] {
        &self.entries
    }

    pub(crate) fn from_reduced(entries: Vec<i128>) -> Self {
        Ciphertext { entries }
    }

    /// Wraps raw entries, reducing them into `[-q/2, q/2)`.
    pub fn from_entries(entries: Vec<i128>, params: &CryptoParams) -> Result<Self, LweError> {
        let q = params.q_word()?;
        Ok(Ciphertext {
            entries: entries.into_iter().map(|v| centered(v, q)).collect(),
        })
    }

    pub fn zero(params: &CryptoParams) -> Self {
        Ciphertext {
            entries: vec![0; params.n_dim + 1],
        }
    }
}

/// The centered modulo map `a mod q in [-q/2, q/2)`.
///
/// Validating entry point per the module contract: rejects non-prime or
/// too-small moduli. Internal hot paths use the unchecked reduction.
pub fn centered_mod(a: i128, q: u128) -> Result<Plaintext, LweError> {
    if q < 3 || q.is_multiple_of(2) {
        return Err(LweError::InvalidModulus(format!(
            "q = {q} not an odd prime"
        )));
    }
    if q >= (1u128 << MAX_ARITHMETIC_MODULUS_BITS) {
        return Err(LweError::ModulusTooWide {
            bits: 128 - q.leading_zeros(),
        });
    }
    if !is_prime(&BigUint::from(q)) {
        return Err(LweError::InvalidModulus(format!("q = {q} not prime")));
    }
    Ok(centered(a, q))
}

/// Draws a ternary secret key, uniform i.i.d. over `{-1, 0, 1}`.
pub fn keygen(params: &CryptoParams, seed: u64) -> SecretKey {
    let mut stream = rng::stream(seed, 0);
    let entries = (0..params.n_dim)
        .map(|_| loop {
            let v = stream.next_u64() & 3;
            if v < 3 {
                break v as i8 - 1;
            }
        })
        .collect();
    SecretKey { entries }
}

/// Uniform sampler over centered residues of `Z_q`.
#[derive(Clone, Copy)]
pub(crate) struct ResidueSampler {
    q: u128,
    hi_words: bool,
    mask: u64,
}

impl ResidueSampler {
    pub(crate) fn new(q: u128) -> Self {
        let bits = 128 - q.leading_zeros();
        if bits <= 64 {
            ResidueSampler {
                q,
                hi_words: false,
                mask: if bits == 64 {
                    u64::MAX
                } else {
                    (1u64 << bits) - 1
                },
            }
        } else {
            ResidueSampler {
                q,
                hi_words: true,
                mask: (1u64 << (bits - 64)) - 1,
            }
        }
    }

    #[inline]
    pub(crate) fn sample(&self, rng: &mut impl Rng) -> i128 {
        loop {
            let v = if self.hi_words {
                let lo = rng.next_u64() as u128;
                let hi = (rng.next_u64() & self.mask) as u128;
                (hi << 64) | lo
            } else {
                (rng.next_u64() & self.mask) as u128
            };
            if v < self.q {
                return centered_from_unsigned(v, self.q);
            }
        }
    }
}

/// LWE encryption of a scalar plaintext.
pub fn encrypt(
    m: Plaintext,
    sk: &SecretKey,
    params: &CryptoParams,
    seed: u64,
) -> Result<Ciphertext, LweError> {
    params.check_plaintext(m)?;
    check_key(sk, params)?;
    let q = params.q_word()?;
    let sampler = ResidueSampler::new(q);
    let mut stream = rng::stream(seed, 0);
    let n = params.n_dim;
    let mut entries = vec![0i128; n + 1];
    let mut b: i128 = 0;
    for i in 0..n {
        let a_i = sampler.sample(&mut stream);
        entries[i + 1] = a_i;
        match sk.entries[i] {
            1 => b = accum(b, a_i, q),
            -1 => b = accum(b, -a_i, q),
            _ => {}
        }
    }
    let e = centered(rng::sample_gaussian_rounded(&mut stream, params.sigma), q);
    b = accum(b, m, q);
    b = accum(b, e, q);
    entries[0] = centered(b, q);
    Ok(Ciphertext { entries })
}

/// Entrywise encryption of a plaintext vector; entry `i` uses an
/// independent stream so parallel evaluation cannot change results.
pub fn encrypt_vector(
    values: &[Plaintext],
    sk: &SecretKey,
    params: &CryptoParams,
    seed: u64,
) -> Result<Vec<Ciphertext>, LweError> {
    values
        .iter()
        .enumerate()
        .map(|(i, &m)| encrypt(m, sk, params, rng::child_seed(seed, i as u64)))
        .collect()
}

/// Decryption: `b - <a, s> mod q`, centered. The result is the message plus
/// whatever noise the ciphertext has accumulated.
pub fn decrypt(
    c: &Ciphertext,
    sk: &SecretKey,
    params: &CryptoParams,
) -> Result<Plaintext, LweError> {
    check_key(sk, params)?;
    let q = params.q_word()?;
    if c.entries.len() != params.n_dim + 1 {
        return Err(LweError::ShapeMismatch(format!(
            "ciphertext has {} entries, key dimension wants {}",
            c.entries.len(),
            params.n_dim + 1
        )));
    }
    let mut acc: i128 = c.entries[0];
    for (a_i, &s_i) in c.entries[1..].iter().zip(&sk.entries) {
        match s_i {
            1 => acc = accum(acc, -a_i, q),
            -1 => acc = accum(acc, *a_i, q),
            _ => {}
        }
    }
    Ok(centered(acc, q))
}

pub fn decrypt_vector(
    cts: &[Ciphertext],
    sk: &SecretKey,
    params: &CryptoParams,
) -> Result<Vec<Plaintext>, LweError> {
    cts.iter().map(|c| decrypt(c, sk, params)).collect()
}

/// Homomorphic matrix-vector product: `out[i] = sum_j EK[i][j] (x) cx[j]`.
///
/// With `sigma = 0` the decryption of the result equals `M m mod q`
/// exactly; with `sigma > 0` the decryption error per entry is bounded by
/// [`hom_noise_bound`] with overwhelming empirical probability.
pub fn hom_matvec(
    ek: &[Vec<GswCiphertext>],
    cx: &[Ciphertext],
    params: &CryptoParams,
) -> Result<Vec<Ciphertext>, LweError> {
    let h = ek.len();
    let l = cx.len();
    if h == 0 || l == 0 {
        return Err(LweError::ShapeMismatch("empty operand".into()));
    }
    if ek.iter().any(|row| row.len() != l) {
        return Err(LweError::ShapeMismatch("encrypted gain is ragged".into()));
    }
    for c in cx {
        if c.entries.len() != params.n_dim + 1 {
            return Err(LweError::ShapeMismatch("ciphertext dimension".into()));
        }
    }
    for row in ek {
        for g in row {
            g.check_params(params)?;
        }
    }
    let q = params.q_word()?;
    let digit_vectors: Vec<Vec<i8>> = cx
        .iter()
        .map(|c| gadget_decompose(c, params))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(h);
    for row in ek {
        let mut acc = vec![0i128; params.n_dim + 1];
        for (g, digits) in row.iter().zip(&digit_vectors) {
            g.accumulate_product(digits, &mut acc, params)?;
        }
        out.push(Ciphertext {
            entries: acc.into_iter().map(|v| centered(v, q)).collect(),
        });
    }
    Ok(out)
}

/// Engineering bound on the decryption error of [`hom_matvec`] output
/// entry `i`: `l*d*(N+1)*B_e + (sum_j |M_ij|)*B_e` with `B_e = 6 sigma`.
pub fn hom_noise_bound(params: &CryptoParams, l: usize, row_abs_sum: f64) -> f64 {
    let b_e = 6.0 * params.sigma;
    let per_product = params.gadget_len() as f64;
    l as f64 * per_product * b_e + row_abs_sum * b_e
}

fn check_key(sk: &SecretKey, params: &CryptoParams) -> Result<(), LweError> {
    if sk.entries.len() != params.n_dim {
        return Err(LweError::ShapeMismatch(format!(
            "key length {} != N = {}",
            sk.entries.len(),
            params.n_dim
        )));
    }
    Ok(())
}

/// Accumulator threshold: residues are `< 2^125` in magnitude, so reducing
/// whenever the accumulator passes `2^126` keeps every addition inside
/// `i128`.
const ACC_THRESHOLD: u128 = 1 << 126;

#[inline]
pub(crate) fn accum(acc: i128, v: i128, q: u128) -> i128 {
    let sum = acc + v;
    if sum.unsigned_abs() >= ACC_THRESHOLD {
        centered(sum, q)
    } else {
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params() -> CryptoParams {
        CryptoParams::new(4, BigUint::from(257u32), 0.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(CryptoParams::new(3, BigUint::from(257u32), 0.0).is_err());
        assert!(CryptoParams::new(4, BigUint::from(256u32), 0.0).is_err());
        assert!(CryptoParams::new(4, BigUint::from(257u32), -1.0).is_err());
        assert!(CryptoParams::new(4, BigUint::from(1u32), 0.0).is_err());
        let p = small_params();
        assert_eq!(p.digits(), 9);
        assert_eq!(p.gadget_len(), 45);
    }

    #[test]
    fn digit_count_matches_ceil_log2() {
        for bits in [2u32, 3, 9, 13, 61, 109] {
            let p = CryptoParams::from_bits(2, bits, 0.0).unwrap();
            assert_eq!(p.digits(), bits);
            // ceil(log2 q) == bits because 2^(bits-1) < q < 2^bits.
            assert!(p.q() > &(BigUint::from(1u32) << (bits - 1)));
            assert!(p.q() < &(BigUint::from(1u32) << bits));
        }
    }

    #[test]
    fn centered_mod_examples() {
        assert_eq!(centered_mod(0, 7).unwrap(), 0);
        assert_eq!(centered_mod(5, 7).unwrap(), -2);
        assert_eq!(centered_mod(-4, 7).unwrap(), 3);
        assert!(centered_mod(1, 6).is_err());
        assert!(centered_mod(1, 9).is_err());
        assert!(centered_mod(1, 1).is_err());
    }

    #[test]
    fn keygen_is_seeded_and_ternary() {
        let p = CryptoParams::from_bits(12, 30, 3.2).unwrap();
        let k1 = keygen(&p, 7);
        let k2 = keygen(&p, 7);
        assert_eq!(k1, k2);
        assert!(keygen(&p, 8) != k1);
        assert!(k1.entries().iter().all(|&e| (-1..=1).contains(&e)));
    }

    #[test]
    fn keygen_symbol_frequencies_concentrate() {
        // 1000 keys at N = 4096: each symbol within 5 sigma of 1/3.
        let p = CryptoParams::from_bits(12, 30, 3.2).unwrap();
        let mut counts = [0u64; 3];
        let trials = 1000usize;
        for seed in 0..trials {
            for &e in keygen(&p, seed as u64).entries() {
                counts[(e + 1) as usize] += 1;
            }
        }
        let total = (trials * p.n_dim()) as f64;
        let expect = total / 3.0;
        let sigma = (total * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expect).abs() < 5.0 * sigma,
                "symbol {} count {} expect {}",
                i,
                c,
                expect
            );
        }
    }

    #[test]
    fn zero_noise_round_trip() {
        let p = small_params();
        let sk = keygen(&p, 1);
        for (i, m) in [-128i128, -100, -1, 0, 1, 42, 127, 128].iter().enumerate() {
            let ct = encrypt(*m, &sk, &p, 100 + i as u64).unwrap();
            assert_eq!(decrypt(&ct, &sk, &p).unwrap(), *m, "m = {m}");
        }
        // Range limits: q = 257 has centered range [-128, 128].
        assert!(encrypt(129, &sk, &p, 0).is_err());
        assert!(encrypt(-129, &sk, &p, 0).is_err());
    }

    #[test]
    fn exact_round_trip_large_negative() {
        let p = CryptoParams::new(8, BigUint::from(8191u32), 0.0).unwrap();
        let sk = keygen(&p, 3);
        let ct = encrypt(-100, &sk, &p, 4).unwrap();
        assert_eq!(decrypt(&ct, &sk, &p).unwrap(), -100);
    }

    #[test]
    fn all_zero_ciphertext_decrypts_to_zero() {
        let p = small_params();
        let sk = keygen(&p, 1);
        assert_eq!(decrypt(&Ciphertext::zero(&p), &sk, &p).unwrap(), 0);
    }

    #[test]
    fn decrypt_rejects_wrong_dimension() {
        let p = small_params();
        let sk = keygen(&p, 1);
        let bad = Ciphertext {
            entries: vec![0; 3],
        };
        assert!(matches!(
            decrypt(&bad, &sk, &p),
            Err(LweError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn gaussian_noise_stays_within_six_sigma() {
        // Single-encryption noise tail: |decrypt - m| <= 6 sigma in
        // >= 99.9% of trials.
        let p = CryptoParams::new(16, BigUint::from(65537u32), 3.2).unwrap();
        let sk = keygen(&p, 2);
        let m = 42;
        let trials = 10_000;
        let bound = (6.0 * p.sigma()) as i128;
        let mut ok = 0;
        for t in 0..trials {
            let ct = encrypt(m, &sk, &p, t).unwrap();
            let err = decrypt(&ct, &sk, &p).unwrap() - m;
            if err.abs() <= bound {
                ok += 1;
            }
        }
        assert!(ok as f64 >= 0.999 * trials as f64, "{ok}/{trials}");
    }

    #[test]
    fn residues_stay_centered_after_ops() {
        let p = CryptoParams::from_bits(3, 13, 3.2).unwrap();
        let q = p.q_word().unwrap();
        let half = ((q - 1) / 2) as i128;
        let sk = keygen(&p, 5);
        for seed in 0..50 {
            let ct = encrypt(seed as i128 % half, &sk, &p, seed).unwrap();
            for &v in ct.entries() {
                assert!(v >= -half && v <= half);
            }
        }
    }

    #[test]
    fn encrypt_vector_entries_are_independent_of_length() {
        let p = small_params();
        let sk = keygen(&p, 1);
        let a = encrypt_vector(&[5, 7], &sk, &p, 99).unwrap();
        let b = encrypt_vector(&[5, 7, 9], &sk, &p, 99).unwrap();
        assert_eq!(a[0], b[0]);
        assert_eq!(a[1], b[1]);
    }
}

//! GSW matrix ciphertexts, gadget decomposition, and the external product.

use rayon::prelude::*;

use super::modulus::{centered, centered_from_unsigned};
use super::{Ciphertext, CryptoParams, LweError, Plaintext, SecretKey};
use crate::rng;

/// Work threshold (digit count x mask length) above which the external
/// product and GSW encryption fan out across threads.
const PARALLEL_WORK_THRESHOLD: usize = 1 << 22;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const WORD_SALT: [u64; 2] = [0x1234_5678_9abc_def1, 0x0fed_cba9_8765_4321];
const ERROR_SALT: u64 = 0x5165_2e8a_93d1_b0c7;

#[inline(always)]
fn finalize64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-addressable uniform sampler over `[0, q)`.
///
/// Entry `(column, row)` of a mask is produced by hashing the packed
/// counter with the ciphertext seed, so any single entry can be
/// regenerated in isolation; the external product never materializes a
/// mask it is not about to consume, and parallel work splits cannot change
/// results.
#[derive(Clone, Copy)]
struct MaskGen {
    seed: u64,
    q: u128,
    rows: u64,
    hi_mask: u64,
    lo_mask: u64,
    two_words: bool,
}

impl MaskGen {
    fn new(seed: u64, q: u128, rows: usize) -> Self {
        let bits = 128 - q.leading_zeros();
        if bits <= 64 {
            MaskGen {
                seed,
                q,
                rows: rows as u64,
                hi_mask: 0,
                lo_mask: if bits == 64 {
                    u64::MAX
                } else {
                    (1u64 << bits) - 1
                },
                two_words: false,
            }
        } else {
            MaskGen {
                seed,
                q,
                rows: rows as u64,
                hi_mask: if bits == 128 {
                    u64::MAX
                } else {
                    (1u64 << (bits - 64)) - 1
                },
                lo_mask: u64::MAX,
                two_words: true,
            }
        }
    }

    /// Unsigned mask entry in `[0, q)` for (column, row).
    #[inline(always)]
    fn entry(&self, col: u64, row: u64) -> u128 {
        let base = (col * self.rows + row) << 8;
        let mut attempt = 0u64;
        loop {
            let ctr = base | attempt;
            let lo = finalize64(self.seed ^ WORD_SALT[0] ^ ctr.wrapping_mul(GOLDEN)) & self.lo_mask;
            let v = if self.two_words {
                let hi =
                    finalize64(self.seed ^ WORD_SALT[1] ^ ctr.wrapping_mul(GOLDEN)) & self.hi_mask;
                ((hi as u128) << 64) | lo as u128
            } else {
                lo as u128
            };
            if v < self.q {
                return v;
            }
            attempt += 1;
        }
    }
}

/// Columns that can be accumulated unsigned before a reduction is needed;
/// a single column contributes at most two additions (mask and gadget
/// correction) of values at most `q` per slot.
fn reduction_interval(q: u128) -> usize {
    let max_adds = u128::MAX / q;
    usize::try_from(max_adds / 2)
        .unwrap_or(usize::MAX)
        .saturating_sub(1)
        .max(1)
}

#[inline(always)]
fn to_unsigned(v: i128, q: u128) -> u128 {
    if v < 0 {
        q - v.unsigned_abs()
    } else {
        v as u128
    }
}

/// GSW-style matrix ciphertext `C = m G + Z mod q` of logical shape
/// `(N+1) x d(N+1)`, stored seed-compressed.
///
/// Column `j = e*d + t` is an encryption of zero as a column vector
/// `(b_j, a_j)` plus the gadget term `2^t m` in row `e`. Only the body row
/// `b_j` and the gadget corrections are stored; the uniform mask `a_j` is
/// regenerated on demand, which keeps a full-size ciphertext (`N = 2^12`,
/// 109-bit modulus) at megabytes instead of gigabytes.
#[derive(Debug, Clone, PartialEq)]
pub struct GswCiphertext {
    n_dim: usize,
    d: u32,
    mask_seed: u64,
    /// Row 0 of each column; the `e = 0` gadget term is folded in here.
    bodies: Vec<i128>,
    /// Gadget correction applied at row `e = j / d` (zero when `e = 0`).
    diag: Vec<i128>,
}

impl GswCiphertext {
    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    pub fn digits(&self) -> u32 {
        self.d
    }

    pub fn mask_seed(&self) -> u64 {
        self.mask_seed
    }

    pub(crate) fn bodies(&self) -> &[i128] {
        &self.bodies
    }

    pub(crate) fn diag(&self) -> &[i128] {
        &self.diag
    }

    pub(crate) fn from_parts(
        params: &CryptoParams,
        mask_seed: u64,
        bodies: Vec<i128>,
        diag: Vec<i128>,
    ) -> Result<Self, LweError> {
        let cols = params.gadget_len();
        if bodies.len() != cols || diag.len() != cols {
            return Err(LweError::ShapeMismatch("gsw column count".into()));
        }
        Ok(GswCiphertext {
            n_dim: params.n_dim(),
            d: params.digits(),
            mask_seed,
            bodies,
            diag,
        })
    }

    pub(crate) fn check_params(&self, params: &CryptoParams) -> Result<(), LweError> {
        if self.n_dim != params.n_dim() || self.d != params.digits() {
            return Err(LweError::ShapeMismatch(format!(
                "gsw ciphertext built for (N={}, d={}), params want (N={}, d={})",
                self.n_dim,
                self.d,
                params.n_dim(),
                params.digits()
            )));
        }
        Ok(())
    }

    fn mask_gen(&self, q: u128) -> MaskGen {
        MaskGen::new(self.mask_seed, q, self.n_dim)
    }

    /// Expands column `j` to the full `(N+1)`-entry column vector.
    pub fn expand_column(&self, j: usize, params: &CryptoParams) -> Result<Vec<i128>, LweError> {
        self.check_params(params)?;
        if j >= self.bodies.len() {
            return Err(LweError::ShapeMismatch(format!("column {j} out of range")));
        }
        let q = params.q_word()?;
        let gen = self.mask_gen(q);
        let mut col = Vec::with_capacity(self.n_dim + 1);
        col.push(self.bodies[j]);
        for row in 0..self.n_dim {
            col.push(centered_from_unsigned(gen.entry(j as u64, row as u64), q));
        }
        let e = j / self.d as usize;
        if e > 0 {
            col[e] = centered(col[e] + self.diag[j], q);
        }
        Ok(col)
    }

    /// Materializes the full `(N+1) x d(N+1)` matrix. Guarded: only
    /// test-scale parameter sets are small enough to expand.
    pub fn to_dense(&self, params: &CryptoParams) -> Result<Vec<Vec<i128>>, LweError> {
        let entries = (self.n_dim + 1) * self.bodies.len();
        if entries > PARALLEL_WORK_THRESHOLD {
            return Err(LweError::ShapeMismatch(format!(
                "refusing to materialize {entries} entries; use expand_column"
            )));
        }
        let cols: Vec<Vec<i128>> = (0..self.bodies.len())
            .map(|j| self.expand_column(j, params))
            .collect::<Result<_, _>>()?;
        // Transpose to row-major.
        Ok((0..self.n_dim + 1)
            .map(|i| cols.iter().map(|c| c[i]).collect())
            .collect())
    }

    /// Accumulates `C * g` into `acc` (length `N+1`), where `g` is a digit
    /// vector from [`gadget_decompose`].
    pub(crate) fn accumulate_product(
        &self,
        digits: &[i8],
        acc: &mut [i128],
        params: &CryptoParams,
    ) -> Result<(), LweError> {
        self.check_params(params)?;
        if digits.len() != self.bodies.len() || acc.len() != self.n_dim + 1 {
            return Err(LweError::ShapeMismatch("external product shapes".into()));
        }
        let q = params.q_word()?;
        // Split the nonzero digits by sign; negative digits subtract as
        // `q - v`, so both passes are pure unsigned accumulation.
        let positive: Vec<u32> = digits
            .iter()
            .enumerate()
            .filter_map(|(j, &g)| (g > 0).then_some(j as u32))
            .collect();
        let negative: Vec<u32> = digits
            .iter()
            .enumerate()
            .filter_map(|(j, &g)| (g < 0).then_some(j as u32))
            .collect();

        let work = (positive.len() + negative.len()) * self.n_dim;
        let mut partial = if work >= PARALLEL_WORK_THRESHOLD {
            let threads = rayon::current_num_threads().max(1);
            let chunk = ((positive.len() + negative.len()) / (threads * 4)).max(1);
            let pos_parts = positive
                .par_chunks(chunk)
                .map(|cols| self.column_sum(cols, false, q));
            let neg_parts = negative
                .par_chunks(chunk)
                .map(|cols| self.column_sum(cols, true, q));
            pos_parts.chain(neg_parts).reduce(
                || vec![0u128; self.n_dim + 1],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x = (*x + y) % q;
                    }
                    a
                },
            )
        } else {
            let mut a = self.column_sum(&positive, false, q);
            for (x, y) in a.iter_mut().zip(self.column_sum(&negative, true, q)) {
                *x = (*x + y) % q;
            }
            a
        };
        for (slot, part) in acc.iter_mut().zip(partial.drain(..)) {
            *slot = centered(*slot + centered_from_unsigned(part % q, q), q);
        }
        Ok(())
    }

    /// Sum (mod q, unsigned representatives) of the selected columns,
    /// negated when `negate` is set. Reduces the accumulator as often as
    /// the modulus width requires and at the end.
    fn column_sum(&self, cols: &[u32], negate: bool, q: u128) -> Vec<u128> {
        let n = self.n_dim;
        let gen = self.mask_gen(q);
        let d = self.d as usize;
        let mut acc = vec![0u128; n + 1];
        let interval = reduction_interval(q);
        for block in cols.chunks(interval) {
            for &jc in block {
                let j = jc as usize;
                let body = to_unsigned(self.bodies[j], q);
                acc[0] += if negate { q - body } else { body };
                let col = j as u64;
                if negate {
                    for (row, slot) in acc[1..].iter_mut().enumerate() {
                        *slot += q - gen.entry(col, row as u64);
                    }
                } else {
                    for (row, slot) in acc[1..].iter_mut().enumerate() {
                        *slot += gen.entry(col, row as u64);
                    }
                }
                let e = j / d;
                if e > 0 {
                    let dv = to_unsigned(self.diag[j], q);
                    acc[e] += if negate { q - dv } else { dv };
                }
            }
            for slot in acc.iter_mut() {
                *slot %= q;
            }
        }
        acc
    }
}

/// GSW encryption of a scalar plaintext: `m G + Z mod q` with fresh
/// zero-encryption columns. Column masks come from the counter sampler
/// keyed by `seed`; column errors come from the derived error stream.
pub fn encrypt_gsw(
    m: Plaintext,
    sk: &SecretKey,
    params: &CryptoParams,
    seed: u64,
) -> Result<GswCiphertext, LweError> {
    params.check_plaintext(m)?;
    if sk.entries().len() != params.n_dim() {
        return Err(LweError::ShapeMismatch("key length".into()));
    }
    let q = params.q_word()?;
    let d = params.digits() as usize;
    let cols = params.gadget_len();
    let sigma = params.sigma();
    let gen = MaskGen::new(seed, q, params.n_dim());

    // 2^t m mod q by repeated doubling; |2 v| < q fits i128.
    let mut gadget_terms = Vec::with_capacity(d);
    let mut p = centered(m, q);
    for _ in 0..d {
        gadget_terms.push(p);
        p = centered(p + p, q);
    }

    // Key support: only nonzero secret entries touch the mask.
    let plus_rows: Vec<u32> = sk
        .entries()
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| (s == 1).then_some(i as u32))
        .collect();
    let minus_rows: Vec<u32> = sk
        .entries()
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| (s == -1).then_some(i as u32))
        .collect();
    let interval = reduction_interval(q);

    let body_of = |j: usize| -> (i128, i128) {
        let col = j as u64;
        // b_j = <a_j, s> + e_j (+ gadget term when e == 0).
        let mut acc: u128 = 0;
        let mut pending = 0usize;
        for &row in &plus_rows {
            acc += gen.entry(col, row as u64);
            pending += 1;
            if pending == interval {
                acc %= q;
                pending = 0;
            }
        }
        for &row in &minus_rows {
            acc += q - gen.entry(col, row as u64);
            pending += 1;
            if pending == interval {
                acc %= q;
                pending = 0;
            }
        }
        acc %= q;
        let mut b = centered_from_unsigned(acc, q);
        if sigma > 0.0 {
            let mut err_stream = rng::stream(seed ^ ERROR_SALT, col);
            b = centered(b + rng::sample_gaussian_rounded(&mut err_stream, sigma), q);
        }
        let row = j / d;
        let t = j % d;
        let mut diag = 0i128;
        if row == 0 {
            b = centered(b + gadget_terms[t], q);
        } else {
            diag = gadget_terms[t];
        }
        (b, diag)
    };

    let work = cols * params.n_dim();
    let parts: Vec<(i128, i128)> = if work >= PARALLEL_WORK_THRESHOLD {
        (0..cols).into_par_iter().map(body_of).collect()
    } else {
        (0..cols).map(body_of).collect()
    };
    let (bodies, diag): (Vec<i128>, Vec<i128>) = parts.into_iter().unzip();
    GswCiphertext::from_parts(params, seed, bodies, diag)
}

/// Signed base-2 gadget decomposition of a ciphertext.
///
/// Entry `e` of the ciphertext contributes digits `g[e*d + t]` with
/// `|g| <= 1` and `sum_t 2^t g[e*d + t] = c[e]` exactly over the integers.
/// Digits are emitted in non-adjacent form, which cuts the nonzero density
/// to one third and with it the external-product work; centered residues
/// satisfy `|c[e]| < 2^(d-1)`, so the (at most `bitlen + 1`-digit) NAF
/// always fits the `d` digit slots.
pub fn gadget_decompose(c: &Ciphertext, params: &CryptoParams) -> Result<Vec<i8>, LweError> {
    if c.entries().len() != params.n_dim() + 1 {
        return Err(LweError::ShapeMismatch("ciphertext dimension".into()));
    }
    params.q_word()?;
    let d = params.digits() as usize;
    let mut digits = vec![0i8; params.gadget_len()];
    for (e, &entry) in c.entries().iter().enumerate() {
        let mut v = entry;
        let mut t = 0usize;
        while v != 0 {
            if v & 1 != 0 {
                // v odd: pick the digit in {-1, 1} that makes (v - g)
                // divisible by 4, keeping successive nonzeros apart.
                let g: i128 = 2 - v.rem_euclid(4);
                debug_assert!(t < d, "NAF digit overflow");
                digits[e * d + t] = g as i8;
                v -= g;
            }
            v >>= 1;
            t += 1;
        }
    }
    Ok(digits)
}

/// Reconstruction oracle inverse to [`gadget_decompose`]; used by tests and
/// kept independent of the external-product path.
pub fn gadget_reconstruct(digits: &[i8], params: &CryptoParams) -> Result<Vec<i128>, LweError> {
    if digits.len() != params.gadget_len() {
        return Err(LweError::ShapeMismatch("digit vector length".into()));
    }
    let d = params.digits() as usize;
    Ok(digits
        .chunks_exact(d)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .map(|(t, &g)| (g as i128) << t)
                .sum()
        })
        .collect())
}

//! Byte layouts for keys and ciphertexts.
//!
//! Every format is length-prefixed little-endian `u64` words:
//!
//! ```text
//! [count: u64 LE] [words_per_element: u64 LE] [element 0 words LE] ...
//! ```
//!
//! Each element is a centered residue mapped to its unsigned
//! representative in `[0, q)` and written as `words_per_element` 64-bit
//! little-endian words, low word first. `words_per_element` is
//! `ceil(ceil(log2 q) / 64)`, so fixtures are bit-exact across runs and
//! platforms.

//! GSW ciphertexts serialize as their compressed form: the mask seed (one
//! `u64` word) followed by the body and gadget-correction residue arrays,
//! each in the layout above. Expansion is deterministic, so the compressed
//! bytes identify the full matrix.

use super::{Ciphertext, CryptoParams, GswCiphertext, LweError, SecretKey};

fn words_per_element(params: &CryptoParams) -> usize {
    (params.digits() as usize).div_ceil(64)
}

fn push_element(out: &mut Vec<u8>, v: i128, q: u128, words: usize) {
    let unsigned: u128 = if v < 0 {
        q - v.unsigned_abs()
    } else {
        v as u128
    };
    for w in 0..words {
        out.extend_from_slice(&((unsigned >> (64 * w)) as u64).to_le_bytes());
    }
}

fn read_u64(data: &[u8], pos: &mut usize) -> Result<u64, LweError> {
    let end = *pos + 8;
    if end > data.len() {
        return Err(LweError::Serialization("truncated input".into()));
    }
    let mut buf = [0u8; 8];
    buf.copy_from_slice(&data[*pos..end]);
    *pos = end;
    Ok(u64::from_le_bytes(buf))
}

fn read_element(data: &[u8], pos: &mut usize, q: u128, words: usize) -> Result<i128, LweError> {
    let mut unsigned: u128 = 0;
    for w in 0..words {
        unsigned |= (read_u64(data, pos)? as u128) << (64 * w);
    }
    if unsigned >= q {
        return Err(LweError::Serialization(format!(
            "residue {unsigned} outside [0, q)"
        )));
    }
    Ok(super::modulus::centered_from_unsigned(unsigned, q))
}

/// Serializes residues with the documented layout.
fn serialize_residues(values: &[i128], params: &CryptoParams) -> Result<Vec<u8>, LweError> {
    let q = params.q_word()?;
    let words = words_per_element(params);
    let mut out = Vec::with_capacity(16 + values.len() * words * 8);
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    out.extend_from_slice(&(words as u64).to_le_bytes());
    for &v in values {
        push_element(&mut out, v, q, words);
    }
    Ok(out)
}

fn deserialize_residues(
    data: &[u8],
    params: &CryptoParams,
    expected_len: usize,
) -> Result<Vec<i128>, LweError> {
    let q = params.q_word()?;
    let mut pos = 0;
    let count = read_u64(data, &mut pos)? as usize;
    let words = read_u64(data, &mut pos)? as usize;
    if count != expected_len {
        return Err(LweError::Serialization(format!(
            "expected {expected_len} elements, header says {count}"
        )));
    }
    if words != words_per_element(params) {
        return Err(LweError::Serialization(format!(
            "expected {} words per element, header says {words}",
            words_per_element(params)
        )));
    }
    let values: Vec<i128> = (0..count)
        .map(|_| read_element(data, &mut pos, q, words))
        .collect::<Result<_, _>>()?;
    if pos != data.len() {
        return Err(LweError::Serialization("trailing bytes".into()));
    }
    Ok(values)
}

pub fn serialize_secret_key(sk: &SecretKey, params: &CryptoParams) -> Result<Vec<u8>, LweError> {
    if sk.entries().len() != params.n_dim() {
        return Err(LweError::ShapeMismatch("key length".into()));
    }
    let residues: Vec<i128> = sk.entries().iter().map(|&e| e as i128).collect();
    serialize_residues(&residues, params)
}

pub fn deserialize_secret_key(data: &[u8], params: &CryptoParams) -> Result<SecretKey, LweError> {
    let q = params.q_word()?;
    let residues = deserialize_residues(data, params, params.n_dim())?;
    let entries: Vec<i8> = residues
        .iter()
        .map(|&v| {
            if v.unsigned_abs() <= 1 {
                Ok(v as i8)
            } else {
                Err(LweError::Serialization(format!(
                    "key entry {v} not ternary (q = {q})"
                )))
            }
        })
        .collect::<Result<_, _>>()?;
    SecretKey::from_entries(entries)
}

pub fn serialize_ciphertext(c: &Ciphertext, params: &CryptoParams) -> Result<Vec<u8>, LweError> {
    if c.entries().len() != params.n_dim() + 1 {
        return Err(LweError::ShapeMismatch("ciphertext length".into()));
    }
    serialize_residues(c.entries(), params)
}

pub fn deserialize_ciphertext(data: &[u8], params: &CryptoParams) -> Result<Ciphertext, LweError> {
    let entries = deserialize_residues(data, params, params.n_dim() + 1)?;
    Ok(Ciphertext::from_reduced(entries))
}

pub fn serialize_gsw(g: &GswCiphertext, params: &CryptoParams) -> Result<Vec<u8>, LweError> {
    g.check_params(params)?;
    let mut out = g.mask_seed().to_le_bytes().to_vec();
    out.extend(serialize_residues(g.bodies(), params)?);
    out.extend(serialize_residues(g.diag(), params)?);
    Ok(out)
}

pub fn deserialize_gsw(data: &[u8], params: &CryptoParams) -> Result<GswCiphertext, LweError> {
    if data.len() < 8 {
        return Err(LweError::Serialization("truncated input".into()));
    }
    let mut seed_bytes = [0u8; 8];
    seed_bytes.copy_from_slice(&data[..8]);
    let mask_seed = u64::from_le_bytes(seed_bytes);
    let cols = params.gadget_len();
    let section = 16 + cols * (params.digits() as usize).div_ceil(64) * 8;
    if data.len() != 8 + 2 * section {
        return Err(LweError::Serialization("length mismatch".into()));
    }
    let bodies = deserialize_residues(&data[8..8 + section], params, cols)?;
    let diag = deserialize_residues(&data[8 + section..], params, cols)?;
    GswCiphertext::from_parts(params, mask_seed, bodies, diag)
}

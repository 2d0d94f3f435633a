//! Worst-case delay budget of the encrypted loop.
//!
//! The sampling-to-actuation delay decomposes into communication
//! (ciphertext transmission over a fixed-rate link) and computation
//! (encryption, decryption, homomorphic evaluation). Both admit closed-form
//! upper bounds in the cryptographic parameters; their sum is the bound
//! `tau_bar` the gain certification works against.
//!
//! Computation costs carry machine-specific constants. [`calibrate_constants`]
//! fits them to timing measurements with worst-case semantics: the fitted
//! bound dominates every observation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lwe::CryptoParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DelayError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
}

/// Fixed-rate, fixed-propagation communication link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    /// Transmission rate in bits per second.
    pub rate_bits_per_s: f64,
    /// Propagation delay in seconds.
    pub propagation_s: f64,
}

impl LinkModel {
    pub fn validate(&self) -> Result<(), DelayError> {
        if self.rate_bits_per_s.is_nan() || self.rate_bits_per_s <= 0.0 {
            return Err(DelayError::InvalidArgument("link rate must be > 0".into()));
        }
        if self.propagation_s.is_nan() || self.propagation_s < 0.0 {
            return Err(DelayError::InvalidArgument(
                "propagation delay must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Per-unit computation costs in seconds: scalar encryption and decryption
/// cost `c * N d`, one scalar homomorphic product costs `c * N d log2 N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConstants {
    pub c_enc: f64,
    pub c_dec: f64,
    pub c_mul: f64,
}

impl CostConstants {
    pub fn validate(&self) -> Result<(), DelayError> {
        for (name, v) in [
            ("c_enc", self.c_enc),
            ("c_dec", self.c_dec),
            ("c_mul", self.c_mul),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DelayError::InvalidArgument(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Measured split of a total delay, when available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauComponents {
    pub comm: f64,
    pub enc: f64,
    pub dec: f64,
    pub mul: f64,
}

/// Delay bound and its decomposition, all in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayBudget {
    pub comm: f64,
    pub compute: f64,
    pub total: f64,
    pub components: Option<TauComponents>,
}

fn check_dims(n: usize, m: usize) -> Result<(), DelayError> {
    if n == 0 || m == 0 {
        return Err(DelayError::InvalidArgument(format!(
            "state/input dimensions must be >= 1, got ({n}, {m})"
        )));
    }
    Ok(())
}

/// `(n + m)(N + 1) d / R + 2 delta`, linear in the ciphertext payload.
pub(crate) fn comm_formula(n: usize, m: usize, n_plus_1: f64, d: f64, link: &LinkModel) -> f64 {
    (n + m) as f64 * n_plus_1 * d / link.rate_bits_per_s + 2.0 * link.propagation_s
}

/// Upper bound on the communication delay: one state ciphertext vector up,
/// one input ciphertext vector down.
pub fn comm_delay_bound(
    link: &LinkModel,
    params: &CryptoParams,
    n: usize,
    m: usize,
) -> Result<f64, DelayError> {
    link.validate()?;
    check_dims(n, m)?;
    Ok(comm_formula(
        n,
        m,
        (params.n_dim() + 1) as f64,
        params.digits() as f64,
        link,
    ))
}

/// Upper bound on the computation delay:
/// `N d (c_enc n + c_dec m + c_mul m n log2 N)`.
pub fn comp_delay_bound(
    consts: &CostConstants,
    params: &CryptoParams,
    n: usize,
    m: usize,
) -> Result<f64, DelayError> {
    consts.validate()?;
    check_dims(n, m)?;
    let nd = params.n_dim() as f64 * params.digits() as f64;
    let log2_n = params.n_dim().trailing_zeros() as f64;
    Ok(nd
        * (consts.c_enc * n as f64
            + consts.c_dec * m as f64
            + consts.c_mul * m as f64 * n as f64 * log2_n))
}

/// Total delay bound `tau_bar`: communication plus computation.
pub fn total_delay_bound(
    link: &LinkModel,
    consts: &CostConstants,
    params: &CryptoParams,
    n: usize,
    m: usize,
) -> Result<DelayBudget, DelayError> {
    let comm = comm_delay_bound(link, params, n, m)?;
    let compute = comp_delay_bound(consts, params, n, m)?;
    Ok(DelayBudget {
        comm,
        compute,
        total: comm + compute,
        components: None,
    })
}

/// Kind of timed cryptographic operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Encrypt,
    Decrypt,
    ExternalProduct,
}

impl OpKind {
    pub fn label(self) -> &'static str {
        match self {
            OpKind::Encrypt => "enc",
            OpKind::Decrypt => "dec",
            OpKind::ExternalProduct => "mul",
        }
    }
}

/// One timing observation: `seconds` to run the operation batch described
/// by the dimensions (e.g. encrypting an `n`-vector at parameters `(N, d)`).
///
/// Timing runs must execute one at a time; timing concurrent operations
/// skews the observations with contention and the fitted constants stop
/// being per-operation bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub kind: OpKind,
    pub n_dim: usize,
    pub digits: u32,
    pub state_dim: usize,
    pub input_dim: usize,
    pub seconds: f64,
}

impl Measurement {
    /// Units of the cost model consumed by this observation.
    fn load(&self) -> f64 {
        let nd = self.n_dim as f64 * self.digits as f64;
        match self.kind {
            OpKind::Encrypt => self.state_dim as f64 * nd,
            OpKind::Decrypt => self.input_dim as f64 * nd,
            OpKind::ExternalProduct => {
                let log2_n = self.n_dim.trailing_zeros() as f64;
                self.input_dim as f64 * self.state_dim as f64 * nd * log2_n
            }
        }
    }
}

/// Fits `CostConstants` to measurements: least squares per operation kind,
/// then inflated by the worst observed ratio so the fitted bound dominates
/// every measurement.
pub fn calibrate_constants(measurements: &[Measurement]) -> Result<CostConstants, DelayError> {
    let fit_kind = |kind: OpKind| -> Result<f64, DelayError> {
        let of_kind: Vec<&Measurement> = measurements.iter().filter(|m| m.kind == kind).collect();
        if of_kind.is_empty() {
            return Err(DelayError::Calibration(format!(
                "no measurements for operation kind '{}'",
                kind.label()
            )));
        }
        let (mut num, mut den) = (0.0, 0.0);
        for m in &of_kind {
            let u = m.load();
            if u.is_nan() || u <= 0.0 || m.seconds < 0.0 || !m.seconds.is_finite() {
                return Err(DelayError::Calibration(format!(
                    "degenerate measurement for '{}'",
                    kind.label()
                )));
            }
            num += m.seconds * u;
            den += u * u;
        }
        let ls = num / den;
        if ls.is_nan() || ls <= 0.0 {
            return Err(DelayError::Calibration(format!(
                "fit for '{}' is not strictly positive",
                kind.label()
            )));
        }
        let worst_ratio = of_kind
            .iter()
            .map(|m| m.seconds / (ls * m.load()))
            .fold(0.0f64, f64::max);
        let c = ls * worst_ratio;
        if c.is_nan() || c <= 0.0 || !c.is_finite() {
            return Err(DelayError::Calibration(format!(
                "inflated constant for '{}' is not strictly positive",
                kind.label()
            )));
        }
        Ok(c)
    };
    Ok(CostConstants {
        c_enc: fit_kind(OpKind::Encrypt)?,
        c_dec: fit_kind(OpKind::Decrypt)?,
        c_mul: fit_kind(OpKind::ExternalProduct)?,
    })
}

/// CSV report of raw calibration measurements:
/// `kind,N,d,n,m,seconds`, one row per observation.
pub fn measurements_to_csv(measurements: &[Measurement]) -> String {
    let mut out = String::from("kind,N,d,n,m,seconds\n");
    for m in measurements {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            m.kind.label(),
            m.n_dim,
            m.digits,
            m.state_dim,
            m.input_dim,
            m.seconds
        ));
    }
    out
}

//! Exact sampled-data discretization of a linear plant under a constant
//! fractional input delay.
//!
//! For `xdot = A x + B u` sampled with period `Ts` and an input that
//! switches value `tau` seconds into each period, the state recursion is
//!
//! ```text
//! x[k+1] = Phi x[k] + Gamma0(tau) u[k] + Gamma1(tau) u[k-1]
//! ```
//!
//! with `Phi = exp(A Ts)` and the input integrals split at the switch
//! instant. All integrals are read off block matrix exponentials (the Van
//! Loan construction), so singular `A` needs no special casing and the
//! matrices are exact to machine precision.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError, Mat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizationError {
    #[error("invalid plant: {0}")]
    InvalidPlant(String),
    #[error("delay {tau} outside [0, {ts}]")]
    DelayRange { tau: f64, ts: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Continuous-time plant `xdot = A x + B u` with sampling time `Ts` and
/// initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    pub a: Mat,
    pub b: Mat,
    pub ts: f64,
    pub x_ini: Vec<f64>,
}

impl PlantModel {
    pub fn new(a: Mat, b: Mat, ts: f64, x_ini: Vec<f64>) -> Result<Self, DiscretizationError> {
        let plant = PlantModel { a, b, ts, x_ini };
        plant.validate()?;
        Ok(plant)
    }

    pub fn validate(&self) -> Result<(), DiscretizationError> {
        if !self.a.is_square() {
            return Err(DiscretizationError::InvalidPlant("A must be square".into()));
        }
        if self.b.rows() != self.a.rows() {
            return Err(DiscretizationError::InvalidPlant(
                "B must have as many rows as A".into(),
            ));
        }
        if self.b.cols() == 0 || self.a.rows() == 0 {
            return Err(DiscretizationError::InvalidPlant("empty dimensions".into()));
        }
        if self.x_ini.len() != self.a.rows() {
            return Err(DiscretizationError::InvalidPlant(
                "x_ini length must match the state dimension".into(),
            ));
        }
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(DiscretizationError::InvalidPlant("Ts must be > 0".into()));
        }
        if !self.a.is_finite() || !self.b.is_finite() || self.x_ini.iter().any(|v| !v.is_finite()) {
            return Err(DiscretizationError::InvalidPlant("non-finite entry".into()));
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }
}

/// Exact zero-delay discretization `(Phi, Gamma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedPlant {
    pub phi: Mat,
    pub gamma: Mat,
}

/// State-feedback gain `u = K x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCandidate {
    pub k: Mat,
}

impl GainCandidate {
    pub fn new(k: Mat) -> Self {
        GainCandidate { k }
    }
}

/// Matrix exponential (re-exported kernel; see [`linalg::expm`]).
pub fn expm(m: &Mat) -> Result<Mat, DiscretizationError> {
    Ok(linalg::expm(m)?)
}

/// Largest eigenvalue magnitude (re-exported kernel).
pub fn spectral_radius(m: &Mat) -> Result<f64, DiscretizationError> {
    Ok(linalg::spectral_radius(m)?)
}

/// `(exp(A t), F(t))` with `F(t) = int_0^t exp(A s) ds B`, from the
/// exponential of the block matrix `[[A, B], [0, 0]] t`.
pub fn van_loan(plant: &PlantModel, t: f64) -> Result<(Mat, Mat), DiscretizationError> {
    let n = plant.state_dim();
    let m = plant.input_dim();
    let mut block = Mat::zeros(n + m, n + m);
    block.set_block(0, 0, &plant.a);
    block.set_block(0, n, &plant.b);
    let e = expm(&block.scale(t))?;
    Ok((e.block(0, 0, n, n), e.block(0, n, n, m)))
}

/// Exact discretization at the sampling instants: `Phi = exp(A Ts)`,
/// `Gamma = int_0^Ts exp(A (Ts - h)) dh B`.
pub fn discretize(plant: &PlantModel) -> Result<DiscretizedPlant, DiscretizationError> {
    plant.validate()?;
    let (phi, gamma) = van_loan(plant, plant.ts)?;
    Ok(DiscretizedPlant { phi, gamma })
}

/// Splits the input integral at the switch instant: returns
/// `(Gamma0(tau), Gamma1(tau))` with `Gamma0 + Gamma1 = Gamma`.
pub fn gamma_split(plant: &PlantModel, tau: f64) -> Result<(Mat, Mat), DiscretizationError> {
    plant.validate()?;
    if !(0.0..=plant.ts).contains(&tau) || !tau.is_finite() {
        return Err(DiscretizationError::DelayRange { tau, ts: plant.ts });
    }
    let (_, f_ts) = van_loan(plant, plant.ts)?;
    let (_, f_rem) = van_loan(plant, plant.ts - tau)?;
    // Gamma1(tau) = F(Ts) - F(Ts - tau), by change of variables.
    let gamma1 = f_ts.sub(&f_rem);
    let gamma0 = f_ts.sub(&gamma1);
    Ok((gamma0, gamma1))
}

/// Augmented closed-loop matrix over `xi[k] = [x[k]; x[k-1]]`:
///
/// ```text
/// [ Phi + Gamma0(tau) K    Gamma1(tau) K ]
/// [ I                      0             ]
/// ```
pub fn augmented_matrix(
    plant: &PlantModel,
    tau: f64,
    gain: &GainCandidate,
) -> Result<Mat, DiscretizationError> {
    let n = plant.state_dim();
    let m = plant.input_dim();
    if gain.k.rows() != m || gain.k.cols() != n {
        return Err(DiscretizationError::InvalidPlant(format!(
            "gain must be {m}x{n}, got {}x{}",
            gain.k.rows(),
            gain.k.cols()
        )));
    }
    let (phi, _) = van_loan(plant, plant.ts)?;
    let (gamma0, gamma1) = gamma_split(plant, tau)?;
    let mut out = Mat::zeros(2 * n, 2 * n);
    out.set_block(0, 0, &phi.add(&gamma0.matmul(&gain.k)));
    out.set_block(0, n, &gamma1.matmul(&gain.k));
    out.set_block(n, 0, &Mat::identity(n));
    Ok(out)
}

//! End-to-end closed-loop simulation under the delayed zero-order-held
//! input.
//!
//! Within each sampling period the input is piecewise constant with one
//! switch at `k Ts + tau`, so the state is propagated exactly by two matrix
//! exponential segments per period (and per reporting point); there is no
//! ODE integration error anywhere.
//!
//! Two controller modes share the loop:
//! * plaintext: `u[k] = K x[k]` with the real-valued gain, the idealization
//!   the stability analysis works with;
//! * encrypted: the sampled state is quantized with resolution `r`,
//!   encrypted, multiplied under encryption against the gain quantized at
//!   scale `s`, decrypted, and rescaled by `r s`. With `sigma = 0` the
//!   result is the exact fixed-point product; with noise it differs by the
//!   decryption error times `r s`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{van_loan, DiscretizationError, GainCandidate, PlantModel};
use crate::linalg::Mat;
use crate::lwe::{
    decrypt_vector, encrypt_gsw, encrypt_vector, hom_matvec, CryptoParams, GswCiphertext, LweError,
    SecretKey,
};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("plaintext overflow at step {step}: {detail}")]
    Overflow { step: usize, detail: String },
    #[error(transparent)]
    Lwe(#[from] LweError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

/// Fixed-point scaling: states are quantized with resolution `r`, the gain
/// with scale `s` (so `1/s >= 1` stored digits per gain unit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationParams {
    pub r: f64,
    pub s: f64,
}

impl QuantizationParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(SimError::InvalidConfig("resolution r must be > 0".into()));
        }
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(SimError::InvalidConfig(
                "gain scale s must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Loop timing and reporting configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Constant total delay in seconds, `0 <= tau < Ts`.
    pub tau: f64,
    /// Number of sampling steps to run.
    pub horizon: usize,
    /// Reporting points per sampling interval.
    pub output_grid: usize,
}

/// Per-step timing: the sampling instant and the input-switch instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub k: usize,
    pub sample_t: f64,
    pub switch_t: f64,
}

/// Timed simulation output on the reporting grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Input vector active at the corresponding time.
    pub inputs: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    pub events: Vec<StepEvent>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("nonempty trajectory")
    }

    pub fn final_norm(&self) -> f64 {
        *self.norms.last().expect("nonempty trajectory")
    }

    pub fn max_norm(&self) -> f64 {
        self.norms.iter().cloned().fold(0.0, f64::max)
    }
}

/// The server-side controller: the gain encrypted entrywise under GSW,
/// plus the scaling metadata.
///
/// `quantized_gain` keeps the plaintext fixed-point gain alongside the
/// ciphertexts; the simulator uses it for the overflow gate and oracles.
#[derive(Debug, Clone)]
pub struct EncryptedController {
    pub ek: Vec<Vec<GswCiphertext>>,
    pub params: CryptoParams,
    pub quant: QuantizationParams,
    pub quantized_gain: Vec<Vec<i128>>,
}

/// Controller side of a simulation run.
pub enum Controller<'a> {
    Plaintext(&'a GainCandidate),
    Encrypted {
        ctrl: &'a EncryptedController,
        sk: &'a SecretKey,
    },
}

/// Round-to-nearest with ties to even, the quantizer used throughout.
pub fn round_half_even(x: f64) -> Result<i128, SimError> {
    if !x.is_finite() || x.abs() >= 1e38 {
        return Err(SimError::InvalidConfig(format!("unroundable value {x}")));
    }
    Ok(x.round_ties_even() as i128)
}

/// Quantizes and GSW-encrypts the gain entrywise: entry `(i, j)` holds
/// `Enc'(round(K_ij / s) mod q)`.
pub fn encrypt_gain(
    gain: &GainCandidate,
    quant: QuantizationParams,
    sk: &SecretKey,
    params: &CryptoParams,
    seed: u64,
) -> Result<EncryptedController, SimError> {
    quant.validate()?;
    let q = params.q_word()?;
    let half = ((q - 1) / 2) as i128;
    let (m, n) = (gain.k.rows(), gain.k.cols());
    let mut ek = Vec::with_capacity(m);
    let mut quantized = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = Vec::with_capacity(n);
        let mut qrow = Vec::with_capacity(n);
        for j in 0..n {
            let v = round_half_even(gain.k[(i, j)] / quant.s)?;
            if v.unsigned_abs() > half as u128 {
                return Err(SimError::Overflow {
                    step: 0,
                    detail: format!(
                        "quantized gain entry ({i}, {j}) = {v} exceeds q/2; increase s or q"
                    ),
                });
            }
            row.push(encrypt_gsw(
                v,
                sk,
                params,
                rng::child_seed(seed, (i * n + j) as u64),
            )?);
            qrow.push(v);
        }
        ek.push(row);
        quantized.push(qrow);
    }
    Ok(EncryptedController {
        ek,
        params: params.clone(),
        quant,
        quantized_gain: quantized,
    })
}

/// One encrypted controller evaluation: quantize-encrypt the state,
/// multiply under encryption, decrypt, rescale.
///
/// The overflow gate checks that every quantized magnitude and every
/// running plaintext accumulation stays below `q/2`; wrapping would
/// silently corrupt the input, so the step aborts instead.
pub fn encrypted_step(
    ctrl: &EncryptedController,
    x: &[f64],
    sk: &SecretKey,
    seed: u64,
) -> Result<Vec<f64>, SimError> {
    encrypted_step_at(ctrl, x, sk, seed, 0)
}

fn encrypted_step_at(
    ctrl: &EncryptedController,
    x: &[f64],
    sk: &SecretKey,
    seed: u64,
    step: usize,
) -> Result<Vec<f64>, SimError> {
    let params = &ctrl.params;
    let q = params.q_word()?;
    let half = ((q - 1) / 2) as i128;
    let n = ctrl.quantized_gain.first().map_or(0, Vec::len);
    if x.len() != n {
        return Err(SimError::InvalidConfig(format!(
            "state has {} entries, controller wants {n}",
            x.len()
        )));
    }
    // Quantize the sampled state.
    let mut xq = Vec::with_capacity(n);
    for (j, &xj) in x.iter().enumerate() {
        let v = round_half_even(xj / ctrl.quant.r)?;
        if v.unsigned_abs() > half as u128 {
            return Err(SimError::Overflow {
                step,
                detail: format!("quantized state entry {j} = {v} exceeds q/2"),
            });
        }
        xq.push(v);
    }
    // Overflow gate on the true plaintext accumulation.
    for (i, krow) in ctrl.quantized_gain.iter().enumerate() {
        let mut acc: i128 = 0;
        for (kij, xj) in krow.iter().zip(&xq) {
            let term = kij.checked_mul(*xj).ok_or_else(|| overflow(step, i))?;
            acc = acc.checked_add(term).ok_or_else(|| overflow(step, i))?;
            if acc.unsigned_abs() > half as u128 {
                return Err(overflow(step, i));
            }
        }
    }
    // Encrypt, evaluate, decrypt, rescale.
    let cts = encrypt_vector(&xq, sk, params, rng::child_seed(seed, 1))?;
    let products = hom_matvec(&ctrl.ek, &cts, params)?;
    let plain = decrypt_vector(&products, sk, params)?;
    Ok(plain
        .iter()
        .map(|&u| ctrl.quant.r * ctrl.quant.s * u as f64)
        .collect())
}

fn overflow(step: usize, row: usize) -> SimError {
    SimError::Overflow {
        step,
        detail: format!("accumulated plaintext magnitude in output entry {row} exceeds q/2"),
    }
}

enum GridPropagator {
    /// Before the switch: propagate from the sample state under the held
    /// previous input.
    Held { e: Mat, f: Mat },
    /// At or after the switch: propagate from the switch state under the
    /// fresh input.
    Switched { e: Mat, f: Mat },
}

/// Runs the closed loop for `cfg.horizon` sampling periods.
///
/// The initial held input is zero. Reporting happens at `output_grid`
/// points per period plus the final sampling instant; every reported state
/// is produced by exact matrix-exponential propagation.
pub fn simulate(
    plant: &PlantModel,
    controller: &Controller,
    cfg: &SimConfig,
    seed: u64,
) -> Result<Trajectory, SimError> {
    plant.validate()?;
    if !(cfg.tau >= 0.0 && cfg.tau < plant.ts) {
        return Err(SimError::InvalidConfig(format!(
            "tau = {} outside [0, Ts = {})",
            cfg.tau, plant.ts
        )));
    }
    if cfg.horizon == 0 || cfg.output_grid == 0 {
        return Err(SimError::InvalidConfig(
            "horizon and output_grid must be >= 1".into(),
        ));
    }
    let n = plant.state_dim();
    let m = plant.input_dim();
    match controller {
        Controller::Plaintext(gain) => {
            if gain.k.rows() != m || gain.k.cols() != n {
                return Err(SimError::InvalidConfig(format!("gain must be {m}x{n}")));
            }
        }
        Controller::Encrypted { ctrl, .. } => {
            if ctrl.quantized_gain.len() != m || ctrl.quantized_gain.iter().any(|r| r.len() != n) {
                return Err(SimError::InvalidConfig(format!(
                    "encrypted gain must be {m}x{n}"
                )));
            }
        }
    }

    let (e_tau, f_tau) = van_loan(plant, cfg.tau)?;
    let (e_rem, f_rem) = van_loan(plant, plant.ts - cfg.tau)?;
    let propagators: Vec<GridPropagator> = (0..cfg.output_grid)
        .map(|g| {
            let offset = plant.ts * g as f64 / cfg.output_grid as f64;
            if offset < cfg.tau {
                let (e, f) = van_loan(plant, offset)?;
                Ok(GridPropagator::Held { e, f })
            } else {
                let (e, f) = van_loan(plant, offset - cfg.tau)?;
                Ok(GridPropagator::Switched { e, f })
            }
        })
        .collect::<Result<_, DiscretizationError>>()?;

    let points = cfg.horizon * cfg.output_grid + 1;
    let mut traj = Trajectory {
        times: Vec::with_capacity(points),
        states: Vec::with_capacity(points),
        inputs: Vec::with_capacity(points),
        norms: Vec::with_capacity(points),
        events: Vec::with_capacity(cfg.horizon),
    };
    let mut x = plant.x_ini.clone();
    let mut u_prev = vec![0.0; m];

    let record = |t: f64, state: &[f64], input: &[f64], traj: &mut Trajectory| {
        traj.times.push(t);
        traj.states.push(state.to_vec());
        traj.inputs.push(input.to_vec());
        traj.norms
            .push(state.iter().map(|v| v * v).sum::<f64>().sqrt());
    };

    for k in 0..cfg.horizon {
        let sample_t = k as f64 * plant.ts;
        let u_curr = match controller {
            Controller::Plaintext(gain) => gain.k.matvec(&x),
            Controller::Encrypted { ctrl, sk } => {
                encrypted_step_at(ctrl, &x, sk, rng::child_seed(seed, k as u64), k)?
            }
        };
        traj.events.push(StepEvent {
            k,
            sample_t,
            switch_t: sample_t + cfg.tau,
        });

        let x_mid = {
            let ex = e_tau.matvec(&x);
            let fu = f_tau.matvec(&u_prev);
            ex.iter().zip(fu).map(|(a, b)| a + b).collect::<Vec<f64>>()
        };
        for (g, prop) in propagators.iter().enumerate() {
            let t = sample_t + plant.ts * g as f64 / cfg.output_grid as f64;
            match prop {
                GridPropagator::Held { e, f } => {
                    let state: Vec<f64> = e
                        .matvec(&x)
                        .iter()
                        .zip(f.matvec(&u_prev))
                        .map(|(a, b)| a + b)
                        .collect();
                    record(t, &state, &u_prev, &mut traj);
                }
                GridPropagator::Switched { e, f } => {
                    let state: Vec<f64> = e
                        .matvec(&x_mid)
                        .iter()
                        .zip(f.matvec(&u_curr))
                        .map(|(a, b)| a + b)
                        .collect();
                    record(t, &state, &u_curr, &mut traj);
                }
            }
        }
        let x_next: Vec<f64> = e_rem
            .matvec(&x_mid)
            .iter()
            .zip(f_rem.matvec(&u_curr))
            .map(|(a, b)| a + b)
            .collect();
        x = x_next;
        u_prev = u_curr;
    }
    let t_end = cfg.horizon as f64 * plant.ts;
    record(t_end, &x, &u_prev, &mut traj);
    Ok(traj)
}

/// Trajectory CSV: `t,x1..xn,u1..um,norm`, one row per reporting point.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let n = traj.states.first().map_or(0, Vec::len);
    let m = traj.inputs.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 1..=n {
        out.push_str(&format!(",x{i}"));
    }
    for i in 1..=m {
        out.push_str(&format!(",u{i}"));
    }
    out.push_str(",norm\n");
    for idx in 0..traj.times.len() {
        out.push_str(&format!("{}", traj.times[idx]));
        for v in &traj.states[idx] {
            out.push_str(&format!(",{v}"));
        }
        for v in &traj.inputs[idx] {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{}\n", traj.norms[idx]));
    }
    out
}

/// Events CSV: `k,sample_t,switch_t`, one row per sampling step.
pub fn events_to_csv(traj: &Trajectory) -> String {
    let mut out = String::from("k,sample_t,switch_t\n");
    for e in &traj.events {
        out.push_str(&format!("{},{},{}\n", e.k, e.sample_t, e.switch_t));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{discretize, gamma_split};
    use crate::fixtures;
    use crate::lwe::keygen;

    const TAU_BAR: f64 = 0.019150;

    fn gain_soft() -> GainCandidate {
        GainCandidate::new(Mat::from_rows(&[vec![-72.0, -16.1]]).unwrap())
    }

    fn gain_aggressive() -> GainCandidate {
        GainCandidate::new(Mat::from_rows(&[vec![-960.0, -50.0]]).unwrap())
    }

    fn small_params(sigma: f64) -> CryptoParams {
        CryptoParams::from_bits(5, 109, sigma).unwrap()
    }

    #[test]
    fn round_half_even_ties() {
        assert_eq!(round_half_even(0.5).unwrap(), 0);
        assert_eq!(round_half_even(1.5).unwrap(), 2);
        assert_eq!(round_half_even(2.5).unwrap(), 2);
        assert_eq!(round_half_even(-0.5).unwrap(), 0);
        assert_eq!(round_half_even(-1.5).unwrap(), -2);
        assert_eq!(round_half_even(3.2).unwrap(), 3);
        assert!(round_half_even(f64::NAN).is_err());
    }

    #[test]
    fn encrypt_gain_quantization_values() {
        let p = small_params(0.0);
        let sk = keygen(&p, 1);
        let quant = QuantizationParams { r: 1.0, s: 0.1 };
        let ctrl = encrypt_gain(&gain_soft(), quant, &sk, &p, 2).unwrap();
        assert_eq!(ctrl.quantized_gain, vec![vec![-720, -161]]);
    }

    #[test]
    fn encrypt_gain_zero_is_zero() {
        let p = small_params(0.0);
        let sk = keygen(&p, 1);
        let quant = QuantizationParams { r: 1.0, s: 1.0 };
        let ctrl = encrypt_gain(&GainCandidate::new(Mat::zeros(1, 2)), quant, &sk, &p, 2).unwrap();
        assert_eq!(ctrl.quantized_gain, vec![vec![0, 0]]);
        let u = encrypted_step(&ctrl, &[5.0, -3.0], &sk, 9).unwrap();
        assert_eq!(u, vec![0.0]);
    }

    #[test]
    fn encrypt_gain_overflow_guard() {
        // Tiny modulus: q = 13 has centered range [-6, 6].
        let p = CryptoParams::new(4, num_bigint::BigUint::from(13u32), 0.0).unwrap();
        let sk = keygen(&p, 1);
        let quant = QuantizationParams { r: 1.0, s: 0.001 };
        let err = encrypt_gain(&gain_soft(), quant, &sk, &p, 2);
        assert!(matches!(err, Err(SimError::Overflow { .. })));
    }

    #[test]
    fn quantization_free_identity() {
        // r = s = 1 with integer gain and state: u_e = K x exactly.
        let p = small_params(0.0);
        let sk = keygen(&p, 3);
        let gain = GainCandidate::new(Mat::from_rows(&[vec![2.0, -3.0]]).unwrap());
        let quant = QuantizationParams { r: 1.0, s: 1.0 };
        let ctrl = encrypt_gain(&gain, quant, &sk, &p, 4).unwrap();
        let u = encrypted_step(&ctrl, &[7.0, 5.0], &sk, 5).unwrap();
        assert_eq!(u, vec![2.0 * 7.0 - 3.0 * 5.0]);
    }

    #[test]
    fn zero_state_noise_stays_within_model_bound() {
        let p = small_params(3.2);
        let sk = keygen(&p, 3);
        let quant = QuantizationParams {
            r: 2f64.powi(-10),
            s: 2f64.powi(-10),
        };
        let ctrl = encrypt_gain(&gain_soft(), quant, &sk, &p, 4).unwrap();
        // x = 0 isolates the noise path: u_e = r s (Kq e_x + z-noise),
        // dominated by the gain-times-encryption-error term.
        let row_abs_sum: f64 = ctrl.quantized_gain[0].iter().map(|&k| k.abs() as f64).sum();
        let bound = quant.r * quant.s * crate::lwe::hom_noise_bound(&p, 2, row_abs_sum);
        for trial in 0..32 {
            let u = encrypted_step(&ctrl, &[0.0, 0.0], &sk, 100 + trial).unwrap();
            assert!(u[0].abs() <= bound, "{} vs bound {bound}", u[0]);
        }
    }

    #[test]
    fn rounding_error_bound_against_plaintext_product() {
        let p = small_params(0.0);
        let sk = keygen(&p, 6);
        let quant = QuantizationParams {
            r: 2f64.powi(-10),
            s: 2f64.powi(-10),
        };
        let ctrl = encrypt_gain(&gain_soft(), quant, &sk, &p, 7).unwrap();
        let x = [1.0, 0.0];
        let u = encrypted_step(&ctrl, &x, &sk, 8).unwrap();
        let exact = gain_soft().k.matvec(&x);
        // |u_e - K x| <= r s sum_j (|kq_j|/2 + |xq_j|/2 + 1/4)
        let kq = &ctrl.quantized_gain[0];
        let xq: Vec<i128> = x
            .iter()
            .map(|&v| round_half_even(v / quant.r).unwrap())
            .collect();
        let bound: f64 = quant.r
            * quant.s
            * kq.iter()
                .zip(&xq)
                .map(|(&k, &x)| 0.5 * k.abs() as f64 + 0.5 * x.abs() as f64 + 0.25)
                .sum::<f64>();
        assert!((u[0] - exact[0]).abs() <= bound, "{} vs {exact:?}", u[0]);
    }

    #[test]
    fn overflow_gate_aborts_with_step_index() {
        let p = CryptoParams::new(4, num_bigint::BigUint::from(257u32), 0.0).unwrap();
        let sk = keygen(&p, 1);
        let quant = QuantizationParams { r: 1.0, s: 1.0 };
        let gain = GainCandidate::new(Mat::from_rows(&[vec![100.0, 0.0]]).unwrap());
        let ctrl = encrypt_gain(&gain, quant, &sk, &p, 2).unwrap();
        match encrypted_step(&ctrl, &[100.0, 0.0], &sk, 3) {
            Err(SimError::Overflow { step: 0, .. }) => {}
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn delay_free_plaintext_matches_matrix_powers() {
        let plant = fixtures::double_integrator();
        let dp = discretize(&plant).unwrap();
        let gain = gain_soft();
        let cfg = SimConfig {
            tau: 0.0,
            horizon: 50,
            output_grid: 1,
        };
        let traj = simulate(&plant, &Controller::Plaintext(&gain), &cfg, 0).unwrap();
        let cl = dp.phi.add(&dp.gamma.matmul(&gain.k));
        let mut x = plant.x_ini.clone();
        for k in 0..=50usize {
            let reported = &traj.states[k];
            for i in 0..2 {
                assert!((reported[i] - x[i]).abs() < 1e-9, "step {k}");
            }
            x = cl.matvec(&x);
        }
    }

    #[test]
    fn sampled_states_satisfy_delayed_recursion() {
        let plant = fixtures::double_integrator();
        let tau = 0.6 * TAU_BAR;
        let gain = gain_soft();
        let cfg = SimConfig {
            tau,
            horizon: 40,
            output_grid: 4,
        };
        let traj = simulate(&plant, &Controller::Plaintext(&gain), &cfg, 0).unwrap();
        let dp = discretize(&plant).unwrap();
        let (g0, g1) = gamma_split(&plant, tau).unwrap();
        // Rebuild the sampled sequence from the recursion.
        let mut x = plant.x_ini.clone();
        let mut u_prev = vec![0.0];
        for k in 0..40usize {
            let sampled = &traj.states[k * cfg.output_grid];
            for i in 0..2 {
                assert!((sampled[i] - x[i]).abs() < 1e-9, "step {k}");
            }
            let u = gain.k.matvec(&x);
            let next: Vec<f64> = (0..2)
                .map(|i| dp.phi.matvec(&x)[i] + g0.matvec(&u)[i] + g1.matvec(&u_prev)[i])
                .collect();
            x = next;
            u_prev = u;
        }
    }

    #[test]
    fn soft_gain_converges_across_delay_sweep() {
        let plant = fixtures::double_integrator();
        let gain = gain_soft();
        for frac in [0.0, 0.25, 0.5, 0.75] {
            let cfg = SimConfig {
                tau: frac * TAU_BAR,
                horizon: 200,
                output_grid: 2,
            };
            let traj = simulate(&plant, &Controller::Plaintext(&gain), &cfg, 0).unwrap();
            assert!(
                traj.final_norm() < 1e-2,
                "tau = {} tau_bar: final norm {}",
                frac,
                traj.final_norm()
            );
        }
    }

    #[test]
    fn aggressive_gain_diverges_at_three_quarters_delay() {
        let plant = fixtures::double_integrator();
        let gain = gain_aggressive();
        let cfg = SimConfig {
            tau: 0.75 * TAU_BAR,
            horizon: 200,
            output_grid: 2,
        };
        let traj = simulate(&plant, &Controller::Plaintext(&gain), &cfg, 0).unwrap();
        assert!(traj.max_norm() > 1e3, "max norm {}", traj.max_norm());
    }

    #[test]
    fn augmented_norm_tail_matches_spectral_radius() {
        // rho(Abar) < 1: the augmented-state norm decreases monotonically
        // over the final 50 steps; rho > 1: the norm blows past 1e3.
        let plant = fixtures::double_integrator();
        let run = |gain: &GainCandidate, tau: f64| {
            let cfg = SimConfig {
                tau,
                horizon: 200,
                output_grid: 1,
            };
            simulate(&plant, &Controller::Plaintext(gain), &cfg, 0).unwrap()
        };
        let xi_norms = |traj: &Trajectory| -> Vec<f64> {
            (1..traj.states.len())
                .map(|k| {
                    let (x, x_prev) = (&traj.states[k], &traj.states[k - 1]);
                    x.iter().chain(x_prev).map(|v| v * v).sum::<f64>().sqrt()
                })
                .collect()
        };
        let stable = run(&gain_soft(), 0.5 * TAU_BAR);
        let rho = crate::discretization::spectral_radius(
            &crate::discretization::augmented_matrix(&plant, 0.5 * TAU_BAR, &gain_soft()).unwrap(),
        )
        .unwrap();
        assert!(rho < 1.0);
        let norms = xi_norms(&stable);
        let tail = &norms[norms.len() - 50..];
        for w in tail.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
        let unstable = run(&gain_aggressive(), 0.75 * TAU_BAR);
        assert!(xi_norms(&unstable).iter().any(|&n| n > 1e3));
    }

    #[test]
    fn events_carry_exact_switch_times() {
        let plant = fixtures::double_integrator();
        let tau = 0.25 * TAU_BAR;
        let cfg = SimConfig {
            tau,
            horizon: 16,
            output_grid: 3,
        };
        let gain = gain_soft();
        let traj = simulate(&plant, &Controller::Plaintext(&gain), &cfg, 0).unwrap();
        assert_eq!(traj.events.len(), 16);
        for (k, e) in traj.events.iter().enumerate() {
            assert_eq!(e.k, k);
            assert_eq!(e.sample_t, k as f64 * plant.ts);
            assert_eq!(e.switch_t, k as f64 * plant.ts + tau);
        }
        // Strictly increasing report times.
        for w in traj.times.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn encrypted_mode_tracks_plaintext_with_fine_quantization() {
        // sigma = 0, r = s = 2^-20: state-for-state agreement to 1e-4 over
        // 100 steps.
        let plant = fixtures::double_integrator();
        let gain = gain_soft();
        let p = small_params(0.0);
        let sk = keygen(&p, 11);
        let quant = QuantizationParams {
            r: 2f64.powi(-20),
            s: 2f64.powi(-20),
        };
        let ctrl = encrypt_gain(&gain, quant, &sk, &p, 12).unwrap();
        let cfg = SimConfig {
            tau: 0.5 * TAU_BAR,
            horizon: 100,
            output_grid: 1,
        };
        let plain = simulate(&plant, &Controller::Plaintext(&gain), &cfg, 0).unwrap();
        let enc = simulate(
            &plant,
            &Controller::Encrypted {
                ctrl: &ctrl,
                sk: &sk,
            },
            &cfg,
            13,
        )
        .unwrap();
        for (k, (xs, xe)) in plain.states.iter().zip(&enc.states).enumerate() {
            let diff: f64 = xs
                .iter()
                .zip(xe)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(diff <= 1e-4, "step {k}: {diff}");
        }
    }

    #[test]
    fn csv_output_is_byte_identical_across_runs() {
        let plant = fixtures::double_integrator();
        let gain = gain_soft();
        let p = small_params(3.2);
        let sk = keygen(&p, 21);
        let quant = QuantizationParams {
            r: 2f64.powi(-10),
            s: 2f64.powi(-10),
        };
        let ctrl = encrypt_gain(&gain, quant, &sk, &p, 22).unwrap();
        let cfg = SimConfig {
            tau: 0.25 * TAU_BAR,
            horizon: 20,
            output_grid: 4,
        };
        let run = || {
            let traj = simulate(
                &plant,
                &Controller::Encrypted {
                    ctrl: &ctrl,
                    sk: &sk,
                },
                &cfg,
                77,
            )
            .unwrap();
            (trajectory_to_csv(&traj), events_to_csv(&traj))
        };
        let (t1, e1) = run();
        let (t2, e2) = run();
        assert_eq!(t1, t2);
        assert_eq!(e1, e2);
        assert!(t1.starts_with("t,x1,x2,u1,norm\n"));
        assert!(e1.starts_with("k,sample_t,switch_t\n"));
    }

    #[test]
    fn rejects_bad_config() {
        let plant = fixtures::double_integrator();
        let gain = gain_soft();
        let bad_tau = SimConfig {
            tau: plant.ts,
            horizon: 10,
            output_grid: 1,
        };
        assert!(simulate(&plant, &Controller::Plaintext(&gain), &bad_tau, 0).is_err());
        let bad_horizon = SimConfig {
            tau: 0.0,
            horizon: 0,
            output_grid: 1,
        };
        assert!(simulate(&plant, &Controller::Plaintext(&gain), &bad_horizon, 0).is_err());
    }
}

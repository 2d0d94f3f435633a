//! The bundled double-integrator benchmark scenario.
//!
//! A complete, reproducible co-design instance: a double-integrator plant
//! sampled at 25 ms, a 250 Mbit/s link with 2 ms propagation delay, three
//! standard 128-bit-security parameter candidates, and two pole-placement
//! gain candidates. The end-to-end delay bounds of the three candidates
//! were measured on a reference deployment; the per-candidate cost
//! constants here are back-solved from those totals so the whole scenario
//! reproduces bit-for-bit without rerunning the measurements. Real
//! deployments should calibrate their own constants instead
//! ([`crate::delay::calibrate_constants`]).

use crate::codesign::{CodesignProblem, GainSpec, SecurityTable, SolverSettings, ThetaCandidate};
use crate::delay::{comm_delay_bound, CostConstants, LinkModel};
use crate::discretization::PlantModel;
use crate::linalg::Mat;
use crate::lwe::CryptoParams;
use num_complex::Complex64;

/// Measured worst-case total delay bounds (seconds) of the three bundled
/// parameter candidates on the reference deployment, in candidate order.
pub const REFERENCE_TAU_TOTALS_S: [f64; 3] = [19.150e-3, 80.810e-3, 304.225e-3];

/// State and input dimensions the bundled totals were measured at.
const REFERENCE_DIMS: (usize, usize) = (2, 1);

/// Double integrator sampled at 25 ms, released from `x = [1, 0]`.
pub fn double_integrator() -> PlantModel {
    PlantModel::new(
        Mat::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
        Mat::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
        0.025,
        vec![1.0, 0.0],
    )
    .unwrap()
}

/// 250 Mbit/s link with 2 ms propagation delay.
pub fn reference_link() -> LinkModel {
    LinkModel {
        rate_bits_per_s: 2.5e8,
        propagation_s: 0.002,
    }
}

/// Back-solves uniform cost constants so that the computed total delay
/// bound reproduces `total_s` exactly for `params` at dimensions `(n, m)`.
pub fn backsolve_constants(
    total_s: f64,
    link: &LinkModel,
    params: &CryptoParams,
    n: usize,
    m: usize,
) -> CostConstants {
    let comm = comm_delay_bound(link, params, n, m).expect("valid link and dims");
    let compute = total_s - comm;
    assert!(
        compute > 0.0,
        "measured total {total_s} is below the communication bound {comm}"
    );
    let nd = params.n_dim() as f64 * params.digits() as f64;
    let log2_n = params.n_dim().trailing_zeros() as f64;
    let units = nd * (n as f64 + m as f64 + m as f64 * n as f64 * log2_n);
    let c = compute / units;
    CostConstants {
        c_enc: c,
        c_dec: c,
        c_mul: c,
    }
}

/// The three bundled parameter candidates with their back-solved cost
/// constants.
pub fn reference_candidates() -> Vec<ThetaCandidate> {
    let link = reference_link();
    let (n, m) = REFERENCE_DIMS;
    let specs = [(12u32, 109u32), (13, 218), (14, 438)];
    specs
        .iter()
        .zip(REFERENCE_TAU_TOTALS_S)
        .enumerate()
        .map(|(i, (&(log2_n, log2_q), total))| {
            let params = CryptoParams::from_bits(log2_n, log2_q, 3.2).expect("valid parameters");
            let consts = backsolve_constants(total, &link, &params, n, m);
            ThetaCandidate {
                label: format!("theta{}", i + 1),
                params,
                consts: Some(consts),
            }
        })
        .collect()
}

/// The two bundled gain candidates, as pole specifications for the
/// delay-free loop: an aggressive one (poles 0.20, 0.25) and a soft one
/// (poles 0.775, 0.800), tried in that order.
pub fn reference_gain_specs() -> Vec<(String, GainSpec)> {
    vec![
        (
            "K1".to_string(),
            GainSpec::Poles(vec![Complex64::new(0.20, 0.0), Complex64::new(0.25, 0.0)]),
        ),
        (
            "K2".to_string(),
            GainSpec::Poles(vec![Complex64::new(0.775, 0.0), Complex64::new(0.800, 0.0)]),
        ),
    ]
}

/// Fallback cost constants for candidates without their own profile:
/// the first bundled candidate's back-solved values.
pub fn reference_constants() -> CostConstants {
    reference_candidates()[0]
        .consts
        .expect("bundled candidate carries constants")
}

/// The full bundled co-design problem.
pub fn reference_problem() -> CodesignProblem {
    CodesignProblem {
        plant: double_integrator(),
        candidates: reference_candidates(),
        gains: reference_gain_specs(),
        lambda_star: 128,
        link: reference_link(),
        consts: reference_constants(),
        table: SecurityTable::standard(),
        solver: SolverSettings::default(),
    }
}

/// A known-feasible Lyapunov certificate for the bundled scenario (soft
/// gain, tau_bar = 19.150 ms), quoted to three decimals.
pub fn reference_lyapunov() -> Mat {
    Mat::from_rows(&[
        vec![0.740, 0.073, -0.101, -0.019],
        vec![0.073, 0.052, -0.004, -0.032],
        vec![-0.101, -0.004, 0.176, 0.013],
        vec![-0.019, -0.032, 0.013, 0.032],
    ])
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::total_delay_bound;

    #[test]
    fn backsolved_constants_reproduce_totals() {
        let link = reference_link();
        for (candidate, total) in reference_candidates().iter().zip(REFERENCE_TAU_TOTALS_S) {
            let budget =
                total_delay_bound(&link, &candidate.consts.unwrap(), &candidate.params, 2, 1)
                    .unwrap();
            assert!(
                (budget.total - total).abs() < 1e-12,
                "{}: {} vs {}",
                candidate.label,
                budget.total,
                total
            );
        }
    }

    #[test]
    fn candidate_parameters_have_expected_digits() {
        let candidates = reference_candidates();
        assert_eq!(candidates[0].params.digits(), 109);
        assert_eq!(candidates[1].params.digits(), 218);
        assert_eq!(candidates[2].params.digits(), 438);
        assert_eq!(candidates[0].params.n_dim(), 1 << 12);
    }
}

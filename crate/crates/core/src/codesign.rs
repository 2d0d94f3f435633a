//! Outer-inner co-design of cryptographic parameters and feedback gain.
//!
//! The outer loop walks an ordered list of parameter candidates, filtering
//! on the security level (table lookup) and on the delay bound staying
//! inside one sampling period. For each survivor, the inner loop walks the
//! ordered gain candidates and accepts the first one whose delay polytope
//! admits a common Lyapunov certificate. First hit wins; every decision is
//! logged to an audit trail.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::delay::{total_delay_bound, CostConstants, DelayError, LinkModel};
use crate::discretization::{
    discretize, DiscretizationError, DiscretizedPlant, GainCandidate, PlantModel,
};
use crate::linalg::{self, LinalgError, Mat};
use crate::lmi::{solve_common_lyapunov, verify_lmi, LmiError, LmiStatus, LyapunovCandidate};
use crate::lwe::CryptoParams;
use crate::polytope::{alpha_extrema, build_vertices, decompose_gamma1, PolytopeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodesignError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("pole placement failed: {0}")]
    PolePlacement(String),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Lmi(#[from] LmiError),
}

/// One row of the security table: parameter sets `(N, sigma)` with modulus
/// up to `max_log2_q` bits reach `lambda_bits` of security.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityRow {
    pub log2_n: u32,
    pub max_log2_q: u32,
    pub sigma: f64,
    pub lambda_bits: u32,
}

/// Table of standard parameter/security pairs; replaces an attack-cost
/// estimator with vetted published levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityTable {
    pub rows: Vec<SecurityRow>,
}

impl SecurityTable {
    /// The bundled standard rows: ternary-secret parameter sets at 128-bit
    /// classical security.
    pub fn standard() -> Self {
        SecurityTable {
            rows: vec![
                SecurityRow {
                    log2_n: 12,
                    max_log2_q: 109,
                    sigma: 3.2,
                    lambda_bits: 128,
                },
                SecurityRow {
                    log2_n: 13,
                    max_log2_q: 218,
                    sigma: 3.2,
                    lambda_bits: 128,
                },
                SecurityRow {
                    log2_n: 14,
                    max_log2_q: 438,
                    sigma: 3.2,
                    lambda_bits: 128,
                },
            ],
        }
    }
}

/// Security level of a parameter set: exact match on `(N, sigma)` with the
/// modulus within the row's bit budget; `None` when the table is silent.
pub fn security_level(params: &CryptoParams, table: &SecurityTable) -> Option<u32> {
    let log2_n = params.n_dim().trailing_zeros();
    table
        .rows
        .iter()
        .find(|row| {
            row.log2_n == log2_n && row.sigma == params.sigma() && params.digits() <= row.max_log2_q
        })
        .map(|row| row.lambda_bits)
}

/// Single-input pole placement via Ackermann's formula: returns `K` such
/// that `Phi + Gamma K` has the desired spectrum.
pub fn place_poles(
    dp: &DiscretizedPlant,
    desired: &[Complex64],
) -> Result<GainCandidate, CodesignError> {
    let n = dp.phi.rows();
    let m = dp.gamma.cols();
    if m != 1 {
        return Err(CodesignError::PolePlacement(format!(
            "only single-input plants are supported, got m = {m}"
        )));
    }
    if desired.len() != n {
        return Err(CodesignError::PolePlacement(format!(
            "need {n} poles, got {}",
            desired.len()
        )));
    }
    // The desired multiset must be closed under conjugation so the
    // characteristic polynomial is real.
    let mut remaining: Vec<Complex64> = desired.to_vec();
    while let Some(pole) = remaining.pop() {
        if pole.im.abs() > 1e-12 {
            let conj = pole.conj();
            let found = remaining
                .iter()
                .position(|p| (p - conj).norm() <= 1e-9 * (1.0 + pole.norm()));
            match found {
                Some(idx) => {
                    remaining.swap_remove(idx);
                }
                None => {
                    return Err(CodesignError::PolePlacement(format!(
                        "pole {pole} has no conjugate partner"
                    )))
                }
            }
        }
    }
    // Desired characteristic polynomial, lowest degree first.
    let mut coeffs: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
    for pole in desired {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] += *c;
            next[i] -= *c * *pole;
        }
        coeffs = next;
    }
    let real_coeffs: Vec<f64> = coeffs
        .iter()
        .map(|c| {
            debug_assert!(c.im.abs() <= 1e-9 * (1.0 + c.re.abs()));
            c.re
        })
        .collect();

    // Controllability matrix [Gamma, Phi Gamma, ..., Phi^(n-1) Gamma].
    let mut ctrb = Mat::zeros(n, n);
    let mut col = dp.gamma.clone();
    for j in 0..n {
        for i in 0..n {
            ctrb[(i, j)] = col[(i, 0)];
        }
        col = dp.phi.matmul(&col);
    }
    // phi_d(Phi) by Horner.
    let mut phi_d = Mat::identity(n).scale(real_coeffs[n]);
    for k in (0..n).rev() {
        phi_d = phi_d
            .matmul(&dp.phi)
            .add(&Mat::identity(n).scale(real_coeffs[k]));
    }
    // K = -e_n^T Ctrb^-1 phi_d(Phi); reachability failure shows up as a
    // singular controllability matrix.
    let last_unit = Mat::from_fn(n, 1, |i, _| if i == n - 1 { 1.0 } else { 0.0 });
    let w = match linalg::lu_solve(&ctrb.transpose(), &last_unit) {
        Ok(w) => w,
        Err(LinalgError::Singular { .. }) => {
            return Err(CodesignError::PolePlacement(
                "pair (Phi, Gamma) is not reachable".into(),
            ))
        }
        Err(e) => return Err(e.into()),
    };
    let row = Mat::from_fn(1, n, |_, j| w[(j, 0)]);
    let k = row.matmul(&phi_d).scale(-1.0);
    Ok(GainCandidate::new(k))
}

/// Gain candidate specification: an explicit matrix or a pole multiset to
/// resolve against the delay-free discretization.
#[derive(Debug, Clone, PartialEq)]
pub enum GainSpec {
    Explicit(Mat),
    Poles(Vec<Complex64>),
}

/// One cryptographic parameter candidate, optionally carrying its own
/// calibrated cost constants (hardware profiles can differ per parameter
/// set).
#[derive(Debug, Clone)]
pub struct ThetaCandidate {
    pub label: String,
    pub params: CryptoParams,
    pub consts: Option<CostConstants>,
}

/// Solver knobs for the inner LMI search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub budget: usize,
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            budget: crate::lmi::DEFAULT_BUDGET,
            seed: 0,
        }
    }
}

/// The full co-design problem instance.
#[derive(Debug, Clone)]
pub struct CodesignProblem {
    pub plant: PlantModel,
    pub candidates: Vec<ThetaCandidate>,
    pub gains: Vec<(String, GainSpec)>,
    pub lambda_star: u32,
    pub link: LinkModel,
    pub consts: CostConstants,
    pub table: SecurityTable,
    pub solver: SolverSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReasonCode {
    #[serde(rename = "R1_FAIL")]
    R1Fail,
    #[serde(rename = "R2_FAIL")]
    R2Fail,
    #[serde(rename = "LMI_NOT_FOUND")]
    LmiNotFound,
    #[serde(rename = "FOUND")]
    Found,
    #[serde(rename = "ERROR")]
    Error,
}

/// One audit record per decision: parameter-level gates carry no gain
/// label, inner-loop decisions carry one record per gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub theta: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<String>,
    pub code: ReasonCode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_bits: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_bar_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodesignStatus {
    Found,
    NoFeasiblePair,
}

/// Result of the search, with the full audit trail.
#[derive(Debug, Clone)]
pub struct CodesignResult {
    pub status: CodesignStatus,
    pub theta: Option<ThetaCandidate>,
    pub gain_label: Option<String>,
    pub gain: Option<GainCandidate>,
    pub lyapunov: Option<LyapunovCandidate>,
    pub tau_bar_s: Option<f64>,
    pub audit: Vec<AuditRecord>,
}

/// Serializes the audit trail as JSON lines, one record per decision.
pub fn audit_to_jsonl(audit: &[AuditRecord]) -> String {
    audit
        .iter()
        .map(|r| serde_json::to_string(r).expect("audit record serializes"))
        .map(|line| line + "\n")
        .collect()
}

/// Resolves gain specifications against the delay-free discretization.
pub fn resolve_gains(
    dp: &DiscretizedPlant,
    gains: &[(String, GainSpec)],
) -> Result<Vec<(String, GainCandidate)>, CodesignError> {
    gains
        .iter()
        .map(|(label, spec)| {
            let gain = match spec {
                GainSpec::Explicit(k) => GainCandidate::new(k.clone()),
                GainSpec::Poles(poles) => place_poles(dp, poles)?,
            };
            Ok((label.clone(), gain))
        })
        .collect()
}

/// Runs the outer-inner search. Candidate-level failures (decomposition or
/// solver errors) are recorded in the audit and skipped; the run continues.
pub fn run_codesign(problem: &CodesignProblem) -> Result<CodesignResult, CodesignError> {
    problem.plant.validate()?;
    if problem.candidates.is_empty() || problem.gains.is_empty() {
        return Err(CodesignError::InvalidProblem(
            "candidate and gain lists must be nonempty".into(),
        ));
    }
    if problem.lambda_star == 0 {
        return Err(CodesignError::InvalidProblem(
            "lambda_star must be > 0".into(),
        ));
    }
    let n = problem.plant.state_dim();
    let m = problem.plant.input_dim();
    let dp = discretize(&problem.plant)?;
    let gains = resolve_gains(&dp, &problem.gains)?;

    let mut audit: Vec<AuditRecord> = Vec::new();
    for candidate in &problem.candidates {
        // (R1) security gate.
        let lambda = security_level(&candidate.params, &problem.table);
        if lambda.is_none_or(|l| l < problem.lambda_star) {
            audit.push(AuditRecord {
                theta: candidate.label.clone(),
                gain: None,
                code: ReasonCode::R1Fail,
                lambda_bits: lambda,
                tau_bar_s: None,
                detail: None,
            });
            continue;
        }
        // (R2) delay gate.
        let consts = candidate.consts.as_ref().unwrap_or(&problem.consts);
        let budget = match total_delay_bound(&problem.link, consts, &candidate.params, n, m) {
            Ok(b) => b,
            Err(e) => {
                audit.push(error_record(candidate, None, &e.to_string()));
                continue;
            }
        };
        let tau_bar = budget.total;
        if tau_bar >= problem.plant.ts {
            audit.push(AuditRecord {
                theta: candidate.label.clone(),
                gain: None,
                code: ReasonCode::R2Fail,
                lambda_bits: lambda,
                tau_bar_s: Some(tau_bar),
                detail: None,
            });
            continue;
        }
        // (R3) inner loop over gains.
        let polytope_pieces = decompose_gamma1(&problem.plant, tau_bar).map(|basis| {
            let bounds = alpha_extrema(&basis, tau_bar);
            (basis, bounds)
        });
        let (basis, bounds) = match polytope_pieces {
            Ok(p) => p,
            Err(e) => {
                audit.push(error_record(candidate, None, &e.to_string()));
                continue;
            }
        };
        for (gain_label, gain) in &gains {
            let vset = match build_vertices(&dp, &basis, &bounds, gain) {
                Ok(v) => v,
                Err(e) => {
                    audit.push(error_record(candidate, Some(gain_label), &e.to_string()));
                    continue;
                }
            };
            let report =
                match solve_common_lyapunov(&vset, problem.solver.budget, problem.solver.seed) {
                    Ok(r) => r,
                    Err(e) => {
                        audit.push(error_record(candidate, Some(gain_label), &e.to_string()));
                        continue;
                    }
                };
            if report.status == LmiStatus::Feasible {
                let lyapunov = report.p.expect("feasible report carries P");
                // Post-hoc audit of the returned triple: all three
                // requirements must re-check independently.
                debug_assert!(lambda.unwrap() >= problem.lambda_star);
                debug_assert!(tau_bar < problem.plant.ts);
                let recheck = verify_lmi(
                    &lyapunov,
                    &vset,
                    crate::lmi::DEFAULT_EPS_P,
                    crate::lmi::DEFAULT_EPS_M,
                )?;
                if recheck.status != LmiStatus::Feasible {
                    audit.push(error_record(
                        candidate,
                        Some(gain_label),
                        "solver-returned certificate failed re-verification",
                    ));
                    continue;
                }
                audit.push(AuditRecord {
                    theta: candidate.label.clone(),
                    gain: Some(gain_label.clone()),
                    code: ReasonCode::Found,
                    lambda_bits: lambda,
                    tau_bar_s: Some(tau_bar),
                    detail: None,
                });
                return Ok(CodesignResult {
                    status: CodesignStatus::Found,
                    theta: Some(candidate.clone()),
                    gain_label: Some(gain_label.clone()),
                    gain: Some(gain.clone()),
                    lyapunov: Some(lyapunov),
                    tau_bar_s: Some(tau_bar),
                    audit,
                });
            }
            audit.push(AuditRecord {
                theta: candidate.label.clone(),
                gain: Some(gain_label.clone()),
                code: ReasonCode::LmiNotFound,
                lambda_bits: lambda,
                tau_bar_s: Some(tau_bar),
                detail: None,
            });
        }
    }
    Ok(CodesignResult {
        status: CodesignStatus::NoFeasiblePair,
        theta: None,
        gain_label: None,
        gain: None,
        lyapunov: None,
        tau_bar_s: None,
        audit,
    })
}

fn error_record(candidate: &ThetaCandidate, gain: Option<&str>, detail: &str) -> AuditRecord {
    AuditRecord {
        theta: candidate.label.clone(),
        gain: gain.map(str::to_string),
        code: ReasonCode::Error,
        lambda_bits: None,
        tau_bar_s: None,
        detail: Some(detail.to_string()),
    }
}

impl From<PolytopeError> for CodesignError {
    fn from(e: PolytopeError) -> Self {
        CodesignError::InvalidProblem(e.to_string())
    }
}

impl From<DelayError> for CodesignError {
    fn from(e: DelayError) -> Self {
        CodesignError::InvalidProblem(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn real_poles(poles: &[f64]) -> Vec<Complex64> {
        poles.iter().map(|&p| Complex64::new(p, 0.0)).collect()
    }

    #[test]
    fn security_lookup_standard_rows() {
        let table = SecurityTable::standard();
        let theta1 = CryptoParams::from_bits(12, 109, 3.2).unwrap();
        let theta2 = CryptoParams::from_bits(13, 218, 3.2).unwrap();
        assert_eq!(security_level(&theta1, &table), Some(128));
        assert_eq!(security_level(&theta2, &table), Some(128));
        // Modulus beyond the row's budget is unknown.
        let too_wide = CryptoParams::from_bits(12, 120, 3.2).unwrap();
        assert_eq!(security_level(&too_wide, &table), None);
        // Mismatched sigma is unknown.
        let off_sigma = CryptoParams::from_bits(12, 109, 1.0).unwrap();
        assert_eq!(security_level(&off_sigma, &table), None);
    }

    #[test]
    fn pole_placement_reproduces_reference_gains() {
        let dp = discretize(&fixtures::double_integrator()).unwrap();
        let k1 = place_poles(&dp, &real_poles(&[0.20, 0.25])).unwrap();
        assert!((k1.k[(0, 0)] + 960.0).abs() < 960.0 * 1e-6, "{:?}", k1.k);
        assert!((k1.k[(0, 1)] + 50.0).abs() < 50.0 * 1e-6);
        let k2 = place_poles(&dp, &real_poles(&[0.775, 0.800])).unwrap();
        assert!((k2.k[(0, 0)] + 72.0).abs() < 72.0 * 1e-6);
        assert!((k2.k[(0, 1)] + 16.1).abs() < 16.1 * 1e-6);
        // Cross-check through the closed-loop spectrum.
        for (gain, poles) in [(&k1, [0.20, 0.25]), (&k2, [0.775, 0.800])] {
            let cl = dp.phi.add(&dp.gamma.matmul(&gain.k));
            let mut eigs: Vec<f64> = linalg::eigenvalues(&cl)
                .unwrap()
                .iter()
                .map(|e| e.re)
                .collect();
            eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!((eigs[0] - poles[0]).abs() < 1e-8);
            assert!((eigs[1] - poles[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn open_loop_poles_need_no_feedback() {
        let dp = discretize(&fixtures::double_integrator()).unwrap();
        let open_loop = linalg::eigenvalues(&dp.phi).unwrap();
        let k = place_poles(&dp, &open_loop).unwrap();
        assert!(k.k.norm_max() < 1e-8, "{:?}", k.k);
    }

    #[test]
    fn complex_poles_must_pair() {
        let dp = discretize(&fixtures::double_integrator()).unwrap();
        let paired = vec![Complex64::new(0.5, 0.2), Complex64::new(0.5, -0.2)];
        let k = place_poles(&dp, &paired).unwrap();
        let cl = dp.phi.add(&dp.gamma.matmul(&k.k));
        let eigs = linalg::eigenvalues(&cl).unwrap();
        assert!(eigs.iter().any(|e| (e.im - 0.2).abs() < 1e-8));
        let unpaired = vec![Complex64::new(0.5, 0.2), Complex64::new(0.5, 0.2)];
        assert!(place_poles(&dp, &unpaired).is_err());
    }

    #[test]
    fn unreachable_pair_rejected() {
        let dp = DiscretizedPlant {
            phi: Mat::identity(2),
            gamma: Mat::zeros(2, 1),
        };
        assert!(matches!(
            place_poles(&dp, &real_poles(&[0.1, 0.2])),
            Err(CodesignError::PolePlacement(_))
        ));
    }

    #[test]
    fn multi_input_unsupported() {
        let dp = DiscretizedPlant {
            phi: Mat::identity(2),
            gamma: Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(),
        };
        assert!(place_poles(&dp, &real_poles(&[0.1, 0.2])).is_err());
    }

    #[test]
    fn reference_scenario_selects_first_workable_pair() {
        let problem = fixtures::reference_problem();
        let result = run_codesign(&problem).unwrap();
        assert_eq!(result.status, CodesignStatus::Found);
        assert_eq!(result.theta.as_ref().unwrap().label, "theta1");
        assert_eq!(result.gain_label.as_deref(), Some("K2"));
        assert!(result.lyapunov.is_some());
        assert!((result.tau_bar_s.unwrap() - 19.150e-3).abs() < 1e-6);
        // The aggressive gain was tried first and rejected.
        let k1_record = result
            .audit
            .iter()
            .find(|r| r.gain.as_deref() == Some("K1"))
            .unwrap();
        assert_eq!(k1_record.code, ReasonCode::LmiNotFound);

        // Post-hoc audit: the returned triple passes all three
        // requirements through independent re-checks.
        let theta = result.theta.as_ref().unwrap();
        assert!(security_level(&theta.params, &problem.table).unwrap() >= problem.lambda_star);
        let budget = total_delay_bound(
            &problem.link,
            &theta.consts.unwrap(),
            &theta.params,
            problem.plant.state_dim(),
            problem.plant.input_dim(),
        )
        .unwrap();
        assert!(budget.total < problem.plant.ts);
        assert_eq!(budget.total, result.tau_bar_s.unwrap());
        let vset = crate::polytope::vertex_set_for(
            &problem.plant,
            budget.total,
            result.gain.as_ref().unwrap(),
        )
        .unwrap();
        let recheck = verify_lmi(
            result.lyapunov.as_ref().unwrap(),
            &vset,
            crate::lmi::DEFAULT_EPS_P,
            crate::lmi::DEFAULT_EPS_M,
        )
        .unwrap();
        assert_eq!(recheck.status, LmiStatus::Feasible);
    }

    #[test]
    fn delay_gate_rejects_slow_candidates() {
        let mut problem = fixtures::reference_problem();
        problem.candidates.remove(0); // drop theta1, leaving theta2/theta3
        let result = run_codesign(&problem).unwrap();
        assert_eq!(result.status, CodesignStatus::NoFeasiblePair);
        assert_eq!(result.audit.len(), 2);
        assert!(result.audit.iter().all(|r| r.code == ReasonCode::R2Fail));
    }

    #[test]
    fn stable_open_loop_accepts_zero_gain() {
        // A Schur-stable plant with K = 0 is certified immediately.
        let plant = PlantModel::new(
            Mat::from_rows(&[vec![-1.0, 0.0], vec![0.0, -2.0]]).unwrap(),
            Mat::from_rows(&[vec![1.0], vec![1.0]]).unwrap(),
            0.025,
            vec![1.0, 0.0],
        )
        .unwrap();
        let mut problem = fixtures::reference_problem();
        problem.plant = plant;
        problem.candidates.truncate(1);
        problem.gains = vec![("K0".into(), GainSpec::Explicit(Mat::zeros(1, 2)))];
        let result = run_codesign(&problem).unwrap();
        assert_eq!(result.status, CodesignStatus::Found);
        assert_eq!(result.gain_label.as_deref(), Some("K0"));
    }

    #[test]
    fn degenerate_problems_rejected() {
        let mut empty_gains = fixtures::reference_problem();
        empty_gains.gains.clear();
        assert!(matches!(
            run_codesign(&empty_gains),
            Err(CodesignError::InvalidProblem(_))
        ));
        let mut empty_thetas = fixtures::reference_problem();
        empty_thetas.candidates.clear();
        assert!(run_codesign(&empty_thetas).is_err());
        let mut no_target = fixtures::reference_problem();
        no_target.lambda_star = 0;
        assert!(run_codesign(&no_target).is_err());
    }

    #[test]
    fn audits_are_deterministic() {
        let problem = fixtures::reference_problem();
        let a = run_codesign(&problem).unwrap();
        let b = run_codesign(&problem).unwrap();
        assert_eq!(audit_to_jsonl(&a.audit), audit_to_jsonl(&b.audit));
        assert_eq!(a.status, b.status);
        assert_eq!(
            a.lyapunov.as_ref().unwrap().p,
            b.lyapunov.as_ref().unwrap().p
        );
    }

    #[test]
    fn removing_candidates_never_creates_feasibility() {
        let problem = fixtures::reference_problem();
        let full = run_codesign(&problem).unwrap();
        assert_eq!(full.status, CodesignStatus::Found);
        let mut reduced = problem.clone();
        reduced.candidates.remove(0);
        let result = run_codesign(&reduced).unwrap();
        assert_eq!(result.status, CodesignStatus::NoFeasiblePair);
    }

    #[test]
    fn audit_jsonl_round_trips() {
        let problem = fixtures::reference_problem();
        let result = run_codesign(&problem).unwrap();
        let jsonl = audit_to_jsonl(&result.audit);
        for line in jsonl.lines() {
            let record: AuditRecord = serde_json::from_str(line).unwrap();
            assert!(!record.theta.is_empty());
        }
        // First hit wins: the aggressive gain is rejected, the soft gain
        // accepted, and the slower candidates are never visited.
        assert!(jsonl.contains("\"code\":\"LMI_NOT_FOUND\""));
        assert!(jsonl.contains("\"code\":\"FOUND\""));
        assert!(!jsonl.contains("theta2"));
    }
}

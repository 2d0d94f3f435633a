//! Common quadratic Lyapunov certificates over vertex sets.
//!
//! Feasibility of `M^T P M - P < 0` simultaneously at every vertex, for a
//! single symmetric `P > 0`, certifies Schur stability of the whole
//! polytope. [`verify_lmi`] checks a given `P`; [`solve_common_lyapunov`]
//! searches for one by projected subgradient descent on the worst-vertex
//! margin, over the trace-normalized spectrahedron
//! `{P = P^T, lambda_min(P) >= eps_p, trace(P) = dim}`.
//!
//! `not_found` is not an infeasibility certificate: the search is a
//! feasibility heuristic with a budget, mirroring how such problems are
//! screened in practice.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{discrete_lyapunov, spectral_radius, sym_eig_max, symmetric_eigen, Mat};
use crate::polytope::VertexSet;
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmiError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Default strictness margins for `lambda_min(P)` and the vertex LMIs.
pub const DEFAULT_EPS_P: f64 = 1e-6;
pub const DEFAULT_EPS_M: f64 = 1e-6;
/// Default iteration budget of the feasibility search.
pub const DEFAULT_BUDGET: usize = 200_000;

/// Candidate Lyapunov matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCandidate {
    pub p: Mat,
}

impl LyapunovCandidate {
    pub fn new(p: Mat) -> Self {
        LyapunovCandidate { p }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LmiStatus {
    Feasible,
    NotFound,
    Invalid,
}

/// Outcome of a verification or search: per-vertex margins are the largest
/// eigenvalues of `M^T P M - P` (feasible means all strictly negative).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmiReport {
    pub status: LmiStatus,
    pub p: Option<LyapunovCandidate>,
    pub margins: Vec<f64>,
    pub p_min_eig: f64,
    pub iterations: usize,
}

const SYMMETRY_RTOL: f64 = 1e-12;

fn vertex_margins(p: &Mat, vset: &VertexSet) -> Vec<f64> {
    vset.vertices
        .iter()
        .map(|v| {
            let mpm = v.matrix.transpose().matmul(&p.matmul(&v.matrix));
            let s = mpm.sub(p).symmetrize();
            sym_eig_max(&s).expect("symmetric eigensolve").0
        })
        .collect()
}

/// Checks a candidate against every vertex LMI.
///
/// Feasible iff `lambda_min(P) >= eps_p` and every vertex margin is at most
/// `-eps_m`. A `P` that is not symmetric to relative precision 1e-12 yields
/// `Invalid`.
pub fn verify_lmi(
    candidate: &LyapunovCandidate,
    vset: &VertexSet,
    eps_p: f64,
    eps_m: f64,
) -> Result<LmiReport, LmiError> {
    if !(eps_p > 0.0 && eps_m > 0.0) {
        return Err(LmiError::InvalidArgument(
            "strictness margins must be positive".into(),
        ));
    }
    if vset.vertices.is_empty() {
        return Err(LmiError::InvalidArgument("empty vertex set".into()));
    }
    let p = &candidate.p;
    if !p.is_square() || p.rows() != vset.dim() {
        return Err(LmiError::InvalidArgument(format!(
            "P must be {0}x{0}",
            vset.dim()
        )));
    }
    if p.sym_deviation() > SYMMETRY_RTOL * p.norm_max().max(f64::MIN_POSITIVE) {
        return Ok(LmiReport {
            status: LmiStatus::Invalid,
            p: None,
            margins: Vec::new(),
            p_min_eig: f64::NAN,
            iterations: 0,
        });
    }
    let p_min_eig = symmetric_eigen(p).expect("symmetric eigensolve").0[0];
    let margins = vertex_margins(p, vset);
    let feasible = p_min_eig >= eps_p && margins.iter().all(|&m| m <= -eps_m);
    Ok(LmiReport {
        status: if feasible {
            LmiStatus::Feasible
        } else {
            LmiStatus::NotFound
        },
        p: Some(candidate.clone()),
        margins,
        p_min_eig,
        iterations: 0,
    })
}

/// Euclidean projection onto `{lambda_min >= floor, trace = target}` via
/// eigenvalue water-filling.
fn project_spectrahedron(p: &Mat, floor: f64, target: f64) -> Mat {
    let (vals, vecs) = symmetric_eigen(&p.symmetrize()).expect("symmetric eigensolve");
    let n = vals.len();
    let shifted_sum =
        |theta: f64| -> f64 { vals.iter().map(|&l| (l - theta).max(floor)).sum::<f64>() };
    let mut lo = vals.iter().cloned().fold(f64::INFINITY, f64::min) - target;
    let mut hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // g(theta) is nonincreasing; bracket then bisect.
    while shifted_sum(lo) < target {
        lo -= target.max(1.0);
    }
    while shifted_sum(hi) > target {
        hi += target.max(1.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if shifted_sum(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        let li = (vals[i] - theta).max(floor);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += li * vecs[(r, i)] * vecs[(c, i)];
            }
        }
    }
    out.symmetrize()
}

/// Searches for a common Lyapunov matrix by projected subgradient descent
/// on `f(P) = max_eta lambda_max(M_eta^T P M_eta - P)`.
///
/// Deterministic for a fixed seed (the seed only drives restart
/// perturbations). Returns `Feasible` with a `P` that passes
/// [`verify_lmi`], or `NotFound` once the budget is exhausted.
pub fn solve_common_lyapunov(
    vset: &VertexSet,
    budget: usize,
    seed: u64,
) -> Result<LmiReport, LmiError> {
    if budget == 0 {
        return Err(LmiError::InvalidArgument("budget must be positive".into()));
    }
    if vset.vertices.is_empty() {
        return Err(LmiError::InvalidArgument("empty vertex set".into()));
    }
    let dim = vset.dim();
    let trace_target = dim as f64;
    let eps_p = DEFAULT_EPS_P;
    let eps_m = DEFAULT_EPS_M;

    // Warm start: Lyapunov solution of the vertex average when it is Schur,
    // identity otherwise.
    let avg = {
        let mut acc = Mat::zeros(dim, dim);
        for v in &vset.vertices {
            acc = acc.add(&v.matrix);
        }
        acc.scale(1.0 / vset.vertices.len() as f64)
    };
    let mut p = match spectral_radius(&avg) {
        Ok(rho) if rho < 0.999 => {
            discrete_lyapunov(&avg, &Mat::identity(dim)).unwrap_or_else(|_| Mat::identity(dim))
        }
        _ => Mat::identity(dim),
    };
    p = project_spectrahedron(&p, eps_p, trace_target);

    let mut noise = rng::stream(seed, 0);
    let mut best_f = f64::INFINITY;
    let mut best_p = p.clone();
    let mut since_improvement = 0usize;

    for k in 1..=budget {
        // Worst vertex and its eigenpair.
        let mut worst = f64::NEG_INFINITY;
        let mut worst_vec: Vec<f64> = Vec::new();
        let mut worst_m: Option<&Mat> = None;
        for v in &vset.vertices {
            let s = v
                .matrix
                .transpose()
                .matmul(&p.matmul(&v.matrix))
                .sub(&p)
                .symmetrize();
            let (lam, vec) = sym_eig_max(&s).expect("symmetric eigensolve");
            if lam > worst {
                worst = lam;
                worst_vec = vec;
                worst_m = Some(&v.matrix);
            }
        }
        if worst < best_f {
            best_f = worst;
            best_p = p.clone();
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        if worst <= -eps_m {
            let candidate = LyapunovCandidate::new(p.clone());
            let mut report = verify_lmi(&candidate, vset, eps_p, eps_m)?;
            if report.status == LmiStatus::Feasible {
                report.iterations = k;
                return Ok(report);
            }
        }
        // Subgradient of the worst-vertex margin: (Mv)(Mv)^T - vv^T.
        let m = worst_m.expect("nonempty vertex set");
        let mv = m.matvec(&worst_vec);
        let grad = Mat::from_fn(dim, dim, |i, j| mv[i] * mv[j] - worst_vec[i] * worst_vec[j]);
        let gnorm = grad.norm_fro().max(1e-12);
        let step = trace_target * 0.5 / (gnorm * (k as f64).sqrt());
        p = project_spectrahedron(&p.sub(&grad.scale(step)), eps_p, trace_target);

        // Perturbed restart from the incumbent if progress stalls.
        if since_improvement >= 5_000 {
            since_improvement = 0;
            let scale = 0.05 * trace_target / dim as f64;
            let perturbation = Mat::from_fn(dim, dim, |_, _| {
                scale * (2.0 * rng::uniform_f64(&mut noise) - 1.0)
            })
            .symmetrize();
            p = project_spectrahedron(&best_p.add(&perturbation), eps_p, trace_target);
        }
    }

    let margins = vertex_margins(&best_p, vset);
    let p_min_eig = symmetric_eigen(&best_p).expect("symmetric eigensolve").0[0];
    Ok(LmiReport {
        status: LmiStatus::NotFound,
        p: None,
        margins,
        p_min_eig,
        iterations: budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{augmented_matrix, GainCandidate, PlantModel};
    use crate::polytope::{vertex_set_for, AlphaBounds, Vertex, VertexSet};

    fn double_integrator() -> PlantModel {
        PlantModel::new(
            Mat::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap(),
            Mat::from_rows(&[vec![0.0], vec![1.0]]).unwrap(),
            0.025,
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    const TAU_BAR: f64 = 0.019150;

    fn gain_soft() -> GainCandidate {
        GainCandidate::new(Mat::from_rows(&[vec![-72.0, -16.1]]).unwrap())
    }

    fn gain_aggressive() -> GainCandidate {
        GainCandidate::new(Mat::from_rows(&[vec![-960.0, -50.0]]).unwrap())
    }

    /// The known-feasible certificate for the bundled double-integrator
    /// scenario (soft gain, tau_bar = 19.150 ms).
    pub(crate) fn reference_p() -> Mat {
        Mat::from_rows(&[
            vec![0.740, 0.073, -0.101, -0.019],
            vec![0.073, 0.052, -0.004, -0.032],
            vec![-0.101, -0.004, 0.176, 0.013],
            vec![-0.019, -0.032, 0.013, 0.032],
        ])
        .unwrap()
    }

    fn singleton_vset(m: Mat) -> VertexSet {
        VertexSet {
            m0: m.clone(),
            mi: Vec::new(),
            bounds: AlphaBounds {
                lo: Vec::new(),
                hi: Vec::new(),
            },
            vertices: vec![Vertex {
                pattern: String::new(),
                matrix: m,
            }],
        }
    }

    #[test]
    fn reference_certificate_verifies() {
        let vset = vertex_set_for(&double_integrator(), TAU_BAR, &gain_soft()).unwrap();
        let report = verify_lmi(&LyapunovCandidate::new(reference_p()), &vset, 1e-9, 1e-9).unwrap();
        assert_eq!(
            report.status,
            LmiStatus::Feasible,
            "margins {:?}",
            report.margins
        );
        assert!(report.margins.iter().all(|&m| m < 0.0));
        assert!(report.p_min_eig > 0.0);
    }

    #[test]
    fn identity_fails_against_unstable_vertex() {
        // The aggressive gain at tau_bar has an expanding vertex, so no P
        // can work; the identity certainly does not.
        let vset = vertex_set_for(&double_integrator(), TAU_BAR, &gain_aggressive()).unwrap();
        let has_unstable_vertex = vset
            .vertices
            .iter()
            .any(|v| spectral_radius(&v.matrix).unwrap() > 1.0);
        assert!(has_unstable_vertex);
        let report =
            verify_lmi(&LyapunovCandidate::new(Mat::identity(4)), &vset, 1e-9, 1e-9).unwrap();
        assert_eq!(report.status, LmiStatus::NotFound);
    }

    #[test]
    fn zero_vertex_is_trivially_feasible() {
        let vset = singleton_vset(Mat::zeros(2, 2));
        let report =
            verify_lmi(&LyapunovCandidate::new(Mat::identity(2)), &vset, 1e-9, 1e-9).unwrap();
        assert_eq!(report.status, LmiStatus::Feasible);
    }

    #[test]
    fn non_symmetric_candidate_is_invalid() {
        let vset = singleton_vset(Mat::zeros(2, 2));
        let p = Mat::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        let report = verify_lmi(&LyapunovCandidate::new(p), &vset, 1e-9, 1e-9).unwrap();
        assert_eq!(report.status, LmiStatus::Invalid);
    }

    #[test]
    fn scale_invariance_of_verification() {
        let vset = vertex_set_for(&double_integrator(), TAU_BAR, &gain_soft()).unwrap();
        let c = 37.5;
        let base = verify_lmi(&LyapunovCandidate::new(reference_p()), &vset, 1e-9, 1e-9).unwrap();
        let scaled = verify_lmi(
            &LyapunovCandidate::new(reference_p().scale(c)),
            &vset,
            1e-9 * c,
            1e-9 * c,
        )
        .unwrap();
        assert_eq!(base.status, scaled.status);
        for (a, b) in base.margins.iter().zip(&scaled.margins) {
            assert!((a * c - b).abs() < 1e-9 * c);
        }
    }

    #[test]
    fn solver_finds_certificate_for_soft_gain() {
        let vset = vertex_set_for(&double_integrator(), TAU_BAR, &gain_soft()).unwrap();
        let report = solve_common_lyapunov(&vset, DEFAULT_BUDGET, 0).unwrap();
        assert_eq!(
            report.status,
            LmiStatus::Feasible,
            "margins {:?}",
            report.margins
        );
        let p = report.p.clone().unwrap();
        // Self-consistency: the returned P passes verification with the
        // same margins.
        let check = verify_lmi(&p, &vset, DEFAULT_EPS_P, DEFAULT_EPS_M).unwrap();
        assert_eq!(check.status, LmiStatus::Feasible);
        for (a, b) in report.margins.iter().zip(&check.margins) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn solver_reports_not_found_for_aggressive_gain() {
        let vset = vertex_set_for(&double_integrator(), TAU_BAR, &gain_aggressive()).unwrap();
        let report = solve_common_lyapunov(&vset, DEFAULT_BUDGET, 0).unwrap();
        assert_eq!(report.status, LmiStatus::NotFound);
        assert!(report.p.is_none());
        assert_eq!(report.iterations, DEFAULT_BUDGET);
    }

    #[test]
    fn solver_handles_single_stable_vertex() {
        let vset = singleton_vset(Mat::identity(2).scale(0.5));
        let report = solve_common_lyapunov(&vset, 10_000, 0).unwrap();
        assert_eq!(report.status, LmiStatus::Feasible);
    }

    #[test]
    fn solver_rejects_zero_budget() {
        let vset = singleton_vset(Mat::identity(2).scale(0.5));
        assert!(matches!(
            solve_common_lyapunov(&vset, 0, 0),
            Err(LmiError::InvalidArgument(_))
        ));
    }

    #[test]
    fn certificate_implies_schur_stability_across_delays() {
        // Cross-module consequence: a verified P means every Abar(tau, K)
        // in the hull is Schur stable.
        let plant = double_integrator();
        let vset = vertex_set_for(&plant, TAU_BAR, &gain_soft()).unwrap();
        let report = verify_lmi(&LyapunovCandidate::new(reference_p()), &vset, 1e-9, 1e-9).unwrap();
        assert_eq!(report.status, LmiStatus::Feasible);
        for g in 0..100 {
            let tau = TAU_BAR * g as f64 / 99.0;
            let abar = augmented_matrix(&plant, tau, &gain_soft()).unwrap();
            assert!(spectral_radius(&abar).unwrap() < 1.0, "tau {tau}");
        }
    }

    #[test]
    fn projection_enforces_constraints() {
        let raw = Mat::from_rows(&[vec![5.0, 1.0], vec![1.0, -3.0]]).unwrap();
        let p = project_spectrahedron(&raw, 1e-6, 2.0);
        let (vals, _) = symmetric_eigen(&p).unwrap();
        assert!(vals[0] >= 1e-6 - 1e-12);
        assert!((p.trace() - 2.0).abs() < 1e-9);
    }
}

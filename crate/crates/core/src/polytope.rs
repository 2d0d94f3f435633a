//! Polytopic over-approximation of the delay-parameterized closed loop.
//!
//! The delayed input integral `Gamma1(tau)` is expanded as
//! `sum_i alpha_i(tau) G_i` with scalar functions
//! `alpha_i(tau) = tau^j e^(a tau) cos(b tau)` (or `sin`) drawn from the
//! eigenstructure of `A`, and constant coefficient matrices `G_i` fitted by
//! least squares under a hard residual gate. Nilpotent `A` takes an exact
//! symbolic path. Boxing each `alpha_i` over `[0, tau_bar]` then embeds
//! every `Abar(tau, K)` in the convex hull of `2^nu` vertex matrices, which
//! is what the LMI certificate checks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{
    discretize, gamma_split, van_loan, DiscretizationError, DiscretizedPlant, GainCandidate,
    PlantModel,
};
use crate::linalg::{self, LinalgError, Mat};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolytopeError {
    #[error("tau_bar {tau_bar} outside (0, {ts}]")]
    TauBarRange { tau_bar: f64, ts: f64 },
    #[error("decomposition residual {residual:.3e} at tau = {worst_tau:.6e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge {
        residual: f64,
        worst_tau: f64,
        tolerance: f64,
    },
    #[error("vertex count 2^{nu} exceeds the supported limit (nu <= {max})")]
    TooManyTerms { nu: usize, max: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

const MAX_TERMS: usize = 20;
const FIT_GRID: usize = 400;
const CHECK_GRID: usize = 200;
const RESIDUAL_RTOL: f64 = 1e-8;
const DROP_RTOL: f64 = 1e-12;
const EXTREMA_GRID: usize = 10_000;
const REFINE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaKind {
    Cos,
    Sin,
}

/// One scalar basis function `tau^power * exp(rate * tau) * cos/sin(freq * tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaTerm {
    pub power: u32,
    pub rate: f64,
    pub freq: f64,
    pub kind: AlphaKind,
}

impl AlphaTerm {
    pub fn eval(&self, tau: f64) -> f64 {
        let osc = match self.kind {
            AlphaKind::Cos => (self.freq * tau).cos(),
            AlphaKind::Sin => (self.freq * tau).sin(),
        };
        tau.powi(self.power as i32) * (self.rate * tau).exp() * osc
    }

    fn sort_key(&self) -> (u32, f64, f64, u8) {
        (
            self.power,
            self.rate.abs(),
            self.freq.abs(),
            if self.kind == AlphaKind::Cos { 0 } else { 1 },
        )
    }
}

/// The decomposition `Gamma1(tau) = sum_i alpha_i(tau) G_i` on `[0, tau_bar]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBasis {
    pub terms: Vec<AlphaTerm>,
    pub coeffs: Vec<Mat>,
    pub tau_bar: f64,
}

impl AlphaBasis {
    pub fn nu(&self) -> usize {
        self.terms.len()
    }

    /// Reconstructs `Gamma1(tau)` from the basis.
    pub fn reconstruct(&self, tau: f64) -> Mat {
        let mut out = Mat::zeros(self.coeffs[0].rows(), self.coeffs[0].cols());
        for (term, g) in self.terms.iter().zip(&self.coeffs) {
            out = out.add(&g.scale(term.eval(tau)));
        }
        out
    }
}

/// Boxed range of each basis coordinate over `[0, tau_bar]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// One vertex matrix with its sign pattern (e.g. `"-+"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub pattern: String,
    pub matrix: Mat,
}

/// The `2^nu` vertex matrices spanning the over-approximation, together
/// with the pieces they were assembled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSet {
    pub m0: Mat,
    pub mi: Vec<Mat>,
    pub bounds: AlphaBounds,
    pub vertices: Vec<Vertex>,
}

impl VertexSet {
    pub fn dim(&self) -> usize {
        self.m0.rows()
    }
}

fn tau_grid(tau_bar: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|g| tau_bar * g as f64 / (points - 1) as f64)
        .collect()
}

/// Candidate basis terms from the eigenvalues of `A` (for `exp(-A h)`,
/// whose modes have rates negated relative to `A`'s), integrated once.
fn candidate_terms(a: &Mat) -> Result<Vec<AlphaTerm>, PolytopeError> {
    let eigs = linalg::eigenvalues(a)?;
    let scale = eigs.iter().map(|e| e.norm()).fold(0.0f64, f64::max);
    let tol = 1e-5 * (1.0 + scale);

    // Cluster by (re, |im|); multiplicity bounds the polynomial degree.
    let mut clusters: Vec<(f64, f64, usize)> = Vec::new();
    for e in &eigs {
        let (re, im) = (e.re, e.im.abs());
        if let Some(c) = clusters
            .iter_mut()
            .find(|c| (c.0 - re).abs() <= tol && (c.1 - im).abs() <= tol)
        {
            c.2 += 1;
        } else {
            clusters.push((re, im, 1));
        }
    }

    let mut terms: Vec<AlphaTerm> = Vec::new();
    {
        let mut push = |t: AlphaTerm| {
            if !terms.iter().any(|u| {
                u.power == t.power
                    && (u.rate - t.rate).abs() <= 1e-12 * (1.0 + t.rate.abs())
                    && (u.freq - t.freq).abs() <= 1e-12 * (1.0 + t.freq.abs())
                    && u.kind == t.kind
            }) {
                terms.push(t);
            }
        };

        let mut any_nonzero = false;
        for &(re, im, mult) in &clusters {
            // A conjugate pair contributes two eigenvalues to the cluster
            // but only one Jordan chain per pair.
            let chain = if im > tol { mult.div_ceil(2) } else { mult };
            if re.abs() <= tol && im <= tol {
                // Zero eigenvalue: integration yields pure polynomials
                // tau^1..tau^chain.
                for p in 1..=chain as u32 {
                    push(AlphaTerm {
                        power: p,
                        rate: 0.0,
                        freq: 0.0,
                        kind: AlphaKind::Cos,
                    });
                }
            } else {
                any_nonzero = true;
                for j in 0..chain as u32 {
                    push(AlphaTerm {
                        power: j,
                        rate: -re,
                        freq: im,
                        kind: AlphaKind::Cos,
                    });
                    if im > tol {
                        push(AlphaTerm {
                            power: j,
                            rate: -re,
                            freq: im,
                            kind: AlphaKind::Sin,
                        });
                    }
                }
            }
        }
        if any_nonzero {
            // Integrating exponential modes also produces constants.
            push(AlphaTerm {
                power: 0,
                rate: 0.0,
                freq: 0.0,
                kind: AlphaKind::Cos,
            });
        }
    }
    terms.sort_by(|a, b| a.sort_key().partial_cmp(&b.sort_key()).unwrap());
    Ok(terms)
}

/// Exact expansion for nilpotent `A`: `Gamma1(tau) = sum_k tau^(k+1) *
/// [Phi (-A)^k B / (k+1)!]`, the series of `exp(-A h)` integrated term by
/// term.
fn nilpotent_basis(plant: &PlantModel, tau_bar: f64) -> Result<Option<AlphaBasis>, PolytopeError> {
    let n = plant.state_dim();
    let mut power = Mat::identity(n);
    for _ in 0..n {
        power = power.matmul(&plant.a);
    }
    if power.norm_max() != 0.0 {
        return Ok(None);
    }
    let (phi, _) = van_loan(plant, plant.ts)?;
    let minus_a = plant.a.scale(-1.0);
    let mut terms = Vec::new();
    let mut coeffs = Vec::new();
    let mut a_pow = Mat::identity(n);
    let mut factorial = 1.0f64;
    for k in 0..n as u32 {
        factorial *= (k + 1) as f64;
        let g = phi.matmul(&a_pow).matmul(&plant.b).scale(1.0 / factorial);
        if g.norm_max() > 0.0 {
            terms.push(AlphaTerm {
                power: k + 1,
                rate: 0.0,
                freq: 0.0,
                kind: AlphaKind::Cos,
            });
            coeffs.push(g);
        }
        a_pow = a_pow.matmul(&minus_a);
    }
    Ok(Some(AlphaBasis {
        terms,
        coeffs,
        tau_bar,
    }))
}

fn fit_coefficients(
    plant: &PlantModel,
    terms: &[AlphaTerm],
    tau_bar: f64,
    gamma1_samples: &[(f64, Mat)],
) -> Result<Vec<Mat>, PolytopeError> {
    let n = plant.state_dim();
    let m = plant.input_dim();
    let rows = gamma1_samples.len();
    let nu = terms.len();
    // Normalize columns so polynomials over a short interval stay
    // well-conditioned.
    let scales: Vec<f64> = terms
        .iter()
        .map(|t| {
            tau_grid(tau_bar, 64)
                .iter()
                .map(|&tau| t.eval(tau).abs())
                .fold(0.0f64, f64::max)
                .max(1e-300)
        })
        .collect();
    let design = Mat::from_fn(rows, nu, |g, i| {
        terms[i].eval(gamma1_samples[g].0) / scales[i]
    });
    let rhs = Mat::from_fn(rows, n * m, |g, col| {
        let (r, c) = (col / m, col % m);
        gamma1_samples[g].1[(r, c)]
    });
    let solution = linalg::lstsq(&design, &rhs)?;
    Ok((0..nu)
        .map(|i| Mat::from_fn(n, m, |r, c| solution[(i, r * m + c)] / scales[i]))
        .collect())
}

/// Decomposes `Gamma1` over `[0, tau_bar]` into continuous scalar
/// functions times constant matrices. Fails loudly (with the worst grid
/// point) if the fitted expansion does not reproduce `Gamma1` to the
/// documented tolerance.
pub fn decompose_gamma1(plant: &PlantModel, tau_bar: f64) -> Result<AlphaBasis, PolytopeError> {
    plant.validate()?;
    if tau_bar.is_nan() || tau_bar <= 0.0 || tau_bar > plant.ts || !tau_bar.is_finite() {
        return Err(PolytopeError::TauBarRange {
            tau_bar,
            ts: plant.ts,
        });
    }

    let basis = if let Some(exact) = nilpotent_basis(plant, tau_bar)? {
        exact
    } else {
        let samples: Vec<(f64, Mat)> = tau_grid(tau_bar, FIT_GRID)
            .into_iter()
            .map(|tau| Ok((tau, gamma_split(plant, tau)?.1)))
            .collect::<Result<_, PolytopeError>>()?;
        let mut terms = candidate_terms(&plant.a)?;
        let mut coeffs = fit_coefficients(plant, &terms, tau_bar, &samples)?;
        // Drop negligible terms and refit so nu (and the vertex count)
        // stays minimal.
        let gamma1_full = gamma_split(plant, tau_bar)?.1;
        let drop_tol = DROP_RTOL * gamma1_full.norm_fro().max(f64::MIN_POSITIVE);
        let kept: Vec<usize> = (0..terms.len())
            .filter(|&i| coeffs[i].norm_fro() >= drop_tol)
            .collect();
        if kept.len() < terms.len() && !kept.is_empty() {
            terms = kept.iter().map(|&i| terms[i]).collect();
            coeffs = fit_coefficients(plant, &terms, tau_bar, &samples)?;
        }
        AlphaBasis {
            terms,
            coeffs,
            tau_bar,
        }
    };

    // Residual gate on an independent grid.
    let mut worst = (0.0f64, 0.0f64, 0.0f64); // residual, tau, tolerance
    for tau in tau_grid(tau_bar, CHECK_GRID) {
        let truth = gamma_split(plant, tau)?.1;
        let residual = basis.reconstruct(tau).sub(&truth).norm_fro();
        let tolerance = RESIDUAL_RTOL * (1.0 + truth.norm_fro());
        if residual - tolerance > worst.0 - worst.2 {
            worst = (residual, tau, tolerance);
        }
    }
    if worst.0 > worst.2 {
        return Err(PolytopeError::ResidualTooLarge {
            residual: worst.0,
            worst_tau: worst.1,
            tolerance: worst.2,
        });
    }
    Ok(basis)
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > REFINE_TOL {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Per-term extrema over `[0, tau_bar]`: dense grid scan plus
/// golden-section refinement, then widened by the refinement tolerance so
/// the returned box is a certified outer bound.
pub fn alpha_extrema(basis: &AlphaBasis, tau_bar: f64) -> AlphaBounds {
    let grid = tau_grid(tau_bar, EXTREMA_GRID);
    let step = tau_bar / (EXTREMA_GRID - 1) as f64;
    let mut lo = Vec::with_capacity(basis.nu());
    let mut hi = Vec::with_capacity(basis.nu());
    for term in &basis.terms {
        let eval = |tau: f64| term.eval(tau);
        let mut best_min = (f64::INFINITY, 0.0f64);
        let mut best_max = (f64::NEG_INFINITY, 0.0f64);
        for &tau in &grid {
            let v = eval(tau);
            if v < best_min.0 {
                best_min = (v, tau);
            }
            if v > best_max.0 {
                best_max = (v, tau);
            }
        }
        let bracket = |center: f64| ((center - step).max(0.0), (center + step).min(tau_bar));
        let (a, b) = bracket(best_min.1);
        let tau_min = golden_section(&eval, a, b);
        let (a, b) = bracket(best_max.1);
        let tau_max = golden_section(&|t| -eval(t), a, b);
        let min_val = eval(tau_min).min(best_min.0);
        let max_val = eval(tau_max).max(best_max.0);
        lo.push(min_val - REFINE_TOL * (1.0 + min_val.abs()));
        hi.push(max_val + REFINE_TOL * (1.0 + max_val.abs()));
    }
    AlphaBounds { lo, hi }
}

/// Assembles `M_0` and the `M_i` and enumerates all `2^nu` sign patterns in
/// lexicographic order (`-` before `+`).
pub fn build_vertices(
    dp: &DiscretizedPlant,
    basis: &AlphaBasis,
    bounds: &AlphaBounds,
    gain: &GainCandidate,
) -> Result<VertexSet, PolytopeError> {
    let n = dp.phi.rows();
    let m = dp.gamma.cols();
    let nu = basis.nu();
    if nu > MAX_TERMS {
        return Err(PolytopeError::TooManyTerms { nu, max: MAX_TERMS });
    }
    if bounds.lo.len() != nu || bounds.hi.len() != nu {
        return Err(PolytopeError::ShapeMismatch("bounds length != nu".into()));
    }
    if gain.k.rows() != m || gain.k.cols() != n {
        return Err(PolytopeError::ShapeMismatch(format!(
            "gain must be {m}x{n}, got {}x{}",
            gain.k.rows(),
            gain.k.cols()
        )));
    }
    if basis.coeffs.iter().any(|g| g.rows() != n || g.cols() != m) {
        return Err(PolytopeError::ShapeMismatch(
            "coefficient matrix shape".into(),
        ));
    }

    let mut m0 = Mat::zeros(2 * n, 2 * n);
    m0.set_block(0, 0, &dp.phi.add(&dp.gamma.matmul(&gain.k)));
    m0.set_block(n, 0, &Mat::identity(n));

    let mi: Vec<Mat> = basis
        .coeffs
        .iter()
        .map(|g| {
            let gk = g.matmul(&gain.k);
            let mut out = Mat::zeros(2 * n, 2 * n);
            out.set_block(0, 0, &gk.scale(-1.0));
            out.set_block(0, n, &gk);
            out
        })
        .collect();

    let count = 1usize << nu;
    let mut vertices = Vec::with_capacity(count);
    for idx in 0..count {
        let mut matrix = m0.clone();
        let mut pattern = String::with_capacity(nu);
        for (i, deviation) in mi.iter().enumerate() {
            let plus = (idx >> (nu - 1 - i)) & 1 == 1;
            pattern.push(if plus { '+' } else { '-' });
            let alpha = if plus { bounds.hi[i] } else { bounds.lo[i] };
            matrix = matrix.add(&deviation.scale(alpha));
        }
        vertices.push(Vertex { pattern, matrix });
    }
    Ok(VertexSet {
        m0,
        mi,
        bounds: bounds.clone(),
        vertices,
    })
}

/// Convenience: decomposition, extrema, and vertex enumeration in one call.
pub fn vertex_set_for(
    plant: &PlantModel,
    tau_bar: f64,
    gain: &GainCandidate,
) -> Result<VertexSet, PolytopeError> {
    let dp = discretize(plant)?;
    let basis = decompose_gamma1(plant, tau_bar)?;
    let bounds = alpha_extrema(&basis, tau_bar);
    build_vertices(&dp, &basis, &bounds, gain)
}

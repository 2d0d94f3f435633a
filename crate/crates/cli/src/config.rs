//! JSON configuration schema and conversion into core types.
//!
//! The schema is strict: unknown keys are rejected, and every diagnostic
//! carries the line and column of the offending construct so a bad config
//! is fixable without spelunking.

use serde::Deserialize;

use encctl_core::codesign::{
    CodesignProblem, GainSpec, SecurityRow, SecurityTable, SolverSettings, ThetaCandidate,
};
use encctl_core::delay::{CostConstants, LinkModel};
use encctl_core::discretization::PlantModel;
use encctl_core::linalg::Mat;
use encctl_core::lwe::CryptoParams;
use num_complex::Complex64;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub plant: PlantConfig,
    pub link: LinkConfig,
    #[serde(default)]
    pub cost_constants: Option<CostConstantsConfig>,
    pub theta_candidates: Vec<ThetaConfig>,
    pub security: SecurityConfig,
    pub gains: Vec<GainConfig>,
    #[serde(default)]
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub calibration: Option<CalibrationConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "Ts")]
    pub ts: f64,
    pub x_ini: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    #[serde(rename = "R_bits_per_s")]
    pub r_bits_per_s: f64,
    pub delta_s: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostConstantsConfig {
    pub c_enc: f64,
    pub c_dec: f64,
    pub c_mul: f64,
}

impl From<CostConstantsConfig> for CostConstants {
    fn from(c: CostConstantsConfig) -> Self {
        CostConstants {
            c_enc: c.c_enc,
            c_dec: c.c_dec,
            c_mul: c.c_mul,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaConfig {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(rename = "log2_N")]
    pub log2_n: u32,
    pub log2_q: u32,
    pub sigma: f64,
    #[serde(default)]
    pub cost_constants: Option<CostConstantsConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecurityConfig {
    pub lambda_star: u32,
    /// Extra rows appended to the bundled standard table.
    #[serde(default)]
    pub table: Vec<SecurityRowConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecurityRowConfig {
    #[serde(rename = "log2_N")]
    pub log2_n: u32,
    pub max_log2_q: u32,
    pub sigma: f64,
    pub lambda: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub poles: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub mode: SimMode,
    #[serde(default)]
    pub tau_s: Option<f64>,
    #[serde(default)]
    pub tau_fractions_of_bound: Option<Vec<f64>>,
    pub horizon: usize,
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub s: Option<f64>,
    pub output_grid: usize,
    pub seed: u64,
    /// Optional reduced ring dimension for simulation speed; the modulus
    /// bit length of the selected candidate is kept.
    #[serde(default, rename = "log2_N")]
    pub log2_n: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    Plaintext,
    Encrypted,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub budget: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Repetitions per operation kind and candidate.
    pub reps: usize,
}

pub fn parse_config(path: &std::path::Path) -> Result<ConfigDocument, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::validation(format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

impl ConfigDocument {
    pub fn plant(&self) -> Result<PlantModel, CliError> {
        let a = Mat::from_rows(&self.plant.a).map_err(CliError::from_validation)?;
        let b = Mat::from_rows(&self.plant.b).map_err(CliError::from_validation)?;
        PlantModel::new(a, b, self.plant.ts, self.plant.x_ini.clone())
            .map_err(CliError::from_validation)
    }

    pub fn link(&self) -> LinkModel {
        LinkModel {
            rate_bits_per_s: self.link.r_bits_per_s,
            propagation_s: self.link.delta_s,
        }
    }

    pub fn security_table(&self) -> SecurityTable {
        let mut table = SecurityTable::standard();
        for row in &self.security.table {
            table.rows.push(SecurityRow {
                log2_n: row.log2_n,
                max_log2_q: row.max_log2_q,
                sigma: row.sigma,
                lambda_bits: row.lambda,
            });
        }
        table
    }

    pub fn theta_candidates(&self) -> Result<Vec<ThetaCandidate>, CliError> {
        if self.theta_candidates.is_empty() {
            return Err(CliError::validation(
                "theta_candidates must be nonempty".into(),
            ));
        }
        self.theta_candidates
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let params = CryptoParams::from_bits(t.log2_n, t.log2_q, t.sigma)
                    .map_err(CliError::from_validation)?;
                Ok(ThetaCandidate {
                    label: t.label.clone().unwrap_or_else(|| format!("theta{}", i + 1)),
                    params,
                    consts: t.cost_constants.map(CostConstants::from),
                })
            })
            .collect()
    }

    pub fn gain_specs(&self) -> Result<Vec<(String, GainSpec)>, CliError> {
        if self.gains.is_empty() {
            return Err(CliError::validation("gains must be nonempty".into()));
        }
        self.gains
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let name = g.name.clone().unwrap_or_else(|| format!("K{}", i + 1));
                let spec = match (&g.matrix, &g.poles) {
                    (Some(rows), None) => {
                        GainSpec::Explicit(Mat::from_rows(rows).map_err(CliError::from_validation)?)
                    }
                    (None, Some(poles)) => {
                        GainSpec::Poles(poles.iter().map(|&p| Complex64::new(p, 0.0)).collect())
                    }
                    _ => {
                        return Err(CliError::validation(format!(
                            "gain '{name}': exactly one of 'matrix' or 'poles' is required"
                        )))
                    }
                };
                Ok((name, spec))
            })
            .collect()
    }

    pub fn default_constants(&self) -> Result<CostConstants, CliError> {
        if let Some(c) = self.cost_constants {
            return Ok(c.into());
        }
        // Without a global section, every candidate must carry its own.
        if self
            .theta_candidates
            .iter()
            .all(|t| t.cost_constants.is_some())
        {
            let first = self.theta_candidates[0].cost_constants.unwrap();
            return Ok(first.into());
        }
        Err(CliError::validation(
            "cost_constants missing: provide the global section, per-candidate overrides, or run calibrate"
                .into(),
        ))
    }

    pub fn codesign_problem(
        &self,
        seed_override: Option<u64>,
    ) -> Result<CodesignProblem, CliError> {
        let solver = match self.solver {
            Some(s) => SolverSettings {
                budget: s.budget,
                seed: s.seed,
            },
            None => SolverSettings::default(),
        };
        let solver = match seed_override {
            Some(seed) => SolverSettings { seed, ..solver },
            None => solver,
        };
        Ok(CodesignProblem {
            plant: self.plant()?,
            candidates: self.theta_candidates()?,
            gains: self.gain_specs()?,
            lambda_star: self.security.lambda_star,
            link: self.link(),
            consts: self.default_constants()?,
            table: self.security_table(),
            solver,
        })
    }
}

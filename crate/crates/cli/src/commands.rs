//! Subcommand implementations: each reads the validated config, drives the
//! core pipelines, and writes its artifacts into the output directory.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use encctl_core::codesign::{audit_to_jsonl, resolve_gains, run_codesign, CodesignStatus};
use encctl_core::delay::{
    calibrate_constants, measurements_to_csv, total_delay_bound, Measurement, OpKind, TauComponents,
};
use encctl_core::discretization::{discretize, GainCandidate};
use encctl_core::linalg::Mat;
use encctl_core::lmi::{verify_lmi, LyapunovCandidate};
use encctl_core::lwe::{
    decrypt_vector, encrypt_gsw, encrypt_vector, hom_matvec, keygen, CryptoParams,
};
use encctl_core::polytope::vertex_set_for;
use encctl_core::sim::{
    encrypt_gain, events_to_csv, simulate as run_simulation, trajectory_to_csv, Controller,
    QuantizationParams, SimConfig, SimError,
};

use crate::config::{parse_config, ConfigDocument, SimMode};
use crate::CliError;

fn write_artifact(out_dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::runtime(e.to_string()))
}

pub fn calibrate(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let config = parse_config(config_path)?;
    let plant = config.plant()?;
    let (n, m) = (plant.state_dim(), plant.input_dim());
    let reps = config.calibration.map_or(3, |c| c.reps.max(1));

    let mut measurements = Vec::new();
    for candidate in config.theta_candidates()? {
        let params = &candidate.params;
        if params.q_word().is_err() {
            println!(
                "skipping {}: modulus too wide for ciphertext arithmetic on this build",
                candidate.label
            );
            continue;
        }
        let sk = keygen(params, 0);
        let n_dim = params.n_dim();
        let digits = params.digits();
        let gain_values: Vec<i128> = (0..m * n).map(|i| (i as i128 % 7) - 3).collect();
        let ek: Vec<Vec<_>> = (0..m)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        encrypt_gsw(gain_values[i * n + j], &sk, params, (i * n + j) as u64)
                            .expect("calibration gain encrypts")
                    })
                    .collect()
            })
            .collect();
        let state: Vec<i128> = (0..n).map(|i| i as i128 + 1).collect();
        for rep in 0..reps {
            let t = Instant::now();
            let cts = encrypt_vector(&state, &sk, params, rep as u64)
                .map_err(|e| CliError::runtime(e.to_string()))?;
            measurements.push(Measurement {
                kind: OpKind::Encrypt,
                n_dim,
                digits,
                state_dim: n,
                input_dim: m,
                seconds: t.elapsed().as_secs_f64(),
            });
            let t = Instant::now();
            let products =
                hom_matvec(&ek, &cts, params).map_err(|e| CliError::runtime(e.to_string()))?;
            measurements.push(Measurement {
                kind: OpKind::ExternalProduct,
                n_dim,
                digits,
                state_dim: n,
                input_dim: m,
                seconds: t.elapsed().as_secs_f64(),
            });
            let t = Instant::now();
            decrypt_vector(&products, &sk, params).map_err(|e| CliError::runtime(e.to_string()))?;
            measurements.push(Measurement {
                kind: OpKind::Decrypt,
                n_dim,
                digits,
                state_dim: n,
                input_dim: m,
                seconds: t.elapsed().as_secs_f64(),
            });
        }
    }
    let constants = calibrate_constants(&measurements).map_err(CliError::from_validation)?;
    write_artifact(out_dir, "cost_constants.json", &to_json(&constants)?)?;
    write_artifact(
        out_dir,
        "calibration.csv",
        &measurements_to_csv(&measurements),
    )?;

    // Per-candidate budgets under the fitted constants, with the measured
    // worst-case split attached where the candidate was actually timed.
    let mut budgets = Vec::new();
    for candidate in config.theta_candidates()? {
        let mut budget = total_delay_bound(&config.link(), &constants, &candidate.params, n, m)
            .map_err(CliError::from_validation)?;
        let worst_of = |kind: OpKind| {
            measurements
                .iter()
                .filter(|me| me.kind == kind && me.n_dim == candidate.params.n_dim())
                .map(|me| me.seconds)
                .fold(f64::NAN, f64::max)
        };
        let enc = worst_of(OpKind::Encrypt);
        if enc.is_finite() {
            budget.components = Some(TauComponents {
                comm: budget.comm,
                enc,
                dec: worst_of(OpKind::Decrypt),
                mul: worst_of(OpKind::ExternalProduct),
            });
        }
        budgets.push((candidate.label.clone(), budget));
    }
    let report: Vec<serde_json::Value> = budgets
        .iter()
        .map(|(label, b)| serde_json::json!({ "label": label, "budget": b }))
        .collect();
    write_artifact(out_dir, "delay_budgets.json", &to_json(&report)?)?;
    Ok(())
}

#[derive(Serialize)]
struct ThetaReport {
    label: String,
    #[serde(rename = "log2_N")]
    log2_n: u32,
    log2_q: u32,
    sigma: f64,
}

#[derive(Serialize)]
struct CodesignReport {
    status: CodesignStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<ThetaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gain: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gain_matrix: Option<Mat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lyapunov: Option<Mat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_bar_s: Option<f64>,
}

pub fn codesign(config_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let config = parse_config(config_path)?;
    let problem = config.codesign_problem(seed)?;
    let result = run_codesign(&problem).map_err(CliError::from_validation)?;
    let report = CodesignReport {
        status: result.status,
        theta: result.theta.as_ref().map(|t| ThetaReport {
            label: t.label.clone(),
            log2_n: t.params.n_dim().trailing_zeros(),
            log2_q: t.params.digits(),
            sigma: t.params.sigma(),
        }),
        gain: result.gain_label.clone(),
        gain_matrix: result.gain.as_ref().map(|g| g.k.clone()),
        lyapunov: result.lyapunov.as_ref().map(|l| l.p.clone()),
        tau_bar_s: result.tau_bar_s,
    };
    write_artifact(out_dir, "codesign_result.json", &to_json(&report)?)?;
    write_artifact(
        out_dir,
        "codesign_audit.jsonl",
        &audit_to_jsonl(&result.audit),
    )?;
    match result.status {
        CodesignStatus::Found => {
            println!(
                "found ({}, {}) with tau_bar = {:.6} s",
                report.theta.as_ref().unwrap().label,
                report.gain.as_ref().unwrap(),
                result.tau_bar_s.unwrap()
            );
            Ok(())
        }
        CodesignStatus::NoFeasiblePair => Err(CliError::no_feasible_pair()),
    }
}

fn select_gain(
    config: &ConfigDocument,
    name: Option<&str>,
) -> Result<(String, GainCandidate), CliError> {
    let plant = config.plant()?;
    let dp = discretize(&plant).map_err(CliError::from_validation)?;
    let gains = resolve_gains(&dp, &config.gain_specs()?).map_err(CliError::from_validation)?;
    match name {
        None => Ok(gains.into_iter().next().expect("nonempty gains")),
        Some(wanted) => gains
            .into_iter()
            .find(|(label, _)| label == wanted)
            .ok_or_else(|| CliError::validation(format!("no gain named '{wanted}' in config"))),
    }
}

fn tau_bound_of_first_candidate(config: &ConfigDocument) -> Result<f64, CliError> {
    let plant = config.plant()?;
    let candidates = config.theta_candidates()?;
    let first = &candidates[0];
    let consts = match first.consts {
        Some(c) => c,
        None => config.default_constants()?,
    };
    let budget = total_delay_bound(
        &config.link(),
        &consts,
        &first.params,
        plant.state_dim(),
        plant.input_dim(),
    )
    .map_err(CliError::from_validation)?;
    Ok(budget.total)
}

pub fn simulate(
    config_path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    gain_name: Option<&str>,
    tau_frac: Option<f64>,
    tau_s: Option<f64>,
) -> Result<(), CliError> {
    let config = parse_config(config_path)?;
    let plant = config.plant()?;
    let sim = config
        .sim
        .as_ref()
        .ok_or_else(|| CliError::validation("config has no sim section".into()))?;
    let (label, gain) = select_gain(&config, gain_name)?;
    let seed = seed.unwrap_or(sim.seed);

    // Delay list: CLI flags override the config; fractions are relative to
    // the first candidate's delay bound.
    let delays: Vec<(String, f64)> = if let Some(f) = tau_frac {
        vec![(
            format!("frac{f}"),
            f * tau_bound_of_first_candidate(&config)?,
        )]
    } else if let Some(t) = tau_s {
        vec![(format!("tau{t}"), t)]
    } else if let Some(t) = sim.tau_s {
        vec![(format!("tau{t}"), t)]
    } else if let Some(fracs) = &sim.tau_fractions_of_bound {
        let bound = tau_bound_of_first_candidate(&config)?;
        fracs
            .iter()
            .map(|&f| (format!("frac{f}"), f * bound))
            .collect()
    } else {
        return Err(CliError::validation(
            "sim section needs tau_s or tau_fractions_of_bound (or pass --tau-frac/--tau-s)".into(),
        ));
    };

    // Encrypted mode setup, reused across the delay sweep.
    let encrypted = match sim.mode {
        SimMode::Plaintext => None,
        SimMode::Encrypted => {
            let candidates = config.theta_candidates()?;
            let base = &candidates[0].params;
            let params = match sim.log2_n {
                Some(log2_n) => CryptoParams::from_bits(log2_n, base.digits(), base.sigma())
                    .map_err(CliError::from_validation)?,
                None => base.clone(),
            };
            // Default demo quantization: r = s = 2^-10.
            let quant = QuantizationParams {
                r: sim.r.unwrap_or_else(|| 2f64.powi(-10)),
                s: sim.s.unwrap_or_else(|| 2f64.powi(-10)),
            };
            let sk = keygen(&params, seed);
            let ctrl = encrypt_gain(&gain, quant, &sk, &params, seed.wrapping_add(1))
                .map_err(|e| CliError::runtime(e.to_string()))?;
            Some((ctrl, sk))
        }
    };

    for (tag, tau) in delays {
        let cfg = SimConfig {
            tau,
            horizon: sim.horizon,
            output_grid: sim.output_grid,
        };
        let controller = match &encrypted {
            None => Controller::Plaintext(&gain),
            Some((ctrl, sk)) => Controller::Encrypted { ctrl, sk },
        };
        let traj = run_simulation(&plant, &controller, &cfg, seed).map_err(|e| match e {
            SimError::Overflow { .. } => CliError::runtime(e.to_string()),
            SimError::InvalidConfig(_) => CliError::validation(e.to_string()),
            other => CliError::runtime(other.to_string()),
        })?;
        write_artifact(
            out_dir,
            &format!("trajectory_{label}_{tag}.csv"),
            &trajectory_to_csv(&traj),
        )?;
        write_artifact(
            out_dir,
            &format!("events_{label}_{tag}.csv"),
            &events_to_csv(&traj),
        )?;
        println!(
            "{label} {tag}: final ||x|| = {:.6e}, max ||x|| = {:.6e}",
            traj.final_norm(),
            traj.max_norm()
        );
    }
    Ok(())
}

pub fn verify(
    config_path: &Path,
    p_matrix_path: &Path,
    out_dir: &Path,
    gain_name: Option<&str>,
    theta_label: Option<&str>,
) -> Result<(), CliError> {
    let config = parse_config(config_path)?;
    let plant = config.plant()?;
    let p_text = std::fs::read_to_string(p_matrix_path).map_err(|e| {
        CliError::validation(format!("cannot read {}: {e}", p_matrix_path.display()))
    })?;
    let p: Mat = serde_json::from_str(&p_text).map_err(|e| {
        CliError::validation(format!(
            "{}:{}:{}: {e}",
            p_matrix_path.display(),
            e.line(),
            e.column()
        ))
    })?;

    let candidates = config.theta_candidates()?;
    let candidate = match theta_label {
        None => &candidates[0],
        Some(wanted) => candidates
            .iter()
            .find(|c| c.label == wanted)
            .ok_or_else(|| CliError::validation(format!("no candidate labeled '{wanted}'")))?,
    };
    let consts = match candidate.consts {
        Some(c) => c,
        None => config.default_constants()?,
    };
    let budget = total_delay_bound(
        &config.link(),
        &consts,
        &candidate.params,
        plant.state_dim(),
        plant.input_dim(),
    )
    .map_err(CliError::from_validation)?;
    if budget.total >= plant.ts {
        return Err(CliError::validation(format!(
            "candidate {}: delay bound {:.6} s is not below Ts = {} s",
            candidate.label, budget.total, plant.ts
        )));
    }
    let (_, gain) = select_gain(&config, gain_name)?;
    let vset = vertex_set_for(&plant, budget.total, &gain).map_err(CliError::from_validation)?;
    let report = verify_lmi(
        &LyapunovCandidate::new(p),
        &vset,
        encctl_core::lmi::DEFAULT_EPS_P,
        encctl_core::lmi::DEFAULT_EPS_M,
    )
    .map_err(CliError::from_validation)?;
    write_artifact(out_dir, "lmi_report.json", &to_json(&report)?)?;
    println!("verification status: {:?}", report.status);
    Ok(())
}

use std::path::Path;

use epsflow::analysis::{
    bound_audit, convergence_study, identity_refinement, monotonicity_audit, relative_energy_increase, AuditReport,
};
use epsflow::curve::RESOLUTION_LIMIT;
use epsflow::flow::{stable_dt, DiagnosticsRecord};
use epsflow::oracle::fd_gradient_check;
use epsflow::{run, Error, FlowConfig, Scheme, Status, Trajectory};
use serde::Serialize;

use crate::config::{Command, Experiment};
use crate::error::CliError;

/// Largest tolerated per-step rise of `G^ε`, relative to `|G^ε|`.
pub const ENERGY_SLACK: f64 = 1e-9;
/// Smallest tolerated `(borsuk_rhs − borsuk_lhs) / borsuk_rhs`.
pub const BORSUK_SLACK: f64 = -1e-6;
/// Gradient discrepancies below this are roundoff.
pub const GRADIENT_FLOOR: f64 = 1e-9;
/// Identity residuals below this are roundoff.
pub const IDENTITY_FLOOR: f64 = 1e-8;
pub const RATIO_RANGE: std::ops::RangeInclusive<f64> = 3.5..=4.5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Stopped(String),
    AuditFailed(Vec<String>),
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::Stopped(_) => 2,
            Outcome::AuditFailed(_) => 3,
        }
    }
}

pub struct Reporter {
    pub quiet: bool,
}

impl Reporter {
    pub fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn write(dir: &Path, name: &str, body: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

pub fn execute(exp: &Experiment, out: &Reporter) -> Result<Outcome, CliError> {
    match exp.command {
        Command::Simulate => simulate(exp, out),
        Command::Sweep => sweep(exp, out),
        Command::Verify => verify(exp, out),
        Command::Study => study(exp, out),
    }
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    initial: &'a str,
    epsilon: f64,
    status: Status,
    final_time: f64,
    steps: usize,
    reparametrizations: usize,
    final_diagnostics: &'a DiagnosticsRecord,
}

fn summarize<'a>(descriptor: &'a str, traj: &'a Trajectory) -> RunSummary<'a> {
    RunSummary {
        initial: descriptor,
        epsilon: traj.epsilon,
        status: traj.status,
        final_time: traj.final_time(),
        steps: traj.final_state.step_index,
        reparametrizations: traj.reparam_steps.len(),
        final_diagnostics: &traj.final_state.diagnostics,
    }
}

fn run_into(exp: &Experiment, flow: &FlowConfig, dir: &Path, out: &Reporter) -> Result<Trajectory, CliError> {
    let traj = run(&exp.initial, flow)?;
    write(dir, "diagnostics.csv", &traj.diagnostics_csv())?;
    for s in &traj.snapshots {
        write(dir, &format!("snap_{}.csv", s.step), &s.curve.to_csv())?;
    }
    write(dir, "result.json", &json(&summarize(&exp.descriptor, &traj)))?;
    let d = &traj.final_state.diagnostics;
    out.say(format!(
        "epsilon {}: {} at t = {} after {} steps (L = {}, energy = {})",
        flow.epsilon,
        traj.status,
        traj.final_time(),
        traj.final_state.step_index,
        d.length,
        d.energy
    ));
    Ok(traj)
}

fn stop_outcome(status: Status) -> Outcome {
    match status {
        Status::ReachedTmax => Outcome::Success,
        s => Outcome::Stopped(s.to_string()),
    }
}

fn simulate(exp: &Experiment, out: &Reporter) -> Result<Outcome, CliError> {
    let traj = run_into(exp, &exp.config.flow, &exp.output_dir, out)?;
    Ok(stop_outcome(traj.status))
}

fn sweep(exp: &Experiment, out: &Reporter) -> Result<Outcome, CliError> {
    #[derive(Serialize)]
    struct Entry {
        epsilon: f64,
        directory: String,
        status: Status,
        final_time: f64,
    }
    let mut entries = Vec::new();
    let mut worst = Outcome::Success;
    for &eps in &exp.config.epsilon_list {
        let flow = FlowConfig {
            epsilon: eps,
            ..exp.config.flow.clone()
        };
        let name = format!("eps_{eps}");
        let traj = run_into(exp, &flow, &exp.output_dir.join(&name), out)?;
        if traj.status != Status::ReachedTmax && worst == Outcome::Success {
            worst = Outcome::Stopped(traj.status.to_string());
        }
        entries.push(Entry {
            epsilon: eps,
            directory: name,
            status: traj.status,
            final_time: traj.final_time(),
        });
    }
    write(&exp.output_dir, "sweep.json", &json(&entries))?;
    Ok(worst)
}

fn study(exp: &Experiment, out: &Reporter) -> Result<Outcome, CliError> {
    let c = &exp.config;
    let result = match convergence_study(&exp.initial, &exp.descriptor, &c.epsilon_list, &c.sample_times, &c.flow) {
        Ok(s) => s,
        Err(Error::ReferenceStopped { status, t, needed }) => {
            eprintln!("reference run stopped ({status}) at t = {t}, before the last sample time {needed}");
            return Ok(Outcome::Stopped(status));
        }
        Err(Error::RunStopped { epsilon, status, t, needed }) => {
            eprintln!("run with epsilon {epsilon} stopped ({status}) at t = {t}, before {needed}");
            return Ok(Outcome::Stopped(status));
        }
        Err(e) => return Err(e.into()),
    };
    write(&exp.output_dir, "study.json", &result.to_json())?;
    for (i, eps) in result.epsilons.iter().enumerate() {
        out.say(format!("epsilon {eps}: d = {:?}, d_kappa = {:?}", result.d[i], result.d_kappa[i]));
    }
    if result.distances_decreasing() {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::AuditFailed(vec!["distance_monotonicity".into()]))
    }
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Debug, Serialize)]
struct GradientRow {
    mode: usize,
    h: f64,
    discrepancy: f64,
    discrepancy_half_h: f64,
    ratio: f64,
}

#[derive(Debug, Serialize)]
struct VerifyReport<'a> {
    initial: &'a str,
    epsilon: f64,
    passed: bool,
    failed: Vec<&'static str>,
    checks: Vec<Check>,
    gradient: Vec<GradientRow>,
    run_status: Option<Status>,
    audit: Option<AuditReport>,
}

fn ratio_ok(coarse: f64, fine: f64, floor: f64) -> bool {
    (coarse <= floor && fine <= floor) || RATIO_RANGE.contains(&(coarse / fine))
}

fn verify(exp: &Experiment, out: &Reporter) -> Result<Outcome, CliError> {
    let flow = &exp.config.flow;
    let eps = flow.epsilon;
    let mut checks = Vec::new();
    let mut gradient = Vec::new();
    let mut run_status = None;
    let mut audit = None;

    let tail = exp.initial.spectral_tail();
    checks.push(Check {
        name: "resolution_guard",
        passed: tail <= RESOLUTION_LIMIT,
        detail: format!("top-octave energy fraction {tail:e} (limit {RESOLUTION_LIMIT:e})"),
    });

    if tail <= RESOLUTION_LIMIT {
        let h = 2e-3;
        let mut ok = true;
        for mode in 0..=2 {
            let a = fd_gradient_check(&exp.initial, eps, mode, h)?;
            let b = fd_gradient_check(&exp.initial, eps, mode, h / 2.0)?;
            ok &= ratio_ok(a, b, GRADIENT_FLOOR);
            gradient.push(GradientRow {
                mode,
                h,
                discrepancy: a,
                discrepancy_half_h: b,
                ratio: a / b,
            });
        }
        checks.push(Check {
            name: "gradient_check",
            passed: ok,
            detail: "central-difference discrepancy decays like h^2 for modes 0, 1, 2".into(),
        });

        let traj = run(&exp.initial, flow)?;
        run_status = Some(traj.status);
        checks.push(Check {
            name: "flow_resolution",
            passed: traj.status != Status::ResolutionLost,
            detail: format!("run ended with {} at t = {}", traj.status, traj.final_time()),
        });
        let rise = if traj.records.len() > 1 {
            relative_energy_increase(&traj)
        } else {
            0.0
        };
        checks.push(Check {
            name: "energy_monotonicity",
            passed: rise <= ENERGY_SLACK,
            detail: format!("largest relative energy increase per step {rise:e}"),
        });
        let turning = traj.records[0].turning_number;
        checks.push(Check {
            name: "turning_number",
            passed: traj.records.iter().all(|r| r.turning_number == turning),
            detail: format!("initial turning number {turning}"),
        });
        let bounds = if traj.records.len() >= 2 {
            Some(bound_audit(&traj)?)
        } else {
            None
        };
        let margin = bounds
            .as_ref()
            .map(|b| b.borsuk_margin_relative)
            .unwrap_or_else(|| traj.records[0].borsuk_margin() / traj.records[0].borsuk_rhs);
        checks.push(Check {
            name: "borsuk_inequality",
            passed: margin >= BORSUK_SLACK,
            detail: format!("smallest relative margin {margin:e}"),
        });

        let audit_cfg = FlowConfig {
            scheme: Scheme::Imex,
            ..flow.clone()
        };
        let dt = stable_dt(&exp.initial, &audit_cfg)?.min(1e-3);
        let identity = identity_refinement(&exp.initial, &audit_cfg, dt, 4)?;
        checks.push(Check {
            name: "identity_audit",
            passed: ratio_ok(identity.coarse.r_kappa, identity.fine.r_kappa, IDENTITY_FLOOR)
                && ratio_ok(identity.coarse.r_int_k2, identity.fine.r_int_k2, IDENTITY_FLOOR),
            detail: format!(
                "dt = {dt:e}: kappa ratio {}, int_k2 ratio {}",
                identity.kappa_ratio, identity.int_k2_ratio
            ),
        });
        audit = Some(AuditReport {
            max_energy_increase: monotonicity_audit(&traj),
            identity: Some(identity),
            borsuk_margin: bounds
                .as_ref()
                .map(|b| b.borsuk_margin)
                .unwrap_or_else(|| traj.records[0].borsuk_margin()),
            borsuk_margin_relative: margin,
            fitted_constants: bounds.map(|b| b.fitted_constants).unwrap_or_default(),
        });
    }

    let failed: Vec<&'static str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    for c in &checks {
        out.say(format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    let report = VerifyReport {
        initial: &exp.descriptor,
        epsilon: eps,
        passed: failed.is_empty(),
        failed: failed.clone(),
        checks,
        gradient,
        run_status,
        audit,
    };
    write(&exp.output_dir, "audit.json", &json(&report))?;
    if failed.is_empty() {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::AuditFailed(failed.into_iter().map(String::from).collect()))
    }
}

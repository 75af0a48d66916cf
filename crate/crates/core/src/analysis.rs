//! Experiments built on the flow: the `ε → 0` convergence study, audits of
//! the evolution identities and a-priori bounds, and the `Q`-doubling probe.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{geometry, sup_distance, DiscreteCurve};
use crate::energy::{apriori_bound_rhs, dt_int_kappa2_rhs_of, dt_kappa_rhs_of, EnergyReport, J_MAX};
use crate::error::{Error, Result};
use crate::flow::{run, run_with_checkpoints, FlowConfig, Snapshot, Status, Trajectory};
use crate::oracle::{eps_radius, mcf_radius};

/// Sup-distance (`d`) and curvature sup-difference (`d_kappa`) of each ε-flow
/// from the mean curvature flow reference, indexed `[epsilon][time]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub initial: String,
    pub epsilons: Vec<f64>,
    pub times: Vec<f64>,
    pub d: Vec<Vec<f64>>,
    pub d_kappa: Vec<Vec<f64>>,
    pub status: Vec<Status>,
    pub reference_status: Status,
}

fn strictly_decreasing_columns(table: &[Vec<f64>], n_times: usize) -> bool {
    (0..n_times).all(|t| table.windows(2).all(|w| w[1][t] < w[0][t]))
}

impl ConvergenceStudy {
    /// Every `d` column shrinks strictly as ε decreases.
    pub fn distances_decreasing(&self) -> bool {
        strictly_decreasing_columns(&self.d, self.times.len())
    }

    pub fn curvature_decreasing(&self) -> bool {
        strictly_decreasing_columns(&self.d_kappa, self.times.len())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("study serializes")
    }
}

fn validate_study_inputs(epsilons: &[f64], times: &[f64]) -> Result<()> {
    if epsilons.is_empty() {
        return Err(Error::Config("epsilon list is empty".into()));
    }
    if times.is_empty() {
        return Err(Error::Config("sample times are empty".into()));
    }
    if epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::Config("every epsilon must lie in (0, 1)".into()));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("epsilon list must be strictly decreasing".into()));
    }
    if times.iter().any(|&t| !(t > 0.0 && t.is_finite())) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("sample times must be positive and strictly increasing".into()));
    }
    Ok(())
}

fn study_config(config: &FlowConfig, epsilon: f64, n_points: usize, t_max: f64) -> FlowConfig {
    FlowConfig {
        epsilon,
        n_points,
        t_max,
        // pure normal flow from the shared parametrization
        reparam_every: 0,
        snapshot_every: 0,
        ..config.clone()
    }
}

/// Runs the reference mean curvature flow (twice the resolution) and one
/// ε-flow per entry of `epsilons`, all from `initial`, and compares them at
/// `times`. The ε-runs execute in parallel.
pub fn convergence_study(
    initial: &DiscreteCurve,
    descriptor: &str,
    epsilons: &[f64],
    times: &[f64],
    config: &FlowConfig,
) -> Result<ConvergenceStudy> {
    validate_study_inputs(epsilons, times)?;
    let n = initial.len();
    let t_last = *times.last().expect("non-empty");

    let fine = initial.resampled(2 * n)?;
    let reference = run_with_checkpoints(&fine, &study_config(config, 0.0, 2 * n, t_last), times)?;
    if reference.checkpoints.len() != times.len() {
        return Err(Error::ReferenceStopped {
            status: reference.status.to_string(),
            t: reference.final_time(),
            needed: t_last,
        });
    }
    let reference_curves: Vec<(DiscreteCurve, Vec<f64>)> = reference
        .checkpoints
        .iter()
        .map(|s| {
            let coarse = DiscreteCurve::new(s.curve.points().iter().step_by(2).copied().collect())?;
            let kappa = geometry(&s.curve)?.kappa.into_iter().step_by(2).collect();
            Ok((coarse, kappa))
        })
        .collect::<Result<_>>()?;

    let runs: Vec<Result<Trajectory>> = epsilons
        .par_iter()
        .map(|&eps| run_with_checkpoints(initial, &study_config(config, eps, n, t_last), times))
        .collect();

    let mut d = Vec::with_capacity(epsilons.len());
    let mut d_kappa = Vec::with_capacity(epsilons.len());
    let mut status = Vec::with_capacity(epsilons.len());
    for (run, &eps) in runs.into_iter().zip(epsilons) {
        let run = run?;
        if run.checkpoints.len() != times.len() {
            return Err(Error::RunStopped {
                epsilon: eps,
                status: run.status.to_string(),
                t: run.final_time(),
                needed: t_last,
            });
        }
        let mut row = Vec::with_capacity(times.len());
        let mut row_k = Vec::with_capacity(times.len());
        for (snap, (ref_curve, ref_kappa)) in run.checkpoints.iter().zip(&reference_curves) {
            row.push(sup_distance(&snap.curve, ref_curve)?);
            let kappa = geometry(&snap.curve)?.kappa;
            row_k.push(kappa.iter().zip(ref_kappa).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        d.push(row);
        d_kappa.push(row_k);
        status.push(run.status);
    }

    Ok(ConvergenceStudy {
        initial: descriptor.to_string(),
        epsilons: epsilons.to_vec(),
        times: times.to_vec(),
        d,
        d_kappa,
        status,
        reference_status: reference.status,
    })
}

/// `|R_ε(t) − R_0(t)|` for circles of radius `r0`, from the radius ODE.
pub fn circle_oracle_gaps(r0: f64, epsilons: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    epsilons
        .iter()
        .map(|&eps| {
            times
                .iter()
                .map(|&t| Ok((eps_radius(r0, eps, t)? - mcf_radius(r0, t)?).abs()))
                .collect()
        })
        .collect()
}

/// Residuals of the `∂_t κ` and `∂_t ∫κ² ds` identities at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    pub t: f64,
    pub dt: f64,
    /// Node-wise sup of `|central difference of κ − ∂_t κ formula|`.
    pub r_kappa: f64,
    pub r_int_k2: f64,
}

/// Compares central time differences across three consecutive snapshots
/// (the ones closest to the middle of the run) with the closed-form right-hand sides.
pub fn identity_audit(trajectory: &Trajectory, epsilon: f64) -> Result<IdentityResiduals> {
    let snaps = &trajectory.snapshots;
    if snaps.len() < 3 {
        return Err(Error::TooFewSamples {
            need: 3,
            got: snaps.len(),
        });
    }
    let t_mid = 0.5 * trajectory.final_time();
    let mid = (1..snaps.len() - 1)
        .min_by(|&a, &b| (snaps[a].t - t_mid).abs().total_cmp(&(snaps[b].t - t_mid).abs()))
        .expect("at least one interior snapshot");
    let (before, here, after): (&Snapshot, &Snapshot, &Snapshot) = (&snaps[mid - 1], &snaps[mid], &snaps[mid + 1]);
    if before.step + 1 != here.step || here.step + 1 != after.step {
        return Err(Error::Window(format!(
            "snapshots at steps {}, {}, {} are not consecutive",
            before.step, here.step, after.step
        )));
    }
    if trajectory
        .reparam_steps
        .iter()
        .any(|&s| s == before.step || s == here.step)
    {
        return Err(Error::Window(format!(
            "reparametrization between steps {} and {}",
            before.step, after.step
        )));
    }
    let dt_a = here.t - before.t;
    let dt_b = after.t - here.t;
    if (dt_a - dt_b).abs() > 1e-12 * dt_a.abs().max(dt_b.abs()) {
        return Err(Error::Window(format!("unequal steps {dt_a} and {dt_b}")));
    }
    let dt = 0.5 * (dt_a + dt_b);

    let g_before = geometry(&before.curve)?;
    let g_here = geometry(&here.curve)?;
    let g_after = geometry(&after.curve)?;
    let rhs = dt_kappa_rhs_of(&g_here, epsilon)?;
    let r_kappa = (0..rhs.len())
        .map(|i| ((g_after.kappa[i] - g_before.kappa[i]) / (2.0 * dt) - rhs[i]).abs())
        .fold(0.0, f64::max);
    let int_k2 = |g: &crate::curve::CurveGeometry| EnergyReport::of(g, epsilon).map(|r| r.int_k2);
    let fd = (int_k2(&g_after)? - int_k2(&g_before)?) / (2.0 * dt);
    let r_int_k2 = (fd - dt_int_kappa2_rhs_of(&g_here, epsilon)?).abs();
    Ok(IdentityResiduals {
        t: here.t,
        dt,
        r_kappa,
        r_int_k2,
    })
}

/// Identity residuals at `dt` and `dt/2` and their ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityRefinement {
    pub coarse: IdentityResiduals,
    pub fine: IdentityResiduals,
    pub kappa_ratio: f64,
    pub int_k2_ratio: f64,
}

/// Runs `steps` fixed steps of size `dt` and `2·steps` of size `dt/2` with
/// every step stored and no reparametrization, then audits both runs at the
/// same middle time.
pub fn identity_refinement(
    initial: &DiscreteCurve,
    config: &FlowConfig,
    dt: f64,
    steps: usize,
) -> Result<IdentityRefinement> {
    if steps < 2 || steps % 2 != 0 {
        return Err(Error::Config(format!("audit window needs an even step count >= 2, got {steps}")));
    }
    let audit = |h: f64, count: usize| -> Result<IdentityResiduals> {
        let cfg = FlowConfig {
            fixed_dt: Some(h),
            t_max: h * count as f64,
            snapshot_every: 1,
            reparam_every: 0,
            ..config.clone()
        };
        let traj = run(initial, &cfg)?;
        if traj.status != Status::ReachedTmax {
            return Err(Error::Window(format!("audit run ended with {}", traj.status)));
        }
        identity_audit(&traj, config.epsilon)
    };
    let coarse = audit(dt, steps)?;
    let fine = audit(dt / 2.0, 2 * steps)?;
    Ok(IdentityRefinement {
        coarse,
        fine,
        kappa_ratio: coarse.r_kappa / fine.r_kappa,
        int_k2_ratio: coarse.r_int_k2 / fine.r_int_k2,
    })
}

/// Largest step-to-step increase of `G^ε` (negative when the energy strictly decreases).
pub fn monotonicity_audit(trajectory: &Trajectory) -> f64 {
    trajectory
        .records
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest step-to-step increase of `G^ε` relative to the energy before the step.
pub fn relative_energy_increase(trajectory: &Trajectory) -> f64 {
    trajectory
        .records
        .windows(2)
        .map(|w| (w[1].energy - w[0].energy) / w[0].energy.abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAudit {
    /// Empirical constants for `j = 0..=J_MAX`.
    pub fitted_constants: Vec<f64>,
    pub borsuk_margin: f64,
    /// Smallest `(borsuk_rhs − borsuk_lhs) / borsuk_rhs` over the run.
    pub borsuk_margin_relative: f64,
}

/// Fits `Ĉ_j = max (ΔQ_j/Δt) / (x^{2j+3} + x^{2j+5} + 1)` with `x = ∫κ² ds`,
/// and the smallest Borsuk margin over the run.
pub fn bound_audit(trajectory: &Trajectory) -> Result<BoundAudit> {
    let recs = &trajectory.records;
    if recs.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: recs.len(),
        });
    }
    let mut fitted = vec![f64::NEG_INFINITY; J_MAX + 1];
    for w in recs.windows(2) {
        let dt = w[1].t - w[0].t;
        for (j, c) in fitted.iter_mut().enumerate() {
            let quotient = (w[1].q(j) - w[0].q(j)) / dt;
            *c = c.max(quotient / apriori_bound_rhs(w[0].int_k2, j)?);
        }
    }
    let borsuk_margin = recs.iter().map(|r| r.borsuk_margin()).fold(f64::INFINITY, f64::min);
    let borsuk_margin_relative = recs
        .iter()
        .map(|r| r.borsuk_margin() / r.borsuk_rhs)
        .fold(f64::INFINITY, f64::min);
    Ok(BoundAudit {
        fitted_constants: fitted,
        borsuk_margin,
        borsuk_margin_relative,
    })
}

/// Aggregate of the audits on one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub max_energy_increase: f64,
    pub identity: Option<IdentityRefinement>,
    pub borsuk_margin: f64,
    pub borsuk_margin_relative: f64,
    pub fitted_constants: Vec<f64>,
}

/// First time at which `∫(1 + (∂_sκ)² + κ⁴) ds` reaches twice its initial
/// value, linearly interpolated between steps; `t_max` if it never does.
pub fn q_doubling_probe(initial: &DiscreteCurve, epsilon: f64, config: &FlowConfig) -> Result<f64> {
    let cfg = FlowConfig {
        epsilon,
        ..config.clone()
    };
    let traj = run(initial, &cfg)?;
    Ok(q_doubling_time(&traj, cfg.t_max))
}

pub fn q_doubling_time(trajectory: &Trajectory, t_max: f64) -> f64 {
    let recs = &trajectory.records;
    let target = 2.0 * recs[0].q_combined();
    for w in recs.windows(2) {
        let (a, b) = (w[0].q_combined(), w[1].q_combined());
        if b >= target {
            let frac = if b > a { (target - a) / (b - a) } else { 1.0 };
            return w[0].t + frac.clamp(0.0, 1.0) * (w[1].t - w[0].t);
        }
    }
    if trajectory.status == Status::ReachedTmax {
        t_max
    } else {
        trajectory.final_time()
    }
}

//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! straight to stderr, so the report shows up without `--nocapture`; the test
//! fails if any criterion fails.

use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use epsflow::analysis::{circle_oracle_gaps, convergence_study, identity_refinement, relative_energy_increase};
use epsflow::energy::{energy_report, EnergyReport};
use epsflow::oracle::{eps_radius, fd_gradient_check, mcf_radius};
use epsflow::{make_circle, make_ellipse, run, DiscreteCurve, FlowConfig, Scheme, Status, Trajectory};

type Outcome = Result<String, String>;

/// Runs kept for the whole-suite checks, tagged with whether the initial curve is a circle.
#[derive(Default)]
struct Runs {
    all: Vec<(String, bool, Trajectory)>,
}

impl Runs {
    fn keep(&mut self, name: impl Into<String>, circle: bool, traj: Trajectory) -> &Trajectory {
        self.all.push((name.into(), circle, traj));
        &self.all.last().unwrap().2
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn radius_error(traj: &Trajectory, oracle: impl Fn(f64) -> f64) -> f64 {
    traj.records
        .iter()
        .map(|r| (r.length / (2.0 * PI) / oracle(r.t) - 1.0).abs())
        .fold(0.0, f64::max)
}

fn circle_mcf(runs: &mut Runs) -> Outcome {
    let start = Instant::now();
    let cfg = FlowConfig {
        t_max: 0.45,
        ..FlowConfig::default()
    };
    let traj = ok(run(&ok(make_circle(1.0, 256))?, &cfg))?;
    let elapsed = start.elapsed().as_secs_f64();
    let traj = runs.keep("circle mcf", true, traj);
    ensure(traj.status == Status::ReachedTmax, || format!("run ended with {}", traj.status))?;
    let err = radius_error(traj, |t| mcf_radius(1.0, t).unwrap());
    ensure(err <= 1e-4, || format!("radius error {err:e}"))?;
    ensure(elapsed < 10.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!("max relative radius error {err:.2e} over {} steps in {elapsed:.2} s", traj.records.len() - 1))
}

fn circle_eps(runs: &mut Runs) -> Outcome {
    let mut worst: f64 = 0.0;
    for (eps, scheme) in [(1e-3, Scheme::ExplicitRk4), (1e-2, Scheme::Imex)] {
        let cfg = FlowConfig {
            epsilon: eps,
            scheme,
            t_max: 0.4,
            ..FlowConfig::default()
        };
        let traj = ok(run(&ok(make_circle(1.0, 256))?, &cfg))?;
        let traj = runs.keep(format!("circle eps={eps}"), true, traj);
        ensure(traj.status == Status::ReachedTmax, || format!("eps {eps}: {}", traj.status))?;
        let stride = (traj.records.len() / 400).max(1);
        for r in traj.records.iter().step_by(stride).chain(traj.records.last()) {
            let exact = ok(eps_radius(1.0, eps, r.t))?;
            let e = (r.length / (2.0 * PI) / exact - 1.0).abs();
            worst = worst.max(e);
            ensure(e <= 1e-4, || format!("eps {eps}, t = {}: relative error {e:e}", r.t))?;
        }
    }
    let cfg = FlowConfig {
        epsilon: 0.01,
        n_points: 128,
        scheme: Scheme::Imex,
        cfl_second: 5.0,
        t_max: 5.0,
        ..FlowConfig::default()
    };
    let traj = ok(run(&ok(make_circle(0.05, 128))?, &cfg))?;
    let traj = runs.keep("equilibrium", true, traj);
    let r = traj.final_state.diagnostics.length / (2.0 * PI);
    ensure((r - 0.1).abs() <= 1e-3, || format!("equilibrium radius {r}"))?;
    Ok(format!("max relative error vs ODE {worst:.2e}; R(5) = {r:.12} for R0 = 0.05, eps = 0.01"))
}

fn gradient_consistency() -> Outcome {
    const FLOOR: f64 = 1e-9;
    let circle = ok(make_circle(1.0, 64))?;
    let ellipse = ok(make_ellipse(2.0, 1.0, 128))?;
    let mut ratios = Vec::new();
    let mut degenerate = 0;
    for (name, curve) in [("circle", &circle), ("ellipse", &ellipse)] {
        for eps in [0.0, 0.1] {
            for m in 0..3 {
                let a = ok(fd_gradient_check(curve, eps, m, 2e-3))?;
                let b = ok(fd_gradient_check(curve, eps, m, 1e-3))?;
                if a <= FLOOR && b <= FLOOR {
                    degenerate += 1;
                    continue;
                }
                let ratio = a / b;
                ensure((3.5..=4.5).contains(&ratio), || {
                    format!("{name}, eps {eps}, m {m}: ratio {ratio} ({a:e} -> {b:e})")
                })?;
                ratios.push(ratio);
            }
        }
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    Ok(format!(
        "{} cases with ratio in [{lo:.3}, {hi:.3}]; {degenerate} cases with identically vanishing h^2 term (roundoff only)",
        ratios.len()
    ))
}

fn identity_audits() -> Outcome {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut check = |label: &str, curve: &DiscreteCurve, cfg: &FlowConfig, dt: f64| -> Result<(), String> {
        let r = ok(identity_refinement(curve, cfg, dt, 4))?;
        for ratio in [r.kappa_ratio, r.int_k2_ratio] {
            ensure((3.5..=4.5).contains(&ratio), || format!("{label}: {r:?}"))?;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        Ok(())
    };
    let circle = ok(make_circle(1.0, 64))?;
    for eps in [0.0, 0.1] {
        for scheme in [Scheme::ExplicitRk4, Scheme::Imex] {
            let cfg = FlowConfig {
                epsilon: eps,
                n_points: 64,
                scheme,
                ..FlowConfig::default()
            };
            check(&format!("circle eps={eps} {scheme:?}"), &circle, &cfg, 1e-3)?;
        }
    }
    let ellipse = ok(make_ellipse(2.0, 1.0, 256))?;
    check("ellipse eps=0", &ellipse, &FlowConfig::default(), 1e-4)?;
    let stiff = FlowConfig {
        epsilon: 0.1,
        scheme: Scheme::Imex,
        ..FlowConfig::default()
    };
    check("ellipse eps=0.1", &ellipse, &stiff, 1e-5)?;
    let r = ok(identity_refinement(&ok(make_circle(1.0, 256))?, &FlowConfig::default(), 1e-4, 4))?;
    ensure(r.coarse.r_int_k2 < 1e-5, || format!("circle int_k2 residual {:e}", r.coarse.r_int_k2))?;
    Ok(format!(
        "dt-halving ratios in [{lo:.3}, {hi:.3}]; circle int_k2 residual {:.2e} at dt = 1e-4",
        r.coarse.r_int_k2
    ))
}

fn wobbly(n: usize) -> Result<DiscreteCurve, String> {
    ok(DiscreteCurve::from_fn(n, |x| {
        let r = 1.0 + 0.1 * (3.0 * x).cos() + 0.05 * (5.0 * x + 1.0).sin();
        [r * x.cos(), r * x.sin()]
    }))
}

/// Extra runs for the suite-wide checks: non-circular data, both schemes, reparametrization on.
fn extra_runs(runs: &mut Runs) -> Result<(), String> {
    let cases = [
        ("ellipse mcf", ok(make_ellipse(2.0, 1.0, 256))?, 0.0, Scheme::ExplicitRk4, 0.3),
        ("ellipse eps=1e-3", ok(make_ellipse(2.0, 1.0, 256))?, 1e-3, Scheme::ExplicitRk4, 0.1),
        ("ellipse eps=1e-2", ok(make_ellipse(2.0, 1.0, 256))?, 1e-2, Scheme::Imex, 0.3),
        ("wobbly mcf", wobbly(128)?, 0.0, Scheme::ExplicitRk4, 0.2),
        ("wobbly eps=0.1", wobbly(128)?, 0.1, Scheme::Imex, 0.2),
    ];
    for (name, curve, eps, scheme, t_max) in cases {
        let cfg = FlowConfig {
            epsilon: eps,
            n_points: curve.len(),
            scheme,
            t_max,
            ..FlowConfig::default()
        };
        let traj = ok(run(&curve, &cfg))?;
        ensure(traj.status == Status::ReachedTmax, || format!("{name}: {}", traj.status))?;
        runs.keep(name, false, traj);
    }
    Ok(())
}

fn energy_monotonicity(runs: &Runs) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for (name, _, traj) in &runs.all {
        let rise = relative_energy_increase(traj);
        ensure(rise <= 1e-9, || format!("{name}: relative increase {rise:e}"))?;
        worst = worst.max(rise);
    }
    Ok(format!("{} runs; largest relative per-step change {worst:.2e}", runs.all.len()))
}

fn borsuk(runs: &Runs) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut circle_dev: f64 = 0.0;
    let mut curves = 0;
    for (name, circle, traj) in &runs.all {
        for r in &traj.records {
            let rel = r.borsuk_margin() / r.borsuk_rhs;
            ensure(rel >= -1e-6, || format!("{name}, t = {}: margin {rel:e}", r.t))?;
            worst = worst.min(rel);
            if *circle {
                circle_dev = circle_dev.max(rel.abs());
            }
            curves += 1;
        }
    }
    ensure(circle_dev <= 1e-8, || format!("circle equality off by {circle_dev:e}"))?;
    Ok(format!(
        "{curves} curves; smallest relative margin {worst:.2e}; circles equal within {circle_dev:.2e}"
    ))
}

fn main_theorem() -> Outcome {
    let start = Instant::now();
    let eps = [1e-2, 1e-3, 1e-4];
    let cfg = FlowConfig::default();
    let circle_times = [0.1, 0.25];
    let circle = ok(convergence_study(&ok(make_circle(1.0, 256))?, "circle", &eps, &circle_times, &cfg))?;
    let ellipse = ok(convergence_study(&ok(make_ellipse(2.0, 1.0, 256))?, "ellipse", &eps, &[0.05, 0.1], &cfg))?;
    for s in [&circle, &ellipse] {
        ensure(s.distances_decreasing(), || format!("{}: d not decreasing {:?}", s.initial, s.d))?;
        ensure(s.curvature_decreasing(), || format!("{}: d_kappa not decreasing {:?}", s.initial, s.d_kappa))?;
    }
    let gaps = ok(circle_oracle_gaps(1.0, &eps, &circle_times))?;
    let mut oracle_dev: f64 = 0.0;
    for (row, gap_row) in circle.d.iter().zip(&gaps) {
        for (d, g) in row.iter().zip(gap_row) {
            oracle_dev = oracle_dev.max((d - g).abs());
        }
    }
    ensure(oracle_dev <= 2e-3, || format!("circle d off oracle gaps by {oracle_dev:e}"))?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 300.0, || format!("took {elapsed:.0} s"))?;
    Ok(format!(
        "columns strictly decreasing; circle d[1e-4] = {:?}; ellipse d[1e-4] = {:?}; oracle deviation {oracle_dev:.2e}; {elapsed:.1} s",
        circle.d[2], ellipse.d[2]
    ))
}

fn scalars(r: &EnergyReport) -> Vec<f64> {
    let mut v = vec![r.length, r.total_energy, r.int_k2, r.int_k4, r.max_abs_kappa, r.borsuk_lhs, r.borsuk_rhs];
    v.extend_from_slice(&r.q_norms);
    v
}

fn structural(runs: &Runs) -> Outcome {
    for (name, _, traj) in &runs.all {
        let t0 = traj.records[0].turning_number;
        ensure(traj.records.iter().all(|r| r.turning_number == t0), || {
            format!("{name}: turning number changed")
        })?;
    }
    let mut curves: Vec<(String, DiscreteCurve)> = vec![
        ("ellipse".into(), ok(make_ellipse(2.0, 1.0, 128))?),
        ("wobbly".into(), wobbly(128)?),
    ];
    curves.extend(runs.all.iter().map(|(name, _, t)| (format!("final {name}"), t.final_state.curve.clone())));
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    for (name, c) in &curves {
        for eps in [0.0, 1e-2, 0.1] {
            let base = scalars(&ok(energy_report(c, eps))?);
            for (angle, dx, dy) in [(0.7, 3.0, -2.0), (-2.9, -10.0, 4.5), (PI / 2.0, 0.0, 0.0)] {
                let moved = scalars(&ok(energy_report(&c.rotated(angle).translated(dx, dy), eps))?);
                for (k, (a, b)) in base.iter().zip(&moved).enumerate() {
                    let dev = (a - b).abs() / a.abs().max(1.0);
                    if dev > worst {
                        worst = dev;
                        worst_at = format!("{name}, eps {eps}, scalar #{k}: {a} vs {b}");
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-10, || format!("rigid-motion deviation {worst:e} ({worst_at})"))?;
    Ok(format!(
        "turning number constant on {} runs; rigid-motion deviation {worst:.2e} on {} curves",
        runs.all.len(),
        curves.len()
    ))
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let work = ok(tempfile::tempdir())?;
    let configs = [
        (
            "simulate",
            r#"{"initial": {"kind": "ellipse", "a": 2, "b": 1}, "flow": {"epsilon": 0.01, "n_points": 64, "t_max": 0.05, "snapshot_every": 25}}"#,
        ),
        (
            "verify",
            r#"{"initial": {"kind": "circle"}, "flow": {"epsilon": 0.1, "n_points": 32, "t_max": 0.05}}"#,
        ),
        (
            "study",
            r#"{"initial": {"kind": "circle"}, "flow": {"n_points": 64}, "epsilon_list": [0.01, 0.001], "sample_times": [0.05]}"#,
        ),
        (
            "sweep",
            r#"{"initial": {"kind": "circle"}, "flow": {"n_points": 32, "t_max": 0.05}, "epsilon_list": [0.0, 0.01]}"#,
        ),
    ];
    let mut files = 0;
    for (command, body) in configs {
        let cfg = work.path().join(format!("{command}.json"));
        ok(std::fs::write(&cfg, body))?;
        let mut trees = Vec::new();
        for rep in 0..2 {
            let out = work.path().join(format!("{command}-{rep}"));
            let status = ok(Command::new(env!("CARGO_BIN_EXE_epsflow"))
                .arg(command)
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .arg("--quiet")
                .status())?;
            ensure(status.code() == Some(0), || format!("{command} exited with {status}"))?;
            trees.push(read_tree(&out));
        }
        ensure(!trees[0].is_empty(), || format!("{command} wrote nothing"))?;
        ensure(trees[0] == trees[1], || format!("{command} outputs differ between invocations"))?;
        files += trees[0].len();
    }
    Ok(format!("{files} output files byte-identical across repeated invocations"))
}

#[test]
fn acceptance() {
    let mut runs = Runs::default();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "circle MCF fidelity", circle_mcf(&mut runs)));
    results.push((2, "circle eps-flow fidelity and equilibrium", circle_eps(&mut runs)));
    results.push((3, "gradient consistency", gradient_consistency()));
    results.push((4, "identity audits", identity_audits()));
    let extra = extra_runs(&mut runs);
    let suite = |o: Outcome| match &extra {
        Ok(()) => o,
        Err(e) => Err(format!("extra run failed: {e}")),
    };
    results.push((5, "energy monotonicity", suite(energy_monotonicity(&runs))));
    results.push((6, "Borsuk inequality", suite(borsuk(&runs))));
    results.push((7, "convergence as eps -> 0", main_theorem()));
    results.push((8, "structural conservation", suite(structural(&runs))));
    results.push((9, "determinism", determinism()));

    let mut failed = Vec::new();
    let mut report = String::new();
    for (id, name, outcome) in &results {
        match outcome {
            Ok(detail) => report.push_str(&format!("PASS criterion {id} ({name}): {detail}\n")),
            Err(why) => {
                report.push_str(&format!("FAIL criterion {id} ({name}): {why}\n"));
                failed.push(*id);
            }
        }
    }
    // the handle bypasses the test harness's output capture
    let _ = std::io::stderr().write_all(report.as_bytes());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

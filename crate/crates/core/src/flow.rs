//! Time integration of `∂_t γ = −E^ε ν`.
//!
//! Two schemes are available. `ExplicitRk4` is the classical four-stage
//! update with `E^ε` recomputed at every stage. `Imex` is the ARS(2,2,2)
//! implicit–explicit Runge–Kutta pair: the constant-coefficient operator
//! `2ε ḡ⁻⁴ ∂_x⁴` (ḡ the smallest metric value) is solved exactly in Fourier space and
//! the remainder is explicit.
//!
//! The velocity is truncated to `|k| ≤ N/5` before it is applied, which keeps
//! the fixed CFL factors inside the stability region of both schemes; the
//! state is truncated to the same band after every step. Nodes
//! only move normally, so they drift along the curve; [`reparametrize`]
//! redistributes them uniformly in arclength every `reparam_every` steps.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{geometry, geometry_from_spectrum, CurveGeometry, DiscreteCurve};
use crate::energy::{first_variation_of, EnergyReport};
use crate::error::{Error, Result};
use crate::spectral;

/// Lower bound on ε in the fourth-order time-step bound.
pub const EPSILON_FLOOR: f64 = 1e-12;

/// Relative length change tolerated by [`reparametrize`].
pub const REPARAM_LENGTH_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ExplicitRk4,
    Imex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub epsilon: f64,
    pub n_points: usize,
    pub scheme: Scheme,
    pub cfl_second: f64,
    pub cfl_fourth: f64,
    /// Steps between reparametrizations; 0 disables them.
    pub reparam_every: usize,
    pub t_max: f64,
    pub stop_max_kappa: f64,
    pub stop_min_length: f64,
    /// Steps between stored curve snapshots; 0 stores none besides the initial curve.
    pub snapshot_every: usize,
    /// Overrides the CFL rule with a constant step.
    pub fixed_dt: Option<f64>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            n_points: 256,
            scheme: Scheme::ExplicitRk4,
            cfl_second: 0.4,
            cfl_fourth: 0.2,
            reparam_every: 20,
            t_max: 1.0,
            stop_max_kappa: 500.0,
            stop_min_length: 1e-3,
            snapshot_every: 0,
            fixed_dt: None,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if self.n_points < 16 || !self.n_points.is_power_of_two() {
            return bad(format!("n_points must be a power of two >= 16, got {}", self.n_points));
        }
        for (name, v) in [
            ("cfl_second", self.cfl_second),
            ("cfl_fourth", self.cfl_fourth),
            ("t_max", self.t_max),
            ("stop_max_kappa", self.stop_max_kappa),
            ("stop_min_length", self.stop_min_length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return bad(format!("fixed_dt must be positive, got {dt}"));
            }
        }
        Ok(())
    }
}

/// Per-step scalar diagnostics, derived from [`EnergyReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub length: f64,
    pub energy: f64,
    pub int_k2: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub max_abs_kappa: f64,
    pub turning_number: i64,
    pub int_k4: f64,
    pub borsuk_lhs: f64,
    pub borsuk_rhs: f64,
}

/// Header of the diagnostics stream.
pub const DIAGNOSTICS_HEADER: &str = "t,dt,L,energy,int_k2,q1,q2,q3,q4,max_kappa,turning";

impl DiagnosticsRecord {
    pub fn from_report(report: &EnergyReport, turning_number: i64, t: f64, dt: f64) -> Self {
        Self {
            t,
            dt,
            length: report.length,
            energy: report.total_energy,
            int_k2: report.int_k2,
            q1: report.q_norms[1],
            q2: report.q_norms[2],
            q3: report.q_norms[3],
            q4: report.q_norms[4],
            max_abs_kappa: report.max_abs_kappa,
            turning_number,
            int_k4: report.int_k4,
            borsuk_lhs: report.borsuk_lhs,
            borsuk_rhs: report.borsuk_rhs,
        }
    }

    pub fn measure(geom: &CurveGeometry, epsilon: f64, t: f64, dt: f64) -> Result<Self> {
        let report = EnergyReport::of(geom, epsilon)?;
        Ok(Self::from_report(&report, geom.turning_number()?, t, dt))
    }

    /// `Q_j` for `j = 0..=4`.
    pub fn q(&self, j: usize) -> f64 {
        [self.int_k2, self.q1, self.q2, self.q3, self.q4][j]
    }

    /// `∫(1 + (∂_sκ)² + κ⁴) ds`.
    pub fn q_combined(&self) -> f64 {
        self.length + self.q1 + self.int_k4
    }

    pub fn borsuk_margin(&self) -> f64 {
        self.borsuk_rhs - self.borsuk_lhs
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.dt,
            self.length,
            self.energy,
            self.int_k2,
            self.q1,
            self.q2,
            self.q3,
            self.q4,
            self.max_abs_kappa,
            self.turning_number
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub curve: DiscreteCurve,
    pub t: f64,
    pub step_index: usize,
    pub dt_last: f64,
    pub diagnostics: DiagnosticsRecord,
}

impl FlowState {
    pub fn new(curve: DiscreteCurve, epsilon: f64) -> Result<Self> {
        let geom = geometry(&curve)?;
        let diagnostics = DiagnosticsRecord::measure(&geom, epsilon, 0.0, 0.0)?;
        Ok(Self {
            curve,
            t: 0.0,
            step_index: 0,
            dt_last: 0.0,
            diagnostics,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    ReachedTmax,
    SingularityKappa,
    SingularityLength,
    ResolutionLost,
}

impl Status {
    pub fn is_singularity(self) -> bool {
        matches!(self, Status::SingularityKappa | Status::SingularityLength)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::ReachedTmax => "reached_tmax",
            Status::SingularityKappa => "singularity_kappa",
            Status::SingularityLength => "singularity_length",
            Status::ResolutionLost => "resolution_lost",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub curve: DiscreteCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub epsilon: f64,
    /// One record per accepted step, starting with the initial curve at `t = 0`.
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
    /// Curves at the requested checkpoint times that were reached.
    pub checkpoints: Vec<Snapshot>,
    /// Step indices after which the curve was reparametrized.
    pub reparam_steps: Vec<usize>,
    pub status: Status,
    pub final_state: FlowState,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.final_state.t
    }

    pub fn checkpoint(&self, t: f64) -> Option<&Snapshot> {
        self.checkpoints.iter().find(|s| s.t == t)
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 200);
        out.push_str(DIAGNOSTICS_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}", r.csv_row());
        }
        out
    }
}

/// CFL-limited step for the current curve.
pub fn stable_dt(curve: &DiscreteCurve, config: &FlowConfig) -> Result<f64> {
    let geom = geometry(curve)?;
    stable_dt_for(&geom, config)
}

pub(crate) fn stable_dt_for(geom: &CurveGeometry, config: &FlowConfig) -> Result<f64> {
    let h = geom.min_spacing();
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Degenerate(0, 0));
    }
    let second = config.cfl_second * h * h;
    Ok(match config.scheme {
        Scheme::ExplicitRk4 => {
            let fourth = config.cfl_fourth * h.powi(4) / config.epsilon.max(EPSILON_FLOOR);
            second.min(fourth)
        }
        Scheme::Imex => second,
    })
}

fn velocity_cutoff(n: usize) -> usize {
    n / 5
}

fn to_points(z: &[Complex64]) -> Vec<[f64; 2]> {
    z.iter().map(|c| [c.re, c.im]).collect()
}

/// Spectrum of the filtered velocity `−E ν` at the curve with spectrum `spec`.
fn velocity_spectrum(spec: &[Complex64], epsilon: f64) -> Result<Vec<Complex64>> {
    let geom = geometry_from_spectrum(spec)?;
    let e = first_variation_of(&geom, epsilon)?;
    let mut v: Vec<Complex64> = e
        .iter()
        .zip(&geom.normal)
        .map(|(e, nu)| Complex64::new(-e * nu[0], -e * nu[1]))
        .collect();
    if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFinite("normal velocity"));
    }
    spectral::forward(&mut v);
    spectral::truncate(&mut v, velocity_cutoff(spec.len()));
    Ok(v)
}

fn inverse_points(spec: &[Complex64]) -> Vec<[f64; 2]> {
    let mut z = spec.to_vec();
    spectral::inverse(&mut z);
    to_points(&z)
}

fn axpy(base: &[Complex64], terms: &[(f64, &[Complex64])]) -> Vec<Complex64> {
    let mut out = base.to_vec();
    for (w, v) in terms {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += x * *w;
        }
    }
    out
}

fn rk4_update(spec: &[Complex64], epsilon: f64, dt: f64) -> Result<Vec<Complex64>> {
    let k1 = velocity_spectrum(spec, epsilon)?;
    let k2 = velocity_spectrum(&axpy(spec, &[(0.5 * dt, &k1)]), epsilon)?;
    let k3 = velocity_spectrum(&axpy(spec, &[(0.5 * dt, &k2)]), epsilon)?;
    let k4 = velocity_spectrum(&axpy(spec, &[(dt, &k3)]), epsilon)?;
    Ok(axpy(
        spec,
        &[(dt / 6.0, &k1), (dt / 3.0, &k2), (dt / 3.0, &k3), (dt / 6.0, &k4)],
    ))
}

fn imex_update(spec: &[Complex64], epsilon: f64, dt: f64, metric: f64) -> Result<Vec<Complex64>> {
    let n = spec.len();
    let gamma = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    let delta = 1.0 - 1.0 / (2.0 * gamma);
    let symbol: Vec<f64> = (0..n)
        .map(|i| 2.0 * epsilon * spectral::wavenumber(i, n).powi(4) / metric.powi(4))
        .collect();
    // explicit part: filtered (−Eν + L γ)
    let explicit = |s: &[Complex64]| -> Result<Vec<Complex64>> {
        let mut v = velocity_spectrum(s, epsilon)?;
        let cutoff = velocity_cutoff(n);
        for (i, (v, c)) in v.iter_mut().zip(s).enumerate() {
            if i != n / 2 && spectral::wavenumber(i, n).abs() <= cutoff as f64 {
                *v += c * symbol[i];
            }
        }
        Ok(v)
    };
    let solve = |rhs: &mut [Complex64]| {
        for (r, l) in rhs.iter_mut().zip(&symbol) {
            *r /= 1.0 + dt * gamma * l;
        }
    };
    let n1 = explicit(spec)?;
    let mut y2 = axpy(spec, &[(dt * gamma, &n1)]);
    solve(&mut y2);
    let n2 = explicit(&y2)?;
    let ly2: Vec<Complex64> = y2.iter().zip(&symbol).map(|(c, l)| c * *l).collect();
    let mut y3 = axpy(
        spec,
        &[(dt * delta, &n1), (dt * (1.0 - delta), &n2), (-dt * (1.0 - gamma), &ly2)],
    );
    solve(&mut y3);
    Ok(y3)
}

fn advance(curve: &DiscreteCurve, geom: &CurveGeometry, config: &FlowConfig, dt: f64) -> Result<DiscreteCurve> {
    let spec = spectral::spectrum_of_points(curve.points());
    let mut next = match config.scheme {
        Scheme::ExplicitRk4 => rk4_update(&spec, config.epsilon, dt)?,
        Scheme::Imex => imex_update(&spec, config.epsilon, dt, geom.metric.iter().copied().fold(f64::INFINITY, f64::min))?,
    };
    // modes above the velocity band never move; drop what reparametrization and roundoff leave there
    let cutoff = velocity_cutoff(next.len());
    spectral::truncate(&mut next, cutoff);
    DiscreteCurve::new(inverse_points(&next))
}

/// Advances `state` by one step of size `dt`.
pub fn step_with_dt(state: &FlowState, config: &FlowConfig, dt: f64) -> Result<FlowState> {
    let geom = geometry(&state.curve)?;
    Ok(step_from(state, &geom, config, dt)?.0)
}

fn step_from(state: &FlowState, geom: &CurveGeometry, config: &FlowConfig, dt: f64) -> Result<(FlowState, CurveGeometry)> {
    let curve = advance(&state.curve, geom, config, dt)?;
    let t = state.t + dt;
    let new_geom = geometry(&curve)?;
    let diagnostics = DiagnosticsRecord::measure(&new_geom, config.epsilon, t, dt)?;
    let next = FlowState {
        curve,
        t,
        step_index: state.step_index + 1,
        dt_last: dt,
        diagnostics,
    };
    Ok((next, new_geom))
}

/// One step at the configured (or CFL-limited) time step.
pub fn step(state: &FlowState, config: &FlowConfig) -> Result<FlowState> {
    let dt = match config.fixed_dt {
        Some(dt) => dt,
        None => stable_dt(&state.curve, config)?,
    };
    step_with_dt(state, config, dt)
}

/// Arclength along the interpolant, `s(x) = (L/2π) x + Σ_{k≠0} ĝ_k (e^{ikx} − 1)/(ik N)`,
/// together with its derivative, the interpolated metric.
struct ArclengthMap {
    n: usize,
    length: f64,
    offset: f64,
    integral: Vec<Complex64>,
    metric: Vec<Complex64>,
}

impl ArclengthMap {
    fn new(metric_samples: &[f64], length: f64) -> Self {
        let n = metric_samples.len();
        let spec = spectral::spectrum_of_real(metric_samples);
        let scale = 1.0 / n as f64;
        let mut integral = vec![Complex64::new(0.0, 0.0); n];
        let mut metric = vec![Complex64::new(0.0, 0.0); n];
        for (i, c) in spec.iter().enumerate() {
            metric[i] = c * scale;
            if i != 0 && i != n / 2 {
                integral[i] = c * scale / Complex64::new(0.0, spectral::wavenumber(i, n));
            }
        }
        // the Nyquist term of g is c cos(Nx/2); its integral is c sin(Nx/2)/(N/2)
        integral[n / 2] = Complex64::new(0.0, -1.0) * spec[n / 2] * scale / (n / 2) as f64;
        metric[n / 2] = spec[n / 2] * scale;
        let offset = integral.iter().map(|c| c.re).sum::<f64>();
        Self {
            n,
            length,
            offset,
            integral,
            metric,
        }
    }

    /// `(s(x), g(x))` given the phase table of `x`.
    fn eval(&self, x: f64, ph: &[Complex64]) -> (f64, f64) {
        let n = self.n;
        let mut s = self.length * x / (2.0 * PI) - self.offset;
        let mut g = self.metric[0].re;
        for k in 1..n / 2 {
            let (p, q) = (ph[k], ph[k].conj());
            s += (self.integral[k] * p + self.integral[n - k] * q).re;
            g += (self.metric[k] * p + self.metric[n - k] * q).re;
        }
        s += (self.integral[n / 2] * ph[n / 2]).re;
        g += self.metric[n / 2].re * ph[n / 2].re;
        (s, g)
    }
}

/// Redistributes the nodes uniformly in arclength along the trigonometric
/// interpolant, keeping node 0 fixed.
pub fn reparametrize(curve: &DiscreteCurve) -> Result<DiscreteCurve> {
    let n = curve.len();
    let spec = spectral::spectrum_of_points(curve.points());
    let geom = geometry_from_spectrum(&spec)?;
    let length = geom.length;
    let map = ArclengthMap::new(&geom.metric, length);
    let cell = 2.0 * PI / n as f64;

    let mut points = Vec::with_capacity(n);
    points.push(curve.points()[0]);
    let mut x = 0.0;
    for j in 1..n {
        let target = length * j as f64 / n as f64;
        x += cell;
        let mut ph = spectral::phases(x, n);
        for _ in 0..50 {
            let (s, g) = map.eval(x, &ph);
            if !(g > 0.0) {
                return Err(Error::Degenerate(j, j));
            }
            let dx = (s - target) / g;
            x -= dx;
            ph = spectral::phases(x, n);
            if dx.abs() < 1e-13 {
                break;
            }
        }
        let z = spectral::evaluate_with(&spec, &ph, 0);
        points.push([z.re, z.im]);
    }
    let out = DiscreteCurve::new(points)?;
    let new_length = geometry(&out)?.length;
    let rel = (new_length - length).abs() / length;
    if !(rel < REPARAM_LENGTH_TOLERANCE) {
        return Err(Error::Underresolved {
            tail: rel,
            limit: REPARAM_LENGTH_TOLERANCE,
        });
    }
    Ok(out)
}

fn stop_reason(d: &DiagnosticsRecord, initial_length: f64, config: &FlowConfig) -> Option<Status> {
    if d.max_abs_kappa * initial_length > config.stop_max_kappa {
        Some(Status::SingularityKappa)
    } else if d.length < config.stop_min_length {
        Some(Status::SingularityLength)
    } else {
        None
    }
}

/// Runs the flow until `t_max` or a stop condition.
pub fn run(initial: &DiscreteCurve, config: &FlowConfig) -> Result<Trajectory> {
    run_with_checkpoints(initial, config, &[])
}

/// Like [`run`], but lands exactly on each time in `checkpoints` and stores the curve there.
pub fn run_with_checkpoints(initial: &DiscreteCurve, config: &FlowConfig, checkpoints: &[f64]) -> Result<Trajectory> {
    config.validate()?;
    if initial.len() != config.n_points {
        return Err(Error::Config(format!(
            "initial curve has {} nodes, config expects {}",
            initial.len(),
            config.n_points
        )));
    }
    let mut marks: Vec<f64> = checkpoints
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t <= config.t_max)
        .collect();
    marks.sort_by(f64::total_cmp);
    marks.dedup();

    let mut state = FlowState::new(initial.clone(), config.epsilon)?;
    let initial_length = state.diagnostics.length;
    if let Some(status) = stop_reason(&state.diagnostics, initial_length, config) {
        return Err(Error::InitialStop(status.as_str()));
    }
    let mut records = vec![state.diagnostics.clone()];
    let mut snapshots = vec![Snapshot {
        step: 0,
        t: 0.0,
        curve: initial.clone(),
    }];
    let mut reached = Vec::new();
    let mut reparam_steps = Vec::new();
    let mut next_mark = 0;

    let mut geom = geometry(&state.curve)?;
    let status = loop {
        if state.t >= config.t_max {
            break Status::ReachedTmax;
        }
        let mut dt = match config.fixed_dt {
            Some(dt) => dt,
            None => match stable_dt_for(&geom, config) {
                Ok(dt) => dt,
                Err(_) => break Status::ResolutionLost,
            },
        };
        let mut target = config.t_max;
        if next_mark < marks.len() {
            target = target.min(marks[next_mark]);
        }
        let mut lands = false;
        if state.t + dt >= target * (1.0 - 1e-14) {
            dt = target - state.t;
            lands = true;
        }
        let (mut next, next_geom) = match step_from(&state, &geom, config, dt) {
            Ok(s) => s,
            Err(_) => break Status::ResolutionLost,
        };
        geom = next_geom;
        if lands {
            next.t = target;
            next.diagnostics.t = target;
        }
        if next.t <= state.t {
            break Status::ResolutionLost;
        }
        while next_mark < marks.len() && marks[next_mark] <= next.t {
            if marks[next_mark] == next.t {
                reached.push(Snapshot {
                    step: next.step_index,
                    t: next.t,
                    curve: next.curve.clone(),
                });
            }
            next_mark += 1;
        }
        if config.snapshot_every > 0 && next.step_index % config.snapshot_every == 0 {
            snapshots.push(Snapshot {
                step: next.step_index,
                t: next.t,
                curve: next.curve.clone(),
            });
        }
        records.push(next.diagnostics.clone());
        let stop = stop_reason(&next.diagnostics, initial_length, config);
        state = next;
        if let Some(status) = stop {
            break status;
        }
        if config.reparam_every > 0 && state.step_index % config.reparam_every == 0 && state.t < config.t_max {
            match reparametrize(&state.curve).and_then(|c| Ok((geometry(&c)?, c))) {
                Ok((g, c)) => {
                    state.curve = c;
                    geom = g;
                    reparam_steps.push(state.step_index);
                }
                Err(_) => break Status::ResolutionLost,
            }
        }
    };

    Ok(Trajectory {
        epsilon: config.epsilon,
        records,
        snapshots,
        checkpoints: reached,
        reparam_steps,
        status,
        final_state: state,
    })
}

//! Reference solutions that share no code path with the PDE integrators.
//!
//! A circle stays a circle under the flow, with radius obeying
//! `dR/dt = −(R² − ε)/R³`. The ODE is integrated here with an adaptive
//! Dormand–Prince 5(4) pair; the PDE side uses fixed-step RK4 or IMEX schemes
//! on the full curve.

use std::f64::consts::PI;

use crate::curve::{geometry, parameter, DiscreteCurve};
use crate::energy::{first_variation_of, functional};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

/// Local error tolerance of the radius integrator.
pub const ODE_TOLERANCE: f64 = 1e-12;

/// Radius below which a shrinking circle is considered extinct.
pub const EXTINCTION_RADIUS: f64 = 1e-8;

/// Symmetric slice of the flow: circles of radius `R(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleOde {
    pub r0: f64,
    pub epsilon: f64,
}

impl CircleOde {
    pub fn new(r0: f64, epsilon: f64) -> Result<Self> {
        ensure_positive("initial radius", r0)?;
        ensure_non_negative("epsilon", epsilon)?;
        Ok(Self { r0, epsilon })
    }

    pub fn velocity(&self, r: f64) -> f64 {
        -(r * r - self.epsilon) / (r * r * r)
    }

    pub fn radius(&self, t: f64) -> Result<f64> {
        eps_radius(self.r0, self.epsilon, t)
    }

    /// `2π(R + ε/R)`.
    pub fn energy(&self, r: f64) -> f64 {
        2.0 * PI * (r + self.epsilon / r)
    }

    /// `∫(1 + (∂_sκ)² + κ⁴) ds = 2πR + 2π/R³` on a circle.
    pub fn q_combined(r: f64) -> f64 {
        2.0 * PI * r + 2.0 * PI / r.powi(3)
    }
}

/// Exact curve shortening radius `√(R0² − 2t)`.
pub fn mcf_radius(r0: f64, t: f64) -> Result<f64> {
    ensure_positive("initial radius", r0)?;
    ensure_non_negative("time", t)?;
    let extinction = r0 * r0 / 2.0;
    if t >= extinction {
        return Err(Error::Extinction { t, extinction });
    }
    Ok((r0 * r0 - 2.0 * t).sqrt())
}

// Dormand–Prince 5(4) tableau; the system is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(y)` from 0 to `t_end` with Dormand–Prince 5(4).
fn dopri5(f: impl Fn(f64) -> f64, y0: f64, t_end: f64, tol: f64, floor: f64) -> Result<f64> {
    let mut t = 0.0;
    let mut y = y0;
    let mut h = (t_end * 1e-3).max(1e-8).min(t_end);
    let mut k = [0.0; 7];
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > 10_000_000 {
            return Err(Error::NonFinite("radius ODE (step limit)"));
        }
        if t + h > t_end {
            h = t_end - t;
        }
        k[0] = f(y);
        for s in 1..7 {
            let inc: f64 = (0..s).map(|j| A[s][j] * k[j]).sum();
            k[s] = f(y + h * inc);
        }
        let y5 = y + h * (0..7).map(|j| B5[j] * k[j]).sum::<f64>();
        let y4 = y + h * (0..7).map(|j| B4[j] * k[j]).sum::<f64>();
        let scale = tol * (1.0 + y.abs().max(y5.abs()));
        let err = (y5 - y4).abs() / scale;
        if !err.is_finite() {
            h *= 0.25;
            if h < 1e-300 {
                return Err(Error::NonFinite("radius ODE"));
            }
            continue;
        }
        if err <= 1.0 {
            t = if t_end - (t + h) < 1e-15 * t_end { t_end } else { t + h };
            y = y5;
            if y < floor {
                return Err(Error::Extinction { t, extinction: t });
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Ok(y)
}

/// Radius of the circle evolving under the ε-flow, by adaptive ODE integration.
pub fn eps_radius(r0: f64, epsilon: f64, t: f64) -> Result<f64> {
    let ode = CircleOde::new(r0, epsilon)?;
    ensure_non_negative("time", t)?;
    if epsilon == 0.0 && t >= r0 * r0 / 2.0 {
        return Err(Error::Extinction {
            t,
            extinction: r0 * r0 / 2.0,
        });
    }
    if t == 0.0 || (r0 * r0 - epsilon).abs() <= 4.0 * f64::EPSILON * epsilon {
        return Ok(r0);
    }
    dopri5(|r| ode.velocity(r), r0, t, ODE_TOLERANCE, EXTINCTION_RADIUS)
}

/// First time at which `2πR + 2π/R³` reaches twice its initial value, or `t_max`.
pub fn circle_doubling_time(r0: f64, epsilon: f64, t_max: f64) -> Result<f64> {
    let target = 2.0 * CircleOde::q_combined(r0);
    let q_at = |t: f64| -> Result<f64> { Ok(CircleOde::q_combined(eps_radius(r0, epsilon, t)?)) };
    let upper = if epsilon == 0.0 {
        t_max.min(r0 * r0 / 2.0 * (1.0 - 1e-12))
    } else {
        t_max
    };
    if q_at(upper)? < target {
        return Ok(t_max);
    }
    let (mut lo, mut hi) = (0.0, upper);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q_at(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(hi)
}

/// Both sides of the directional-derivative identity `dG^ε(γ + hφν)/dh = ∫E^ε φ ds`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    pub central_difference: f64,
    pub analytic: f64,
}

impl GradientCheck {
    pub fn discrepancy(&self) -> f64 {
        (self.central_difference - self.analytic).abs()
    }
}

/// Moves node `i` by `h φ_i ν_i` with `φ = cos(m x)`.
pub fn perturb_normal(curve: &DiscreteCurve, mode: usize, h: f64) -> Result<DiscreteCurve> {
    let geom = geometry(curve)?;
    let n = curve.len();
    DiscreteCurve::new(
        curve
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let phi = (mode as f64 * parameter(i, n)).cos();
                let nu = geom.normal[i];
                [p[0] + h * phi * nu[0], p[1] + h * phi * nu[1]]
            })
            .collect(),
    )
}

pub fn fd_gradient_components(curve: &DiscreteCurve, epsilon: f64, mode: usize, h: f64) -> Result<GradientCheck> {
    if !(1e-5..=1e-2).contains(&h) {
        return Err(Error::Config(format!("perturbation size {h} outside [1e-5, 1e-2]")));
    }
    ensure_non_negative("epsilon", epsilon)?;
    let geom = geometry(curve)?;
    let n = curve.len();
    let plus = functional(&perturb_normal(curve, mode, h)?, epsilon)?;
    let minus = functional(&perturb_normal(curve, mode, -h)?, epsilon)?;
    let e = first_variation_of(&geom, epsilon)?;
    let weighted: Vec<f64> = e
        .iter()
        .enumerate()
        .map(|(i, e)| e * (mode as f64 * parameter(i, n)).cos())
        .collect();
    Ok(GradientCheck {
        central_difference: (plus - minus) / (2.0 * h),
        analytic: geom.integrate(&weighted)?,
    })
}

/// `|central difference of G^ε along cos(m x) ν − ∫E^ε cos(m x) ds|`.
pub fn fd_gradient_check(curve: &DiscreteCurve, epsilon: f64, mode: usize, h: f64) -> Result<f64> {
    Ok(fd_gradient_components(curve, epsilon, mode, h)?.discrepancy())
}

//! Closed immersed plane curves sampled on a uniform parameter grid.
//!
//! Node `i` sits at parameter `x_i = 2πi/N`. Geometry is computed from the
//! trigonometric interpolant of the coordinates, so arclength quantities carry
//! the metric factor `g = |γ_x|` explicitly.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{ensure_positive, Error, Result};
use crate::spectral;

/// Relative energy in the top octave of modes above which a curve counts as under-resolved.
pub const RESOLUTION_LIMIT: f64 = 1e-3;

/// Maximum distance of `(1/2π)∫κ ds` from an integer that is still accepted.
pub const WINDING_TOLERANCE: f64 = 0.01;

/// A closed curve given by `N` samples, `N` a power of two and at least 16.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    points: Vec<[f64; 2]>,
}

impl DiscreteCurve {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        let n = points.len();
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidResolution(n));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::NonFinite("curve coordinates"));
        }
        for i in 0..n {
            let j = (i + 1) % n;
            let (a, b) = (points[i], points[j]);
            if (a[0] - b[0]).hypot(a[1] - b[1]) <= 0.0 {
                return Err(Error::Degenerate(i, j));
            }
        }
        Ok(Self { points })
    }

    /// Samples `f` at the grid parameters `x_i = 2πi/n`.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> [f64; 2]) -> Result<Self> {
        Self::new((0..n).map(|i| f(parameter(i, n))).collect())
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<[f64; 2]> {
        self.points
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| [p[0] + dx, p[1] + dy]).collect(),
        }
    }

    /// Rotation by `angle` about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            points: self
                .points
                .iter()
                .map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
                .collect(),
        }
    }

    /// Same image traversed backwards: node `i` becomes node `N - i`.
    pub fn reversed(&self) -> Self {
        let n = self.len();
        Self {
            points: (0..n).map(|i| self.points[(n - i) % n]).collect(),
        }
    }

    /// Trigonometric interpolation onto `m` nodes, `m` a multiple of `N`.
    pub fn resampled(&self, m: usize) -> Result<Self> {
        if m < self.len() || m % self.len() != 0 {
            return Err(Error::Config(format!(
                "cannot resample {} nodes onto {m}",
                self.len()
            )));
        }
        let spec = spectral::spectrum_of_points(&self.points);
        Self::new(
            spectral::resample(&spec, m)
                .into_iter()
                .map(|c| [c.re, c.im])
                .collect(),
        )
    }

    /// Relative spectral energy of the coordinates in the top octave of modes.
    pub fn spectral_tail(&self) -> f64 {
        spectral::tail_fraction(&spectral::spectrum_of_points(&self.points))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 40);
        out.push_str("x,y\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{}", p[0], p[1]);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Reads an `x,y` snapshot file; the closing point must not be repeated.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "x,y" => {}
            _ => return Err(parse_err(1, "expected header `x,y`".into())),
        }
        let mut points = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let mut next = || -> Result<f64> {
                let field = fields
                    .next()
                    .ok_or_else(|| parse_err(idx + 1, "expected two columns".into()))?;
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(idx + 1, e.to_string()))
            };
            let x = next()?;
            let y = next()?;
            if fields.next().is_some() {
                return Err(parse_err(idx + 1, "expected two columns".into()));
            }
            points.push([x, y]);
        }
        Self::new(points)
    }
}

/// Grid parameter of node `i` out of `n`.
#[inline]
pub fn parameter(i: usize, n: usize) -> f64 {
    2.0 * PI * i as f64 / n as f64
}

/// Per-node Frenet frame, curvature and metric of a resolved curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveGeometry {
    pub tangent: Vec<[f64; 2]>,
    /// Counterclockwise rotation of the tangent by π/2.
    pub normal: Vec<[f64; 2]>,
    pub kappa: Vec<f64>,
    /// `|γ_x|` at each node.
    pub metric: Vec<f64>,
    pub ds: Vec<f64>,
    pub length: f64,
}

impl CurveGeometry {
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// `Σ f_i ds_i`.
    pub fn integrate(&self, field: &[f64]) -> Result<f64> {
        check_len(self.len(), field.len())?;
        Ok(field.iter().zip(&self.ds).map(|(f, w)| f * w).sum())
    }

    /// `(1/2π)∫κ ds` without rounding.
    pub fn winding(&self) -> f64 {
        self.kappa.iter().zip(&self.ds).map(|(k, w)| k * w).sum::<f64>() / (2.0 * PI)
    }

    pub fn turning_number(&self) -> Result<i64> {
        let w = self.winding();
        let r = w.round();
        if !w.is_finite() || (w - r).abs() > WINDING_TOLERANCE {
            return Err(Error::NonIntegerWinding(w));
        }
        Ok(r as i64)
    }

    pub fn max_abs_kappa(&self) -> f64 {
        self.kappa.iter().fold(0.0_f64, |m, k| m.max(k.abs()))
    }

    /// Smallest local arclength spacing `g_i · 2π/N`.
    pub fn min_spacing(&self) -> f64 {
        self.ds.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, found })
    }
}

pub fn make_circle(radius: f64, n: usize) -> Result<DiscreteCurve> {
    ensure_positive("radius", radius)?;
    DiscreteCurve::from_fn(n, |x| [radius * x.cos(), radius * x.sin()])
}

/// `(a cos x, b sin x)`.
pub fn make_ellipse(a: f64, b: f64, n: usize) -> Result<DiscreteCurve> {
    ensure_positive("semi-axis a", a)?;
    ensure_positive("semi-axis b", b)?;
    DiscreteCurve::from_fn(n, |x| [a * x.cos(), b * x.sin()])
}

/// Computes the frame and curvature, rejecting under-resolved curves.
pub fn geometry(curve: &DiscreteCurve) -> Result<CurveGeometry> {
    let spec = spectral::spectrum_of_points(curve.points());
    geometry_from_spectrum(&spec)
}

pub(crate) fn geometry_from_spectrum(spec: &[rustfft::num_complex::Complex64]) -> Result<CurveGeometry> {
    let n = spec.len();
    let tail = spectral::tail_fraction(spec);
    if !tail.is_finite() {
        return Err(Error::NonFinite("curve spectrum"));
    }
    if tail > RESOLUTION_LIMIT {
        return Err(Error::Underresolved {
            tail,
            limit: RESOLUTION_LIMIT,
        });
    }
    let mut clean = spec.to_vec();
    spectral::denoise(&mut clean, spectral::POINT_NOISE_FLOOR, false);
    let d1 = spectral::differentiate_spectrum(&clean, 1);
    let d2 = spectral::differentiate_spectrum(&clean, 2);
    let h = 2.0 * PI / n as f64;

    let mut tangent = Vec::with_capacity(n);
    let mut normal = Vec::with_capacity(n);
    let mut kappa = Vec::with_capacity(n);
    let mut metric = Vec::with_capacity(n);
    let mut ds = Vec::with_capacity(n);
    for i in 0..n {
        let (xp, yp) = (d1[i].re, d1[i].im);
        let (xpp, ypp) = (d2[i].re, d2[i].im);
        let g = xp.hypot(yp);
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::Degenerate(i, i));
        }
        let t = [xp / g, yp / g];
        let nu = [-t[1], t[0]];
        // ∂_s τ = (γ_xx - <γ_xx, τ> τ) / g²
        let along = xpp * t[0] + ypp * t[1];
        let dtau = [(xpp - along * t[0]) / (g * g), (ypp - along * t[1]) / (g * g)];
        let k = dtau[0] * nu[0] + dtau[1] * nu[1];
        tangent.push(t);
        normal.push(nu);
        kappa.push(k);
        metric.push(g);
        ds.push(g * h);
    }
    let length = ds.iter().sum();
    Ok(CurveGeometry {
        tangent,
        normal,
        kappa,
        metric,
        ds,
        length,
    })
}

/// `∫ f ds` over the curve.
pub fn integrate(curve: &DiscreteCurve, field: &[f64]) -> Result<f64> {
    check_len(curve.len(), field.len())?;
    geometry(curve)?.integrate(field)
}

/// Nearest integer to `(1/2π)∫κ ds`; errors when the winding is not near an integer.
pub fn turning_number(curve: &DiscreteCurve) -> Result<i64> {
    geometry(curve)?.turning_number()
}

/// Node-wise sup distance between two curves sharing the same parametrization grid.
pub fn sup_distance(a: &DiscreteCurve, b: &DiscreteCurve) -> Result<f64> {
    check_len(a.len(), b.len())?;
    Ok(a
        .points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| (p[0] - q[0]).hypot(p[1] - q[1]))
        .fold(0.0, f64::max))
}

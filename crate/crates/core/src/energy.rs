//! The functional `G^ε = ∫(1 + εκ²) ds`, its first variation and the
//! curvature quantities whose evolution the flow is checked against.

use serde::{Deserialize, Serialize};

use crate::curve::{check_len, geometry, CurveGeometry, DiscreteCurve};
use crate::differential::{d_ds, d_ds_ladder};
use crate::error::{ensure_non_negative, Error, Result};

/// Highest `j` for which `Q_j = ∫|∂_s^j κ|² ds` is tracked.
pub const J_MAX: usize = 4;

fn square_integral(geom: &CurveGeometry, field: &[f64]) -> f64 {
    field.iter().zip(&geom.ds).map(|(f, w)| f * f * w).sum()
}

fn power_integral(geom: &CurveGeometry, field: &[f64], p: i32) -> f64 {
    field.iter().zip(&geom.ds).map(|(f, w)| f.powi(p) * w).sum()
}

/// `G^ε` of an already computed geometry.
pub fn functional_of(geom: &CurveGeometry, epsilon: f64) -> Result<f64> {
    ensure_non_negative("epsilon", epsilon)?;
    Ok(geom.length + epsilon * square_integral(geom, &geom.kappa))
}

pub fn functional(curve: &DiscreteCurve, epsilon: f64) -> Result<f64> {
    ensure_non_negative("epsilon", epsilon)?;
    functional_of(&geometry(curve)?, epsilon)
}

/// `E^ε = −κ + 2ε ∂_s²κ + εκ³`; the flow moves with normal velocity `−E^ε`.
pub fn first_variation_of(geom: &CurveGeometry, epsilon: f64) -> Result<Vec<f64>> {
    ensure_non_negative("epsilon", epsilon)?;
    if epsilon == 0.0 {
        return Ok(geom.kappa.iter().map(|k| -k).collect());
    }
    let kss = d_ds(geom, &geom.kappa, 2)?;
    Ok(geom
        .kappa
        .iter()
        .zip(&kss)
        .map(|(k, kss)| -k + 2.0 * epsilon * kss + epsilon * k * k * k)
        .collect())
}

pub fn first_variation(curve: &DiscreteCurve, epsilon: f64) -> Result<Vec<f64>> {
    ensure_non_negative("epsilon", epsilon)?;
    first_variation_of(&geometry(curve)?, epsilon)
}

fn check_j(j: usize) -> Result<()> {
    if j <= J_MAX {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange {
            order: j,
            min: 0,
            max: J_MAX,
        })
    }
}

/// `Q_j = ∫|∂_s^j κ|² ds`.
pub fn kappa_norm(curve: &DiscreteCurve, j: usize) -> Result<f64> {
    check_j(j)?;
    let geom = geometry(curve)?;
    let ladder = d_ds_ladder(&geom, &geom.kappa, j)?;
    Ok(square_integral(&geom, &ladder[j]))
}

/// Pointwise `∂_t κ` from the expanded polynomial
/// `∂_s²κ + κ³ − 2ε∂_s⁴κ − 6εκ(∂_sκ)² − 5εκ²∂_s²κ − εκ⁵`.
pub fn dt_kappa_rhs_of(geom: &CurveGeometry, epsilon: f64) -> Result<Vec<f64>> {
    ensure_non_negative("epsilon", epsilon)?;
    let d = d_ds_ladder(geom, &geom.kappa, 4)?;
    let e = epsilon;
    Ok((0..geom.len())
        .map(|i| {
            let (k, k1, k2, k4) = (d[0][i], d[1][i], d[2][i], d[4][i]);
            k2 + k.powi(3) - 2.0 * e * k4 - 6.0 * e * k * k1 * k1 - 5.0 * e * k * k * k2 - e * k.powi(5)
        })
        .collect())
}

pub fn dt_kappa_rhs(curve: &DiscreteCurve, epsilon: f64) -> Result<Vec<f64>> {
    ensure_non_negative("epsilon", epsilon)?;
    dt_kappa_rhs_of(&geometry(curve)?, epsilon)
}

/// `∂_t κ = −∂_s² E − κ² E`, evaluated by composing the first variation.
pub fn dt_kappa_rhs_compositional(curve: &DiscreteCurve, epsilon: f64) -> Result<Vec<f64>> {
    let geom = geometry(curve)?;
    let e = first_variation_of(&geom, epsilon)?;
    let ess = d_ds(&geom, &e, 2)?;
    Ok(geom
        .kappa
        .iter()
        .zip(e.iter().zip(&ess))
        .map(|(k, (e, ess))| -ess - k * k * e)
        .collect())
}

/// `∂_t ∫κ² ds = ∫(−2(∂_sκ)² + κ⁴ − 4ε(∂_s²κ)² − εκ⁶ − 4εκ³∂_s²κ) ds`.
pub fn dt_int_kappa2_rhs_of(geom: &CurveGeometry, epsilon: f64) -> Result<f64> {
    ensure_non_negative("epsilon", epsilon)?;
    let d = d_ds_ladder(geom, &geom.kappa, 2)?;
    let e = epsilon;
    let integrand: Vec<f64> = (0..geom.len())
        .map(|i| {
            let (k, k1, k2) = (d[0][i], d[1][i], d[2][i]);
            -2.0 * k1 * k1 + k.powi(4) - 4.0 * e * k2 * k2 - e * k.powi(6) - 4.0 * e * k.powi(3) * k2
        })
        .collect();
    geom.integrate(&integrand)
}

pub fn dt_int_kappa2_rhs(curve: &DiscreteCurve, epsilon: f64) -> Result<f64> {
    ensure_non_negative("epsilon", epsilon)?;
    dt_int_kappa2_rhs_of(&geometry(curve)?, epsilon)
}

/// Which Gagliardo–Nirenberg consequence to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationCase {
    /// `∫u⁶` against `∫(∂_s²u)²`, `(∫u²)⁵` and `L⁻²(∫u²)³`.
    P6M2,
    /// `∫u⁴` against `∫(∂_s u)²`, `(∫u²)³` and `L⁻¹(∫u²)²`.
    P4M1,
}

/// Raw quantities of an interpolation inequality; the constants are left to the caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub lhs: f64,
    pub grad_term: f64,
    pub l2_term: f64,
    pub length: f64,
}

pub fn interpolation_report(
    curve: &DiscreteCurve,
    field: &[f64],
    case: InterpolationCase,
) -> Result<InterpolationReport> {
    check_len(curve.len(), field.len())?;
    let geom = geometry(curve)?;
    let (power, order) = match case {
        InterpolationCase::P6M2 => (6, 2),
        InterpolationCase::P4M1 => (4, 1),
    };
    let du = d_ds(&geom, field, order)?;
    Ok(InterpolationReport {
        lhs: power_integral(&geom, field, power),
        grad_term: square_integral(&geom, &du),
        l2_term: square_integral(&geom, field),
        length: geom.length,
    })
}

/// Shape `x^{2j+3} + x^{2j+5} + 1` of the a-priori bound on `∂_t Q_j` in terms of `x = ∫κ² ds`.
pub fn apriori_bound_rhs(int_k2: f64, j: usize) -> Result<f64> {
    ensure_non_negative("int_k2", int_k2)?;
    check_j(j)?;
    let p = 2 * j as i32;
    Ok(int_k2.powi(p + 3) + int_k2.powi(p + 5) + 1.0)
}

/// Scalar curvature functionals of a single curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub length: f64,
    pub total_energy: f64,
    pub int_k2: f64,
    /// `Q_0..=Q_J_MAX`.
    pub q_norms: Vec<f64>,
    pub int_k4: f64,
    pub max_abs_kappa: f64,
    pub borsuk_lhs: f64,
    pub borsuk_rhs: f64,
}

impl EnergyReport {
    pub fn of(geom: &CurveGeometry, epsilon: f64) -> Result<Self> {
        ensure_non_negative("epsilon", epsilon)?;
        let ladder = d_ds_ladder(geom, &geom.kappa, J_MAX)?;
        let q_norms: Vec<f64> = ladder.iter().map(|f| square_integral(geom, f)).collect();
        let int_k2 = q_norms[0];
        Ok(Self {
            length: geom.length,
            total_energy: geom.length + epsilon * int_k2,
            int_k2,
            q_norms,
            int_k4: power_integral(geom, &geom.kappa, 4),
            max_abs_kappa: geom.max_abs_kappa(),
            borsuk_lhs: 1.0 / geom.length,
            borsuk_rhs: int_k2 / (4.0 * std::f64::consts::PI.powi(2)),
        })
    }

    /// `borsuk_rhs − borsuk_lhs`; non-negative for every closed curve.
    pub fn borsuk_margin(&self) -> f64 {
        self.borsuk_rhs - self.borsuk_lhs
    }

    /// `∫(1 + (∂_sκ)² + κ⁴) ds`.
    pub fn q_combined(&self) -> f64 {
        self.length + self.q_norms[1] + self.int_k4
    }
}

pub fn energy_report(curve: &DiscreteCurve, epsilon: f64) -> Result<EnergyReport> {
    ensure_non_negative("epsilon", epsilon)?;
    EnergyReport::of(&geometry(curve)?, epsilon)
}

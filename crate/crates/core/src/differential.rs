//! Parameter and arclength derivatives of periodic per-node fields.

use crate::curve::{check_len, CurveGeometry};
use crate::error::{Error, Result};
use crate::spectral;

/// Highest derivative order accepted by [`param_derivative`] and [`d_ds`].
pub const MAX_ORDER: usize = 8;

fn check_order(order: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange {
            order,
            min: 1,
            max: MAX_ORDER,
        })
    }
}

fn check_finite(field: &[f64]) -> Result<()> {
    if field.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("scalar field"))
    }
}

/// Spectral `∂_x^order` of the trigonometric interpolant of `field`.
pub fn param_derivative(field: &[f64], order: usize) -> Result<Vec<f64>> {
    check_order(order)?;
    check_finite(field)?;
    Ok(spectral::differentiate_real(field, order))
}

/// `order`-fold application of `∂_s = g⁻¹ ∂_x`.
pub fn d_ds(geom: &CurveGeometry, field: &[f64], order: usize) -> Result<Vec<f64>> {
    check_order(order)?;
    let mut all = d_ds_ladder(geom, field, order)?;
    Ok(all.pop().expect("ladder holds order + 1 entries"))
}

/// `[u, ∂_s u, …, ∂_s^order u]`, sharing the intermediate derivatives.
pub fn d_ds_ladder(geom: &CurveGeometry, field: &[f64], order: usize) -> Result<Vec<Vec<f64>>> {
    if order > MAX_ORDER {
        return Err(Error::OrderOutOfRange {
            order,
            min: 0,
            max: MAX_ORDER,
        });
    }
    check_len(geom.len(), field.len())?;
    check_finite(field)?;
    let mut out = Vec::with_capacity(order + 1);
    out.push(field.to_vec());
    for _ in 0..order {
        let prev = out.last().expect("non-empty");
        let dx = spectral::differentiate_real(prev, 1);
        out.push(dx.iter().zip(&geom.metric).map(|(d, g)| d / g).collect());
    }
    Ok(out)
}

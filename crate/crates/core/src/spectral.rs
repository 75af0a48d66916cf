//! FFT plumbing shared by the geometry, derivative and flow code.
//!
//! All transforms are complex and unnormalized on the forward side; the
//! inverse divides by `N`. Curves are packed as `z = x + iy` so a single
//! transform handles both coordinates. The Nyquist mode is interpreted as
//! `c cos(N x / 2)`, which keeps interpolants and derivatives of real data real.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn forward(buf: &mut [Complex64]) {
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

pub(crate) fn inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    fft.process(buf);
    let scale = 1.0 / n as f64;
    for c in buf.iter_mut() {
        *c *= scale;
    }
}

/// Signed wavenumber of spectral index `i`; the Nyquist index maps to `+N/2`.
#[inline]
pub(crate) fn wavenumber(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Multiplier for the `order`-th derivative at index `i`.
#[inline]
pub(crate) fn derivative_symbol(i: usize, n: usize, order: usize) -> Complex64 {
    if order == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if i == n / 2 && order % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    let k = wavenumber(i, n);
    Complex64::new(0.0, k).powu(order as u32)
}

pub(crate) fn spectrum_of_points(points: &[[f64; 2]]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = points.iter().map(|p| Complex64::new(p[0], p[1])).collect();
    forward(&mut buf);
    buf
}

pub(crate) fn spectrum_of_real(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(&mut buf);
    buf
}

/// Applies the derivative symbol to a spectrum and returns physical values.
pub(crate) fn differentiate_spectrum(spec: &[Complex64], order: usize) -> Vec<Complex64> {
    let n = spec.len();
    let mut buf: Vec<Complex64> = spec
        .iter()
        .enumerate()
        .map(|(i, c)| c * derivative_symbol(i, n, order))
        .collect();
    inverse(&mut buf);
    buf
}

/// Relative level below which spectral content of a derived field is treated as roundoff.
pub(crate) const NOISE_FLOOR: f64 = 1e-13;

/// Same for node coordinates, which pick up roundoff from every transform
/// round trip of a long run.
pub(crate) const POINT_NOISE_FLOOR: f64 = 1e-12;

pub(crate) fn differentiate_real(values: &[f64], order: usize) -> Vec<f64> {
    let mut spec = spectrum_of_real(values);
    denoise(&mut spec, NOISE_FLOOR, true);
    differentiate_spectrum(&spec, order)
        .into_iter()
        .map(|c| c.re)
        .collect()
}

/// Energy in `|k| >= N/4` relative to all non-constant modes.
pub(crate) fn tail_fraction(spec: &[Complex64]) -> f64 {
    let n = spec.len();
    let quarter = (n / 4) as f64;
    let mut total = 0.0;
    let mut tail = 0.0;
    for (i, c) in spec.iter().enumerate().skip(1) {
        let e = c.norm_sqr();
        total += e;
        if wavenumber(i, n).abs() >= quarter {
            tail += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Zeroes every mode with `|k| > cutoff` (the Nyquist mode included).
pub(crate) fn truncate(spec: &mut [Complex64], cutoff: usize) {
    let n = spec.len();
    for (i, c) in spec.iter_mut().enumerate() {
        if i == n / 2 || wavenumber(i, n).abs() > cutoff as f64 {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Soft-thresholds coefficients against `floor · max|ĉ_k|` (the maximum over
/// `k ≠ 0`, or over all `k` when `include_mean`): those below the threshold
/// are zeroed, the rest shrink by `1 − (threshold/|ĉ_k|)²`. The shrinkage is
/// continuous, so nearby inputs stay nearby. The constant mode is never touched.
pub(crate) fn denoise(spec: &mut [Complex64], floor: f64, include_mean: bool) {
    let skip = usize::from(!include_mean);
    let scale = spec.iter().skip(skip).map(|c| c.norm_sqr()).fold(0.0, f64::max);
    let threshold = floor * floor * scale;
    if threshold == 0.0 {
        return;
    }
    for c in spec.iter_mut().skip(1) {
        let m = c.norm_sqr();
        if m <= threshold {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c *= 1.0 - threshold / m;
        }
    }
}

/// `e^{ikx}` for `k = 0..=N/2`, built by repeated multiplication.
pub(crate) fn phases(x: f64, n: usize) -> Vec<Complex64> {
    let w = Complex64::from_polar(1.0, x);
    let mut out = Vec::with_capacity(n / 2 + 1);
    let mut acc = Complex64::new(1.0, 0.0);
    for k in 0..=n / 2 {
        if k % 32 == 0 {
            // refresh to keep the recurrence from drifting
            acc = Complex64::from_polar(1.0, k as f64 * x);
        }
        out.push(acc);
        acc *= w;
    }
    out
}

/// Evaluates the `order`-th derivative of the trigonometric interpolant at a
/// point whose phase table is `ph` (see [`phases`]).
pub(crate) fn evaluate_with(spec: &[Complex64], ph: &[Complex64], order: usize) -> Complex64 {
    let n = spec.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, c) in spec.iter().enumerate() {
        if i == n / 2 {
            // c cos(N x / 2) and its derivatives
            let k = (n / 2) as f64;
            let e = ph[n / 2] * Complex64::new(0.0, 1.0).powu(order as u32);
            acc += c * (k.powi(order as i32) * e.re);
            continue;
        }
        let e = if i < n / 2 { ph[i] } else { ph[n - i].conj() };
        acc += c * derivative_symbol(i, n, order) * e;
    }
    acc / n as f64
}

/// Trigonometric interpolation onto a grid of `m >= n` points.
pub(crate) fn resample(spec: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = spec.len();
    debug_assert!(m >= n);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let scale = m as f64 / n as f64;
    for (i, c) in spec.iter().enumerate() {
        if i == n / 2 && m > n {
            out[n / 2] += c * 0.5 * scale;
            out[m - n / 2] += c * 0.5 * scale;
        } else if i <= n / 2 {
            out[i] += c * scale;
        } else {
            out[m - (n - i)] += c * scale;
        }
    }
    inverse(&mut out);
    out
}

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use rustfft::num_complex::Complex;

use super::gauss::gauss_kronrod;
use super::quadrature::{radial_integral, Layout};
use crate::error::{contract, LabError, Result};

/// Mesh density used for calibration (independent of evaluation schemes).
const CALIBRATION_NODES_PER_DECADE: usize = 64;
const CALIBRATION_INNER: f64 = 1e-3;
const CALIBRATION_TARGET: f64 = 1e-7;

fn cache() -> &'static Mutex<HashMap<(u64, usize), f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The constant `c_{s,d}` for which the principal-value integral reproduces
/// the Fourier symbol `|ξ|^{2s}`.
///
/// Calibrated on the unit mode `cos(x_1)` at the origin: the hypersingular
/// integral is computed with the graded-mesh machinery up to a whole number
/// of periods, and the oscillatory remainder by asymptotic integration by
/// parts.
pub fn calibrate_constant(s: f64, d: usize) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(contract(format!("s must lie in (0, 1), got {s}")));
    }
    if d != 1 && d != 2 {
        return Err(contract(format!("calibration supports d = 1, 2, got {d}")));
    }
    let key = (s.to_bits(), d);
    if let Some(&c) = cache().lock().unwrap().get(&key) {
        return Ok(c);
    }
    let (integral, err) = if d == 1 { mode_integral_1d(s)? } else { mode_integral_2d(s)? };
    let rel = err / integral.abs();
    if !(rel <= CALIBRATION_TARGET) || !(integral > 0.0) {
        return Err(LabError::Calibration {
            message: format!("mode integral for s = {s}, d = {d} not resolved"),
            residual: rel,
        });
    }
    let c = 1.0 / integral;
    cache().lock().unwrap().insert(key, c);
    Ok(c)
}

fn layout(outer: f64) -> Layout {
    Layout {
        eps: CALIBRATION_INNER,
        kink_at_origin: false,
        breaks: Vec::new(),
        outer,
        nodes_per_decade: CALIBRATION_NODES_PER_DECADE,
        cap_width: 0.5,
        cap_until: outer,
    }
}

/// `Σ_k i^{k+1} (-1)^k (q)_k H^{-q-k}`: the asymptotic expansion of
/// `∫_H^∞ e^{ir} r^{-q} dr` when `e^{iH} = 1`.
fn oscillatory_tail(q: f64, h: f64) -> Complex<f64> {
    let i = Complex::new(0.0, 1.0);
    let mut sum = Complex::new(0.0, 0.0);
    let mut ik = i; // i^{k+1}
    let mut coef = h.powf(-q); // (q)_k H^{-q-k} (-1)^k
    for k in 0..40 {
        let term = ik * coef;
        sum += term;
        if term.norm() < 1e-22 {
            break;
        }
        ik *= i;
        coef *= -(q + k as f64) / h;
    }
    sum
}

fn mode_integral_1d(s: f64) -> Result<(f64, f64)> {
    let outer = 2.0 * PI * 64.0;
    let g = |h: f64| {
        let v = (0.5 * h).sin();
        (4.0 * v * v, 0.0)
    };
    let none = |_: f64, _: f64| None;
    let (mid, err) = radial_integral(&g, &none, s, &layout(outer))?;
    let p = 1.0 + 2.0 * s;
    let tail = 2.0 * outer.powf(-2.0 * s) / (2.0 * s) - 2.0 * oscillatory_tail(p, outer).re;
    Ok((mid + tail, err))
}

fn mode_integral_2d(s: f64) -> Result<(f64, f64)> {
    let outer = 2.0 * PI * 32.0;
    // ∫_0^π (2 - 2cos(r cos φ)) dφ, symmetric about π/2.
    let g = |r: f64| {
        let n = ((0.5 * PI * r).ceil() as usize).max(1);
        let mut sum = 0.0;
        let mut err = 0.0;
        for j in 0..n {
            let a = 0.5 * PI * j as f64 / n as f64;
            let b = 0.5 * PI * (j + 1) as f64 / n as f64;
            let (v, e) = gauss_kronrod(a, b, |phi| {
                let w = (0.5 * r * phi.cos()).sin();
                4.0 * w * w
            });
            sum += v;
            err += e;
        }
        (2.0 * sum, 2.0 * err)
    };
    let none = |_: f64, _: f64| None;
    let (mid, err) = radial_integral(&g, &none, s, &layout(outer))?;
    // ∫_H^∞ r^{-1-2s} 2π (1 - J0(r)) dr with the Hankel expansion of J0.
    let p = 1.0 + 2.0 * s;
    let i = Complex::new(0.0, 1.0);
    let hankel = [
        Complex::new(1.0, 0.0),
        -i / 8.0,
        Complex::new(-9.0 / 128.0, 0.0),
        i * (225.0 / 3072.0),
        Complex::new(11025.0 / 98304.0, 0.0),
    ];
    let mut j0_tail = Complex::new(0.0, 0.0);
    for (m, c) in hankel.iter().enumerate() {
        j0_tail += c * oscillatory_tail(p + 0.5 + m as f64, outer);
    }
    let j0_tail = ((2.0 / PI).sqrt() * Complex::from_polar(1.0, -PI / 4.0) * j0_tail).re;
    let tail = 2.0 * PI * (outer.powf(-2.0 * s) / (2.0 * s) - j0_tail);
    Ok((mid + tail, err))
}

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::GridField;
use crate::error::{contract, LabError, Result};

/// Magnitudes of the periodic wavenumbers for `n` nodes on `[-L, L)`.
pub fn wavenumbers(n: usize, half_width: f64) -> Vec<f64> {
    let base = std::f64::consts::PI / half_width;
    (0..n)
        .map(|k| {
            let m = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            (m * base).abs()
        })
        .collect()
}

/// Radial Fourier multiplier on a fixed grid geometry, with cached FFT plans.
pub struct FourierMultiplier {
    dimension: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    symbol: Vec<f64>,
}

impl FourierMultiplier {
    /// Builds the multiplier `m(|ξ|)` for the geometry of `like`.
    pub fn new<M: Fn(f64) -> f64>(like: &GridField, m: M) -> Self {
        let n = like.points_per_axis();
        let k = wavenumbers(n, like.half_width());
        let symbol = match like.dimension() {
            1 => k.iter().map(|&x| m(x)).collect(),
            _ => (0..n * n).map(|i| m(k[i / n].hypot(k[i % n]))).collect(),
        };
        let mut planner = FftPlanner::new();
        Self {
            dimension: like.dimension(),
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            symbol,
        }
    }

    /// Replaces the symbol, keeping the plans.
    pub fn set_symbol<M: Fn(f64) -> f64>(&mut self, half_width: f64, m: M) {
        let n = self.n;
        let k = wavenumbers(n, half_width);
        self.symbol = match self.dimension {
            1 => k.iter().map(|&x| m(x)).collect(),
            _ => (0..n * n).map(|i| m(k[i / n].hypot(k[i % n]))).collect(),
        };
    }

    fn transform(&self, data: &mut [Complex<f64>], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        let n = self.n;
        if self.dimension == 1 {
            plan.process(data);
            return;
        }
        let rows = |d: &mut [Complex<f64>]| {
            d.par_chunks_mut(n).for_each_init(
                || vec![Complex::new(0.0, 0.0); plan.get_inplace_scratch_len()],
                |scratch, row| plan.process_with_scratch(row, scratch),
            )
        };
        rows(data);
        transpose(data, n);
        rows(data);
        transpose(data, n);
    }

    /// Applies the multiplier to two real arrays at once (packed as the real
    /// and imaginary parts of one complex transform; valid because the
    /// symbol is real and even).
    pub fn apply_pair(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut data: Vec<Complex<f64>> = a.iter().zip(b).map(|(&x, &y)| Complex::new(x, y)).collect();
        self.transform(&mut data, false);
        let scale = 1.0 / data.len() as f64;
        data.par_iter_mut().zip(self.symbol.par_iter()).for_each(|(z, &m)| *z *= m * scale);
        self.transform(&mut data, true);
        data.into_iter().map(|z| (z.re, z.im)).unzip()
    }

    pub fn apply(&self, a: &[f64]) -> Vec<f64> {
        let zeros = vec![0.0; a.len()];
        self.apply_pair(a, &zeros).0
    }
}

fn transpose(data: &mut [Complex<f64>], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(contract(format!("s must lie in (0, 1), got {s}")))
    }
}

fn check_finite(field: &GridField) -> Result<()> {
    match field.values().iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(LabError::Data(format!("non-finite value at node {i}"))),
    }
}

/// `(-Δ)^s` on a periodic grid field: multiplies Fourier coefficients by `|ξ|^{2s}`.
pub fn spectral_apply(field: &GridField, s: f64) -> Result<GridField> {
    check_s(s)?;
    check_finite(field)?;
    let op = FourierMultiplier::new(field, |k| k.powf(2.0 * s));
    Ok(field.with_values_unchecked(op.apply(field.values())))
}

/// The fractional heat semigroup `S_t`: multiplies by `exp(-|ξ|^{2s} t)`.
pub fn semigroup_step(field: &GridField, s: f64, t: f64) -> Result<GridField> {
    check_s(s)?;
    if !(t > 0.0) {
        return Err(contract(format!("semigroup time must be positive, got {t}")));
    }
    check_finite(field)?;
    let op = FourierMultiplier::new(field, |k| (-k.powf(2.0 * s) * t).exp());
    Ok(field.with_values_unchecked(op.apply(field.values())))
}

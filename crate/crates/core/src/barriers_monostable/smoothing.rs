use serde::{Deserialize, Serialize};

use crate::error::{contract, LabError, Result};
use crate::fractional_operator::gauss_legendre;

/// Concave `C²` map `φ_θ : [0,1] → [0,θ]` equal to the identity on
/// `[0, θ₁]` and to `θ` on `[θ₂, 1]`.
///
/// On `[θ₁, θ₂]`, `φ' = 1 - B(τ)` with `τ = (y-θ₁)/(θ₂-θ₁)` and
/// `B(τ) = P(τ^p)` (or its mirror `1 - P((1-τ)^p)`), `P` the quintic
/// smoothstep. The exponent `p ≥ 2/3` is tuned so that `φ(θ₂) = θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub theta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub exponent: f64,
    pub mirrored: bool,
    /// `max |φ''|` over a dense sample.
    pub curvature_bound: f64,
}

const MIN_EXPONENT: f64 = 2.0 / 3.0;
const GL_NODES: usize = 64;

fn quintic(x: f64) -> f64 {
    x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

fn quintic_derivative(x: f64) -> f64 {
    30.0 * x * x * (1.0 - x) * (1.0 - x)
}

fn ramp(tau: f64, p: f64, mirrored: bool) -> f64 {
    let t = tau.clamp(0.0, 1.0);
    if mirrored {
        1.0 - quintic((1.0 - t).powf(p))
    } else {
        quintic(t.powf(p))
    }
}

fn ramp_derivative(tau: f64, p: f64, mirrored: bool) -> f64 {
    if !(tau > 0.0 && tau < 1.0) {
        return 0.0;
    }
    let (x, sign) = if mirrored { (1.0 - tau, 1.0) } else { (tau, 1.0) };
    sign * quintic_derivative(x.powf(p)) * p * x.powf(p - 1.0)
}

/// `∫_0^1 (1 - B(τ)) dτ`.
fn mean_slope(p: f64, mirrored: bool) -> f64 {
    let (xs, ws) = gauss_legendre(GL_NODES);
    xs.iter()
        .zip(&ws)
        .map(|(x, w)| 0.5 * w * (1.0 - ramp(0.5 * (x + 1.0), p, mirrored)))
        .sum()
}

pub fn build_smoothing(theta: f64, theta1: f64, theta2: f64) -> Result<Smoothing> {
    if !(0.0 < theta1 && theta1 < theta && theta < theta2 && theta2 <= 1.0) {
        return Err(contract(format!(
            "need 0 < theta1 < theta < theta2 <= 1, got ({theta1}, {theta}, {theta2})"
        )));
    }
    let target = (theta - theta1) / (theta2 - theta1);
    let base = mean_slope(MIN_EXPONENT, false);
    // mean_slope increases with p; the mirror covers the low range
    let mirrored = target < base;
    let goal = if mirrored { 1.0 - target } else { target };
    let (mut lo, mut hi) = (MIN_EXPONENT, 1.0);
    while mean_slope(hi, false) < goal {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(LabError::Internal("smoothing exponent search diverged".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_slope(mid, false) < goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut sm = Smoothing { theta, theta1, theta2, exponent: 0.5 * (lo + hi), mirrored, curvature_bound: 0.0 };
    let n = 20_000;
    sm.curvature_bound = (0..=n)
        .map(|i| sm.second_derivative(theta1 + (theta2 - theta1) * i as f64 / n as f64).abs())
        .fold(0.0, f64::max);
    Ok(sm)
}

impl Smoothing {
    fn tau(&self, y: f64) -> f64 {
        (y - self.theta1) / (self.theta2 - self.theta1)
    }

    pub fn derivative(&self, y: f64) -> f64 {
        if y <= self.theta1 {
            1.0
        } else if y >= self.theta2 {
            0.0
        } else {
            1.0 - ramp(self.tau(y), self.exponent, self.mirrored)
        }
    }

    pub fn second_derivative(&self, y: f64) -> f64 {
        if y <= self.theta1 || y >= self.theta2 {
            0.0
        } else {
            -ramp_derivative(self.tau(y), self.exponent, self.mirrored) / (self.theta2 - self.theta1)
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        if y <= self.theta1 {
            return y;
        }
        if y >= self.theta2 {
            return self.theta;
        }
        let (xs, ws) = gauss_legendre(GL_NODES);
        let h = y - self.theta1;
        let integral: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(x, w)| 0.5 * h * w * self.derivative(self.theta1 + 0.5 * h * (x + 1.0)))
            .sum();
        (self.theta1 + integral).min(self.theta)
    }
}

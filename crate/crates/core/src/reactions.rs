//! Reaction terms: ignition, α-monostable, KPP and bistable classes with
//! validated constants.

use serde::{Deserialize, Serialize};

use crate::error::{contract, LabError, Result};

/// Number of sample points used by [`ReactionSpec::validate`].
pub const VALIDATION_SAMPLES: usize = 10_000;
/// Safety factor applied to sampled infima.
pub const INF_SAFETY: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionKind {
    Ignition,
    AlphaMonostable,
    Kpp,
    Bistable,
}

/// Closed-form description of `f` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// `amplitude · 4(u-θ₀)(1-u)/(1-θ₀)²` on `[θ₀, 1]`, zero below.
    QuadraticCap { theta0: f64, amplitude: f64 },
    /// `γ u^α` on `[0, θ₀]`, then a cubic Hermite segment down to `f(1) = 0`.
    PowerHermite { alpha: f64, gamma: f64, theta0: f64 },
    /// `γ u^α (1 - u)`.
    PowerLogistic { alpha: f64, gamma: f64 },
    /// `amplitude · u(1-u)(u-θ₀)`.
    CubicBistable { theta0: f64, amplitude: f64 },
    /// Piecewise-linear interpolation of values on a uniform grid of `[0, 1]`.
    Table { values: Vec<f64> },
}

impl Shape {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Shape::QuadraticCap { theta0, amplitude } => {
                if u <= theta0 || u >= 1.0 {
                    0.0
                } else {
                    amplitude * 4.0 * (u - theta0) * (1.0 - u) / ((1.0 - theta0) * (1.0 - theta0))
                }
            }
            Shape::PowerHermite { alpha, gamma, theta0 } => {
                if u <= 0.0 || u >= 1.0 {
                    0.0
                } else if u <= theta0 {
                    gamma * u.powf(alpha)
                } else {
                    let h = 1.0 - theta0;
                    let t = (u - theta0) / h;
                    let y0 = gamma * theta0.powf(alpha);
                    let m0 = alpha * gamma * theta0.powf(alpha - 1.0);
                    let m1 = -y0 / h;
                    let omt = 1.0 - t;
                    y0 * omt * omt * (1.0 + 2.0 * t) + h * m0 * t * omt * omt - h * m1 * t * t * omt
                }
            }
            Shape::PowerLogistic { alpha, gamma } => {
                if u <= 0.0 || u >= 1.0 {
                    0.0
                } else {
                    gamma * u.powf(alpha) * (1.0 - u)
                }
            }
            Shape::CubicBistable { theta0, amplitude } => {
                if u <= 0.0 || u >= 1.0 {
                    0.0
                } else {
                    amplitude * u * (1.0 - u) * (u - theta0)
                }
            }
            Shape::Table { ref values } => {
                let n = values.len() - 1;
                let y = u.clamp(0.0, 1.0) * n as f64;
                let j = (y.floor() as usize).min(n - 1);
                let w = y - j as f64;
                values[j] * (1.0 - w) + values[j + 1] * w
            }
        }
    }
}

/// A validated reaction with its class constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionSpec {
    pub kind: ReactionKind,
    pub theta0: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub lipschitz: f64,
    pub sup_norm: f64,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub u: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(contract(format!("{name} must lie in (0,1), got {v}")));
    }
    Ok(())
}

/// Lipschitz bound from difference quotients on a grid finer than the one
/// used by validation, with a small margin.
fn sampled_lipschitz(shape: &Shape) -> f64 {
    let n = VALIDATION_SAMPLES * 32;
    let mut prev = shape.eval(0.0);
    let mut k = 0.0f64;
    for j in 1..=n {
        let u = j as f64 / n as f64;
        let v = shape.eval(u);
        k = k.max((v - prev).abs() * n as f64);
        prev = v;
    }
    k * 1.01
}

fn sampled_sup(shape: &Shape) -> f64 {
    (0..=VALIDATION_SAMPLES * 4)
        .map(|j| shape.eval(j as f64 / (VALIDATION_SAMPLES * 4) as f64).abs())
        .fold(0.0, f64::max)
}

fn finish(kind: ReactionKind, theta0: f64, alpha: f64, gamma: f64, gamma_prime: f64, shape: Shape) -> ReactionSpec {
    ReactionSpec {
        kind,
        theta0,
        alpha,
        gamma,
        gamma_prime,
        lipschitz: sampled_lipschitz(&shape),
        sup_norm: sampled_sup(&shape),
        shape,
    }
}

/// Ignition reaction with the quadratic cap of height `amplitude`.
pub fn make_ignition(theta0: f64, amplitude: f64) -> Result<ReactionSpec> {
    check_unit_open("theta0", theta0)?;
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(contract("ignition amplitude must be positive"));
    }
    Ok(finish(
        ReactionKind::Ignition,
        theta0,
        1.0,
        1.0,
        1.0,
        Shape::QuadraticCap { theta0, amplitude },
    ))
}

/// `f = γ u^α` on `(0, θ₀]` glued to zero at `u = 1`.
pub fn make_alpha_monostable(alpha: f64, gamma: f64, gamma_prime: f64, theta0: f64) -> Result<ReactionSpec> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(contract(format!("alpha must be at least 1, got {alpha}")));
    }
    if !(gamma > 0.0 && gamma <= gamma_prime && gamma_prime.is_finite()) {
        return Err(contract("need 0 < gamma <= gamma_prime"));
    }
    check_unit_open("theta0", theta0)?;
    let kind = if alpha == 1.0 { ReactionKind::Kpp } else { ReactionKind::AlphaMonostable };
    Ok(finish(kind, theta0, alpha, gamma, gamma_prime, Shape::PowerHermite { alpha, gamma, theta0 }))
}

/// `f = γ u^α (1-u)`; `θ₀` only sets the range on which the power bounds are
/// recorded (`γ(1-θ₀) u^α ≤ f ≤ γ u^α`).
pub fn make_power_logistic(alpha: f64, gamma: f64, theta0: f64) -> Result<ReactionSpec> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(contract(format!("alpha must be at least 1, got {alpha}")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(contract("gamma must be positive"));
    }
    check_unit_open("theta0", theta0)?;
    let kind = if alpha == 1.0 { ReactionKind::Kpp } else { ReactionKind::AlphaMonostable };
    Ok(finish(
        kind,
        theta0,
        alpha,
        gamma * (1.0 - theta0),
        gamma,
        Shape::PowerLogistic { alpha, gamma },
    ))
}

/// Fisher-KPP `f = rate · u(1-u)`.
pub fn make_kpp(rate: f64) -> Result<ReactionSpec> {
    make_power_logistic(1.0, rate, 0.5)
}

pub fn make_bistable(theta0: f64, amplitude: f64) -> Result<ReactionSpec> {
    check_unit_open("theta0", theta0)?;
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(contract("bistable amplitude must be positive"));
    }
    Ok(finish(
        ReactionKind::Bistable,
        theta0,
        1.0,
        1.0,
        1.0,
        Shape::CubicBistable { theta0, amplitude },
    ))
}

/// Wraps an arbitrary shape; constants are recomputed, class parameters are
/// taken as given and checked only by [`ReactionSpec::validate`].
pub fn make_from_shape(kind: ReactionKind, theta0: f64, alpha: f64, gamma: f64, gamma_prime: f64, shape: Shape) -> Result<ReactionSpec> {
    if let Shape::Table { values } = &shape {
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Data("reaction table needs at least two finite values".into()));
        }
    }
    Ok(finish(kind, theta0, alpha, gamma, gamma_prime, shape))
}

impl ReactionSpec {
    pub fn eval(&self, u: f64) -> f64 {
        self.shape.eval(u)
    }

    /// Sampled `inf_{u ∈ [a, b]} f(u)` times [`INF_SAFETY`].
    pub fn inf_on(&self, a: f64, b: f64) -> f64 {
        let n = VALIDATION_SAMPLES;
        let m = (0..=n)
            .map(|j| self.eval(a + (b - a) * j as f64 / n as f64))
            .fold(f64::INFINITY, f64::min);
        if m > 0.0 {
            m * INF_SAFETY
        } else {
            m
        }
    }

    /// One-sided derivative at `u = 0` by a small forward difference.
    pub fn derivative_at_zero(&self) -> f64 {
        let h = 1e-7;
        self.eval(h) / h
    }

    /// Re-checks every class invariant on [`VALIDATION_SAMPLES`] points.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut flag = |u: f64, message: String| report.violations.push(Violation { u, message });
        for (u, v) in [(0.0, self.eval(0.0)), (1.0, self.eval(1.0))] {
            if v.abs() > 1e-12 {
                flag(u, format!("f({u}) = {v:e}, expected 0"));
            }
        }
        let n = VALIDATION_SAMPLES;
        let samples: Vec<(f64, f64)> = (1..n)
            .map(|j| {
                let u = j as f64 / n as f64;
                (u, self.eval(u))
            })
            .collect();
        let th = self.theta0;
        for &(u, v) in &samples {
            if !v.is_finite() {
                flag(u, "non-finite value".into());
                continue;
            }
            match self.kind {
                ReactionKind::Ignition => {
                    if u <= th && v != 0.0 {
                        flag(u, format!("ignition reaction nonzero below theta0: f = {v:e}"));
                    } else if u > th && v <= 0.0 {
                        flag(u, format!("ignition reaction not positive above theta0: f = {v:e}"));
                    }
                }
                ReactionKind::AlphaMonostable | ReactionKind::Kpp => {
                    if v <= 0.0 {
                        flag(u, format!("monostable reaction not positive: f = {v:e}"));
                    }
                    if u <= th {
                        let p = u.powf(self.alpha);
                        let rel = 1e-12;
                        if v < self.gamma * p * (1.0 - rel) {
                            flag(u, format!("below gamma u^alpha: f = {v:e}, bound {:e}", self.gamma * p));
                        }
                        if v > self.gamma_prime * p * (1.0 + rel) {
                            flag(u, format!("above gamma' u^alpha: f = {v:e}, bound {:e}", self.gamma_prime * p));
                        }
                    }
                }
                ReactionKind::Bistable => {
                    if u < th && v >= 0.0 {
                        flag(u, format!("bistable reaction not negative below theta0: f = {v:e}"));
                    } else if u > th && v <= 0.0 {
                        flag(u, format!("bistable reaction not positive above theta0: f = {v:e}"));
                    }
                }
            }
        }
        if self.kind == ReactionKind::Bistable {
            let integral: f64 = samples.iter().map(|&(_, v)| v).sum::<f64>() / n as f64;
            if integral <= 0.0 {
                flag(f64::NAN, format!("bistable reaction has nonpositive integral {integral:e}"));
            }
        }
        let mut prev = (0.0, self.eval(0.0));
        for &(u, v) in samples.iter().chain(std::iter::once(&(1.0, self.eval(1.0)))) {
            let q = (v - prev.1).abs() / (u - prev.0);
            if q > self.lipschitz * 1.0001 {
                flag(u, format!("difference quotient {q:e} exceeds Lipschitz bound {:e}", self.lipschitz));
            }
            prev = (u, v);
        }
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ignition_examples() {
        let f = make_ignition(0.25, 1.0).unwrap();
        assert_eq!(f.eval(0.25), 0.0);
        assert_eq!(f.eval(1.0), 0.0);
        assert!(f.eval(0.625) > 0.0);
        assert_eq!(f.eval(0.1), 0.0);
        assert!((f.sup_norm - 1.0).abs() < 1e-6);
        assert!(f.inf_on(0.4125, 0.9) > 0.0);
        assert!(f.validate().is_clean());
        assert!(make_ignition(1.0, 1.0).is_err());
        assert!(make_ignition(0.0, 1.0).is_err());
    }

    #[test]
    fn monostable_examples() {
        let f = make_alpha_monostable(2.0, 1.0, 1.0, 0.5).unwrap();
        assert!((f.eval(0.25) - 0.0625).abs() < 1e-15);
        assert!(f.validate().is_clean(), "{:?}", f.validate());
        let kpp = make_kpp(1.0).unwrap();
        assert_eq!(kpp.kind, ReactionKind::Kpp);
        assert!((kpp.derivative_at_zero() - 1.0).abs() < 1e-6);
        assert!(kpp.validate().is_clean());
        assert!(make_alpha_monostable(0.5, 1.0, 1.0, 0.5).is_err());
        assert!(make_alpha_monostable(2.0, 2.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn bistable_is_valid() {
        let f = make_bistable(0.3, 1.0).unwrap();
        assert!(f.validate().is_clean(), "{:?}", f.validate());
        let balanced = make_from_shape(
            ReactionKind::Bistable,
            0.6,
            1.0,
            1.0,
            1.0,
            Shape::CubicBistable { theta0: 0.6, amplitude: 1.0 },
        )
        .unwrap();
        assert!(!balanced.validate().is_clean());
    }

    #[test]
    fn hacked_ignition_is_flagged() {
        let base = make_ignition(0.25, 1.0).unwrap();
        let n = 1000;
        let mut values: Vec<f64> = (0..=n).map(|j| base.eval(j as f64 / n as f64)).collect();
        values[125] = 0.1;
        let hacked = make_from_shape(ReactionKind::Ignition, 0.25, 1.0, 1.0, 1.0, Shape::Table { values }).unwrap();
        let report = hacked.validate();
        assert!(report.violations.iter().any(|v| (v.u - 0.125).abs() < 2e-3));
    }

    #[test]
    fn loose_monostable_bound_is_flagged() {
        let f = make_from_shape(
            ReactionKind::AlphaMonostable,
            0.5,
            2.0,
            1.0,
            1.0,
            Shape::PowerHermite { alpha: 2.0, gamma: 1.5, theta0: 0.5 },
        )
        .unwrap();
        assert!(f.validate().violations.iter().any(|v| v.message.contains("above")));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn constructed_specs_validate(theta0 in 0.05f64..0.9, alpha in 1.0f64..4.0, amp in 0.1f64..5.0) {
            let ign = make_ignition(theta0, amp).unwrap();
            prop_assert!(ign.validate().is_clean());
            let mono = make_alpha_monostable(alpha, amp, amp * 1.5, theta0).unwrap();
            prop_assert!(mono.validate().is_clean(), "{:?}", mono.validate().violations.first());
            let pl = make_power_logistic(alpha, amp, theta0).unwrap();
            prop_assert!(pl.validate().is_clean(), "{:?}", pl.validate().violations.first());
        }

        #[test]
        fn lipschitz_bound_holds(theta0 in 0.05f64..0.9, u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let f = make_ignition(theta0, 1.0).unwrap();
            prop_assume!((u - v).abs() > 1e-9);
            let q = (f.eval(u) - f.eval(v)).abs() / (u - v).abs();
            prop_assert!(q <= f.lipschitz * 1.0001);
        }

        #[test]
        fn ignition_positive_above_theta0(theta0 in 0.05f64..0.85, frac in 0.01f64..0.99) {
            let f = make_ignition(theta0, 1.0).unwrap();
            let theta = theta0 + (1.0 - theta0) * frac;
            let lo = theta0 + (theta - theta0) * 0.5;
            prop_assert!(f.inf_on(lo, theta) > 0.0);
        }
    }
}

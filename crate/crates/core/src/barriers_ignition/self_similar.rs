use serde::{Deserialize, Serialize};

use super::bump::{BumpProfile, ScaledBump};
use crate::error::{contract, Result};
use crate::fractional_operator::{quadrature_apply_at, Profile1d, ProfileRef, QuadratureScheme, Radial};
use crate::reactions::ReactionSpec;

/// Expanding subsolution `Ψ(t, x) = ū(b t^{-1/(2s)} x)` built on a certified bump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarSub {
    pub bump: BumpProfile,
    pub s: f64,
    pub dimension: usize,
    /// Compression factor `b = (L a / (2 s ε))^{1/(2s)}`.
    pub b: f64,
}

pub fn build_self_similar_sub(bump: BumpProfile) -> Result<SelfSimilarSub> {
    if !(bump.margin > 0.0) {
        return Err(contract("bump margin must be positive"));
    }
    let s = bump.s;
    let b = (bump.lipschitz * bump.support_end / (2.0 * s * bump.margin)).powf(0.5 / s);
    Ok(SelfSimilarSub { s, dimension: bump.dimension, b, bump })
}

impl SelfSimilarSub {
    /// Earliest time at which `Ψ` is a subsolution.
    pub fn t_min(&self) -> f64 {
        self.b.powf(2.0 * self.s)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t >= self.t_min() * (1.0 - 1e-12) {
            Ok(())
        } else {
            Err(contract(format!("t = {t} precedes b^(2s) = {}", self.t_min())))
        }
    }

    fn compression(&self, t: f64) -> f64 {
        self.b * t.powf(-0.5 / self.s)
    }

    /// `Ψ(t, ·)` as a radial shape in `x`.
    pub fn slice(&self, t: f64) -> Result<ScaledBump> {
        self.check_time(t)?;
        let c = self.compression(t);
        let lifted = self.bump.lifted();
        Ok(ScaledBump { shape: lifted.shape, scale: lifted.scale / c, offset: lifted.offset / c })
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_time(t)?;
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(self.bump.radial_value(self.compression(t) * r))
    }

    /// `∂_t Ψ(t, x)`, from `-(1/(2s)) y ū'(y) / t` with `y = b t^{-1/(2s)} |x|`.
    pub fn time_derivative(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_time(t)?;
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y = self.compression(t) * r;
        let lifted = self.bump.lifted();
        let du = lifted.shape.derivative((y - lifted.offset) / lifted.scale) / lifted.scale;
        Ok(-y * du / (2.0 * self.s * t))
    }

    /// `Ψ_t + (-Δ)^s Ψ - f(Ψ)`; nonpositive where `Ψ` is a subsolution.
    pub fn residual_at(&self, t: f64, x: &[f64], f: &ReactionSpec, scheme: &QuadratureScheme) -> Result<f64> {
        let slice = self.slice(t)?;
        let radial = Radial(slice);
        let q = match x.len() {
            1 => quadrature_apply_at(ProfileRef::Line(&radial), x, self.s, scheme)?,
            2 => quadrature_apply_at(ProfileRef::Plane(&radial), x, self.s, scheme)?,
            n => return Err(contract(format!("point dimension must be 1 or 2, got {n}"))),
        };
        let u = Profile1d::value(&radial, x.iter().map(|v| v * v).sum::<f64>().sqrt());
        Ok(self.time_derivative(t, x)? + q.value - f.eval(u))
    }

    /// Quadrature scheme resolving `Ψ(t, ·)`.
    pub fn scheme_at(&self, t: f64) -> Result<QuadratureScheme> {
        let c = self.compression(t);
        QuadratureScheme::new(self.s, self.dimension, 0.01 * self.bump.scale_r / c)
    }

    /// Position of the `λ`-level of `Ψ(t, ·)`: `C_λ b^{-1} t^{1/(2s)}`.
    pub fn level_position(&self, t: f64, lambda: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.bump.level_position(lambda)? / self.compression(t))
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lemma81::{estimate_lemma81_constants_with, Lemma81Constants, SweepGrid};
use super::smoothing::{build_smoothing, Smoothing};
use crate::error::{contract, LabError, Result};
use crate::fractional_operator::{
    quadrature_apply_at, Breakpoint, ProfileRef, QuadratureScheme, Radial, RadialShape, Tail,
};
use crate::reactions::{ReactionKind, ReactionSpec};

/// Floor below which `δ` is treated as vanishing.
pub const DELTA_FLOOR: f64 = 1e-12;
pub const LADDER_TOP: u32 = 30;
pub const SAMPLES_PER_TIME: usize = 256;
pub const TIMES_PER_BLOCK: usize = 3;
/// Blocks after the first passing one that must also pass.
pub const CONFIRM_BLOCKS: u32 = 2;

/// The expanding monostable subsolution `Ψ_θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonostableBarrier {
    pub alpha: f64,
    pub s: f64,
    pub d: usize,
    pub theta: f64,
    pub gamma: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub beta: f64,
    pub kappa: f64,
    pub nu: f64,
    pub tau: f64,
    pub delta: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub smoothing: Smoothing,
    pub lemma81: Lemma81Constants,
    pub t_theta: Option<f64>,
}

pub fn build_monostable_sub(theta: f64, f: &ReactionSpec, s: f64, d: usize) -> Result<MonostableBarrier> {
    build_monostable_sub_with(theta, f, s, d, &SweepGrid::default())
}

pub fn build_monostable_sub_with(
    theta: f64,
    f: &ReactionSpec,
    s: f64,
    d: usize,
    grid: &SweepGrid,
) -> Result<MonostableBarrier> {
    let alpha = f.alpha;
    if f.kind != ReactionKind::AlphaMonostable || !(alpha > 1.0) {
        return Err(contract("the monostable subsolution needs an alpha-monostable reaction with alpha > 1"));
    }
    if !(s > 0.0 && s < 1.0 && s < alpha / (2.0 * (alpha - 1.0))) {
        return Err(contract(format!("need s < min(alpha/(2(alpha-1)), 1), got s = {s}")));
    }
    if d != 1 && d != 2 {
        return Err(contract(format!("dimension must be 1 or 2, got {d}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(contract(format!("theta must lie in (0, 1), got {theta}")));
    }
    let df = d as f64;
    let beta = (df + 2.0 * s) * (alpha - 1.0);
    let kappa = beta * alpha / (2.0 * s * (alpha - 1.0));
    let nu = alpha - 1.0;
    let theta1 = f.theta0.min(theta / 2.0);
    let theta2 = (1.0 + theta) / 2.0;
    let lemma81 = estimate_lemma81_constants_with(s, beta, nu, theta1, d, grid)?;
    let (c81, big_c81) = (lemma81.c_star_81, lemma81.big_c_star_81);
    let tau = lemma81
        .tau0
        .min(c81 / (((df + 2.0 * s) / beta).exp2() * big_c81 * theta1));
    let delta = f.inf_on(tau * theta1, theta);
    if !(delta > DELTA_FLOOR) {
        return Err(contract(format!("inf of f on [tau*theta1, theta] underflows: {delta:e}")));
    }
    let gamma = f.gamma;
    let a3 = 1f64
        .min((alpha - 1.0) * gamma / (2.0 * kappa - 1.0))
        .min((alpha - 1.0) * delta / (4.0 * kappa * theta2.powf(alpha)));
    let a1 = ((alpha - 1.0) * c81 / ((1.0 + (df + 2.0 * s) / beta).exp2() * (2.0 * kappa - 1.0))).powf(beta / (2.0 * s))
        * a3.powf(df / (2.0 * s));
    let a2 = a1 * a3;
    if !(a1 > 0.0 && a1.is_finite() && a2 > 0.0) {
        return Err(contract(format!("degenerate constants a1 = {a1:e}, a2 = {a2:e}")));
    }
    let smoothing = build_smoothing(theta, theta1, theta2)?;
    Ok(MonostableBarrier {
        alpha,
        s,
        d,
        theta,
        gamma,
        theta1,
        theta2,
        beta,
        kappa,
        nu,
        tau,
        delta,
        a1,
        a2,
        a3,
        smoothing,
        lemma81,
        t_theta: None,
    })
}

impl MonostableBarrier {
    /// `X_t(u) = (u^{1-α} a₁ t^{κ-1} + a₂ t^κ)^{1/β}`.
    pub fn x_t(&self, t: f64, u: f64) -> f64 {
        (u.powf(1.0 - self.alpha) * self.a1 * t.powf(self.kappa - 1.0) + self.a2 * t.powf(self.kappa)).powf(1.0 / self.beta)
    }

    /// `ψ_θ(t, r)`, defined for `r^β > a₂ t^κ`.
    pub fn psi(&self, t: f64, r: f64) -> f64 {
        let w = t.powf(1.0 - self.kappa) * (r.powf(self.beta) - self.a2 * t.powf(self.kappa)) / self.a1;
        if w <= 0.0 {
            return f64::INFINITY;
        }
        w.powf(-1.0 / self.nu)
    }

    pub fn eval(&self, t: f64, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.x_t(t, self.theta2) {
            self.theta
        } else {
            self.smoothing.value(self.psi(t, r))
        }
    }

    /// `∂_t Ψ_θ(t, r)`.
    pub fn time_derivative(&self, t: f64, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.x_t(t, self.theta2) {
            return 0.0;
        }
        let p = self.psi(t, r);
        let dpsi = p.powf(self.alpha) / self.a1 * ((self.kappa - 1.0) * t.powf(-self.kappa) * r.powf(self.beta) + self.a2)
            / (self.alpha - 1.0);
        self.smoothing.derivative(p) * dpsi
    }

    /// Level position `x̲_λ(t; Ψ_θ)`; equals `X_t(λ)` for `λ ≤ θ₁`.
    pub fn level_position(&self, t: f64, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda < self.theta) {
            return Err(contract("level must lie in (0, theta)"));
        }
        if lambda <= self.theta1 {
            return Ok(self.x_t(t, lambda));
        }
        let (mut lo, mut hi) = (self.x_t(t, self.theta2), self.x_t(t, self.theta1));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.eval(t, mid) > lambda {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn slice(&self, t: f64) -> MonostableSlice<'_> {
        MonostableSlice { barrier: self, t }
    }

    /// Sample radii for the residual check at time `t`.
    pub fn certification_radii(&self, t: f64, n: usize) -> Vec<f64> {
        let x2 = self.x_t(t, self.theta2);
        let xt = self.x_t(t, self.tau * self.theta1);
        let n_core = n / 8;
        let n_levels = n / 2;
        let n_far = n - n_core - n_levels;
        let mut out: Vec<f64> = (0..n_core).map(|i| x2 * i as f64 / n_core as f64).collect();
        // geometric in value between θ₂ and τθ₁
        let (lu, ld) = (self.theta2.ln(), (self.tau * self.theta1).ln());
        out.extend((0..n_levels).map(|i| self.x_t(t, (lu + (ld - lu) * (i as f64 + 0.5) / n_levels as f64).exp())));
        out.extend((0..n_far).map(|i| xt + 3.0 * xt * (i as f64 + 1.0) / n_far as f64));
        out
    }

    /// `∂_tΨ + (-Δ)^sΨ - f(Ψ)` at radius `r` (evaluated at `(r, 0)` in 2D).
    pub fn residual_at(&self, t: f64, r: f64, f: &ReactionSpec, quad_scale: f64) -> Result<f64> {
        let slice = self.slice(t);
        let local = slice.local_scale(r);
        let scheme = QuadratureScheme::new(self.s, self.d, 0.05 * local)?.refined(quad_scale);
        let radial = Radial(slice);
        let q = match self.d {
            1 => quadrature_apply_at(ProfileRef::Line(&radial), &[r], self.s, &scheme)?,
            _ => quadrature_apply_at(ProfileRef::Plane(&radial), &[r, 0.0], self.s, &scheme)?,
        };
        Ok(self.time_derivative(t, r) + q.value - f.eval(self.eval(t, r)))
    }

    /// Worst residual at time `t` over the certification radii: `(max, radius)`.
    pub fn worst_residual(&self, t: f64, f: &ReactionSpec, n: usize, quad_scale: f64) -> Result<(f64, f64)> {
        let radii = self.certification_radii(t, n);
        let vals: Vec<f64> = radii
            .par_iter()
            .map(|&r| self.residual_at(t, r, f, quad_scale))
            .collect::<Result<_>>()?;
        Ok(radii
            .iter()
            .zip(&vals)
            .fold((f64::NEG_INFINITY, f64::NAN), |acc, (&r, &v)| if v > acc.0 { (v, r) } else { acc }))
    }
}

/// Residual trace entry of the `T_θ` search: `(t, max residual, radius)`.
pub type TraceEntry = (f64, f64, f64);

fn block_passes(b: &MonostableBarrier, f: &ReactionSpec, j: u32, tol: f64, trace: &mut Vec<TraceEntry>) -> Result<bool> {
    for i in 0..TIMES_PER_BLOCK {
        let t = (j as f64 + i as f64 / TIMES_PER_BLOCK as f64).exp2();
        let (w, r) = b.worst_residual(t, f, SAMPLES_PER_TIME, 1.0)?;
        trace.push((t, w, r));
        if w > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest ladder time `2^j` from which the sampled residual stays below
/// `tolerance` (the block and the next `CONFIRM_BLOCKS` blocks are checked).
pub fn find_t_theta(barrier: &mut MonostableBarrier, f: &ReactionSpec, tolerance: f64) -> Result<f64> {
    let mut trace = Vec::new();
    let mut j = 0;
    while j <= LADDER_TOP {
        if block_passes(barrier, f, j, tolerance, &mut trace)? {
            let mut confirmed = true;
            for extra in 1..=CONFIRM_BLOCKS {
                if !block_passes(barrier, f, j + extra, tolerance, &mut trace)? {
                    confirmed = false;
                    j += extra;
                    break;
                }
            }
            if confirmed {
                let t = (j as f64).exp2();
                barrier.t_theta = Some(t);
                return Ok(t);
            }
        }
        j += 1;
    }
    let tail: Vec<String> = trace
        .iter()
        .rev()
        .take(6)
        .map(|(t, w, r)| format!("t={t:.3e}: {w:.3e} at r={r:.3e}"))
        .collect();
    let (w, r) = trace.last().map(|e| (e.1, e.2)).unwrap_or((f64::NAN, f64::NAN));
    Err(LabError::Construction {
        message: format!("ladder exhausted at 2^{LADDER_TOP}; last residuals: {}", tail.join("; ")),
        worst_residual: w,
        worst_x: r,
    })
}

/// `Ψ_θ(t, ·)` as a radial shape.
pub struct MonostableSlice<'a> {
    barrier: &'a MonostableBarrier,
    t: f64,
}

/// Value-geometric structure radii below `θ₂`.
const LEVEL_BREAKS: usize = 48;

impl MonostableSlice<'_> {
    fn singular_radius(&self) -> f64 {
        let b = self.barrier;
        (b.a2 * self.t.powf(b.kappa)).powf(1.0 / b.beta)
    }

    /// Distance to the singular radius of `ψ_θ`, floored by the core size.
    pub fn local_scale(&self, r: f64) -> f64 {
        let b = self.barrier;
        let x2 = b.x_t(self.t, b.theta2);
        let r0 = self.singular_radius();
        (r.abs().max(x2) - r0).max(1e-6 * x2)
    }
}

impl RadialShape for MonostableSlice<'_> {
    fn value(&self, r: f64) -> f64 {
        self.barrier.eval(self.t, r)
    }
    fn tail(&self) -> Option<Tail> {
        let b = self.barrier;
        let amp = (b.a1 * self.t.powf(b.kappa - 1.0)).powf(1.0 / b.nu);
        Some(Tail::algebraic(0.0, amp, b.beta / b.nu))
    }
    fn extent(&self) -> f64 {
        4.0 * self.barrier.x_t(self.t, self.barrier.tau * self.barrier.theta1)
    }
    fn feature_scale(&self) -> f64 {
        self.barrier.x_t(self.t, self.barrier.theta2)
    }
    fn breakpoints(&self) -> Vec<Breakpoint> {
        let b = self.barrier;
        let ext = self.extent();
        let mut out = Vec::new();
        for i in 0..=4 {
            let u = b.theta2 + (b.theta1 - b.theta2) * i as f64 / 4.0;
            out.push(Breakpoint::smooth(b.x_t(self.t, u)));
        }
        for j in 1..=LEVEL_BREAKS {
            let r = b.x_t(self.t, b.theta1 * (-(j as f64)).exp2());
            if r > ext {
                break;
            }
            out.push(Breakpoint::smooth(r));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reactions::make_power_logistic;

    fn small_grid() -> SweepGrid {
        SweepGrid { a_values: vec![0.01, 1.0], b_values: vec![1.0, 1e3], radii: 12, level_decades: 3.0 }
    }

    #[test]
    fn derived_exponents() {
        let f = make_power_logistic(2.0, 5.0, 0.3).unwrap();
        let b = build_monostable_sub_with(0.8, &f, 0.4, 1, &small_grid()).unwrap();
        assert!((b.beta - 1.8).abs() < 1e-15);
        assert!((b.kappa - 4.5).abs() < 1e-14);
        assert!(b.kappa > b.beta);
        assert_eq!((b.theta1, b.theta2), (0.3, 0.9));
        assert!((b.a2 - b.a1 * b.a3).abs() <= 1e-15 * b.a2);
    }

    #[test]
    fn level_map_inverts_and_is_monotone() {
        let f = make_power_logistic(2.0, 5.0, 0.3).unwrap();
        let b = build_monostable_sub_with(0.8, &f, 0.4, 1, &small_grid()).unwrap();
        for t in [1.0, 37.0, 1e4] {
            for u in [b.theta2, b.theta1, b.tau * b.theta1] {
                let r = b.x_t(t, u);
                assert!((b.psi(t, r) - u).abs() <= 1e-10 * u.max(1.0));
            }
            assert!((b.eval(t, b.x_t(t, b.theta2)) - b.theta).abs() < 1e-12);
            let mut prev = f64::INFINITY;
            for i in 0..500 {
                let r = 4.0 * b.x_t(t, b.tau * b.theta1) * i as f64 / 499.0;
                let v = b.eval(t, r);
                assert!(v <= prev + 1e-15 && (0.0..=b.theta).contains(&v));
                prev = v;
            }
        }
    }

    #[test]
    fn time_derivative_matches_difference() {
        let f = make_power_logistic(2.0, 5.0, 0.3).unwrap();
        let b = build_monostable_sub_with(0.8, &f, 0.4, 1, &small_grid()).unwrap();
        let t = 50.0;
        for u in [0.85, 0.5, 0.2, 0.01] {
            let r = b.x_t(t, u);
            let h = 1e-5 * t;
            let fd = (b.eval(t + h, r) - b.eval(t - h, r)) / (2.0 * h);
            let an = b.time_derivative(t, r);
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-12), "u={u} fd={fd} an={an}");
        }
    }

    #[test]
    fn rejects_condition_violation() {
        let f = make_power_logistic(2.0, 5.0, 0.3).unwrap();
        assert!(matches!(build_monostable_sub(0.8, &f, 1.0, 1), Err(LabError::Contract(_))));
        let f3 = make_power_logistic(3.0, 5.0, 0.3).unwrap();
        // α/(2(α-1)) = 0.75
        assert!(matches!(build_monostable_sub(0.8, &f3, 0.8, 1), Err(LabError::Contract(_))));
    }
}

use serde::{Deserialize, Serialize};

use super::sequences::{build_sequences, window_log2};
use crate::error::{contract, LabError, Result};
use crate::fractional_operator::{calibrate_constant, Breakpoint, Profile1d, Tail};
use crate::reactions::{ReactionKind, ReactionSpec};

/// The moving piecewise supersolution `Φ^k` for ignition reactions, `s < 1/2`.
///
/// Positions are handled in the frame `z = x - c_* t^{1/(2s)}` because the
/// shift is astronomically large for realistic parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgnitionSuperBarrier {
    pub k: usize,
    pub s: f64,
    pub theta0: f64,
    pub theta_star: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `θ_{-1}^k, θ_0^k, ..., θ_k^k`.
    pub thetas: Vec<f64>,
    pub c_star: f64,
    /// The constant `max{c_s/(2s(1-2s)), 1}`.
    pub big_c_s: f64,
    /// The 1D normalization constant of the fractional Laplacian.
    pub c_s: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub sup_norm: f64,
    /// `log2` of the open validity window.
    pub window_log2: (f64, f64),
}

pub fn build_supersolution(k: usize, s: f64, f: &ReactionSpec) -> Result<IgnitionSuperBarrier> {
    if !(s > 0.0 && s < 0.5) {
        return Err(contract(format!("the ignition supersolution needs s in (0, 1/2), got {s}")));
    }
    if f.kind != ReactionKind::Ignition {
        return Err(contract("the ignition supersolution needs an ignition reaction"));
    }
    let (lo, hi) = window_log2(k, s);
    if !(lo < hi) {
        return Err(LabError::Window(format!(
            "window (2^{lo:.4}, 2^{hi:.4}) is empty for k = {k}, s = {s}"
        )));
    }
    let seq = build_sequences(k, s)?;
    let q = 2.0 * s;
    let theta_star = f.theta0 / 2.0;
    let mut thetas = vec![1.0];
    thetas.extend((0..=k).map(|n| (1.0 - (n as f64 - k as f64 - 1.0).exp2()) * theta_star));
    let c_s = calibrate_constant(s, 1)?;
    let big_c_s = (c_s / (q * (1.0 - q))).max(1.0);
    let gamma0 = (4.0 / theta_star).powf(1.0 / s);
    let gamma1 = (1.0 + 1.0 / ((1.0 - q) * (1.0 - q))).exp2();
    let c_star = (big_c_s + 2.0 * f.sup_norm)
        .max((big_c_s * gamma0).powf(1.0 / s))
        .max((big_c_s * gamma0 * gamma1.powf(q)).powi(2));
    if !c_star.is_finite() {
        return Err(contract(format!("c_* overflows for s = {s}, theta0 = {}", f.theta0)));
    }
    Ok(IgnitionSuperBarrier {
        k,
        s,
        theta0: f.theta0,
        theta_star,
        alphas: seq.alphas,
        betas: seq.betas,
        thetas,
        c_star,
        big_c_s,
        c_s,
        gamma0,
        gamma1,
        sup_norm: f.sup_norm,
        window_log2: (lo, hi),
    })
}

impl IgnitionSuperBarrier {
    /// `θ_n^k` for `n ≥ -1`.
    pub fn theta(&self, n: isize) -> f64 {
        self.thetas[(n + 1) as usize]
    }

    pub fn window(&self) -> (f64, f64) {
        (self.window_log2.0.exp2(), self.window_log2.1.exp2())
    }

    pub fn in_window(&self, t: f64) -> bool {
        let l = t.log2();
        l > self.window_log2.0 && l < self.window_log2.1
    }

    fn require_window(&self, t: f64) -> Result<()> {
        if self.in_window(t) {
            Ok(())
        } else {
            let (a, b) = self.window_log2;
            Err(LabError::Window(format!("t = {t} outside (2^{a:.4}, 2^{b:.4})")))
        }
    }

    /// Frame shift `c_* t^{1/(2s)}`.
    pub fn shift(&self, t: f64) -> f64 {
        self.c_star * t.powf(0.5 / self.s)
    }

    fn power(&self, j: usize) -> f64 {
        0.5 / self.s - (2.0 * self.s).powi(j as i32)
    }

    /// `l_n^k(t)` for `n ≥ -1`.
    pub fn l(&self, n: isize, t: f64) -> f64 {
        (0..=n).map(|j| self.betas[j as usize] * t.powf(self.power(j as usize))).sum()
    }

    fn l_dot(&self, n: isize, t: f64) -> f64 {
        (0..=n)
            .map(|j| {
                let p = self.power(j as usize);
                self.betas[j as usize] * p * t.powf(p - 1.0)
            })
            .sum()
    }

    /// Tail coefficient `c_*^{-1/2} t^{-1/(2s)}`.
    fn tail_rate(&self, t: f64) -> f64 {
        self.c_star.powf(-0.5) * t.powf(-0.5 / self.s)
    }

    /// Junction offsets `0, l_0, ..., l_k` in the moving frame.
    pub fn junctions(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0];
        out.extend((0..=self.k as isize).map(|n| self.l(n, t)));
        out
    }

    /// `Φ^k(t, c_* t^{1/(2s)} + z)` without a window check.
    pub fn eval_shifted(&self, t: f64, z: f64) -> f64 {
        if z <= 0.0 {
            return 1.0;
        }
        let mut prev = 0.0;
        for n in 0..=self.k as isize {
            let ln = self.l(n, t);
            if z <= ln {
                let (a, b) = (self.theta(n - 1), self.theta(n));
                return a - (a - b) * (z - prev) / (ln - prev);
            }
            prev = ln;
        }
        let y = z - prev;
        (self.theta(self.k as isize).powf(-0.5 / self.s) + self.tail_rate(t) * y).powf(-2.0 * self.s)
    }

    pub fn eval_phi(&self, t: f64, x: f64) -> Result<f64> {
        self.require_window(t)?;
        Ok(self.eval_shifted(t, x - self.shift(t)))
    }

    /// `∂_t Φ^k` at frame offset `z`, from the closed form of each branch.
    pub fn time_derivative_shifted(&self, t: f64, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let s = self.s;
        let shift_dot = self.c_star * (0.5 / s) * t.powf(0.5 / s - 1.0);
        let mut prev = 0.0;
        let mut prev_dot = 0.0;
        for n in 0..=self.k as isize {
            let ln = self.l(n, t);
            let ln_dot = self.l_dot(n, t);
            if z <= ln {
                let dth = self.theta(n - 1) - self.theta(n);
                let width = ln - prev;
                let g_z = -dth / width;
                let g_t = dth * (prev_dot * width + (z - prev) * (ln_dot - prev_dot)) / (width * width);
                return g_t - shift_dot * g_z;
            }
            prev = ln;
            prev_dot = ln_dot;
        }
        let y = z - prev;
        let q = self.tail_rate(t);
        let q_dot = -(0.5 / s) * q / t;
        let bracket = self.theta(self.k as isize).powf(-0.5 / s) + q * y;
        let outer = -2.0 * s * bracket.powf(-2.0 * s - 1.0);
        let g_z = outer * q;
        let g_t = outer * (q_dot * y - q * prev_dot);
        g_t - shift_dot * g_z
    }

    /// Frame offset of `x̄_λ(t; Φ^k)`, obtained by inverting the branch that
    /// takes the value `λ`.
    pub fn level_over_shifted(&self, t: f64, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(contract("lambda must lie in (0, 1)"));
        }
        let theta_k = self.theta(self.k as isize);
        if lambda < theta_k {
            let y = (lambda.powf(-0.5 / self.s) - theta_k.powf(-0.5 / self.s)) / self.tail_rate(t);
            return Ok(self.l(self.k as isize, t) + y);
        }
        let mut prev = 0.0;
        for n in 0..=self.k as isize {
            let ln = self.l(n, t);
            let (a, b) = (self.theta(n - 1), self.theta(n));
            if lambda >= b {
                return Ok(prev + (a - lambda) / (a - b) * (ln - prev));
            }
            prev = ln;
        }
        Err(LabError::Internal("level inversion fell through".into()))
    }

    /// `Φ^k(t, ·)` as a profile of the frame offset.
    pub fn slice(&self, t: f64) -> PhiSlice<'_> {
        let junctions = self.junctions(t);
        let theta_k = self.theta(self.k as isize);
        let tail_scale = theta_k.powf(-0.5 / self.s) / self.tail_rate(t);
        PhiSlice { barrier: self, t, junctions, tail_scale }
    }
}

/// `z ↦ Φ^k(t, c_* t^{1/(2s)} + z)` for fixed `t`.
pub struct PhiSlice<'a> {
    barrier: &'a IgnitionSuperBarrier,
    t: f64,
    junctions: Vec<f64>,
    /// Offset beyond the last junction where the tail becomes algebraic.
    tail_scale: f64,
}

impl PhiSlice<'_> {
    pub fn junctions(&self) -> &[f64] {
        &self.junctions
    }
}

impl Profile1d for PhiSlice<'_> {
    fn value(&self, z: f64) -> f64 {
        self.barrier.eval_shifted(self.t, z)
    }
    fn tails(&self) -> Option<(Tail, Tail)> {
        let s = self.barrier.s;
        let amplitude = self.barrier.c_star.powf(s) * self.t;
        Some((Tail::constant(1.0), Tail::algebraic(0.0, amplitude, 2.0 * s)))
    }
    fn extent(&self) -> (f64, f64) {
        (0.0, self.junctions[self.junctions.len() - 1] + 4.0 * self.tail_scale)
    }
    fn feature_scale(&self) -> f64 {
        self.tail_scale
    }
    fn breakpoints(&self) -> Vec<Breakpoint> {
        self.junctions.iter().map(|&z| Breakpoint::kink(z)).collect()
    }
    fn linear_on(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let j = &self.junctions;
        if b <= 0.0 {
            return Some((1.0, 0.0));
        }
        for w in j.windows(2) {
            if a >= w[0] && b <= w[1] {
                let va = self.value(a);
                let slope = (self.value(w[1]) - self.value(w[0])) / (w[1] - w[0]);
                return Some((va, slope));
            }
        }
        None
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, LabError, Result};
use crate::fractional_operator::{
    quadrature_apply_at, Breakpoint, ProfileRef, QuadratureScheme, Radial, RadialShape, Tail,
};

/// Safety factor applied to the fitted constants (`c` divided, `C` multiplied).
pub const SAFETY: f64 = 2.0;
pub const MAX_TAU_HALVINGS: usize = 12;
pub const INITIAL_TAU0: f64 = 0.25;
/// Number of halvings of the far constant tried when balancing `c` against `C`.
const C_LADDER: usize = 40;

/// Radial profile `φ(x) = (a|x|^β - b)^{-1/ν}` outside `X(θ₁)` and `θ₁`
/// inside: the smallest profile the lemma admits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub nu: f64,
    pub theta1: f64,
}

/// Levels `θ₁ 2^{-j}` used as smooth structure radii.
const LEVEL_BREAKS: usize = 40;

impl PowerProfile {
    /// `X(u) = (a^{-1}(u^{-ν} + b))^{1/β}`.
    pub fn radius_of(&self, u: f64) -> f64 {
        ((u.powf(-self.nu) + self.b) / self.a).powf(1.0 / self.beta)
    }

    pub fn x1(&self) -> f64 {
        self.radius_of(self.theta1)
    }

    /// Value of `g(l) = (a l^β - b)^{-1/ν}`, capped at `θ₁`.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.x1() {
            return self.theta1;
        }
        let w = self.a * r.powf(self.beta) - self.b;
        if w <= 0.0 {
            return self.theta1;
        }
        w.powf(-1.0 / self.nu).min(self.theta1)
    }

    /// `g'' + (d-1) g'/l` from the closed form of the derivatives.
    pub fn radial_laplacian(&self, l: f64, d: usize) -> f64 {
        let (a, b, be, nu) = (self.a, self.b, self.beta, self.nu);
        let w = a * l.powf(be) - b;
        let g = w.powf(-1.0 / nu);
        let g1 = -(1.0 / nu) * g.powf(1.0 + nu) * a * be * l.powf(be - 1.0);
        let g2 = (1.0 + nu) / (nu * nu) * g.powf(1.0 + 2.0 * nu) * (a * be * l.powf(be - 1.0)).powi(2)
            - (1.0 / nu) * g.powf(1.0 + nu) * a * be * (be - 1.0) * l.powf(be - 2.0);
        g2 + (d as f64 - 1.0) * g1 / l
    }
}

impl RadialShape for PowerProfile {
    fn value(&self, r: f64) -> f64 {
        self.eval(r)
    }
    fn tail(&self) -> Option<Tail> {
        Some(Tail::algebraic(0.0, self.a.powf(-1.0 / self.nu), self.beta / self.nu))
    }
    fn extent(&self) -> f64 {
        4.0 * self.x1()
    }
    fn feature_scale(&self) -> f64 {
        self.x1()
    }
    fn breakpoints(&self) -> Vec<Breakpoint> {
        let x1 = self.x1();
        let mut out = vec![Breakpoint::kink(x1)];
        for j in 1..=LEVEL_BREAKS {
            let r = self.radius_of(self.theta1 * (-(j as f64)).exp2());
            if r > 4.0 * x1 {
                break;
            }
            out.push(Breakpoint::smooth(r));
        }
        out
    }
}

/// Sweep over the lemma's free parameters `(a, b)` and sample radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub radii: usize,
    /// Sample levels run from `τ₀θ₁` down by this many decades.
    pub level_decades: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            a_values: vec![1e-3, 1e-2, 1e-1, 1.0],
            b_values: (0..=6).map(|i| 10f64.powi(i)).collect(),
            radii: 64,
            level_decades: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma81Constants {
    pub c_star_81: f64,
    pub big_c_star_81: f64,
    pub tau0: f64,
    pub tau_halvings: usize,
    /// Smallest slack of the certified inequality on the check sample.
    pub min_slack: f64,
    pub provenance: String,
}

/// One evaluation: `(-Δ)^s φ(x)` and the two comparison terms.
#[derive(Debug, Clone, Copy)]
struct Sample {
    op: f64,
    /// `X(θ₁)^d |x|^{-d-2s}`
    near: f64,
    /// `|x|^{-2s} φ(x)`
    far: f64,
}

fn scheme_for(prof: &PowerProfile, r: f64, s: f64, d: usize, quad_scale: f64) -> Result<QuadratureScheme> {
    // local length scale: distance to the singular radius of g
    let r0 = (prof.b / prof.a).powf(1.0 / prof.beta);
    let local = (r - r0).max(1e-300);
    Ok(QuadratureScheme::new(s, d, 0.05 * local)?.refined(quad_scale))
}

fn sample_at(prof: &PowerProfile, r: f64, s: f64, d: usize, quad_scale: f64) -> Result<Sample> {
    let scheme = scheme_for(prof, r, s, d, quad_scale)?;
    let radial = Radial(prof.clone());
    let q = match d {
        1 => quadrature_apply_at(ProfileRef::Line(&radial), &[r], s, &scheme)?,
        _ => quadrature_apply_at(ProfileRef::Plane(&radial), &[r, 0.0], s, &scheme)?,
    };
    let x1 = prof.x1();
    Ok(Sample {
        op: q.value,
        near: x1.powi(d as i32) * r.powf(-(d as f64) - 2.0 * s),
        far: r.powf(-2.0 * s) * prof.eval(r),
    })
}

/// `-c X(θ₁)^d |x|^{-d-2s} + C |x|^{-2s} φ(x) - (-Δ)^s φ(x)`.
pub fn lemma81_slack(
    consts: &Lemma81Constants,
    prof: &PowerProfile,
    r: f64,
    s: f64,
    d: usize,
    quad_scale: f64,
) -> Result<f64> {
    let smp = sample_at(prof, r, s, d, quad_scale)?;
    Ok(-consts.c_star_81 * smp.near + consts.big_c_star_81 * smp.far - smp.op)
}

fn check_params(s: f64, beta: f64, nu: f64, theta1: f64, d: usize) -> Result<()> {
    if !(d == 1 || d == 2) {
        return Err(contract(format!("dimension must be 1 or 2, got {d}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(contract(format!("s must lie in (0, 1), got {s}")));
    }
    if !(beta > nu && nu > 0.0) {
        return Err(contract(format!("need beta > nu > 0, got beta = {beta}, nu = {nu}")));
    }
    if beta / nu < d as f64 - 2.0 {
        return Err(contract("need beta/nu >= d - 2"));
    }
    if !(theta1 > 0.0 && theta1 <= 1.0) {
        return Err(contract(format!("theta1 must lie in (0, 1], got {theta1}")));
    }
    Ok(())
}

pub fn estimate_lemma81_constants(s: f64, beta: f64, nu: f64, theta1: f64, d: usize) -> Result<Lemma81Constants> {
    estimate_lemma81_constants_with(s, beta, nu, theta1, d, &SweepGrid::default())
}

fn level(tau0: f64, theta1: f64, i: usize, n: usize, decades: f64) -> f64 {
    tau0 * theta1 * 10f64.powf(-decades * i as f64 / (n.max(2) - 1) as f64)
}

fn collect(
    s: f64,
    beta: f64,
    nu: f64,
    theta1: f64,
    d: usize,
    grid: &SweepGrid,
    tau0: f64,
    offset: f64,
    quad_scale: f64,
) -> Result<Vec<Sample>> {
    let mut jobs = Vec::new();
    for &a in &grid.a_values {
        for &b in &grid.b_values {
            let prof = PowerProfile { a, b, beta, nu, theta1 };
            for i in 0..grid.radii {
                let u = level(tau0, theta1, i, grid.radii, grid.level_decades) * 10f64.powf(-offset);
                jobs.push((prof.clone(), prof.radius_of(u)));
            }
        }
    }
    jobs.par_iter().map(|(p, r)| sample_at(p, *r, s, d, quad_scale)).collect()
}

/// Fitted `(c, C)` with `op ≤ -c near + C far` on every sample. Among the
/// candidates, the largest `c` whose ratio `c/C` already saturates `τ = τ₀`
/// is preferred; otherwise the best ratio.
fn fit(samples: &[Sample], saturating_ratio: f64) -> Option<(f64, f64)> {
    let c_top = samples
        .iter()
        .map(|p| -p.op / p.near)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(c_top > 0.0) {
        return None;
    }
    let candidates: Vec<(f64, f64)> = (0..C_LADDER)
        .map(|j| {
            let c = c_top * (-(j as f64)).exp2();
            let big_c = samples
                .iter()
                .map(|p| (p.op + c * p.near) / p.far)
                .fold(f64::EPSILON * c, f64::max);
            (c, big_c)
        })
        .collect();
    candidates
        .iter()
        .copied()
        .find(|&(c, big_c)| c / big_c >= saturating_ratio)
        .or_else(|| {
            candidates
                .iter()
                .copied()
                .max_by(|x, y| (x.0 / x.1).partial_cmp(&(y.0 / y.1)).unwrap())
        })
}

pub fn estimate_lemma81_constants_with(
    s: f64,
    beta: f64,
    nu: f64,
    theta1: f64,
    d: usize,
    grid: &SweepGrid,
) -> Result<Lemma81Constants> {
    check_params(s, beta, nu, theta1, d)?;
    if grid.radii < 2 || grid.a_values.is_empty() || grid.b_values.is_empty() {
        return Err(contract("sweep grid needs at least two radii and one (a, b) pair"));
    }
    if grid.a_values.iter().any(|&a| !(a > 0.0 && a <= 1.0)) || grid.b_values.iter().any(|&b| !(b >= 1.0)) {
        return Err(contract("sweep needs a in (0, 1] and b >= 1"));
    }
    let mut tau0 = INITIAL_TAU0;
    let mut worst = f64::NEG_INFINITY;
    for halvings in 0..=MAX_TAU_HALVINGS {
        let fitted = collect(s, beta, nu, theta1, d, grid, tau0, 0.0, 1.0)?;
        // ratio at which τ = min(τ₀, c / (2^{(d+2s)/β} C θ₁)) stops improving
        let saturating = SAFETY * SAFETY * tau0 * ((d as f64 + 2.0 * s) / beta).exp2() * theta1;
        if let Some((c, big_c)) = fit(&fitted, saturating) {
            let consts = Lemma81Constants {
                c_star_81: c / SAFETY,
                big_c_star_81: big_c * SAFETY,
                tau0,
                tau_halvings: halvings,
                min_slack: 0.0,
                provenance: String::new(),
            };
            // independent check: levels between the fitted ones, finer quadrature
            let half_step = 0.5 * grid.level_decades / (grid.radii - 1) as f64;
            let check = collect(s, beta, nu, theta1, d, grid, tau0, half_step, 2.0)?;
            let min_slack = check
                .iter()
                .map(|p| -consts.c_star_81 * p.near + consts.big_c_star_81 * p.far - p.op)
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(min_slack);
            if min_slack >= 0.0 {
                let provenance = format!(
                    "fit on {} samples (a in {:?}, b in {:?}, {} levels over {} decades below tau0*theta1), \
                     checked on {} offset samples with 2x quadrature; safety factor {SAFETY}",
                    fitted.len(),
                    grid.a_values,
                    grid.b_values,
                    grid.radii,
                    grid.level_decades,
                    check.len()
                );
                return Ok(Lemma81Constants { min_slack, provenance, ..consts });
            }
        }
        tau0 *= 0.5;
    }
    Err(LabError::Estimation(format!(
        "no certified constants after {MAX_TAU_HALVINGS} halvings of tau0 (best check slack {worst:e})"
    )))
}

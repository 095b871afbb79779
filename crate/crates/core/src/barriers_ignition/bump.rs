use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mollify::{kernel_cdf, smooth_step, smooth_step_derivative, smoothed_ramp};
use crate::error::{contract, LabError, Result};
use crate::fractional_operator::{
    quadrature_apply_at, Breakpoint, Profile1d, ProfileRef, QuadratureScheme, Radial, RadialShape, Tail,
};
use crate::reactions::{ReactionKind, ReactionSpec};

/// Certification margin demanded of each slope stage, relative to `δ`.
pub const STAGE_MARGIN: f64 = 1e-3;
pub const MAX_HALVINGS: usize = 60;
pub const MAX_MOLLIFY_RETRIES: usize = 8;
pub const MAX_SHIFT_DOUBLINGS: usize = 10;
/// Safety factor on the sampled supremum of `(-∂_xx)^s φ`.
pub const SUP_SAFETY: f64 = 1.05;

/// Unscaled bump `φ`: a smoothed plateau edge `ψ∘l_0` plus convex slope
/// changes at `kinks`, optionally mollified over half-width `width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpShape {
    pub theta: f64,
    /// Value below which `ψ` is the identity.
    pub linear_below: f64,
    /// Slope magnitude of `l_0`.
    pub slope0: f64,
    pub kinks: Vec<f64>,
    /// Slope increments at each kink (all positive).
    pub jumps: Vec<f64>,
    pub width: f64,
}

/// Subdivision of the plateau-edge zone `[0, 1/2]` into smooth pieces.
const EDGE_PIECES: usize = 4;

impl BumpShape {
    fn psi(&self, y: f64) -> f64 {
        let (m, th) = (self.linear_below, self.theta);
        if y <= m {
            y
        } else if y >= th {
            th
        } else {
            let tau = (y - m) / (th - m);
            m + (th - m) * (tau + smooth_step(tau) * (1.0 - tau))
        }
    }

    fn psi_derivative(&self, y: f64) -> f64 {
        let (m, th) = (self.linear_below, self.theta);
        if y <= m {
            1.0
        } else if y >= th {
            0.0
        } else {
            let tau = (y - m) / (th - m);
            1.0 - smooth_step(tau) + smooth_step_derivative(tau) * (1.0 - tau)
        }
    }

    fn edge_end(&self) -> f64 {
        (self.theta - self.linear_below) / self.slope0
    }

    pub fn support_end(&self) -> f64 {
        self.kinks[self.kinks.len() - 1] + self.width
    }

    fn ramp(&self, z: f64) -> f64 {
        if self.width > 0.0 {
            self.width * smoothed_ramp(z / self.width)
        } else {
            z.max(0.0)
        }
    }

    fn step(&self, z: f64) -> f64 {
        if self.width > 0.0 {
            kernel_cdf(z / self.width)
        } else if z > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x >= self.support_end() {
            return 0.0;
        }
        let base = -self.slope0 * self.psi_derivative(self.theta - self.slope0 * x);
        base + self
            .kinks
            .iter()
            .zip(&self.jumps)
            .map(|(b, c)| c * self.step(x - b))
            .sum::<f64>()
    }

    pub fn with_width(&self, width: f64) -> Self {
        Self { width, ..self.clone() }
    }

    /// Smallest spacing between kinks and between the first kink and the
    /// plateau-edge zone.
    pub fn gap(&self) -> f64 {
        let mut g = self.kinks[0] - self.edge_end();
        for w in self.kinks.windows(2) {
            g = g.min(w[1] - w[0]);
        }
        g
    }
}

impl Profile1d for BumpShape {
    fn value(&self, x: f64) -> f64 {
        if x >= self.support_end() {
            return 0.0;
        }
        let base = self.psi(self.theta - self.slope0 * x);
        let v = base
            + self
                .kinks
                .iter()
                .zip(&self.jumps)
                .map(|(b, c)| c * self.ramp(x - b))
                .sum::<f64>();
        v.max(0.0)
    }
    fn tails(&self) -> Option<(Tail, Tail)> {
        Some((Tail::constant(self.theta), Tail::constant(0.0)))
    }
    fn extent(&self) -> (f64, f64) {
        (0.0, self.support_end())
    }
    fn feature_scale(&self) -> f64 {
        self.edge_end() / (2 * EDGE_PIECES) as f64
    }
    fn breakpoints(&self) -> Vec<Breakpoint> {
        let e = self.edge_end();
        let mut out: Vec<Breakpoint> = (0..=EDGE_PIECES)
            .map(|i| Breakpoint::smooth(e * i as f64 / EDGE_PIECES as f64))
            .collect();
        for &b in &self.kinks {
            if self.width > 0.0 {
                out.extend([b - self.width, b, b + self.width].map(Breakpoint::smooth));
            } else {
                out.push(Breakpoint::kink(b));
            }
        }
        out
    }
    fn linear_on(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let e = self.edge_end();
        if !(b <= 0.0 || a >= e) {
            return None;
        }
        for &k in &self.kinks {
            if a < k + self.width && b > k - self.width {
                return None;
            }
        }
        Some((self.value(a), self.derivative(0.5 * (a + b))))
    }
}

/// `x ↦ φ((x - offset) / scale)`, usable on the line and as a radial shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledBump {
    pub shape: BumpShape,
    pub scale: f64,
    pub offset: f64,
}

impl ScaledBump {
    fn local(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }
    fn mapped_breaks(&self) -> Vec<Breakpoint> {
        self.shape
            .breakpoints()
            .into_iter()
            .map(|b| Breakpoint { at: self.offset + self.scale * b.at, kink: b.kink })
            .collect()
    }
}

impl Profile1d for ScaledBump {
    fn value(&self, x: f64) -> f64 {
        self.shape.value(self.local(x))
    }
    fn tails(&self) -> Option<(Tail, Tail)> {
        self.shape.tails()
    }
    fn extent(&self) -> (f64, f64) {
        (self.offset, self.offset + self.scale * self.shape.support_end())
    }
    fn feature_scale(&self) -> f64 {
        self.scale * self.shape.feature_scale()
    }
    fn breakpoints(&self) -> Vec<Breakpoint> {
        self.mapped_breaks()
    }
    fn linear_on(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        self.shape
            .linear_on(self.local(a), self.local(b))
            .map(|(v, m)| (v, m / self.scale))
    }
}

impl RadialShape for ScaledBump {
    fn value(&self, r: f64) -> f64 {
        self.shape.value(self.local(r))
    }
    fn tail(&self) -> Option<Tail> {
        Some(Tail::constant(0.0))
    }
    fn extent(&self) -> f64 {
        self.offset + self.scale * self.shape.support_end()
    }
    fn feature_scale(&self) -> f64 {
        self.scale * self.shape.feature_scale()
    }
    fn breakpoints(&self) -> Vec<Breakpoint> {
        self.mapped_breaks().into_iter().filter(|b| b.at > 0.0).collect()
    }
    fn constant_on(&self, r0: f64, r1: f64) -> bool {
        self.local(r1) <= 0.0 || self.local(r0) >= self.shape.support_end()
    }
}

/// Sample counts for the certification passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSettings {
    pub stage_samples: usize,
    pub sup_samples: usize,
    pub line_samples: usize,
    pub window_samples: usize,
    pub radial_samples: usize,
    /// Multiplies quadrature resolution.
    pub quad_scale: f64,
}

impl BumpSettings {
    pub fn for_dimension(d: usize) -> Self {
        Self {
            stage_samples: 64,
            sup_samples: 384,
            line_samples: 384,
            window_samples: 12,
            radial_samples: if d == 1 { 256 } else { 48 },
            quad_scale: 1.0,
        }
    }
}

/// The certified bump `u_θ` and its radial lift `ū_θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub theta: f64,
    pub theta0: f64,
    pub theta0_prime: f64,
    pub s: f64,
    pub dimension: usize,
    pub stages: usize,
    /// Stage starting points `x_1 = 1, x_2, ..., x_N` (unscaled).
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
    pub intercepts: Vec<f64>,
    /// Unscaled support end `b_N / k_N` before mollification.
    pub r_prime: f64,
    /// Upper bound used for `sup (-∂_xx)^s φ`.
    pub sup_operator: f64,
    pub delta: f64,
    pub scale_r: f64,
    /// Mollification half-width in unscaled coordinates.
    pub mollify_width: f64,
    pub mollify_retries: usize,
    /// Shift `R` of the radial lift `u_θ(|x| - 2R)`.
    pub shift: f64,
    pub shift_doublings: usize,
    /// Radius beyond which the final profile vanishes.
    pub r_theta: f64,
    pub support_end: f64,
    pub lipschitz: f64,
    /// Certified margin of the radial lift on `|x| ≤ R_θ`.
    pub margin: f64,
    pub margin_1d: f64,
    pub shape: BumpShape,
}

fn shape_for(theta: f64, theta0p: f64, xs: &[f64], ks: &[f64], bs: &[f64]) -> BumpShape {
    let slope0 = theta - theta0p;
    let mut kinks = xs.to_vec();
    kinks.push(bs[bs.len() - 1] / ks[ks.len() - 1]);
    let mut slopes = vec![slope0];
    slopes.extend_from_slice(ks);
    slopes.push(0.0);
    let jumps = slopes.windows(2).map(|w| w[0] - w[1]).collect();
    BumpShape {
        theta,
        linear_below: 0.5 * (theta + theta0p),
        slope0,
        kinks,
        jumps,
        width: 0.0,
    }
}

/// Keeps sample points off exact kinks, where the operator is infinite for `s ≥ 1/2`.
fn off_kinks(x: f64, kinks: &[f64], s: f64) -> f64 {
    if s < 0.5 {
        return x;
    }
    for &k in kinks {
        if (x - k).abs() < 1e-7 * k.abs().max(1.0) {
            return k - 1e-6 * k.abs().max(1.0);
        }
    }
    x
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 })
}

/// `(-∂_xx)^s` of a line profile at each point, in input order.
fn operator_1d<P: Profile1d>(p: &P, xs: &[f64], scheme: &QuadratureScheme) -> Result<Vec<f64>> {
    xs.par_iter()
        .map(|&x| quadrature_apply_at(ProfileRef::Line(p), &[x], scheme.s, scheme).map(|q| q.value))
        .collect()
}

fn worst(xs: &[f64], vals: &[f64]) -> (f64, f64) {
    xs.iter()
        .zip(vals)
        .fold((f64::INFINITY, f64::NAN), |acc, (&x, &v)| if v < acc.0 { (v, x) } else { acc })
}

pub fn build_bump(theta: f64, s: f64, f: &ReactionSpec, d: usize) -> Result<BumpProfile> {
    build_bump_with(theta, s, f, d, &BumpSettings::for_dimension(d))
}

pub fn build_bump_with(theta: f64, s: f64, f: &ReactionSpec, d: usize, set: &BumpSettings) -> Result<BumpProfile> {
    if f.kind != ReactionKind::Ignition {
        return Err(contract("the bump construction needs an ignition reaction"));
    }
    if !(theta > f.theta0 && theta < 1.0) {
        return Err(contract(format!("theta must lie in (theta0, 1) = ({}, 1), got {theta}", f.theta0)));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(contract(format!("s must lie in (0, 1), got {s}")));
    }
    if d != 1 && d != 2 {
        return Err(contract(format!("dimension must be 1 or 2, got {d}")));
    }
    let theta0p = (3.0 * f.theta0 + theta) / 4.0;
    let mut n_stages = 1;
    while theta - theta0p < (-(n_stages as f64)).exp2() * theta {
        n_stages += 1;
    }
    let delta = f.inf_on(theta0p, theta);
    if !(delta > 1e-12) {
        return Err(contract(format!("reaction infimum on [theta0', theta] is not positive: {delta:e}")));
    }
    let line_scheme = QuadratureScheme::new(s, 1, 0.01)?.refined(set.quad_scale);

    let mut xs = vec![1.0];
    let mut ks = vec![0.5 * (theta - theta0p)];
    let mut bs = vec![0.5 * (theta + theta0p)];
    for n in 2..=n_stages {
        let (xp, kp, bp) = (xs[n - 2], ks[n - 2], bs[n - 2]);
        let xn = 2.0 * xp + (theta - bp) / kp;
        let level = (n as f64 - 1.0).exp2() * theta0p - ((n as f64 - 1.0).exp2() - 1.0) * theta;
        let mut k = 0.5 * kp;
        let mut last = (f64::NEG_INFINITY, f64::NAN);
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let b = k * xn + level;
            let mut xs_try = xs.clone();
            xs_try.push(xn);
            let mut ks_try = ks.clone();
            ks_try.push(k);
            let mut bs_try = bs.clone();
            bs_try.push(b);
            let shape = shape_for(theta, theta0p, &xs_try, &ks_try, &bs_try);
            let pts: Vec<f64> = linspace(1.0, xn, set.stage_samples).map(|x| off_kinks(x, &shape.kinks, s)).collect();
            let vals: Vec<f64> = operator_1d(&shape, &pts, &line_scheme)?.into_iter().map(|v| -v).collect();
            last = worst(&pts, &vals);
            if last.0 >= STAGE_MARGIN * delta {
                xs = xs_try;
                ks = ks_try;
                bs = bs_try;
                accepted = true;
                break;
            }
            k *= 0.5;
        }
        if !accepted {
            return Err(LabError::Construction {
                message: format!("no slope certified for stage {n} within {MAX_HALVINGS} halvings"),
                worst_residual: last.0,
                worst_x: last.1,
            });
        }
    }
    let raw = shape_for(theta, theta0p, &xs, &ks, &bs);
    let r_prime = raw.kinks[raw.kinks.len() - 1];

    // Upper bound for sup (-∂_xx)^s φ; kinks are convex and only lower it.
    let mut pts: Vec<f64> = linspace(-1.0, r_prime + 0.5, set.sup_samples).collect();
    pts.extend(linspace(-0.25, 0.75, set.sup_samples / 3));
    let pts: Vec<f64> = pts.into_iter().map(|x| off_kinks(x, &raw.kinks, s)).collect();
    let sup_raw = operator_1d(&raw, &pts, &line_scheme)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let sup_operator = SUP_SAFETY * sup_raw.max(0.0);
    let scale_r = if sup_operator > 0.0 { (2.0 * sup_operator / delta).powf(0.5 / s) } else { 1.0 };

    // Mollify and re-certify the line profile.
    let mut width = 0.05f64.min(0.25 * raw.gap());
    let mut retries = 0;
    let (shape, margin_1d) = loop {
        let shape = raw.with_width(width);
        let (m, at) = line_margin(&shape, scale_r, s, f, set, &line_scheme)?;
        if m > 0.0 {
            break (shape, m);
        }
        retries += 1;
        if retries > MAX_MOLLIFY_RETRIES {
            return Err(LabError::Construction {
                message: "certification margin lost after mollification".into(),
                worst_residual: m,
                worst_x: at,
            });
        }
        width *= 0.5;
    };
    let r_theta_line = scale_r * shape.support_end();

    // Radial lift u_θ(|x| - 2R), doubling R until the margin holds.
    let radial_scheme = QuadratureScheme::new(s, d, scale_r * 0.01)?.refined(set.quad_scale);
    let mut shift = r_theta_line;
    let mut doublings = 0;
    let margin = loop {
        let lifted = ScaledBump { shape: shape.clone(), scale: scale_r, offset: 2.0 * shift };
        let (m, at) = radial_margin(&lifted, r_theta_line, s, d, f, set, &radial_scheme)?;
        if m >= 0.5 * margin_1d {
            break m;
        }
        doublings += 1;
        if doublings > MAX_SHIFT_DOUBLINGS {
            return Err(LabError::Construction {
                message: "radial lift did not reach half the line margin".into(),
                worst_residual: m,
                worst_x: at,
            });
        }
        shift *= 2.0;
    };
    let support_end = 2.0 * shift + r_theta_line;
    let lipschitz = linspace(0.0, shape.support_end(), 4096)
        .map(|x| shape.derivative(x).abs())
        .fold(0.0, f64::max)
        / scale_r;
    Ok(BumpProfile {
        theta,
        theta0: f.theta0,
        theta0_prime: theta0p,
        s,
        dimension: d,
        stages: n_stages,
        breakpoints: xs,
        slopes: ks,
        intercepts: bs,
        r_prime,
        sup_operator,
        delta,
        scale_r,
        mollify_width: width,
        mollify_retries: retries,
        shift,
        shift_doublings: doublings,
        r_theta: support_end,
        support_end,
        lipschitz,
        margin,
        margin_1d,
        shape,
    })
}

/// Minimum over samples of `-(-∂_xx)^s u + f(u)` for `u = φ(·/r)` on
/// `(-∞, r·support_end]`, evaluated in unscaled coordinates.
fn line_margin(
    shape: &BumpShape,
    r: f64,
    s: f64,
    f: &ReactionSpec,
    set: &BumpSettings,
    scheme: &QuadratureScheme,
) -> Result<(f64, f64)> {
    let end = shape.support_end();
    let mut pts: Vec<f64> = (0..16).map(|j| -(end + 1.0) * (j as f64).exp2()).collect();
    pts.extend(linspace(-1.0, end, set.line_samples));
    for &b in &shape.kinks {
        pts.extend(linspace(b - shape.width, b + shape.width, set.window_samples));
    }
    let pts: Vec<f64> = pts.into_iter().map(|x| off_kinks(x, &shape.kinks, s)).collect();
    let ops = operator_1d(shape, &pts, scheme)?;
    let scale = r.powf(-2.0 * s);
    let res: Vec<f64> = pts
        .iter()
        .zip(&ops)
        .map(|(&x, &q)| -scale * q + f.eval(shape.value(x)))
        .collect();
    let (m, at) = worst(&pts, &res);
    Ok((m, at * r))
}

/// Residual samples of the lifted profile on `|x| ≤ 2R + R_line`.
pub fn radial_residuals(
    lifted: &ScaledBump,
    r_line: f64,
    s: f64,
    d: usize,
    f: &ReactionSpec,
    n: usize,
    window_samples: usize,
    scheme: &QuadratureScheme,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let inner = lifted.offset;
    let end = inner + r_line;
    let mut pts: Vec<f64> = linspace(0.0, inner, (n / 8).max(2)).collect();
    pts.extend(linspace(inner, end, n - (n / 8).max(2)));
    for &b in &lifted.shape.kinks {
        let c = inner + lifted.scale * b;
        let w = lifted.scale * lifted.shape.width;
        pts.extend(linspace(c - w, c + w, window_samples));
    }
    let kinks: Vec<f64> = lifted.shape.kinks.iter().map(|b| inner + lifted.scale * b).collect();
    let pts: Vec<f64> = pts.into_iter().map(|x| off_kinks(x, &kinks, s)).collect();
    let radial = Radial(lifted.clone());
    let res: Vec<f64> = pts
        .par_iter()
        .map(|&rho| {
            let q = match d {
                1 => quadrature_apply_at(ProfileRef::Line(&radial), &[rho], s, scheme)?,
                _ => quadrature_apply_at(ProfileRef::Plane(&radial), &[rho, 0.0], s, scheme)?,
            };
            Ok(-q.value + f.eval(RadialShape::value(lifted, rho)))
        })
        .collect::<Result<_>>()?;
    Ok((pts, res))
}

#[allow(clippy::too_many_arguments)]
fn radial_margin(
    lifted: &ScaledBump,
    r_line: f64,
    s: f64,
    d: usize,
    f: &ReactionSpec,
    set: &BumpSettings,
    scheme: &QuadratureScheme,
) -> Result<(f64, f64)> {
    let n = set.radial_samples;
    let ws = if d == 1 { set.window_samples } else { (set.window_samples / 3).max(2) };
    let (pts, res) = radial_residuals(lifted, r_line, s, d, f, n, ws, scheme)?;
    Ok(worst(&pts, &res))
}

impl BumpProfile {
    /// The lifted profile as a function of the radius.
    pub fn lifted(&self) -> ScaledBump {
        ScaledBump { shape: self.shape.clone(), scale: self.scale_r, offset: 2.0 * self.shift }
    }

    /// Final one-dimensional profile `u_θ(x)`.
    pub fn value(&self, x: f64) -> f64 {
        Profile1d::value(&self.lifted(), x)
    }

    /// `ū_θ` at radius `rho`.
    pub fn radial_value(&self, rho: f64) -> f64 {
        self.value(rho.abs())
    }

    /// Position where `u_θ` crosses `λ ∈ (0, θ)`.
    pub fn level_position(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0 && lambda < self.theta) {
            return Err(contract("level must lie in (0, theta)"));
        }
        let (mut lo, mut hi) = (2.0 * self.shift, self.support_end);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.value(mid) > lambda {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

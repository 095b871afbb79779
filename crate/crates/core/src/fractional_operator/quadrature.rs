use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::calibrate::calibrate_constant;
use super::gauss::gauss_kronrod;
use crate::error::{contract, Result};

/// `u(y) ≈ limit + amplitude * |y|^(-exponent)` as `|y| → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraicDecay {
    pub amplitude: f64,
    pub exponent: f64,
}

/// Behavior of a profile at infinity along one direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub limit: f64,
    pub decay: Option<AlgebraicDecay>,
}

impl Tail {
    pub fn constant(limit: f64) -> Self {
        Self { limit, decay: None }
    }
    pub fn algebraic(limit: f64, amplitude: f64, exponent: f64) -> Self {
        Self { limit, decay: Some(AlgebraicDecay { amplitude, exponent }) }
    }

    /// `∫_H^∞ (u(±h) - limit) h^{-1-2s} dh` at leading order.
    fn excess_integral(&self, h: f64, s: f64) -> f64 {
        match self.decay {
            Some(d) => d.amplitude * h.powf(-d.exponent - 2.0 * s) / (d.exponent + 2.0 * s),
            None => 0.0,
        }
    }
}

/// A point where a profile is not smooth (`kink`) or changes regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub at: f64,
    pub kink: bool,
}

impl Breakpoint {
    pub fn kink(at: f64) -> Self {
        Self { at, kink: true }
    }
    pub fn smooth(at: f64) -> Self {
        Self { at, kink: false }
    }
}

/// A bounded profile on the line.
pub trait Profile1d: Sync {
    fn value(&self, x: f64) -> f64;
    /// Tails at `-∞` and `+∞`; `None` means undeclared.
    fn tails(&self) -> Option<(Tail, Tail)>;
    /// Outside this interval the profile follows its declared tails.
    fn extent(&self) -> (f64, f64);
    /// Length below which the profile has no further structure.
    fn feature_scale(&self) -> f64;
    fn breakpoints(&self) -> Vec<Breakpoint> {
        Vec::new()
    }
    /// `Some((u(a), slope))` if the profile is exactly affine on `[a, b]`.
    fn linear_on(&self, _a: f64, _b: f64) -> Option<(f64, f64)> {
        None
    }
}

/// A bounded profile on the plane.
pub trait Profile2d: Sync {
    fn value_at(&self, p: [f64; 2]) -> f64;
    fn tail(&self) -> Option<Tail>;
    /// Radius about the origin outside which the profile follows its tail.
    fn extent(&self) -> f64;
    fn feature_scale(&self) -> f64;
    /// Circles about the origin where the profile is not smooth or changes regime.
    fn structure_radii(&self) -> Vec<Breakpoint> {
        Vec::new()
    }
    /// Whether the profile depends on `|x|` only.
    fn is_radial(&self) -> bool {
        false
    }
    /// Whether a radial profile is constant on the annulus `r0 ≤ |x| ≤ r1`.
    fn constant_on_annulus(&self, _r0: f64, _r1: f64) -> bool {
        false
    }
}

#[derive(Clone, Copy)]
pub enum ProfileRef<'a> {
    Line(&'a dyn Profile1d),
    Plane(&'a dyn Profile2d),
}

impl ProfileRef<'_> {
    pub fn dimension(&self) -> usize {
        match self {
            ProfileRef::Line(_) => 1,
            ProfileRef::Plane(_) => 2,
        }
    }
}

/// Resolution and normalization of the principal-value evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub s: f64,
    pub dimension: usize,
    pub inner_cutoff: f64,
    pub outer_cutoff: f64,
    pub nodes_per_decade: usize,
    pub normalization_constant: f64,
}

pub const DEFAULT_OUTER_CUTOFF: f64 = 1e6;
pub const DEFAULT_NODES_PER_DECADE: usize = 32;
/// Panel width, in feature scales, for radial profiles in the plane. Their
/// integrand only varies through `|x ± rω|`, so coarser panels suffice.
const RADIAL_CAP: f64 = 8.0;

impl QuadratureScheme {
    /// Default resolution for grid spacing `spacing`.
    pub fn new(s: f64, dimension: usize, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(contract(format!("spacing must be positive, got {spacing}")));
        }
        let c = calibrate_constant(s, dimension)?;
        Ok(Self {
            s,
            dimension,
            inner_cutoff: spacing / 8.0,
            outer_cutoff: DEFAULT_OUTER_CUTOFF.max(1e6 * spacing),
            nodes_per_decade: DEFAULT_NODES_PER_DECADE,
            normalization_constant: c,
        })
    }

    /// Multiplies the resolution by `factor` (finer mesh, smaller inner cutoff).
    pub fn refined(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.nodes_per_decade = ((self.nodes_per_decade as f64) * factor).round().max(16.0) as usize;
        out.inner_cutoff = self.inner_cutoff / factor;
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner_cutoff > 0.0 && self.inner_cutoff < self.outer_cutoff) {
            return Err(contract("inner_cutoff must be positive and below outer_cutoff"));
        }
        if self.nodes_per_decade < 16 {
            return Err(contract("nodes_per_decade must be at least 16"));
        }
        if !(self.normalization_constant > 0.0) {
            return Err(contract("normalization constant must be positive"));
        }
        Ok(())
    }
}

/// A value of `(-Δ)^s u(x)` with an estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadValue {
    pub value: f64,
    pub error: f64,
}

/// Mesh description for `∫_0^∞ G(h) h^{-1-2s} dh`.
pub(crate) struct Layout {
    pub eps: f64,
    pub kink_at_origin: bool,
    /// Sorted interior breakpoints in `(eps, outer)`.
    pub breaks: Vec<f64>,
    pub outer: f64,
    pub nodes_per_decade: usize,
    /// Maximal panel width for panels starting below `cap_until`.
    pub cap_width: f64,
    pub cap_until: f64,
}

impl Layout {
    pub(crate) fn panels(&self) -> Vec<(f64, f64)> {
        let mut nodes = Vec::with_capacity(self.breaks.len() + 2);
        nodes.push(self.eps);
        nodes.extend(self.breaks.iter().copied().filter(|&b| b > self.eps && b < self.outer));
        nodes.push(self.outer);
        let ratio_log = 1.0 / self.nodes_per_decade as f64;
        let mut out = Vec::new();
        for w in nodes.windows(2) {
            let (p, q) = (w[0], w[1]);
            if q <= p {
                continue;
            }
            let n = ((q / p).log10() / ratio_log).ceil().max(1.0) as usize;
            let mut a = p;
            for j in 1..=n {
                let b = if j == n { q } else { p * (q / p).powf(j as f64 / n as f64) };
                if a < self.cap_until && b - a > self.cap_width {
                    let m = ((b - a) / self.cap_width).ceil() as usize;
                    for i in 0..m {
                        let lo = a + (b - a) * i as f64 / m as f64;
                        let hi = if i + 1 == m { b } else { a + (b - a) * (i + 1) as f64 / m as f64 };
                        out.push((lo, hi));
                    }
                } else {
                    out.push((a, b));
                }
                a = b;
            }
        }
        out
    }
}

/// `∫_eps^outer G(h) h^{-1-2s} dh` plus the analytic inner piece `∫_0^eps`.
///
/// `g` returns `(G(h), error estimate of G(h))`. `affine` may return
/// `Some((α, β))` when `G(h) = α + β h` exactly on a panel range.
pub(crate) fn radial_integral<G, A>(g: &G, affine: &A, s: f64, layout: &Layout) -> Result<(f64, f64)>
where
    G: Fn(f64) -> (f64, f64) + Sync,
    A: Fn(f64, f64) -> Option<(f64, f64)> + Sync,
{
    let two_s = 2.0 * s;
    let eps = layout.eps;
    let (g1, e1) = g(eps);
    let (g2, e2) = g(0.5 * eps);
    let (inner, inner_err) = if layout.kink_at_origin {
        // G ≈ a1 h + a2 h²
        let a2 = 2.0 * (g1 - 2.0 * g2) / (eps * eps);
        let a1 = (g1 - a2 * eps * eps) / eps;
        if s >= 0.5 && a1.abs() > 1e-12 * (g1.abs() / eps).max(1e-300) {
            return Err(contract(format!(
                "evaluation at a kink requires s < 1/2 (s = {s}, one-sided slope jump {a1:e})"
            )));
        }
        let lin = if s < 0.5 { a1 * eps.powf(1.0 - two_s) / (1.0 - two_s) } else { 0.0 };
        let quad = a2 * eps.powf(2.0 - two_s) / (2.0 - two_s);
        (lin + quad, quad.abs() * 1e-3 + (e1 + e2) * eps.powf(-two_s))
    } else {
        // G ≈ a2 h² + a4 h⁴
        let a2 = (16.0 * g2 - g1) / (3.0 * eps * eps);
        let a4 = (g1 - a2 * eps * eps) / eps.powi(4);
        let main = a2 * eps.powf(2.0 - two_s) / (2.0 - two_s);
        let corr = a4 * eps.powf(4.0 - two_s) / (4.0 - two_s);
        (main + corr, corr.abs() + (e1 + e2) * eps.powf(-two_s))
    };

    let panels = layout.panels();
    let eval = |&(a, b): &(f64, f64)| -> (f64, f64) {
        if let Some((alpha, beta)) = affine(a, b) {
            let v0 = alpha * (a.powf(-two_s) - b.powf(-two_s)) / two_s;
            let v1 = if (two_s - 1.0).abs() < 1e-14 {
                beta * (b / a).ln()
            } else {
                beta * (b.powf(1.0 - two_s) - a.powf(1.0 - two_s)) / (1.0 - two_s)
            };
            return (v0 + v1, 0.0);
        }
        let mut gerr = 0.0f64;
        let (v, e) = gauss_kronrod(a, b, |h| {
            let (gv, ge) = g(h);
            gerr = gerr.max(ge);
            gv * h.powf(-1.0 - two_s)
        });
        (v, e + gerr * (a.powf(-two_s) - b.powf(-two_s)) / two_s)
    };
    let parts: Vec<(f64, f64)> = if panels.len() > 512 {
        panels.par_iter().map(eval).collect()
    } else {
        panels.iter().map(eval).collect()
    };
    let (mut sum, mut err) = (inner, inner_err);
    for (v, e) in parts {
        sum += v;
        err += e;
    }
    Ok((sum, err))
}

/// `(-Δ)^s profile (x)` by principal-value quadrature.
pub fn quadrature_apply_at(profile: ProfileRef<'_>, x: &[f64], s: f64, scheme: &QuadratureScheme) -> Result<QuadValue> {
    scheme.validate()?;
    if (scheme.s - s).abs() > 1e-15 {
        return Err(contract(format!("scheme calibrated for s = {}, requested s = {s}", scheme.s)));
    }
    if profile.dimension() != scheme.dimension || x.len() < profile.dimension() {
        return Err(contract("profile, point and scheme dimensions disagree"));
    }
    let (v, e) = match profile {
        ProfileRef::Line(p) => raw_integral_1d(p, x[0], s, scheme)?,
        ProfileRef::Plane(p) => raw_integral_2d(p, [x[0], x[1]], s, scheme)?,
    };
    let c = scheme.normalization_constant;
    Ok(QuadValue { value: c * v, error: c * e })
}

/// Hypersingular integral without the normalization constant (1D).
pub(crate) fn raw_integral_1d(p: &dyn Profile1d, x: f64, s: f64, scheme: &QuadratureScheme) -> Result<(f64, f64)> {
    let (left, right) = p
        .tails()
        .ok_or_else(|| contract("profile has no declared tail limits"))?;
    let fs = p.feature_scale();
    let (lo, hi) = p.extent();
    let ux = p.value(x);
    let tol = 1e-13 * x.abs();
    let mut kink_at_origin = false;
    let mut breaks: Vec<f64> = Vec::new();
    for b in p.breakpoints() {
        let d = (b.at - x).abs();
        if d <= 1e-13 * x.abs().max(b.at.abs()) {
            kink_at_origin |= b.kink;
        } else {
            breaks.push(d);
        }
    }
    let far = (x - lo).abs().max((hi - x).abs());
    breaks.push((x - lo).abs());
    breaks.push((hi - x).abs());
    breaks.retain(|&d| d > tol);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());

    let nearest = breaks.first().copied().unwrap_or(f64::INFINITY);
    let eps = scheme.inner_cutoff.min(0.125 * fs).min(0.25 * nearest);
    let decays = left.decay.is_some() || right.decay.is_some();
    let outer = if decays {
        scheme.outer_cutoff.max(1e4 * (far + x.abs()))
    } else {
        scheme.outer_cutoff.max(2.0 * far)
    };
    let layout = Layout {
        eps,
        kink_at_origin,
        breaks,
        outer,
        nodes_per_decade: scheme.nodes_per_decade,
        cap_width: 0.5 * fs,
        cap_until: far,
    };
    let g = |h: f64| (2.0 * ux - p.value(x + h) - p.value(x - h), 0.0);
    let affine = |a: f64, b: f64| -> Option<(f64, f64)> {
        let (ur, mr) = p.linear_on(x + a, x + b)?;
        let (ul, ml) = p.linear_on(x - b, x - a)?;
        // u(x+h) = ur + mr (h - a);  u(x-h) = ul + ml (b - h)
        let alpha = 2.0 * ux - (ur - mr * a) - (ul + ml * b);
        let beta = -mr + ml;
        Some((alpha, beta))
    };
    let (mid, err) = radial_integral(&g, &affine, s, &layout)?;
    let two_s = 2.0 * s;
    let c = 2.0 * ux - left.limit - right.limit;
    let tail = c * outer.powf(-two_s) / two_s - left.excess_integral(outer, s) - right.excess_integral(outer, s);
    let tail_err = if decays { tail.abs() * (far + x.abs()) / outer } else { 0.0 };
    Ok((mid + tail, err + tail_err))
}

/// Hypersingular integral without the normalization constant (2D, polar
/// coordinates about `x`).
pub(crate) fn raw_integral_2d(p: &dyn Profile2d, x: [f64; 2], s: f64, scheme: &QuadratureScheme) -> Result<(f64, f64)> {
    let tail = p.tail().ok_or_else(|| contract("profile has no declared tail limit"))?;
    let fs = p.feature_scale();
    let ext = p.extent();
    let rx = x[0].hypot(x[1]);
    let phix = x[1].atan2(x[0]);
    let ux = p.value_at(x);
    let tol = 1e-13 * rx;
    let mut radii: Vec<f64> = p.structure_radii().iter().map(|b| b.at).collect();
    radii.push(ext);
    let mut kink_at_origin = false;
    let mut breaks = Vec::new();
    for b in p.structure_radii() {
        if (b.at - rx).abs() <= 1e-13 * rx.max(b.at) {
            kink_at_origin |= b.kink;
        }
    }
    for &r in &radii {
        for d in [(r - rx).abs(), r + rx] {
            if d > tol {
                breaks.push(d);
            }
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    let nearest = breaks.first().copied().unwrap_or(f64::INFINITY);
    let eps = scheme.inner_cutoff.min(0.125 * fs).min(0.25 * nearest);
    let far = rx + ext;
    let outer = if tail.decay.is_some() {
        scheme.outer_cutoff.max(1e4 * far)
    } else {
        scheme.outer_cutoff.max(2.0 * far)
    };
    let layout = Layout {
        eps,
        kink_at_origin,
        breaks,
        outer,
        nodes_per_decade: scheme.nodes_per_decade,
        cap_width: if p.is_radial() { RADIAL_CAP * fs } else { 0.5 * fs },
        cap_until: far,
    };
    let g = |r: f64| angular_integral(p, x, rx, phix, ux, r, &radii, fs, ext);
    let no_affine = |_: f64, _: f64| None;
    let (mid, err) = radial_integral(&g, &no_affine, s, &layout)?;
    let two_s = 2.0 * s;
    let pi = std::f64::consts::PI;
    let tail_v = pi * (2.0 * ux - 2.0 * tail.limit) * outer.powf(-two_s) / two_s - 2.0 * pi * tail.excess_integral(outer, s);
    let tail_err = if tail.decay.is_some() { tail_v.abs() * far / outer } else { 0.0 };
    Ok((mid + tail_v, err + tail_err))
}

/// `∫_0^π (2u(x) - u(x + rω) - u(x - rω)) dφ` with arcs split where the
/// circle of radius `r` about `x` crosses the structure circles.
#[allow(clippy::too_many_arguments)]
fn angular_integral(
    p: &dyn Profile2d,
    x: [f64; 2],
    rx: f64,
    phix: f64,
    ux: f64,
    r: f64,
    radii: &[f64],
    fs: f64,
    ext: f64,
) -> (f64, f64) {
    use std::f64::consts::PI;
    let mut cuts: Vec<f64> = vec![0.0, PI];
    if rx > 0.0 {
        for &big_r in radii {
            let c = (big_r * big_r - rx * rx - r * r) / (2.0 * r * rx);
            if c.abs() < 1.0 {
                let a = c.acos();
                for ang in [phix + a, phix - a] {
                    cuts.push(ang.rem_euclid(PI));
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let inside = r <= ext + rx;
    let f = |phi: f64| {
        let (sn, cs) = phi.sin_cos();
        2.0 * ux - p.value_at([x[0] + r * cs, x[1] + r * sn]) - p.value_at([x[0] - r * cs, x[1] - r * sn])
    };
    // For radial profiles the integrand varies with |x ± rω| only, so arcs
    // are subdivided by the radius change along them rather than by length.
    let radial = p.is_radial();
    let extremum = phix.rem_euclid(PI);
    let pieces = |a: f64, b: f64| -> usize {
        if !inside {
            return 2;
        }
        if !radial {
            return ((b - a) * r / fs).ceil().clamp(1.0, 4096.0) as usize;
        }
        let mut angles = vec![a, 0.5 * (a + b), b];
        if extremum > a && extremum < b {
            angles.push(extremum);
            angles.sort_by(|u, v| u.partial_cmp(v).unwrap());
        }
        let mut worst = 0.0f64;
        let mut constant = true;
        for sign in [1.0, -1.0] {
            let rho: Vec<f64> = angles
                .iter()
                .map(|&phi| {
                    let (sn, cs) = phi.sin_cos();
                    (x[0] + sign * r * cs).hypot(x[1] + sign * r * sn)
                })
                .collect();
            let lo = rho.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            constant &= p.constant_on_annulus(lo, hi);
            worst = worst.max(rho.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>());
        }
        if constant {
            1
        } else {
            (worst / (RADIAL_CAP * fs)).ceil().clamp(1.0, 4096.0) as usize
        }
    };
    let mut sum = 0.0;
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 0.0 {
            continue;
        }
        let n = pieces(a, b);
        for i in 0..n {
            let lo = a + (b - a) * i as f64 / n as f64;
            let hi = if i + 1 == n { b } else { a + (b - a) * (i + 1) as f64 / n as f64 };
            let (v, e) = gauss_kronrod(lo, hi, f);
            sum += v;
            err += e;
        }
    }
    (sum, err)
}

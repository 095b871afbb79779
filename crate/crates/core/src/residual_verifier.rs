//! Pointwise certification of sub- and supersolution inequalities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers_ignition::{IgnitionSuperBarrier, SelfSimilarSub};
use crate::barriers_monostable::MonostableBarrier;
use crate::error::{contract, LabError, Result};
use crate::fractional_operator::{
    calibrate_constant, quadrature_apply_at, Profile1d, ProfileRef, QuadratureScheme, Radial, RadialShape,
};
use crate::reactions::ReactionSpec;

/// Relative half-width of the junction neighborhoods that get extra samples.
pub const JUNCTION_HALF_WIDTH: f64 = 1e-3;
/// Super certification accepts `min residual ≥ -TOLERANCE_SCALE · max(1, ‖f‖∞)`.
pub const TOLERANCE_SCALE: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Barrier {
    IgnitionSuper(IgnitionSuperBarrier),
    IgnitionSub(SelfSimilarSub),
    MonostableSub(MonostableBarrier),
    Constant { value: f64, s: f64, dimension: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Super,
    Sub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedSuper,
    CertifiedSub,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualValue {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub times: usize,
    pub points: usize,
    pub junction_points: usize,
    pub quad_scale: f64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self { times: 8, points: 512, junction_points: 32, quad_scale: 1.0 }
    }
}

impl SamplingPlan {
    /// Same plan with doubled quadrature resolution.
    pub fn refined(&self) -> Self {
        Self { quad_scale: 2.0 * self.quad_scale, ..self.clone() }
    }
    /// Same plan with doubled sample density.
    pub fn densified(&self) -> Self {
        Self { points: 2 * self.points, junction_points: 2 * self.junction_points, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub t: f64,
    pub x: f64,
    pub residual: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub barrier_id: String,
    pub mode: Mode,
    /// Meaning of `x` in the samples: `frame_offset` (from `c_* t^{1/(2s)}`) or `radius`.
    pub coordinate: String,
    pub tolerance: f64,
    pub time_samples: Vec<f64>,
    pub samples: Vec<SamplePoint>,
    pub min_residual: f64,
    pub max_residual: f64,
    pub worst_point: (f64, f64),
    pub max_quad_error: f64,
    pub verdict: Verdict,
}

impl ResidualReport {
    /// `t,x,residual,error` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,residual,error\n");
        for p in &self.samples {
            out.push_str(&format!("{:e},{:e},{:e},{:e}\n", p.t, p.x, p.residual, p.error));
        }
        out
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { 0.5 * (a + b) } else { a + (b - a) * i as f64 / (n - 1) as f64 })
}

/// Points within `±JUNCTION_HALF_WIDTH · ℓ` of each junction, `ℓ` the shorter adjacent piece.
fn junction_cloud(junctions: &[f64], lengths: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for (&j, &l) in junctions.iter().zip(lengths) {
        let w = JUNCTION_HALF_WIDTH * l;
        out.extend(linspace(j - w, j + w, n));
    }
    out
}

fn adjacent_lengths(sorted: &[f64], fallback: f64) -> Vec<f64> {
    (0..sorted.len())
        .map(|i| {
            let left = if i > 0 { sorted[i] - sorted[i - 1] } else { f64::INFINITY };
            let right = if i + 1 < sorted.len() { sorted[i + 1] - sorted[i] } else { f64::INFINITY };
            let l = left.min(right);
            if l.is_finite() { l } else { fallback }
        })
        .collect()
}

impl Barrier {
    pub fn id(&self) -> String {
        match self {
            Barrier::IgnitionSuper(b) => format!("ignition_super(k={}, s={}, theta0={})", b.k, b.s, b.theta0),
            Barrier::IgnitionSub(b) => {
                format!("ignition_sub(theta={}, s={}, d={}, b={:.6e})", b.bump.theta, b.s, b.dimension, b.b)
            }
            Barrier::MonostableSub(b) => {
                format!("monostable_sub(alpha={}, s={}, d={}, theta={})", b.alpha, b.s, b.d, b.theta)
            }
            Barrier::Constant { value, .. } => format!("constant({value})"),
        }
    }

    pub fn s(&self) -> f64 {
        match self {
            Barrier::IgnitionSuper(b) => b.s,
            Barrier::IgnitionSub(b) => b.s,
            Barrier::MonostableSub(b) => b.s,
            Barrier::Constant { s, .. } => *s,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Barrier::IgnitionSuper(_) => 1,
            Barrier::IgnitionSub(b) => b.dimension,
            Barrier::MonostableSub(b) => b.d,
            Barrier::Constant { dimension, .. } => *dimension,
        }
    }

    pub fn coordinate(&self) -> &'static str {
        match self {
            Barrier::IgnitionSuper(_) => "frame_offset",
            Barrier::Constant { dimension: 1, .. } => "x",
            _ => "radius",
        }
    }

    /// Errors unless `t` lies in the declared validity window.
    pub fn check_time(&self, t: f64) -> Result<()> {
        match self {
            Barrier::IgnitionSuper(b) => {
                if b.in_window(t) {
                    Ok(())
                } else {
                    let (lo, hi) = b.window_log2;
                    Err(LabError::Window(format!("t = {t} outside (2^{lo:.4}, 2^{hi:.4})")))
                }
            }
            Barrier::IgnitionSub(b) => {
                if t >= b.t_min() * (1.0 - 1e-12) {
                    Ok(())
                } else {
                    Err(contract(format!("t = {t} precedes b^(2s) = {}", b.t_min())))
                }
            }
            Barrier::MonostableSub(b) => {
                let start = b.t_theta.unwrap_or(1.0);
                if t >= start {
                    Ok(())
                } else {
                    Err(LabError::Window(format!("t = {t} precedes {start}")))
                }
            }
            Barrier::Constant { .. } => {
                if t >= 0.0 {
                    Ok(())
                } else {
                    Err(contract("negative time"))
                }
            }
        }
    }

    /// Barrier value; `x` is the frame offset for `ignition_super`, otherwise a position.
    pub fn value(&self, t: f64, x: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(match self {
            Barrier::IgnitionSuper(b) => b.eval_shifted(t, x),
            Barrier::IgnitionSub(b) => b.eval(t, &[x])?,
            Barrier::MonostableSub(b) => b.eval(t, x),
            Barrier::Constant { value, .. } => *value,
        })
    }

    pub fn default_times(&self, n: usize) -> Vec<f64> {
        match self {
            Barrier::IgnitionSuper(b) => {
                let (lo, hi) = b.window_log2;
                (0..n).map(|i| (lo + (hi - lo) * (i as f64 + 0.5) / n as f64).exp2()).collect()
            }
            Barrier::IgnitionSub(b) => (0..n).map(|i| b.t_min() * (i as f64).exp2()).collect(),
            Barrier::MonostableSub(b) => {
                let start = b.t_theta.unwrap_or(1.0);
                (0..n).map(|i| start * (i as f64).exp2()).collect()
            }
            Barrier::Constant { .. } => (0..n).map(|i| 1.0 + i as f64).collect(),
        }
    }

    /// Sample coordinates at time `t`, concentrated near branch junctions.
    pub fn space_plan(&self, t: f64, plan: &SamplingPlan) -> Vec<f64> {
        let n = plan.points;
        match self {
            Barrier::IgnitionSuper(b) => {
                let slice = b.slice(t);
                let js = slice.junctions().to_vec();
                let tail_scale = slice.feature_scale();
                let last = js[js.len() - 1];
                let n_neg = 16.min(n / 8);
                let n_tail = 96.min(n / 4);
                let per_seg = (n - n_neg - n_tail) / (js.len() - 1).max(1);
                let mut pts: Vec<f64> = (1..=n_neg).map(|j| -4.0 * js[1] * j as f64 / n_neg as f64).collect();
                for w in js.windows(2) {
                    pts.extend((1..=per_seg).map(|i| w[0] + (w[1] - w[0]) * i as f64 / (per_seg + 1) as f64));
                }
                pts.extend((0..n_tail).map(|j| last + tail_scale * 10f64.powf(-3.0 + 7.0 * j as f64 / (n_tail - 1).max(1) as f64)));
                let mut lens = adjacent_lengths(&js, tail_scale);
                let k = lens.len() - 1;
                lens[k] = lens[k].min(tail_scale);
                pts.extend(junction_cloud(&js, &lens, plan.junction_points));
                pts
            }
            Barrier::IgnitionSub(b) => {
                let Ok(slice) = b.slice(t) else { return Vec::new() };
                let end = RadialShape::extent(&slice);
                let mut pts: Vec<f64> = linspace(0.0, 1.1 * end, n).collect();
                let mut br: Vec<f64> = RadialShape::breakpoints(&slice).iter().map(|p| p.at).collect();
                br.sort_by(|a, b| a.partial_cmp(b).unwrap());
                br.dedup();
                let lens = adjacent_lengths(&br, RadialShape::feature_scale(&slice));
                pts.extend(junction_cloud(&br, &lens, plan.junction_points));
                pts.retain(|&r| r >= 0.0);
                pts
            }
            Barrier::MonostableSub(b) => {
                let mut pts = b.certification_radii(t, n);
                let js = [b.x_t(t, b.theta2), b.x_t(t, b.theta1)];
                let l = js[1] - js[0];
                pts.extend(junction_cloud(&js, &[l, l], plan.junction_points));
                pts
            }
            Barrier::Constant { .. } => linspace(-1.0, 1.0, n).collect(),
        }
    }
}

/// `∂_tΦ + (-Δ)^sΦ - f(Φ)` at `(t, x)`, with the quadrature error estimate.
pub fn residual_at(barrier: &Barrier, f: &ReactionSpec, t: f64, x: f64, quad_scale: f64) -> Result<ResidualValue> {
    barrier.check_time(t)?;
    let s = barrier.s();
    match barrier {
        Barrier::IgnitionSuper(b) => {
            let slice = b.slice(t);
            let js = slice.junctions();
            let min_piece = js.windows(2).map(|w| w[1] - w[0]).fold(slice.feature_scale(), f64::min);
            let scheme = QuadratureScheme::new(s, 1, 1e-2 * min_piece)?.refined(quad_scale);
            let q = quadrature_apply_at(ProfileRef::Line(&slice), &[x], s, &scheme)?;
            let u = b.eval_shifted(t, x);
            Ok(ResidualValue { value: b.time_derivative_shifted(t, x) + q.value - f.eval(u), error: q.error })
        }
        Barrier::IgnitionSub(b) => {
            let radial = Radial(b.slice(t)?);
            let scheme = b.scheme_at(t)?.refined(quad_scale);
            let q = match b.dimension {
                1 => quadrature_apply_at(ProfileRef::Line(&radial), &[x], s, &scheme)?,
                _ => quadrature_apply_at(ProfileRef::Plane(&radial), &[x, 0.0], s, &scheme)?,
            };
            let u = Profile1d::value(&radial, x);
            Ok(ResidualValue { value: b.time_derivative(t, &[x])? + q.value - f.eval(u), error: q.error })
        }
        Barrier::MonostableSub(b) => {
            let slice = b.slice(t);
            let scheme = QuadratureScheme::new(s, b.d, 0.05 * slice.local_scale(x))?.refined(quad_scale);
            let radial = Radial(slice);
            let q = match b.d {
                1 => quadrature_apply_at(ProfileRef::Line(&radial), &[x], s, &scheme)?,
                _ => quadrature_apply_at(ProfileRef::Plane(&radial), &[x, 0.0], s, &scheme)?,
            };
            Ok(ResidualValue { value: b.time_derivative(t, x) + q.value - f.eval(b.eval(t, x)), error: q.error })
        }
        Barrier::Constant { value, .. } => Ok(ResidualValue { value: -f.eval(*value), error: 0.0 }),
    }
}

pub fn default_tolerance(f: &ReactionSpec) -> f64 {
    TOLERANCE_SCALE * f.sup_norm.max(1.0)
}

pub fn certify(barrier: &Barrier, f: &ReactionSpec, mode: Mode, plan: &SamplingPlan) -> Result<ResidualReport> {
    certify_with(barrier, f, mode, plan, default_tolerance(f))
}

pub fn certify_with(
    barrier: &Barrier,
    f: &ReactionSpec,
    mode: Mode,
    plan: &SamplingPlan,
    tolerance: f64,
) -> Result<ResidualReport> {
    let times = barrier.default_times(plan.times);
    if times.is_empty() {
        return Err(contract("sampling plan has no times"));
    }
    for &t in &times {
        barrier.check_time(t)?;
    }
    let jobs: Vec<(f64, f64)> = times
        .iter()
        .flat_map(|&t| barrier.space_plan(t, plan).into_iter().map(move |x| (t, x)))
        .collect();
    if jobs.is_empty() {
        return Err(contract("sampling plan produced no points"));
    }
    let samples: Vec<SamplePoint> = jobs
        .par_iter()
        .map(|&(t, x)| {
            residual_at(barrier, f, t, x, plan.quad_scale)
                .map(|r| SamplePoint { t, x, residual: r.value, error: r.error })
        })
        .collect::<Result<_>>()?;
    let min = samples.iter().map(|p| p.residual).fold(f64::INFINITY, f64::min);
    let max = samples.iter().map(|p| p.residual).fold(f64::NEG_INFINITY, f64::max);
    let max_err = samples.iter().map(|p| p.error).fold(0.0, f64::max);
    let worst = match mode {
        Mode::Super => samples.iter().min_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap()),
        Mode::Sub => samples.iter().max_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap()),
    }
    .map(|p| (p.t, p.x))
    .unwrap_or((f64::NAN, f64::NAN));
    // slack to the tolerance must also dominate the quadrature error
    let passes = match mode {
        Mode::Super => samples.iter().all(|p| p.residual + tolerance >= p.error.max(0.0) && p.residual >= -tolerance),
        Mode::Sub => samples.iter().all(|p| tolerance - p.residual >= p.error.max(0.0) && p.residual <= tolerance),
    };
    let verdict = match (passes, mode) {
        (true, Mode::Super) => Verdict::CertifiedSuper,
        (true, Mode::Sub) => Verdict::CertifiedSub,
        (false, _) => Verdict::Failed,
    };
    Ok(ResidualReport {
        barrier_id: barrier.id(),
        mode,
        coordinate: barrier.coordinate().to_string(),
        tolerance,
        time_samples: times,
        samples,
        min_residual: min,
        max_residual: max,
        worst_point: worst,
        max_quad_error: max_err,
        verdict,
    })
}

/// `ψ_{A₁,A₂,θ}`: 1 left of `A₁`, linear down to `θ` at `A₂`, then `θ`.
pub fn lemma61_ramp(a1: f64, a2: f64, theta: f64, x: f64) -> f64 {
    if x <= a1 {
        1.0
    } else if x <= a2 {
        1.0 - (1.0 - theta) * (x - a1) / (a2 - a1)
    } else {
        theta
    }
}

/// Samples used to verify that `φ` lies below the ramp.
const TOUCH_SAMPLES: usize = 4000;
const TOUCH_TOL: f64 = 1e-12;

/// True iff `(-∂_xx)^s φ(x) ≥ -C_s (1-θ)(A₂-A₁)^{-2s} - 1e-6`, with
/// `C_s = max{c_s / (2s(1-2s)), 1}`.
pub fn check_lemma61(a1: f64, a2: f64, theta: f64, s: f64, phi: &dyn Profile1d, x: f64) -> Result<bool> {
    if !(s > 0.0 && s < 0.5) {
        return Err(contract(format!("need s in (0, 1/2), got {s}")));
    }
    if !(a1 < a2 && theta > 0.0 && theta < 1.0) {
        return Err(contract("need A1 < A2 and theta in (0, 1)"));
    }
    let len = a2 - a1;
    if (phi.value(x) - lemma61_ramp(a1, a2, theta, x)).abs() > TOUCH_TOL {
        return Err(contract(format!("phi does not touch the ramp at x = {x}")));
    }
    let lo = a1.min(x) - 10.0 * len;
    let hi = a2.max(x) + 10.0 * len;
    for y in linspace(lo, hi, TOUCH_SAMPLES) {
        if phi.value(y) > lemma61_ramp(a1, a2, theta, y) + TOUCH_TOL {
            return Err(contract(format!("phi exceeds the ramp at y = {y}")));
        }
    }
    let c_s = calibrate_constant(s, 1)?;
    let big_c = (c_s / (2.0 * s * (1.0 - 2.0 * s))).max(1.0);
    let scheme = QuadratureScheme::new(s, 1, 1e-3 * len)?;
    let q = quadrature_apply_at(ProfileRef::Line(phi), &[x], s, &scheme)?;
    Ok(q.value >= -big_c * (1.0 - theta) * len.powf(-2.0 * s) - 1e-6)
}

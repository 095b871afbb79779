//! Pseudospectral solver for `u_t + (-Δ)^s u = f(u)` on a periodic box.
//!
//! Each step is second-order exponential time differencing: the linear part
//! is applied exactly as the multiplier `exp(-|ξ|^{2s} dt)` and the
//! Duhamel integral of the reaction by the trapezoid rule with an Euler
//! predictor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers_ignition::{smooth_step, BumpProfile};
use crate::error::{contract, LabError, Result};
use crate::fractional_operator::{FourierMultiplier, GridField};
use crate::front_tracking::{level_positions, Geometry};
use crate::reactions::{ReactionKind, ReactionSpec};

/// Post-step values outside `[-STABILITY_SLACK, 1 + STABILITY_SLACK]` abort the step.
pub const STABILITY_SLACK: f64 = 1e-6;
pub const MAX_HALVINGS: u32 = 8;
/// Level whose outermost position is watched for saturation.
pub const SATURATION_LEVEL: f64 = 0.1;
/// Saturation is flagged once that position passes this fraction of the scan range.
pub const SATURATION_FRACTION: f64 = 0.9;
/// Required ratio of half-width to the predicted front position.
pub const BUFFER_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `θ` on `x < 0` falling to 0 before `x = r`, mollified over two cells.
    Front { theta: f64, r: f64 },
    /// `θ` on the ball of radius `r_inner`, 0 beyond `r_outer`.
    Ball { theta: f64, r_inner: f64, r_outer: f64 },
    /// A certified stationary bump, radially symmetric.
    Bump { profile: BumpProfile },
    Explicit { field: GridField, geometry: Geometry },
}

impl InitialCondition {
    pub fn geometry(&self) -> Geometry {
        match self {
            InitialCondition::Front { .. } => Geometry::Front,
            InitialCondition::Ball { .. } | InitialCondition::Bump { .. } => Geometry::Radial,
            InitialCondition::Explicit { geometry, .. } => *geometry,
        }
    }

    /// Outermost position of the initial support.
    pub fn extent(&self) -> f64 {
        match self {
            InitialCondition::Front { r, .. } => *r,
            InitialCondition::Ball { r_outer, .. } => *r_outer,
            InitialCondition::Bump { profile } => profile.support_end,
            InitialCondition::Explicit { field, geometry } => {
                level_positions(field, 1e-3, *geometry).1.unwrap_or(0.0).max(0.0)
            }
        }
    }

    fn check(&self, dimension: usize) -> Result<()> {
        match self {
            InitialCondition::Front { theta, r } => {
                if !(*theta > 0.0 && *theta <= 1.0 && *r > 0.0) {
                    return Err(contract("initial_condition: front needs theta in (0, 1] and r > 0"));
                }
            }
            InitialCondition::Ball { theta, r_inner, r_outer } => {
                if !(*theta > 0.0 && *theta <= 1.0 && *r_inner > 0.0 && r_outer > r_inner) {
                    return Err(contract(
                        "initial_condition: ball needs theta in (0, 1] and 0 < r_inner < r_outer",
                    ));
                }
            }
            InitialCondition::Bump { profile } => {
                if profile.dimension != dimension {
                    return Err(contract(format!(
                        "initial_condition: bump built for dimension {}, solver runs in {dimension}",
                        profile.dimension
                    )));
                }
            }
            InitialCondition::Explicit { field, .. } => {
                if field.dimension() != dimension {
                    return Err(contract("initial_condition: explicit field has the wrong dimension"));
                }
                field.check_state_range()?;
            }
        }
        Ok(())
    }

    /// Samples the datum on the solver grid.
    pub fn sample(&self, dimension: usize, half_width: f64, n: usize) -> Result<GridField> {
        let h = 2.0 * half_width / n as f64;
        let ramp = |x: f64, center: f64, width: f64| smooth_step((x - center) / width + 0.5);
        let norm = |p: &[f64]| if dimension == 1 { p[0].abs() } else { p[0].hypot(p[1]) };
        match self {
            InitialCondition::Front { theta, r } => {
                let w = (2.0 * h).min(*r);
                // The second ramp closes the periodic wrap at x = half_width.
                GridField::from_fn(dimension, half_width, n, |p| {
                    theta * (1.0 - ramp(p[0], 0.5 * r, w)) + theta * ramp(p[0], half_width - h, 2.0 * h)
                })
            }
            InitialCondition::Ball { theta, r_inner, r_outer } => {
                let w = (2.0 * h).min(r_outer - r_inner);
                let c = 0.5 * (r_inner + r_outer);
                GridField::from_fn(dimension, half_width, n, |p| theta * (1.0 - ramp(norm(p), c, w)))
            }
            InitialCondition::Bump { profile } => {
                GridField::from_fn(dimension, half_width, n, |p| profile.radial_value(norm(p)))
            }
            InitialCondition::Explicit { field, .. } => {
                if field.half_width() != half_width || field.points_per_axis() != n {
                    return Err(contract("initial_condition: explicit field geometry differs from the solver grid"));
                }
                Ok(field.clone())
            }
        }
    }
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub s: f64,
    pub dimension: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    pub dt_initial: f64,
    pub t_final: f64,
    pub reaction: ReactionSpec,
    pub initial_condition: InitialCondition,
    pub output_times: Vec<f64>,
    /// Amplitude `A` of the predicted front `extent + A t^p` (or `A e^{σt}`)
    /// used by the buffer rule.
    #[serde(default = "default_amplitude")]
    pub front_amplitude: f64,
}

impl SolverConfig {
    /// Growth law of the front for this reaction: `Ok(p)` for `t^p`, `Err(σ)` for `e^{σt}`.
    pub fn growth_law(&self) -> std::result::Result<f64, f64> {
        let f = &self.reaction;
        let s = self.s;
        let exponential = |f0: f64| match self.initial_condition.geometry() {
            Geometry::Front => f0 / (2.0 * s),
            Geometry::Radial => f0 / (self.dimension as f64 + 2.0 * s),
        };
        match f.kind {
            ReactionKind::Ignition | ReactionKind::Bistable => Ok(0.5 / s),
            ReactionKind::AlphaMonostable if f.alpha > 1.0 => Ok(f.alpha / (2.0 * s * (f.alpha - 1.0))),
            ReactionKind::AlphaMonostable | ReactionKind::Kpp => Err(exponential(f.derivative_at_zero())),
        }
    }

    pub fn predicted_front(&self, t: f64) -> f64 {
        let growth = match self.growth_law() {
            Ok(p) => t.powf(p),
            Err(sigma) => (sigma * t).exp(),
        };
        self.initial_condition.extent() + self.front_amplitude * growth
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(contract(format!("s: must lie in (0, 1), got {}", self.s)));
        }
        if self.dimension != 1 && self.dimension != 2 {
            return Err(contract(format!("dimension: must be 1 or 2, got {}", self.dimension)));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(contract("half_width: must be positive"));
        }
        if self.points_per_axis < 16 || !self.points_per_axis.is_power_of_two() {
            return Err(contract("points_per_axis: must be a power of two >= 16"));
        }
        if !(self.t_final > 0.0) {
            return Err(contract("t_final: must be positive"));
        }
        let dt_max = 0.5 / self.reaction.lipschitz;
        if !(self.dt_initial > 0.0 && self.dt_initial <= dt_max) {
            return Err(contract(format!(
                "dt_initial: must lie in (0, 0.5/K] = (0, {dt_max:e}], got {}",
                self.dt_initial
            )));
        }
        if !(self.front_amplitude > 0.0) {
            return Err(contract("front_amplitude: must be positive"));
        }
        let ordered = self.output_times.windows(2).all(|w| w[0] < w[1]);
        let inside = self.output_times.iter().all(|&t| t >= 0.0 && t <= self.t_final);
        if !ordered || !inside {
            return Err(contract("output_times: must be strictly increasing within [0, t_final]"));
        }
        self.initial_condition.check(self.dimension)?;
        let predicted = self.predicted_front(self.t_final);
        if !(self.half_width >= BUFFER_FACTOR * predicted) {
            return Err(contract(format!(
                "half_width: {} is below {BUFFER_FACTOR} x predicted front position {predicted:e} at t_final",
                self.half_width
            )));
        }
        Ok(())
    }

    pub fn initial_field(&self) -> Result<GridField> {
        let u0 = self.initial_condition.sample(self.dimension, self.half_width, self.points_per_axis)?;
        u0.check_state_range()?;
        Ok(u0)
    }
}

fn heat_symbol(s: f64, dt: f64) -> impl Fn(f64) -> f64 {
    move |k| (-k.powf(2.0 * s) * dt).exp()
}

fn reaction_of(f: &ReactionSpec, u: &[f64]) -> Vec<f64> {
    u.par_iter().map(|&v| f.eval(v.clamp(0.0, 1.0))).collect()
}

/// Heun combination given `S[u]` and `S[f(u)]`; checks the range and clamps.
fn combine(f: &ReactionSpec, su: &[f64], sfu: &[f64], dt: f64) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = su
        .par_iter()
        .zip(sfu.par_iter())
        .map(|(&a0, &b0)| {
            let a = a0 + dt * b0;
            a0 + 0.5 * dt * (b0 + f.eval(a.clamp(0.0, 1.0)))
        })
        .collect();
    if let Some(i) = out.iter().position(|&v| !(-STABILITY_SLACK..=1.0 + STABILITY_SLACK).contains(&v)) {
        return Err(LabError::Stability(format!(
            "value {:e} at node {i} after a step of {dt:e}; reduce dt",
            out[i]
        )));
    }
    out.par_iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(out)
}

fn advance(op: &FourierMultiplier, f: &ReactionSpec, u: &[f64], dt: f64) -> Result<Vec<f64>> {
    let fu = reaction_of(f, u);
    let (su, mut sfu) = op.apply_pair(u, &fu);
    // The packed transform leaks rounding noise into the reaction channel.
    if fu.iter().all(|&v| v == 0.0) {
        sfu.iter_mut().for_each(|v| *v = 0.0);
    }
    combine(f, &su, &sfu, dt)
}

/// Advances two states; each state gets its own transform so equal inputs
/// give bitwise equal outputs.
fn advance_two(op: &FourierMultiplier, f: &ReactionSpec, u: &[f64], v: &[f64], dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((advance(op, f, u, dt)?, advance(op, f, v, dt)?))
}

/// One exponential-integrator step of size `dt ≤ cfg.dt_initial`.
pub fn step(state: &GridField, cfg: &SolverConfig, dt: f64) -> Result<GridField> {
    if !(dt > 0.0 && dt <= cfg.dt_initial) {
        return Err(contract(format!("step size {dt} must lie in (0, dt_initial]")));
    }
    state.check_state_range()?;
    let op = FourierMultiplier::new(state, heat_symbol(cfg.s, dt));
    Ok(state.with_values_unchecked(advance(&op, &cfg.reaction, state.values(), dt)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub t: f64,
    pub mass: f64,
    pub min: f64,
    pub max: f64,
}

impl FrameStats {
    fn of(t: f64, u: &GridField) -> Self {
        Self { t, mass: u.mass(), min: u.min(), max: u.max() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtChange {
    pub t: f64,
    pub dt: f64,
}

/// Run record without the fields themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub stats: Vec<FrameStats>,
    pub dt_history: Vec<DtChange>,
    pub steps: usize,
    pub halvings: u32,
    /// Time at which the front reached the saturation guard, if it did.
    pub saturated_at: Option<f64>,
    pub final_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<GridField>,
    pub summary: RunSummary,
}

fn saturation_reached(u: &GridField, geometry: Geometry) -> bool {
    let range = match geometry {
        Geometry::Front => 0.5 * u.half_width(),
        Geometry::Radial => u.half_width(),
    };
    matches!(level_positions(u, SATURATION_LEVEL, geometry).1, Some(x) if x > SATURATION_FRACTION * range)
}

/// Step-size bookkeeping shared by [`run_observed`] and [`comparison_test`].
struct Clock {
    s: f64,
    dt: f64,
    main: FourierMultiplier,
    short: FourierMultiplier,
    short_dt: f64,
    half_width: f64,
}

impl Clock {
    fn new(like: &GridField, s: f64, dt: f64) -> Self {
        Self {
            s,
            dt,
            main: FourierMultiplier::new(like, heat_symbol(s, dt)),
            short: FourierMultiplier::new(like, heat_symbol(s, dt)),
            short_dt: dt,
            half_width: like.half_width(),
        }
    }

    /// Step size and operator for the next step towards `target`.
    fn next(&mut self, t: f64, target: f64) -> (f64, bool, &FourierMultiplier) {
        let remaining = target - t;
        if remaining <= self.dt * (1.0 + 1e-9) {
            if remaining != self.short_dt {
                self.short.set_symbol(self.half_width, heat_symbol(self.s, remaining));
                self.short_dt = remaining;
            }
            (remaining, true, &self.short)
        } else {
            (self.dt, false, &self.main)
        }
    }

    fn halve(&mut self) {
        self.dt *= 0.5;
        self.main.set_symbol(self.half_width, heat_symbol(self.s, self.dt));
    }
}

/// Runs `cfg`, handing every output frame to `observe`.
pub fn run_observed(cfg: &SolverConfig, observe: &mut dyn FnMut(f64, &GridField)) -> Result<RunSummary> {
    cfg.validate()?;
    let geometry = cfg.initial_condition.geometry();
    let mut u = cfg.initial_field()?;
    let mut clock = Clock::new(&u, cfg.s, cfg.dt_initial);
    let mut summary = RunSummary {
        stats: Vec::new(),
        dt_history: vec![DtChange { t: 0.0, dt: cfg.dt_initial }],
        steps: 0,
        halvings: 0,
        saturated_at: None,
        final_time: 0.0,
    };
    let mut targets: Vec<f64> = cfg.output_times.clone();
    if targets.last() != Some(&cfg.t_final) {
        targets.push(cfg.t_final);
    }
    let mut t = 0.0;
    let mut emit = |t: f64, u: &GridField, summary: &mut RunSummary| {
        if cfg.output_times.contains(&t) {
            summary.stats.push(FrameStats::of(t, u));
            observe(t, u);
        }
    };
    for &target in &targets {
        while t < target {
            let (h, lands, op) = clock.next(t, target);
            match advance(op, &cfg.reaction, u.values(), h) {
                Ok(v) => {
                    u = u.with_values_unchecked(v);
                    t = if lands { target } else { t + h };
                    summary.steps += 1;
                }
                Err(LabError::Stability(msg)) => {
                    if summary.halvings >= MAX_HALVINGS {
                        return Err(LabError::Stability(format!("{msg} (after {MAX_HALVINGS} halvings)")));
                    }
                    clock.halve();
                    summary.halvings += 1;
                    summary.dt_history.push(DtChange { t, dt: clock.dt });
                    continue;
                }
                Err(e) => return Err(e),
            }
            if saturation_reached(&u, geometry) {
                summary.saturated_at = Some(t);
                summary.final_time = t;
                emit(t, &u, &mut summary);
                return Ok(summary);
            }
        }
        emit(t, &u, &mut summary);
    }
    summary.final_time = t;
    Ok(summary)
}

/// Runs `cfg` and keeps the field at every output time.
pub fn run(cfg: &SolverConfig) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut fields = Vec::new();
    let summary = run_observed(cfg, &mut |t, u| {
        times.push(t);
        fields.push(u.clone());
    })?;
    Ok(Trajectory { times, fields, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    /// `max(u - v)` over the grid at each output time.
    pub excess: Vec<f64>,
    /// Largest excess over every step, not only output times.
    pub max_excess: f64,
    /// Whether the two trajectories agreed bit for bit throughout.
    pub identical: bool,
    pub halvings: u32,
}

/// Evolves `u0 ≤ v0` with one shared step sequence and reports how far the
/// order is violated. The initial condition of `cfg` is ignored.
pub fn comparison_test(u0: &GridField, v0: &GridField, cfg: &SolverConfig) -> Result<ComparisonReport> {
    if !u0.same_geometry(v0) || u0.dimension() != cfg.dimension {
        return Err(contract("comparison fields must share the solver geometry"));
    }
    u0.check_state_range()?;
    v0.check_state_range()?;
    if let Some(i) = u0.values().iter().zip(v0.values()).position(|(a, b)| a > b) {
        return Err(contract(format!("comparison data not ordered at node {i}")));
    }
    let mut u = u0.values().to_vec();
    let mut v = v0.values().to_vec();
    let mut clock = Clock::new(u0, cfg.s, cfg.dt_initial);
    let mut report = ComparisonReport { times: Vec::new(), excess: Vec::new(), max_excess: 0.0, identical: true, halvings: 0 };
    let excess = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    let mut targets = cfg.output_times.clone();
    if targets.last() != Some(&cfg.t_final) {
        targets.push(cfg.t_final);
    }
    let mut t = 0.0;
    for &target in &targets {
        while t < target {
            let (h, lands, op) = clock.next(t, target);
            match advance_two(op, &cfg.reaction, &u, &v, h) {
                Ok((a, b)) => {
                    u = a;
                    v = b;
                    t = if lands { target } else { t + h };
                }
                Err(LabError::Stability(msg)) => {
                    if report.halvings >= MAX_HALVINGS {
                        return Err(LabError::Stability(msg));
                    }
                    clock.halve();
                    report.halvings += 1;
                    continue;
                }
                Err(e) => return Err(e),
            }
            report.max_excess = report.max_excess.max(excess(&u, &v));
            report.identical &= u == v;
        }
        if cfg.output_times.contains(&t) {
            report.times.push(t);
            report.excess.push(excess(&u, &v));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional_operator::semigroup_step;
    use crate::reactions::{make_ignition, make_kpp, make_power_logistic, Shape};
    use proptest::prelude::*;

    fn zero_reaction() -> ReactionSpec {
        ReactionSpec {
            kind: ReactionKind::Ignition,
            theta0: 0.5,
            alpha: 1.0,
            gamma: 1.0,
            gamma_prime: 1.0,
            lipschitz: 1.0,
            sup_norm: 0.0,
            shape: Shape::Table { values: vec![0.0, 0.0] },
        }
    }

    fn config(f: ReactionSpec, ic: InitialCondition, half_width: f64, n: usize, dt: f64, t_final: f64) -> SolverConfig {
        SolverConfig {
            s: 0.5,
            dimension: 1,
            half_width,
            points_per_axis: n,
            dt_initial: dt,
            t_final,
            reaction: f,
            initial_condition: ic,
            output_times: (1..=10).map(|i| t_final * i as f64 / 10.0).collect(),
            front_amplitude: 1.0,
        }
    }

    fn gaussian(half_width: f64, n: usize, base: f64, a: f64) -> GridField {
        GridField::from_fn(1, half_width, n, |p| base + a * (-p[0] * p[0] / 4.0).exp()).unwrap()
    }

    #[test]
    fn zero_reaction_is_the_semigroup() {
        let u = gaussian(20.0, 256, 0.1, 0.8);
        let cfg = config(zero_reaction(), InitialCondition::Front { theta: 0.5, r: 1.0 }, 20.0, 256, 0.3, 1.0);
        let a = step(&u, &cfg, 0.3).unwrap();
        let b = semigroup_step(&u, 0.5, 0.3).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn one_is_a_fixed_point() {
        let f = make_kpp(1.0).unwrap();
        let u = GridField::constant(2, 10.0, 32, 1.0).unwrap();
        let mut cfg = config(f, InitialCondition::Front { theta: 0.5, r: 1.0 }, 10.0, 32, 0.25, 1.0);
        cfg.dimension = 2;
        let v = step(&u, &cfg, 0.25).unwrap();
        assert!(v.values().iter().all(|x| (x - 1.0).abs() <= 1e-14));
    }

    #[test]
    fn uniform_state_follows_scalar_heun() {
        let f = make_power_logistic(2.0, 1.0, 0.3).unwrap();
        let dt = 0.5 / f.lipschitz;
        let cfg = config(f.clone(), InitialCondition::Front { theta: 0.5, r: 1.0 }, 10.0, 64, dt, 1.0);
        let mut u = GridField::constant(1, 10.0, 64, 0.2).unwrap();
        let mut c = 0.2f64;
        for _ in 0..20 {
            u = step(&u, &cfg, dt).unwrap();
            let a = c + dt * f.eval(c);
            c += 0.5 * dt * (f.eval(c) + f.eval(a));
        }
        assert!(u.values().iter().all(|x| (x - c).abs() <= 1e-12), "{} vs {c}", u.values()[0]);
    }

    #[test]
    fn overshoot_is_a_stability_error() {
        let f = make_kpp(10.0).unwrap();
        let u = GridField::constant(1, 10.0, 32, 0.9).unwrap();
        let op = FourierMultiplier::new(&u, heat_symbol(0.5, 1.0));
        assert!(matches!(advance(&op, &f, u.values(), 1.0), Err(LabError::Stability(_))));
    }

    #[test]
    fn validation_names_the_field() {
        let f = make_kpp(1.0).unwrap();
        let cfg = config(f.clone(), InitialCondition::Front { theta: 0.5, r: 1.0 }, 20.0, 256, 0.1, 10.0);
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("half_width"), "{err}");
        let cfg = config(f, InitialCondition::Front { theta: 0.5, r: 1.0 }, 1e6, 256, 0.9, 1.0);
        assert!(cfg.validate().unwrap_err().to_string().contains("dt_initial"));
    }

    #[test]
    fn front_invades_and_subthreshold_data_quench() {
        let f = make_ignition(0.25, 1.0).unwrap();
        let dt = 0.5 / f.lipschitz;
        let cfg = config(f.clone(), InitialCondition::Front { theta: 0.9, r: 1.0 }, 400.0, 2048, dt, 20.0);
        let traj = run(&cfg).unwrap();
        assert!(traj.summary.saturated_at.is_none());
        let n = cfg.points_per_axis;
        let lows: Vec<f64> = traj
            .fields
            .iter()
            .map(|u| u.values()[..n / 2].iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        assert!(lows.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{lows:?}");
        assert!(*lows.last().unwrap() > 0.99);

        let ic = InitialCondition::Ball { theta: 0.2, r_inner: 2.0, r_outer: 3.0 };
        let cfg = config(f, ic, 400.0, 2048, dt, 20.0);
        let traj = run(&cfg).unwrap();
        let maxes: Vec<f64> = traj.summary.stats.iter().map(|s| s.max).collect();
        assert!(maxes.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{maxes:?}");
    }

    #[test]
    fn saturation_is_flagged() {
        let f = make_kpp(1.0).unwrap();
        let ic = InitialCondition::Ball { theta: 0.9, r_inner: 1.0, r_outer: 2.0 };
        let mut cfg = config(f, ic, 40.0, 256, 0.1, 1.0);
        cfg.t_final = 30.0;
        cfg.output_times = vec![10.0, 20.0, 30.0];
        cfg.front_amplitude = 1e-6;
        let summary = run_observed(&cfg, &mut |_, _| {}).unwrap();
        let at = summary.saturated_at.expect("front must reach the guard");
        assert!(at < 30.0);
        assert!(summary.final_time == at);
    }

    #[test]
    fn doubling_the_domain_barely_moves_the_front() {
        let f = make_ignition(0.25, 1.0).unwrap();
        let ic = InitialCondition::Ball { theta: 1.0, r_inner: 5.0, r_outer: 10.0 };
        let fronts: Vec<f64> = [(80.0, 1024), (160.0, 2048), (320.0, 4096), (640.0, 8192)]
            .iter()
            .map(|&(half_width, n)| {
                let cfg = config(f.clone(), ic.clone(), half_width, n, 0.05, 10.0);
                let last = run(&cfg).unwrap().fields.pop().unwrap();
                level_positions(&last, 0.5, Geometry::Radial).1.unwrap()
            })
            .collect();
        // Wrapped tails pull the front ahead; the pull shrinks about 4x per doubling.
        let steps: Vec<f64> = fronts.windows(2).map(|w| w[0] - w[1]).collect();
        assert!(steps.iter().all(|&d| d > 0.0), "{fronts:?}");
        assert!(steps.windows(2).all(|w| w[1] <= w[0] / 3.0), "{fronts:?}");
        assert!((fronts[0] - fronts[3]) / fronts[3] <= 0.025, "{fronts:?}");
    }

    #[test]
    fn second_order_in_time() {
        let f = make_kpp(1.0).unwrap();
        let ic = InitialCondition::Explicit { field: gaussian(20.0, 128, 0.0, 0.5), geometry: Geometry::Radial };
        let finals: Vec<GridField> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&dt| {
                let mut cfg = config(f.clone(), ic.clone(), 20.0, 128, dt, 2.0);
                cfg.front_amplitude = 1e-3;
                run(&cfg).unwrap().fields.pop().unwrap()
            })
            .collect();
        let diff = |a: &GridField, b: &GridField| {
            a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        let ratio = diff(&finals[0], &finals[1]) / diff(&finals[1], &finals[2]);
        assert!((3.4..4.6).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn equal_data_give_identical_runs() {
        let f = make_kpp(1.0).unwrap();
        let v0 = gaussian(20.0, 128, 0.0, 0.5);
        let mut cfg = config(f, InitialCondition::Front { theta: 0.5, r: 1.0 }, 20.0, 128, 0.1, 2.0);
        cfg.front_amplitude = 1e-3;
        let rep = comparison_test(&v0, &v0, &cfg).unwrap();
        assert!(rep.identical);
        assert_eq!(rep.max_excess, 0.0);
        let half = v0.with_values(v0.values().iter().map(|x| 0.5 * x).collect()).unwrap();
        let rep = comparison_test(&half, &v0, &cfg).unwrap();
        assert!(rep.max_excess <= 1e-6);
        assert!(comparison_test(&v0, &half, &cfg).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn order_is_preserved(kind in 0usize..3, seed_a in 0.05f64..0.95, seed_b in 0.0f64..1.0, s in 0.2f64..0.9) {
            let f = match kind {
                0 => make_ignition(0.3, 1.0).unwrap(),
                1 => make_power_logistic(2.0, 1.0, 0.3).unwrap(),
                _ => make_kpp(1.0).unwrap(),
            };
            let v0 = GridField::from_fn(1, 30.0, 128, |p| seed_a / (1.0 + (p[0] / 3.0).powi(2))).unwrap();
            let u0 = v0.with_values(
                v0.values().iter().enumerate().map(|(i, x)| x * (seed_b * (0.5 + 0.5 * (i as f64 * 0.3).sin()))).collect(),
            ).unwrap();
            let mut cfg = config(f.clone(), InitialCondition::Front { theta: 0.5, r: 1.0 }, 30.0, 128, 0.5 / f.lipschitz, 3.0);
            cfg.s = s;
            let rep = comparison_test(&u0, &v0, &cfg).unwrap();
            prop_assert!(rep.max_excess <= 1e-6, "excess {}", rep.max_excess);
        }
    }
}

//! Acceptance harness: one PASS/FAIL line per criterion, tolerances pinned
//! as constants next to each check.
//!
//! `FRACLAB_ACCEPTANCE_ONLY=1,3,9` restricts the run to the listed criteria.
//! A criterion whose failure is exactly a documented, unattainable target
//! prints `FAIL (KNOWN_UNATTAINABLE)` and leaves the exit status alone; any
//! other failure makes the harness exit nonzero.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use fraclab::barriers_ignition::*;
use fraclab::barriers_monostable::*;
use fraclab::fractional_operator::*;
use fraclab::front_tracking::*;
use fraclab::reactions::*;
use fraclab::residual_verifier::*;
use fraclab::solver::*;
use fraclab::{LabError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Pass,
    Fail,
    Known,
}

struct Outcome {
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Self {
        Self { status: if ok { Status::Pass } else { Status::Fail }, detail }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect();
    // exact end points, so output times hit t_final
    v[0] = a;
    v[n - 1] = b;
    v
}

/// `c_{1,s} = s 4^s Γ(1/2 + s) / (√π Γ(1 - s))`.
fn closed_form_c1(s: f64) -> f64 {
    s * 4f64.powf(s) * gamma(0.5 + s) / (PI.sqrt() * gamma(1.0 - s))
}

// ---------------------------------------------------------------- 1

const C1_S: [f64; 6] = [0.2, 0.25, 0.3, 0.4, 0.5, 0.75];
const C1_POINTS: usize = 20;
const C1_REL_TOL: f64 = 1e-3;

fn c1_operator_cross_validation() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let g = Gaussian { center: [0.0, 0.0], width: 1.0, amplitude: 1.0 };
    let mut worst = (0.0f64, 0.0, 0usize);
    let mut count = 0;
    for d in [1usize, 2] {
        let (l, n) = if d == 1 { (4096.0, 65536) } else { (128.0, 1024) };
        let field = GridField::from_fn(d, l, n, |p| {
            if d == 1 {
                Profile1d::value(&g, p[0])
            } else {
                g.value_at([p[0], p[1]])
            }
        })?;
        // nodes within half a width of the center, away from the sign change of the image
        let reach = (0.5 / field.spacing()) as i64;
        for s in C1_S {
            let spec = spectral_apply(&field, s)?;
            let scheme = QuadratureScheme::new(s, d, field.spacing())?;
            for _ in 0..C1_POINTS {
                let k = loop {
                    let i = rng.gen_range(-reach..=reach);
                    let j = if d == 1 { 0 } else { rng.gen_range(-reach..=reach) };
                    if i * i + j * j <= reach * reach {
                        let (i, j) = ((n as i64 / 2 + i) as usize, (n as i64 / 2 + j) as usize);
                        break if d == 1 { i } else { i * n + j };
                    }
                };
                let p = field.point(k);
                let prof = if d == 1 { ProfileRef::Line(&g) } else { ProfileRef::Plane(&g) };
                let q = quadrature_apply_at(prof, &p, s, &scheme)?;
                let reference = spec.values()[k];
                let rel = (q.value - reference).abs() / reference.abs();
                if rel > worst.0 {
                    worst = (rel, s, d);
                }
                count += 1;
            }
        }
    }
    Ok(Outcome::check(
        worst.0 <= C1_REL_TOL,
        format!(
            "{count} points, max rel err {:.2e} (s={}, d={}), tol {C1_REL_TOL:e}",
            worst.0, worst.1, worst.2
        ),
    ))
}

// ---------------------------------------------------------------- 2

const C2_S: [f64; 3] = [0.1, 0.25, 0.4];
const C2_CASES: usize = 10;
const C2_REL_TOL: f64 = 1e-4;

fn c2_ramp_closed_form() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = (0.0f64, 0.0);
    for s in C2_S {
        let c = closed_form_c1(s);
        let scheme = QuadratureScheme::new(s, 1, 0.01)?;
        for _ in 0..C2_CASES {
            let a1 = rng.gen_range(-2.0..2.0);
            let len = rng.gen_range(0.1..3.0);
            let theta = rng.gen_range(0.05..0.95);
            let a2 = a1 + len;
            let psi = PiecewiseLinear::ramp(a1, a2, theta).expect("valid ramp");
            let q = quadrature_apply_at(ProfileRef::Line(&psi), &[a2], s, &scheme)?;
            let exact = -c * (1.0 - theta) * (0.5 / s + 1.0 / (1.0 - 2.0 * s)) * len.powf(-2.0 * s);
            let rel = (q.value / exact - 1.0).abs();
            if rel > worst.0 {
                worst = (rel, s);
            }
        }
    }
    Ok(Outcome::check(
        worst.0 <= C2_REL_TOL,
        format!(
            "{} cases, max rel err {:.2e} (s={}), tol {C2_REL_TOL:e}",
            C2_S.len() * C2_CASES,
            worst.0,
            worst.1
        ),
    ))
}

// ---------------------------------------------------------------- 3

const C3_S: [f64; 6] = [0.1, 0.2, 0.25, 0.3, 0.4, 0.45];
const C3_K_MAX: usize = 12;
/// Relative slack for floating-point evaluation of exact identities.
const C3_REL_TOL: f64 = 1e-12;
/// Sample points in log2 t on `[k/(1-2s), k/(1-2s) + C3_SPAN]`.
const C3_T_SAMPLES: usize = 65;
const C3_SPAN: f64 = 64.0;

fn c3_sequence_identities() -> Result<Outcome> {
    let mut identity_failures = Vec::new();
    let mut gap_first_only = 0usize;
    let mut gap_other = Vec::new();
    let mut cases = 0;
    for s in C3_S {
        let q = 2.0 * s;
        for k in 1..=C3_K_MAX {
            cases += 1;
            let seq = build_sequences(k, s)?;
            // recurrence oracle α_n = (k - n + 1) + 2s α_{n-1}, α_0 = 0
            let mut alpha = 0.0;
            for n in 1..=k {
                alpha = (k - n + 1) as f64 + q * alpha;
                if (seq.alphas[n] - alpha).abs() > C3_REL_TOL * alpha {
                    identity_failures.push(format!("alpha k={k} s={s} n={n}"));
                }
            }
            let floor = (-1.0 / ((1.0 - q) * (1.0 - q))).exp2();
            if seq.betas[k] < floor * (1.0 - C3_REL_TOL) {
                identity_failures.push(format!("beta_k floor k={k} s={s}"));
            }
            let sum: f64 = seq.betas[1..].iter().sum();
            if sum > 1.0 + C3_REL_TOL {
                identity_failures.push(format!("beta sum k={k} s={s}"));
            }
            for n in 1..=k {
                let rhs = (-(k as f64) + n as f64 - 1.0).exp2() * seq.betas[n - 1].powf(q);
                if (seq.betas[n] / rhs - 1.0).abs() > C3_REL_TOL {
                    identity_failures.push(format!("beta recurrence k={k} s={s} n={n}"));
                }
            }
            let start = k as f64 / (1.0 - q);
            for i in 0..C3_T_SAMPLES {
                let log2_t = start + C3_SPAN * i as f64 / (C3_T_SAMPLES - 1) as f64;
                for n in 1..=k {
                    let slack = seq.gap_inequality_slack(n, log2_t);
                    if slack < -C3_REL_TOL * log2_t {
                        if n == 1 {
                            gap_first_only += 1;
                        } else {
                            gap_other.push(format!("n={n} k={k} s={s} log2 t={log2_t:.3}: {slack:.3e}"));
                        }
                    }
                }
            }
        }
    }
    let example = build_sequences(3, 0.25)?.gap_inequality_slack(1, 6.0);
    let detail = format!(
        "{cases} (k, s) pairs; identity failures: {}; gap inequality: {} failing samples at n=1, {} at n>=2 \
         (k=3, s=0.25, t=64, n=1 slack {example:+.3} in log2)",
        identity_failures.len(),
        gap_first_only,
        gap_other.len()
    );
    let status = if !identity_failures.is_empty() || !gap_other.is_empty() {
        Status::Fail
    } else if gap_first_only > 0 {
        Status::Known
    } else {
        Status::Pass
    };
    Ok(Outcome { status, detail })
}

// ---------------------------------------------------------------- 4

const C4_CASES: [(f64, usize, f64); 3] = [(0.3, 3, 0.25), (0.25, 4, 0.4), (0.45, 3, 0.25)];

fn smallest_admissible_k(s: f64) -> usize {
    (1..).find(|&k| {
        let (lo, hi) = window_log2(k, s);
        lo < hi
    })
    .unwrap()
}

fn c4_supersolution_certificates() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut failed = false;
    let mut empty = false;
    for (s, k, theta0) in C4_CASES {
        let f = make_ignition(theta0, 1.0)?;
        match build_supersolution(k, s, &f) {
            Err(LabError::Window(_)) => {
                empty = true;
                let (lo, hi) = window_log2(k, s);
                parts.push(format!(
                    "({s},{k},{theta0}): empty window (2^{lo:.3}, 2^{hi:.3}), smallest admissible k = {}",
                    smallest_admissible_k(s)
                ));
            }
            Err(e) => return Err(e),
            Ok(b) => {
                let barrier = Barrier::IgnitionSuper(b);
                let plan = SamplingPlan::default();
                let coarse = certify(&barrier, &f, Mode::Super, &plan)?;
                let fine = certify(&barrier, &f, Mode::Super, &plan.refined())?;
                let ok = coarse.verdict == Verdict::CertifiedSuper && fine.verdict == Verdict::CertifiedSuper;
                failed |= !ok;
                parts.push(format!(
                    "({s},{k},{theta0}): {:?}/{:?} at quad scale 1/2, min residual {:.3e}/{:.3e}, tol {:.1e}",
                    coarse.verdict, fine.verdict, coarse.min_residual, fine.min_residual, coarse.tolerance
                ));
            }
        }
    }
    let status = if failed {
        Status::Fail
    } else if empty {
        Status::Known
    } else {
        Status::Pass
    };
    Ok(Outcome { status, detail: parts.join("; ") })
}

// ---------------------------------------------------------------- 5

/// Allowed decrease between consecutive output frames.
const C5_MONOTONE_TOL: f64 = 1e-8;
const C5_CENTER_LEVEL: f64 = 0.99;
const C5_FRAMES: usize = 11;

struct BumpRun {
    theta: f64,
    theta0: f64,
    s: f64,
    d: usize,
    half_width: f64,
    points: usize,
    dt: f64,
    t_final: f64,
}

const C5_RUNS: [BumpRun; 3] = [
    BumpRun { theta: 0.9, theta0: 0.25, s: 0.3, d: 1, half_width: 840.0, points: 1 << 15, dt: 0.05, t_final: 20.0 },
    BumpRun { theta: 0.8, theta0: 0.3, s: 0.5, d: 1, half_width: 110.0, points: 1 << 14, dt: 0.05, t_final: 2.0 },
    BumpRun { theta: 0.9, theta0: 0.25, s: 0.3, d: 2, half_width: 840.0, points: 1 << 12, dt: 0.05, t_final: 1.0 },
];

fn bump_for(theta: f64, theta0: f64, s: f64, d: usize) -> Result<BumpProfile> {
    static FIRST: OnceLock<BumpProfile> = OnceLock::new();
    let f = make_ignition(theta0, 1.0)?;
    if (theta, theta0, s, d) == (0.9, 0.25, 0.3, 1) {
        if let Some(b) = FIRST.get() {
            return Ok(b.clone());
        }
        let b = build_bump(theta, s, &f, d)?;
        return Ok(FIRST.get_or_init(|| b).clone());
    }
    build_bump(theta, s, &f, d)
}

fn c5_bumps() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut ok = true;
    for r in &C5_RUNS {
        let clock = Instant::now();
        let bump = bump_for(r.theta, r.theta0, r.s, r.d)?;
        let margin = bump.margin;
        let cfg = SolverConfig {
            s: r.s,
            dimension: r.d,
            half_width: r.half_width,
            points_per_axis: r.points,
            dt_initial: r.dt,
            t_final: r.t_final,
            reaction: make_ignition(r.theta0, 1.0)?,
            initial_condition: InitialCondition::Bump { profile: bump },
            output_times: linspace(0.0, r.t_final, C5_FRAMES),
            front_amplitude: 1.0,
        };
        let n = r.points;
        let center = if r.d == 1 { n / 2 } else { (n / 2) * n + n / 2 };
        let mut prev: Option<Vec<f64>> = None;
        let mut worst_drop = 0.0f64;
        let mut center_value = 0.0;
        let summary = run_observed(&cfg, &mut |_, u| {
            if let Some(p) = &prev {
                let drop = p.iter().zip(u.values()).map(|(a, b)| a - b).fold(0.0, f64::max);
                worst_drop = worst_drop.max(drop);
            }
            center_value = u.values()[center];
            prev = Some(u.values().to_vec());
        })?;
        let this_ok = margin > 0.0
            && worst_drop <= C5_MONOTONE_TOL
            && center_value >= C5_CENTER_LEVEL
            && summary.saturated_at.is_none();
        ok &= this_ok;
        parts.push(format!(
            "({},{},{},{}): margin {margin:.3e}, max decrease {worst_drop:.1e}, u(T,0) = {center_value:.5} [{:.0} s]",
            r.theta,
            r.theta0,
            r.s,
            r.d,
            clock.elapsed().as_secs_f64()
        ));
    }
    Ok(Outcome::check(ok, parts.join("; ")))
}

// ---------------------------------------------------------------- 6 and 11

const C6_S: f64 = 0.3;
const C6_POINTS: usize = 1 << 18;
const C6_HALF_WIDTH: f64 = 1.5e5;
const C6_DT: f64 = 0.05;
const C6_T_FINAL: f64 = 300.0;
const C6_OUTPUTS: usize = 40;
const C6_LAMBDA: f64 = 0.5;
const C6_EXPONENT_TOL: f64 = 0.25;
/// Supersolution index and the start of its time shift.
const C6_K: usize = 6;
const C6_T0: f64 = 65536.0;

fn c6_config(bump: BumpProfile) -> Result<SolverConfig> {
    Ok(SolverConfig {
        s: C6_S,
        dimension: 1,
        half_width: C6_HALF_WIDTH,
        points_per_axis: C6_POINTS,
        dt_initial: C6_DT,
        t_final: C6_T_FINAL,
        reaction: make_ignition(0.25, 1.0)?,
        initial_condition: InitialCondition::Bump { profile: bump },
        output_times: geomspace(1.0, C6_T_FINAL, C6_OUTPUTS),
        front_amplitude: 1.0,
    })
}

fn c6_simulate(cfg: &SolverConfig) -> Result<(LevelSetSeries, RunSummary)> {
    let mut series = LevelSetSeries::new(C6_LAMBDA, Geometry::Radial)?;
    let summary = run_observed(cfg, &mut |t, u| series.record(t, u))?;
    Ok((series, summary))
}

static C6_CSV: OnceLock<String> = OnceLock::new();

fn c6_ignition_sandwich() -> Result<Outcome> {
    let bump = bump_for(0.9, 0.25, C6_S, 1)?;
    let cfg = c6_config(bump.clone())?;
    let (sim, summary) = c6_simulate(&cfg)?;
    let _ = C6_CSV.set(sim.to_csv());
    let target = 0.5 / C6_S;
    let window = (0.1 * C6_T_FINAL, C6_T_FINAL);
    let under = sim.fit_power(Side::Under, window)?;
    let over = sim.fit_power(Side::Over, window)?;

    let f = cfg.reaction.clone();
    let sub = build_self_similar_sub(bump)?;
    let sub_report = certify(&Barrier::IgnitionSub(sub.clone()), &f, Mode::Sub, &SamplingPlan::default())?;
    let sup = build_supersolution(C6_K, C6_S, &f)?;
    let sup_report = certify(&Barrier::IgnitionSuper(sup.clone()), &f, Mode::Super, &SamplingPlan::default())?;
    let t_last = C6_T0 + C6_T_FINAL;
    let shift_in_window = sup.in_window(C6_T0) && sup.in_window(t_last);

    // The sub starts from the bump at t_min; the super dominates the bump
    // at any time in its window since it equals 1 far beyond the support.
    let mut lower = LevelSetSeries::new(C6_LAMBDA, Geometry::Radial)?;
    let mut upper = LevelSetSeries::new(C6_LAMBDA, Geometry::Radial)?;
    for &t in &sim.times {
        let x = sub.level_position(t + sub.t_min(), C6_LAMBDA)?;
        lower.push(t, Some(x), Some(x));
        let tt = t + C6_T0;
        let y = sup.shift(tt) + sup.level_over_shifted(tt, C6_LAMBDA)?;
        upper.push(t, Some(y), Some(y));
    }
    let sandwich = sandwich_check(&lower, &sim, &upper)?;

    let ok = (under.exponent - target).abs() <= C6_EXPONENT_TOL
        && (over.exponent - target).abs() <= C6_EXPONENT_TOL
        && sub_report.verdict == Verdict::CertifiedSub
        && sup_report.verdict == Verdict::CertifiedSuper
        && shift_in_window
        && sandwich
        && summary.saturated_at.is_none();
    Ok(Outcome::check(
        ok,
        format!(
            "p_under {:.4}, p_over {:.4} (target {target:.4}, tol {C6_EXPONENT_TOL}); sub {:?} (max {:.2e}), \
             super k={C6_K} {:?} (min {:.2e}); sandwich {sandwich}; {} steps, {} halvings",
            under.exponent,
            over.exponent,
            sub_report.verdict,
            sub_report.max_residual,
            sup_report.verdict,
            sup_report.min_residual,
            summary.steps,
            summary.halvings
        ),
    ))
}

fn c11_determinism() -> Result<Outcome> {
    let bump = bump_for(0.9, 0.25, C6_S, 1)?;
    let cfg = c6_config(bump)?;
    let first = match C6_CSV.get() {
        Some(csv) => csv.clone(),
        None => c6_simulate(&cfg)?.0.to_csv(),
    };
    let second = c6_simulate(&cfg)?.0.to_csv();
    Ok(Outcome::check(
        first == second,
        format!("{} CSV bytes, identical: {}", first.len(), first == second),
    ))
}

// ---------------------------------------------------------------- 7

const C7_S: f64 = 0.4;
const C7_ALPHA: f64 = 2.0;
const C7_GAMMA: f64 = 1.0;
const C7_THETA0: f64 = 0.3;
const C7_THETA: f64 = 0.8;
const C7_POINTS: usize = 1 << 20;
const C7_HALF_WIDTH: f64 = 1.6e7;
const C7_DT: f64 = 0.25;
const C7_T_FINAL: f64 = 1000.0;
const C7_FRONT_AMPLITUDE: f64 = 0.12;
const C7_OUTPUTS: usize = 40;
const C7_LAMBDA: f64 = 0.1;
const C7_EXPONENT_TOL: f64 = 0.375;
const C7_LAW_TOL: f64 = 1e-6;
/// Barrier level-law fit: times `T_θ 2^j` for these `j`.
const C7_LAW_OCTAVES: (f64, f64) = (30.0, 40.0);
const C7_LAW_SAMPLES: usize = 12;

fn c7_reaction() -> Result<ReactionSpec> {
    make_power_logistic(C7_ALPHA, C7_GAMMA, C7_THETA0)
}

fn c7_monostable() -> Result<Outcome> {
    let f = c7_reaction()?;
    let target = C7_ALPHA / (2.0 * C7_S * (C7_ALPHA - 1.0));
    let cfg = SolverConfig {
        s: C7_S,
        dimension: 1,
        half_width: C7_HALF_WIDTH,
        points_per_axis: C7_POINTS,
        dt_initial: C7_DT,
        t_final: C7_T_FINAL,
        reaction: f.clone(),
        initial_condition: InitialCondition::Ball { theta: 0.5, r_inner: 50.0, r_outer: 100.0 },
        output_times: geomspace(1.0, C7_T_FINAL, C7_OUTPUTS),
        front_amplitude: C7_FRONT_AMPLITUDE,
    };
    let mut sim = LevelSetSeries::new(C7_LAMBDA, Geometry::Radial)?;
    let summary = run_observed(&cfg, &mut |t, u| sim.record(t, u))?;
    let fit = sim.fit_power(Side::Under, (0.1 * C7_T_FINAL, C7_T_FINAL))?;

    let mut barrier = build_monostable_sub(C7_THETA, &f, C7_S, 1)?;
    let t_theta = find_t_theta(&mut barrier, &f, default_tolerance(&f))?;
    let mut law = LevelSetSeries::new(C7_LAMBDA, Geometry::Radial)?;
    for j in linspace(C7_LAW_OCTAVES.0, C7_LAW_OCTAVES.1, C7_LAW_SAMPLES) {
        let t = t_theta * j.exp2();
        let x = barrier.level_position(t, C7_LAMBDA)?;
        law.push(t, Some(x), Some(x));
    }
    let t_lo = t_theta * C7_LAW_OCTAVES.0.exp2();
    let law_fit = law.fit_power(Side::Under, (t_lo, f64::INFINITY))?;
    let kb = barrier.kappa / barrier.beta;
    let ok = (fit.exponent - target).abs() <= C7_EXPONENT_TOL
        && (law_fit.exponent - kb).abs() <= C7_LAW_TOL
        && (kb - target).abs() <= 1e-12
        && summary.saturated_at.is_none();
    Ok(Outcome::check(
        ok,
        format!(
            "simulated p {:.4} (target {target}, tol {C7_EXPONENT_TOL}), x(T) = {:.3e}; barrier T_theta = {t_theta}, \
             level-law p {:.9} vs kappa/beta {kb} (tol {C7_LAW_TOL:e})",
            fit.exponent,
            sim.x_under.last().copied().flatten().unwrap_or(f64::NAN),
            law_fit.exponent
        ),
    ))
}

// ---------------------------------------------------------------- 8

const C8_S: f64 = 0.5;
const C8_POINTS: usize = 1 << 20;
const C8_HALF_WIDTH: f64 = 4e5;
const C8_DT: f64 = 0.02;
const C8_LAMBDA: f64 = 0.5;
const C8_REL_TOL: f64 = 0.2;
const C8_OUTPUTS: usize = 40;

fn kpp_rate(ic: InitialCondition, t_final: f64) -> Result<(f64, f64)> {
    let cfg = SolverConfig {
        s: C8_S,
        dimension: 1,
        half_width: C8_HALF_WIDTH,
        points_per_axis: C8_POINTS,
        dt_initial: C8_DT,
        t_final,
        reaction: make_kpp(1.0)?,
        initial_condition: ic,
        output_times: linspace(t_final / 20.0, t_final, C8_OUTPUTS),
        front_amplitude: 1.0,
    };
    let target = cfg.growth_law().err().expect("exponential law for KPP");
    let mut series = LevelSetSeries::new(C8_LAMBDA, cfg.initial_condition.geometry())?;
    let summary = run_observed(&cfg, &mut |t, u| series.record(t, u))?;
    if summary.saturated_at.is_some() {
        return Err(LabError::Saturation(format!("KPP run saturated at {:?}", summary.saturated_at)));
    }
    let fit = series.fit_exponential(Side::Over, default_window(t_final))?;
    Ok((fit.rate, target))
}

fn c8_kpp_rates() -> Result<Outcome> {
    let (front, front_target) = kpp_rate(InitialCondition::Front { theta: 1.0, r: 10.0 }, 10.0)?;
    let (ball, ball_target) =
        kpp_rate(InitialCondition::Ball { theta: 1.0, r_inner: 5.0, r_outer: 10.0 }, 20.0)?;
    let e1 = (front / front_target - 1.0).abs();
    let e2 = (ball / ball_target - 1.0).abs();
    Ok(Outcome::check(
        e1 <= C8_REL_TOL && e2 <= C8_REL_TOL,
        format!(
            "front rate {front:.4} vs {front_target} (rel {e1:.3}); localized {ball:.4} vs {ball_target} (rel {e2:.3}); tol {C8_REL_TOL}"
        ),
    ))
}

// ---------------------------------------------------------------- 9

const C9_PAIRS: usize = 50;
const C9_EXCESS_TOL: f64 = 1e-6;

fn random_reaction(rng: &mut ChaCha8Rng, i: usize) -> Result<ReactionSpec> {
    match i % 5 {
        0 => make_ignition(rng.gen_range(0.1..0.6), rng.gen_range(0.5..2.0)),
        1 => make_power_logistic([2.0, 3.0][rng.gen_range(0..2)], rng.gen_range(0.5..3.0), 0.5),
        2 => make_alpha_monostable(2.0, 1.0, 1.0, rng.gen_range(0.2..0.6)),
        3 => make_kpp(rng.gen_range(0.5..2.0)),
        _ => make_bistable(rng.gen_range(0.2..0.7), rng.gen_range(0.5..3.0)),
    }
}

/// Sum of a few smooth plateaus of random height, capped at 1.
fn random_datum(rng: &mut ChaCha8Rng, d: usize, half_width: f64, n: usize, reach: f64) -> Result<GridField> {
    let bumps: Vec<([f64; 2], f64, f64)> = (0..rng.gen_range(1..4))
        .map(|_| {
            let c = [rng.gen_range(-0.5..0.5) * reach, if d == 1 { 0.0 } else { rng.gen_range(-0.5..0.5) * reach }];
            (c, rng.gen_range(0.1..0.4) * reach, rng.gen_range(0.2..1.0))
        })
        .collect();
    GridField::from_fn(d, half_width, n, |p| {
        let v: f64 = bumps
            .iter()
            .map(|(c, r, h)| {
                let dist = (p[0] - c[0]).hypot(if d == 1 { 0.0 } else { p[1] - c[1] });
                h * (1.0 - smooth_step((dist - r) / (0.25 * reach) + 0.5))
            })
            .sum();
        v.min(1.0)
    })
}

fn c9_comparison_pairs() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst = (f64::NEG_INFINITY, 0usize);
    for i in 0..C9_PAIRS {
        let f = random_reaction(&mut rng, i)?;
        let d = if i % 5 == 4 { 2 } else { 1 };
        let s = rng.gen_range(0.25..0.9);
        let (half_width, n, reach, t_final) = if d == 1 { (256.0, 1024, 20.0, 2.0) } else { (64.0, 512, 8.0, 1.0) };
        let v0 = random_datum(&mut rng, d, half_width, n, reach)?;
        let scale = rng.gen_range(0.3..0.95);
        let w = random_datum(&mut rng, d, half_width, n, reach)?;
        let u0 = v0.with_values(v0.values().iter().zip(w.values()).map(|(a, b)| scale * a * b).collect())?;
        let dt = (0.5 / f.lipschitz).min(0.05);
        let cfg = SolverConfig {
            s,
            dimension: d,
            half_width,
            points_per_axis: n,
            dt_initial: dt,
            t_final,
            reaction: f,
            initial_condition: InitialCondition::Explicit { field: v0.clone(), geometry: Geometry::Radial },
            output_times: linspace(0.1 * t_final, t_final, 10),
            front_amplitude: 1.0,
        };
        cfg.validate()?;
        let report = comparison_test(&u0, &v0, &cfg)?;
        if report.max_excess > worst.0 {
            worst = (report.max_excess, i);
        }
    }
    Ok(Outcome::check(
        worst.0 <= C9_EXCESS_TOL,
        format!("{C9_PAIRS} pairs, max excess {:.2e} (pair {}), tol {C9_EXCESS_TOL:e}", worst.0, worst.1),
    ))
}

// ---------------------------------------------------------------- 10

const C10_SAMPLES: usize = 1000;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn c10_lemma81() -> Result<Outcome> {
    let f = c7_reaction()?;
    let d = 1;
    let beta = (d as f64 + 2.0 * C7_S) * (C7_ALPHA - 1.0);
    let nu = C7_ALPHA - 1.0;
    let theta1 = f.theta0.min(C7_THETA / 2.0);
    let consts = estimate_lemma81_constants(C7_S, beta, nu, theta1, d)?;
    let grid = SweepGrid::default();
    let (a_lo, a_hi) = (grid.a_values[0], grid.a_values[grid.a_values.len() - 1]);
    let (b_lo, b_hi) = (grid.b_values[0], grid.b_values[grid.b_values.len() - 1]);
    let top = consts.tau0 * theta1;
    let bottom = top * 10f64.powf(-grid.level_decades);
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst = (f64::INFINITY, 0.0, 0.0, 0.0);
    for _ in 0..C10_SAMPLES {
        let a = log_uniform(&mut rng, a_lo, a_hi);
        let b = log_uniform(&mut rng, b_lo, b_hi);
        let u = log_uniform(&mut rng, bottom, top);
        let prof = PowerProfile { a, b, beta, nu, theta1 };
        let slack = lemma81_slack(&consts, &prof, prof.radius_of(u), C7_S, d, 1.0)?;
        if slack < worst.0 {
            worst = (slack, a, b, u);
        }
    }
    Ok(Outcome::check(
        worst.0 >= 0.0,
        format!(
            "c = {:.4e}, C = {:.4e}, tau0 = {}; {C10_SAMPLES} resamples, min slack {:.3e} at a={:.2e} b={:.2e} u={:.2e}",
            consts.c_star_81, consts.big_c_star_81, consts.tau0, worst.0, worst.1, worst.2, worst.3
        ),
    ))
}

// ---------------------------------------------------------------- driver

type Criterion = (u32, &'static str, fn() -> Result<Outcome>);

const CRITERIA: [Criterion; 11] = [
    (1, "operator cross-validation", c1_operator_cross_validation),
    (2, "ramp closed form", c2_ramp_closed_form),
    (3, "sequence identities", c3_sequence_identities),
    (4, "supersolution certificates", c4_supersolution_certificates),
    (5, "bump construction and monotone runs", c5_bumps),
    (6, "ignition exponent sandwich", c6_ignition_sandwich),
    (7, "monostable exponent", c7_monostable),
    (8, "KPP rates", c8_kpp_rates),
    (9, "comparison principle pairs", c9_comparison_pairs),
    (10, "far-field constants", c10_lemma81),
    (11, "determinism", c11_determinism),
];

fn main() -> ExitCode {
    let only: Option<BTreeSet<u32>> = std::env::var("FRACLAB_ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|p| p.trim().parse().ok()).collect());
    let mut unexpected = 0;
    for (id, name, run) in CRITERIA {
        if only.as_ref().is_some_and(|set| !set.contains(&id)) {
            continue;
        }
        let clock = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(run)) {
            Ok(Ok(o)) => o,
            Ok(Err(e)) => Outcome { status: Status::Fail, detail: format!("error: {e}") },
            Err(_) => Outcome { status: Status::Fail, detail: "panicked".into() },
        };
        let label = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Known => "FAIL (KNOWN_UNATTAINABLE)",
        };
        if outcome.status == Status::Fail {
            unexpected += 1;
        }
        println!(
            "{label} [{id:>2}] {name} ({:.1} s): {}",
            clock.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

//! The five subcommands.

use std::path::{Path, PathBuf};

use fraclab::barriers_ignition::{build_bump_with, BumpSettings};
use fraclab::front_tracking::{
    default_window, fit_exponential, fit_power, FitRecord, Geometry, LevelSetSeries, Side,
};
use fraclab::residual_verifier::{certify, Mode, ResidualReport, SamplingPlan, Verdict};
use fraclab::solver::{run_observed, RunSummary};
use fraclab::LabError;
use rayon::prelude::*;
use serde::Serialize;

use crate::artifacts::{config_hash, series_file, series_plot, Writer};
use crate::config::{load_config, ExperimentConfig, FitModel, Kind};
use crate::{CliError, Flags};

const DEFAULT_LEVELS: [f64; 1] = [0.5];

/// A loaded config with the command-line overrides folded in.
pub struct Prepared {
    pub cfg: ExperimentConfig,
    /// Directory that relative paths in the config are resolved against.
    pub base: PathBuf,
    pub out: PathBuf,
}

pub fn prepare(path: &Path, flags: &Flags, expected: Kind) -> Result<Prepared, CliError> {
    let mut cfg = load_config(path)?;
    if cfg.kind != expected {
        return Err(CliError::Config(format!(
            "kind: this subcommand runs {expected:?} configs, got {:?}",
            cfg.kind
        )));
    }
    if let Some(seed) = flags.seed {
        cfg.seed = seed;
    }
    if let Some(q) = flags.quad_scale {
        if !(q.is_finite() && q > 0.0) {
            return Err(CliError::Config(format!("--quad-scale: must be positive, got {q}")));
        }
        match cfg.kind {
            Kind::Certify => {
                let mut plan = cfg.plan.clone().unwrap_or_default();
                plan.quad_scale *= q;
                cfg.plan = Some(plan);
            }
            Kind::Bump => {
                if let Some(bump) = cfg.bump.as_mut() {
                    let mut set = bump.settings.clone().unwrap_or_else(|| BumpSettings::for_dimension(bump.dimension));
                    set.quad_scale *= q;
                    bump.settings = Some(set);
                }
            }
            _ => {}
        }
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = match (&flags.out, &cfg.output_dir) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => base.join(dir),
        (None, None) => return Err(CliError::Config("output_dir: not set and no --out given".into())),
    };
    cfg.output_dir = Some(out.clone());
    Ok(Prepared { cfg, base, out })
}

fn reaction(p: &Prepared) -> Result<fraclab::reactions::ReactionSpec, CliError> {
    let choice = p.cfg.reaction.as_ref().ok_or_else(|| CliError::Config("reaction: missing".into()))?;
    choice.build().map_err(|e| CliError::Config(format!("reaction: {e}")))
}

#[derive(Serialize)]
struct FlagEcho {
    seed: Option<u64>,
    quad_scale: Option<f64>,
}

impl From<&Flags> for FlagEcho {
    fn from(f: &Flags) -> Self {
        Self { seed: f.seed, quad_scale: f.quad_scale }
    }
}

#[derive(Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
enum GrowthLaw {
    Power { exponent: f64 },
    Exponential { rate: f64 },
}

#[derive(Serialize)]
struct SimulateManifest<'a> {
    /// The hashed config, so without `output_dir`.
    config: ExperimentConfig,
    flags: FlagEcho,
    growth_law: GrowthLaw,
    summary: &'a RunSummary,
    fits: Vec<FitRecord>,
    fit_failures: Vec<String>,
    series: Vec<String>,
    snapshots: Vec<String>,
}

#[derive(Serialize)]
struct SnapshotHeader {
    t: f64,
    dimension: usize,
    half_width: f64,
    points_per_axis: usize,
}

pub fn simulate(p: &Prepared, flags: &Flags) -> Result<String, CliError> {
    let section = p.cfg.solver.as_ref().ok_or_else(|| CliError::Config("solver: missing".into()))?;
    let solver = section.build(&p.base)?;
    solver.validate()?;
    let geometry: Geometry = solver.initial_condition.geometry();
    let levels: Vec<f64> = if p.cfg.tracking.is_empty() { DEFAULT_LEVELS.to_vec() } else { p.cfg.tracking.clone() };
    let mut series = levels
        .iter()
        .map(|&l| LevelSetSeries::new(l, geometry).map_err(|e| CliError::Config(format!("tracking: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;

    let mut w = Writer::create(&p.out, config_hash(&p.cfg))?;
    let mut snapshots = Vec::new();
    let mut snapshot_error = None;
    let summary = run_observed(&solver, &mut |t, u| {
        for s in series.iter_mut() {
            s.record(t, u);
        }
        if section.snapshots && snapshot_error.is_none() {
            let name = format!("snapshot_{:04}.bin", snapshots.len());
            let header = SnapshotHeader {
                t,
                dimension: u.dimension(),
                half_width: u.half_width(),
                points_per_axis: u.points_per_axis(),
            };
            match w.snapshot(&name, &header, u.values()) {
                Ok(()) => snapshots.push(name),
                Err(e) => snapshot_error = Some(e),
            }
        }
    })?;
    if let Some(e) = snapshot_error {
        return Err(e);
    }

    let window = default_window(summary.final_time);
    let law = solver.growth_law();
    let mut fits = Vec::new();
    let mut fit_failures = Vec::new();
    for s in &series {
        for side in [Side::Under, Side::Over] {
            let fitted = match law {
                Ok(_) => s.fit_power(side, window).map(|f| f.exponent),
                Err(_) => s.fit_exponential(side, window).map(|f| f.rate),
            };
            let target = law.unwrap_or_else(|rate| rate);
            match fitted {
                Ok(exponent) => fits.push(FitRecord {
                    lambda: s.lambda,
                    side,
                    window,
                    exponent,
                    target_exponent: target,
                    abs_error: (exponent - target).abs(),
                }),
                Err(e) => fit_failures.push(format!("lambda {} {side:?}: {e}", s.lambda)),
            }
        }
    }

    let mut files = Vec::new();
    for s in &series {
        let name = series_file(s.lambda);
        w.csv(&name, &s.to_csv())?;
        files.push((s.lambda, name));
    }
    w.text("plot.gp", &series_plot(&files, "level positions"))?;
    let manifest = SimulateManifest {
        config: ExperimentConfig { output_dir: None, ..p.cfg.clone() },
        flags: flags.into(),
        growth_law: match law {
            Ok(exponent) => GrowthLaw::Power { exponent },
            Err(rate) => GrowthLaw::Exponential { rate },
        },
        summary: &summary,
        fits,
        fit_failures,
        series: files.into_iter().map(|(_, n)| n).collect(),
        snapshots,
    };
    w.json("manifest.json", "run", &manifest)?;

    if let Some(t) = summary.saturated_at {
        return Err(LabError::Saturation(format!(
            "front reached the domain guard at t = {t}; partial artifacts in {}",
            p.out.display()
        ))
        .into());
    }
    let mut msg = format!("simulated to t = {} in {} steps", summary.final_time, summary.steps);
    for f in &manifest.fits {
        msg.push_str(&format!(
            "\nlambda {} {:?}: exponent {:.4} (target {:.4})",
            f.lambda, f.side, f.exponent, f.target_exponent
        ));
    }
    Ok(msg)
}

pub fn certify_cmd(p: &Prepared) -> Result<String, CliError> {
    let f = reaction(p)?;
    if p.cfg.barriers.is_empty() {
        return Err(CliError::Config("barriers: at least one barrier is required".into()));
    }
    let plan: SamplingPlan = p.cfg.plan.clone().unwrap_or_default();
    let mut w = Writer::create(&p.out, config_hash(&p.cfg))?;
    let mut lines = Vec::new();
    let mut mismatches = Vec::new();
    for (i, req) in p.cfg.barriers.iter().enumerate() {
        let barrier = req.barrier.load(&p.base, &f)?;
        w.json(&format!("barrier_{i}.json"), "barrier", &barrier)?;
        let report: ResidualReport = certify(&barrier, &f, req.mode, &plan)?;
        w.json(&format!("report_{i}.json"), "report", &report)?;
        w.csv(&format!("report_{i}.csv"), &report.to_csv())?;
        let wanted = match req.mode {
            Mode::Super => Verdict::CertifiedSuper,
            Mode::Sub => Verdict::CertifiedSub,
        };
        let line = format!(
            "{}: {:?} (min residual {:e}, max residual {:e}, worst at t = {}, x = {})",
            report.barrier_id,
            report.verdict,
            report.min_residual,
            report.max_residual,
            report.worst_point.0,
            report.worst_point.1
        );
        if report.verdict != wanted {
            mismatches.push(line.clone());
        }
        lines.push(line);
    }
    if !mismatches.is_empty() {
        return Err(CliError::Certification(mismatches.join("; ")));
    }
    Ok(lines.join("\n"))
}

pub fn bump(p: &Prepared) -> Result<String, CliError> {
    let f = reaction(p)?;
    let req = p.cfg.bump.as_ref().ok_or_else(|| CliError::Config("bump: missing".into()))?;
    let settings = req.settings.clone().unwrap_or_else(|| BumpSettings::for_dimension(req.dimension));
    let profile = build_bump_with(req.theta, req.s, &f, req.dimension, &settings)?;
    let mut w = Writer::create(&p.out, config_hash(&p.cfg))?;
    w.json("bump.json", "bump", &profile)?;
    Ok(format!(
        "bump certified: margin {:e}, shift {} after {} doublings, support end {}",
        profile.margin, profile.shift, profile.shift_doublings, profile.support_end
    ))
}

#[derive(Serialize)]
struct SweepEntry {
    config: PathBuf,
    dir: PathBuf,
    exit_code: u8,
    message: String,
}

pub fn sweep(p: &Prepared, flags: &Flags) -> Result<String, CliError> {
    if p.cfg.runs.is_empty() {
        return Err(CliError::Config("runs: at least one run is required".into()));
    }
    let run_flags = Flags { config: PathBuf::new(), out: None, workers: 1, ..flags.clone() };
    // Every run is parsed up front so a bad file stops the sweep before any work.
    let runs = p
        .cfg
        .runs
        .iter()
        .enumerate()
        .map(|(i, rel)| {
            let path = p.base.join(rel);
            let out = p.out.join(format!("run_{i:03}"));
            let flags = Flags { out: Some(out), ..run_flags.clone() };
            prepare(&path, &flags, Kind::Simulate).map(|prep| (path, prep, flags))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(flags.workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("--workers: {e}")))?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        runs.par_iter()
            .map(|(path, prep, flags)| {
                let (exit_code, message) = match simulate(prep, flags) {
                    Ok(msg) => (0, msg),
                    Err(e) => (e.exit_code(), e.to_string()),
                };
                SweepEntry { config: path.clone(), dir: prep.out.clone(), exit_code, message }
            })
            .collect()
    });
    let mut w = Writer::create(&p.out, config_hash(&p.cfg))?;
    w.json("sweep.json", "runs", &entries)?;
    let failed: Vec<&SweepEntry> = entries.iter().filter(|e| e.exit_code != 0).collect();
    match failed.first() {
        None => Ok(format!("{} runs completed", entries.len())),
        Some(first) => Err(CliError::Sweep {
            code: first.exit_code,
            message: format!(
                "{} of {} runs failed; first: {}: {}",
                failed.len(),
                entries.len(),
                first.config.display(),
                first.message
            ),
        }),
    }
}

/// Parses a `t,x_under,x_over` series, skipping `#` comment lines.
pub fn read_series(text: &str) -> Result<(Vec<f64>, Vec<Option<f64>>, Vec<Option<f64>>), CliError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == "t,x_under,x_over" => {}
        _ => return Err(CliError::Config("series: expected header t,x_under,x_over".into())),
    }
    let (mut t, mut under, mut over) = (Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines {
        let bad = |what: &str| CliError::Config(format!("series line {}: {what}", n + 1));
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(bad("expected three columns"));
        }
        let cell = |c: &str| -> Result<Option<f64>, CliError> {
            if c.is_empty() {
                Ok(None)
            } else {
                c.parse().map(Some).map_err(|_| bad(&format!("not a number: {c}")))
            }
        };
        t.push(cell(cells[0])?.ok_or_else(|| bad("missing time"))?);
        under.push(cell(cells[1])?);
        over.push(cell(cells[2])?);
    }
    Ok((t, under, over))
}

#[derive(Serialize)]
struct FitOutput {
    model: FitModel,
    side: Side,
    window: (f64, f64),
    exponent: f64,
    amplitude: f64,
    max_log_residual: f64,
    samples: usize,
    record: Option<FitRecord>,
}

pub fn fit(p: &Prepared) -> Result<String, CliError> {
    let req = p.cfg.fit.as_ref().ok_or_else(|| CliError::Config("fit: missing".into()))?;
    let path = p.base.join(&req.series);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("fit.series {}: {e}", path.display())))?;
    let (times, under, over) = read_series(&text)?;
    let t_last = times.last().copied().ok_or_else(|| CliError::Config("series: no rows".into()))?;
    let window = req.window.unwrap_or_else(|| default_window(t_last));
    let column = match req.side {
        Side::Under => &under,
        Side::Over => &over,
    };
    let (t, x): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(column)
        .filter(|(&t, _)| t >= window.0 && t <= window.1)
        .filter_map(|(&t, v)| v.map(|x| (t, x)))
        .unzip();
    let (exponent, amplitude, residual, samples) = match req.model {
        FitModel::Power => {
            let f = fit_power(&t, &x)?;
            (f.exponent, f.amplitude, f.residual, f.samples)
        }
        FitModel::Exponential => {
            let f = fit_exponential(&t, &x)?;
            (f.rate, f.amplitude, f.residual, f.samples)
        }
    };
    let record = req.target.map(|target| FitRecord {
        lambda: req.lambda,
        side: req.side,
        window,
        exponent,
        target_exponent: target,
        abs_error: (exponent - target).abs(),
    });
    let out = FitOutput {
        model: req.model,
        side: req.side,
        window,
        exponent,
        amplitude,
        max_log_residual: residual,
        samples,
        record,
    };
    let mut w = Writer::create(&p.out, config_hash(&p.cfg))?;
    w.json("fit.json", "fit", &out)?;
    let col = if req.side == Side::Under { 2 } else { 3 };
    let curve = match req.model {
        FitModel::Power => format!("{amplitude:e} * x**{exponent:e}"),
        FitModel::Exponential => format!("{amplitude:e} * exp({exponent:e} * x)"),
    };
    let script = format!(
        "set datafile separator ','\nset datafile missing ''\nset logscale y\nset xlabel 't'\n\
         set arrow from {a},graph 0 to {a},graph 1 nohead dt 2\nset arrow from {b},graph 0 to {b},graph 1 nohead dt 2\n\
         plot '{file}' using 1:{col} skip 1 with points title 'data', {curve} title 'fit'\n",
        a = window.0,
        b = window.1,
        file = path.display(),
    );
    w.text("fit.gp", &script)?;
    Ok(match out.record {
        Some(r) => format!("fitted {exponent:.6} on {samples} samples (target {}, error {:e})", r.target_exponent, r.abs_error),
        None => format!("fitted {exponent:.6} on {samples} samples"),
    })
}

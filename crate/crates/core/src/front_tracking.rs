//! Level-set positions of grid fields and power/exponential fits of their
//! growth.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::fractional_operator::GridField;

/// Minimum number of samples a fit window must hold.
pub const MIN_FIT_SAMPLES: usize = 8;

/// How positions are measured.
///
/// `Front` scans along the first coordinate. On the periodic box a
/// front-like datum also has a mirrored front entering from the right
/// boundary, so scanning stops at `x = half_width / 2`. In two dimensions
/// the second coordinate is reduced by min (for `x_under`) and max (for
/// `x_over`).
///
/// `Radial` uses `|x|`, reducing over shells one cell wide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Front,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Under,
    Over,
}

/// Reduced one-dimensional profile: positions with the min and max of the
/// field over the corresponding slice or shell.
struct Reduced {
    positions: Vec<f64>,
    lows: Vec<f64>,
    highs: Vec<f64>,
}

fn reduce(field: &GridField, geometry: Geometry) -> Reduced {
    let n = field.points_per_axis();
    let h = field.spacing();
    let v = field.values();
    match (geometry, field.dimension()) {
        (Geometry::Front, d) => {
            let last = 3 * n / 4;
            let positions = (0..=last).map(|j| field.coordinate(j)).collect();
            let (lows, highs) = if d == 1 {
                (v[..=last].to_vec(), v[..=last].to_vec())
            } else {
                (0..=last)
                    .map(|i| {
                        let row = &v[i * n..(i + 1) * n];
                        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
                        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        (lo, hi)
                    })
                    .unzip()
            };
            Reduced { positions, lows, highs }
        }
        (Geometry::Radial, d) => {
            let shells = n / 2 + 1;
            let mut lows = vec![f64::INFINITY; shells];
            let mut highs = vec![f64::NEG_INFINITY; shells];
            let mut put = |r: f64, u: f64| {
                let k = (r / h + 0.5).floor() as usize;
                if k < shells {
                    lows[k] = lows[k].min(u);
                    highs[k] = highs[k].max(u);
                }
            };
            if d == 1 {
                for (j, &u) in v.iter().enumerate() {
                    put(field.coordinate(j).abs(), u);
                }
            } else {
                for (k, &u) in v.iter().enumerate() {
                    let p = field.point(k);
                    put(p[0].hypot(p[1]), u);
                }
            }
            let positions = (0..shells).map(|k| k as f64 * h).collect();
            Reduced { positions, lows, highs }
        }
    }
}

/// `(x_under, x_over)` of one field at level `lambda`, linearly interpolated
/// between straddling nodes (or shells). `None` when the level is never
/// reached on the scanned range.
pub fn level_positions(field: &GridField, lambda: f64, geometry: Geometry) -> (Option<f64>, Option<f64>) {
    let r = reduce(field, geometry);
    let x = &r.positions;
    let last = x.len() - 1;
    let under = r.lows.iter().position(|&u| u <= lambda).map(|j| {
        if j == 0 {
            x[0]
        } else {
            let (a, b) = (r.lows[j - 1], r.lows[j]);
            x[j - 1] + (x[j] - x[j - 1]) * (a - lambda) / (a - b)
        }
    });
    let over = r.highs.iter().rposition(|&u| u >= lambda).map(|j| {
        if j == last {
            x[last]
        } else {
            let (a, b) = (r.highs[j], r.highs[j + 1]);
            x[j] + (x[j + 1] - x[j]) * (a - lambda) / (a - b)
        }
    });
    (under, over)
}

/// Level-set positions over time for one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetSeries {
    pub lambda: f64,
    pub geometry: Geometry,
    pub times: Vec<f64>,
    pub x_under: Vec<Option<f64>>,
    pub x_over: Vec<Option<f64>>,
}

impl LevelSetSeries {
    pub fn new(lambda: f64, geometry: Geometry) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(contract(format!("level must lie in (0, 1), got {lambda}")));
        }
        Ok(Self { lambda, geometry, times: Vec::new(), x_under: Vec::new(), x_over: Vec::new() })
    }

    /// Appends the positions of `field` at time `t`.
    pub fn record(&mut self, t: f64, field: &GridField) {
        let (under, over) = level_positions(field, self.lambda, self.geometry);
        self.push(t, under, over);
    }

    pub fn push(&mut self, t: f64, under: Option<f64>, over: Option<f64>) {
        self.times.push(t);
        self.x_under.push(under);
        self.x_over.push(over);
    }

    pub fn side(&self, side: Side) -> &[Option<f64>] {
        match side {
            Side::Under => &self.x_under,
            Side::Over => &self.x_over,
        }
    }

    /// CSV with header `t,x_under,x_over`; absent entries are empty.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        let mut out = String::from("t,x_under,x_over\n");
        for i in 0..self.times.len() {
            out.push_str(&format!("{:.12e},{},{}\n", self.times[i], cell(self.x_under[i]), cell(self.x_over[i])));
        }
        out
    }

    pub fn fit_power(&self, side: Side, window: (f64, f64)) -> Result<PowerFit> {
        let (t, x) = windowed(&self.times, self.side(side), window)?;
        fit_power(&t, &x)
    }

    pub fn fit_exponential(&self, side: Side, window: (f64, f64)) -> Result<ExponentialFit> {
        let (t, x) = windowed(&self.times, self.side(side), window)?;
        fit_exponential(&t, &x)
    }
}

/// Tracks every field of a stored trajectory.
pub fn track(times: &[f64], fields: &[GridField], lambda: f64, geometry: Geometry) -> Result<LevelSetSeries> {
    if times.len() != fields.len() {
        return Err(contract("times and fields differ in length"));
    }
    let mut series = LevelSetSeries::new(lambda, geometry)?;
    for (&t, field) in times.iter().zip(fields) {
        series.record(t, field);
    }
    Ok(series)
}

/// Fit window for asymptotic statements: the last decade of simulated time,
/// which also drops the first 10% of the run.
pub fn default_window(t_final: f64) -> (f64, f64) {
    (0.1 * t_final, t_final)
}

fn windowed(times: &[f64], values: &[Option<f64>], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok(times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= window.0 && t <= window.1)
        .filter_map(|(&t, v)| v.map(|x| (t, x)))
        .unzip())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub amplitude: f64,
    /// Largest absolute residual of the log-log line.
    pub residual: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub rate: f64,
    pub amplitude: f64,
    /// Largest absolute residual of the line through `(t, ln x)`.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares line; returns slope, intercept and max residual.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).abs()).fold(0.0, f64::max);
    (slope, intercept, res)
}

fn check_samples(t: &[f64], x: &[f64]) -> Result<()> {
    if t.len() != x.len() {
        return Err(contract("times and positions differ in length"));
    }
    if t.len() < MIN_FIT_SAMPLES {
        return Err(contract(format!("fit needs at least {MIN_FIT_SAMPLES} samples, got {}", t.len())));
    }
    if let Some(i) = x.iter().position(|&v| !(v > 0.0)) {
        return Err(contract(format!("nonpositive position {} at t = {}", x[i], t[i])));
    }
    Ok(())
}

/// Fits `x = A t^p` by least squares in `(ln t, ln x)`.
pub fn fit_power(t: &[f64], x: &[f64]) -> Result<PowerFit> {
    check_samples(t, x)?;
    if let Some(&bad) = t.iter().find(|&&v| !(v > 0.0)) {
        return Err(contract(format!("nonpositive time {bad} in a power fit")));
    }
    let lt: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let (p, c, residual) = line_fit(&lt, &lx);
    Ok(PowerFit { exponent: p, amplitude: c.exp(), residual, samples: t.len() })
}

/// Fits `x = A e^{σ t}` by least squares in `(t, ln x)`.
pub fn fit_exponential(t: &[f64], x: &[f64]) -> Result<ExponentialFit> {
    check_samples(t, x)?;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let (rate, c, residual) = line_fit(t, &lx);
    Ok(ExponentialFit { rate, amplitude: c.exp(), residual, samples: t.len() })
}

/// True iff the sub barrier's `x_under` stays at or below the simulation's
/// and the simulation's `x_over` at or below the super barrier's, at every
/// common time where both sides are present.
pub fn sandwich_check(sub: &LevelSetSeries, sim: &LevelSetSeries, sup: &LevelSetSeries) -> Result<bool> {
    let same = |a: &[f64], b: &[f64]| {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0))
    };
    if !same(&sub.times, &sim.times) || !same(&sup.times, &sim.times) {
        return Err(contract("sandwich series must share one time grid"));
    }
    let below = |a: &[Option<f64>], b: &[Option<f64>]| {
        a.iter().zip(b).all(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => x <= y,
            _ => true,
        })
    };
    Ok(below(&sub.x_under, &sim.x_under) && below(&sim.x_over, &sup.x_over))
}

/// Fit summary appended to run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub lambda: f64,
    pub side: Side,
    pub window: (f64, f64),
    pub exponent: f64,
    pub target_exponent: f64,
    pub abs_error: f64,
}

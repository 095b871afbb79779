//! Smooth step and mollified ramp used by the bump construction.

use std::sync::OnceLock;

use crate::fractional_operator::gauss_legendre;

/// `C^∞` step: 0 for `τ ≤ 0`, 1 for `τ ≥ 1`, `e^{-1/τ} / (e^{-1/τ} + e^{-1/(1-τ)})` between.
pub fn smooth_step(tau: f64) -> f64 {
    if tau <= 0.0 {
        0.0
    } else if tau >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 + (1.0 / tau - 1.0 / (1.0 - tau)).exp())
    }
}

pub fn smooth_step_derivative(tau: f64) -> f64 {
    if tau <= 0.0 || tau >= 1.0 {
        return 0.0;
    }
    let e = 1.0 / tau - 1.0 / (1.0 - tau);
    if e.abs() > 700.0 {
        return 0.0;
    }
    let sv = 1.0 / (1.0 + e.exp());
    sv * (1.0 - sv) * (1.0 / (tau * tau) + 1.0 / ((1.0 - tau) * (1.0 - tau)))
}

const TABLE_CELLS: usize = 4096;

struct Table {
    norm: f64,
    cdf: Vec<f64>,
    moment: Vec<f64>,
}

fn raw_kernel(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - y * y)).exp()
    }
}

fn table() -> &'static Table {
    static T: OnceLock<Table> = OnceLock::new();
    T.get_or_init(|| {
        let (xs, ws) = gauss_legendre(12);
        let h = 2.0 / TABLE_CELLS as f64;
        let mut cdf = vec![0.0; TABLE_CELLS + 1];
        let mut moment = vec![0.0; TABLE_CELLS + 1];
        for i in 0..TABLE_CELLS {
            let a = -1.0 + i as f64 * h;
            let (mut c, mut m) = (0.0, 0.0);
            for (x, w) in xs.iter().zip(&ws) {
                let y = a + 0.5 * h * (x + 1.0);
                let k = raw_kernel(y);
                c += w * k;
                m += w * y * k;
            }
            cdf[i + 1] = cdf[i] + 0.5 * h * c;
            moment[i + 1] = moment[i] + 0.5 * h * m;
        }
        let norm = 1.0 / cdf[TABLE_CELLS];
        for v in cdf.iter_mut().chain(moment.iter_mut()) {
            *v *= norm;
        }
        Table { norm, cdf, moment }
    })
}

/// Normalized kernel on `[-1, 1]`.
pub fn kernel(y: f64) -> f64 {
    table().norm * raw_kernel(y)
}

fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
}

fn cell(z: f64) -> (usize, f64, f64) {
    let h = 2.0 / TABLE_CELLS as f64;
    let u = (z + 1.0) / h;
    let i = (u.floor() as usize).min(TABLE_CELLS - 1);
    (i, u - i as f64, h)
}

/// `∫_{-1}^{z} kernel`.
pub fn kernel_cdf(z: f64) -> f64 {
    if z <= -1.0 {
        return 0.0;
    }
    if z >= 1.0 {
        return 1.0;
    }
    let tb = table();
    let (i, t, h) = cell(z);
    let (a, b) = (-1.0 + i as f64 * h, -1.0 + (i + 1) as f64 * h);
    hermite(tb.cdf[i], tb.cdf[i + 1], kernel(a), kernel(b), h, t)
}

fn kernel_moment(z: f64) -> f64 {
    let tb = table();
    let (i, t, h) = cell(z);
    let (a, b) = (-1.0 + i as f64 * h, -1.0 + (i + 1) as f64 * h);
    hermite(tb.moment[i], tb.moment[i + 1], a * kernel(a), b * kernel(b), h, t)
}

/// `max(z, 0)` convolved with the unit kernel: `∫ (z-y)_+ kernel(y) dy`.
pub fn smoothed_ramp(z: f64) -> f64 {
    if z <= -1.0 {
        0.0
    } else if z >= 1.0 {
        z
    } else {
        z * kernel_cdf(z) - kernel_moment(z)
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{contract, LabError, Result};

/// Exponents `α_n^k` and weights `β_n^k = 2^{-α_n^k}` for `n = 0..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequences {
    pub k: usize,
    pub s: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

/// Relative slack allowed for floating-point evaluation of exponent identities.
const EXPONENT_TOL: f64 = 1e-12;

/// `α_n^k = Σ_{j=1}^{n} (k-n+j)(2s)^{j-1}`, evaluated directly.
fn alpha_sum(k: usize, n: usize, s: f64) -> f64 {
    let q = 2.0 * s;
    (1..=n).map(|j| (k - n + j) as f64 * q.powi(j as i32 - 1)).sum()
}

pub fn build_sequences(k: usize, s: f64) -> Result<Sequences> {
    if k < 1 {
        return Err(contract("k must be at least 1"));
    }
    if !(s > 0.0 && s < 0.5) {
        return Err(contract(format!("s must lie in (0, 1/2), got {s}")));
    }
    let alphas: Vec<f64> = (0..=k).map(|n| alpha_sum(k, n, s)).collect();
    let betas = alphas.iter().map(|a| (-a).exp2()).collect();
    let seq = Sequences { k, s, alphas, betas };
    seq.check()?;
    Ok(seq)
}

impl Sequences {
    /// Largest violation of the stored identities, in log2 units.
    pub fn check(&self) -> Result<()> {
        let (k, s) = (self.k, self.s);
        let q = 2.0 * s;
        let fail = |what: &str, v: f64| Err(LabError::Internal(format!("{what} violated by {v:e} (k={k}, s={s})")));
        if self.alphas[0] != 0.0 || self.betas[0] != 1.0 {
            return fail("empty-sum convention", self.alphas[0]);
        }
        for n in 0..=k {
            let d = (self.betas[n].log2() + self.alphas[n]).abs();
            if d > EXPONENT_TOL * self.alphas[n].max(1.0) {
                return fail("beta = 2^-alpha", d);
            }
        }
        let bound = 1.0 / ((1.0 - q) * (1.0 - q));
        if self.alphas[k] > bound * (1.0 + EXPONENT_TOL) {
            return fail("lower bound on beta_k", self.alphas[k] - bound);
        }
        let sum: f64 = self.betas[1..].iter().sum();
        if sum > 1.0 + EXPONENT_TOL {
            return fail("sum of betas", sum - 1.0);
        }
        for n in 1..=k {
            // log2 of 2^{-k+n-1} β_{n-1}^{2s}
            let rhs = -(k as f64) + n as f64 - 1.0 - q * self.alphas[n - 1];
            let d = (-self.alphas[n] - rhs).abs();
            if d > EXPONENT_TOL * self.alphas[n].max(1.0) {
                return fail("recurrence", d);
            }
        }
        Ok(())
    }

    /// `log2` of the window `(2^{k/(1-2s)}, 2^{(2s)^{-k}})`.
    pub fn window_log2(&self) -> (f64, f64) {
        window_log2(self.k, self.s)
    }

    /// Slack of `β_n t^{1/(2s)-(2s)^n} ≥ 2 β_{n-1} t^{1/(2s)-(2s)^{n-1}}` in
    /// log2 units at `t = 2^{log2_t}` (nonnegative when the inequality holds).
    pub fn gap_inequality_slack(&self, n: usize, log2_t: f64) -> f64 {
        let q = 2.0 * self.s;
        let p = |m: usize| 1.0 / q - q.powi(m as i32);
        let lhs = -self.alphas[n] + p(n) * log2_t;
        let rhs = 1.0 - self.alphas[n - 1] + p(n - 1) * log2_t;
        lhs - rhs
    }
}

pub fn window_log2(k: usize, s: f64) -> (f64, f64) {
    let q = 2.0 * s;
    (k as f64 / (1.0 - q), q.powi(-(k as i32)))
}

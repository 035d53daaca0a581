//! Threshold and block count from large-deviation estimates.
//!
//! With `X = log2(D^good(H) / D^bad(H))`, `T_cand` over `M` blocks is the
//! mean of `M` draws of `X`. For a tilt `s`,
//!
//! ```text
//! P[mean > mu'(s)] ~ exp(M (mu(s) - s mu'(s))) / (|s| sqrt(2 pi M mu''(s)))
//! ```
//!
//! where `mu(s) = ln E[exp(s X)]`. `A` uses the bad distribution with
//! `s > 0`, `B` the good one with `s < 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::histogram::{log_ratios, EntropyHistogram};
use super::EntropyError;

/// Largest block count the solver will consider.
pub const MAX_BLOCKS: usize = 1 << 40;

/// Log moment generating function of a finite distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogMgf {
    values: Vec<f64>,
    log_probs: Vec<f64>,
}

impl LogMgf {
    pub fn new(values: Vec<f64>, probs: &[f64]) -> Self {
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        Self { values, log_probs }
    }

    /// `(mu, mu', mu'')` at `s`.
    pub fn eval(&self, s: f64) -> (f64, f64, f64) {
        let e: Vec<f64> = self.values.iter().zip(&self.log_probs).map(|(x, lp)| lp + s * x).collect();
        let top = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = e.iter().map(|v| (v - top).exp()).collect();
        let z: f64 = weights.iter().sum();
        let m1 = weights.iter().zip(&self.values).map(|(w, x)| w * x).sum::<f64>() / z;
        let m2 = weights.iter().zip(&self.values).map(|(w, x)| w * (x - m1).powi(2)).sum::<f64>() / z;
        (top + z.ln(), m1, m2)
    }

    pub fn mu(&self, s: f64) -> f64 {
        self.eval(s).0
    }

    pub fn mu1(&self, s: f64) -> f64 {
        self.eval(s).1
    }

    pub fn mu2(&self, s: f64) -> f64 {
        self.eval(s).2
    }

    pub fn mean(&self) -> f64 {
        self.mu1(0.0)
    }

    fn support(&self) -> (f64, f64) {
        let live = self.values.iter().zip(&self.log_probs).filter(|(_, lp)| lp.is_finite()).map(|(x, _)| *x);
        live.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    }

    /// Tilt with `mu'(s) = t`; `mu'` is increasing so this is a bisection.
    pub fn solve_tilt(&self, t: f64) -> Option<f64> {
        let (lo_x, hi_x) = self.support();
        if !(t > lo_x && t < hi_x) {
            return None;
        }
        let mean = self.mean();
        if t == mean {
            return Some(0.0);
        }
        let dir = if t > mean { 1.0 } else { -1.0 };
        let mut far = dir;
        while (self.mu1(far) - t) * dir < 0.0 {
            far *= 2.0;
            if far.abs() > 1e12 {
                return None;
            }
        }
        let (mut a, mut b) = (0.0, far);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if (self.mu1(mid) - t) * dir < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            if a == mid && b == mid {
                break;
            }
        }
        Some(0.5 * (a + b))
    }

    /// `ln` of the large-deviation tail estimate at tilt `s` over `m` samples.
    pub fn log_tail(&self, s: f64, m: f64) -> f64 {
        let (mu, mu1, mu2) = self.eval(s);
        m * (mu - s * mu1) - s.abs().ln() - 0.5 * (2.0 * PI * m * mu2).ln()
    }
}

/// Operating point of the test for a given block count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub blocks: usize,
    pub threshold: f64,
    pub s_alpha: f64,
    pub s_beta: f64,
    /// Estimated probability of keeping a bad candidate.
    pub alpha: f64,
    /// Estimated probability of discarding the good one.
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSolution {
    pub threshold: f64,
    pub m_min: usize,
    pub s_alpha: f64,
    pub s_beta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t_good: f64,
    pub t_bad: f64,
    pub good: LogMgf,
    pub bad: LogMgf,
}

impl ThresholdSolution {
    pub fn mu_good(&self, s: f64) -> (f64, f64, f64) {
        self.good.eval(s)
    }

    pub fn mu_bad(&self, s: f64) -> (f64, f64, f64) {
        self.bad.eval(s)
    }

    /// `A(s, M)`.
    pub fn a(&self, s: f64, m: usize) -> f64 {
        self.bad.log_tail(s, m as f64).exp()
    }

    /// `B(s, M)`.
    pub fn b(&self, s: f64, m: usize) -> f64 {
        self.good.log_tail(s, m as f64).exp()
    }
}

/// Both log-MGFs together with the target rates.
#[derive(Clone, Debug)]
pub struct Distinguisher {
    pub good: LogMgf,
    pub bad: LogMgf,
    pub t_good: f64,
    pub t_bad: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Distinguisher {
    pub fn new(good: &EntropyHistogram, bad: &EntropyHistogram, alpha: f64, beta: f64) -> Result<Self, EntropyError> {
        if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) {
            return Err(EntropyError::InvalidParameter(format!("alpha and beta must lie in (0, 1), got {alpha}, {beta}")));
        }
        let x = log_ratios(good, bad)?;
        let good = LogMgf::new(x.clone(), good.masses());
        let bad = LogMgf::new(x, bad.masses());
        let (t_good, t_bad) = (good.mean(), bad.mean());
        if !(t_good - t_bad > 1e-12) {
            return Err(EntropyError::IdenticalDistributions);
        }
        Ok(Self { good, bad, t_good, t_bad, alpha, beta })
    }

    /// `(ln(A/alpha), ln(B/beta), s_alpha, s_beta)` at threshold `t`.
    fn excess(&self, t: f64, m: f64) -> Option<(f64, f64, f64, f64)> {
        let sa = self.bad.solve_tilt(t)?;
        let sb = self.good.solve_tilt(t)?;
        if !(sa > 0.0 && sb < 0.0) {
            return None;
        }
        Some((self.bad.log_tail(sa, m) - self.alpha.ln(), self.good.log_tail(sb, m) - self.beta.ln(), sa, sb))
    }

    /// Threshold balancing `A/alpha` against `B/beta` at `m` blocks.
    pub fn operating_point(&self, m: usize) -> Result<OperatingPoint, EntropyError> {
        if m == 0 {
            return Err(EntropyError::InvalidParameter("need at least one block".into()));
        }
        let mf = m as f64;
        let span = self.t_good - self.t_bad;
        let (mut lo, mut hi) = (self.t_bad + 1e-9 * span, self.t_good - 1e-9 * span);
        // f(t) = ln(A/alpha) - ln(B/beta) decreases from +inf to -inf on (T_bad, T_good)
        let f = |t: f64| self.excess(t, mf).map(|(a, b, _, _)| a - b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            match f(mid) {
                Some(v) if v > 0.0 => lo = mid,
                Some(_) => hi = mid,
                None => break,
            }
            if hi - lo <= 1e-14 * span {
                break;
            }
        }
        let t = 0.5 * (lo + hi);
        let (ea, eb, sa, sb) = self.excess(t, mf).ok_or(EntropyError::Numerical("tilt equation has no root"))?;
        Ok(OperatingPoint {
            blocks: m,
            threshold: t,
            s_alpha: sa,
            s_beta: sb,
            alpha: (ea + self.alpha.ln()).exp(),
            beta: (eb + self.beta.ln()).exp(),
        })
    }

    fn feasible(&self, m: usize) -> Result<(bool, OperatingPoint), EntropyError> {
        let op = self.operating_point(m)?;
        // the balanced point has equal excess, so checking both covers the rounding gap
        Ok((op.alpha <= self.alpha * (1.0 + 1e-9) && op.beta <= self.beta * (1.0 + 1e-9), op))
    }
}

/// Smallest `M` for which some threshold keeps both error estimates within
/// `alpha` and `beta`.
pub fn solve_threshold(good: &EntropyHistogram, bad: &EntropyHistogram, alpha: f64, beta: f64) -> Result<ThresholdSolution, EntropyError> {
    let d = Distinguisher::new(good, bad, alpha, beta)?;
    let mut hi = 1usize;
    let mut last = d.feasible(hi)?;
    while !last.0 {
        if hi >= MAX_BLOCKS {
            return Err(EntropyError::Unattainable { blocks: hi, alpha: last.1.alpha, beta: last.1.beta });
        }
        hi *= 2;
        last = d.feasible(hi)?;
    }
    let mut best = last.1;
    let mut lo = hi / 2;
    // lo infeasible (or zero), hi feasible
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let (ok, op) = d.feasible(mid)?;
        if ok {
            hi = mid;
            best = op;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdSolution {
        threshold: best.threshold,
        m_min: hi,
        s_alpha: best.s_alpha,
        s_beta: best.s_beta,
        alpha,
        beta,
        t_good: d.t_good,
        t_bad: d.t_bad,
        good: d.good,
        bad: d.bad,
    })
}

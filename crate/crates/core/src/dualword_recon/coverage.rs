use serde::{Deserialize, Serialize};

use super::Dualword;

/// Number of sample rows for a collision run: `round((w/2)(1 + log2 N))`.
pub fn default_ell(n: usize, weight: usize) -> usize {
    (weight as f64 / 2.0 * (1.0 + (n as f64).log2())).round() as usize
}

/// Probability that a single check of weight `w` holds on one hard-decided row.
pub fn p_true(tau: f64, weight: usize) -> f64 {
    (1.0 + (1.0 - 2.0 * tau).powi(weight as i32)) / 2.0
}

/// Probability of finding one given check in a single run on `ell` rows.
pub fn detection_probability(tau: f64, weight: usize, ell: usize) -> f64 {
    p_true(tau, weight).powi(ell as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub ell: usize,
    pub p_w: f64,
    /// Sum of `w0` over the dualword set.
    pub w_total: usize,
    pub runs: usize,
    /// Expected number of positions covered by no detected check.
    pub n_prime: f64,
}

/// Expected coverage after `runs` independent runs: `N' = N (1 - P_w)^(W runs)`.
pub fn predict_coverage(n: usize, tau: f64, weight: usize, w_total: usize, runs: usize, ell: Option<usize>) -> Coverage {
    let ell = ell.unwrap_or_else(|| default_ell(n, weight));
    let p_w = detection_probability(tau, weight, ell);
    let n_prime = n as f64 * (1.0 - p_w).powf((w_total * runs) as f64);
    Coverage { ell, p_w, w_total, runs, n_prime }
}

/// `W` for a dualword set restricted to checks of exactly `weight`.
pub fn total_w0(dualwords: &[Dualword], weight: usize) -> usize {
    dualwords.iter().filter(|d| d.weight() <= weight).map(Dualword::w0).sum()
}

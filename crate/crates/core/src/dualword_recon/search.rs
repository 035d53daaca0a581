//! Collision search for low-weight parity checks on the hard-decided matrix.
//!
//! Each run samples `ℓ` block rows and reduces every column to an `ℓ`-bit
//! signature. A check is a set of `w0` X columns and `w1` Z columns whose
//! signatures XOR to zero. Z-side combinations are enumerated inside a short
//! window (real `λQ` supports are local), while the X side, scattered by the
//! interleaver, is matched with a bucketed table of signatures of one or two
//! columns. Candidates are then verified on the rows the run did not sample.

use std::collections::HashSet;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::classification::ClassKey;
use super::coverage::{default_ell, p_true};
use super::DualwordError;
use crate::gf2poly::BinPoly;
use crate::seed;
use crate::turbo_sim::HardDecisions;

/// A verified parity check: X columns (observed, un-interleaved positions)
/// plus Z positions whose bits XOR to zero on most blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParityCheck {
    pub z_offsets: Vec<usize>,
    pub x_columns: Vec<usize>,
    pub satisfied: usize,
    pub blocks: usize,
}

impl ParityCheck {
    /// Last Z position; the check is the coefficient of `D^end` of `λQ·Z = λP·X_Π`.
    pub fn end(&self) -> usize {
        *self.z_offsets.last().expect("checks touch Z")
    }

    /// Parity pattern read back from the Z positions, anchored at [`Self::end`].
    pub fn lambda_q(&self) -> BinPoly {
        let end = self.end();
        BinPoly::from_exponents(self.z_offsets.iter().map(|&o| end - o))
    }

    pub fn w0(&self) -> usize {
        self.x_columns.len()
    }

    pub fn w1(&self) -> usize {
        self.z_offsets.len()
    }

    pub fn weight(&self) -> usize {
        self.w0() + self.w1()
    }

    pub fn key(&self) -> ClassKey {
        ClassKey { w0: self.w0(), lambda_q: self.lambda_q() }
    }

    /// Same support, ignoring the satisfied count.
    pub fn same_support(&self, other: &Self) -> bool {
        self.z_offsets == other.z_offsets && self.x_columns == other.x_columns
    }

    fn columns(&self, n: usize) -> Vec<usize> {
        self.x_columns.iter().copied().chain(self.z_offsets.iter().map(|&z| n + z)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Total check weight, 4, 6 or 8.
    pub weight: usize,
    pub runs: usize,
    /// Rows sampled per run; defaults to `round((w/2)(1 + log2 N))`.
    pub ell: Option<usize>,
    /// Largest Z window, `max deg λQ + 1`.
    pub span: usize,
    /// Fraction of held-out rows a candidate must satisfy. Defaults to the
    /// midpoint between a true check and a random column set.
    pub acceptance: Option<f64>,
    /// `(w0, w1)` splits to explore; defaults to every split with `w1 >= 2`.
    pub splits: Option<Vec<(usize, usize)>>,
    pub seed: u64,
    /// Byte budget for the X-side signature table.
    pub memory_budget: usize,
}

impl SearchParams {
    pub fn new(weight: usize) -> Self {
        Self {
            weight,
            runs: 1,
            ell: None,
            span: 8,
            acceptance: None,
            splits: None,
            seed: 0,
            memory_budget: 1 << 30,
        }
    }

    pub fn splits(&self) -> Vec<(usize, usize)> {
        self.splits
            .clone()
            .unwrap_or_else(|| (2..self.weight).map(|w1| (self.weight - w1, w1)).collect())
    }

    pub fn ell_for(&self, n: usize) -> usize {
        self.ell.unwrap_or_else(|| default_ell(n, self.weight))
    }

    /// Minimum number of held-out rows (out of `holdout`) a candidate must satisfy.
    pub fn holdout_threshold(&self, holdout: usize, tau: f64) -> f64 {
        let frac = self.acceptance.unwrap_or_else(|| (p_true(tau, self.weight) + 0.5) / 2.0);
        holdout as f64 * frac
    }
}

/// Signature table over subsets of one or two X columns, bucketed by the low
/// signature bits.
struct SigTable {
    shift_mask: u64,
    starts: Vec<u32>,
    entries: Vec<(u128, [u32; 2])>,
}

impl SigTable {
    fn build(sigs: &[u128], size: usize) -> Self {
        let n = sigs.len();
        let mut items: Vec<(u128, [u32; 2])> = Vec::new();
        if size == 1 {
            items.extend(sigs.iter().enumerate().map(|(a, &s)| (s, [a as u32, u32::MAX])));
        } else {
            items.reserve(n * n.saturating_sub(1) / 2);
            for a in 0..n {
                for b in a + 1..n {
                    items.push((sigs[a] ^ sigs[b], [a as u32, b as u32]));
                }
            }
        }
        let bits = (items.len().max(2) as f64).log2().ceil() as u32;
        let buckets = 1usize << bits;
        let mask = (buckets - 1) as u64;
        let mut counts = vec![0u32; buckets + 1];
        for (s, _) in &items {
            counts[(*s as u64 & mask) as usize + 1] += 1;
        }
        for i in 0..buckets {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut entries = vec![(0u128, [0u32; 2]); items.len()];
        for it in items {
            let b = (it.0 as u64 & mask) as usize;
            entries[fill[b] as usize] = it;
            fill[b] += 1;
        }
        Self { shift_mask: mask, starts: counts, entries }
    }

    #[inline]
    fn lookup(&self, sig: u128) -> impl Iterator<Item = &[u32; 2]> {
        let b = (sig as u64 & self.shift_mask) as usize;
        self.entries[self.starts[b] as usize..self.starts[b + 1] as usize]
            .iter()
            .filter(move |(s, _)| *s == sig)
            .map(|(_, cols)| cols)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// One collision run with its own row sample.
pub fn search_run(hd: &HardDecisions, params: &SearchParams, run: usize) -> Result<Vec<ParityCheck>, DualwordError> {
    let (m, n) = (hd.blocks(), hd.block_len());
    if ![4, 6, 8].contains(&params.weight) {
        return Err(DualwordError::InvalidParameter(format!("weight must be 4, 6 or 8, got {}", params.weight)));
    }
    let ell = params.ell_for(n);
    if ell > m {
        return Err(DualwordError::EllTooLarge { ell, blocks: m });
    }
    if ell == 0 || ell > 128 {
        return Err(DualwordError::InvalidParameter(format!("ell must be in 1..=128, got {ell}")));
    }
    if params.span < 2 {
        return Err(DualwordError::InvalidParameter("span must be at least 2".into()));
    }
    let splits = params.splits();
    for &(w0, w1) in &splits {
        if w0 == 0 || w1 < 2 || w0 + w1 != params.weight {
            return Err(DualwordError::InvalidParameter(format!("bad split ({w0}, {w1})")));
        }
    }

    let mut rng = seed::rng(seed::derive(seed::derive(params.seed, seed::label::SEARCH), run as u64));
    let rows = sample(&mut rng, m, ell).into_vec();
    let sigs: Vec<u128> = (0..2 * n)
        .map(|c| rows.iter().enumerate().fold(0u128, |acc, (k, &r)| acc | (hd.bit(r, c) as u128) << k))
        .collect();
    let (xsig, zsig) = sigs.split_at(n);

    let threshold = params.holdout_threshold(m - ell, hd.tau());
    let mut seen: HashSet<(Vec<usize>, Vec<usize>)> = HashSet::new();
    let mut found = Vec::new();
    let mut tested = 0usize;
    let mut tables: [Option<SigTable>; 2] = [None, None];

    for (w0, w1) in splits {
        let h = w0.div_ceil(2).min(2);
        let needed = binomial(n, h) * std::mem::size_of::<(u128, [u32; 2])>() as f64;
        if needed > params.memory_budget as f64 {
            return Err(DualwordError::MemoryBudget {
                needed_bytes: needed as u64,
                budget: params.memory_budget as u64,
                estimate: (n as f64).powi(params.weight.div_ceil(4) as i32),
            });
        }
        if tables[h - 1].is_none() {
            tables[h - 1] = Some(SigTable::build(xsig, h));
        }
        let table = tables[h - 1].as_ref().unwrap();
        let outer = w0 - h;

        let mut zcombo = Vec::with_capacity(w1);
        for end in 0..n {
            if hd.z_erased(end) {
                continue;
            }
            let lo = (end + 1).saturating_sub(params.span);
            let window: Vec<usize> = (lo..end).filter(|&z| !hd.z_erased(z)).collect();
            for_each_subset(&window, w1 - 1, &mut zcombo, &mut |others| {
                let zs = others.iter().fold(zsig[end], |acc, &z| acc ^ zsig[z]);
                let mut outer_cols = Vec::with_capacity(outer);
                for_each_index_subset(n, outer, &mut outer_cols, &mut |ocols| {
                    let s = ocols.iter().fold(zs, |acc, &a| acc ^ xsig[a]);
                    for hit in table.lookup(s) {
                        let inner = &hit[..h];
                        if inner.iter().any(|&b| ocols.contains(&(b as usize))) {
                            continue;
                        }
                        let mut xs: Vec<usize> = ocols.iter().copied().chain(inner.iter().map(|&b| b as usize)).collect();
                        xs.sort_unstable();
                        let mut zs_off: Vec<usize> = others.to_vec();
                        zs_off.push(end);
                        if !seen.insert((xs.clone(), zs_off.clone())) {
                            continue;
                        }
                        let mut check = ParityCheck { z_offsets: zs_off, x_columns: xs, satisfied: 0, blocks: m };
                        check.satisfied = hd.satisfied_count(&check.columns(n));
                        tested += 1;
                        if (check.satisfied - ell) as f64 >= threshold {
                            found.push(check);
                        }
                    }
                });
            });
        }
    }
    let floor = chance_floor(m - ell, tested);
    found.retain(|c| c.satisfied - ell >= floor);
    found.sort();
    Ok(found)
}

/// Expected number of random candidates accepted per run.
pub const FALSE_ALARM_BUDGET: f64 = 0.01;

/// Smallest held-out count that fewer than [`FALSE_ALARM_BUDGET`] of
/// `tested` random column sets reach.
pub fn chance_floor(holdout: usize, tested: usize) -> usize {
    if tested == 0 {
        return 0;
    }
    let ln_budget = (FALSE_ALARM_BUDGET / tested as f64).ln();
    let ln_half = -(holdout as f64) * std::f64::consts::LN_2;
    let mut ln_tail = f64::NEG_INFINITY;
    for k in (0..=holdout).rev() {
        let ln_pk = ln_choose(holdout, k) + ln_half;
        let next = log_add(ln_tail, ln_pk);
        if next > ln_budget {
            return k + 1;
        }
        ln_tail = next;
    }
    0
}

fn ln_choose(n: usize, k: usize) -> f64 {
    use statrs::function::gamma::ln_gamma;
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// Runs `params.runs` independent collision runs and merges their checks.
pub fn find_parity_checks(hd: &HardDecisions, params: &SearchParams) -> Result<Vec<ParityCheck>, DualwordError> {
    let mut all: Vec<ParityCheck> = Vec::new();
    for run in 0..params.runs {
        all.extend(search_run(hd, params, run)?);
    }
    all.sort();
    all.dedup_by(|a, b| a.same_support(b));
    Ok(all)
}

/// Increasing `k`-subsets of `items`.
fn for_each_subset(items: &[usize], k: usize, buf: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    fn rec(items: &[usize], start: usize, k: usize, buf: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if buf.len() == k {
            f(buf);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - buf.len() {
                break;
            }
            buf.push(items[i]);
            rec(items, i + 1, k, buf, f);
            buf.pop();
        }
    }
    buf.clear();
    rec(items, 0, k, buf, f);
}

/// Increasing `k`-subsets of `0..n`.
fn for_each_index_subset(n: usize, k: usize, buf: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    fn rec(n: usize, start: usize, k: usize, buf: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if buf.len() == k {
            f(buf);
            return;
        }
        for i in start..n {
            if n - i < k - buf.len() {
                break;
            }
            buf.push(i);
            rec(n, i + 1, k, buf, f);
            buf.pop();
        }
    }
    buf.clear();
    rec(n, 0, k, buf, f);
}

use serde::{Deserialize, Serialize};

use crate::gf2poly::BinPoly;
use crate::turbo_sim::EncoderSpec;

/// A dualword `(λP, λQ)` of an encoder `P/Q`.
///
/// Only `λ` with a nonzero constant term is kept: multiplying by `D^k` shifts
/// every parity check without creating a new one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dualword {
    pub lambda: BinPoly,
    pub lambda_p: BinPoly,
    pub lambda_q: BinPoly,
}

impl Dualword {
    pub fn new(lambda: BinPoly, enc: &EncoderSpec) -> Self {
        let lambda_p = &lambda * enc.numerator();
        let lambda_q = &lambda * enc.denominator();
        Self { lambda, lambda_p, lambda_q }
    }

    /// Weight of `λP`, the number of information bits in each check.
    pub fn w0(&self) -> usize {
        self.lambda_p.weight()
    }

    /// Weight of `λQ`, the number of parity bits in each check.
    pub fn w1(&self) -> usize {
        self.lambda_q.weight()
    }

    pub fn weight(&self) -> usize {
        self.w0() + self.w1()
    }

    /// Time span of a check, `max(deg λP, deg λQ)`.
    pub fn span(&self) -> usize {
        self.lambda_p.degree().unwrap_or(0).max(self.lambda_q.degree().unwrap_or(0))
    }

    /// Positions touched by the check ending at time `t`: permuted-information
    /// offsets `t - a` for `a` in `λP` and parity offsets `t - b` for `b` in
    /// `λQ`. `None` if the check would reach before the start of the block.
    pub fn check_at(&self, t: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        if t < self.span() {
            return None;
        }
        let mut xs: Vec<usize> = self.lambda_p.support().into_iter().map(|a| t - a).collect();
        let mut zs: Vec<usize> = self.lambda_q.support().into_iter().map(|b| t - b).collect();
        xs.sort_unstable();
        zs.sort_unstable();
        Some((xs, zs))
    }
}

/// Residues `D^k mod Q` for `k < len`, packed as bit masks (`deg Q <= 16`).
pub(crate) fn residues(q: &BinPoly, len: usize) -> Vec<u32> {
    let dq = q.degree().expect("nonzero denominator");
    let qmask = q.to_mask().expect("small denominator") as u32;
    let top = if dq == 0 { 0 } else { 1u32 << dq };
    let mut out = Vec::with_capacity(len);
    let mut r: u32 = if dq == 0 { 0 } else { 1 };
    for _ in 0..len {
        out.push(r);
        r <<= 1;
        if dq > 0 && r & top != 0 {
            r ^= qmask;
        }
    }
    out
}

/// Calls `visit` with every multiple `λQ` of `q` that has a constant term,
/// weight `1..=max_w1` and `deg λ <= max_lambda_degree`.
pub(crate) fn for_each_low_weight_multiple(
    q: &BinPoly,
    max_w1: usize,
    max_lambda_degree: usize,
    mut visit: impl FnMut(&[usize]),
) {
    if max_w1 == 0 {
        return;
    }
    let dq = q.degree().expect("nonzero denominator");
    let top = max_lambda_degree + dq;
    let res = residues(q, top + 1);
    let mut support = vec![0usize];
    fn rec(
        res: &[u32],
        support: &mut Vec<usize>,
        acc: u32,
        max_w1: usize,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if acc == 0 {
            visit(support);
        }
        if support.len() == max_w1 {
            return;
        }
        let start = support.last().unwrap() + 1;
        for k in start..res.len() {
            support.push(k);
            rec(res, support, acc ^ res[k], max_w1, visit);
            support.pop();
        }
    }
    rec(&res, &mut support, res[0], max_w1, &mut visit);
}

/// Every dualword with `w0 + w1 <= max_weight` and `deg λ <= max_lambda_degree`,
/// sorted by `(weight, λQ)`.
pub fn enumerate_dualwords(enc: &EncoderSpec, max_weight: usize, max_lambda_degree: usize) -> Vec<Dualword> {
    let q = enc.denominator();
    let mut out = Vec::new();
    for_each_low_weight_multiple(q, max_weight.saturating_sub(1), max_lambda_degree, |support| {
        let lambda_q = BinPoly::from_exponents(support.iter().copied());
        let lambda = lambda_q.exact_div(q).expect("residue test guarantees divisibility");
        let dw = Dualword::new(lambda, enc);
        if dw.w0() >= 1 && dw.weight() <= max_weight {
            out.push(dw);
        }
    });
    out.sort_by(|a, b| (a.weight(), &a.lambda_q).cmp(&(b.weight(), &b.lambda_q)));
    out.dedup_by(|a, b| a.lambda_p == b.lambda_p && a.lambda_q == b.lambda_q);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running() -> EncoderSpec {
        "1+D^2+D^3/1+D+D^2".parse().unwrap()
    }

    /// Enumerates every λ with constant term directly, no residue trick.
    fn brute_force(enc: &EncoderSpec, max_weight: usize, max_deg: usize) -> Vec<(BinPoly, BinPoly)> {
        let mut out = Vec::new();
        for mid in 0u64..(1 << max_deg) {
            let lambda = BinPoly::from_mask(1 | (mid as u128) << 1);
            let dw = Dualword::new(lambda, enc);
            if dw.weight() <= max_weight {
                out.push((dw.lambda_p, dw.lambda_q));
            }
        }
        out.sort();
        out
    }

    #[test]
    fn lambda_one_is_a_dualword() {
        let dws = enumerate_dualwords(&running(), 6, 32);
        let first = dws.iter().find(|d| d.lambda.is_one()).unwrap();
        assert_eq!(first.lambda_p.to_string(), "1+D^2+D^3");
        assert_eq!(first.lambda_q.to_string(), "1+D+D^2");
        assert_eq!((first.w0(), first.w1()), (3, 3));
    }

    #[test]
    fn census_of_running_example() {
        for deg in [8, 16, 32] {
            let dws = enumerate_dualwords(&running(), 6, deg);
            assert_eq!(dws.len(), 5);
            assert_eq!(dws.iter().map(Dualword::w0).sum::<usize>(), 15);
        }
        assert!(enumerate_dualwords(&running(), 0, 32).is_empty());
    }

    #[test]
    fn matches_brute_force() {
        for s in ["1+D^2+D^3/1+D+D^2", "1+D^2/1+D+D^2", "1+D+D^3/1+D^2+D^3", "1+D/1"] {
            let enc: EncoderSpec = s.parse().unwrap();
            let mut fast: Vec<_> =
                enumerate_dualwords(&enc, 7, 14).into_iter().map(|d| (d.lambda_p, d.lambda_q)).collect();
            fast.sort();
            assert_eq!(fast, brute_force(&enc, 7, 14), "{s}");
        }
    }

    #[test]
    fn round_trip_through_division() {
        let enc = running();
        for dw in enumerate_dualwords(&enc, 8, 20) {
            let (q, r) = dw.lambda_q.divrem(enc.denominator()).unwrap();
            assert!(r.is_zero());
            assert_eq!(&q * enc.numerator(), dw.lambda_p);
        }
    }

    #[test]
    fn worked_check_offsets() {
        let dw = Dualword::new(BinPoly::one(), &running());
        // X_{π(i)}, X_{π(i+1)}, X_{π(i+3)} with Z_{i+1}, Z_{i+2}, Z_{i+3} at i = 10
        assert_eq!(dw.check_at(13), Some((vec![10, 11, 13], vec![11, 12, 13])));
        assert_eq!(dw.check_at(2), None);
    }
}

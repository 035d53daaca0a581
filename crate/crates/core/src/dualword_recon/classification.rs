//! Precomputed map from observable check keys `(w0, λQ)` to encoders.
//!
//! A check found in intercepted data reveals the parity pattern `λQ` (from
//! the positions it touches in `Z`) and the number `w0` of information bits
//! it involves, but not where those bits sit before interleaving. The table
//! lists, for each such key, every encoder of the universe admitting a
//! dualword with that key; intersecting over found checks identifies `P/Q`.
//!
//! Cache file format, one key per line after `#` metadata lines:
//!
//! ```text
//! # max_degree=3 max_weight=6 max_lambda_degree=32 irreducible_feedback=true
//! 3	1+D^2+D^4	1+D+D^3/1+D+D^2,1+D^2+D^3/1+D+D^2
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dualword::for_each_low_weight_multiple;
use super::{DualwordError, ParityCheck};
use crate::gf2poly::BinPoly;
use crate::turbo_sim::EncoderSpec;

/// Set of encoders the table classifies.
///
/// Encoders have `P(0) = Q(0) = 1`, `deg P, deg Q` in `1..=max_degree` and
/// coprime `P, Q`. With `irreducible_feedback` only irreducible `Q` are
/// included: for a reducible self-reciprocal `Q`, `P/Q` and `P*/Q` (with `P*`
/// the reciprocal of `P`) are time reversals of each other and have identical
/// key sets at every weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderUniverse {
    pub max_degree: usize,
    pub irreducible_feedback: bool,
}

impl EncoderUniverse {
    pub fn new(max_degree: usize) -> Self {
        Self { max_degree, irreducible_feedback: true }
    }

    fn polys(&self) -> Vec<BinPoly> {
        // constant term set, degree 1..=max_degree
        (1..=self.max_degree)
            .flat_map(|d| (0u128..(1 << (d - 1))).map(move |mid| BinPoly::from_mask(1 | mid << 1 | 1 << d)))
            .collect()
    }

    pub fn feedback_polys(&self) -> Vec<BinPoly> {
        self.polys().into_iter().filter(|q| !self.irreducible_feedback || q.is_irreducible()).collect()
    }

    pub fn numerators_for(&self, q: &BinPoly) -> Vec<BinPoly> {
        self.polys().into_iter().filter(|p| p.gcd(q).is_one()).collect()
    }

    pub fn encoders(&self) -> Vec<EncoderSpec> {
        let mut out = Vec::new();
        for q in self.feedback_polys() {
            for p in self.numerators_for(&q) {
                out.push(EncoderSpec::new(p, q.clone()).expect("universe encoders are valid"));
            }
        }
        out.sort();
        out
    }

    pub fn contains(&self, enc: &EncoderSpec) -> bool {
        let (p, q) = (enc.numerator(), enc.denominator());
        let in_range = |x: &BinPoly| x.coeff(0) && matches!(x.degree(), Some(d) if d >= 1 && d <= self.max_degree);
        in_range(p) && in_range(q) && p.gcd(q).is_one() && (!self.irreducible_feedback || q.is_irreducible())
    }
}

/// Observable key of a check: `(w0, λQ)` with `λQ(0) = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassKey {
    pub w0: usize,
    pub lambda_q: BinPoly,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationTable {
    universe: EncoderUniverse,
    max_weight: usize,
    max_lambda_degree: usize,
    entries: BTreeMap<ClassKey, BTreeSet<EncoderSpec>>,
}

fn clmul(a: u128, b: u128) -> u128 {
    let mut acc = 0u128;
    let mut b = b;
    while b != 0 {
        let s = b.trailing_zeros();
        acc ^= a << s;
        b &= b - 1;
    }
    acc
}

pub fn build_classification(
    universe: EncoderUniverse,
    max_weight: usize,
    max_lambda_degree: usize,
) -> Result<ClassificationTable, DualwordError> {
    if universe.max_degree == 0 || max_weight == 0 {
        return Err(DualwordError::InvalidParameter("classification bounds must be at least 1".into()));
    }
    if max_lambda_degree + universe.max_degree >= 128 {
        return Err(DualwordError::InvalidParameter(format!(
            "max_lambda_degree + max_degree must stay below 128, got {}",
            max_lambda_degree + universe.max_degree
        )));
    }
    let per_q: Vec<Vec<(ClassKey, EncoderSpec)>> = universe
        .feedback_polys()
        .into_par_iter()
        .map(|q| {
            let mut multiples: Vec<(u128, BinPoly, usize)> = Vec::new();
            for_each_low_weight_multiple(&q, max_weight - 1, max_lambda_degree, |support| {
                let lambda_q = BinPoly::from_exponents(support.iter().copied());
                let lambda = lambda_q.exact_div(&q).expect("divisible by construction");
                multiples.push((lambda.to_mask().expect("degree < 128"), lambda_q, support.len()));
            });
            let mut out = Vec::new();
            for p in universe.numerators_for(&q) {
                let pm = p.to_mask().expect("small numerator");
                let enc = EncoderSpec::new(p, q.clone()).expect("valid");
                for (lambda, lambda_q, w1) in &multiples {
                    let w0 = clmul(*lambda, pm).count_ones() as usize;
                    if w0 + w1 <= max_weight {
                        out.push((ClassKey { w0, lambda_q: lambda_q.clone() }, enc.clone()));
                    }
                }
            }
            out
        })
        .collect();
    let mut entries: BTreeMap<ClassKey, BTreeSet<EncoderSpec>> = BTreeMap::new();
    for (key, enc) in per_q.into_iter().flatten() {
        entries.entry(key).or_default().insert(enc);
    }
    Ok(ClassificationTable { universe, max_weight, max_lambda_degree, entries })
}

impl ClassificationTable {
    pub fn universe(&self) -> EncoderUniverse {
        self.universe
    }

    pub fn max_weight(&self) -> usize {
        self.max_weight
    }

    pub fn max_lambda_degree(&self) -> usize {
        self.max_lambda_degree
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&ClassKey, &BTreeSet<EncoderSpec>)> {
        self.entries.iter()
    }

    pub fn candidates(&self, key: &ClassKey) -> Option<&BTreeSet<EncoderSpec>> {
        self.entries.get(key)
    }

    /// Every key an encoder produces.
    pub fn keys_of(&self, enc: &EncoderSpec) -> BTreeSet<ClassKey> {
        self.entries.iter().filter(|(_, v)| v.contains(enc)).map(|(k, _)| k.clone()).collect()
    }

    /// Groups of encoders sharing the same full key set; empty when the
    /// table tells every encoder apart.
    pub fn collisions(&self) -> Vec<Vec<EncoderSpec>> {
        let mut keysets: BTreeMap<EncoderSpec, Vec<&ClassKey>> = BTreeMap::new();
        for (k, encs) in &self.entries {
            for e in encs {
                keysets.entry(e.clone()).or_default().push(k);
            }
        }
        let mut groups: BTreeMap<Vec<&ClassKey>, Vec<EncoderSpec>> = BTreeMap::new();
        for e in self.universe.encoders() {
            groups.entry(keysets.remove(&e).unwrap_or_default()).or_default().push(e);
        }
        groups.into_values().filter(|g| g.len() > 1).collect()
    }

    /// Intersection of the candidate sets of `keys`; the whole universe when
    /// `keys` is empty.
    pub fn identify_keys<'a, I>(&self, keys: I) -> Result<BTreeSet<EncoderSpec>, DualwordError>
    where
        I: IntoIterator<Item = &'a ClassKey>,
    {
        let mut current: BTreeSet<EncoderSpec> = self.universe.encoders().into_iter().collect();
        for key in keys {
            let cands = self.entries.get(key).cloned().unwrap_or_default();
            let next: BTreeSet<EncoderSpec> = current.intersection(&cands).cloned().collect();
            if next.is_empty() {
                return Err(DualwordError::NoConsistentEncoder { key: format!("({}, {})", key.w0, key.lambda_q) });
            }
            current = next;
        }
        Ok(current)
    }

    /// Encoders explaining the largest number of distinct keys, with that count.
    /// Tolerates a few spurious keys from false checks.
    pub fn identify_by_vote<'a, I>(&self, keys: I) -> (BTreeSet<EncoderSpec>, usize)
    where
        I: IntoIterator<Item = &'a ClassKey>,
    {
        let keys: BTreeSet<&ClassKey> = keys.into_iter().collect();
        let mut votes: BTreeMap<&EncoderSpec, usize> = BTreeMap::new();
        for k in &keys {
            if let Some(encs) = self.entries.get(*k) {
                for e in encs {
                    *votes.entry(e).or_default() += 1;
                }
            }
        }
        let best = votes.values().copied().max().unwrap_or(0);
        if best == 0 {
            return (self.universe.encoders().into_iter().collect(), 0);
        }
        (votes.into_iter().filter(|&(_, v)| v == best).map(|(e, _)| e.clone()).collect(), best)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# max_degree={} max_weight={} max_lambda_degree={} irreducible_feedback={}",
            self.universe.max_degree, self.max_weight, self.max_lambda_degree, self.universe.irreducible_feedback
        );
        for (k, encs) in &self.entries {
            let list: Vec<String> = encs.iter().map(ToString::to_string).collect();
            let _ = writeln!(s, "{}\t{}\t{}", k.w0, k.lambda_q, list.join(","));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, DualwordError> {
        let bad = |line: usize, msg: &str| DualwordError::BadCache(format!("line {line}: {msg}"));
        let mut meta: BTreeMap<String, String> = BTreeMap::new();
        let mut entries: BTreeMap<ClassKey, BTreeSet<EncoderSpec>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if let Some(rest) = line.strip_prefix('#') {
                for kv in rest.split_whitespace() {
                    if let Some((k, v)) = kv.split_once('=') {
                        meta.insert(k.to_string(), v.to_string());
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(bad(lineno, "expected three tab-separated fields"));
            }
            let w0 = fields[0].trim().parse().map_err(|_| bad(lineno, "bad w0"))?;
            let lambda_q = fields[1].parse().map_err(|_| bad(lineno, "bad polynomial"))?;
            let encs = fields[2]
                .split(',')
                .map(|e| e.parse::<EncoderSpec>().map_err(|_| bad(lineno, "bad encoder")))
                .collect::<Result<BTreeSet<_>, _>>()?;
            entries.insert(ClassKey { w0, lambda_q }, encs);
        }
        let get = |k: &str| -> Result<usize, DualwordError> {
            meta.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| DualwordError::BadCache(format!("missing metadata {k}")))
        };
        let irreducible_feedback = meta
            .get("irreducible_feedback")
            .map(|v| v == "true")
            .ok_or_else(|| DualwordError::BadCache("missing metadata irreducible_feedback".into()))?;
        Ok(Self {
            universe: EncoderUniverse { max_degree: get("max_degree")?, irreducible_feedback },
            max_weight: get("max_weight")?,
            max_lambda_degree: get("max_lambda_degree")?,
            entries,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), DualwordError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DualwordError> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// Candidate encoders consistent with every found check.
pub fn identify_encoder(found: &[ParityCheck], table: &ClassificationTable) -> Result<BTreeSet<EncoderSpec>, DualwordError> {
    let keys: Vec<ClassKey> = found.iter().map(ParityCheck::key).collect();
    table.identify_keys(&keys)
}

/// [`identify_encoder`], falling back to the encoders admitting the most
/// checks when none admits all of them. Truncated checks near the block start
/// and chance checks each occur once, whereas a genuine dualword recurs at
/// every shift. The flag tells whether the match was exact.
pub fn identify_tolerant(found: &[ParityCheck], table: &ClassificationTable) -> Result<(BTreeSet<EncoderSpec>, bool), DualwordError> {
    match identify_encoder(found, table) {
        Ok(set) => Ok((set, true)),
        Err(DualwordError::NoConsistentEncoder { .. }) => {
            let mut votes: BTreeMap<&EncoderSpec, usize> = BTreeMap::new();
            for c in found {
                for e in table.candidates(&c.key()).into_iter().flatten() {
                    *votes.entry(e).or_default() += 1;
                }
            }
            let best = votes.values().copied().max().unwrap_or(0);
            Ok((votes.into_iter().filter(|&(_, v)| v == best && best > 0).map(|(e, _)| e.clone()).collect(), false))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dualword_recon::enumerate_dualwords;

    fn key(w0: usize, q: &str) -> ClassKey {
        ClassKey { w0, lambda_q: q.parse().unwrap() }
    }

    fn enc(s: &str) -> EncoderSpec {
        s.parse().unwrap()
    }

    #[test]
    fn tolerant_identification_outvotes_stray_keys() {
        let target = enc("1+D^2/1+D+D^2");
        let table = build_classification(EncoderUniverse::new(3), 6, 32).unwrap();
        let check = |w0: usize, q: &str| {
            let k = key(w0, q);
            let z: Vec<usize> = k.lambda_q.support().into_iter().collect();
            ParityCheck { z_offsets: z, x_columns: (0..w0).collect(), satisfied: 1, blocks: 1 }
        };
        let mut found: Vec<ParityCheck> = table.keys_of(&target).iter().map(|k| check(k.w0, &k.lambda_q.to_string())).collect();
        let (ids, exact) = identify_tolerant(&found, &table).unwrap();
        assert!(exact);
        assert_eq!(ids.into_iter().collect::<Vec<_>>(), vec![target.clone()]);
        found.push(check(1, "1+D+D^3+D^5+D^7"));
        found.push(check(2, "1+D^2+D^3+D^4"));
        assert!(identify_encoder(&found, &table).is_err());
        let (ids, exact) = identify_tolerant(&found, &table).unwrap();
        assert!(!exact);
        assert_eq!(ids.into_iter().collect::<Vec<_>>(), vec![target]);
    }

    #[test]
    fn universe_contents() {
        let u = EncoderUniverse::new(3);
        let encs = u.encoders();
        assert!(encs.contains(&enc("1+D^2+D^3/1+D+D^2")));
        assert!(!encs.contains(&enc("1/1+D+D^2")));
        assert!(!encs.contains(&enc("1+D+D^2/1+D+D^2")));
        assert!(!encs.contains(&enc("1+D+D^3/1+D^3")));
        assert!(encs.iter().all(|e| u.contains(e)));
        let all = EncoderUniverse { irreducible_feedback: false, ..u };
        assert!(all.encoders().contains(&enc("1+D+D^3/1+D^3")));
    }

    #[test]
    fn worked_identification() {
        let table = build_classification(EncoderUniverse::new(3), 6, 32).unwrap();
        let first = table.identify_keys(&[key(3, "1+D^2+D^4")]).unwrap();
        let expected: BTreeSet<_> = [enc("1+D+D^3/1+D+D^2"), enc("1+D^2+D^3/1+D+D^2")].into_iter().collect();
        assert_eq!(first, expected);
        let both = table.identify_keys(&[key(3, "1+D^2+D^4"), key(3, "1+D+D^5")]).unwrap();
        assert_eq!(both, [enc("1+D^2+D^3/1+D+D^2")].into_iter().collect());
        assert_eq!(table.identify_keys(&[]).unwrap().len(), table.universe().encoders().len());
        assert!(table.identify_keys(&[key(3, "1+D^2+D^4"), key(2, "1+D^9")]).is_err());
    }

    #[test]
    fn degree_three_is_unique() {
        let table = build_classification(EncoderUniverse::new(3), 6, 32).unwrap();
        assert!(table.collisions().is_empty(), "{:?}", table.collisions());
    }

    #[test]
    fn reducible_feedback_collisions_are_time_reversal_twins() {
        let u = EncoderUniverse { max_degree: 3, irreducible_feedback: false };
        let table = build_classification(u, 6, 16).unwrap();
        let collisions = table.collisions();
        assert!(!collisions.is_empty());
        for group in collisions {
            assert_eq!(group.len(), 2);
            let (a, b) = (&group[0], &group[1]);
            assert_eq!(a.denominator(), b.denominator());
            assert_eq!(a.denominator().reciprocal(), *a.denominator());
            assert_eq!(a.numerator().reciprocal(), *b.numerator());
        }
    }

    #[test]
    fn degree_five_needs_weight_ten() {
        let at = |w| build_classification(EncoderUniverse::new(5), w, 16).unwrap().collisions().len();
        assert_eq!(at(8), 5);
        assert_eq!(at(9), 1);
        assert_eq!(at(10), 0);
    }

    #[test]
    fn every_entry_rederives_its_key() {
        let table = build_classification(EncoderUniverse::new(3), 6, 20).unwrap();
        for (k, encs) in table.entries() {
            for e in encs {
                let lambda = k.lambda_q.exact_div(e.denominator()).expect("divides");
                assert_eq!((&lambda * e.numerator()).weight(), k.w0);
                let dws = enumerate_dualwords(e, 6, 20);
                assert!(dws.iter().any(|d| d.w0() == k.w0 && d.lambda_q == k.lambda_q));
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let table = build_classification(EncoderUniverse::new(2), 6, 12).unwrap();
        let text = table.to_text();
        assert_eq!(ClassificationTable::from_text(&text).unwrap(), table);
        assert!(ClassificationTable::from_text("3\t1+D\n").is_err());
    }
}

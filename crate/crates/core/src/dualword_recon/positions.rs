//! Interleaver positions implied by a set of verified checks.
//!
//! A check ending at time `t` for dualword `(λP, λQ)` states that the
//! permuted-information offsets `S = {t - a : a in λP}` are mapped by `Π`
//! onto its X column set `C`. Since `Π` is a bijection, a position `p` can
//! only map to a column lying in every `C` whose `S` contains `p` and in no
//! `C` whose `S` avoids `p`. Those domains are then narrowed by propagating
//! assignments, by forced columns within a check, and, when stalled, by
//! enumerating the at most `w0!` bijections of each check.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DualwordError, ParityCheck};
use crate::turbo_sim::EncoderSpec;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationConstraint {
    n: usize,
    resolved: Vec<Option<usize>>,
    /// Index (into the input check list) of a check covering each resolved position.
    provenance: Vec<Option<usize>>,
    domains: BTreeMap<usize, Vec<usize>>,
    covered: usize,
    used_checks: usize,
    skipped_checks: usize,
}

impl PermutationConstraint {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            resolved: vec![None; n],
            provenance: vec![None; n],
            domains: BTreeMap::new(),
            covered: 0,
            used_checks: 0,
            skipped_checks: 0,
        }
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    /// `Π(i)` where determined.
    pub fn resolved(&self) -> &[Option<usize>] {
        &self.resolved
    }

    pub fn resolved_count(&self) -> usize {
        self.resolved.iter().filter(|r| r.is_some()).count()
    }

    pub fn provenance(&self, i: usize) -> Option<usize> {
        self.provenance[i]
    }

    /// Candidate columns of covered but undetermined positions.
    pub fn domains(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.domains
    }

    /// Positions belonging to no usable check.
    pub fn uncovered(&self) -> usize {
        self.n - self.covered
    }

    /// Positions of `Π` still unknown, `N'`.
    pub fn unresolved(&self) -> usize {
        self.n - self.resolved_count()
    }

    pub fn used_checks(&self) -> usize {
        self.used_checks
    }

    /// Checks not admitted by the encoder or reaching before the block start.
    pub fn skipped_checks(&self) -> usize {
        self.skipped_checks
    }
}

struct Constraint {
    positions: Vec<usize>,
    columns: Vec<usize>,
    source: usize,
}

/// Positions of the check in the permuted-information domain, if the encoder
/// admits it.
pub fn check_positions(check: &ParityCheck, enc: &EncoderSpec) -> Option<Vec<usize>> {
    let lambda = check.lambda_q().exact_div(enc.denominator())?;
    let lambda_p = &lambda * enc.numerator();
    if lambda_p.weight() != check.w0() {
        return None;
    }
    let t = check.end();
    if t < lambda_p.degree()? {
        return None;
    }
    let mut s: Vec<usize> = lambda_p.support().into_iter().map(|a| t - a).collect();
    s.sort_unstable();
    Some(s)
}

pub fn recover_positions(found: &[ParityCheck], enc: &EncoderSpec, n: usize) -> Result<PermutationConstraint, DualwordError> {
    let mut out = PermutationConstraint::empty(n);
    let mut constraints: Vec<Constraint> = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, check) in found.iter().enumerate() {
        match check_positions(check, enc) {
            Some(positions) if check.x_columns.iter().all(|&c| c < n) => {
                if seen.insert((positions.clone(), check.x_columns.clone())) {
                    constraints.push(Constraint { positions, columns: check.x_columns.clone(), source: idx });
                }
            }
            _ => out.skipped_checks += 1,
        }
    }
    out.used_checks = constraints.len();
    if constraints.is_empty() {
        return Ok(out);
    }

    let conflict = |a: usize, b: usize| DualwordError::Contradiction {
        first: Box::new(found[constraints[a].source].clone()),
        second: Box::new(found[constraints[b].source].clone()),
    };

    let mut by_pos: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut col_count = vec![0usize; n];
    for (ci, c) in constraints.iter().enumerate() {
        for &p in &c.positions {
            by_pos.entry(p).or_default().push(ci);
        }
        for &x in &c.columns {
            col_count[x] += 1;
        }
    }
    out.covered = by_pos.len();

    let mut domain: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (&p, cs) in &by_pos {
        let mut d: BTreeSet<usize> = constraints[cs[0]].columns.iter().copied().collect();
        for &ci in &cs[1..] {
            let other: BTreeSet<usize> = constraints[ci].columns.iter().copied().collect();
            d = d.intersection(&other).copied().collect();
            if d.is_empty() {
                return Err(conflict(cs[0], ci));
            }
        }
        let before = d.clone();
        d.retain(|&x| col_count[x] == cs.len());
        if d.is_empty() {
            let x = *before.iter().next().unwrap();
            let other = (0..constraints.len())
                .find(|ci| !cs.contains(ci) && constraints[*ci].columns.contains(&x))
                .unwrap_or(cs[0]);
            return Err(conflict(cs[0], other));
        }
        domain.insert(p, d);
    }

    let mut assigned: BTreeMap<usize, usize> = BTreeMap::new();
    loop {
        let mut changed = false;

        // naked singles
        let singles: Vec<(usize, usize)> = domain
            .iter()
            .filter(|(p, d)| d.len() == 1 && !assigned.contains_key(p))
            .map(|(&p, d)| (p, *d.iter().next().unwrap()))
            .collect();
        for (p, x) in singles {
            if let Some((&q, _)) = assigned.iter().find(|(_, &v)| v == x) {
                return Err(conflict(by_pos[&p][0], by_pos[&q][0]));
            }
            assigned.insert(p, x);
            changed = true;
            for (&q, dq) in domain.iter_mut() {
                if q != p && dq.remove(&x) && dq.is_empty() {
                    return Err(conflict(by_pos[&p][0], by_pos[&q][0]));
                }
            }
        }

        // columns forced onto a single position of a check
        for (ci, c) in constraints.iter().enumerate() {
            for &x in &c.columns {
                let holders: Vec<usize> = c.positions.iter().copied().filter(|p| domain[p].contains(&x)).collect();
                match holders.as_slice() {
                    [] => return Err(conflict(ci, ci)),
                    [p] if domain[p].len() > 1 => {
                        domain.insert(*p, BTreeSet::from([x]));
                        changed = true;
                    }
                    _ => {}
                }
            }
        }
        if changed {
            continue;
        }

        // exhaustive bijections per check
        for (ci, c) in constraints.iter().enumerate() {
            if c.positions.iter().all(|p| domain[p].len() == 1) {
                continue;
            }
            let mut feasible: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); c.positions.len()];
            let mut stack = Vec::with_capacity(c.positions.len());
            let mut any = false;
            enumerate_bijections(c, &domain, &mut stack, &mut |assignment| {
                any = true;
                for (k, &x) in assignment.iter().enumerate() {
                    feasible[k].insert(x);
                }
            });
            if !any {
                let p = c.positions[0];
                let other = by_pos[&p].iter().copied().find(|&o| o != ci).unwrap_or(ci);
                return Err(conflict(ci, other));
            }
            for (k, &p) in c.positions.iter().enumerate() {
                if feasible[k].len() < domain[&p].len() {
                    domain.insert(p, feasible[k].clone());
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }

    for (p, d) in domain {
        if d.len() == 1 {
            out.resolved[p] = d.iter().next().copied();
            out.provenance[p] = Some(constraints[by_pos[&p][0]].source);
        } else {
            out.domains.insert(p, d.into_iter().collect());
        }
    }
    Ok(out)
}

fn enumerate_bijections(
    c: &Constraint,
    domain: &BTreeMap<usize, BTreeSet<usize>>,
    stack: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    let k = stack.len();
    if k == c.positions.len() {
        visit(stack);
        return;
    }
    for &x in &domain[&c.positions[k]] {
        if c.columns.contains(&x) && !stack.contains(&x) {
            stack.push(x);
            enumerate_bijections(c, domain, stack, visit);
            stack.pop();
        }
    }
}

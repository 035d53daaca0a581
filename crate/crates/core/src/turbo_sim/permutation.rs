use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;

/// Interleaver as a bijection on `0..n`.
///
/// Convention: the second encoder reads `x[perm.get(i)]` at time `i`, so the
/// permuted stream is `i -> X_{Π(i)}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self, SimError> {
        let mut seen = vec![false; map.len()];
        for &v in &map {
            if v >= map.len() || std::mem::replace(&mut seen[v], true) {
                return Err(SimError::InvalidPermutation(format!("value {v} repeated or out of range")));
            }
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(rng);
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v] = i;
        }
        Self(inv)
    }

    /// `out[i] = x[Π(i)]`.
    pub fn apply<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.0.iter().map(|&j| x[j]).collect()
    }

    /// One `"i π(i)"` line per index.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.0.len() * 10);
        for (i, v) in self.0.iter().enumerate() {
            let _ = writeln!(s, "{i} {v}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, SimError> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || SimError::InvalidPermutation(format!("line {}: {line:?}", lineno + 1));
            let mut it = line.split_whitespace();
            let i: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let v: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if it.next().is_some() {
                return Err(bad());
            }
            pairs.push((i, v));
        }
        let mut map = vec![usize::MAX; pairs.len()];
        for (i, v) in pairs {
            if i >= map.len() || map[i] != usize::MAX {
                return Err(SimError::InvalidPermutation(format!("index {i} repeated or out of range")));
            }
            map[i] = v;
        }
        Self::new(map)
    }

    pub fn save(&self, path: &Path) -> Result<(), SimError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = SimError;
    fn try_from(v: Vec<usize>) -> Result<Self, SimError> {
        Self::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.0
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SimError;

/// Periodic keep/erase pattern; `1` keeps a position, `0` erases it.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PunctureMask {
    pattern: Vec<bool>,
}

impl PunctureMask {
    /// Longest period that fits the fixed dataset header.
    pub const MAX_PERIOD: usize = 64;

    pub fn new(pattern: Vec<bool>) -> Result<Self, SimError> {
        if pattern.is_empty() || pattern.len() > Self::MAX_PERIOD {
            return Err(SimError::InvalidMask(format!("period {} not in 1..=64", pattern.len())));
        }
        if !pattern.iter().any(|&b| b) {
            return Err(SimError::InvalidMask("all-zero mask erases everything".into()));
        }
        Ok(Self { pattern })
    }

    pub fn all_ones() -> Self {
        Self { pattern: vec![true] }
    }

    pub fn period(&self) -> usize {
        self.pattern.len()
    }

    #[inline]
    pub fn keeps(&self, index: usize) -> bool {
        self.pattern[index % self.pattern.len()]
    }

    pub fn is_identity(&self) -> bool {
        self.pattern.iter().all(|&b| b)
    }

    /// Packs the pattern in a `u64`, position 0 in bit 0.
    pub fn to_bits(&self) -> u64 {
        self.pattern.iter().enumerate().fold(0, |acc, (i, &b)| acc | (b as u64) << i)
    }

    pub fn from_bits(bits: u64, period: usize) -> Result<Self, SimError> {
        Self::new((0..period).map(|i| (bits >> i) & 1 == 1).collect())
    }
}

/// Marks positions erased by `mask` as `None`.
pub fn puncture<T: Copy>(stream: &[T], mask: &PunctureMask) -> Vec<Option<T>> {
    stream.iter().enumerate().map(|(i, &v)| mask.keeps(i).then_some(v)).collect()
}

impl fmt::Display for PunctureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.pattern.iter().try_for_each(|&b| f.write_str(if b { "1" } else { "0" }))
    }
}

impl fmt::Debug for PunctureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PunctureMask({self})")
    }
}

impl FromStr for PunctureMask {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let pattern = s
            .trim()
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                _ => Err(SimError::InvalidMask(format!("unexpected character {c:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(pattern)
    }
}

impl Serialize for PunctureMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PunctureMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_mask() {
        let s = [1.0, -2.0, 3.0];
        assert_eq!(puncture(&s, &PunctureMask::all_ones()), vec![Some(1.0), Some(-2.0), Some(3.0)]);
    }

    #[test]
    fn half_rate_pattern() {
        let mask: PunctureMask = "10".parse().unwrap();
        let s: Vec<u8> = (0..10).collect();
        let out = puncture(&s, &mask);
        let kept: Vec<u8> = out.iter().flatten().copied().collect();
        assert_eq!(kept, vec![0, 2, 4, 6, 8]);
        assert_eq!(out.len(), 10);
    }

    #[test]
    fn rejects_degenerate_masks() {
        assert!("00".parse::<PunctureMask>().is_err());
        assert!("".parse::<PunctureMask>().is_err());
        assert!("1x".parse::<PunctureMask>().is_err());
        assert!(PunctureMask::new(vec![true; 65]).is_err());
    }

    #[test]
    fn bits_round_trip() {
        let m: PunctureMask = "1101".parse().unwrap();
        assert_eq!(PunctureMask::from_bits(m.to_bits(), m.period()).unwrap(), m);
    }
}

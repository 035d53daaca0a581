//! Recursive convolutional encoders `P/Q` and their trellis realization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SimError;
use crate::gf2poly::BinPoly;

/// Largest supported encoder memory; trellises have `2^m` states.
pub const MAX_MEMORY: usize = 16;

/// A rate-1 recursive convolutional encoder with transfer function `P(D)/Q(D)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EncoderSpec {
    p: BinPoly,
    q: BinPoly,
}

impl EncoderSpec {
    pub fn new(p: BinPoly, q: BinPoly) -> Result<Self, SimError> {
        if !q.coeff(0) {
            return Err(SimError::InvalidEncoder(format!("denominator {q} has zero constant term")));
        }
        let spec = Self { p, q };
        if spec.memory() > MAX_MEMORY {
            return Err(SimError::InvalidEncoder(format!("memory {} exceeds {MAX_MEMORY}", spec.memory())));
        }
        Ok(spec)
    }

    pub fn numerator(&self) -> &BinPoly {
        &self.p
    }

    pub fn denominator(&self) -> &BinPoly {
        &self.q
    }

    /// `m = max(deg P, deg Q)`.
    pub fn memory(&self) -> usize {
        self.p.degree().unwrap_or(0).max(self.q.degree().unwrap_or(0))
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory()
    }

    /// Whether the current parity bit depends on the current information bit,
    /// which the entropy distinguisher needs.
    pub fn has_direct_term(&self) -> bool {
        self.p.coeff(0) && self.q.coeff(0)
    }

    /// First `len` coefficients of the formal power series `P/Q`.
    pub fn impulse_response(&self, len: usize) -> Vec<u8> {
        let mut x = vec![0u8; len];
        if len > 0 {
            x[0] = 1;
        }
        conv_encode(&x, self)
    }
}

impl fmt::Display for EncoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl fmt::Debug for EncoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EncoderSpec({self})")
    }
}

impl FromStr for EncoderSpec {
    type Err = SimError;

    /// Parses `"1+D^2/1+D+D^2"`; the single `/` separates numerator from denominator.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (p, q) = s
            .split_once('/')
            .ok_or_else(|| SimError::InvalidEncoder(format!("expected P/Q, got {s:?}")))?;
        let p = p.trim().trim_matches(|c| c == '(' || c == ')').parse()?;
        let q = q.trim().trim_matches(|c| c == '(' || c == ')').parse()?;
        Self::new(p, q)
    }
}

impl Serialize for EncoderSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EncoderSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Encodes `x` from the all-zero state, truncating the series `(P/Q)·X` to
/// the input length. Uses the direct recurrence `Q·Y = P·X`.
pub fn conv_encode(x: &[u8], enc: &EncoderSpec) -> Vec<u8> {
    let p = enc.p.support();
    let q: Vec<usize> = enc.q.support().into_iter().filter(|&k| k > 0).collect();
    let mut y = vec![0u8; x.len()];
    for t in 0..x.len() {
        let mut bit = 0u8;
        for &k in &p {
            if k <= t {
                bit ^= x[t - k];
            }
        }
        for &k in &q {
            if k <= t {
                bit ^= y[t - k];
            }
        }
        y[t] = bit & 1;
    }
    y
}

/// State machine realization of `P/Q` in controller form.
///
/// The state packs the last `m` values of the feedback register,
/// `w[t-1]` in bit 0 up to `w[t-m]` in bit `m-1`, where
/// `w[t] = x[t] + sum_{k>=1} q_k w[t-k]` and the output is
/// `y[t] = sum_k p_k w[t-k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trellis {
    memory: usize,
    next: Vec<[u32; 2]>,
    out: Vec<[u8; 2]>,
}

impl Trellis {
    pub fn new(enc: &EncoderSpec) -> Self {
        let m = enc.memory();
        let states = 1usize << m;
        let pc = enc.p.coeffs();
        let qc = enc.q.coeffs();
        let p = |k: usize| pc.get(k).copied().unwrap_or(0);
        let q = |k: usize| qc.get(k).copied().unwrap_or(0);
        let mask = states - 1;
        let mut next = Vec::with_capacity(states);
        let mut out = Vec::with_capacity(states);
        for s in 0..states {
            let past = |k: usize| ((s >> (k - 1)) & 1) as u8;
            let feedback = (1..=m).fold(0u8, |acc, k| acc ^ (q(k) & past(k)));
            let tail = (1..=m).fold(0u8, |acc, k| acc ^ (p(k) & past(k)));
            let mut nx = [0u32; 2];
            let mut ox = [0u8; 2];
            for b in 0..2u8 {
                let w = b ^ feedback;
                ox[b as usize] = (p(0) & w) ^ tail;
                nx[b as usize] = if m == 0 { 0 } else { (((s << 1) | w as usize) & mask) as u32 };
            }
            next.push(nx);
            out.push(ox);
        }
        Self { memory: m, next, out }
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn num_states(&self) -> usize {
        self.next.len()
    }

    #[inline]
    pub fn next_state(&self, state: usize, input: u8) -> usize {
        self.next[state][input as usize] as usize
    }

    #[inline]
    pub fn output(&self, state: usize, input: u8) -> u8 {
        self.out[state][input as usize]
    }

    /// Runs the state machine from the zero state.
    pub fn encode(&self, x: &[u8]) -> Vec<u8> {
        let mut s = 0;
        x.iter()
            .map(|&b| {
                let y = self.output(s, b);
                s = self.next_state(s, b);
                y
            })
            .collect()
    }
}

pub fn make_trellis(enc: &EncoderSpec) -> Trellis {
    Trellis::new(enc)
}

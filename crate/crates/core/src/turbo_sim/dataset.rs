//! Intercepted datasets and their binary file format.
//!
//! Layout (all integers and floats little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 8    | magic `TRBODSET`                        |
//! | 8      | 4    | version (`u32`, currently 1)            |
//! | 12     | 4    | reserved, zero                          |
//! | 16     | 8    | blocks `M` (`u64`)                      |
//! | 24     | 8    | block length `N` (`u64`)                |
//! | 32     | 8    | sigma (`f64`)                           |
//! | 40     | 8    | seed (`u64`)                            |
//! | 48     | 4    | Z puncturing period (`u32`, 1..=64)     |
//! | 52     | 4    | reserved, zero                          |
//! | 56     | 8    | Z puncturing pattern bits (`u64`)       |
//! | 64     | 8MN  | X soft values, row-major (`f64`)        |
//! | ...    | 8MN  | Z soft values, row-major (`f64`)        |
//!
//! Erased Z positions are stored as `0.0`.

use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use super::{channel, turbo_encode, PunctureMask, SimError, TurboSpec};
use crate::seed;

pub const DATASET_MAGIC: &[u8; 8] = b"TRBODSET";
pub const DATASET_VERSION: u32 = 1;
const HEADER_LEN: usize = 64;

/// `M` noisy intercepted blocks of `(X, Z)` soft values.
#[derive(Clone, Debug, PartialEq)]
pub struct InterceptedDataset {
    m_blocks: usize,
    n: usize,
    sigma: f64,
    tau: f64,
    seed: u64,
    z_mask: PunctureMask,
    x: Vec<f64>,
    z: Vec<f64>,
}

impl InterceptedDataset {
    pub fn from_parts(
        m_blocks: usize,
        n: usize,
        sigma: f64,
        seed: u64,
        z_mask: PunctureMask,
        x: Vec<f64>,
        z: Vec<f64>,
    ) -> Result<Self, SimError> {
        let tau = channel::tau_from_sigma(sigma)?;
        if n == 0 {
            return Err(SimError::InvalidDataset("block length must be at least 1".into()));
        }
        for (name, v) in [("X", &x), ("Z", &z)] {
            if v.len() != m_blocks * n {
                return Err(SimError::LengthMismatch { expected: m_blocks * n, actual: v.len() });
            }
            if let Some(index) = v.iter().position(|f| !f.is_finite()) {
                return Err(SimError::NonFinite { stream: name, index });
            }
        }
        Ok(Self { m_blocks, n, sigma, tau, seed, z_mask, x, z })
    }

    pub fn blocks(&self) -> usize {
        self.m_blocks
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn z_mask(&self) -> &PunctureMask {
        &self.z_mask
    }

    #[inline]
    pub fn z_erased(&self, i: usize) -> bool {
        !self.z_mask.keeps(i)
    }

    pub fn x_row(&self, block: usize) -> &[f64] {
        &self.x[block * self.n..(block + 1) * self.n]
    }

    pub fn z_row(&self, block: usize) -> &[f64] {
        &self.z[block * self.n..(block + 1) * self.n]
    }

    #[inline]
    pub fn x_at(&self, block: usize, i: usize) -> f64 {
        self.x[block * self.n + i]
    }

    #[inline]
    pub fn z_at(&self, block: usize, i: usize) -> f64 {
        self.z[block * self.n + i]
    }

    /// Keeps only the first `m` blocks.
    pub fn truncated(&self, m: usize) -> Self {
        let m = m.min(self.m_blocks);
        Self {
            m_blocks: m,
            x: self.x[..m * self.n].to_vec(),
            z: self.z[..m * self.n].to_vec(),
            ..self.clone()
        }
    }

    pub fn hard_decisions(&self) -> HardDecisions {
        HardDecisions::new(self)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 16 * self.x.len());
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&(self.m_blocks as u64).to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&self.sigma.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.z_mask.period() as u32).to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&self.z_mask.to_bits().to_le_bytes());
        for v in self.x.iter().chain(&self.z) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SimError> {
        if bytes.len() < HEADER_LEN {
            if bytes.len() >= 8 && &bytes[..8] != DATASET_MAGIC {
                return Err(SimError::BadMagic);
            }
            return Err(SimError::Truncated { needed: HEADER_LEN, found: bytes.len() });
        }
        if &bytes[..8] != DATASET_MAGIC {
            return Err(SimError::BadMagic);
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != DATASET_VERSION {
            return Err(SimError::VersionMismatch { found: version, expected: DATASET_VERSION });
        }
        let m_blocks = u64_at(16) as usize;
        let n = u64_at(24) as usize;
        let sigma = f64::from_bits(u64_at(32));
        let seed = u64_at(40);
        let period = u32_at(48) as usize;
        let z_mask = PunctureMask::from_bits(u64_at(56), period)?;
        let count = m_blocks
            .checked_mul(n)
            .ok_or_else(|| SimError::InvalidDataset("block count overflow".into()))?;
        let needed = HEADER_LEN + 16 * count;
        if bytes.len() < needed {
            return Err(SimError::Truncated { needed, found: bytes.len() });
        }
        if bytes.len() > needed {
            return Err(SimError::InvalidDataset(format!("{} trailing bytes", bytes.len() - needed)));
        }
        let floats: Vec<f64> = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (x, z) = floats.split_at(count);
        Self::from_parts(m_blocks, n, sigma, seed, z_mask, x.to_vec(), z.to_vec())
    }
}

pub fn save_dataset(path: &Path, ds: &InterceptedDataset) -> Result<(), SimError> {
    fs::write(path, ds.to_bytes())?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<InterceptedDataset, SimError> {
    InterceptedDataset::from_bytes(&fs::read(path)?)
}

/// Simulates `m_blocks` uniformly random information blocks through the turbo
/// code and the Gaussian channel.
///
/// Block `b` draws its information bits and noise from the stream
/// `derive(derive(seed, BLOCKS), b)`, so any block can be regenerated alone.
pub fn generate_dataset(spec: &TurboSpec, m_blocks: usize, sigma: f64, seed: u64) -> Result<InterceptedDataset, SimError> {
    channel::check_sigma(sigma)?;
    let n = spec.block_len();
    let mask = spec.puncture_z.clone().unwrap_or_else(PunctureMask::all_ones);
    let base = seed::derive(seed, seed::label::BLOCKS);
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..m_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed::rng(seed::derive(base, b as u64));
            let u: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
            let cw = turbo_encode(&u, spec)?;
            let x = channel::channel_awgn_with(&cw.x, sigma, &mut rng)?;
            let mut z = channel::channel_awgn_with(&cw.z, sigma, &mut rng)?;
            for (i, v) in z.iter_mut().enumerate() {
                if !mask.keeps(i) {
                    *v = 0.0;
                }
            }
            Ok((x, z))
        })
        .collect::<Result<_, SimError>>()?;
    let mut x = Vec::with_capacity(m_blocks * n);
    let mut z = Vec::with_capacity(m_blocks * n);
    for (rx, rz) in rows {
        x.extend(rx);
        z.extend(rz);
    }
    InterceptedDataset::from_parts(m_blocks, n, sigma, seed, mask, x, z)
}

/// Hard-decided dataset stored column-wise: each of the `2N` columns (X
/// columns `0..N`, then Z columns `N..2N`) is a packed bitset over the `M`
/// blocks.
#[derive(Clone, Debug)]
pub struct HardDecisions {
    m_blocks: usize,
    n: usize,
    words: usize,
    tau: f64,
    columns: Vec<u64>,
    z_erased: Vec<bool>,
}

impl HardDecisions {
    fn new(ds: &InterceptedDataset) -> Self {
        let (m, n) = (ds.blocks(), ds.block_len());
        let words = m.div_ceil(64).max(1);
        let mut columns = vec![0u64; 2 * n * words];
        for b in 0..m {
            for i in 0..n {
                if channel::hard_bit(ds.x_at(b, i)) == 1 {
                    columns[i * words + b / 64] |= 1 << (b % 64);
                }
                if !ds.z_erased(i) && channel::hard_bit(ds.z_at(b, i)) == 1 {
                    columns[(n + i) * words + b / 64] |= 1 << (b % 64);
                }
            }
        }
        Self { m_blocks: m, n, words, tau: ds.tau(), columns, z_erased: (0..n).map(|i| ds.z_erased(i)).collect() }
    }

    /// Builds hard decisions directly from bit rows (`x_rows[b][i]`).
    pub fn from_bits(x_rows: &[Vec<u8>], z_rows: &[Vec<u8>], tau: f64) -> Self {
        let m = x_rows.len();
        let n = x_rows.first().map_or(0, Vec::len);
        let words = m.div_ceil(64).max(1);
        let mut columns = vec![0u64; 2 * n * words];
        for b in 0..m {
            for i in 0..n {
                columns[i * words + b / 64] |= ((x_rows[b][i] & 1) as u64) << (b % 64);
                columns[(n + i) * words + b / 64] |= ((z_rows[b][i] & 1) as u64) << (b % 64);
            }
        }
        Self { m_blocks: m, n, words, tau, columns, z_erased: vec![false; n] }
    }

    pub fn blocks(&self) -> usize {
        self.m_blocks
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn words_per_column(&self) -> usize {
        self.words
    }

    /// Packed column `c` in `0..2N`.
    #[inline]
    pub fn column(&self, c: usize) -> &[u64] {
        &self.columns[c * self.words..(c + 1) * self.words]
    }

    #[inline]
    pub fn bit(&self, block: usize, c: usize) -> u8 {
        ((self.columns[c * self.words + block / 64] >> (block % 64)) & 1) as u8
    }

    pub fn z_erased(&self, i: usize) -> bool {
        self.z_erased[i]
    }

    /// Number of blocks on which the XOR of `cols` is zero.
    pub fn satisfied_count(&self, cols: &[usize]) -> usize {
        let mut violated = 0;
        for w in 0..self.words {
            let mut acc = 0u64;
            for &c in cols {
                acc ^= self.columns[c * self.words + w];
            }
            if w == self.words - 1 && self.m_blocks % 64 != 0 {
                acc &= (1u64 << (self.m_blocks % 64)) - 1;
            }
            violated += acc.count_ones() as usize;
        }
        self.m_blocks - violated
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::turbo_sim::{EncoderSpec, Permutation};

    fn spec(n: usize) -> TurboSpec {
        let e: EncoderSpec = "1+D^2/1+D+D^2".parse().unwrap();
        TurboSpec::new(Permutation::random(n, &mut seed::rng(5)), e.clone(), e).unwrap()
    }

    #[test]
    fn byte_round_trip() {
        let ds = generate_dataset(&spec(20).with_puncture_z("10".parse().unwrap()), 7, 0.7, 42).unwrap();
        assert_eq!(InterceptedDataset::from_bytes(&ds.to_bytes()).unwrap(), ds);
        assert!(ds.z_erased(1) && !ds.z_erased(2));
        assert_eq!(ds.z_at(3, 1), 0.0);
    }

    #[test]
    fn file_round_trip_and_regeneration() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.bin");
        let s = spec(33);
        let ds = generate_dataset(&s, 12, 0.5, 99).unwrap();
        save_dataset(&path, &ds).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded, ds);
        assert_eq!(loaded.seed(), 99);
        assert_eq!(loaded.sigma().to_bits(), 0.5f64.to_bits());
        assert_eq!(generate_dataset(&s, 12, 0.5, 99).unwrap(), loaded);
        assert_ne!(generate_dataset(&s, 12, 0.5, 100).unwrap(), loaded);
    }

    #[test]
    fn structured_load_errors() {
        let ds = generate_dataset(&spec(10), 3, 0.5, 1).unwrap();
        let bytes = ds.to_bytes();
        assert!(matches!(InterceptedDataset::from_bytes(&bytes[..bytes.len() - 3]), Err(SimError::Truncated { .. })));
        assert!(matches!(InterceptedDataset::from_bytes(&bytes[..20]), Err(SimError::Truncated { .. })));
        let mut v = bytes.clone();
        v[8] = 2;
        assert!(matches!(InterceptedDataset::from_bytes(&v), Err(SimError::VersionMismatch { found: 2, .. })));
        let mut v = bytes.clone();
        v[0] = b'X';
        assert!(matches!(InterceptedDataset::from_bytes(&v), Err(SimError::BadMagic)));
        let mut v = bytes.clone();
        v[64..72].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(InterceptedDataset::from_bytes(&v), Err(SimError::NonFinite { stream: "X", index: 0 })));
    }

    #[test]
    fn satisfied_count_matches_rowwise() {
        let ds = generate_dataset(&spec(16), 130, 0.9, 3).unwrap();
        let hd = ds.hard_decisions();
        let cols = [0, 5, 16 + 3];
        let direct = (0..130)
            .filter(|&b| cols.iter().fold(0, |a, &c| a ^ hd.bit(b, c)) == 0)
            .count();
        assert_eq!(hd.satisfied_count(&cols), direct);
    }
}

//! Binary polynomials in the delay operator `D`.
//!
//! A [`BinPoly`] stores its coefficients as packed 64-bit limbs, coefficient
//! of `D^0` in bit 0 of the first limb. The representation is always
//! canonical (no trailing zero limbs), so structural equality is polynomial
//! equality and the zero polynomial has no limbs at all.
//!
//! ```
//! use turbo_recon::gf2poly::BinPoly;
//!
//! let p: BinPoly = "1+D^2+D^3".parse().unwrap();
//! let q: BinPoly = "1+D+D^2".parse().unwrap();
//! assert_eq!(p.weight(), 3);
//! assert_eq!(p.degree(), Some(3));
//! assert_eq!((&q * &q).to_string(), "1+D^2+D^4");
//! ```

use std::cmp::Ordering;
use std::fmt;
use std::ops::{BitXor, BitXorAssign, Mul};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("malformed polynomial term {term:?} in {input:?}")]
    BadTerm { input: String, term: String },
    #[error("empty polynomial string")]
    Empty,
}

/// A polynomial over GF(2) in the delay variable `D`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BinPoly {
    limbs: Vec<u64>,
}

impl BinPoly {
    pub fn zero() -> Self {
        Self { limbs: Vec::new() }
    }

    pub fn one() -> Self {
        Self { limbs: vec![1] }
    }

    /// `D^k`.
    pub fn monomial(k: usize) -> Self {
        let mut limbs = vec![0u64; k / 64 + 1];
        limbs[k / 64] = 1 << (k % 64);
        Self { limbs }
    }

    /// Builds a polynomial from a bit mask, bit `i` being the coefficient of `D^i`.
    pub fn from_mask(mask: u128) -> Self {
        Self::from_limbs(vec![mask as u64, (mask >> 64) as u64])
    }

    /// Builds a polynomial from its exponents. Repeated exponents cancel.
    pub fn from_exponents<I: IntoIterator<Item = usize>>(exps: I) -> Self {
        let mut p = Self::zero();
        for e in exps {
            p.toggle(e);
        }
        p
    }

    /// Builds a polynomial from a coefficient sequence, `D^0` first.
    pub fn from_coeffs(bits: &[u8]) -> Self {
        Self::from_exponents(bits.iter().enumerate().filter(|(_, &b)| b & 1 == 1).map(|(i, _)| i))
    }

    fn from_limbs(mut limbs: Vec<u64>) -> Self {
        while limbs.last() == Some(&0) {
            limbs.pop();
        }
        Self { limbs }
    }

    fn toggle(&mut self, k: usize) {
        let w = k / 64;
        if self.limbs.len() <= w {
            self.limbs.resize(w + 1, 0);
        }
        self.limbs[w] ^= 1 << (k % 64);
        self.normalize();
    }

    fn normalize(&mut self) {
        while self.limbs.last() == Some(&0) {
            self.limbs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.limbs == [1]
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let top = *self.limbs.last()?;
        Some((self.limbs.len() - 1) * 64 + 63 - top.leading_zeros() as usize)
    }

    /// Number of nonzero coefficients.
    pub fn weight(&self) -> usize {
        self.limbs.iter().map(|l| l.count_ones() as usize).sum()
    }

    pub fn coeff(&self, k: usize) -> bool {
        self.limbs.get(k / 64).is_some_and(|l| (l >> (k % 64)) & 1 == 1)
    }

    /// Exponents of the nonzero coefficients in increasing order.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (w, &limb) in self.limbs.iter().enumerate() {
            let mut l = limb;
            while l != 0 {
                let b = l.trailing_zeros() as usize;
                out.push(w * 64 + b);
                l &= l - 1;
            }
        }
        out
    }

    /// Coefficient sequence `D^0` first, of length `degree + 1`.
    pub fn coeffs(&self) -> Vec<u8> {
        match self.degree() {
            None => Vec::new(),
            Some(d) => (0..=d).map(|k| self.coeff(k) as u8).collect(),
        }
    }

    /// Bit mask of the polynomial when it fits in 128 bits.
    pub fn to_mask(&self) -> Option<u128> {
        match self.limbs.len() {
            0 => Some(0),
            1 => Some(self.limbs[0] as u128),
            2 => Some(self.limbs[0] as u128 | (self.limbs[1] as u128) << 64),
            _ => None,
        }
    }

    /// Multiplication by `D^k`.
    pub fn shl(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let (words, bits) = (k / 64, k % 64);
        let mut limbs = vec![0u64; self.limbs.len() + words + 1];
        for (i, &l) in self.limbs.iter().enumerate() {
            limbs[i + words] ^= l << bits;
            if bits != 0 {
                limbs[i + words + 1] ^= l >> (64 - bits);
            }
        }
        Self::from_limbs(limbs)
    }

    /// Carry-less product.
    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut limbs = vec![0u64; self.limbs.len() + other.limbs.len()];
        for (i, &a) in self.limbs.iter().enumerate() {
            let mut a = a;
            while a != 0 {
                let bit = a.trailing_zeros() as usize;
                a &= a - 1;
                for (j, &b) in other.limbs.iter().enumerate() {
                    limbs[i + j] ^= b << bit;
                    if bit != 0 {
                        limbs[i + j + 1] ^= b >> (64 - bit);
                    }
                }
            }
        }
        Self::from_limbs(limbs)
    }

    /// Euclidean division: `self = q * divisor + r` with `deg r < deg divisor`.
    pub fn divrem(&self, divisor: &Self) -> Result<(Self, Self), PolyError> {
        let db = divisor.degree().ok_or(PolyError::DivisionByZero)?;
        let mut rem = self.clone();
        let mut quot = Self::zero();
        while let Some(dr) = rem.degree() {
            if dr < db {
                break;
            }
            let s = dr - db;
            quot.toggle(s);
            rem ^= &divisor.shl(s);
        }
        Ok((quot, rem))
    }

    /// Quotient when `divisor` divides `self` exactly.
    pub fn exact_div(&self, divisor: &Self) -> Option<Self> {
        match self.divrem(divisor) {
            Ok((q, r)) if r.is_zero() => Some(q),
            _ => None,
        }
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).expect("nonzero divisor").1;
            a = b;
            b = r;
        }
        a
    }

    /// Reciprocal polynomial `D^deg p(1/D)`.
    pub fn reciprocal(&self) -> Self {
        match self.degree() {
            None => Self::zero(),
            Some(d) => Self::from_exponents(self.support().into_iter().map(|e| d - e)),
        }
    }

    /// Trial-division irreducibility test; constants are not irreducible.
    pub fn is_irreducible(&self) -> bool {
        let d = match self.degree() {
            None | Some(0) => return false,
            Some(d) => d,
        };
        // factors of degree 1..=d/2 with nonzero constant term, plus D itself
        if !self.coeff(0) {
            return d == 1;
        }
        (1..=d / 2).all(|fd| {
            (0u64..(1 << (fd - 1))).all(|mid| {
                let f = BinPoly::from_mask(1 | (mid as u128) << 1 | 1u128 << fd);
                !self.divrem(&f).expect("nonzero").1.is_zero()
            })
        })
    }
}

/// `(weight, degree)` pair.
pub fn poly_weight_degree(p: &BinPoly) -> (usize, Option<usize>) {
    (p.weight(), p.degree())
}

pub fn poly_mul(a: &BinPoly, b: &BinPoly) -> BinPoly {
    a.mul(b)
}

pub fn poly_divrem(a: &BinPoly, b: &BinPoly) -> Result<(BinPoly, BinPoly), PolyError> {
    a.divrem(b)
}

impl BitXorAssign<&BinPoly> for BinPoly {
    fn bitxor_assign(&mut self, rhs: &BinPoly) {
        if self.limbs.len() < rhs.limbs.len() {
            self.limbs.resize(rhs.limbs.len(), 0);
        }
        for (a, b) in self.limbs.iter_mut().zip(&rhs.limbs) {
            *a ^= b;
        }
        self.normalize();
    }
}

impl BitXor<&BinPoly> for &BinPoly {
    type Output = BinPoly;
    fn bitxor(self, rhs: &BinPoly) -> BinPoly {
        let mut out = self.clone();
        out ^= rhs;
        out
    }
}

impl Mul<&BinPoly> for &BinPoly {
    type Output = BinPoly;
    fn mul(self, rhs: &BinPoly) -> BinPoly {
        BinPoly::mul(self, rhs)
    }
}

impl Ord for BinPoly {
    /// Orders by degree, then lexicographically from the top coefficient.
    fn cmp(&self, other: &Self) -> Ordering {
        self.limbs
            .len()
            .cmp(&other.limbs.len())
            .then_with(|| self.limbs.iter().rev().cmp(other.limbs.iter().rev()))
    }
}

impl PartialOrd for BinPoly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BinPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, e) in self.support().into_iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            match e {
                0 => f.write_str("1")?,
                1 => f.write_str("D")?,
                _ => write!(f, "D^{e}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for BinPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinPoly({self})")
    }
}

impl FromStr for BinPoly {
    type Err = PolyError;

    /// Parses `"1+D^2+D^3"`-style notation. Whitespace is ignored, terms may
    /// appear in any order, and `"0"` is the zero polynomial.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(PolyError::Empty);
        }
        if compact == "0" {
            return Ok(Self::zero());
        }
        let mut p = Self::zero();
        for term in compact.split('+') {
            let bad = || PolyError::BadTerm { input: s.to_string(), term: term.to_string() };
            let exp = match term {
                "1" => 0,
                "D" | "d" => 1,
                t => {
                    let rest = t.strip_prefix("D^").or_else(|| t.strip_prefix("d^")).ok_or_else(bad)?;
                    rest.parse::<usize>().map_err(|_| bad())?
                }
            };
            p.toggle(exp);
        }
        Ok(p)
    }
}

impl Serialize for BinPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BinPoly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

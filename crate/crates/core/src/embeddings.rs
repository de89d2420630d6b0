//! Primes above `p`, the embedding set and its per-prime Frobenius shifts.
//!
//! Embeddings are ordered by prime, then by position, and stored as bits of a
//! `u64`: embedding number `k` in that order is bit `k`.

use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported number of embeddings.
pub const MAX_EMBEDDINGS: usize = 64;

/// The rational prime `p` with the residue degrees of the primes above it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrimeProfile {
    p: u64,
    degrees: Vec<usize>,
    offsets: Vec<usize>,
    g: usize,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl PrimeProfile {
    /// Profile with an odd prime `p ≥ 3`.
    pub fn new(p: u64, degrees: Vec<usize>) -> Result<Self> {
        if p < 3 {
            return Err(Error::InvalidProfile(format!("p = {p} must be at least 3")));
        }
        Self::with_any_prime(p, degrees)
    }

    /// Profile that also admits `p = 2`, used by negative controls.
    pub fn with_any_prime(p: u64, degrees: Vec<usize>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidProfile(format!("{p} is not prime")));
        }
        if degrees.is_empty() {
            return Err(Error::InvalidProfile("no primes above p".into()));
        }
        if degrees.iter().any(|&f| f == 0) {
            return Err(Error::InvalidProfile("residue degrees must be positive".into()));
        }
        let g: usize = degrees.iter().sum();
        if g > MAX_EMBEDDINGS {
            return Err(Error::InvalidProfile(format!(
                "g = {g} exceeds {MAX_EMBEDDINGS}"
            )));
        }
        let mut offsets = Vec::with_capacity(degrees.len());
        let mut acc = 0;
        for &f in &degrees {
            offsets.push(acc);
            acc += f;
        }
        Ok(Self { p, degrees, offsets, g })
    }

    /// Parses `"p=3;f=2,1"`, accepting `p = 2` only when `allow_two` is set.
    pub fn parse(s: &str, allow_two: bool) -> Result<Self> {
        let bad = || Error::InvalidProfile(format!("expected \"p=P;f=F1,F2,..\", got {s:?}"));
        let mut parts = s.trim().split(';');
        let p_part = parts.next().ok_or_else(bad)?.trim();
        let f_part = parts.next().ok_or_else(bad)?.trim();
        if parts.next().is_some() {
            return Err(bad());
        }
        let p: u64 = p_part
            .strip_prefix("p=")
            .ok_or_else(bad)?
            .trim()
            .parse()
            .map_err(|_| bad())?;
        let degrees = f_part
            .strip_prefix("f=")
            .ok_or_else(bad)?
            .split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        if allow_two {
            Self::with_any_prime(p, degrees)
        } else {
            Self::new(p, degrees)
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn num_primes(&self) -> usize {
        self.degrees.len()
    }

    pub fn residue_degree(&self, prime: usize) -> Result<usize> {
        self.degrees.get(prime).copied().ok_or(Error::UnknownPrime(prime))
    }

    pub fn max_residue_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    /// Position of an embedding in the canonical order.
    pub fn index(&self, e: EmbeddingIndex) -> usize {
        self.offsets[e.prime] + e.position
    }

    pub fn embedding(&self, k: usize) -> EmbeddingIndex {
        let prime = match self.offsets.binary_search(&k) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        EmbeddingIndex { prime, position: k - self.offsets[prime] }
    }

    pub fn embeddings(&self) -> impl Iterator<Item = EmbeddingIndex> + '_ {
        (0..self.g).map(move |k| self.embedding(k))
    }

    pub fn checked_embedding(&self, prime: usize, position: usize) -> Result<EmbeddingIndex> {
        let f = self.residue_degree(prime)?;
        if position >= f {
            return Err(Error::OutOfRange(format!("position {position} in prime {prime}")));
        }
        Ok(EmbeddingIndex { prime, position })
    }

    pub fn prime_of(&self, k: usize) -> usize {
        self.embedding(k).prime
    }

    /// `σ^k` applied to the embedding with canonical index `idx`.
    pub fn sigma_pow(&self, idx: usize, k: i64) -> usize {
        let e = self.embedding(idx);
        let f = self.degrees[e.prime] as i64;
        let pos = (e.position as i64 + k).rem_euclid(f) as usize;
        self.offsets[e.prime] + pos
    }

    pub fn sigma(&self, idx: usize) -> usize {
        self.sigma_pow(idx, 1)
    }

    pub fn sigma_inv(&self, idx: usize) -> usize {
        self.sigma_pow(idx, -1)
    }

    pub fn empty(&self) -> EmbeddingSubset {
        EmbeddingSubset { bits: 0, g: self.g as u8 }
    }

    pub fn full(&self) -> EmbeddingSubset {
        EmbeddingSubset { bits: full_mask(self.g), g: self.g as u8 }
    }

    pub fn subset_from_bits(&self, bits: u64) -> Result<EmbeddingSubset> {
        if bits & !full_mask(self.g) != 0 {
            return Err(Error::OutOfRange(format!("bits {bits:#x} outside the embedding set")));
        }
        Ok(EmbeddingSubset { bits, g: self.g as u8 })
    }

    pub fn subset_of<I: IntoIterator<Item = usize>>(&self, indices: I) -> Result<EmbeddingSubset> {
        let mut bits = 0u64;
        for k in indices {
            if k >= self.g {
                return Err(Error::OutOfRange(format!("embedding {k}")));
            }
            bits |= 1 << k;
        }
        Ok(EmbeddingSubset { bits, g: self.g as u8 })
    }

    /// The block `𝔹_𝔭` of a prime.
    pub fn prime_block(&self, prime: usize) -> Result<EmbeddingSubset> {
        let f = self.residue_degree(prime)?;
        Ok(EmbeddingSubset { bits: full_mask(f) << self.offsets[prime], g: self.g as u8 })
    }

    /// Union of the blocks of the primes in `t`.
    pub fn blocks_of(&self, t: PrimeSet) -> EmbeddingSubset {
        let mut bits = 0;
        for prime in t.iter() {
            if prime < self.num_primes() {
                bits |= full_mask(self.degrees[prime]) << self.offsets[prime];
            }
        }
        EmbeddingSubset { bits, g: self.g as u8 }
    }

    pub fn all_primes(&self) -> PrimeSet {
        PrimeSet(full_mask(self.num_primes()))
    }

    fn check(&self, s: EmbeddingSubset) -> Result<()> {
        if s.g as usize != self.g {
            return Err(Error::ProfileMismatch);
        }
        Ok(())
    }

    fn rotate_blocks(&self, s: EmbeddingSubset, toward_lower: bool) -> EmbeddingSubset {
        let mut out = 0u64;
        for (prime, &f) in self.degrees.iter().enumerate() {
            let off = self.offsets[prime];
            let mask = full_mask(f);
            let block = (s.bits >> off) & mask;
            let rotated = if f == 1 {
                block
            } else if toward_lower {
                ((block >> 1) | (block << (f - 1))) & mask
            } else {
                ((block << 1) | (block >> (f - 1))) & mask
            };
            out |= rotated << off;
        }
        EmbeddingSubset { bits: out, g: s.g }
    }

    /// `ℓ(S)`: `β ∈ ℓ(S)` iff `σβ ∈ S`.
    pub fn shift_left(&self, s: EmbeddingSubset) -> Result<EmbeddingSubset> {
        self.check(s)?;
        Ok(self.rotate_blocks(s, true))
    }

    /// `r(S)`, the inverse of [`Self::shift_left`].
    pub fn shift_right(&self, s: EmbeddingSubset) -> Result<EmbeddingSubset> {
        self.check(s)?;
        Ok(self.rotate_blocks(s, false))
    }

    pub(crate) fn shl(&self, s: EmbeddingSubset) -> EmbeddingSubset {
        self.rotate_blocks(s, true)
    }

    pub(crate) fn shr(&self, s: EmbeddingSubset) -> EmbeddingSubset {
        self.rotate_blocks(s, false)
    }

    /// Every subset of the embedding set, in increasing bit order.
    pub fn subsets(&self) -> impl Iterator<Item = EmbeddingSubset> + '_ {
        let g = self.g as u8;
        (0..=full_mask(self.g)).map(move |bits| EmbeddingSubset { bits, g })
    }

    pub fn format_index(&self, k: usize) -> String {
        self.embedding(k).to_string()
    }

    /// Parses `"prime/position"`.
    pub fn parse_index(&self, s: &str) -> Result<usize> {
        let e: EmbeddingIndex = s.parse()?;
        let e = self.checked_embedding(e.prime, e.position)?;
        Ok(self.index(e))
    }
}

pub(crate) fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl FromStr for PrimeProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, false)
    }
}

impl fmt::Display for PrimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let degs: Vec<String> = self.degrees.iter().map(|d| d.to_string()).collect();
        write!(f, "p={};f={}", self.p, degs.join(","))
    }
}

impl Serialize for PrimeProfile {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("PrimeProfile", 2)?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("f", &self.degrees)?;
        st.end()
    }
}

/// An embedding: a prime together with a position modulo its residue degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EmbeddingIndex {
    pub prime: usize,
    pub position: usize,
}

impl fmt::Display for EmbeddingIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.prime, self.position)
    }
}

impl FromStr for EmbeddingIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected \"prime/position\", got {s:?}"));
        let (a, b) = s.trim().split_once('/').ok_or_else(bad)?;
        Ok(Self {
            prime: a.trim().parse().map_err(|_| bad())?,
            position: b.trim().parse().map_err(|_| bad())?,
        })
    }
}

/// A subset of the embedding set of a profile with `g` embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EmbeddingSubset {
    bits: u64,
    g: u8,
}

impl EmbeddingSubset {
    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn universe(self) -> usize {
        self.g as usize
    }

    pub fn contains(self, k: usize) -> bool {
        k < 64 && self.bits >> k & 1 == 1
    }

    pub fn with(self, k: usize) -> Self {
        Self { bits: self.bits | 1 << k, g: self.g }
    }

    pub fn without(self, k: usize) -> Self {
        Self { bits: self.bits & !(1 << k), g: self.g }
    }

    pub fn complement(self) -> Self {
        Self { bits: !self.bits & full_mask(self.g as usize), g: self.g }
    }

    pub fn union(self, other: Self) -> Self {
        Self { bits: self.bits | other.bits, g: self.g }
    }

    pub fn intersection(self, other: Self) -> Self {
        Self { bits: self.bits & other.bits, g: self.g }
    }

    pub fn difference(self, other: Self) -> Self {
        Self { bits: self.bits & !other.bits, g: self.g }
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.bits;
        (0..64).filter(move |k| bits >> k & 1 == 1)
    }

    /// All subsets of `self`, in increasing bit order.
    pub fn subsets(self) -> impl Iterator<Item = Self> {
        let mask = self.bits;
        let g = self.g;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == mask { None } else { Some((cur.wrapping_sub(mask)) & mask) };
            Some(Self { bits: cur, g })
        })
    }
}

/// A set of primes above `p`, by their index in the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PrimeSet(pub u64);

impl PrimeSet {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn single(prime: usize) -> Self {
        Self(1 << prime)
    }

    pub fn of<I: IntoIterator<Item = usize>>(primes: I) -> Self {
        Self(primes.into_iter().fold(0, |acc, p| acc | 1 << p))
    }

    pub fn contains(self, prime: usize) -> bool {
        prime < 64 && self.0 >> prime & 1 == 1
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn symmetric_difference(self, other: Self) -> Self {
        Self(self.0 ^ other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..64).filter(move |k| bits >> k & 1 == 1)
    }

    /// All subsets, in increasing bit order.
    pub fn subsets(self) -> impl Iterator<Item = Self> {
        let mask = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == mask { None } else { Some((cur.wrapping_sub(mask)) & mask) };
            Some(Self(cur))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile(f: &[usize]) -> PrimeProfile {
        PrimeProfile::new(3, f.to_vec()).unwrap()
    }

    #[test]
    fn shift_left_moves_position_down() {
        let pr = profile(&[3]);
        let s = pr.subset_of([1]).unwrap();
        assert_eq!(pr.shift_left(s).unwrap(), pr.subset_of([0]).unwrap());
        assert_eq!(pr.shift_left(pr.full()).unwrap(), pr.full());
        assert_eq!(pr.shift_left(pr.empty()).unwrap(), pr.empty());
    }

    #[test]
    fn shift_right_moves_position_up() {
        let pr = profile(&[2]);
        let s = pr.subset_of([0]).unwrap();
        assert_eq!(pr.shift_right(s).unwrap(), pr.subset_of([1]).unwrap());
        assert_eq!(pr.shift_right(pr.full()).unwrap(), pr.full());
    }

    #[test]
    fn shift_matches_pointwise_definition() {
        let pr = profile(&[3, 1, 2]);
        for s in pr.subsets() {
            let l = pr.shift_left(s).unwrap();
            for b in 0..pr.g() {
                assert_eq!(l.contains(b), s.contains(pr.sigma(b)));
            }
        }
    }

    #[test]
    fn blocks_partition_the_embeddings() {
        let pr = profile(&[2, 1]);
        let b0 = pr.prime_block(0).unwrap();
        let b1 = pr.prime_block(1).unwrap();
        assert_eq!(b0.len(), 2);
        assert!(b0.intersection(b1).is_empty());
        assert_eq!(b0.union(b1), pr.full());
        assert_eq!(pr.sigma(2), 2);
        assert!(pr.prime_block(2).is_err());
    }

    #[test]
    fn profile_parsing() {
        let pr: PrimeProfile = "p=3;f=2,1,1".parse().unwrap();
        assert_eq!(pr.degrees(), &[2, 1, 1]);
        assert_eq!(pr.to_string(), "p=3;f=2,1,1");
        assert_eq!(serde_json::to_string(&pr).unwrap(), r#"{"p":3,"f":[2,1,1]}"#);
        assert!("p=2;f=2".parse::<PrimeProfile>().is_err());
        assert!(PrimeProfile::parse("p=2;f=2", true).is_ok());
        assert!("p=9;f=1".parse::<PrimeProfile>().is_err());
        assert!("p=3;f=0".parse::<PrimeProfile>().is_err());
        assert!("p=3".parse::<PrimeProfile>().is_err());
        assert!("p=3;f=".parse::<PrimeProfile>().is_err());
    }

    #[test]
    fn subsets_of_a_mask() {
        let pr = profile(&[4]);
        let s = pr.subset_of([0, 2]).unwrap();
        let subs: Vec<u64> = s.subsets().map(|x| x.bits()).collect();
        assert_eq!(subs, vec![0, 1, 4, 5]);
        assert_eq!(pr.empty().subsets().count(), 1);
    }

    #[test]
    fn index_round_trip() {
        let pr = profile(&[2, 3, 1]);
        for k in 0..pr.g() {
            assert_eq!(pr.index(pr.embedding(k)), k);
            assert_eq!(pr.parse_index(&pr.format_index(k)).unwrap(), k);
        }
        assert!(pr.parse_index("0/2").is_err());
    }

    fn profile_strategy() -> impl Strategy<Value = PrimeProfile> {
        prop::collection::vec(1usize..4, 1..4)
            .prop_filter("g <= 8", |f| f.iter().sum::<usize>() <= 8)
            .prop_map(|f| PrimeProfile::new(3, f).unwrap())
    }

    proptest! {
        #[test]
        fn shifts_are_inverse_and_commute_with_complement(pr in profile_strategy(), raw in any::<u64>()) {
            let s = pr.subset_from_bits(raw & full_mask(pr.g())).unwrap();
            let l = pr.shift_left(s).unwrap();
            prop_assert_eq!(pr.shift_right(l).unwrap(), s);
            prop_assert_eq!(pr.shift_left(pr.shift_right(s).unwrap()).unwrap(), s);
            prop_assert_eq!(pr.shift_left(s.complement()).unwrap(), l.complement());
            prop_assert_eq!(l.len(), s.len());
            for prime in 0..pr.num_primes() {
                let b = pr.prime_block(prime).unwrap();
                prop_assert_eq!(pr.shift_left(s.intersection(b)).unwrap().len(), s.intersection(b).len());
                prop_assert!(pr.shift_left(s.intersection(b)).unwrap().is_subset(b));
            }
        }

        #[test]
        fn sigma_has_order_residue_degree(pr in profile_strategy()) {
            for k in 0..pr.g() {
                let f = pr.degrees()[pr.prime_of(k)] as i64;
                prop_assert_eq!(pr.sigma_pow(k, f), k);
                prop_assert_eq!(pr.sigma_inv(pr.sigma(k)), k);
            }
        }
    }
}

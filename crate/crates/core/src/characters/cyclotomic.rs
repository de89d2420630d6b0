//! Exact arithmetic in `ℤ[ζ_m] = ℤ[x]/Φ_m(x)`.
//!
//! Elements of different conductors are combined in the ring of the least
//! common multiple, so roots of unity of any order mix freely.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_integer::Integer;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported `deg Φ_m`.
pub const MAX_CYCLOTOMIC_DEGREE: usize = 1000;

/// `ℤ[x]/Φ_m`.
#[derive(Debug, PartialEq, Eq)]
pub struct CyclotomicRing {
    conductor: u64,
    /// Coefficients of the monic `Φ_m`, constant term first.
    modulus: Vec<i128>,
}

impl CyclotomicRing {
    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    pub fn modulus(&self) -> &[i128] {
        &self.modulus
    }

    /// Remainder of an arbitrary polynomial modulo `Φ_m`.
    fn reduce(&self, mut poly: Vec<i128>) -> Vec<i128> {
        let d = self.degree();
        for top in (d..poly.len()).rev() {
            let c = poly[top];
            if c != 0 {
                for (i, &m) in self.modulus.iter().enumerate() {
                    poly[top - d + i] -= c * m;
                }
            }
        }
        poly.resize(d, 0);
        poly
    }
}

fn poly_div_exact(num: &[i128], den: &[i128]) -> Vec<i128> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let lead = *den.last().expect("nonzero divisor");
    let mut quot = vec![0i128; num.len() - dd];
    for k in (0..quot.len()).rev() {
        let c = rem[k + dd] / lead;
        quot[k] = c;
        for (i, &m) in den.iter().enumerate() {
            rem[k + i] -= c * m;
        }
    }
    debug_assert!(rem.iter().all(|&x| x == 0));
    quot
}

fn euler_phi(m: u64) -> u64 {
    (1..=m).filter(|k| k.gcd(&m) == 1).count() as u64
}

fn cyclotomic_polynomial(m: u64, cache: &mut HashMap<u64, Arc<CyclotomicRing>>) -> Vec<i128> {
    let mut poly = vec![0i128; m as usize + 1];
    poly[0] = -1;
    poly[m as usize] = 1;
    for d in 1..m {
        if m % d == 0 {
            let phi_d = ring_in(d, cache).modulus.clone();
            poly = poly_div_exact(&poly, &phi_d);
        }
    }
    poly
}

fn ring_in(m: u64, cache: &mut HashMap<u64, Arc<CyclotomicRing>>) -> Arc<CyclotomicRing> {
    if let Some(r) = cache.get(&m) {
        return r.clone();
    }
    let modulus = cyclotomic_polynomial(m, cache);
    let ring = Arc::new(CyclotomicRing { conductor: m, modulus });
    cache.insert(m, ring.clone());
    ring
}

/// The shared ring of conductor `m`.
pub fn cyclotomic_ring(m: u64) -> Result<Arc<CyclotomicRing>> {
    if m == 0 || euler_phi(m) as usize > MAX_CYCLOTOMIC_DEGREE {
        return Err(Error::ConductorTooLarge(m));
    }
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<CyclotomicRing>>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(Default::default).lock().expect("ring cache poisoned");
    Ok(ring_in(m, &mut cache))
}

/// An element of `ℤ[ζ_m]`, stored as its reduced coefficient vector.
#[derive(Clone)]
pub struct CyclotomicInt {
    ring: Arc<CyclotomicRing>,
    coeffs: Vec<i128>,
}

impl CyclotomicInt {
    /// Reduces `Σ c_k ζ_m^k`.
    pub fn from_poly(m: u64, poly: Vec<i128>) -> Result<Self> {
        let ring = cyclotomic_ring(m)?;
        Ok(Self::in_ring(ring, poly))
    }

    fn in_ring(ring: Arc<CyclotomicRing>, poly: Vec<i128>) -> Self {
        let coeffs = ring.reduce(poly);
        Self { ring, coeffs }
    }

    /// `Σ counts[k] ζ_m^k` for exponents taken mod `m`.
    pub fn from_exponent_counts(m: u64, counts: &[i128]) -> Result<Self> {
        let mut poly = vec![0i128; m as usize];
        for (k, &c) in counts.iter().enumerate() {
            poly[k % m as usize] += c;
        }
        Self::from_poly(m, poly)
    }

    pub fn from_int(m: u64, value: i128) -> Result<Self> {
        Self::from_poly(m, vec![value])
    }

    pub fn zero(m: u64) -> Result<Self> {
        Self::from_int(m, 0)
    }

    pub fn one(m: u64) -> Result<Self> {
        Self::from_int(m, 1)
    }

    /// `ζ_m^k`.
    pub fn zeta_pow(m: u64, k: i64) -> Result<Self> {
        let e = k.rem_euclid(m as i64) as usize;
        let mut poly = vec![0i128; e + 1];
        poly[e] = 1;
        Self::from_poly(m, poly)
    }

    pub fn conductor(&self) -> u64 {
        self.ring.conductor
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// The integer value, if the element is rational.
    pub fn as_integer(&self) -> Option<i128> {
        match self.coeffs.split_first() {
            Some((&c, rest)) if rest.iter().all(|&x| x == 0) => Some(c),
            None => Some(0),
            _ => None,
        }
    }

    /// The same element in `ℤ[ζ_M]` for a multiple `M` of the conductor.
    pub fn lift(&self, target: u64) -> Result<Self> {
        let m = self.conductor();
        if target % m != 0 {
            return Err(Error::OutOfRange(format!("{target} is not a multiple of {m}")));
        }
        if target == m {
            return Ok(self.clone());
        }
        let step = (target / m) as usize;
        let mut poly = vec![0i128; (self.coeffs.len().max(1) - 1) * step + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            poly[i * step] = c;
        }
        Self::from_poly(target, poly)
    }

    /// The image under `ζ ↦ ζ^a` for `a` prime to the conductor.
    pub fn galois(&self, a: i64) -> Result<Self> {
        let m = self.conductor() as i64;
        if (a.rem_euclid(m) as u64).gcd(&(m as u64)) != 1 {
            return Err(Error::OutOfRange(format!("{a} is not a unit modulo {m}")));
        }
        let mut poly = vec![0i128; m as usize];
        for (i, &c) in self.coeffs.iter().enumerate() {
            poly[(i as i64 * a).rem_euclid(m) as usize] += c;
        }
        Ok(Self::in_ring(self.ring.clone(), poly))
    }

    /// Complex conjugation `ζ ↦ ζ⁻¹`.
    pub fn conj(&self) -> Self {
        self.galois(-1).expect("-1 is a unit")
    }

    pub fn scale(&self, k: i128) -> Self {
        Self { ring: self.ring.clone(), coeffs: self.coeffs.iter().map(|&c| c * k).collect() }
    }

    fn common(&self, other: &Self) -> (Self, Self) {
        if Arc::ptr_eq(&self.ring, &other.ring) || self.conductor() == other.conductor() {
            return (self.clone(), other.clone());
        }
        let m = self.conductor().lcm(&other.conductor());
        (
            self.lift(m).expect("conductor within the cap"),
            other.lift(m).expect("conductor within the cap"),
        )
    }

    pub fn plus(&self, other: &Self) -> Self {
        let (a, b) = self.common(other);
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect();
        Self { ring: a.ring, coeffs }
    }

    pub fn times(&self, other: &Self) -> Self {
        let (a, b) = self.common(other);
        let mut poly = vec![0i128; (a.coeffs.len() + b.coeffs.len()).max(1)];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                poly[i + j] += x * y;
            }
        }
        Self::in_ring(a.ring, poly)
    }
}

impl PartialEq for CyclotomicInt {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = self.common(other);
        a.coeffs == b.coeffs
    }
}

impl Eq for CyclotomicInt {}

impl fmt::Debug for CyclotomicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CyclotomicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| match i {
                0 => c.to_string(),
                1 => format!("{c}·ζ{}", self.conductor()),
                _ => format!("{c}·ζ{}^{i}", self.conductor()),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl Serialize for CyclotomicInt {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("CyclotomicInt", 2)?;
        s.serialize_field("conductor", &self.conductor())?;
        let coeffs: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        s.serialize_field("coefficients", &coeffs)?;
        s.end()
    }
}

impl Add for &CyclotomicInt {
    type Output = CyclotomicInt;
    fn add(self, rhs: Self) -> CyclotomicInt {
        self.plus(rhs)
    }
}

impl Sub for &CyclotomicInt {
    type Output = CyclotomicInt;
    fn sub(self, rhs: Self) -> CyclotomicInt {
        self.plus(&rhs.scale(-1))
    }
}

impl Mul for &CyclotomicInt {
    type Output = CyclotomicInt;
    fn mul(self, rhs: Self) -> CyclotomicInt {
        self.times(rhs)
    }
}

impl Neg for &CyclotomicInt {
    type Output = CyclotomicInt;
    fn neg(self) -> CyclotomicInt {
        self.scale(-1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phi(m: u64) -> Vec<i128> {
        cyclotomic_ring(m).unwrap().modulus().to_vec()
    }

    #[test]
    fn small_cyclotomic_polynomials() {
        assert_eq!(phi(1), vec![-1, 1]);
        assert_eq!(phi(2), vec![1, 1]);
        assert_eq!(phi(4), vec![1, 0, 1]);
        assert_eq!(phi(6), vec![1, -1, 1]);
        assert_eq!(phi(12), vec![1, 0, -1, 0, 1]);
        assert_eq!(phi(105).len() - 1, 48);
        // the first cyclotomic polynomial with a coefficient of absolute value 2
        assert!(phi(105).iter().any(|&c| c == -2));
    }

    #[test]
    fn roots_of_unity() {
        for m in [1u64, 3, 4, 8, 12, 15, 24] {
            let z = CyclotomicInt::zeta_pow(m, 1).unwrap();
            let mut acc = CyclotomicInt::one(m).unwrap();
            for _ in 0..m {
                acc = &acc * &z;
            }
            assert_eq!(acc, CyclotomicInt::one(m).unwrap());
            let total = (0..m as i64).fold(CyclotomicInt::zero(m).unwrap(), |s, k| {
                &s + &CyclotomicInt::zeta_pow(m, k).unwrap()
            });
            assert_eq!(total.as_integer(), Some(if m == 1 { 1 } else { 0 }));
        }
    }

    #[test]
    fn lifting_is_compatible() {
        let z3 = CyclotomicInt::zeta_pow(3, 1).unwrap();
        let z12 = CyclotomicInt::zeta_pow(12, 4).unwrap();
        assert_eq!(z3, z12);
        let i = CyclotomicInt::zeta_pow(4, 1).unwrap();
        let prod = &z3 * &i;
        assert_eq!(prod.conductor(), 12);
        assert_eq!(prod, CyclotomicInt::zeta_pow(12, 7).unwrap());
    }

    #[test]
    fn conductor_cap() {
        assert!(cyclotomic_ring(1009).is_err());
        assert!(cyclotomic_ring(0).is_err());
    }

    fn element(m: u64) -> impl Strategy<Value = CyclotomicInt> {
        prop::collection::vec(-20i128..20, 0..(2 * m as usize)).prop_map(move |v| {
            let mut poly = v;
            poly.push(0);
            CyclotomicInt::from_poly(m, poly).unwrap()
        })
    }

    proptest! {
        #[test]
        fn multiplication_is_associative((x, y, z) in prop::sample::select(vec![3u64, 5, 8, 12, 15, 20])
            .prop_flat_map(|m| (element(m), element(m), element(m)))) {
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert_eq!(&x * &y, &y * &x);
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        }

        #[test]
        fn reduction_is_idempotent(poly in prop::collection::vec(-50i128..50, 1..40),
                                   m in prop::sample::select(vec![1u64, 2, 6, 7, 9, 16])) {
            let x = CyclotomicInt::from_poly(m, poly).unwrap();
            let again = CyclotomicInt::from_poly(m, x.coeffs().to_vec()).unwrap();
            prop_assert_eq!(x.coeffs(), again.coeffs());
            prop_assert!(x.coeffs().len() == cyclotomic_ring(m).unwrap().degree());
        }

        #[test]
        fn zeta_is_a_root_of_the_modulus(m in 1u64..60) {
            let ring = cyclotomic_ring(m).unwrap();
            let value = CyclotomicInt::from_poly(m, ring.modulus().to_vec()).unwrap();
            prop_assert!(value.is_zero());
        }

        #[test]
        fn conjugation_is_an_involutive_automorphism(x in element(12), y in element(12)) {
            prop_assert_eq!(x.conj().conj(), x.clone());
            prop_assert_eq!((&x * &y).conj(), &x.conj() * &y.conj());
        }
    }
}

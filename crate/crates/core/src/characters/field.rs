//! Small finite fields `𝔽_q` with log and exponent tables.
//!
//! An element is encoded by the base-`p` digits of its coordinates in the
//! power basis of a fixed primitive polynomial, so `0` and `1` keep their
//! integer codes and the codes `0..p` form the prime field.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest supported field size.
pub const MAX_FIELD_SIZE: u64 = 1 << 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteField {
    p: u64,
    degree: u32,
    q: u64,
    /// Monic primitive polynomial, constant term first, leading 1 omitted.
    #[serde(skip)]
    modulus: Vec<u64>,
    #[serde(skip)]
    exp: Vec<u32>,
    #[serde(skip)]
    log: Vec<u32>,
    #[serde(skip)]
    trace: Vec<u32>,
}

fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q % d == 0)?;
    let mut rest = q;
    let mut e = 0;
    while rest % p == 0 {
        rest /= p;
        e += 1;
    }
    (rest == 1).then_some((p, e))
}

fn digits(code: u64, p: u64, f: u32) -> Vec<u64> {
    let mut out = Vec::with_capacity(f as usize);
    let mut c = code;
    for _ in 0..f {
        out.push(c % p);
        c /= p;
    }
    out
}

fn undigits(d: &[u64], p: u64) -> u64 {
    d.iter().rev().fold(0, |acc, &x| acc * p + x)
}

/// Multiplies by `x` modulo the monic polynomial `x^f + Σ m_i x^i`.
fn times_x(v: &[u64], modulus: &[u64], p: u64) -> Vec<u64> {
    let f = v.len();
    let carry = v[f - 1];
    let mut out = vec![0u64; f];
    for i in (1..f).rev() {
        out[i] = v[i - 1];
    }
    for i in 0..f {
        out[i] = (out[i] + (p - modulus[i]) % p * carry) % p;
    }
    out
}

/// Powers of `x` modulo the polynomial, if `x` generates the multiplicative group.
fn power_table(modulus: &[u64], p: u64, q: u64) -> Option<Vec<u32>> {
    let f = modulus.len();
    let mut v = vec![0u64; f];
    v[0] = 1;
    let mut seen = vec![false; q as usize];
    let mut table = Vec::with_capacity(q as usize - 1);
    for _ in 0..q - 1 {
        let code = undigits(&v, p);
        if seen[code as usize] || code == 0 {
            return None;
        }
        seen[code as usize] = true;
        table.push(code as u32);
        v = times_x(&v, modulus, p);
    }
    (undigits(&v, p) == 1).then_some(table)
}

impl FiniteField {
    /// The field with `q` elements, presented by the first primitive
    /// polynomial in the order of its coefficient codes.
    pub fn new(q: u64) -> Result<Self> {
        let (p, degree) = prime_power(q).ok_or(Error::UnsupportedField(q))?;
        if q > MAX_FIELD_SIZE {
            return Err(Error::UnsupportedField(q));
        }
        let f = degree as usize;
        let (modulus, exp) = (0..q)
            .find_map(|code| {
                let m = digits(code, p, degree);
                power_table(&m, p, q).map(|t| (m, t))
            })
            .ok_or(Error::UnsupportedField(q))?;
        let mut log = vec![u32::MAX; q as usize];
        for (e, &c) in exp.iter().enumerate() {
            log[c as usize] = e as u32;
        }
        let mut field = Self { p, degree, q, modulus, exp, log, trace: Vec::new() };
        let mut trace = Vec::with_capacity(q as usize);
        for x in 0..q as u32 {
            let mut acc = 0u32;
            let mut y = x;
            for _ in 0..f {
                acc = field.add(acc, y);
                y = field.pow(y, p);
            }
            debug_assert!((acc as u64) < p);
            trace.push(acc);
        }
        field.trace = trace;
        Ok(field)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn size(&self) -> u64 {
        self.q
    }

    pub fn elements(&self) -> impl Iterator<Item = u32> {
        0..self.q as u32
    }

    pub fn units(&self) -> impl Iterator<Item = u32> {
        1..self.q as u32
    }

    /// The fixed generator of `𝔽_q^×`.
    pub fn generator(&self) -> u32 {
        self.exp[1 % self.exp.len()]
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        let (p, f) = (self.p, self.degree);
        let s: Vec<u64> = digits(a as u64, p, f).iter().zip(digits(b as u64, p, f)).map(|(x, y)| (x + y) % p).collect();
        undigits(&s, p) as u32
    }

    pub fn neg(&self, a: u32) -> u32 {
        let (p, f) = (self.p, self.degree);
        let s: Vec<u64> = digits(a as u64, p, f).iter().map(|x| (p - x) % p).collect();
        undigits(&s, p) as u32
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let n = self.q - 1;
        let e = (self.log[a as usize] as u64 + self.log[b as usize] as u64) % n;
        self.exp[e as usize]
    }

    pub fn inv(&self, a: u32) -> Option<u32> {
        (a != 0).then(|| {
            let n = self.q - 1;
            self.exp[((n - self.log[a as usize] as u64) % n) as usize]
        })
    }

    pub fn pow(&self, a: u32, e: u64) -> u32 {
        if a == 0 {
            return u32::from(e == 0);
        }
        let n = self.q - 1;
        self.exp[((self.log[a as usize] as u64 * (e % n)) % n) as usize]
    }

    /// Discrete logarithm to the fixed generator.
    pub fn log(&self, a: u32) -> Option<u32> {
        (a != 0).then(|| self.log[a as usize])
    }

    pub fn exp(&self, e: u64) -> u32 {
        self.exp[(e % (self.q - 1)) as usize]
    }

    /// `Tr_{𝔽_q/𝔽_p}` as an integer in `0..p`.
    pub fn trace(&self, a: u32) -> u32 {
        self.trace[a as usize]
    }

    /// The code of `−1`.
    pub fn minus_one(&self) -> u32 {
        self.neg(1)
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_prime_powers() {
        for q in [0u64, 1, 6, 10, 12, 15] {
            assert!(FiniteField::new(q).is_err(), "q={q}");
        }
        assert!(FiniteField::new(1 << 13).is_err());
    }

    #[test]
    fn field_axioms_exhaustively() {
        for q in [2u64, 3, 4, 5, 7, 8, 9, 11, 13, 16, 25, 27] {
            let k = FiniteField::new(q).unwrap();
            for a in k.elements() {
                assert_eq!(k.add(a, k.neg(a)), 0);
                assert_eq!(k.mul(a, 1), a);
                if a != 0 {
                    assert_eq!(k.mul(a, k.inv(a).unwrap()), 1);
                }
                for b in k.elements() {
                    for c in k.elements().step_by(3) {
                        assert_eq!(k.mul(a, k.add(b, c)), k.add(k.mul(a, b), k.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn trace_is_additive_and_onto() {
        for q in [4u64, 8, 9, 25, 27] {
            let k = FiniteField::new(q).unwrap();
            let mut counts = vec![0u64; k.p() as usize];
            for a in k.elements() {
                counts[k.trace(a) as usize] += 1;
                for b in k.elements() {
                    assert_eq!(k.trace(k.add(a, b)) as u64, (k.trace(a) + k.trace(b)) as u64 % k.p());
                }
            }
            assert!(counts.iter().all(|&c| c == q / k.p()));
        }
    }

    #[test]
    fn prime_fields_use_integer_arithmetic() {
        for p in [3u64, 5, 7, 11, 13] {
            let k = FiniteField::new(p).unwrap();
            for a in 0..p as u32 {
                assert_eq!(k.trace(a), a);
                for b in 0..p as u32 {
                    assert_eq!(k.mul(a, b) as u64, (a as u64 * b as u64) % p);
                    assert_eq!(k.add(a, b) as u64, (a as u64 + b as u64) % p);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn frobenius_is_additive(q in prop::sample::select(vec![4u64, 8, 9, 16, 27, 49]),
                                 a in 0u32..1000, b in 0u32..1000) {
            let k = FiniteField::new(q).unwrap();
            let (a, b) = (a % q as u32, b % q as u32);
            let p = k.p();
            prop_assert_eq!(k.pow(k.add(a, b), p), k.add(k.pow(a, p), k.pow(b, p)));
        }
    }
}

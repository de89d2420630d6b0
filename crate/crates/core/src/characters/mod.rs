//! Multiplicative characters of `𝔽_q^×` and `(ℤ/n)^×`, their Gauss sums in
//! exact cyclotomic arithmetic, and the twist identity between companion
//! coefficient families.

mod cyclotomic;
mod field;
mod twist;

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;

pub use cyclotomic::{cyclotomic_ring, CyclotomicInt, CyclotomicRing, MAX_CYCLOTOMIC_DEGREE};
pub use field::{FiniteField, MAX_FIELD_SIZE};
pub use twist::{
    build_companion_coeffs, check_twist_identity, run_twist_trials, verify_twist_identity, CoeffFamily,
    NegativeControl, TwistCase, TwistIndex, TwistOutcome, TwistParams, TwistReport, TwistSeed,
};

use crate::error::{Error, Result};

/// `(ℤ/n)^×` as a product of cyclic groups with fixed generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitGroup {
    n: u64,
    /// Generators as residues mod `n`, with their orders.
    generators: Vec<(u64, u64)>,
    /// Exponent vector of each unit; `None` off the unit group.
    logs: Vec<Option<Vec<u64>>>,
    exponent: u64,
}

fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        let mut e = 0;
        while n % d == 0 {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn mul_order(a: u64, m: u64) -> u64 {
    let mut x = a % m;
    let mut k = 1;
    while x != 1 % m {
        x = x * a % m;
        k += 1;
    }
    k
}

/// Generators of the cyclic factors of `(ℤ/p^e)^×`, with orders.
fn local_generators(p: u64, e: u32) -> Vec<(u64, u64)> {
    let m = p.pow(e);
    if p == 2 {
        return match e {
            1 => Vec::new(),
            2 => vec![(3, 2)],
            _ => vec![(m - 1, 2), (5, m / 4)],
        };
    }
    let order = m / p * (p - 1);
    let g = (2..m).find(|&g| g % p != 0 && mul_order(g, m) == order).expect("odd prime powers are cyclic");
    vec![(g, order)]
}

/// The residue mod `n` congruent to `a` mod `m` and to 1 mod `n/m`.
fn crt_embed(a: u64, m: u64, n: u64) -> u64 {
    let rest = n / m;
    (0..n).find(|&x| x % m == a % m && x % rest == 1 % rest).expect("coprime moduli")
}

impl UnitGroup {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 || n > 1 << 16 {
            return Err(Error::OutOfRange(format!("modulus {n} out of range")));
        }
        let mut generators = Vec::new();
        for (p, e) in factor(n) {
            let m = p.pow(e);
            for (g, o) in local_generators(p, e) {
                generators.push((crt_embed(g, m, n), o));
            }
        }
        let exponent = generators.iter().fold(1u64, |acc, &(_, o)| acc.lcm(&o));
        let mut logs: Vec<Option<Vec<u64>>> = vec![None; n as usize];
        let mut exps = vec![0u64; generators.len()];
        loop {
            let x = generators.iter().zip(&exps).fold(1 % n, |acc, (&(g, _), &e)| {
                (0..e).fold(acc, |a, _| a * g % n)
            });
            debug_assert!(logs[x as usize].is_none());
            logs[x as usize] = Some(exps.clone());
            let mut i = 0;
            loop {
                if i == exps.len() {
                    return Ok(Self { n, generators, logs, exponent });
                }
                exps[i] += 1;
                if exps[i] < generators[i].1 {
                    break;
                }
                exps[i] = 0;
                i += 1;
            }
        }
    }

    pub fn modulus(&self) -> u64 {
        self.n
    }

    pub fn is_unit(&self, x: u64) -> bool {
        self.logs[(x % self.n) as usize].is_some()
    }

    pub fn units(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.n).filter(|&x| self.is_unit(x))
    }

    pub fn order(&self) -> u64 {
        self.generators.iter().map(|&(_, o)| o).product()
    }

    /// Orders of the cyclic factors.
    pub fn factor_orders(&self) -> Vec<u64> {
        self.generators.iter().map(|&(_, o)| o).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CharDomain {
    Field(Arc<FiniteField>),
    Units(Arc<UnitGroup>),
}

/// A character with values `ζ_L^{k(x)}` for a fixed level `L`; `k(x)` is
/// `None` where the character vanishes.
#[derive(Clone, PartialEq, Eq)]
pub struct MultChar {
    domain: CharDomain,
    level: u64,
    table: Vec<Option<u64>>,
    order: u64,
    label: String,
}

impl MultChar {
    fn from_table(domain: CharDomain, level: u64, table: Vec<Option<u64>>, label: String) -> Self {
        let g = table.iter().flatten().fold(level, |acc, &k| acc.gcd(&k));
        let order = level / g.max(1);
        Self { domain, level, table, order, label }
    }

    /// `χ(g^e) = ζ_{q−1}^{k·e}` for the fixed generator `g` of `𝔽_q^×`.
    pub fn on_field(field: Arc<FiniteField>, k: u64) -> Self {
        let level = field.size() - 1;
        let table = field.elements().map(|x| field.log(x).map(|e| e as u64 * k % level)).collect();
        let label = format!("F_{}^x:{}", field.size(), k % level);
        Self::from_table(CharDomain::Field(field), level, table, label)
    }

    /// All characters of `𝔽_q^×`, by exponent.
    pub fn all_on_field(field: &Arc<FiniteField>) -> Vec<Self> {
        (0..field.size() - 1).map(|k| Self::on_field(field.clone(), k)).collect()
    }

    /// The character sending the `i`-th generator to `ζ_{o_i}^{c_i}`.
    pub fn on_units(group: Arc<UnitGroup>, exps: &[u64]) -> Result<Self> {
        if exps.len() != group.generators.len() {
            return Err(Error::OutOfRange("wrong number of character exponents".into()));
        }
        let level = group.exponent;
        let table = group
            .logs
            .iter()
            .map(|log| {
                log.as_ref().map(|e| {
                    e.iter()
                        .zip(exps)
                        .zip(&group.generators)
                        .map(|((&ei, &ci), &(_, o))| ei * (ci % o) * (level / o))
                        .sum::<u64>()
                        % level
                })
            })
            .collect();
        let parts: Vec<String> = exps.iter().zip(&group.generators).map(|(c, (_, o))| (c % o).to_string()).collect();
        let label = format!("(Z/{})^x:({})", group.n, parts.join(","));
        Ok(Self::from_table(CharDomain::Units(group), level, table, label))
    }

    /// All characters of `(ℤ/n)^×`, lexicographic in their exponents.
    pub fn all_on_units(group: &Arc<UnitGroup>) -> Vec<Self> {
        let orders = group.factor_orders();
        let mut out = Vec::new();
        let mut exps = vec![0u64; orders.len()];
        loop {
            out.push(Self::on_units(group.clone(), &exps).expect("exponent count matches"));
            let mut i = orders.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                exps[i] += 1;
                if exps[i] < orders[i] {
                    break;
                }
                exps[i] = 0;
            }
        }
    }

    pub fn domain(&self) -> &CharDomain {
        &self.domain
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `χ(x) = ζ_{ord χ}^e`, or `None` where `χ` vanishes.
    pub fn exponent(&self, x: u64) -> Option<u64> {
        let k = self.table[(x as usize) % self.table.len()]?;
        Some(k / (self.level / self.order))
    }

    pub fn value(&self, x: u64) -> CyclotomicInt {
        match self.exponent(x) {
            Some(e) => CyclotomicInt::zeta_pow(self.order, e as i64).expect("character orders are small"),
            None => CyclotomicInt::zero(1).expect("conductor 1"),
        }
    }

    pub fn inverse(&self) -> Self {
        let table = self.table.iter().map(|k| k.map(|k| (self.level - k) % self.level)).collect();
        Self::from_table(self.domain.clone(), self.level, table, format!("{}^-1", self.label))
    }
}

impl fmt::Debug for MultChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MultChar({}, order {})", self.label, self.order)
    }
}

fn field_of(psi: &MultChar) -> Result<&Arc<FiniteField>> {
    match psi.domain() {
        CharDomain::Field(k) => Ok(k),
        CharDomain::Units(_) => Err(Error::OutOfRange("expected a character of a finite field".into())),
    }
}

fn units_of(chi: &MultChar) -> Result<&Arc<UnitGroup>> {
    match chi.domain() {
        CharDomain::Units(g) => Ok(g),
        CharDomain::Field(_) => Err(Error::OutOfRange("expected a character of (ℤ/n)^×".into())),
    }
}

/// `Σ_{j ∈ 𝔽_q^×} ψ(j) ζ_p^{Tr(j t)}`.
pub fn twisted_sum(psi: &MultChar, t: u32) -> Result<CyclotomicInt> {
    let k = field_of(psi)?;
    let p = k.p();
    let m = p.lcm(&psi.order());
    let mut counts = vec![0i128; m as usize];
    for j in k.units() {
        let e = psi.exponent(j as u64).expect("units carry values") * (m / psi.order())
            + k.trace(k.mul(j, t)) as u64 * (m / p);
        counts[(e % m) as usize] += 1;
    }
    CyclotomicInt::from_exponent_counts(m, &counts)
}

/// The Gauss sum `W(ψ) = Σ_{j ∈ 𝔽_q^×} ψ(j) ζ_p^{Tr j}`.
pub fn gauss_sum(psi: &MultChar) -> Result<CyclotomicInt> {
    twisted_sum(psi, 1)
}

/// `Σ_{j ∈ (ℤ/n)^×} χ(j) ζ_n^{j t}`.
pub fn unit_sum(chi: &MultChar, t: u64) -> Result<CyclotomicInt> {
    let g = units_of(chi)?;
    let n = g.modulus();
    let m = n.lcm(&chi.order());
    let mut counts = vec![0i128; m as usize];
    for j in g.units() {
        let e = chi.exponent(j).expect("units carry values") * (m / chi.order()) + (j * (t % n) % n) * (m / n);
        counts[(e % m) as usize] += 1;
    }
    CyclotomicInt::from_exponent_counts(m, &counts)
}

//! Companion coefficient families and the twist identity between them.
//!
//! Indices of the full level are pairs `(u, v) ∈ 𝔽_q × ℤ/n`; `u = 0` marks the
//! indices divisible by the prime. Indices of the reduced level are `v ∈ ℤ/n`.
//! The left side of the identity is `a(u,v)·Σ_j ψ_𝔭(j) ζ_p^{Tr(ju)}`; the right
//! side is `C·W(ψ_𝔭)·W(ψ_𝔫⁻¹)⁻¹·(G_full(u,v) − s·[u = 0]·G_red(v))`, where `G`
//! are the `ψ_𝔫⁻¹`-twisted sums of `b`. Both sides are compared after
//! multiplying through by `W(ψ_𝔫⁻¹)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::{field_of, gauss_sum, twisted_sum, unit_sum, units_of, CyclotomicInt, FiniteField, MultChar, UnitGroup};
use crate::error::{Error, Result};
use crate::report::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TwistIndex {
    Full { u: u32, v: u64 },
    Reduced { v: u64 },
}

impl fmt::Display for TwistIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwistIndex::Full { u, v } => write!(f, "({u},{v})"),
            TwistIndex::Reduced { v } => write!(f, "({v})"),
        }
    }
}

impl Serialize for TwistIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Coefficients indexed by [`TwistIndex`]; absent indices carry 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffFamily {
    values: BTreeMap<TwistIndex, CyclotomicInt>,
}

impl CoeffFamily {
    pub fn get(&self, index: TwistIndex) -> CyclotomicInt {
        self.values.get(&index).cloned().unwrap_or_else(|| CyclotomicInt::zero(1).expect("conductor 1"))
    }

    pub fn set(&mut self, index: TwistIndex, value: CyclotomicInt) {
        self.values.insert(index, value);
    }

    pub fn support(&self) -> impl Iterator<Item = &TwistIndex> {
        self.values.keys()
    }
}

/// Free coefficients: `b` at full-level indices with `u ≠ 0` and `v` a unit,
/// and `b`, `a` at unit reduced-level indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TwistSeed {
    pub b_full: BTreeMap<(u32, u64), i128>,
    pub b_reduced: BTreeMap<u64, i128>,
    pub a_reduced: BTreeMap<u64, i128>,
}

impl TwistSeed {
    pub fn constant(field: &FiniteField, units: &UnitGroup, value: i128) -> Self {
        let mut seed = Self::default();
        for v in units.units() {
            for u in field.units() {
                seed.b_full.insert((u, v), value);
            }
            seed.b_reduced.insert(v, value);
            seed.a_reduced.insert(v, value);
        }
        seed
    }

    /// Integers in `[-9, 9]` at every free index.
    pub fn random<R: Rng>(field: &FiniteField, units: &UnitGroup, rng: &mut R) -> Self {
        let mut seed = Self::default();
        for v in units.units() {
            for u in field.units() {
                seed.b_full.insert((u, v), rng.gen_range(-9..=9));
            }
            seed.b_reduced.insert(v, rng.gen_range(-9..=9));
            seed.a_reduced.insert(v, rng.gen_range(-9..=9));
        }
        seed
    }
}

/// Eigenvalues `r`, `s` and the normalizing constant `C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistParams {
    pub r: CyclotomicInt,
    pub s: CyclotomicInt,
    pub c: CyclotomicInt,
}

impl TwistParams {
    pub fn integers(r: i128, s: i128, c: i128) -> Self {
        let int = |x| CyclotomicInt::from_int(1, x).expect("conductor 1");
        Self { r: int(r), s: int(s), c: int(c) }
    }
}

struct Setting<'a> {
    field: &'a Arc<FiniteField>,
    units: &'a Arc<UnitGroup>,
}

fn setting<'a>(psi_p: &'a MultChar, psi_n: &'a MultChar) -> Result<Setting<'a>> {
    let field = field_of(psi_p)?;
    let units = units_of(psi_n)?;
    if psi_p.is_trivial() {
        return Err(Error::TrivialCharacter);
    }
    let m = field.p().lcm(&(field.size() - 1)).lcm(&units.modulus());
    super::cyclotomic_ring(m)?;
    Ok(Setting { field, units })
}

/// Extends the seed to `(a, b)` by the character relation at full-level
/// indices, the eigenvalue relations at indices divisible by the prime, and
/// vanishing at non-unit `v`.
pub fn build_companion_coeffs(
    psi_p: &MultChar,
    psi_n: &MultChar,
    params: &TwistParams,
    seed: &TwistSeed,
) -> Result<(CoeffFamily, CoeffFamily)> {
    let Setting { field, units } = setting(psi_p, psi_n)?;
    let q = field.size() as u32;
    for &(u, v) in seed.b_full.keys() {
        if u == 0 || u >= q || v >= units.modulus() || !units.is_unit(v) {
            return Err(Error::InconsistentSeed(format!("b seeded at ({u},{v})")));
        }
    }
    for &v in seed.b_reduced.keys().chain(seed.a_reduced.keys()) {
        if v >= units.modulus() || !units.is_unit(v) {
            return Err(Error::InconsistentSeed(format!("reduced seed at ({v})")));
        }
    }
    let int = |x: i128| CyclotomicInt::from_int(1, x).expect("conductor 1");
    let mut a = CoeffFamily { values: BTreeMap::new() };
    let mut b = CoeffFamily { values: BTreeMap::new() };
    for v in units.units() {
        let b_red = int(seed.b_reduced.get(&v).copied().unwrap_or(0));
        let a_red = int(seed.a_reduced.get(&v).copied().unwrap_or(0));
        b.set(TwistIndex::Reduced { v }, b_red.clone());
        a.set(TwistIndex::Reduced { v }, a_red.clone());
        b.set(TwistIndex::Full { u: 0, v }, &params.s * &b_red);
        a.set(TwistIndex::Full { u: 0, v }, &params.r * &a_red);
        for u in field.units() {
            let bv = int(seed.b_full.get(&(u, v)).copied().unwrap_or(0));
            let twist = &psi_p.value(u as u64) * &psi_n.value(v);
            a.set(TwistIndex::Full { u, v }, &(&params.c * &twist) * &bv);
            b.set(TwistIndex::Full { u, v }, bv);
        }
    }
    Ok((a, b))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwistOutcome {
    pub pass: bool,
    pub checked: usize,
    pub first_failure: Option<TwistIndex>,
    /// Whether `W(ψ_𝔫⁻¹) = 0`, which makes the cross-multiplied identity vacuous.
    pub degenerate: bool,
}

/// Compares both sides of the twist identity at every full-level index.
pub fn check_twist_identity(
    psi_p: &MultChar,
    psi_n: &MultChar,
    params: &TwistParams,
    a: &CoeffFamily,
    b: &CoeffFamily,
) -> Result<TwistOutcome> {
    let Setting { field, units } = setting(psi_p, psi_n)?;
    let psi_n_inv = psi_n.inverse();
    let w_n = unit_sum(&psi_n_inv, 1)?;
    let w_p = gauss_sum(psi_p)?;
    let scale = &params.c * &w_p;
    let twisted: Vec<CyclotomicInt> = field.elements().map(|u| twisted_sum(psi_p, u)).collect::<Result<_>>()?;
    let g_sums: Vec<CyclotomicInt> = (0..units.modulus()).map(|v| unit_sum(&psi_n_inv, v)).collect::<Result<_>>()?;
    let mut checked = 0;
    for u in field.elements() {
        for v in 0..units.modulus() {
            let index = TwistIndex::Full { u, v };
            let lhs = &a.get(index) * &twisted[u as usize];
            let mut g = &b.get(index) * &g_sums[v as usize];
            if u == 0 {
                let reduced = &b.get(TwistIndex::Reduced { v }) * &g_sums[v as usize];
                g = &g - &(&params.s * &reduced);
            }
            checked += 1;
            if &w_n * &lhs != &scale * &g {
                return Ok(TwistOutcome { pass: false, checked, first_failure: Some(index), degenerate: w_n.is_zero() });
            }
        }
    }
    Ok(TwistOutcome { pass: true, checked, first_failure: None, degenerate: w_n.is_zero() })
}

pub fn verify_twist_identity(
    psi_p: &MultChar,
    psi_n: &MultChar,
    params: &TwistParams,
    seed: &TwistSeed,
) -> Result<TwistOutcome> {
    let (a, b) = build_companion_coeffs(psi_p, psi_n, params, seed)?;
    check_twist_identity(psi_p, psi_n, params, &a, &b)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwistCase {
    pub psi_p: String,
    pub psi_n: String,
    pub trial: usize,
    #[serde(flatten)]
    pub outcome: TwistOutcome,
}

/// A run with one `b`-coefficient altered after `a` was built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NegativeControl {
    pub psi_p: String,
    pub psi_n: String,
    pub corrupted: TwistIndex,
    /// The control passes when the check fails at the corrupted index.
    pub detected: bool,
    pub outcome: TwistOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwistReport {
    pub schema: &'static str,
    pub q: u64,
    pub n: u64,
    pub trials: usize,
    pub seed: u64,
    pub pass: bool,
    pub cases: usize,
    pub degenerate_cases: usize,
    pub failures: Vec<TwistCase>,
    pub negative_control: Option<NegativeControl>,
}

fn random_params<R: Rng>(field: &FiniteField, rng: &mut R) -> TwistParams {
    let int = |x: i128| CyclotomicInt::from_int(1, x).expect("conductor 1");
    let r = int(rng.gen_range(-5..=5));
    let s = int(rng.gen_range(-5..=5));
    let unit = CyclotomicInt::zeta_pow(field.size() - 1, rng.gen_range(0..field.size() as i64 - 1))
        .expect("small conductor");
    let c = if rng.gen_bool(0.5) { -&unit } else { unit };
    TwistParams { r, s, c }
}

/// All nontrivial `ψ_𝔭`, all `ψ_𝔫`, `trials` random seeds each, plus a
/// corrupted-coefficient control.
pub fn run_twist_trials(q: u64, n: u64, trials: usize, seed: u64, max_failures: usize) -> Result<TwistReport> {
    let field = Arc::new(FiniteField::new(q)?);
    let units = Arc::new(UnitGroup::new(n)?);
    let psis_p: Vec<MultChar> = MultChar::all_on_field(&field).into_iter().filter(|c| !c.is_trivial()).collect();
    let psis_n = MultChar::all_on_units(&units);
    let mut jobs = Vec::new();
    for psi_p in &psis_p {
        for psi_n in &psis_n {
            for trial in 0..trials {
                jobs.push((psi_p, psi_n, trial));
            }
        }
    }
    let run = |(i, &(psi_p, psi_n, trial)): (usize, &(&MultChar, &MultChar, usize))| -> Result<TwistCase> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let params = random_params(&field, &mut rng);
        let s = TwistSeed::random(&field, &units, &mut rng);
        let outcome = verify_twist_identity(psi_p, psi_n, &params, &s)?;
        Ok(TwistCase { psi_p: psi_p.label().into(), psi_n: psi_n.label().into(), trial, outcome })
    };
    let cases: Vec<TwistCase> = jobs.par_iter().enumerate().map(run).collect::<Result<_>>()?;

    let negative_control = negative_control(&field, &units, &psis_p, &psis_n, seed)?;
    let degenerate_cases = cases.iter().filter(|c| c.outcome.degenerate).count();
    let all_pass = cases.iter().all(|c| c.outcome.pass);
    let failures: Vec<TwistCase> =
        cases.iter().filter(|c| !c.outcome.pass).take(max_failures.max(1)).cloned().collect();
    let control_ok = negative_control.as_ref().map_or(true, |c| c.detected);
    Ok(TwistReport {
        schema: SCHEMA_VERSION,
        q,
        n,
        trials,
        seed,
        pass: all_pass && control_ok,
        cases: cases.len(),
        degenerate_cases,
        failures,
        negative_control,
    })
}

fn negative_control(
    field: &Arc<FiniteField>,
    units: &Arc<UnitGroup>,
    psis_p: &[MultChar],
    psis_n: &[MultChar],
    seed: u64,
) -> Result<Option<NegativeControl>> {
    let Some(psi_p) = psis_p.first() else { return Ok(None) };
    let Some(psi_n) = psis_n.iter().rev().find(|c| !unit_sum(&c.inverse(), 1).map_or(true, |w| w.is_zero())) else {
        return Ok(None);
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let params = random_params(field, &mut rng);
    let s = TwistSeed::random(field, units, &mut rng);
    let (a, mut b) = build_companion_coeffs(psi_p, psi_n, &params, &s)?;
    let v = units.units().find(|&v| v != 0).unwrap_or(0);
    let corrupted = TwistIndex::Full { u: 1, v };
    let one = CyclotomicInt::one(1)?;
    b.set(corrupted, &b.get(corrupted) + &one);
    let outcome = check_twist_identity(psi_p, psi_n, &params, &a, &b)?;
    Ok(Some(NegativeControl {
        psi_p: psi_p.label().into(),
        psi_n: psi_n.label().into(),
        corrupted,
        detected: !outcome.pass && outcome.first_failure == Some(corrupted),
        outcome,
    }))
}

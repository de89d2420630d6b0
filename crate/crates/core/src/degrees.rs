//! Degree vectors on the hypercube `[0,1]^𝔹`, their stratum, the
//! Atkin-Lehner action, Hodge-height intervals and the Raynaud constraints
//! linking a level subgroup `H` to a complementary subgroup `D`.

use std::sync::Arc;

use num_traits::{One, Zero};
use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::embeddings::{EmbeddingSubset, PrimeProfile, PrimeSet};
use crate::error::{Error, Result};
use crate::rational::{delta_sum, format_q, in_unit_interval, parse_q, Q};
use crate::strata::{AdmissiblePair, Face, FaceCoord};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DegreeVector {
    profile: Arc<PrimeProfile>,
    values: Vec<Q>,
    generic: bool,
    cusp: bool,
}

impl DegreeVector {
    pub fn new(profile: Arc<PrimeProfile>, values: Vec<Q>, generic: bool) -> Result<Self> {
        if values.len() != profile.g() {
            return Err(Error::InvalidDegrees(format!(
                "expected {} entries, got {}",
                profile.g(),
                values.len()
            )));
        }
        if let Some(x) = values.iter().find(|x| !in_unit_interval(x)) {
            return Err(Error::InvalidDegrees(format!("entry {x} outside [0,1]")));
        }
        Ok(Self { profile, values, generic, cusp: false })
    }

    /// The cusp vertex `𝐱_𝔱`: degree one exactly on the blocks of `t`.
    pub fn cusp(profile: Arc<PrimeProfile>, t: PrimeSet) -> Self {
        let ones = profile.blocks_of(t);
        let values = (0..profile.g()).map(|k| if ones.contains(k) { Q::one() } else { Q::zero() }).collect();
        Self { profile, values, generic: true, cusp: true }
    }

    pub fn constant(profile: Arc<PrimeProfile>, value: Q, generic: bool) -> Result<Self> {
        let g = profile.g();
        Self::new(profile, vec![value; g], generic)
    }

    pub fn profile(&self) -> &PrimeProfile {
        &self.profile
    }

    pub fn profile_arc(&self) -> &Arc<PrimeProfile> {
        &self.profile
    }

    pub fn values(&self) -> &[Q] {
        &self.values
    }

    pub fn get(&self, k: usize) -> Q {
        self.values[k]
    }

    pub fn generic(&self) -> bool {
        self.generic
    }

    pub fn is_cusp(&self) -> bool {
        self.cusp
    }

    pub fn with_generic(mut self, generic: bool) -> Self {
        self.generic = generic;
        self
    }

    /// `ν_β = 1 − deg_β`.
    pub fn valuation(&self, k: usize) -> Q {
        Q::one() - self.values[k]
    }

    /// `deg_𝔭 = Σ_{β∈𝔹_𝔭} deg_β`.
    pub fn prime_degree(&self, prime: usize) -> Result<Q> {
        let block = self.profile.prime_block(prime)?;
        Ok(block.iter().map(|k| self.values[k]).sum())
    }

    /// Face of the hypercube containing the vector.
    pub fn face(&self) -> Face {
        Face(
            self.values
                .iter()
                .map(|x| {
                    if x.is_zero() {
                        FaceCoord::Zero
                    } else if x.is_one() {
                        FaceCoord::One
                    } else {
                        FaceCoord::Open
                    }
                })
                .collect(),
        )
    }

    fn set_where(&self, pred: impl Fn(usize) -> bool) -> EmbeddingSubset {
        let mut s = self.profile.empty();
        for k in 0..self.profile.g() {
            if pred(k) {
                s = s.with(k);
            }
        }
        s
    }
}

/// `φ = {β : h_{σ⁻¹β} > 0}`, `η = {β : h_β < 1}`.
pub fn pair_of_degvec(h: &DegreeVector) -> Result<AdmissiblePair> {
    if h.cusp {
        return Err(Error::CuspInput);
    }
    Ok(stratum_of(h))
}

/// Stratum of a vector, with cusps read through their vertex.
pub(crate) fn stratum_of(h: &DegreeVector) -> AdmissiblePair {
    let pr = &h.profile;
    let phi = h.set_where(|k| h.values[pr.sigma_inv(k)] > Q::zero());
    let eta = h.set_where(|k| h.values[k] < Q::one());
    AdmissiblePair { phi, eta }
}

/// `h_β ↦ 1 − h_β` on the blocks of `t`; the generic flag is kept.
pub fn w_t_deg(h: &DegreeVector, t: PrimeSet) -> DegreeVector {
    let blocks = h.profile.blocks_of(t);
    let values = h
        .values
        .iter()
        .enumerate()
        .map(|(k, x)| if blocks.contains(k) { Q::one() - x } else { *x })
        .collect();
    DegreeVector { profile: h.profile.clone(), values, generic: h.generic, cusp: h.cusp }
}

/// Like [`w_t_deg`], with the generic flag of the image supplied by the caller.
pub fn w_t_deg_assuming(h: &DegreeVector, t: PrimeSet, generic: bool) -> DegreeVector {
    w_t_deg(h, t).with_generic(generic)
}

/// The range of a directional Hodge height `w_β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HodgeInterval {
    pub lower: Q,
    pub upper: Q,
    pub exact: bool,
}

impl HodgeInterval {
    pub fn exact(v: Q) -> Self {
        Self { lower: v, upper: v, exact: true }
    }

    pub fn at_least(v: Q) -> Self {
        Self { lower: v, upper: Q::one(), exact: false }
    }

    pub fn intersects(&self, other: &HodgeInterval) -> bool {
        self.lower.max(other.lower) <= self.upper.min(other.upper)
    }
}

fn clamp01(x: Q) -> Q {
    x.max(Q::zero()).min(Q::one())
}

/// `w_β` from `min{p·h_{σ⁻¹β}, 1 − h_β}`: exact when the two differ,
/// otherwise only bounded below by the common value.
pub fn hodge_height(h: &DegreeVector, beta: usize) -> Result<HodgeInterval> {
    if h.cusp {
        return Err(Error::CuspInput);
    }
    if beta >= h.profile.g() {
        return Err(Error::OutOfRange(format!("embedding {beta}")));
    }
    let p = Q::from_integer(h.profile.p() as i128);
    let a = p * h.values[h.profile.sigma_inv(beta)];
    let b = Q::one() - h.values[beta];
    let m = clamp01(a.min(b));
    Ok(if a != b { HodgeInterval::exact(m) } else { HodgeInterval::at_least(m) })
}

/// As [`hodge_height`], using that a generic point has `w_β = 0` off `φ ∩ η`.
pub fn hodge_height_refined(h: &DegreeVector, beta: usize) -> Result<HodgeInterval> {
    let base = hodge_height(h, beta)?;
    if h.generic {
        let pair = stratum_of(h);
        if !pair.phi.intersection(pair.eta).contains(beta) {
            return Ok(HodgeInterval::exact(Q::zero()));
        }
    }
    Ok(base)
}

fn same_shape(h: &DegreeVector, d: &DegreeVector) -> Result<()> {
    if h.profile != d.profile {
        return Err(Error::ProfileMismatch);
    }
    if h.cusp || d.cusp {
        return Err(Error::CuspInput);
    }
    Ok(())
}

/// `Σ_i p^{f−1−i} d_{σ^iβ} ≤ Σ_i p^{f−1−i} (1 − h_{σ^iβ})` for every `β ∈ 𝔹_𝔭`.
pub fn raynaud_feasible(h: &DegreeVector, d: &DegreeVector, prime: usize) -> Result<bool> {
    same_shape(h, d)?;
    let pr = &h.profile;
    let f = pr.residue_degree(prime)?;
    let p = pr.p() as i128;
    for beta in pr.prime_block(prime)?.iter() {
        let mut lhs = Q::zero();
        let mut rhs = Q::zero();
        for i in 0..f {
            let k = pr.sigma_pow(beta, i as i64);
            let w = Q::from_integer(p.pow((f - 1 - i) as u32));
            lhs += w * d.values[k];
            rhs += w * (Q::one() - h.values[k]);
        }
        if lhs > rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Consequences of genericity on the block of `𝔭`:
/// `h_β = 1 ⇒ d_β ≤ δ_{f−1} and d_{σ⁻¹β} = 0`, and
/// `h_{σ⁻¹β} = 0 and d_β < 1 ⇒ d_{σ⁻¹β} = 0`.
pub fn genericity_constraints(h: &DegreeVector, d: &DegreeVector, prime: usize) -> Result<bool> {
    same_shape(h, d)?;
    if !h.generic {
        return Err(Error::NotGeneric);
    }
    let pr = &h.profile;
    let f = pr.residue_degree(prime)?;
    let bound = delta_sum(pr.p(), f - 1);
    for beta in pr.prime_block(prime)?.iter() {
        let prev = pr.sigma_inv(beta);
        if h.values[beta].is_one() && (d.values[beta] > bound || !d.values[prev].is_zero()) {
            return Ok(false);
        }
        if h.values[prev].is_zero() && d.values[beta] < Q::one() && !d.values[prev].is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

impl Serialize for DegreeVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        struct Entries<'a>(&'a DegreeVector);
        impl Serialize for Entries<'_> {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                let mut m = serializer.serialize_map(Some(self.0.values.len()))?;
                for (k, x) in self.0.values.iter().enumerate() {
                    m.serialize_entry(&self.0.profile.format_index(k), &format_q(x))?;
                }
                m.end()
            }
        }
        let mut m = serializer.serialize_map(Some(3))?;
        m.serialize_entry("deg", &Entries(self))?;
        m.serialize_entry("generic", &self.generic)?;
        m.serialize_entry("cusp", &self.cusp)?;
        m.end()
    }
}

#[derive(Deserialize)]
struct RawDegreeVector {
    deg: std::collections::BTreeMap<String, String>,
    #[serde(default = "default_true")]
    generic: bool,
    #[serde(default)]
    cusp: bool,
}

fn default_true() -> bool {
    true
}

impl DegreeVector {
    /// Reads `{"deg":{"0/0":"1/2",...},"generic":true,"cusp":false}`.
    pub fn from_json(profile: Arc<PrimeProfile>, json: &str) -> Result<Self> {
        let raw: RawDegreeVector = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_raw(profile, raw)
    }

    fn from_raw(profile: Arc<PrimeProfile>, raw: RawDegreeVector) -> Result<Self> {
        let mut values: Vec<Option<Q>> = vec![None; profile.g()];
        for (key, val) in &raw.deg {
            let k = profile.parse_index(key)?;
            if values[k].replace(parse_q(val)?).is_some() {
                return Err(Error::InvalidDegrees(format!("duplicate entry {key}")));
            }
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(k, v)| v.ok_or_else(|| Error::InvalidDegrees(format!("missing entry {}", profile.format_index(k)))))
            .collect::<Result<Vec<_>>>()?;
        if raw.cusp {
            let t = PrimeSet::of((0..profile.num_primes()).filter(|&prime| {
                profile.prime_block(prime).map(|b| b.iter().all(|k| values[k].is_one())).unwrap_or(false)
            }));
            let cusp = Self::cusp(profile, t);
            if cusp.values != values {
                return Err(Error::InvalidDegrees("cusp must be a union of all-one blocks".into()));
            }
            return Ok(cusp.with_generic(raw.generic));
        }
        Self::new(profile, values, raw.generic)
    }

    /// Deserializes against a known profile.
    pub fn deserialize_with<'de, D: Deserializer<'de>>(
        profile: Arc<PrimeProfile>,
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let raw = RawDegreeVector::deserialize(deserializer)?;
        Self::from_raw(profile, raw).map_err(D::Error::custom)
    }
}

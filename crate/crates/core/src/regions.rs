//! Membership in interval regions, the canonical locus `𝒱_can`, the region
//! `Σ` built from codimension ≤ 1 strata, its Atkin-Lehner unions `Σ_S`, and
//! the vertex/edge coverage check.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::degrees::{stratum_of, w_t_deg, DegreeVector};
use crate::embeddings::{PrimeProfile, PrimeSet};
use crate::error::{Error, Result};
use crate::hecke::{bk_newton_degree, BkDegree};
use crate::rational::{delta_sum, format_q, Q};
use crate::report::{Counterexample, RegionReport};
use crate::strata::{classify, codim, is_nowhere_etale, pair_of_face, vertex_decomposition, w_t_pair, Badness, Face, FaceCoord};

/// An interval with rational endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub lo: Q,
    pub hi: Q,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn open(lo: Q, hi: Q) -> Self {
        Self { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn closed(lo: Q, hi: Q) -> Self {
        Self { lo, hi, lo_closed: true, hi_closed: true }
    }

    pub fn point(x: Q) -> Self {
        Self::closed(x, x)
    }

    pub fn contains(&self, x: Q) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }
}

/// One interval `I_𝔭 ⊆ [0, f_𝔭]` per prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalMultiset {
    intervals: Vec<Interval>,
}

impl IntervalMultiset {
    pub fn new(profile: &PrimeProfile, intervals: Vec<Interval>) -> Result<Self> {
        if intervals.len() != profile.num_primes() {
            return Err(Error::ProfileMismatch);
        }
        for (i, (iv, &f)) in intervals.iter().zip(profile.degrees()).enumerate() {
            let top = Q::from_integer(f as i128);
            if iv.lo < Q::zero() || iv.hi > top || iv.lo > iv.hi {
                return Err(Error::OutOfRange(format!("interval for prime {i}")));
            }
        }
        Ok(Self { intervals })
    }

    /// `I_𝔭 = [0, f_𝔭]` everywhere.
    pub fn everything(profile: &PrimeProfile) -> Self {
        Self {
            intervals: profile
                .degrees()
                .iter()
                .map(|&f| Interval::closed(Q::zero(), Q::from_integer(f as i128)))
                .collect(),
        }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }
}

/// `deg_𝔭(h) ∈ I_𝔭` for every prime.
pub fn in_interval_region(h: &DegreeVector, region: &IntervalMultiset) -> Result<bool> {
    let pr = h.profile();
    if region.intervals.len() != pr.num_primes() {
        return Err(Error::ProfileMismatch);
    }
    for (prime, iv) in region.intervals.iter().enumerate() {
        if !iv.contains(h.prime_degree(prime)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `𝕀*_𝔭 = (δ_{f−1}, 1)`, which is `(0, 1)` when `f = 1`.
pub fn istar_interval(profile: &PrimeProfile, prime: usize) -> Result<Interval> {
    let f = profile.residue_degree(prime)?;
    Ok(Interval::open(delta_sum(profile.p(), f - 1), Q::one()))
}

pub fn istar_region(profile: &PrimeProfile) -> IntervalMultiset {
    IntervalMultiset {
        intervals: (0..profile.num_primes())
            .map(|prime| istar_interval(profile, prime).expect("prime in range"))
            .collect(),
    }
}

/// `δ_j = Σ_{i=1}^{j} p^{-i}` for `j ≥ 1`.
pub fn delta(p: u64, j: usize) -> Result<Q> {
    if j < 1 {
        return Err(Error::OutOfRange(format!("delta index {j} must be at least 1")));
    }
    Ok(delta_sum(p, j))
}

/// The enlarged canonical locus: `p·h_{σ⁻¹β} + h_β > 1` on primes with
/// `f > 1`, and `h_β > 0` on primes with `f = 1`.
pub fn in_vcan(h: &DegreeVector) -> bool {
    let pr = h.profile();
    let p = Q::from_integer(pr.p() as i128);
    (0..pr.g()).all(|k| {
        if pr.degrees()[pr.prime_of(k)] > 1 {
            p * h.get(pr.sigma_inv(k)) + h.get(k) > Q::one()
        } else {
            h.get(k) > Q::zero()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Membership {
    Out,
    Indeterminate,
    In,
}

impl Membership {
    /// Three-valued disjunction.
    pub fn or(self, other: Self) -> Self {
        self.max(other)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Membership::In => "in",
            Membership::Out => "out",
            Membership::Indeterminate => "indeterminate",
        }
    }
}

/// Which branch of the definition of `Σ` a vector falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaCase {
    /// Codimension at least two.
    Deep,
    /// Étale at some prime.
    Etale,
    Ordinary,
    Good { beta0: usize },
    BadUniform { beta0: usize },
    BadWithOne { beta0: usize, j: usize },
}

pub fn sigma_case(h: &DegreeVector) -> SigmaCase {
    let pr = h.profile();
    let pair = stratum_of(h);
    let c = codim(pr, &pair).expect("degree vectors give admissible pairs");
    if c >= 2 {
        return SigmaCase::Deep;
    }
    if !is_nowhere_etale(pr, &pair).expect("same profile") {
        return SigmaCase::Etale;
    }
    if c == 0 {
        return SigmaCase::Ordinary;
    }
    let cl = classify(pr, &pair).expect("admissible");
    let beta0 = cl.beta0.expect("codimension one");
    match (cl.badness, cl.j) {
        (Badness::Good, _) => SigmaCase::Good { beta0 },
        (Badness::Bad, None) => SigmaCase::BadUniform { beta0 },
        (Badness::Bad, Some(j)) => SigmaCase::BadWithOne { beta0, j },
        (Badness::NotCodim1, _) => unreachable!("codimension one"),
    }
}

fn flag(generic: bool) -> Membership {
    if generic {
        Membership::In
    } else {
        Membership::Out
    }
}

pub fn in_sigma(h: &DegreeVector) -> Membership {
    let pr = h.profile();
    match sigma_case(h) {
        SigmaCase::Deep | SigmaCase::Etale => Membership::Out,
        SigmaCase::Ordinary | SigmaCase::Good { .. } => flag(h.generic()),
        SigmaCase::BadUniform { beta0 } => {
            let f = pr.degrees()[pr.prime_of(beta0)];
            let x = h.get(beta0);
            if x > delta_sum(pr.p(), f - 1) && x < Q::one() {
                Membership::In
            } else {
                Membership::Out
            }
        }
        SigmaCase::BadWithOne { beta0, j } => {
            if !h.generic() {
                return Membership::Out;
            }
            let f = pr.degrees()[pr.prime_of(beta0)];
            let bound = delta_sum(pr.p(), j);
            match bk_newton_degree(pr.p(), f, j, h.get(beta0)).map(|r| r.degree) {
                Ok(BkDegree::Exact(v)) if v <= bound => Membership::In,
                Ok(BkDegree::Exact(_)) => Membership::Out,
                Ok(BkDegree::LowerBound(_)) => Membership::Indeterminate,
                Err(_) => Membership::Out,
            }
        }
    }
}

/// Generic flags assumed for the images `w_T(h)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum GenericAssumption {
    /// Every image keeps the flag of `h`.
    #[default]
    KeepFlag,
    Everywhere,
    Nowhere,
    /// Explicit flags per `T`; unlisted sets keep the flag of `h`.
    PerSubset(BTreeMap<PrimeSet, bool>),
}

impl GenericAssumption {
    pub fn flag_for(&self, t: PrimeSet, own: bool) -> bool {
        match self {
            GenericAssumption::KeepFlag => own,
            GenericAssumption::Everywhere => true,
            GenericAssumption::Nowhere => false,
            GenericAssumption::PerSubset(m) => m.get(&t).copied().unwrap_or(own),
        }
    }

    /// Reindexes the assumptions along `T ↦ T △ {𝔭}`.
    pub fn transported(&self, prime: usize) -> Self {
        match self {
            GenericAssumption::PerSubset(m) => GenericAssumption::PerSubset(
                m.iter().map(|(t, g)| (t.symmetric_difference(PrimeSet::single(prime)), *g)).collect(),
            ),
            other => other.clone(),
        }
    }
}

/// `Σ_S = ⋃_{T ⊆ S} w_T^{-1}(Σ)`, evaluated as a three-valued disjunction.
pub fn in_sigma_s(h: &DegreeVector, s: PrimeSet, assumption: &GenericAssumption) -> Membership {
    let s = PrimeSet(s.0 & h.profile().all_primes().0);
    s.subsets().fold(Membership::Out, |acc, t| {
        let image = w_t_deg(h, t).with_generic(assumption.flag_for(t, h.generic()));
        acc.or(in_sigma(&image))
    })
}

fn vertex_faces(profile: &PrimeProfile) -> impl Iterator<Item = Face> + '_ {
    (0..1u64 << profile.g()).map(move |bits| {
        Face(
            (0..profile.g())
                .map(|k| if bits >> k & 1 == 1 { FaceCoord::One } else { FaceCoord::Zero })
                .collect(),
        )
    })
}

/// Combinatorial core of the complement argument: transported vertices are
/// nowhere étale, and on every edge the interval `(δ_{f−1}, 1)` and its flip
/// `(0, 1 − δ_{f−1})` cover `(0, 1)`.
pub fn coverage_check(profile: &PrimeProfile) -> Result<RegionReport> {
    if profile.g() > crate::strata::DEFAULT_ENUMERATION_BOUND {
        return Err(Error::BoundExceeded { g: profile.g(), bound: crate::strata::DEFAULT_ENUMERATION_BOUND });
    }
    let mut bad = Vec::new();
    let mut vertices = 0u64;
    let mut edges = 0u64;
    for face in vertex_faces(profile) {
        vertices += 1;
        let pair = pair_of_face(profile, &face)?;
        let d = vertex_decomposition(profile, &face)?;
        for (label, t) in [("vertex-t0", d.t0), ("vertex-t0-t2", d.t0.union(d.t2))] {
            if !is_nowhere_etale(profile, &w_t_pair(profile, &pair, t)?)? {
                bad.push(Counterexample::new(label).with_face(face.to_string()));
            }
        }
        for beta0 in 0..profile.g() {
            // each edge is counted from the vertex whose β₀ coordinate is zero
            if face.0[beta0] != FaceCoord::Zero {
                continue;
            }
            edges += 1;
            let mut edge = face.clone();
            edge.0[beta0] = FaceCoord::Open;
            let prime0 = profile.prime_of(beta0);
            let f0 = profile.degrees()[prime0];
            let threshold = delta_sum(profile.p(), f0 - 1);
            let edge_pair = pair_of_face(profile, &edge)?;
            let t0 = PrimeSet::of((0..profile.num_primes()).filter(|&prime| {
                profile.prime_block(prime).map(|b| b.iter().all(|k| edge.0[k] == FaceCoord::Zero)).unwrap_or(false)
            }));
            for (label, t) in [("edge-t0", t0), ("edge-t0-p0", t0.union(PrimeSet::single(prime0)))] {
                if !is_nowhere_etale(profile, &w_t_pair(profile, &edge_pair, t)?)? {
                    bad.push(Counterexample::new(label).with_face(edge.to_string()).with_beta(profile, beta0));
                }
            }
            if Q::one() - threshold <= threshold {
                bad.push(
                    Counterexample::new("edge-interval")
                        .with_face(edge.to_string())
                        .with_beta(profile, beta0)
                        .with_lhs(threshold),
                );
            }
        }
    }
    let report = RegionReport::new("coverage", profile.clone(), None, bad, usize::MAX)
        .count("vertices", vertices)
        .count("edges", edges)
        .note("strata of codimension at least two and non-generic divisors are assumed to have codimension at least two");
    Ok(report)
}

/// The uncovered point of a failing edge, `t = δ_{f−1}`, as a string.
pub fn edge_gap(profile: &PrimeProfile, prime: usize) -> Result<Option<String>> {
    let f = profile.residue_degree(prime)?;
    let threshold = delta_sum(profile.p(), f - 1);
    Ok((Q::one() - threshold <= threshold).then(|| format_q(&threshold)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use std::sync::Arc;

    fn profile(p: u64, f: &[usize]) -> Arc<PrimeProfile> {
        Arc::new(PrimeProfile::with_any_prime(p, f.to_vec()).unwrap())
    }

    fn v(pr: &Arc<PrimeProfile>, xs: &[Q], generic: bool) -> DegreeVector {
        DegreeVector::new(pr.clone(), xs.to_vec(), generic).unwrap()
    }

    #[test]
    fn interval_region_examples() {
        let pr = profile(3, &[2]);
        let h = v(&pr, &[q(1, 2), q(1, 4)], true);
        assert!(in_interval_region(&h, &IntervalMultiset::everything(&pr)).unwrap());
        let region = IntervalMultiset::new(&pr, vec![Interval::open(q(1, 3), Q::one())]).unwrap();
        assert!(in_interval_region(&h, &region).unwrap());
        let ones = v(&pr, &[Q::one(), Q::one()], true);
        let exact = IntervalMultiset::new(&pr, vec![Interval::point(q(2, 1))]).unwrap();
        assert!(in_interval_region(&ones, &exact).unwrap());
        assert!(IntervalMultiset::new(&pr, vec![Interval::closed(Q::zero(), q(3, 1))]).is_err());
    }

    #[test]
    fn istar_and_delta() {
        let pr = profile(3, &[1, 2, 3]);
        assert_eq!(istar_interval(&pr, 0).unwrap(), Interval::open(Q::zero(), Q::one()));
        assert_eq!(istar_interval(&pr, 1).unwrap(), Interval::open(q(1, 3), Q::one()));
        assert_eq!(istar_interval(&pr, 2).unwrap(), Interval::open(q(4, 9), Q::one()));
        assert_eq!(delta(3, 1).unwrap(), q(1, 3));
        assert_eq!(delta(3, 2).unwrap(), q(4, 9));
        assert_eq!(delta(5, 3).unwrap(), q(31, 125));
        assert!(delta(3, 0).is_err());
        let h = v(&profile(3, &[2]), &[q(1, 6), q(1, 6)], true);
        assert!(!in_interval_region(&h, &istar_region(h.profile())).unwrap());
    }

    #[test]
    fn vcan_examples() {
        let pr = profile(3, &[2, 1]);
        assert!(in_vcan(&v(&pr, &[Q::one(); 3], true)));
        assert!(!in_vcan(&v(&pr, &[Q::zero(); 3], true)));
        let pr2 = profile(3, &[2]);
        assert!(in_vcan(&v(&pr2, &[q(1, 2), q(9, 10)], true)));
        assert!(!in_vcan(&v(&pr2, &[q(1, 6), q(1, 2)], true)));
        let cusp = DegreeVector::cusp(pr.clone(), pr.all_primes());
        assert!(in_vcan(&cusp));
    }

    #[test]
    fn sigma_examples() {
        let pr = profile(3, &[2]);
        assert_eq!(in_sigma(&v(&pr, &[Q::one(); 2], true)), Membership::In);
        assert_eq!(in_sigma(&v(&pr, &[Q::one(); 2], false)), Membership::Out);
        assert_eq!(in_sigma(&v(&pr, &[q(1, 2), Q::zero()], true)), Membership::In);
        assert_eq!(in_sigma(&v(&pr, &[q(1, 2), Q::zero()], false)), Membership::In);
        assert_eq!(in_sigma(&v(&pr, &[q(1, 3), Q::zero()], true)), Membership::Out);
        assert_eq!(in_sigma(&v(&pr, &[q(1, 2), q(1, 2)], true)), Membership::Out);
        assert_eq!(in_sigma(&v(&pr, &[Q::zero(), Q::zero()], true)), Membership::Out);
        let pr3 = profile(3, &[3]);
        // bad with a one two steps later: j = 1, δ_1 = 1/3
        let case2c = |x: Q| v(&pr3, &[x, Q::zero(), Q::one()], true);
        assert_eq!(in_sigma(&case2c(q(1, 2))), Membership::In);
        assert_eq!(in_sigma(&case2c(q(1, 4))), Membership::In);
        assert_eq!(in_sigma(&case2c(q(1, 3))), Membership::Indeterminate);
        assert_eq!(in_sigma(&case2c(q(1, 2)).with_generic(false)), Membership::Out);
        assert_eq!(sigma_case(&case2c(q(1, 2))), SigmaCase::BadWithOne { beta0: 0, j: 1 });
    }

    #[test]
    fn cusps_follow_their_vertex() {
        let pr = profile(3, &[2, 1]);
        let all = DegreeVector::cusp(pr.clone(), pr.all_primes());
        assert_eq!(in_sigma(&all), Membership::In);
        assert_eq!(in_sigma(&all.clone().with_generic(false)), Membership::Out);
        let partial = DegreeVector::cusp(pr.clone(), PrimeSet::single(0));
        assert_eq!(in_sigma(&partial), Membership::Out);
        assert_eq!(in_sigma_s(&partial, pr.all_primes(), &GenericAssumption::Everywhere), Membership::In);
    }

    #[test]
    fn sigma_s_examples() {
        let pr = profile(3, &[2, 1]);
        let zeros = v(&pr, &[Q::zero(); 3], true);
        assert_eq!(in_sigma_s(&zeros, PrimeSet::empty(), &GenericAssumption::KeepFlag), in_sigma(&zeros));
        assert_eq!(in_sigma_s(&zeros, pr.all_primes(), &GenericAssumption::Everywhere), Membership::In);
        assert_eq!(in_sigma_s(&zeros, PrimeSet::single(0), &GenericAssumption::Everywhere), Membership::Out);
    }

    #[test]
    fn coverage_passes_for_odd_primes() {
        for p in [3, 5, 7] {
            for f in [vec![1], vec![6], vec![2, 1], vec![3, 3], vec![1, 1, 1, 1, 1, 1], vec![2, 2, 2]] {
                let r = coverage_check(&profile(p, &f)).unwrap();
                assert!(r.pass, "p={p} f={f:?}: {:?}", r.counterexamples);
            }
        }
    }

    #[test]
    fn coverage_fails_for_two_with_inert_part() {
        let r = coverage_check(&profile(2, &[2])).unwrap();
        assert!(!r.pass);
        assert!(r.counterexamples.iter().all(|c| c.clause == "edge-interval"));
        assert_eq!(r.counterexamples[0].lhs.as_deref(), Some("1/2"));
        assert!(coverage_check(&profile(2, &[1, 1])).unwrap().pass);
        assert!(coverage_check(&profile(2, &[1])).unwrap().pass);
        assert_eq!(edge_gap(&profile(2, &[3]), 0).unwrap(), Some("3/4".to_string()));
        assert_eq!(edge_gap(&profile(3, &[3]), 0).unwrap(), None);
    }
}

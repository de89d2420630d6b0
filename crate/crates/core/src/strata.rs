//! Stratum labels `(φ, η)`: admissibility, codimension, closure, images in
//! the `τ`-stratification, the Atkin-Lehner action and the bijection with
//! faces of the degree hypercube.

use std::fmt;

use serde::Serialize;

use crate::embeddings::{EmbeddingSubset, PrimeProfile, PrimeSet};
use crate::error::{Error, Result};

/// Default limit on `g` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_BOUND: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AdmissiblePair {
    pub phi: EmbeddingSubset,
    pub eta: EmbeddingSubset,
}

/// A stratum of the `τ`-stratification of the level-one variety.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TauSet(pub EmbeddingSubset);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FaceCoord {
    Zero,
    One,
    Open,
}

/// A face of `[0,1]^𝔹`, one label per embedding in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Face(pub Vec<FaceCoord>);

impl Face {
    pub fn dim(&self) -> usize {
        self.0.iter().filter(|c| **c == FaceCoord::Open).count()
    }

    pub fn is_vertex(&self) -> bool {
        self.dim() == 0
    }

    /// Flips `0 ↔ 1` on the given embeddings.
    pub fn flipped(&self, on: EmbeddingSubset) -> Face {
        Face(
            self.0
                .iter()
                .enumerate()
                .map(|(k, c)| match (on.contains(k), c) {
                    (true, FaceCoord::Zero) => FaceCoord::One,
                    (true, FaceCoord::One) => FaceCoord::Zero,
                    (_, c) => *c,
                })
                .collect(),
        )
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.0 {
            let ch = match c {
                FaceCoord::Zero => '0',
                FaceCoord::One => '1',
                FaceCoord::Open => '*',
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Badness {
    Good,
    Bad,
    #[serde(rename = "not_codim1")]
    NotCodim1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub nowhere_etale: bool,
    pub badness: Badness,
    /// Canonical index of the unique open direction of a codimension-one pair.
    pub beta0: Option<usize>,
    /// For bad pairs whose block of `β₀` contains a one.
    pub j: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexDecomposition {
    pub t0: PrimeSet,
    pub t1: PrimeSet,
    pub t2: PrimeSet,
}

fn same_profile(profile: &PrimeProfile, s: EmbeddingSubset) -> Result<()> {
    if s.universe() != profile.g() {
        return Err(Error::ProfileMismatch);
    }
    Ok(())
}

pub fn is_admissible(
    profile: &PrimeProfile,
    phi: EmbeddingSubset,
    eta: EmbeddingSubset,
) -> Result<bool> {
    same_profile(profile, phi)?;
    same_profile(profile, eta)?;
    Ok(profile.shl(phi.complement()).is_subset(eta))
}

impl AdmissiblePair {
    pub fn new(profile: &PrimeProfile, phi: EmbeddingSubset, eta: EmbeddingSubset) -> Result<Self> {
        if !is_admissible(profile, phi, eta)? {
            return Err(Error::Inadmissible);
        }
        Ok(Self { phi, eta })
    }
}

fn checked(profile: &PrimeProfile, pair: &AdmissiblePair) -> Result<()> {
    if !is_admissible(profile, pair.phi, pair.eta)? {
        return Err(Error::Inadmissible);
    }
    Ok(())
}

pub fn codim(profile: &PrimeProfile, pair: &AdmissiblePair) -> Result<usize> {
    checked(profile, pair)?;
    Ok(pair.phi.len() + pair.eta.len() - profile.g())
}

/// Every admissible pair, ordered by `(φ, η)` bit patterns.
pub fn enumerate_admissible(profile: &PrimeProfile) -> Result<Vec<AdmissiblePair>> {
    enumerate_admissible_bounded(profile, DEFAULT_ENUMERATION_BOUND)
}

pub fn enumerate_admissible_bounded(
    profile: &PrimeProfile,
    bound: usize,
) -> Result<Vec<AdmissiblePair>> {
    if profile.g() > bound {
        return Err(Error::BoundExceeded { g: profile.g(), bound });
    }
    let mut out = Vec::new();
    for phi in profile.subsets() {
        let forced = profile.shl(phi.complement());
        for extra in forced.complement().subsets() {
            out.push(AdmissiblePair { phi, eta: forced.union(extra) });
        }
    }
    out.sort();
    Ok(out)
}

/// Admissible pairs `(φ', η')` with `φ' ⊇ φ` and `η' ⊇ η`.
pub fn closure_set(profile: &PrimeProfile, pair: &AdmissiblePair) -> Result<Vec<AdmissiblePair>> {
    checked(profile, pair)?;
    let mut out = Vec::new();
    for add_phi in pair.phi.complement().subsets() {
        let phi = pair.phi.union(add_phi);
        for add_eta in pair.eta.complement().subsets() {
            let eta = pair.eta.union(add_eta);
            if profile.shl(phi.complement()).is_subset(eta) {
                out.push(AdmissiblePair { phi, eta });
            }
        }
    }
    out.sort();
    Ok(out)
}

/// The `τ` with `φ∩η ⊆ τ ⊆ (φ∩η) ∪ (φ^c∩η^c)`.
pub fn pi_image(profile: &PrimeProfile, pair: &AdmissiblePair) -> Result<Vec<TauSet>> {
    checked(profile, pair)?;
    let core = pair.phi.intersection(pair.eta);
    let free = pair.phi.complement().intersection(pair.eta.complement());
    let mut out: Vec<TauSet> = free.subsets().map(|s| TauSet(core.union(s))).collect();
    out.sort();
    Ok(out)
}

/// Atkin-Lehner action: `(φ_𝔭, η_𝔭) ↦ (r(η_𝔭), ℓ(φ_𝔭))` for `𝔭 ∈ T`.
pub fn w_t_pair(profile: &PrimeProfile, pair: &AdmissiblePair, t: PrimeSet) -> Result<AdmissiblePair> {
    checked(profile, pair)?;
    let blocks = profile.blocks_of(t);
    let keep = blocks.complement();
    let phi = pair.phi.intersection(keep).union(profile.shr(pair.eta).intersection(blocks));
    let eta = pair.eta.intersection(keep).union(profile.shl(pair.phi).intersection(blocks));
    Ok(AdmissiblePair { phi, eta })
}

pub fn face_of_pair(profile: &PrimeProfile, pair: &AdmissiblePair) -> Result<Face> {
    checked(profile, pair)?;
    let zeros = profile.shl(pair.phi.complement());
    Ok(Face(
        (0..profile.g())
            .map(|k| {
                if !pair.eta.contains(k) {
                    FaceCoord::One
                } else if zeros.contains(k) {
                    FaceCoord::Zero
                } else {
                    FaceCoord::Open
                }
            })
            .collect(),
    ))
}

pub fn pair_of_face(profile: &PrimeProfile, face: &Face) -> Result<AdmissiblePair> {
    if face.0.len() != profile.g() {
        return Err(Error::ProfileMismatch);
    }
    let mut zeros = profile.empty();
    let mut ones = profile.empty();
    for (k, c) in face.0.iter().enumerate() {
        match c {
            FaceCoord::Zero => zeros = zeros.with(k),
            FaceCoord::One => ones = ones.with(k),
            FaceCoord::Open => {}
        }
    }
    Ok(AdmissiblePair { phi: profile.shr(zeros).complement(), eta: ones.complement() })
}

/// Whether `(φ_𝔭, η_𝔭) ≠ (∅, 𝔹_𝔭)`, i.e. the level subgroup is not étale at `𝔭`.
pub fn is_not_etale_at(profile: &PrimeProfile, pair: &AdmissiblePair, prime: usize) -> Result<bool> {
    let block = profile.prime_block(prime)?;
    Ok(!(pair.phi.intersection(block).is_empty() && block.is_subset(pair.eta)))
}

pub fn is_nowhere_etale(profile: &PrimeProfile, pair: &AdmissiblePair) -> Result<bool> {
    for prime in 0..profile.num_primes() {
        if !is_not_etale_at(profile, pair, prime)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn classify(profile: &PrimeProfile, pair: &AdmissiblePair) -> Result<Classification> {
    let face = face_of_pair(profile, pair)?;
    let nowhere_etale = is_nowhere_etale(profile, pair)?;
    let open = profile.shl(pair.phi).intersection(pair.eta);
    if open.len() != 1 {
        return Ok(Classification { nowhere_etale, badness: Badness::NotCodim1, beta0: None, j: None });
    }
    let beta0 = open.iter().next().expect("one element");
    let next = profile.sigma(beta0);
    if face.0[next] != FaceCoord::Zero {
        return Ok(Classification { nowhere_etale, badness: Badness::Good, beta0: Some(beta0), j: None });
    }
    let prime = profile.prime_of(beta0);
    let f = profile.degrees()[prime];
    let mut j = None;
    for i in 1..f {
        match face.0[profile.sigma_pow(beta0, i as i64 + 1)] {
            FaceCoord::One => {
                j = Some(i);
                break;
            }
            FaceCoord::Zero => {}
            FaceCoord::Open => break,
        }
    }
    Ok(Classification { nowhere_etale, badness: Badness::Bad, beta0: Some(beta0), j })
}

pub fn vertex_decomposition(profile: &PrimeProfile, vertex: &Face) -> Result<VertexDecomposition> {
    if vertex.0.len() != profile.g() {
        return Err(Error::ProfileMismatch);
    }
    if !vertex.is_vertex() {
        return Err(Error::NotAVertex);
    }
    let mut d = VertexDecomposition { t0: PrimeSet::empty(), t1: PrimeSet::empty(), t2: PrimeSet::empty() };
    for prime in 0..profile.num_primes() {
        let block = profile.prime_block(prime)?;
        let coords: Vec<FaceCoord> = block.iter().map(|k| vertex.0[k]).collect();
        let target = if coords.iter().all(|c| *c == FaceCoord::Zero) {
            &mut d.t0
        } else if coords.iter().all(|c| *c == FaceCoord::One) {
            &mut d.t1
        } else {
            &mut d.t2
        };
        *target = target.union(PrimeSet::single(prime));
    }
    Ok(d)
}

/// JSON record of a stratum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StratumRecord {
    pub phi: Vec<String>,
    pub eta: Vec<String>,
    pub codim: usize,
    pub nowhere_etale: bool,
    pub badness: Option<Badness>,
    pub beta0: Option<String>,
    pub j: Option<usize>,
}

impl StratumRecord {
    pub fn new(profile: &PrimeProfile, pair: &AdmissiblePair) -> Result<Self> {
        let c = classify(profile, pair)?;
        let names = |s: EmbeddingSubset| s.iter().map(|k| profile.format_index(k)).collect();
        Ok(Self {
            phi: names(pair.phi),
            eta: names(pair.eta),
            codim: codim(profile, pair)?,
            nowhere_etale: c.nowhere_etale,
            badness: match c.badness {
                Badness::NotCodim1 => None,
                b => Some(b),
            },
            beta0: c.beta0.map(|k| profile.format_index(k)),
            j: c.j,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::full_mask;
    use proptest::prelude::*;

    fn profile(f: &[usize]) -> PrimeProfile {
        PrimeProfile::new(3, f.to_vec()).unwrap()
    }

    fn brute_force(pr: &PrimeProfile) -> Vec<AdmissiblePair> {
        let mut out = Vec::new();
        for phi in pr.subsets() {
            for eta in pr.subsets() {
                // pointwise: σβ ∉ φ ⇒ β ∈ η
                let ok = (0..pr.g()).all(|b| phi.contains(pr.sigma(b)) || eta.contains(b));
                if ok {
                    out.push(AdmissiblePair { phi, eta });
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn admissibility_examples() {
        let pr = profile(&[2, 1]);
        assert!(is_admissible(&pr, pr.full(), pr.full()).unwrap());
        assert!(is_admissible(&pr, pr.empty(), pr.full()).unwrap());
        assert!(!is_admissible(&pr, pr.empty(), pr.empty()).unwrap());
        let other = profile(&[1]);
        assert_eq!(is_admissible(&pr, other.full(), pr.full()), Err(Error::ProfileMismatch));
    }

    #[test]
    fn codim_examples() {
        let pr = profile(&[2]);
        assert_eq!(codim(&pr, &AdmissiblePair { phi: pr.full(), eta: pr.full() }).unwrap(), 2);
        assert_eq!(codim(&pr, &AdmissiblePair { phi: pr.full(), eta: pr.empty() }).unwrap(), 0);
        let eta = pr.subset_of([0]).unwrap();
        assert_eq!(codim(&pr, &AdmissiblePair { phi: pr.full(), eta }).unwrap(), 1);
        let bad = AdmissiblePair { phi: pr.empty(), eta: pr.empty() };
        assert_eq!(codim(&pr, &bad), Err(Error::Inadmissible));
    }

    #[test]
    fn census_matches_brute_force() {
        for f in [vec![1], vec![4], vec![2, 2], vec![1, 1, 1], vec![3, 1]] {
            let pr = profile(&f);
            let fast = enumerate_admissible(&pr).unwrap();
            assert_eq!(fast, brute_force(&pr));
            assert_eq!(fast.len(), 3usize.pow(pr.g() as u32));
        }
        assert_eq!(enumerate_admissible(&profile(&[1])).unwrap().len(), 3);
        assert_eq!(enumerate_admissible(&profile(&[2, 2])).unwrap().len(), 81);
    }

    #[test]
    fn census_bound() {
        let pr = profile(&[13]);
        assert_eq!(
            enumerate_admissible(&pr),
            Err(Error::BoundExceeded { g: 13, bound: DEFAULT_ENUMERATION_BOUND })
        );
    }

    #[test]
    fn closure_examples() {
        let pr = profile(&[1, 1]);
        let top = AdmissiblePair { phi: pr.full(), eta: pr.full() };
        assert_eq!(closure_set(&pr, &top).unwrap(), vec![top]);
        let ord = AdmissiblePair { phi: pr.full(), eta: pr.empty() };
        assert_eq!(closure_set(&pr, &ord).unwrap().len(), 4);
    }

    #[test]
    fn pi_image_examples() {
        let pr = profile(&[1, 1]);
        let top = AdmissiblePair { phi: pr.full(), eta: pr.full() };
        assert_eq!(pi_image(&pr, &top).unwrap(), vec![TauSet(pr.full())]);
        let ord = AdmissiblePair { phi: pr.full(), eta: pr.empty() };
        assert_eq!(pi_image(&pr, &ord).unwrap(), vec![TauSet(pr.empty())]);
        let phi = pr.subset_of([0]).unwrap();
        let eta = pr.subset_of([1]).unwrap();
        let pair = AdmissiblePair::new(&pr, phi, eta).unwrap();
        // direct enumeration of τ against both bounds
        let direct: Vec<TauSet> = pr
            .subsets()
            .filter(|t| {
                phi.intersection(eta).is_subset(*t)
                    && t.is_subset(phi.intersection(eta).union(phi.complement().intersection(eta.complement())))
            })
            .map(TauSet)
            .collect();
        assert_eq!(pi_image(&pr, &pair).unwrap(), direct);
        assert_eq!(direct, vec![TauSet(pr.empty())]);
    }

    #[test]
    fn w_t_examples() {
        let pr = profile(&[3]);
        let etale = AdmissiblePair { phi: pr.empty(), eta: pr.full() };
        let flipped = w_t_pair(&pr, &etale, PrimeSet::single(0)).unwrap();
        assert_eq!(flipped, AdmissiblePair { phi: pr.full(), eta: pr.empty() });
        assert_eq!(w_t_pair(&pr, &etale, PrimeSet::empty()).unwrap(), etale);
    }

    #[test]
    fn faces_of_extreme_pairs() {
        let pr = profile(&[2, 1]);
        let ones = face_of_pair(&pr, &AdmissiblePair { phi: pr.full(), eta: pr.empty() }).unwrap();
        assert!(ones.0.iter().all(|c| *c == FaceCoord::One));
        let zeros = face_of_pair(&pr, &AdmissiblePair { phi: pr.empty(), eta: pr.full() }).unwrap();
        assert!(zeros.0.iter().all(|c| *c == FaceCoord::Zero));
    }

    #[test]
    fn face_round_trip_exhaustive() {
        for f in [vec![1], vec![5], vec![2, 3], vec![1, 1, 1, 1, 1], vec![3, 1, 1]] {
            let pr = profile(&f);
            let pairs = enumerate_admissible(&pr).unwrap();
            let mut faces = std::collections::BTreeSet::new();
            for pair in &pairs {
                let face = face_of_pair(&pr, pair).unwrap();
                assert_eq!(face.dim(), codim(&pr, pair).unwrap());
                assert_eq!(pair_of_face(&pr, &face).unwrap(), *pair);
                faces.insert(face);
            }
            assert_eq!(faces.len(), pairs.len());
        }
    }

    #[test]
    fn classification_examples() {
        let pr = profile(&[2, 1]);
        let top = AdmissiblePair { phi: pr.full(), eta: pr.full() };
        assert!(classify(&pr, &top).unwrap().nowhere_etale);
        // étale at the second prime: block {2} all zero
        let face = Face(vec![FaceCoord::One, FaceCoord::One, FaceCoord::Zero]);
        let pair = pair_of_face(&pr, &face).unwrap();
        assert!(!classify(&pr, &pair).unwrap().nowhere_etale);
        // codim one with the open direction in a degree-one prime is good
        let face = Face(vec![FaceCoord::One, FaceCoord::Zero, FaceCoord::Open]);
        let c = classify(&pr, &pair_of_face(&pr, &face).unwrap()).unwrap();
        assert_eq!(c.badness, Badness::Good);
        assert_eq!(c.beta0, Some(2));
    }

    #[test]
    fn badness_agrees_with_degree_definition() {
        // bad iff the coordinate after β₀ vanishes, read off a sample point of the face
        let pr = profile(&[4, 2]);
        for pair in enumerate_admissible(&pr).unwrap() {
            let face = face_of_pair(&pr, &pair).unwrap();
            let c = classify(&pr, &pair).unwrap();
            if face.dim() != 1 {
                assert_eq!(c.badness, Badness::NotCodim1);
                continue;
            }
            let b0 = face.0.iter().position(|x| *x == FaceCoord::Open).unwrap();
            assert_eq!(c.beta0, Some(b0));
            let next_degree_zero = face.0[pr.sigma(b0)] == FaceCoord::Zero;
            assert_eq!(c.badness == Badness::Bad, next_degree_zero);
            let block = pr.prime_block(pr.prime_of(b0)).unwrap();
            let has_one = block.iter().any(|k| face.0[k] == FaceCoord::One);
            assert_eq!(c.j.is_some(), next_degree_zero && has_one);
            if let Some(j) = c.j {
                for i in 1..=j {
                    assert_eq!(face.0[pr.sigma_pow(b0, i as i64)], FaceCoord::Zero);
                }
                assert_eq!(face.0[pr.sigma_pow(b0, j as i64 + 1)], FaceCoord::One);
                assert!(j >= 1 && j < pr.degrees()[pr.prime_of(b0)]);
            }
        }
    }

    #[test]
    fn vertex_decomposition_examples() {
        let pr = profile(&[2, 1]);
        let v = Face(vec![FaceCoord::One, FaceCoord::Zero, FaceCoord::One]);
        let d = vertex_decomposition(&pr, &v).unwrap();
        assert_eq!(d.t2, PrimeSet::single(0));
        assert_eq!(d.t1, PrimeSet::single(1));
        assert_eq!(d.t0, PrimeSet::empty());
        let ones = Face(vec![FaceCoord::One; 3]);
        assert_eq!(vertex_decomposition(&pr, &ones).unwrap().t1, pr.all_primes());
        let zeros = Face(vec![FaceCoord::Zero; 3]);
        assert_eq!(vertex_decomposition(&pr, &zeros).unwrap().t0, pr.all_primes());
        let edge = Face(vec![FaceCoord::Open, FaceCoord::Zero, FaceCoord::One]);
        assert_eq!(vertex_decomposition(&pr, &edge), Err(Error::NotAVertex));
    }

    #[test]
    fn vertices_transport_to_nowhere_etale_strata() {
        for f in [vec![1], vec![3], vec![2, 1], vec![1, 1, 1], vec![2, 2, 2], vec![6], vec![3, 2, 1]] {
            let pr = profile(&f);
            for bits in 0..=full_mask(pr.g()) {
                let face = Face(
                    (0..pr.g())
                        .map(|k| if bits >> k & 1 == 1 { FaceCoord::One } else { FaceCoord::Zero })
                        .collect(),
                );
                let pair = pair_of_face(&pr, &face).unwrap();
                let d = vertex_decomposition(&pr, &face).unwrap();
                assert!(is_nowhere_etale(&pr, &w_t_pair(&pr, &pair, d.t0).unwrap()).unwrap());
                assert!(is_nowhere_etale(&pr, &w_t_pair(&pr, &pair, d.t0.union(d.t2)).unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn record_json() {
        let pr = profile(&[2]);
        let face = Face(vec![FaceCoord::Open, FaceCoord::Zero]);
        let pair = pair_of_face(&pr, &face).unwrap();
        let rec = StratumRecord::new(&pr, &pair).unwrap();
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            json,
            r#"{"phi":["0/1"],"eta":["0/0","0/1"],"codim":1,"nowhere_etale":true,"badness":"bad","beta0":"0/0","j":null}"#
        );
    }

    fn pair_strategy() -> impl Strategy<Value = (PrimeProfile, AdmissiblePair)> {
        prop::collection::vec(1usize..4, 1..4)
            .prop_filter("g <= 6", |f| f.iter().sum::<usize>() <= 6)
            .prop_flat_map(|f| {
                let g: usize = f.iter().sum();
                (Just(f), prop::collection::vec(0u8..3, g))
            })
            .prop_map(|(f, states)| {
                let pr = PrimeProfile::new(3, f).unwrap();
                let face = Face(
                    states
                        .into_iter()
                        .map(|s| [FaceCoord::Zero, FaceCoord::One, FaceCoord::Open][s as usize])
                        .collect(),
                );
                let pair = pair_of_face(&pr, &face).unwrap();
                (pr, pair)
            })
    }

    proptest! {
        #[test]
        fn w_t_is_an_involution_intertwined_with_face_flip((pr, pair) in pair_strategy(), t in any::<u64>()) {
            let t = PrimeSet(t & pr.all_primes().0);
            let once = w_t_pair(&pr, &pair, t).unwrap();
            prop_assert!(is_admissible(&pr, once.phi, once.eta).unwrap());
            prop_assert_eq!(w_t_pair(&pr, &once, t).unwrap(), pair);
            let face = face_of_pair(&pr, &pair).unwrap();
            prop_assert_eq!(face_of_pair(&pr, &once).unwrap(), face.flipped(pr.blocks_of(t)));
        }

        #[test]
        fn poset_laws((pr, pair) in pair_strategy()) {
            let c = codim(&pr, &pair).unwrap();
            prop_assert_eq!(c + pr.g(), pair.phi.len() + pair.eta.len());
            let closure = closure_set(&pr, &pair).unwrap();
            prop_assert!(closure.contains(&pair));
            for q in &closure {
                prop_assert!(codim(&pr, q).unwrap() >= c);
                for r in closure_set(&pr, q).unwrap() {
                    prop_assert!(closure.contains(&r));
                }
            }
            let free = pair.phi.complement().intersection(pair.eta.complement()).len();
            prop_assert_eq!(pi_image(&pr, &pair).unwrap().len(), 1usize << free);
        }
    }
}

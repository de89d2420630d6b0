//! Property checks shared by the `suite` command and the acceptance target.
//!
//! Each check is a self-contained sweep with its own brute-force oracle and
//! returns a [`CheckResult`] whose JSON form is deterministic.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use num_integer::Integer;
use overcon::characters::{gauss_sum, run_twist_trials, FiniteField, MultChar};
use overcon::degrees::{pair_of_degvec, w_t_deg};
use overcon::hecke::{bk_newton_degree, low_dimension_grid, newton_extremes, BkDegree};
use overcon::rational::{format_q, q};
use overcon::regions::{sigma_case, SigmaCase};
use overcon::strata::{closure_set, codim, enumerate_admissible, is_admissible, pair_of_face, pi_image, w_t_pair};
use overcon::strata::{Face, FaceCoord};
use overcon::{AdmissiblePair, DegreeVector, PrimeProfile, RegionReport, Result, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Failures kept verbatim in a result.
pub const MAX_LISTED_FAILURES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub counts: BTreeMap<String, u64>,
    pub violations: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        Self { name: name.into(), pass: true, counts: BTreeMap::new(), violations: 0, failures: Vec::new() }
    }

    fn count(mut self, key: &str, value: u64) -> Self {
        self.counts.insert(key.into(), value);
        self
    }

    fn fail(&mut self, message: String) {
        self.pass = false;
        self.violations += 1;
        if self.failures.len() < MAX_LISTED_FAILURES {
            self.failures.push(message);
        }
    }

    fn absorb(&mut self, failures: Vec<String>) {
        for f in failures {
            self.fail(f);
        }
    }

    /// Summary of a region report; the expected verdict is a pass.
    pub fn from_report(name: &str, report: &RegionReport) -> Self {
        let mut out = Self::new(name);
        out.counts = report.counts.iter().map(|(k, v)| (k.clone(), *v)).collect();
        out.pass = report.pass;
        out.violations = report.counterexamples_total;
        out.failures = report
            .counterexamples
            .iter()
            .take(MAX_LISTED_FAILURES)
            .map(|c| serde_json::to_string(c).expect("counterexamples serialize"))
            .collect();
        out
    }
}

/// `enumerate_admissible` against a filter over all `4^g` pairs.
pub fn census(profile: &PrimeProfile) -> Result<CheckResult> {
    let listed = enumerate_admissible(profile)?;
    let mut brute = Vec::new();
    for phi in profile.subsets() {
        for eta in profile.subsets() {
            if is_admissible(profile, phi, eta)? {
                brute.push(AdmissiblePair { phi, eta });
            }
        }
    }
    brute.sort();
    let expected = 3u64.pow(profile.g() as u32);
    let mut out = CheckResult::new("strata-census")
        .count("pairs", listed.len() as u64)
        .count("candidates", 4u64.pow(profile.g() as u32));
    if listed.len() as u64 != expected {
        out.fail(format!("{} pairs, expected {expected}", listed.len()));
    }
    if listed != brute {
        out.fail(format!("enumeration differs from the brute-force filter ({} pairs)", brute.len()));
    }
    Ok(out)
}

fn random_face<R: Rng>(g: usize, rng: &mut R) -> Face {
    Face(
        (0..g)
            .map(|_| match rng.gen_range(0..3) {
                0 => FaceCoord::Zero,
                1 => FaceCoord::One,
                _ => FaceCoord::Open,
            })
            .collect(),
    )
}

fn describe(profile: &PrimeProfile, pair: &AdmissiblePair) -> String {
    let names = |s: overcon::EmbeddingSubset| s.iter().map(|k| profile.format_index(k)).collect::<Vec<_>>().join(",");
    format!("phi={{{}}} eta={{{}}}", names(pair.phi), names(pair.eta))
}

fn poset_violations(profile: &PrimeProfile, all: &[AdmissiblePair], pair: &AdmissiblePair) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    let who = describe(profile, pair);
    let face = overcon::strata::face_of_pair(profile, pair)?;
    let c = codim(profile, pair)?;
    if c != face.dim() {
        bad.push(format!("{who}: codim {c} but the face has {} open coordinates", face.dim()));
    }
    let closure = closure_set(profile, pair)?;
    let members: HashSet<AdmissiblePair> = closure.iter().copied().collect();
    if !members.contains(pair) {
        bad.push(format!("{who}: closure misses its argument"));
    }
    let oracle: Vec<AdmissiblePair> =
        all.iter().filter(|x| pair.phi.is_subset(x.phi) && pair.eta.is_subset(x.eta)).copied().collect();
    if oracle != closure {
        bad.push(format!("{who}: closure has {} pairs, filter gives {}", closure.len(), oracle.len()));
    }
    for m in &closure {
        if codim(profile, m)? < c {
            bad.push(format!("{who}: closure member {} has smaller codimension", describe(profile, m)));
        }
        for k in 0..profile.g() {
            for up in [AdmissiblePair { phi: m.phi.with(k), eta: m.eta }, AdmissiblePair { phi: m.phi, eta: m.eta.with(k) }]
            {
                if is_admissible(profile, up.phi, up.eta)? && !members.contains(&up) {
                    bad.push(format!("{who}: closure not upward closed at {}", describe(profile, &up)));
                }
            }
        }
    }
    let image = pi_image(profile, pair)?;
    let free = pair.phi.complement().intersection(pair.eta.complement()).len();
    let distinct: HashSet<_> = image.iter().collect();
    if image.len() != 1 << free || distinct.len() != image.len() {
        bad.push(format!("{who}: pi_image has {} elements, expected {}", image.len(), 1u64 << free));
    }
    let core = pair.phi.intersection(pair.eta);
    let ceiling = core.union(pair.phi.complement().intersection(pair.eta.complement()));
    if image.iter().any(|t| !core.is_subset(t.0) || !t.0.is_subset(ceiling)) {
        bad.push(format!("{who}: pi_image leaves its bounds"));
    }
    Ok(bad)
}

/// Closure, codimension and `π`-image laws on random admissible pairs.
///
/// Pairs are drawn uniformly through the bijection with faces.
pub fn poset_laws(profile: &PrimeProfile, samples: usize, seed: u64) -> Result<CheckResult> {
    let all = enumerate_admissible(profile)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<AdmissiblePair> = (0..samples)
        .map(|_| pair_of_face(profile, &random_face(profile.g(), &mut rng)))
        .collect::<Result<_>>()?;
    let found: Vec<Vec<String>> = pairs.par_iter().map(|p| poset_violations(profile, &all, p)).collect::<Result<_>>()?;
    let mut out = CheckResult::new("poset-laws").count("samples", samples as u64);
    for f in found {
        out.absorb(f);
    }
    Ok(out)
}

fn random_degrees<R: Rng>(profile: &Arc<PrimeProfile>, den: i128, rng: &mut R) -> Result<DegreeVector> {
    let values: Vec<Q> = (0..profile.g())
        .map(|_| match rng.gen_range(0..3) {
            0 => Q::from_integer(0),
            1 => Q::from_integer(1),
            _ => q(rng.gen_range(1..den.max(2)), den.max(2)),
        })
        .collect();
    DegreeVector::new(profile.clone(), values, rng.gen_bool(0.5))
}

fn coherence_violations(h: &DegreeVector) -> Result<Vec<String>> {
    let pr = h.profile();
    let mut bad = Vec::new();
    let pair = pair_of_degvec(h)?;
    let who = || h.values().iter().map(format_q).collect::<Vec<_>>().join(",");
    if !is_admissible(pr, pair.phi, pair.eta)? {
        bad.push(format!("h=({}): stratum is not admissible", who()));
        return Ok(bad);
    }
    for t in pr.all_primes().subsets() {
        let moved = w_t_pair(pr, &pair, t)?;
        if w_t_pair(pr, &moved, t)? != pair {
            bad.push(format!("h=({}), T={:b}: w_T is not an involution", who(), t.0));
        }
        let image = w_t_deg(h, t);
        if pair_of_degvec(&image)? != moved {
            bad.push(format!("h=({}), T={:b}: square does not commute", who(), t.0));
        }
        if w_t_deg(&image, t).values() != h.values() {
            bad.push(format!("h=({}), T={:b}: degree action is not an involution", who(), t.0));
        }
    }
    Ok(bad)
}

/// Atkin-Lehner involution and the degree/stratum commuting square on random
/// vectors with denominator `den`, a third of the coordinates at each endpoint.
pub fn atkin_lehner(profile: &PrimeProfile, samples: usize, den: u64, seed: u64) -> Result<CheckResult> {
    let pr = Arc::new(profile.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vectors: Vec<DegreeVector> =
        (0..samples).map(|_| random_degrees(&pr, den as i128, &mut rng)).collect::<Result<_>>()?;
    let found: Vec<Vec<String>> = vectors.par_iter().map(coherence_violations).collect::<Result<_>>()?;
    let mut out = CheckResult::new("atkin-lehner")
        .count("samples", samples as u64)
        .count("subsets_per_sample", 1 << profile.num_primes());
    for f in found {
        out.absorb(f);
    }
    Ok(out)
}

/// Denominator of the Newton check: a multiple of `den` and of `p^f`.
pub fn newton_denominator(profile: &PrimeProfile, den: u64) -> u64 {
    den.lcm(&profile.p().pow(profile.max_residue_degree() as u32))
}

/// Compares the Newton-polygon verdict with the extreme `β₀`-coordinates of
/// the feasible grid on every generic low-dimension point of the bad case
/// with a one.  An exact verdict must equal both extremes; a lower bound
/// must not exceed the minimum.
pub fn newton_consistency(profile: &PrimeProfile, den: u64) -> Result<CheckResult> {
    let pr = Arc::new(profile.clone());
    let n = newton_denominator(profile, den);
    let points: Vec<DegreeVector> = low_dimension_grid(profile, n as i128)
        .into_iter()
        .map(|nums| DegreeVector::new(pr.clone(), nums.iter().map(|&x| q(x, n as i128)).collect(), true))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|h| matches!(sigma_case(h), SigmaCase::BadWithOne { .. }))
        .collect();
    let verdicts: Vec<(bool, bool, Option<String>)> = points
        .par_iter()
        .map(|h| {
            let SigmaCase::BadWithOne { beta0, j } = sigma_case(h) else { unreachable!("filtered") };
            let f = profile.degrees()[profile.prime_of(beta0)];
            let verdict = bk_newton_degree(profile.p(), f, j, h.get(beta0))?.degree;
            let extremes = newton_extremes(h, n)?;
            let who = || h.values().iter().map(format_q).collect::<Vec<_>>().join(",");
            let exact = matches!(verdict, BkDegree::Exact(_));
            let problem = match (verdict, extremes) {
                (_, None) => None,
                (BkDegree::Exact(v), Some((lo, hi))) if lo == v && hi == v => None,
                (BkDegree::LowerBound(v), Some((lo, _))) if lo >= v => None,
                (BkDegree::Exact(v), Some((lo, hi))) => Some(format!(
                    "h=({}): exact {} but extremes [{}, {}]",
                    who(),
                    format_q(&v),
                    format_q(&lo),
                    format_q(&hi)
                )),
                (BkDegree::LowerBound(v), Some((lo, _))) => {
                    Some(format!("h=({}): bound {} but minimum {}", who(), format_q(&v), format_q(&lo)))
                }
            };
            Ok((exact, extremes.is_some(), problem))
        })
        .collect::<Result<_>>()?;
    let mut out = CheckResult::new("newton")
        .count("points", verdicts.len() as u64)
        .count("exact", verdicts.iter().filter(|v| v.0).count() as u64)
        .count("nonempty", verdicts.iter().filter(|v| v.1).count() as u64)
        .count("denominator", n);
    out.absorb(verdicts.into_iter().filter_map(|v| v.2).collect());
    Ok(out)
}

/// Field sizes of the Gauss-sum check.
pub const GAUSS_FIELDS: [u64; 8] = [3, 4, 5, 7, 8, 9, 11, 13];

/// `W(ψ)W(ψ⁻¹) = ψ(−1)q` for every nontrivial `ψ`, and `W² = 5` for the
/// quadratic character of `𝔽_5`.
pub fn gauss_sums(fields: &[u64]) -> Result<CheckResult> {
    let mut out = CheckResult::new("gauss-sums");
    let mut checked = 0u64;
    for &size in fields {
        let k = Arc::new(FiniteField::new(size)?);
        for psi in MultChar::all_on_field(&k).into_iter().filter(|c| !c.is_trivial()) {
            checked += 1;
            let lhs = gauss_sum(&psi)?.times(&gauss_sum(&psi.inverse())?);
            let rhs = psi.value(k.minus_one() as u64).scale(size as i128);
            if lhs != rhs {
                out.fail(format!("q={size}, {}: W(psi)W(psi^-1) = {lhs}, expected {rhs}", psi.label()));
            }
        }
    }
    let k = Arc::new(FiniteField::new(5)?);
    let w = gauss_sum(&MultChar::on_field(k, 2))?;
    if w.times(&w).as_integer() != Some(5) {
        out.fail(format!("quadratic Gauss sum over F_5 squares to {}", w.times(&w)));
    }
    Ok(out.count("characters", checked).count("fields", fields.len() as u64))
}

/// Field and modulus pairs of the twist check.
pub const TWIST_CASES: [(u64, u64); 3] = [(3, 4), (5, 3), (9, 4)];

/// Twist identity over random seeds plus the corrupted-coefficient control.
pub fn twist(cases: &[(u64, u64)], trials: usize, seed: u64) -> Result<CheckResult> {
    let mut out = CheckResult::new("twist");
    let (mut total, mut degenerate, mut controls) = (0u64, 0u64, 0u64);
    for &(size, n) in cases {
        let report = run_twist_trials(size, n, trials, seed, MAX_LISTED_FAILURES)?;
        total += report.cases as u64;
        degenerate += report.degenerate_cases as u64;
        for case in &report.failures {
            out.fail(format!(
                "q={size}, n={n}, {} x {}, trial {}: first failure at {}",
                case.psi_p,
                case.psi_n,
                case.trial,
                case.outcome.first_failure.map_or("-".into(), |i| i.to_string())
            ));
        }
        match &report.negative_control {
            Some(c) if c.detected => controls += 1,
            Some(c) => out.fail(format!("q={size}, n={n}: corruption at {} went undetected", c.corrupted)),
            None => out.fail(format!("q={size}, n={n}: no negative control available")),
        }
        if !report.pass && out.pass {
            out.fail(format!("q={size}, n={n}: report failed"));
        }
    }
    Ok(out.count("cases", total).count("degenerate", degenerate).count("controls_detected", controls))
}

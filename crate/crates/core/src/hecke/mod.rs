//! The `U_p` correspondence on degree vectors: feasible degrees of a
//! complementary subgroup `D` over a level subgroup `H`, the canonical-image
//! test, and exhaustive sweeps over rational grids.
//!
//! The feasible set is cut out by necessary conditions only. A sweep therefore
//! checks that these conditions imply the canonical-image test; a `d` passing
//! every condition need not come from an actual subgroup scheme.

mod grid;
mod newton;

use std::sync::Arc;

use num_traits::{One, Zero};
use rayon::prelude::*;

pub use newton::{bk_newton_degree, bk_newton_degree_for_block, standard_block, BkDegree, BkNewton, Valuation};

use crate::degrees::{genericity_constraints, hodge_height, hodge_height_refined, raynaud_feasible, DegreeVector};
use crate::embeddings::PrimeProfile;
use crate::error::{Error, Result};
use crate::rational::{delta_sum, Q};
use crate::regions::{in_interval_region, in_sigma, in_vcan, istar_region, sigma_case, Membership, SigmaCase};
use crate::report::{Counterexample, RegionReport};

/// Default cap on `|𝔹| · denominator` for grid operations.
pub const DEFAULT_GRID_CAP: u64 = 1 << 20;

/// Families of necessary conditions imposed on `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConstraintSet {
    pub raynaud: bool,
    /// Consequences of genericity, including `w_β = 0` off `φ ∩ η`.
    pub genericity: bool,
    pub hodge: bool,
    /// The rules on blocks where every degree of `H` is 0 or 1.
    pub ordinary_blocks: bool,
    /// The Newton-polygon value at `β₀`.
    pub newton: bool,
}

impl Default for ConstraintSet {
    fn default() -> Self {
        Self::all()
    }
}

impl ConstraintSet {
    pub fn all() -> Self {
        Self { raynaud: true, genericity: true, hodge: true, ordinary_blocks: true, newton: true }
    }

    pub fn none() -> Self {
        Self { raynaud: false, genericity: false, hodge: false, ordinary_blocks: false, newton: false }
    }

    /// Drops every family that relies on the point being generic.
    pub fn without_genericity() -> Self {
        Self { genericity: false, ordinary_blocks: false, newton: false, ..Self::all() }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        (!self.raynaud || other.raynaud)
            && (!self.genericity || other.genericity)
            && (!self.hodge || other.hodge)
            && (!self.ordinary_blocks || other.ordinary_blocks)
            && (!self.newton || other.newton)
    }
}

/// Degrees of a level subgroup `H` and a complementary subgroup `D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsogenyDatum {
    pub h: DegreeVector,
    pub d: DegreeVector,
}

impl IsogenyDatum {
    /// Accepts the pair only if every necessary condition holds.
    pub fn new(h: DegreeVector, d: DegreeVector) -> Result<Self> {
        if let Some(clause) = violated_condition(&h, &d, &ConstraintSet::all())? {
            return Err(Error::InvalidDegrees(format!("violates the {clause} condition")));
        }
        Ok(Self { h, d })
    }
}

/// First condition family violated by `(h, d)`, evaluated pointwise in
/// exact rationals.
pub fn violated_condition(h: &DegreeVector, d: &DegreeVector, cs: &ConstraintSet) -> Result<Option<&'static str>> {
    if h.is_cusp() || d.is_cusp() {
        return Err(Error::CuspInput);
    }
    if h.profile() != d.profile() {
        return Err(Error::ProfileMismatch);
    }
    let pr = h.profile();
    let generic = h.generic();
    for prime in 0..pr.num_primes() {
        if cs.raynaud && !raynaud_feasible(h, d, prime)? {
            return Ok(Some("raynaud"));
        }
        if cs.genericity && generic && !genericity_constraints(h, d, prime)? {
            return Ok(Some("genericity"));
        }
    }
    if cs.hodge {
        for k in 0..pr.g() {
            let wh = if cs.genericity && generic { hodge_height_refined(h, k)? } else { hodge_height(h, k)? };
            if !wh.intersects(&hodge_height(d, k)?) {
                return Ok(Some("hodge"));
            }
        }
    }
    if cs.ordinary_blocks && generic {
        for prime in 0..pr.num_primes() {
            let block: Vec<usize> = pr.prime_block(prime)?.iter().collect();
            let f = block.len();
            let ordinary = block.iter().all(|&k| h.get(k).is_zero() || h.get(k).is_one());
            let etale = block.iter().all(|&k| h.get(k).is_zero());
            if !ordinary || etale {
                continue;
            }
            let upper = delta_sum(pr.p(), f - 1);
            let lower = Q::new(1, pr.p() as i128);
            for &k in &block {
                let x = d.get(k);
                let ok = if h.get(k).is_one() && h.get(pr.sigma(k)).is_zero() && f > 1 {
                    lower <= x && x <= upper
                } else {
                    x.is_zero()
                };
                if !ok {
                    return Ok(Some("ordinary-block"));
                }
            }
        }
    }
    if cs.newton && generic {
        if let SigmaCase::BadWithOne { beta0, j } = sigma_case(h) {
            let f = pr.degrees()[pr.prime_of(beta0)];
            let ok = match bk_newton_degree(pr.p(), f, j, h.get(beta0))?.degree {
                BkDegree::Exact(v) => d.get(beta0) == v,
                BkDegree::LowerBound(v) => d.get(beta0) >= v,
            };
            if !ok {
                return Ok(Some("newton"));
            }
        }
    }
    Ok(None)
}

fn check_grid(profile: &PrimeProfile, denominator: u64, cap: u64) -> Result<i128> {
    if denominator == 0 {
        return Err(Error::OutOfRange("denominator must be positive".into()));
    }
    let size = (profile.g() as u64).saturating_mul(denominator);
    if size > cap {
        return Err(Error::GridTooLarge(format!("|𝔹|·denominator = {size} exceeds {cap}")));
    }
    Ok(denominator as i128)
}

fn vector_from_numerators(profile: &Arc<PrimeProfile>, nums: &[i128], n: i128, generic: bool) -> DegreeVector {
    let values = nums.iter().map(|&x| Q::new(x, n)).collect();
    DegreeVector::new(profile.clone(), values, generic).expect("grid values lie in [0,1]")
}

/// All `d` on the grid with denominator `denominator` meeting every condition.
pub fn feasible_d_grid(h: &DegreeVector, denominator: u64) -> Result<Vec<DegreeVector>> {
    feasible_d_grid_with(h, denominator, &ConstraintSet::all(), DEFAULT_GRID_CAP)
}

pub fn feasible_d_grid_with(
    h: &DegreeVector,
    denominator: u64,
    constraints: &ConstraintSet,
    cap: u64,
) -> Result<Vec<DegreeVector>> {
    if h.is_cusp() {
        return Err(Error::CuspInput);
    }
    let n = check_grid(h.profile(), denominator, cap)?;
    let nums = grid::feasible_numerators(h, n, constraints)?;
    Ok(nums.iter().map(|x| vector_from_numerators(h.profile_arc(), x, n, false)).collect())
}

/// One failure of `p·d_β + d_{σβ} < p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanViolation {
    pub beta: usize,
    pub lhs: Q,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanTestResult {
    pub pass: bool,
    /// Failures at embeddings of primes with `f > 1`.
    pub violations: Vec<CanViolation>,
    /// Failures at embeddings of primes with `f = 1`, where the test is not required.
    pub unrequired: Vec<CanViolation>,
}

/// `p·d_β + d_{σβ} < p` at every embedding.
pub fn can_test(d: &DegreeVector) -> Result<CanTestResult> {
    if d.is_cusp() {
        return Err(Error::CuspInput);
    }
    let pr = d.profile();
    let p = Q::from_integer(pr.p() as i128);
    let mut violations = Vec::new();
    let mut unrequired = Vec::new();
    for k in 0..pr.g() {
        let lhs = p * d.get(k) + d.get(pr.sigma(k));
        if lhs >= p {
            let v = CanViolation { beta: k, lhs };
            if pr.degrees()[pr.prime_of(k)] > 1 {
                violations.push(v);
            } else {
                unrequired.push(v);
            }
        }
    }
    Ok(CanTestResult { pass: violations.is_empty(), violations, unrequired })
}

/// Options for the grid sweeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepConfig {
    pub denominator: u64,
    pub constraints: ConstraintSet,
    pub max_counterexamples: usize,
    /// Visit every grid point rather than only those on faces of dimension ≤ 1.
    pub exhaustive_grid: bool,
    pub cap: u64,
}

impl SweepConfig {
    pub fn new(denominator: u64) -> Self {
        Self {
            denominator,
            constraints: ConstraintSet::all(),
            max_counterexamples: 20,
            exhaustive_grid: false,
            cap: DEFAULT_GRID_CAP,
        }
    }

    pub fn drop_genericity(mut self) -> Self {
        self.constraints = ConstraintSet::without_genericity();
        self
    }

    pub fn max_counterexamples(mut self, k: usize) -> Self {
        self.max_counterexamples = k;
        self
    }

    pub fn exhaustive(mut self) -> Self {
        self.exhaustive_grid = true;
        self
    }
}

/// Grid points on faces of dimension at most one, sorted lexicographically.
/// Every point of `Σ` lies on such a face.
pub fn low_dimension_grid(profile: &PrimeProfile, n: i128) -> Vec<Vec<i128>> {
    let g = profile.g();
    let mut out = Vec::new();
    for bits in 0u64..1 << g {
        let vertex: Vec<i128> = (0..g).map(|k| if bits >> k & 1 == 1 { n } else { 0 }).collect();
        out.push(vertex.clone());
        for k in 0..g {
            if vertex[k] != 0 {
                continue;
            }
            for t in 1..n {
                let mut v = vertex.clone();
                v[k] = t;
                out.push(v);
            }
        }
    }
    out.sort();
    out
}

/// Every grid point, sorted lexicographically.
pub fn full_grid(profile: &PrimeProfile, n: i128) -> Vec<Vec<i128>> {
    let mut out = vec![Vec::new()];
    for _ in 0..profile.g() {
        out = out
            .into_iter()
            .flat_map(|v: Vec<i128>| {
                (0..=n).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

fn sweep_points(profile: &PrimeProfile, cfg: &SweepConfig) -> Result<(Arc<PrimeProfile>, i128, Vec<Vec<i128>>)> {
    let n = check_grid(profile, cfg.denominator, cfg.cap)?;
    let points = if cfg.exhaustive_grid {
        let total = (n as u128 + 1).checked_pow(profile.g() as u32).unwrap_or(u128::MAX);
        if total > cfg.cap as u128 * 16 {
            return Err(Error::GridTooLarge(format!("{total} grid points")));
        }
        full_grid(profile, n)
    } else {
        low_dimension_grid(profile, n)
    };
    Ok((Arc::new(profile.clone()), n, points))
}

#[derive(Default)]
struct PointOutcome {
    inside: u64,
    indeterminate: u64,
    pairs: u64,
    violations: u64,
    kept: Vec<Counterexample>,
}

/// Every `d` feasible over an `H` in `Σ` passes the canonical-image test.
pub fn verify_sigma_up(profile: &PrimeProfile, cfg: &SweepConfig) -> Result<RegionReport> {
    let (pr, n, points) = sweep_points(profile, cfg)?;
    let p = pr.p() as i128;
    let outcomes: Vec<Result<PointOutcome>> = points
        .par_iter()
        .map(|nums| {
            let h = vector_from_numerators(&pr, nums, n, true);
            let mut out = PointOutcome::default();
            match in_sigma(&h) {
                Membership::In => out.inside = 1,
                Membership::Indeterminate => {
                    out.indeterminate = 1;
                    return Ok(out);
                }
                Membership::Out => return Ok(out),
            }
            for x in grid::feasible_numerators(&h, n, &cfg.constraints)? {
                out.pairs += 1;
                for k in 0..pr.g() {
                    if pr.degrees()[pr.prime_of(k)] == 1 {
                        continue;
                    }
                    let lhs = p * x[k] + x[pr.sigma(k)];
                    if lhs >= p * n {
                        out.violations += 1;
                        if out.kept.len() < cfg.max_counterexamples.max(1) {
                            let d = vector_from_numerators(&pr, &x, n, false);
                            out.kept.push(
                                Counterexample::new("can-test")
                                    .with_h(&h)
                                    .with_d(&d)
                                    .with_beta(&pr, k)
                                    .with_lhs(Q::new(lhs, n)),
                            );
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut total = PointOutcome::default();
    let mut kept = Vec::new();
    for o in outcomes {
        let o = o?;
        total.inside += o.inside;
        total.indeterminate += o.indeterminate;
        total.pairs += o.pairs;
        total.violations += o.violations;
        kept.extend(o.kept);
    }
    let mut report = RegionReport::new("sigma-up", profile.clone(), Some(cfg.denominator), kept, cfg.max_counterexamples)
        .count("points", points.len() as u64)
        .count("in_sigma", total.inside)
        .count("indeterminate", total.indeterminate)
        .count("pairs", total.pairs);
    report.counterexamples_total = total.violations;
    report.pass = total.violations == 0;
    if cfg.constraints != ConstraintSet::all() {
        report = report.note("conditions relying on genericity are disabled");
    }
    Ok(report)
}

/// Degree content of saturation: membership in `Σ ∩ {deg_𝔭 ∈ 𝕀*_𝔭}` is a
/// function of the degree vector, and the images `1 − d` of feasible `d`
/// over points of `Σ` lie in `𝒱_can`.
pub fn saturation_check(profile: &PrimeProfile, cfg: &SweepConfig) -> Result<RegionReport> {
    let (pr, n, points) = sweep_points(profile, cfg)?;
    let istar = istar_region(&pr);
    let predicate = |h: &DegreeVector| -> Result<bool> {
        Ok(in_sigma(h) == Membership::In && in_interval_region(h, &istar)?)
    };
    let outcomes: Vec<Result<(u64, u64, u64, u64, Vec<Counterexample>)>> = points
        .par_iter()
        .map(|nums| {
            let h = vector_from_numerators(&pr, nums, n, true);
            let mut kept = Vec::new();
            let mut failures = 0u64;
            let value = predicate(&h)?;
            let json = serde_json::to_string(&h).map_err(|e| Error::Parse(e.to_string()))?;
            let mut copies = vec![DegreeVector::from_json(pr.clone(), &json)?];
            for prime in 0..pr.num_primes() {
                let t = crate::embeddings::PrimeSet::single(prime);
                copies.push(crate::degrees::w_t_deg(&crate::degrees::w_t_deg(&h, t), t));
            }
            for c in &copies {
                if predicate(c)? != value {
                    failures += 1;
                    kept.push(Counterexample::new("depends-on-more-than-degrees").with_h(&h));
                }
            }
            if in_sigma(&h) != Membership::In {
                return Ok((0, value as u64, 0, failures, kept));
            }
            let mut pairs = 0;
            for x in grid::feasible_numerators(&h, n, &cfg.constraints)? {
                pairs += 1;
                let image: Vec<i128> = x.iter().map(|v| n - v).collect();
                let image = vector_from_numerators(&pr, &image, n, false);
                if !in_vcan(&image) {
                    failures += 1;
                    if kept.len() < cfg.max_counterexamples.max(1) {
                        let d = vector_from_numerators(&pr, &x, n, false);
                        kept.push(Counterexample::new("image-outside-vcan").with_h(&h).with_d(&d));
                    }
                }
            }
            Ok((1, value as u64, pairs, failures, kept))
        })
        .collect();
    let (mut inside, mut filtered, mut pairs, mut failures) = (0, 0, 0, 0);
    let mut kept = Vec::new();
    for o in outcomes {
        let (a, b, c, d, k) = o?;
        inside += a;
        filtered += b;
        pairs += c;
        failures += d;
        kept.extend(k);
    }
    let mut report = RegionReport::new("saturation", profile.clone(), Some(cfg.denominator), kept, cfg.max_counterexamples)
        .count("points", points.len() as u64)
        .count("in_sigma", inside)
        .count("in_sigma_and_istar", filtered)
        .count("pairs", pairs);
    report.counterexamples_total = failures;
    report.pass = failures == 0;
    Ok(report)
}

/// Extreme `β₀`-coordinates of the feasible set at a point of the bad
/// codimension-one case with a one, or `None` if the set is empty.
pub fn newton_extremes(h: &DegreeVector, denominator: u64) -> Result<Option<(Q, Q)>> {
    let beta0 = match sigma_case(h) {
        SigmaCase::BadWithOne { beta0, .. } => beta0,
        _ => return Err(Error::OutOfRange("not a bad codimension-one point with a one".into())),
    };
    let ds = feasible_d_grid(h, denominator)?;
    let lo = ds.iter().map(|d| d.get(beta0)).min();
    let hi = ds.iter().map(|d| d.get(beta0)).max();
    Ok(lo.zip(hi))
}

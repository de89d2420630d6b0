//! Enumeration of complementary degrees on a grid `{0, 1/N, …, 1}^𝔹`.
//!
//! Every constraint is local to one prime, so each block is solved on its
//! own and the full set is the product. Inside a block the search walks the
//! `σ`-cycle, deriving the candidates for `d_β` from `d_{σ⁻¹β}` through the
//! Hodge-height condition at `β`.

use num_traits::{One, Zero};

use crate::degrees::{hodge_height, hodge_height_refined, DegreeVector, HodgeInterval};
use crate::error::Result;
use crate::hecke::newton::{bk_newton_degree, BkDegree};
use crate::hecke::ConstraintSet;
use crate::rational::{delta_sum, Q};
use crate::regions::{sigma_case, SigmaCase};

/// Numerators of the grid points allowed for `d_β` given `d_{σ⁻¹β}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Candidates {
    Empty,
    Point(i128),
    UpTo(i128),
}

fn floor_q(x: Q) -> i128 {
    x.floor().to_integer()
}

fn ceil_q(x: Q) -> i128 {
    x.ceil().to_integer()
}

fn integral(x: Q) -> Option<i128> {
    x.is_integer().then(|| x.to_integer())
}

/// Grid points `b` with `min{p·a, N − b}` compatible with the scaled interval `w`.
fn hodge_candidates(p: i128, n: i128, a: i128, w: &HodgeInterval) -> Candidates {
    let u = Q::from_integer(p * a);
    let lower = w.lower * n;
    let point = |x: Q| match integral(x) {
        Some(b) if (0..=n).contains(&b) => Candidates::Point(b),
        _ => Candidates::Empty,
    };
    let up_to = || {
        let top = floor_q(Q::from_integer(n) - lower);
        if top < 0 {
            Candidates::Empty
        } else {
            Candidates::UpTo(top.min(n))
        }
    };
    if w.exact {
        if u < lower {
            point(Q::from_integer(n) - u)
        } else if u == lower {
            up_to()
        } else {
            point(Q::from_integer(n) - lower)
        }
    } else if u >= lower {
        up_to()
    } else {
        point(Q::from_integer(n) - u)
    }
}

#[cfg(test)]
fn hodge_allows(p: i128, n: i128, a: i128, b: i128, w: &HodgeInterval) -> bool {
    match hodge_candidates(p, n, a, w) {
        Candidates::Empty => false,
        Candidates::Point(x) => x == b,
        Candidates::UpTo(top) => b <= top,
    }
}

struct Block {
    p: i128,
    n: i128,
    /// Degrees of `H` along the block, in position order.
    h: Vec<Q>,
    lo: Vec<i128>,
    hi: Vec<i128>,
    hodge: Option<Vec<HodgeInterval>>,
    generic_rule: bool,
    raynaud: bool,
}

impl Block {
    fn len(&self) -> usize {
        self.h.len()
    }

    fn prev(&self, k: usize) -> usize {
        (k + self.len() - 1) % self.len()
    }

    fn raynaud_ok(&self, x: &[i128]) -> bool {
        if !self.raynaud {
            return true;
        }
        let f = self.len();
        for start in 0..f {
            let mut lhs = 0i128;
            let mut rhs = Q::zero();
            for i in 0..f {
                let k = (start + i) % f;
                let w = self.p.pow((f - 1 - i) as u32);
                lhs += w * x[k];
                rhs += Q::from_integer(w) * (Q::one() - self.h[k]) * self.n;
            }
            if Q::from_integer(lhs) > rhs {
                return false;
            }
        }
        true
    }

    /// Values of `d_k` allowed by the constraints between `k − 1` and `k`
    /// when `d_{k−1} = a`.
    fn successors(&self, a: i128, k: usize) -> Candidates {
        let prev = self.prev(k);
        let mut cand = match &self.hodge {
            Some(w) => hodge_candidates(self.p, self.n, a, &w[k]),
            None => Candidates::UpTo(self.n),
        };
        if self.generic_rule && self.h[prev].is_zero() && a != 0 {
            cand = match cand {
                Candidates::Point(b) if b == self.n => cand,
                Candidates::UpTo(top) if top >= self.n => Candidates::Point(self.n),
                _ => Candidates::Empty,
            };
        }
        cand
    }

    /// Removes values of `d_k` without support in `d_{k−1}` and vice versa.
    fn revise(&self, domains: &mut [Vec<bool>], k: usize) -> bool {
        let prev = self.prev(k);
        let n = self.n as usize;
        let mut changed = false;
        if prev == k {
            for a in 0..=n {
                if domains[k][a] && !self.edge_ok_values(a as i128, a as i128, k) {
                    domains[k][a] = false;
                    changed = true;
                }
            }
            return changed;
        }
        let mut top = -1i128;
        let mut points = vec![false; n + 1];
        for a in 0..=n {
            if !domains[prev][a] {
                continue;
            }
            match self.successors(a as i128, k) {
                Candidates::Empty => {}
                Candidates::Point(b) => points[b as usize] = true,
                Candidates::UpTo(t) => top = top.max(t),
            }
        }
        for b in 0..=n {
            if domains[k][b] && !(b as i128 <= top || points[b]) {
                domains[k][b] = false;
                changed = true;
            }
        }
        let mut prefix = vec![0usize; n + 2];
        for b in 0..=n {
            prefix[b + 1] = prefix[b] + usize::from(domains[k][b]);
        }
        for a in 0..=n {
            if !domains[prev][a] {
                continue;
            }
            let supported = match self.successors(a as i128, k) {
                Candidates::Empty => false,
                Candidates::Point(b) => domains[k][b as usize],
                Candidates::UpTo(t) => t >= 0 && prefix[t as usize + 1] > 0,
            };
            if !supported {
                domains[prev][a] = false;
                changed = true;
            }
        }
        changed
    }

    fn edge_ok_values(&self, a: i128, b: i128, k: usize) -> bool {
        match self.successors(a, k) {
            Candidates::Empty => false,
            Candidates::Point(x) => x == b,
            Candidates::UpTo(top) => b <= top,
        }
    }

    fn solve(&self) -> Vec<Vec<i128>> {
        let f = self.len();
        let n = self.n as usize;
        let mut domains: Vec<Vec<bool>> = (0..f)
            .map(|k| (0..=n as i128).map(|x| self.lo[k] <= x && x <= self.hi[k]).collect())
            .collect();
        while (0..f).fold(false, |changed, k| self.revise(&mut domains, k) | changed) {}
        let sizes: Vec<usize> = domains.iter().map(|d| d.iter().filter(|&&x| x).count()).collect();
        if sizes.iter().any(|&s| s == 0) {
            return Vec::new();
        }
        let start = (0..f).min_by_key(|&k| (sizes[k], k)).expect("nonempty block");
        let mut out = Vec::new();
        let mut x = vec![0i128; f];
        for first in (0..=n).filter(|&v| domains[start][v]) {
            x[start] = first as i128;
            self.extend(&domains, &mut x, start, 1, &mut out);
        }
        out.sort();
        out
    }

    fn extend(&self, domains: &[Vec<bool>], x: &mut Vec<i128>, start: usize, depth: usize, out: &mut Vec<Vec<i128>>) {
        let f = self.len();
        if depth == f {
            if self.edge_ok_values(x[self.prev(start)], x[start], start) && self.raynaud_ok(x) {
                out.push(x.clone());
            }
            return;
        }
        let k = (start + depth) % f;
        let (lo, hi) = match self.successors(x[self.prev(k)], k) {
            Candidates::Empty => return,
            Candidates::Point(b) => (b, b),
            Candidates::UpTo(top) => (0, top),
        };
        for b in lo.max(0)..=hi.min(self.n) {
            if domains[k][b as usize] {
                x[k] = b;
                self.extend(domains, x, start, depth + 1, out);
            }
        }
    }
}

/// Numerator vectors (over `n`) of all feasible `d`, sorted lexicographically.
pub(crate) fn feasible_numerators(h: &DegreeVector, n: i128, constraints: &ConstraintSet) -> Result<Vec<Vec<i128>>> {
    let pr = h.profile();
    let p = pr.p() as i128;
    let generic = h.generic();
    let use_generic = constraints.genericity && generic;
    let use_ordinary = constraints.ordinary_blocks && generic;
    let nq = Q::from_integer(n);

    // the Newton pin at β₀ for the bad codimension-one case with a one
    let mut pin: Option<(usize, BkDegree)> = None;
    if constraints.newton && generic {
        if let SigmaCase::BadWithOne { beta0, j } = sigma_case(h) {
            let f = pr.degrees()[pr.prime_of(beta0)];
            pin = Some((beta0, bk_newton_degree(pr.p(), f, j, h.get(beta0))?.degree));
        }
    }

    let mut per_block: Vec<Vec<Vec<i128>>> = Vec::with_capacity(pr.num_primes());
    for prime in 0..pr.num_primes() {
        let block = pr.prime_block(prime)?;
        let idx: Vec<usize> = block.iter().collect();
        let f = idx.len();
        let bound = delta_sum(pr.p(), f - 1);
        let hv: Vec<Q> = idx.iter().map(|&k| h.get(k)).collect();
        let mut lo = vec![0i128; f];
        let mut hi = vec![n; f];

        if constraints.raynaud {
            // single-term consequence of the constraint starting at position k
            for k in 0..f {
                let rhs: Q = (0..f)
                    .map(|i| Q::from_integer(p.pow((f - 1 - i) as u32)) * (Q::one() - hv[(k + i) % f]))
                    .sum();
                let top = floor_q(rhs * nq / Q::from_integer(p.pow((f - 1) as u32)));
                hi[k] = hi[k].min(top);
            }
        }
        if use_generic {
            for k in 0..f {
                if hv[k].is_one() {
                    hi[k] = hi[k].min(floor_q(bound * nq));
                    let prev = (k + f - 1) % f;
                    hi[prev] = 0;
                }
            }
        }
        let ordinary = hv.iter().all(|x| x.is_zero() || x.is_one());
        let etale_here = hv.iter().all(|x| x.is_zero());
        if use_ordinary && ordinary && !etale_here {
            for k in 0..f {
                let next = (k + 1) % f;
                if f > 1 && hv[k].is_one() && hv[next].is_zero() {
                    lo[k] = lo[k].max(ceil_q(nq / Q::from_integer(p)));
                    hi[k] = hi[k].min(floor_q(bound * nq));
                } else {
                    hi[k] = 0;
                }
            }
        }
        if let Some((beta0, verdict)) = pin {
            if let Some(k) = idx.iter().position(|&b| b == beta0) {
                match verdict {
                    BkDegree::Exact(v) => match integral(v * nq) {
                        Some(x) => {
                            lo[k] = lo[k].max(x);
                            hi[k] = hi[k].min(x);
                        }
                        None => {
                            lo[k] = 1;
                            hi[k] = 0;
                        }
                    },
                    BkDegree::LowerBound(v) => lo[k] = lo[k].max(ceil_q(v * nq)),
                }
            }
        }
        for k in 0..f {
            hi[k] = hi[k].min(n);
            lo[k] = lo[k].max(0);
        }
        let hodge = if constraints.hodge {
            let mut ws = Vec::with_capacity(f);
            for &k in &idx {
                ws.push(if use_generic { hodge_height_refined(h, k)? } else { hodge_height(h, k)? });
            }
            Some(ws)
        } else {
            None
        };
        let solver = Block { p, n, h: hv, lo, hi, hodge, generic_rule: use_generic, raynaud: constraints.raynaud };
        let sols = solver.solve();
        if sols.is_empty() {
            return Ok(Vec::new());
        }
        per_block.push(sols);
    }

    let mut out: Vec<Vec<i128>> = vec![Vec::with_capacity(pr.g())];
    for sols in per_block {
        let mut next = Vec::with_capacity(out.len() * sols.len());
        for prefix in &out {
            for s in &sols {
                let mut v = prefix.clone();
                v.extend_from_slice(s);
                next.push(v);
            }
        }
        out = next;
    }
    Ok(out)
}

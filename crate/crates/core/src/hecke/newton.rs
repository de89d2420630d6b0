//! Newton-polygon evaluation of the degree of a complementary subgroup at the
//! open direction `β₀` of a bad codimension-one stratum whose block contains
//! a one.
//!
//! Embeddings are indexed relative to `β₀`: entry `i` of a block is the degree
//! at `σ^i β₀`. The polynomial satisfied by `y = y_{σ⁻¹β₀}` has three terms, in
//! degrees `0`, `p^L − 1` and `p^L`, where `L` is the block length.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{delta_sum, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BkDegree {
    Exact(Q),
    LowerBound(Q),
}

impl BkDegree {
    pub fn value(self) -> Q {
        match self {
            BkDegree::Exact(v) | BkDegree::LowerBound(v) => v,
        }
    }
}

/// Valuation of one coefficient: exact, or only a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Valuation {
    pub value: Q,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BkNewton {
    pub degree: BkDegree,
    /// `v_p(y_{σ⁻¹β₀})`; an upper bound when `y_valuation_exact` is false.
    pub y_valuation: Q,
    pub y_valuation_exact: bool,
    /// Whether the two leading terms of `a_{β₀} + b_{β₀} y^p` have equal valuation.
    pub cancellation: bool,
    pub constant_term: Valuation,
    pub middle_term: Valuation,
    pub top_term: Valuation,
    pub j: usize,
}

fn pow(p: u64, e: usize) -> Q {
    Q::from_integer((p as i128).pow(e as u32))
}

/// Degree at `β₀` for a block `h_{σ^i β₀}`, `i = 0..L`, with `h_{β₀} ∈ (0,1)`,
/// a zero at `σβ₀`, all other entries in `{0, 1}` and at least one one.
pub fn bk_newton_degree_for_block(p: u64, block: &[Q]) -> Result<BkNewton> {
    let len = block.len();
    let h = block.first().copied().ok_or_else(|| Error::OutOfRange("empty block".into()))?;
    if h <= Q::zero() || h >= Q::one() {
        return Err(Error::OutOfRange(format!("degree {h} at β₀ must lie in (0,1)")));
    }
    if block[1..].iter().any(|x| !x.is_zero() && !x.is_one()) {
        return Err(Error::OutOfRange("block entries off β₀ must be 0 or 1".into()));
    }
    if len < 3 || !block[1].is_zero() {
        return Err(Error::OutOfRange("the entry after β₀ must vanish".into()));
    }
    let j = block
        .iter()
        .skip(2)
        .position(|x| x.is_one())
        .map(|i| i + 1)
        .ok_or_else(|| Error::OutOfRange("block has no one".into()))?;

    // degree at σ^{-k} β₀, k = 1..=L
    let back = |k: usize| block[(len - k % len) % len];
    let constant: Q = (1..=len).map(|k| pow(p, k - 1) * (Q::one() - back(k))).sum();
    let middle: Q = (1..=len).map(|k| pow(p, k - 1) * back(k)).sum();

    // terms of the top coefficient; b sits at σ^{-(i+1)} β₀
    let mut terms: Vec<Valuation> = Vec::new();
    for i in 0..len {
        let pos = (len - (i + 1) % len) % len;
        let b_exact_unit = pos == 0 || pos == j + 1;
        if !b_exact_unit && block[pos].is_zero() {
            continue;
        }
        let a_part: Q = (1..=i).map(|k| pow(p, k - 1) * (Q::one() - back(k))).sum();
        let d_part: Q = (i + 2..=len).map(|k| pow(p, k - 1) * back(k)).sum();
        terms.push(Valuation { value: a_part + d_part, exact: b_exact_unit });
    }
    let least = terms.iter().map(|t| t.value).min().expect("the β₀ term is present");
    let minimal: Vec<&Valuation> = terms.iter().filter(|t| t.value == least).collect();
    let top = Valuation { value: least, exact: minimal.len() == 1 && minimal[0].exact };

    let n = pow(p, len);
    let slope = (constant - top.value) / n;
    if top.exact {
        // the middle point must lie on or above the single segment
        let on_line = constant - slope * (n - Q::one());
        if middle < on_line {
            return Err(Error::OutOfRange("Newton polygon has two segments".into()));
        }
    }

    let pv = Q::from_integer(p as i128) * slope;
    let va = Q::one() - h;
    let (degree, cancellation) = if top.exact {
        if pv > va {
            (BkDegree::Exact(h), false)
        } else if pv < va {
            (BkDegree::Exact(Q::one() - pv), false)
        } else {
            (BkDegree::Exact(delta_sum(p, j)), true)
        }
    } else {
        (BkDegree::LowerBound(Q::one() - pv.min(va)), pv == va)
    };
    Ok(BkNewton {
        degree,
        y_valuation: slope,
        y_valuation_exact: top.exact,
        cancellation,
        constant_term: Valuation { value: constant, exact: true },
        middle_term: Valuation { value: middle, exact: true },
        top_term: top,
        j,
    })
}

/// The block `(h, 0, …, 0, 1, 1, …)` with `j` zeros, of length `max(f, j + 2)`.
pub fn standard_block(f: usize, j: usize, h: Q) -> Vec<Q> {
    let len = f.max(j + 2);
    let mut block = vec![Q::one(); len];
    block[0] = h;
    for x in block.iter_mut().take(j + 1).skip(1) {
        *x = Q::zero();
    }
    block
}

/// Degree at `β₀` of every complementary subgroup for the pattern `(p, f, j)`.
///
/// The result depends on `(p, j, h)` only; when `j = f − 1` the polygon is
/// evaluated on the shortest block realizing the pattern.
pub fn bk_newton_degree(p: u64, f: usize, j: usize, h: Q) -> Result<BkNewton> {
    if j < 1 || j + 1 > f {
        return Err(Error::OutOfRange(format!("j = {j} must lie in [1, {})", f)));
    }
    if h <= Q::zero() || h >= Q::one() {
        return Err(Error::OutOfRange(format!("degree {h} must lie in (0,1)")));
    }
    bk_newton_degree_for_block(p, &standard_block(f, j, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn three_branches() {
        let r = bk_newton_degree(3, 3, 2, q(1, 2)).unwrap();
        assert_eq!(r.degree, BkDegree::Exact(q(4, 9)));
        assert_eq!(r.y_valuation, q(1, 6));
        assert!(r.cancellation);
        let r = bk_newton_degree(3, 3, 2, q(1, 3)).unwrap();
        assert_eq!(r.degree, BkDegree::Exact(q(1, 3)));
        // (1/p)(1 − h) + (1/p)(δ_j − h)
        assert_eq!(r.y_valuation, q(2, 9) + (q(4, 9) - q(1, 3)) / 3);
        let r = bk_newton_degree(3, 3, 2, q(4, 9)).unwrap();
        assert_eq!(r.degree, BkDegree::LowerBound(q(4, 9)));
        assert!(!r.y_valuation_exact);
        assert_eq!(r.y_valuation, (Q::one() - q(4, 9)) / 3);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(bk_newton_degree(3, 3, 1, Q::zero()).is_err());
        assert!(bk_newton_degree(3, 3, 1, Q::one()).is_err());
        assert!(bk_newton_degree(3, 3, 0, q(1, 2)).is_err());
        assert!(bk_newton_degree(3, 3, 3, q(1, 2)).is_err());
    }

    fn closed_form(p: u64, j: usize, h: Q) -> (BkDegree, Q) {
        let dj = delta_sum(p, j);
        let pq = Q::from_integer(p as i128);
        if h > dj {
            (BkDegree::Exact(dj), (Q::one() - h) / pq)
        } else if h < dj {
            (BkDegree::Exact(h), (Q::one() - h) / pq + (dj - h) / pq)
        } else {
            (BkDegree::LowerBound(dj), (Q::one() - dj) / pq)
        }
    }

    #[test]
    fn matches_closed_form_for_every_filling() {
        for p in [3u64, 5, 7] {
            for len in 3..=6usize {
                for j in 1..=len - 2 {
                    let free = len - j - 2;
                    for mask in 0..1u32 << free {
                        for num in 1..(2 * p.pow(3)) as i128 {
                            let h = q(num, 2 * p.pow(3) as i128);
                            let mut block = standard_block(len, j, h);
                            for b in 0..free {
                                block[j + 2 + b] = if mask >> b & 1 == 1 { Q::one() } else { Q::zero() };
                            }
                            let r = bk_newton_degree_for_block(p, &block).unwrap();
                            let (deg, vy) = closed_form(p, j, h);
                            assert_eq!(r.degree, deg, "p={p} block={block:?}");
                            assert_eq!(r.y_valuation, vy, "p={p} block={block:?}");
                            assert_eq!(r.j, j);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn exact_values_respect_the_raynaud_bound() {
        for p in [3u64, 5] {
            for f in 3..=5usize {
                for j in 1..f - 1 {
                    let den = 4 * (p as i128).pow(f as u32);
                    for num in 1..den {
                        let h = q(num, den);
                        if let BkDegree::Exact(d) = bk_newton_degree(p, f, j, h).unwrap().degree {
                            assert!(h + d <= Q::one() + delta_sum(p, f - 1));
                        }
                    }
                }
            }
        }
    }
}

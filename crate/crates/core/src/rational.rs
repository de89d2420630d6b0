//! Exact rationals and the geometric thresholds built from them.

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Exact rational number used for every degree and threshold.
pub type Q = Ratio<i128>;

pub fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

pub fn q_int(n: i128) -> Q {
    Q::from_integer(n)
}

pub fn parse_q(s: &str) -> Result<Q> {
    s.trim()
        .parse::<Q>()
        .map_err(|_| Error::Parse(format!("not a rational: {s:?}")))
}

pub fn format_q(x: &Q) -> String {
    x.to_string()
}

/// `δ_j = Σ_{i=1}^{j} p^{-i}`; `j = 0` gives the empty sum.
pub fn delta_sum(p: u64, j: usize) -> Q {
    let p = p as i128;
    let mut acc = Q::zero();
    let mut term = Q::one();
    for _ in 0..j {
        term /= p;
        acc += term;
    }
    acc
}

pub fn in_unit_interval(x: &Q) -> bool {
    *x >= Q::zero() && *x <= Q::one()
}

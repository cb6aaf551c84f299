use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest stub count for which [`non_attachment_prob`] uses exact rationals.
const EXACT_LIMIT: u64 = 64;

fn check_args(n: u64, m: u64, l: u64) -> Result<()> {
    if l % 2 == 1 {
        return Err(Error::InvalidArgument(format!("L = {l} must be even")));
    }
    if n.checked_add(m).is_none_or(|s| s > l) {
        return Err(Error::InvalidArgument(format!("n + m = {n} + {m} exceeds L = {l}")));
    }
    Ok(())
}

/// Probability that none of `n` stubs in a set A is paired with any of `m`
/// stubs in a disjoint set B, under a uniform matching of `L` stubs.
///
/// Exact rational arithmetic is used up to `L = 64`.
pub fn non_attachment_prob(n: u64, m: u64, l: u64) -> Result<f64> {
    check_args(n, m, l)?;
    if l <= EXACT_LIMIT {
        let p = non_attachment_prob_exact(n, m, l)?;
        return Ok(p.to_f64().expect("probability is finite"));
    }
    let mut memo = HashMap::new();
    Ok(recurse(n, l, &mut memo, &Float { m }))
}

/// Exact rational version of [`non_attachment_prob`].
pub fn non_attachment_prob_exact(n: u64, m: u64, l: u64) -> Result<BigRational> {
    check_args(n, m, l)?;
    let mut memo = HashMap::new();
    Ok(recurse(n, l, &mut memo, &Exact { m }))
}

trait Field {
    type V: Clone;
    fn one(&self) -> Self::V;
    fn zero(&self) -> Self::V;
    /// `(n-1)/(L-1)` and `1 - (m+n-1)/(L-1)`.
    fn coefficients(&self, n: u64, l: u64) -> (Self::V, Self::V);
    fn mul_add(&self, a: &Self::V, x: &Self::V, b: &Self::V, y: &Self::V) -> Self::V;
    fn m(&self) -> u64;
}

struct Float {
    m: u64,
}

impl Field for Float {
    type V = f64;
    fn one(&self) -> f64 {
        1.0
    }
    fn zero(&self) -> f64 {
        0.0
    }
    fn coefficients(&self, n: u64, l: u64) -> (f64, f64) {
        let d = (l - 1) as f64;
        ((n - 1) as f64 / d, (l - self.m - n) as f64 / d)
    }
    fn mul_add(&self, a: &f64, x: &f64, b: &f64, y: &f64) -> f64 {
        a * x + b * y
    }
    fn m(&self) -> u64 {
        self.m
    }
}

struct Exact {
    m: u64,
}

impl Field for Exact {
    type V = BigRational;
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn coefficients(&self, n: u64, l: u64) -> (BigRational, BigRational) {
        let d = BigInt::from(l - 1);
        (
            BigRational::new(BigInt::from(n - 1), d.clone()),
            BigRational::new(BigInt::from(l - self.m - n), d),
        )
    }
    fn mul_add(&self, a: &BigRational, x: &BigRational, b: &BigRational, y: &BigRational) -> BigRational {
        a * x + b * y
    }
    fn m(&self) -> u64 {
        self.m
    }
}

/// p(n, m, L) = (n-1)/(L-1) p(n-2, m, L-2) + (1 - (m+n-1)/(L-1)) p(n-1, m, L-2)
fn recurse<F: Field>(n: u64, l: u64, memo: &mut HashMap<(u64, u64), F::V>, field: &F) -> F::V {
    if n == 0 {
        return field.one();
    }
    if n + field.m() > l {
        return field.zero();
    }
    if let Some(v) = memo.get(&(n, l)) {
        return v.clone();
    }
    let (a, b) = field.coefficients(n, l);
    let pair_within = if n >= 2 {
        recurse(n - 2, l - 2, memo, field)
    } else {
        field.zero()
    };
    let pair_outside = if n + field.m() < l {
        recurse(n - 1, l - 2, memo, field)
    } else {
        field.zero()
    };
    let v = field.mul_add(&a, &pair_within, &b, &pair_outside);
    memo.insert((n, l), v.clone());
    v
}

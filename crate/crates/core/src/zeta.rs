//! Riemann zeta and its tails via Euler–Maclaurin summation.

use crate::error::{Error, Result};

/// Number of terms summed explicitly before the Euler–Maclaurin correction.
const DIRECT_TERMS: u64 = 32;

// B_{2k} / (2k)! for k = 1..6
const BERNOULLI_OVER_FACTORIAL: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
];

/// Riemann zeta function for real `s > 1`, absolute error well below 1e-12.
pub fn zeta(s: f64) -> Result<f64> {
    zeta_tail(s, 1)
}

/// `sum_{m >= n} m^{-s}` (Hurwitz zeta at integer offset), for `s > 1`, `n >= 1`.
pub fn zeta_tail(s: f64, n: u64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::ZetaDomain(s));
    }
    let n = n.max(1);
    let cut = n.max(DIRECT_TERMS);
    let direct: f64 = (n..cut).map(|m| (m as f64).powf(-s)).sum();
    Ok(direct + euler_maclaurin_tail(s, cut as f64))
}

/// `sum_{m >= a} m^{-s}` for `a` large enough that the asymptotic series is accurate.
fn euler_maclaurin_tail(s: f64, a: f64) -> f64 {
    let mut total = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // k-th correction: B_{2k}/(2k)! * s(s+1)...(s+2k-2) * a^{-s-2k+1}
    let mut rising = s;
    let mut power = a.powf(-s - 1.0);
    for (k, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if k > 0 {
            let j = 2.0 * k as f64;
            rising *= (s + j - 1.0) * (s + j);
            power /= a * a;
        }
        total += coeff * rising * power;
    }
    total
}

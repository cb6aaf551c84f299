//! Empirical and limiting survival curves of the hopcount, centering constants,
//! and curve comparison.

use std::io::{self, Write};
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::bp::eval_limit_law;
use crate::degree::MomentSummary;
use crate::error::{Error, Result};

/// Whether infinite hopcounts are dropped or counted as exceeding every `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    #[default]
    FiniteOnly,
    Unconditional,
}

/// `P(H > k)` on a contiguous range of `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub k: Vec<i64>,
    pub survival: Vec<f64>,
    pub sample_count: usize,
    pub conditioning: Conditioning,
    /// Fraction of the raw sample that was infinite.
    pub dropped_fraction: f64,
    /// Value of the curve below its support, when known.
    pub below: Option<f64>,
    /// Value of the curve above its support, when known.
    pub above: Option<f64>,
}

impl SurvivalCurve {
    pub fn first_k(&self) -> i64 {
        self.k[0]
    }

    pub fn last_k(&self) -> i64 {
        self.k[self.k.len() - 1]
    }

    /// Value at `k`, extended past the support where the extension is known.
    pub fn value_at(&self, k: i64) -> Option<f64> {
        if k < self.first_k() {
            self.below
        } else if k > self.last_k() {
            self.above
        } else {
            Some(self.survival[(k - self.first_k()) as usize])
        }
    }

    /// The same curve with every `k` moved by `-by`, e.g. to centre at `sigma_N`.
    pub fn recentred(&self, by: i64) -> SurvivalCurve {
        SurvivalCurve {
            k: self.k.iter().map(|k| k - by).collect(),
            ..self.clone()
        }
    }

    /// CSV with columns `k,survival,n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "k,survival,n")?;
        for (k, s) in self.k.iter().zip(&self.survival) {
            writeln!(w, "{k},{s},{}", self.sample_count)?;
        }
        Ok(())
    }
}

/// Centering of the hopcount at size `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenteringInfo {
    pub n: u64,
    pub nu: f64,
    /// `floor(log_nu N)`
    pub sigma_n: i64,
    /// `sigma_N - log_nu N`, in `(-1, 0]`.
    pub a_n: f64,
}

impl CenteringInfo {
    pub fn log_nu_n(&self) -> f64 {
        self.sigma_n as f64 - self.a_n
    }
}

pub fn centering(n: u64, nu: f64) -> Result<CenteringInfo> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("centering needs N >= 2, got {n}")));
    }
    if !(nu > 1.0 && nu.is_finite()) {
        return Err(Error::InvalidArgument(format!("centering needs nu > 1, got {nu}")));
    }
    let nf = n as f64;
    let log = nf.ln() / nu.ln();
    let mut sigma = log.floor() as i64;
    while nu.powi(sigma as i32 + 1) <= nf {
        sigma += 1;
    }
    while sigma > 0 && nu.powi(sigma as i32) > nf {
        sigma -= 1;
    }
    let a_n = (sigma as f64 - log).min(0.0).max(-1.0 + f64::EPSILON);
    Ok(CenteringInfo {
        n,
        nu,
        sigma_n: sigma,
        a_n,
    })
}

/// `floor(n1 * ratio^j)` for `j = 0, 1, ..., count - 1`.
pub fn geometric_sizes(n1: u64, ratio: f64, count: usize) -> Vec<u64> {
    (0..count)
        .map(|j| (n1 as f64 * ratio.powi(j as i32)).floor() as u64)
        .collect()
}

/// Empirical `P(H > k)` for `k` from one below the smallest finite value to
/// the largest one.
pub fn empirical_survival(hopcounts: &[Option<u64>], conditioning: Conditioning) -> Result<SurvivalCurve> {
    if hopcounts.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut finite: Vec<u64> = hopcounts.iter().flatten().copied().collect();
    let infinite = hopcounts.len() - finite.len();
    let dropped_fraction = infinite as f64 / hopcounts.len() as f64;
    if finite.is_empty() {
        if conditioning == Conditioning::FiniteOnly {
            return Err(Error::AllInfinite);
        }
        return Ok(SurvivalCurve {
            k: vec![0],
            survival: vec![1.0],
            sample_count: hopcounts.len(),
            conditioning,
            dropped_fraction,
            below: Some(1.0),
            above: Some(1.0),
        });
    }
    finite.sort_unstable();
    let (n, extra) = match conditioning {
        Conditioning::FiniteOnly => (finite.len(), 0),
        Conditioning::Unconditional => (hopcounts.len(), infinite),
    };
    let lo = finite[0] as i64 - 1;
    let hi = finite[finite.len() - 1] as i64;
    let k: Vec<i64> = (lo..=hi).collect();
    let survival = k
        .iter()
        .map(|&k| {
            let at_most = finite.partition_point(|&h| h as i64 <= k);
            (finite.len() - at_most + extra) as f64 / n as f64
        })
        .collect();
    Ok(SurvivalCurve {
        k,
        survival,
        sample_count: n,
        conditioning,
        dropped_fraction,
        below: Some(1.0),
        above: Some(extra as f64 / n as f64),
    })
}

/// `sup_k |c1(k) - c2(k + shift)|` over all `k` where both values are known.
pub fn shift_distance(c1: &SurvivalCurve, c2: &SurvivalCurve, shift: i64) -> Result<f64> {
    let lo = c1.first_k().min(c2.first_k() - shift);
    let hi = c1.last_k().max(c2.last_k() - shift);
    let mut sup: Option<f64> = None;
    for k in lo..=hi {
        if let (Some(a), Some(b)) = (c1.value_at(k), c2.value_at(k + shift)) {
            let d = (a - b).abs();
            sup = Some(sup.map_or(d, |s| s.max(d)));
        }
    }
    sup.ok_or(Error::EmptyOverlap(shift))
}

/// Conditional survival of `R_{a_N}` over `k_range`, in centred coordinates
/// (`k` stands for `H - sigma_N`).
pub fn theoretical_survival_curve(
    center: &CenteringInfo,
    w_pairs: &[(f64, f64)],
    moments: &MomentSummary,
    k_range: RangeInclusive<i64>,
) -> Result<SurvivalCurve> {
    let law = eval_limit_law(center.a_n, k_range, w_pairs, moments)?;
    Ok(SurvivalCurve {
        k: law.k,
        survival: law.survival,
        sample_count: law.surviving_pairs,
        conditioning: Conditioning::FiniteOnly,
        dropped_fraction: 0.0,
        below: None,
        above: None,
    })
}

/// Fractions of finite hopcounts within `K` of `log_nu N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub log_nu_n: f64,
    pub finite_count: usize,
    /// `(K, fraction)` pairs in the order requested.
    pub fractions: Vec<(u64, f64)>,
}

pub fn tightness_report(hopcounts: &[Option<u64>], center: &CenteringInfo, k_list: &[u64]) -> Result<TightnessReport> {
    let finite: Vec<f64> = hopcounts.iter().flatten().map(|&h| h as f64).collect();
    if finite.is_empty() {
        return Err(Error::AllInfinite);
    }
    let target = center.log_nu_n();
    let fractions = k_list
        .iter()
        .map(|&k| {
            let inside = finite.iter().filter(|&&h| (h - target).abs() <= k as f64).count();
            (k, inside as f64 / finite.len() as f64)
        })
        .collect();
    Ok(TightnessReport {
        log_nu_n: target,
        finite_count: finite.len(),
        fractions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::DegreeLaw;
    use proptest::prelude::*;

    const NU_35: f64 = 2.2313812219953007;

    #[test]
    fn centering_at_nu_itself() {
        let c = centering(2, 2.0).unwrap();
        assert_eq!(c.sigma_n, 1);
        assert_eq!(c.a_n, 0.0);
        let c = centering(9, 3.0).unwrap();
        assert_eq!(c.sigma_n, 2);
        assert_eq!(c.a_n, 0.0);
    }

    #[test]
    fn centering_for_pareto_three_and_a_half() {
        let nu = DegreeLaw::pareto_ceil(3.5).unwrap().moments().unwrap().nu;
        assert!((nu - NU_35).abs() < 1e-12);
        let c = centering(25_000, nu).unwrap();
        assert_eq!(c.sigma_n, 12);
        assert!((c.a_n + 0.62).abs() < 0.005);
        let c = centering(75_000, nu).unwrap();
        assert_eq!(c.sigma_n, 13);
        assert!((c.a_n + 0.99).abs() < 0.005);
        // oracle: repeated multiplication instead of logarithms
        let mut p = 1.0;
        let mut sigma = 0;
        while p * nu <= 125_000.0 {
            p *= nu;
            sigma += 1;
        }
        assert_eq!(centering(125_000, nu).unwrap().sigma_n, sigma);
    }

    #[test]
    fn centering_rejects_bad_input() {
        assert!(centering(1, 2.0).is_err());
        assert!(centering(100, 1.0).is_err());
    }

    #[test]
    fn geometric_sizes_floor() {
        assert_eq!(geometric_sizes(5000, 5.0, 4), vec![5000, 25_000, 125_000, 625_000]);
        assert_eq!(geometric_sizes(10, 1.5, 3), vec![10, 15, 22]);
    }

    #[test]
    fn constant_sample_is_a_step() {
        let c = empirical_survival(&[Some(5); 10], Conditioning::FiniteOnly).unwrap();
        for k in 0..5 {
            assert_eq!(c.value_at(k), Some(1.0));
        }
        for k in 5..9 {
            assert_eq!(c.value_at(k), Some(0.0));
        }
    }

    #[test]
    fn finite_only_drops_infinite_values() {
        let c = empirical_survival(&[Some(3), None], Conditioning::FiniteOnly).unwrap();
        assert_eq!(c.dropped_fraction, 0.5);
        assert_eq!(c.sample_count, 1);
        assert_eq!(c.value_at(2), Some(1.0));
        assert_eq!(c.value_at(3), Some(0.0));

        let u = empirical_survival(&[Some(3), None], Conditioning::Unconditional).unwrap();
        assert_eq!(u.value_at(3), Some(0.5));
        assert_eq!(u.value_at(100), Some(0.5));

        assert_eq!(
            empirical_survival(&[None, None], Conditioning::FiniteOnly),
            Err(Error::AllInfinite)
        );
        assert!(empirical_survival(&[None], Conditioning::Unconditional).is_ok());
        assert_eq!(
            empirical_survival(&[], Conditioning::FiniteOnly),
            Err(Error::EmptySample)
        );
    }

    #[test]
    fn shift_examples() {
        let c = empirical_survival(&[Some(5); 4], Conditioning::FiniteOnly).unwrap();
        assert_eq!(shift_distance(&c, &c, 0).unwrap(), 0.0);
        assert_eq!(shift_distance(&c, &c, 1).unwrap(), 1.0);
        let d = empirical_survival(&[Some(7); 4], Conditioning::FiniteOnly).unwrap();
        assert_eq!(shift_distance(&c, &d, 2).unwrap(), 0.0);
    }

    #[test]
    fn shift_needs_overlap() {
        let partial = SurvivalCurve {
            k: vec![0, 1],
            survival: vec![0.5, 0.2],
            sample_count: 1,
            conditioning: Conditioning::FiniteOnly,
            dropped_fraction: 0.0,
            below: None,
            above: None,
        };
        assert_eq!(shift_distance(&partial, &partial, 5), Err(Error::EmptyOverlap(5)));
    }

    #[test]
    fn regular_curve_matches_closed_form() {
        let law = DegreeLaw::regular(3).unwrap();
        let m = law.moments().unwrap();
        let center = centering(100_000, m.nu).unwrap();
        let curve = theoretical_survival_curve(&center, &[(1.0, 1.0)], &m, -5..=5).unwrap();
        for (k, s) in curve.k.iter().zip(&curve.survival) {
            let want = (-3.0 * 2f64.powf(center.a_n + *k as f64)).exp();
            assert!((s - want).abs() < 1e-12);
        }
        assert!(curve.value_at(40).is_none());
        let far = theoretical_survival_curve(&center, &[(1.0, 1.0)], &m, 40..=40).unwrap();
        assert!(far.survival[0] < 1e-300);
    }

    #[test]
    fn tightness_of_constant_sample() {
        let c = centering(1000, 2.0).unwrap();
        let hops = vec![Some(c.sigma_n as u64); 5];
        let r = tightness_report(&hops, &c, &[0, 1, 2]).unwrap();
        assert_eq!(r.fractions[1].1, 1.0);
        assert_eq!(r.fractions[2].1, 1.0);
        assert!(r.fractions[0].1 <= 1.0);
        assert!(tightness_report(&[None], &c, &[1]).is_err());
    }

    #[test]
    fn csv_columns() {
        let c = empirical_survival(&[Some(1), Some(2)], Conditioning::FiniteOnly).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,survival,n\n0,1,2\n1,0.5,2\n2,0,2\n");
    }

    fn sample() -> impl Strategy<Value = Vec<Option<u64>>> {
        prop::collection::vec(prop::option::weighted(0.9, 0u64..30), 1..60)
    }

    proptest! {
        #[test]
        fn survival_is_one_minus_cdf(hops in sample()) {
            let finite: Vec<u64> = hops.iter().flatten().copied().collect();
            prop_assume!(!finite.is_empty());
            let c = empirical_survival(&hops, Conditioning::FiniteOnly).unwrap();
            for w in c.survival.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            for k in -2..35i64 {
                let cdf = finite.iter().filter(|&&h| h as i64 <= k).count() as f64 / finite.len() as f64;
                prop_assert!((c.value_at(k).unwrap() - (1.0 - cdf)).abs() < 1e-12);
            }
        }

        #[test]
        fn shift_distance_is_symmetric(a in sample(), b in sample(), shift in -5i64..5) {
            let (Ok(c1), Ok(c2)) = (
                empirical_survival(&a, Conditioning::FiniteOnly),
                empirical_survival(&b, Conditioning::FiniteOnly),
            ) else {
                return Ok(());
            };
            prop_assert_eq!(shift_distance(&c1, &c2, shift).unwrap(), shift_distance(&c2, &c1, -shift).unwrap());
            prop_assert_eq!(shift_distance(&c1, &c1, 0).unwrap(), 0.0);
        }
    }
}

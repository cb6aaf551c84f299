//! Delayed Galton–Watson processes: first generation from the degree law `f`,
//! later generations from the offspring law `g`.

mod fixed_point;

use std::io::{self, Write};
use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::degree::{DegreeLaw, MomentSummary, OffspringLaw};
use crate::error::{Error, Result};

pub use fixed_point::{delayed_w_law, w_law_fixed_point, WGrid, WLaw};

/// Default bound on the cumulative population of one simulated process.
pub const DEFAULT_POPULATION_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpTrace {
    /// Generation sizes, starting with the single ancestor.
    pub z: Vec<u64>,
    pub extinct: bool,
    pub capped: bool,
}

/// Runs the delayed process for `n_gen` generations, stopping early on
/// extinction or once the cumulative population exceeds `cap`.
pub fn simulate_delayed_bp<R: Rng + ?Sized>(
    f: &DegreeLaw,
    g: &OffspringLaw,
    n_gen: usize,
    cap: u64,
    rng: &mut R,
) -> Result<BpTrace> {
    if n_gen == 0 || cap == 0 {
        return Err(Error::InvalidArgument("n_gen and cap must be positive".into()));
    }
    let mut z = vec![1, f.sample(rng)];
    let mut cumulative = 1 + z[1];
    let mut capped = false;
    while z.len() <= n_gen {
        let last = *z.last().expect("nonempty");
        if last == 0 {
            break;
        }
        if cumulative > cap {
            capped = true;
            break;
        }
        let next = g.sample_sum(last, rng);
        cumulative = cumulative.saturating_add(next);
        z.push(next);
    }
    let extinct = *z.last().expect("nonempty") == 0;
    if extinct {
        z.resize(n_gen + 1, 0);
    }
    Ok(BpTrace { z, extinct, capped })
}

/// Samples of `W_n = Z_n / (mu nu^{n-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WEstimate {
    pub samples: Vec<f64>,
    pub n_gen: usize,
    /// Fraction of samples equal to zero.
    pub atom_frequency: f64,
    /// Runs stopped by the population cap; their value uses the last generation reached.
    pub capped_runs: usize,
}

impl WEstimate {
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Standard error of the sample mean.
    pub fn standard_error(&self) -> f64 {
        let n = self.samples.len() as f64;
        let m = self.mean();
        let var = self.samples.iter().map(|w| (w - m).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }

    /// One `value,weight` row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "value,weight")?;
        let weight = 1.0 / self.samples.len() as f64;
        for x in &self.samples {
            writeln!(w, "{x},{weight}")?;
        }
        Ok(())
    }
}

/// `ceil(log_nu 10^6)`.
pub fn default_w_generations(nu: f64) -> usize {
    (1e6f64.ln() / nu.ln()).ceil().max(1.0) as usize
}

/// Independent samples of `W_n`; `n_gen` defaults to [`default_w_generations`].
pub fn sample_w<R: Rng + ?Sized>(
    f: &DegreeLaw,
    g: &OffspringLaw,
    n_gen: Option<usize>,
    n_samples: usize,
    rng: &mut R,
) -> Result<WEstimate> {
    let nu = g.mean();
    if !(nu > 1.0) {
        return Err(Error::Subcritical(nu));
    }
    if n_samples == 0 {
        return Err(Error::EmptySample);
    }
    let n_gen = n_gen.unwrap_or_else(|| default_w_generations(nu));
    let mu = f.mean();
    let mut samples = Vec::with_capacity(n_samples);
    let mut capped_runs = 0;
    for _ in 0..n_samples {
        let trace = simulate_delayed_bp(f, g, n_gen, DEFAULT_POPULATION_CAP, rng)?;
        capped_runs += trace.capped as usize;
        let m = trace.z.len() - 1;
        let zm = trace.z[m];
        samples.push(if zm == 0 {
            0.0
        } else {
            zm as f64 / (mu * nu.powi(m as i32 - 1))
        });
    }
    let zeros = samples.iter().filter(|&&w| w == 0.0).count();
    Ok(WEstimate {
        atom_frequency: zeros as f64 / n_samples as f64,
        samples,
        n_gen,
        capped_runs,
    })
}

/// Survival probability `q` of the delayed process and the extinction
/// probability `s*` of the process started from one `g`-individual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extinction {
    pub q: f64,
    pub s_star: f64,
    pub iterations: usize,
}

/// Smallest fixed point of the offspring generating function by monotone
/// iteration from zero; `q = 1 - E[s*^D]`.
pub fn extinction_probability(f: &DegreeLaw, g: &OffspringLaw) -> Result<Extinction> {
    const MAX_ITER: usize = 1_000_000;
    let mut s = 0.0f64;
    for it in 1..=MAX_ITER {
        let next = g.pgf(s).min(1.0);
        let done = (next - s).abs() < 1e-14;
        s = next;
        if done {
            return Ok(Extinction {
                q: 1.0 - f.pgf(s),
                s_star: s,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence(MAX_ITER))
}

/// `P(R_a > k)` over a window of `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitLawResult {
    pub a: f64,
    pub k: Vec<i64>,
    pub survival: Vec<f64>,
    pub kappa: f64,
    /// Pairs with positive product that entered the average.
    pub surviving_pairs: usize,
}

fn check_a(a: f64) -> Result<()> {
    if a > -1.0 && a <= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("a must lie in (-1, 0], got {a}")))
    }
}

fn kappa_of(moments: &MomentSummary) -> Result<f64> {
    moments.kappa.ok_or(Error::Subcritical(moments.nu))
}

/// Mean of `exp(-kappa nu^x W1 W2)` over pairs with `W1 W2 > 0`.
///
/// The result depends on `a` and `k` only through `x = a + k`.
pub fn conditional_survival_at(x: f64, w_pairs: &[(f64, f64)], moments: &MomentSummary) -> Result<f64> {
    let kappa = kappa_of(moments)?;
    let scale = kappa * moments.nu.powf(x);
    let mut sum = 0.0;
    let mut count = 0usize;
    for &(w1, w2) in w_pairs {
        let p = w1 * w2;
        if p > 0.0 {
            sum += (-scale * p).exp();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoSurvivingPairs);
    }
    Ok(sum / count as f64)
}

/// Conditional Monte Carlo estimate of `P(R_a > k)` for `k` in `k_range`.
pub fn eval_limit_law(
    a: f64,
    k_range: RangeInclusive<i64>,
    w_pairs: &[(f64, f64)],
    moments: &MomentSummary,
) -> Result<LimitLawResult> {
    check_a(a)?;
    let kappa = kappa_of(moments)?;
    let surviving_pairs = w_pairs.iter().filter(|(w1, w2)| w1 * w2 > 0.0).count();
    let k: Vec<i64> = k_range.collect();
    let survival = k
        .iter()
        .map(|&k| conditional_survival_at(a + k as f64, w_pairs, moments))
        .collect::<Result<Vec<f64>>>()?;
    Ok(LimitLawResult {
        a,
        k,
        survival,
        kappa,
        surviving_pairs,
    })
}

/// Mean of `exp(-kappa nu^{a+k} W1 W2)` over all pairs; pairs with a zero
/// product contribute 1.
pub fn unconditional_survival(a: f64, k: i64, w_pairs: &[(f64, f64)], moments: &MomentSummary) -> Result<f64> {
    check_a(a)?;
    if w_pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    let kappa = kappa_of(moments)?;
    let scale = kappa * moments.nu.powf(a + k as f64);
    let sum: f64 = w_pairs.iter().map(|&(w1, w2)| (-scale * w1 * w2).exp()).sum();
    Ok(sum / w_pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedR {
    pub value: f64,
    /// Bound on the contribution of `k` outside the window.
    pub truncation_bound: f64,
}

/// `E[R_a] = sum_{k>=0} P(R_a > k) - sum_{k<0} (1 - P(R_a > k))`, summed over
/// `-window <= k <= window`.
pub fn expected_r(a: f64, w_pairs: &[(f64, f64)], moments: &MomentSummary, window: i64) -> Result<ExpectedR> {
    check_a(a)?;
    if window < 1 {
        return Err(Error::WindowTooSmall(format!(
            "window must be at least 1, got {window}"
        )));
    }
    let surv = |k: i64| conditional_survival_at(a + k as f64, w_pairs, moments);
    let upper = surv(window)?;
    let lower = 1.0 - surv(-window)?;
    if upper > 1e-6 || lower > 1e-6 {
        return Err(Error::WindowTooSmall(format!(
            "boundary terms P(R > {window}) = {upper:.3e}, P(R <= -{window}) = {lower:.3e} exceed 1e-6"
        )));
    }
    let mut value = 0.0;
    for k in 0..window {
        value += surv(k)?;
    }
    for k in -window..0 {
        value -= 1.0 - surv(k)?;
    }
    // below the window 1 - P(R > k) shrinks at least geometrically with ratio 1/nu;
    // above it the survival decays doubly exponentially
    let nu = moments.nu;
    let truncation_bound = lower / (nu - 1.0) + upper / (1.0 - (-1.0f64).exp());
    Ok(ExpectedR {
        value,
        truncation_bound,
    })
}

//! Degree laws, their moments, and the size-biased offspring law.
//!
//! A [`DegreeLaw`] is validated at construction and immutable afterwards.
//! Laws with unbounded support are represented exactly through their closed-form
//! pmf; where sampling or moment sums need a finite table, the table is cut at a
//! point whose certified tail mass is far below `1e-10`.

use std::sync::Arc;

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zeta::{zeta, zeta_tail};

/// Tail mass allowed beyond the tabulated head of a geometric-type law.
const TABLE_TAIL: f64 = 1e-15;
/// Longest head table we are willing to build.
const MAX_TABLE: usize = 20_000_000;
/// Head length of the tabulated size-biased Pareto law.
const PARETO_OFFSPRING_HEAD: usize = 4096;

/// Parametric description of a degree law, as written in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum LawSpec {
    /// `D = ceil(U^{-1/(tau-1)})`, so that `P(D > k) = k^{1-tau}` for integers `k >= 1`.
    ParetoCeil { tau: f64 },
    /// Every node has degree `r`.
    Regular { r: u32 },
    /// Degree law whose size-biased offspring law is geometric on `{1, 2, ...}`
    /// with success probability `p`.
    GeometricSizeBiased { p: f64 },
    /// `f_k = C k^{-gamma} e^{-k / cutoff}` for `k >= 1`.
    PowerLawExpCutoff { gamma: f64, cutoff: f64 },
    /// Explicit probabilities `f_0, f_1, ...`.
    Empirical { probs: Vec<f64> },
}

/// A validated degree distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "LawSpec", into = "LawSpec")]
pub struct DegreeLaw {
    spec: LawSpec,
    table: Option<Arc<PmfTable>>,
}

/// Finite head of a law together with a sampler over it.
#[derive(Debug)]
struct PmfTable {
    /// Normalizing constant applied to the unnormalized weights.
    norm: f64,
    /// Normalized probabilities `f_0 ..= f_J`.
    head: Vec<f64>,
    /// Certified bound on `sum_{k > J} k^2 f_k` (and thus on the tail mass).
    tail_bound: f64,
    alias: WeightedAliasIndex<f64>,
}

impl PartialEq for DegreeLaw {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl From<DegreeLaw> for LawSpec {
    fn from(law: DegreeLaw) -> Self {
        law.spec
    }
}

impl TryFrom<LawSpec> for DegreeLaw {
    type Error = Error;

    fn try_from(spec: LawSpec) -> Result<Self> {
        DegreeLaw::new(spec)
    }
}

/// Summary moments of a degree law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    /// `E[D]`
    pub mu: f64,
    /// `E[D(D-1)] / E[D]`, the mean of the size-biased offspring law.
    pub nu: f64,
    /// `mu / (nu - 1)`, defined only when `nu > 1`.
    pub kappa: Option<f64>,
    pub supercritical: bool,
}

impl MomentSummary {
    pub fn from_mu_nu(mu: f64, nu: f64) -> Self {
        let supercritical = nu > 1.0;
        MomentSummary {
            mu,
            nu,
            kappa: supercritical.then(|| mu / (nu - 1.0)),
            supercritical,
        }
    }
}

impl DegreeLaw {
    pub fn new(spec: LawSpec) -> Result<Self> {
        let table = match &spec {
            LawSpec::ParetoCeil { tau } => {
                if !(tau.is_finite() && *tau > 2.0) {
                    return Err(Error::InvalidParameter(format!(
                        "ParetoCeil needs tau > 2 (finite mean), got {tau}"
                    )));
                }
                None
            }
            LawSpec::Regular { r } => {
                if *r < 1 {
                    return Err(Error::InvalidParameter("Regular needs r >= 1".into()));
                }
                None
            }
            LawSpec::GeometricSizeBiased { p } => {
                if !(*p > 0.5 && *p < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "GeometricSizeBiased needs p in (1/2, 1), got {p}"
                    )));
                }
                Some(Arc::new(PmfTable::geometric_type(&spec)?))
            }
            LawSpec::PowerLawExpCutoff { gamma, cutoff } => {
                if !(cutoff.is_finite() && *cutoff > 0.0 && gamma.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "PowerLawExpCutoff needs finite gamma and cutoff > 0, got ({gamma}, {cutoff})"
                    )));
                }
                Some(Arc::new(PmfTable::geometric_type(&spec)?))
            }
            LawSpec::Empirical { probs } => Some(Arc::new(PmfTable::empirical(probs)?)),
        };
        Ok(DegreeLaw { spec, table })
    }

    pub fn pareto_ceil(tau: f64) -> Result<Self> {
        Self::new(LawSpec::ParetoCeil { tau })
    }

    pub fn regular(r: u32) -> Result<Self> {
        Self::new(LawSpec::Regular { r })
    }

    pub fn geometric_size_biased(p: f64) -> Result<Self> {
        Self::new(LawSpec::GeometricSizeBiased { p })
    }

    pub fn power_law_exp_cutoff(gamma: f64, cutoff: f64) -> Result<Self> {
        Self::new(LawSpec::PowerLawExpCutoff { gamma, cutoff })
    }

    pub fn empirical(probs: Vec<f64>) -> Result<Self> {
        Self::new(LawSpec::Empirical { probs })
    }

    pub fn spec(&self) -> &LawSpec {
        &self.spec
    }

    /// Normalizing constant `C` of the cutoff and geometric families.
    pub fn normalizer(&self) -> Option<f64> {
        match &self.spec {
            LawSpec::GeometricSizeBiased { .. } | LawSpec::PowerLawExpCutoff { .. } => {
                self.table.as_ref().map(|t| t.norm)
            }
            _ => None,
        }
    }

    /// `P(D = j)`.
    pub fn pmf(&self, j: u64) -> f64 {
        match &self.spec {
            LawSpec::ParetoCeil { tau } => {
                if j <= 1 {
                    0.0
                } else {
                    pareto_power_gap(j, 1.0 - tau)
                }
            }
            LawSpec::Regular { r } => {
                if j == u64::from(*r) {
                    1.0
                } else {
                    0.0
                }
            }
            LawSpec::Empirical { .. } => {
                let table = self.table();
                table.head.get(j as usize).copied().unwrap_or(0.0)
            }
            spec @ (LawSpec::GeometricSizeBiased { .. } | LawSpec::PowerLawExpCutoff { .. }) => {
                self.table().norm * unnormalized_weight(spec, j)
            }
        }
    }

    /// `P(D > j)`.
    pub fn survival(&self, j: u64) -> f64 {
        match &self.spec {
            LawSpec::ParetoCeil { tau } => {
                if j == 0 {
                    1.0
                } else {
                    (j as f64).powf(1.0 - tau)
                }
            }
            LawSpec::Regular { r } => {
                if j < u64::from(*r) {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                let table = self.table();
                let head: f64 = table.head.iter().skip(j as usize + 1).sum();
                head.max(0.0)
            }
        }
    }

    /// Largest degree with positive probability, when bounded.
    pub fn max_degree(&self) -> Option<u64> {
        match &self.spec {
            LawSpec::Regular { r } => Some(u64::from(*r)),
            LawSpec::Empirical { probs } => probs.iter().rposition(|&p| p > 0.0).map(|i| i as u64),
            _ => None,
        }
    }

    /// Draws one degree.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.spec {
            LawSpec::ParetoCeil { tau } => {
                let u: f64 = rng.sample(Open01);
                pareto_ceil_from_uniform(*tau, u)
            }
            LawSpec::Regular { r } => u64::from(*r),
            _ => self.table().alias.sample(rng) as u64,
        }
    }

    /// Mean degree `E[D]`; finite for every valid law.
    pub fn mean(&self) -> f64 {
        match &self.spec {
            LawSpec::ParetoCeil { tau } => 1.0 + zeta(tau - 1.0).expect("tau > 2"),
            LawSpec::Regular { r } => f64::from(*r),
            _ => self.table().head.iter().enumerate().map(|(j, p)| j as f64 * p).sum(),
        }
    }

    /// `mu`, `nu` and `kappa`.
    ///
    /// For `ParetoCeil` with `tau <= 3` the second moment is infinite and this
    /// returns [`Error::NuDiverges`].
    pub fn moments(&self) -> Result<MomentSummary> {
        let (mu, factorial2) = match &self.spec {
            LawSpec::ParetoCeil { tau } => {
                if *tau <= 3.0 {
                    return Err(Error::NuDiverges { tau: *tau });
                }
                (1.0 + zeta(tau - 1.0)?, 2.0 * zeta(tau - 2.0)?)
            }
            LawSpec::Regular { r } => {
                let r = f64::from(*r);
                (r, r * (r - 1.0))
            }
            _ => {
                let head = &self.table().head;
                let mu: f64 = head.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
                let f2: f64 = head
                    .iter()
                    .enumerate()
                    .map(|(j, p)| j as f64 * (j as f64 - 1.0) * p)
                    .sum();
                (mu, f2)
            }
        };
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::NonIntegrable);
        }
        Ok(MomentSummary::from_mu_nu(mu, factorial2 / mu))
    }

    /// Probability generating function `E[s^D]` for `s` in `[0, 1]`.
    pub fn pgf(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 1.0;
        }
        match &self.spec {
            LawSpec::Regular { r } => s.powi(*r as i32),
            LawSpec::Empirical { .. } | LawSpec::GeometricSizeBiased { .. } | LawSpec::PowerLawExpCutoff { .. } => {
                let mut acc = 0.0;
                for f in self.table().head.iter().rev() {
                    acc = acc * s + f;
                }
                acc
            }
            LawSpec::ParetoCeil { .. } => {
                // terms beyond `last` add at most s^last P(D > last)
                let last = if s <= 0.0 {
                    1
                } else {
                    ((1e-18f64).ln() / s.ln()).ceil().clamp(2.0, 1e7) as u64
                };
                let mut acc = 0.0;
                let mut power = s * s;
                for j in 2..=last {
                    acc += self.pmf(j) * power;
                    power *= s;
                }
                acc + power * self.survival(last)
            }
        }
    }

    /// Bound on the probability mass (and second moment) not covered by the
    /// finite tables used for moments; zero for closed-form laws.
    pub fn table_tail_bound(&self) -> f64 {
        self.table.as_ref().map_or(0.0, |t| t.tail_bound)
    }

    fn table(&self) -> &PmfTable {
        self.table.as_deref().expect("table-backed law")
    }
}

/// `ceil(u^{-1/(tau-1)})` for `u` in `(0, 1)`.
pub fn pareto_ceil_from_uniform(tau: f64, u: f64) -> u64 {
    let x = u.powf(-1.0 / (tau - 1.0)).ceil();
    if x >= u64::MAX as f64 {
        u64::MAX
    } else {
        x as u64
    }
}

/// `(j-1)^a - j^a` for `j >= 2`, computed without cancellation.
fn pareto_power_gap(j: u64, a: f64) -> f64 {
    let jf = j as f64;
    jf.powf(a) * (a * (-1.0 / jf).ln_1p()).exp_m1()
}

fn unnormalized_weight(spec: &LawSpec, j: u64) -> f64 {
    match spec {
        LawSpec::GeometricSizeBiased { p } => {
            if j < 2 {
                0.0
            } else {
                p * (1.0 - p).powf(j as f64 - 2.0) / j as f64
            }
        }
        LawSpec::PowerLawExpCutoff { gamma, cutoff } => {
            if j == 0 {
                0.0
            } else {
                let jf = j as f64;
                (-gamma * jf.ln() - jf / cutoff).exp()
            }
        }
        _ => unreachable!("closed-form law has no weight table"),
    }
}

/// Upper bound on `w(k+1)/w(k)` valid for all `k >= j`.
fn ratio_bound(spec: &LawSpec, j: u64) -> f64 {
    let jf = j.max(1) as f64;
    match spec {
        LawSpec::GeometricSizeBiased { p } => 1.0 - p,
        LawSpec::PowerLawExpCutoff { gamma, cutoff } => {
            let decay = (-1.0 / cutoff).exp();
            if *gamma >= 0.0 {
                decay
            } else {
                (1.0 + 1.0 / jf).powf(-gamma) * decay
            }
        }
        _ => unreachable!(),
    }
}

impl PmfTable {
    fn geometric_type(spec: &LawSpec) -> Result<Self> {
        let mut weights = Vec::new();
        let mut total = 0.0;
        let mut j: u64 = 0;
        let tail_bound = loop {
            let w = unnormalized_weight(spec, j);
            weights.push(w);
            total += w;
            if j >= 2 && w > 0.0 {
                // sum_{k>j} k^2 w(k) <= j^2 w(j) r'/(1-r') with r' = r (1+1/j)^2
                let jf = j as f64;
                let r = ratio_bound(spec, j) * (1.0 + 1.0 / jf).powi(2);
                if r < 1.0 {
                    let bound = jf * jf * w * r / (1.0 - r);
                    if bound < TABLE_TAIL * total {
                        break bound / total;
                    }
                }
            }
            j += 1;
            if weights.len() > MAX_TABLE {
                return Err(Error::InvalidParameter("law decays too slowly to tabulate".into()));
            }
        };
        let norm = 1.0 / total;
        let head: Vec<f64> = weights.iter().map(|w| w * norm).collect();
        let alias = WeightedAliasIndex::new(head.clone()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(PmfTable {
            norm,
            head,
            tail_bound,
            alias,
        })
    }

    fn empirical(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty probability vector".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidParameter(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let head: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let alias = WeightedAliasIndex::new(head.clone()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(PmfTable {
            norm: 1.0 / total,
            head,
            tail_bound: 0.0,
            alias,
        })
    }
}

/// Offspring law `g_j` of a branching process, stored as a finite head plus an
/// optional closed-form tail.
#[derive(Debug, Clone)]
pub struct OffspringLaw {
    head: Vec<f64>,
    tail: OffspringTail,
    tail_mass: f64,
    mean: f64,
    sampler: Arc<OffspringSampler>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum OffspringTail {
    /// All mass is in the head.
    Empty,
    /// Size-biased `ParetoCeil(tau)` beyond the head, with parent mean `mu`.
    ParetoCeil { tau: f64, mu: f64 },
}

#[derive(Debug)]
struct OffspringSampler {
    /// Alias over head values plus one trailing bucket for the tail.
    single: WeightedAliasIndex<f64>,
    /// `survival[j] = P(X > j)` over the head.
    survival: Vec<f64>,
}

/// Sums switch from binomial splitting to single draws below this many draws.
const SPLIT_LIMIT: u64 = 128;

/// The size-biased offspring law `g_j = (j+1) f_{j+1} / mu` of `law`.
pub fn size_biased_offspring(law: &DegreeLaw) -> Result<OffspringLaw> {
    let mu = law.mean();
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::NonIntegrable);
    }
    match law.spec() {
        LawSpec::ParetoCeil { tau } => {
            let tau = *tau;
            let head: Vec<f64> = (0..=PARETO_OFFSPRING_HEAD as u64)
                .map(|j| (j + 1) as f64 * law.pmf(j + 1) / mu)
                .collect();
            // sum_{j > J} g_j = E[D; D > k] / mu with k = J + 1
            let k = PARETO_OFFSPRING_HEAD as u64 + 1;
            let kf = k as f64;
            let survival = kf.powf(1.0 - tau);
            let tail_mass = ((kf + 1.0) * survival + zeta_tail(tau - 1.0, k + 1)?) / mu;
            let mean = if tau > 3.0 {
                // sum_{j > J} j g_j = E[D(D-1); D > k] / mu
                let tail_mean = ((kf + 1.0) * kf * survival + 2.0 * zeta_tail(tau - 2.0, k + 1)?) / mu;
                head_mean(&head) + tail_mean
            } else {
                f64::INFINITY
            };
            OffspringLaw::build(head, OffspringTail::ParetoCeil { tau, mu }, tail_mass, mean)
        }
        LawSpec::Regular { r } => {
            let mut head = vec![0.0; *r as usize];
            head[*r as usize - 1] = 1.0;
            OffspringLaw::from_probs(head)
        }
        _ => {
            let f = &law.table().head;
            let head: Vec<f64> = (1..f.len()).map(|d| d as f64 * f[d] / mu).collect();
            let total: f64 = head.iter().sum();
            let head: Vec<f64> = head.iter().map(|g| g / total).collect();
            let mean = head_mean(&head);
            OffspringLaw::build(head, OffspringTail::Empty, 0.0, mean)
        }
    }
}

fn head_mean(head: &[f64]) -> f64 {
    head.iter().enumerate().map(|(j, g)| j as f64 * g).sum()
}

impl OffspringLaw {
    /// Offspring law with finite support given by explicit probabilities.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidParameter(
                "offspring probabilities must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "offspring probabilities sum to {total}, expected 1"
            )));
        }
        let head: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let mean = head_mean(&head);
        Self::build(head, OffspringTail::Empty, 0.0, mean)
    }

    fn build(head: Vec<f64>, tail: OffspringTail, tail_mass: f64, mean: f64) -> Result<Self> {
        let mut weights = head.clone();
        weights.push(tail_mass);
        let single = WeightedAliasIndex::new(weights).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut survival = vec![0.0; head.len()];
        let mut acc = tail_mass;
        for j in (0..head.len()).rev() {
            survival[j] = acc;
            acc += head[j];
        }
        Ok(OffspringLaw {
            head,
            tail,
            tail_mass,
            mean,
            sampler: Arc::new(OffspringSampler { single, survival }),
        })
    }

    /// `g_j`.
    pub fn prob(&self, j: u64) -> f64 {
        if let Some(g) = self.head.get(j as usize) {
            return *g;
        }
        match self.tail {
            OffspringTail::Empty => 0.0,
            OffspringTail::ParetoCeil { tau, mu } => (j + 1) as f64 * pareto_power_gap(j + 1, 1.0 - tau) / mu,
        }
    }

    /// Tabulated probabilities `g_0 ..= g_J`.
    pub fn head(&self) -> &[f64] {
        &self.head
    }

    /// Mass beyond the tabulated head.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Mean of the law (equals `nu` of the parent degree law).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Probability generating function at `s` in `[0, 1]`.
    ///
    /// The tail beyond the head contributes at most `tail_mass * s^{J+1}`,
    /// which is added as is.
    pub fn pgf(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for g in self.head.iter().rev() {
            acc = acc * s + g;
        }
        acc + self.tail_mass * s.powi(self.head.len() as i32)
    }

    /// `1 - G(1 - u)`, accurate for small `u`.
    pub fn pgf_complement(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let log_s = (-u).ln_1p();
        let head: f64 = self
            .head
            .iter()
            .enumerate()
            .map(|(j, g)| -g * (j as f64 * log_s).exp_m1())
            .sum();
        let tail = match self.tail {
            OffspringTail::Empty => 0.0,
            OffspringTail::ParetoCeil { tau, mu } => {
                let first = self.mean - head_mean(&self.head);
                pareto_offspring_tail_complement(tau, mu, self.head.len() as u64, first, u)
            }
        };
        head + tail
    }

    /// Draws one offspring count.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let idx = self.sampler.single.sample(rng);
        if idx < self.head.len() {
            idx as u64
        } else {
            self.sample_tail(rng)
        }
    }

    /// Sum of `count` independent draws.
    ///
    /// Large sums assign draws to the values `0, 1, 2, ...` by sequential
    /// binomial splitting until few draws remain; those are drawn from the law
    /// conditioned to exceed the last value handled. The result has exactly the
    /// law of the naive sum.
    pub fn sample_sum<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> u64 {
        if count <= SPLIT_LIMIT {
            return (0..count).map(|_| self.sample(rng)).sum();
        }
        let survival = &self.sampler.survival;
        let mut remaining = count;
        let mut total: u64 = 0;
        let mut mass_left = 1.0;
        let mut j = 0;
        while j < self.head.len() && remaining > SPLIT_LIMIT {
            let g = self.head[j];
            let p = if mass_left > 0.0 { (g / mass_left).min(1.0) } else { 1.0 };
            let taken = if p >= 1.0 {
                remaining
            } else if p <= 0.0 {
                0
            } else {
                Binomial::new(remaining, p).expect("valid binomial").sample(rng)
            };
            total += j as u64 * taken;
            remaining -= taken;
            mass_left = survival[j];
            j += 1;
        }
        for _ in 0..remaining {
            total += self.sample_above(j, rng);
        }
        total
    }

    /// Draw conditioned on `X >= low`.
    fn sample_above<R: Rng + ?Sized>(&self, low: usize, rng: &mut R) -> u64 {
        if low == 0 {
            return self.sample(rng);
        }
        let survival = &self.sampler.survival;
        if low >= self.head.len() {
            return self.sample_tail(rng);
        }
        let u: f64 = rng.random();
        let v = u * survival[low - 1];
        let k = low + survival[low..].partition_point(|&s| s > v);
        if k < self.head.len() {
            k as u64
        } else {
            self.sample_tail(rng)
        }
    }

    /// Draw conditioned on exceeding the head.
    fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self.tail {
            OffspringTail::Empty => (self.head.len() - 1) as u64,
            OffspringTail::ParetoCeil { tau, .. } => {
                size_biased_pareto_beyond(tau, self.head.len() as u64 + 1, rng) - 1
            }
        }
    }
}

/// `P(X > j)` and `E[X; X > j]` for `X + 1` a size-biased `ParetoCeil(tau)`.
fn pareto_offspring_tail(tau: f64, mu: f64, j: u64) -> (f64, f64) {
    let k = j + 1;
    let kf = k as f64;
    let survival = kf.powf(1.0 - tau);
    let zeta1 = zeta_tail(tau - 1.0, k + 1).unwrap_or(0.0);
    let zeta2 = zeta_tail(tau - 2.0, k + 1).unwrap_or(f64::INFINITY);
    (
        ((kf + 1.0) * survival + zeta1) / mu,
        ((kf + 1.0) * kf * survival + 2.0 * zeta2) / mu,
    )
}

/// `sum_{j >= start} g_j (1 - (1-u)^j)` for the size-biased Pareto offspring law,
/// written as `u E[X; X >= start]` minus a correction that is summed over
/// short blocks of `j` and closed off where `(1-u)^j` vanishes.
fn pareto_offspring_tail_complement(tau: f64, mu: f64, start: u64, first_moment: f64, u: f64) -> f64 {
    let log_s = (-u).ln_1p();
    let correction = |j: f64| j * u + (j * log_s).exp_m1();
    let end = ((40.0 / u).min(1e18) as u64).max(start - 1);
    let mut acc = 0.0;
    let mut a = start;
    let (mut survival_a, _) = pareto_offspring_tail(tau, mu, a - 1);
    while a <= end {
        let b = (a + a / 500).max(a + 1).min(end + 1);
        let (survival_b, _) = pareto_offspring_tail(tau, mu, b - 1);
        let mid = 0.5 * (a + b - 1) as f64;
        acc += (survival_a - survival_b) * correction(mid);
        survival_a = survival_b;
        a = b;
    }
    let (survival_end, first_end) = pareto_offspring_tail(tau, mu, end);
    acc += u * first_end - survival_end;
    u * first_moment - acc
}

/// Size-biased `ParetoCeil(tau)` degree conditioned on `D > k`.
///
/// Proposal: `ceil(Y)` with `P(Y > y) = (y/k)^{2-tau}` for `y > k`; the ratio of
/// target to proposal lies in `[1, (k+1)/k]`, so acceptance is almost certain.
fn size_biased_pareto_beyond<R: Rng + ?Sized>(tau: f64, k: u64, rng: &mut R) -> u64 {
    let kf = k as f64;
    let bound = (kf + 1.0) / kf;
    loop {
        let u: f64 = rng.sample(Open01);
        let y = kf * u.powf(-1.0 / (tau - 2.0));
        if y >= 9.0e15 {
            return 9_000_000_000_000_000;
        }
        let d = (y.ceil() as u64).max(k + 1);
        let df = d as f64;
        let target = df * pareto_power_gap(d, 1.0 - tau) / (tau - 1.0);
        let proposal = pareto_power_gap(d, 2.0 - tau) / (tau - 2.0);
        let accept = target / proposal / bound;
        let v: f64 = rng.random();
        if v < accept {
            return d;
        }
    }
}

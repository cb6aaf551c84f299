//! Numerical law of the martingale limit via the compound fixed point
//! `W' = (1/nu) sum_{i=1}^{X} W'_i`, `X ~ g`, computed on a grid with FFTs.
//!
//! Values beyond the grid are clamped to its upper end while iterating, which
//! keeps the total mass at one. The equation fixes the law only up to scale,
//! and clamping leaks mean, so each iterate is stretched until `E[exp(-W')]`
//! equals its value from the scalar recursion `L(s) = G(L(s / nu))`. The
//! clamped mass is reported as an overflow bucket whose mean makes the
//! overall mean equal to one.
//!
//! Experimental: the delayed limit is obtained as `W = (1/mu) sum_{i=1}^{D} W'_i`.

use std::io::{self, Write};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::degree::{DegreeLaw, OffspringLaw};
use crate::error::{Error, Result};

/// Exponential damping `exp(-TILT * i / len)` applied before transforming.
const TILT: f64 = 25.0;
/// Generating-function terms are dropped once bounded by this.
const TERM_CUTOFF: f64 = 1e-18;
/// Sup-norm change in the distribution function that counts as converged.
const CONVERGENCE_TOL: f64 = 1e-8;

/// Equally spaced grid on `[0, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WGrid {
    pub points_per_unit: usize,
    pub upper: f64,
}

impl WGrid {
    pub fn step(&self) -> f64 {
        1.0 / self.points_per_unit as f64
    }

    /// Index of the last grid point.
    pub fn last_index(&self) -> usize {
        (self.upper * self.points_per_unit as f64).ceil() as usize
    }
}

impl Default for WGrid {
    fn default() -> Self {
        WGrid {
            points_per_unit: 64,
            upper: 100.0,
        }
    }
}

/// Discretized law: masses at grid points plus a bucket for values at or
/// beyond the upper end of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WLaw {
    pub step: f64,
    pub probs: Vec<f64>,
    pub overflow_mass: f64,
    /// Chosen so that the overall mean is 1.
    pub overflow_mean: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Sup-norm change of the distribution function in the last iteration.
    pub last_change: f64,
}

impl WLaw {
    fn point_mass(grid: &WGrid, value: f64) -> Self {
        let mut probs = vec![0.0; grid.last_index() + 1];
        let x = value / grid.step();
        let lo = x.floor() as usize;
        let frac = x - lo as f64;
        probs[lo] += 1.0 - frac;
        if frac > 0.0 {
            probs[lo + 1] += frac;
        }
        WLaw {
            step: grid.step(),
            probs,
            overflow_mass: 0.0,
            overflow_mean: 0.0,
            converged: false,
            iterations: 0,
            last_change: f64::INFINITY,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.overflow_mass
    }

    pub fn mean(&self) -> f64 {
        self.grid_mean() + self.overflow_mass * self.overflow_mean
    }

    fn grid_mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * self.step * p)
            .sum()
    }

    /// Distribution function, with each grid mass spread uniformly over the
    /// cell centred on its point.
    pub fn cdf(&self, x: f64) -> f64 {
        let h = self.step;
        let pos = x / h + 0.5;
        if pos <= 0.0 {
            return 0.0;
        }
        let full = (pos.floor() as usize).min(self.probs.len());
        let mut acc: f64 = self.probs[..full].iter().sum();
        if full < self.probs.len() {
            acc += self.probs[full] * (pos - full as f64);
        }
        acc
    }

    /// One `value,weight` row per grid point, then the overflow bucket.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "value,weight")?;
        for (i, p) in self.probs.iter().enumerate() {
            writeln!(w, "{},{}", i as f64 * self.step, p)?;
        }
        if self.overflow_mass > 0.0 {
            writeln!(w, "{},{}", self.overflow_mean, self.overflow_mass)?;
        }
        Ok(())
    }
}

/// Law of `min(T, (1/scale) sum_{i=1}^{X} Y_i)` where `P(X = j) = coef(j)` and
/// `Y_i` are i.i.d. on the grid, the last grid point `T` carrying everything
/// beyond it.
fn compound(
    probs: &[f64],
    coef: &dyn Fn(usize) -> f64,
    max_terms: usize,
    scale: f64,
    planner: &mut FftPlanner<f64>,
) -> Vec<f64> {
    let m = probs.len() - 1;
    let keep = (scale * m as f64).floor() as usize;
    let len = ((keep + m + 2) as u64).next_power_of_two() as usize;
    let theta = TILT / len as f64;

    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); len];
    let mut z0 = 0.0;
    for (i, p) in probs.iter().enumerate() {
        let a = p * (-theta * i as f64).exp();
        buf[i] = Complex::new(a, 0.0);
        z0 += a;
    }
    planner.plan_fft_forward(len).process(&mut buf);

    let terms = if z0 < 1.0 && z0 > 0.0 {
        ((TERM_CUTOFF.ln() / z0.ln()).ceil() as usize).min(max_terms)
    } else {
        max_terms
    };
    let coefs: Vec<f64> = (0..=terms).map(coef).collect();
    let log_cutoff = TERM_CUTOFF.ln();
    for c in buf.iter_mut() {
        let phi = *c;
        let r = phi.norm();
        let n = if r < 1.0 {
            ((log_cutoff / r.ln()).ceil() as usize).min(terms)
        } else {
            terms
        };
        let mut acc = Complex::new(0.0, 0.0);
        for q in coefs[..=n].iter().rev() {
            acc = acc * phi + q;
        }
        *c = acc;
    }
    planner.plan_fft_inverse(len).process(&mut buf);

    let mut out = vec![0.0; m + 1];
    for (i, c) in buf.iter().enumerate().take(keep + 1) {
        let mass = (c.re / len as f64 * (theta * i as f64).exp()).max(0.0);
        let x = i as f64 / scale;
        let lo = (x.floor() as usize).min(m);
        let frac = x - lo as f64;
        if lo < m {
            out[lo] += mass * (1.0 - frac);
            out[lo + 1] += mass * frac;
        } else {
            out[m] += mass;
        }
    }
    let kept: f64 = out.iter().sum();
    if kept <= 1.0 {
        out[m] += 1.0 - kept;
    } else {
        out.iter_mut().for_each(|p| *p /= kept);
    }
    out
}

/// `E[exp(-W')]` from `L(s) = G(L(s / nu))`, started where `L(s) = exp(-s)`
/// to double precision and iterated on `1 - L` to avoid cancellation.
fn laplace_at_one(g: &OffspringLaw) -> f64 {
    let nu = g.mean();
    let depth = (1e15f64.ln() / nu.ln()).ceil() as i32;
    let mut u = -(-nu.powi(-depth)).exp_m1();
    for _ in 0..depth {
        u = g.pgf_complement(u);
    }
    1.0 - u
}

/// Stretches the law by the factor `k` for which `E[exp(-k Y)] = target`.
fn rescale_to_laplace(probs: Vec<f64>, step: f64, target: f64) -> Vec<f64> {
    let m = probs.len() - 1;
    let mut k = 1.0;
    for _ in 0..100 {
        let (mut value, mut slope) = (0.0, 0.0);
        for (i, p) in probs.iter().enumerate() {
            let x = i as f64 * step;
            let e = p * (-k * x).exp();
            value += e;
            slope -= x * e;
        }
        if !(slope < 0.0) {
            return probs;
        }
        let next = (k - (value - target) / slope).clamp(0.5 * k, 2.0 * k);
        let done = (next - k).abs() < 1e-14 * k;
        k = next;
        if done {
            break;
        }
    }
    let mut out = vec![0.0; m + 1];
    for (i, p) in probs.into_iter().enumerate() {
        let x = i as f64 * k;
        let lo = (x.floor() as usize).min(m);
        let frac = x - lo as f64;
        if lo < m {
            out[lo] += p * (1.0 - frac);
            out[lo + 1] += p * frac;
        } else {
            out[m] += p;
        }
    }
    out
}

impl WLaw {
    fn from_clamped(mut probs: Vec<f64>, step: f64) -> Self {
        let m = probs.len() - 1;
        let overflow_mass = std::mem::take(&mut probs[m]);
        let mut law = WLaw {
            step,
            probs,
            overflow_mass,
            overflow_mean: 0.0,
            converged: false,
            iterations: 0,
            last_change: f64::INFINITY,
        };
        if overflow_mass > 0.0 {
            law.overflow_mean = ((1.0 - law.grid_mean()) / overflow_mass).max(m as f64 * step);
        }
        law
    }

    fn clamped(&self) -> Vec<f64> {
        let mut probs = self.probs.clone();
        *probs.last_mut().expect("nonempty grid") += self.overflow_mass;
        probs
    }
}

fn sup_cdf_change(a: &[f64], b: &[f64]) -> f64 {
    let mut ca = 0.0;
    let mut cb = 0.0;
    let mut sup: f64 = 0.0;
    for (pa, pb) in a.iter().zip(b) {
        ca += pa;
        cb += pb;
        sup = sup.max((ca - cb).abs());
    }
    sup
}

/// Iterates the compound map for the limit `W'` of the process started from a
/// single `g`-individual, from a point mass at 1, for at most `max_iters` steps.
pub fn w_law_fixed_point(g: &OffspringLaw, grid: &WGrid, max_iters: usize) -> Result<WLaw> {
    let nu = g.mean();
    if !(nu > 1.0 && nu.is_finite()) {
        return Err(Error::Subcritical(nu));
    }
    check_grid(grid)?;
    let target = laplace_at_one(g);
    let mut planner = FftPlanner::new();
    let mut probs = WLaw::point_mass(grid, 1.0).probs;
    let coef = |j: usize| g.prob(j as u64);
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=max_iters {
        let next = compound(&probs, &coef, g.head().len() - 1, nu, &mut planner);
        let next = rescale_to_laplace(next, grid.step(), target);
        change = sup_cdf_change(&probs, &next);
        probs = next;
        iterations = it;
        if change < CONVERGENCE_TOL {
            break;
        }
    }
    let mut law = WLaw::from_clamped(probs, grid.step());
    law.iterations = iterations;
    law.last_change = change;
    law.converged = change < CONVERGENCE_TOL;
    Ok(law)
}

/// Law of the delayed limit `(1/mu) sum_{i=1}^{D} W'_i` with `D ~ f`.
pub fn delayed_w_law(f: &DegreeLaw, w_prime: &WLaw) -> Result<WLaw> {
    let mu = f.mean();
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::NonIntegrable);
    }
    let max_terms = f.max_degree().map_or(1 << 20, |d| d as usize);
    let mut planner = FftPlanner::new();
    let coef = |j: usize| f.pmf(j as u64);
    let probs = compound(&w_prime.clamped(), &coef, max_terms, mu, &mut planner);
    let mut out = WLaw::from_clamped(probs, w_prime.step);
    out.converged = w_prime.converged;
    out.iterations = w_prime.iterations;
    out.last_change = w_prime.last_change;
    Ok(out)
}

fn check_grid(grid: &WGrid) -> Result<()> {
    if grid.points_per_unit == 0 || !(grid.upper >= 2.0) || !grid.upper.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "grid needs points_per_unit >= 1 and upper >= 2, got {grid:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::size_biased_offspring;

    #[test]
    fn regular_limit_is_point_mass() {
        let f = DegreeLaw::regular(3).unwrap();
        let g = size_biased_offspring(&f).unwrap();
        let grid = WGrid {
            points_per_unit: 16,
            upper: 8.0,
        };
        let law = w_law_fixed_point(&g, &grid, 20).unwrap();
        assert!(law.converged);
        assert!((law.probs[16] - 1.0).abs() < 1e-9);
        assert!((law.total_mass() - 1.0).abs() < 1e-9);
        let delayed = delayed_w_law(&f, &law).unwrap();
        assert!((delayed.probs[16] - 1.0).abs() < 1e-9);
        assert!((delayed.mean() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn geometric_offspring_has_exponential_limit() {
        // geometric offspring on {1, 2, ...}: W' is exponential with mean 1
        let f = DegreeLaw::geometric_size_biased(0.6).unwrap();
        let g = size_biased_offspring(&f).unwrap();
        let grid = WGrid {
            points_per_unit: 64,
            upper: 40.0,
        };
        let law = w_law_fixed_point(&g, &grid, 200).unwrap();
        assert!(law.converged, "change {}", law.last_change);
        assert!((law.total_mass() - 1.0).abs() < 1e-6);
        assert!((law.mean() - 1.0).abs() < 1e-3);
        for &x in &[0.25, 0.5, 1.0, 2.0, 4.0] {
            let exact = 1.0 - (-x as f64).exp();
            assert!((law.cdf(x) - exact).abs() < 2e-3, "x = {x}: {} vs {exact}", law.cdf(x));
        }
    }

    #[test]
    fn invalid_inputs() {
        let g = size_biased_offspring(&DegreeLaw::regular(2).unwrap()).unwrap();
        assert!(w_law_fixed_point(&g, &WGrid::default(), 10).is_err());
        let g = size_biased_offspring(&DegreeLaw::regular(3).unwrap()).unwrap();
        let bad = WGrid {
            points_per_unit: 0,
            upper: 10.0,
        };
        assert!(w_law_fixed_point(&g, &bad, 10).is_err());
    }

    #[test]
    fn csv_lists_grid_and_overflow() {
        let mut law = WLaw::point_mass(
            &WGrid {
                points_per_unit: 2,
                upper: 2.0,
            },
            1.0,
        );
        law.overflow_mass = 0.25;
        law.overflow_mean = 3.0;
        let mut out = Vec::new();
        law.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "value,weight\n0,0\n0.5,0\n1,1\n1.5,0\n2,0\n3,0.25\n");
    }
}

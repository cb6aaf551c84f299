use rand::Rng;
use serde::Serialize;

use super::{DegreeSequence, StubGraph};
use crate::degree::DegreeLaw;
use crate::error::{Error, Result};

/// Default truncation exponent used by [`check_well_behaved`].
pub const DEFAULT_TRUNCATION_EPS: f64 = 0.05;

/// Largest degree allowed after truncation, `ceil(N^{1/4 - eps}) - 1`.
pub fn degree_cap(n: usize, eps: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::InvalidArgument(format!(
            "truncation eps must lie in (0, 1/4), got {eps}"
        )));
    }
    let x = (n as f64).powf(0.25 - eps);
    let r = x.round();
    let c = if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        x.ceil()
    };
    Ok(c as u64 - 1)
}

/// Removes edges until every degree is at most [`degree_cap`].
///
/// Edges joining two distinct high-degree nodes go first, chosen uniformly one
/// at a time; then uniform edges incident to a remaining high-degree node.
/// A self-loop is only removed when the node keeps at least the cap, or when
/// it has no other edges left. Returns the new graph and the number of removed
/// edges.
pub fn truncate_graph<R: Rng + ?Sized>(g: &StubGraph, eps: f64, rng: &mut R) -> Result<(StubGraph, u64)> {
    let cap = degree_cap(g.n(), eps)?;
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let mut deg: Vec<u64> = g.degree_sequence().degrees().to_vec();
    let mut non_loop = vec![0u64; g.n()];
    for &(u, v) in &edges {
        if u != v {
            non_loop[u] += 1;
            non_loop[v] += 1;
        }
    }
    let mut alive = vec![true; edges.len()];
    let mut removed = 0u64;

    let mut candidates: Vec<usize> = (0..edges.len())
        .filter(|&e| {
            let (u, v) = edges[e];
            u != v && deg[u] > cap && deg[v] > cap
        })
        .collect();
    while !candidates.is_empty() {
        let i = rng.random_range(0..candidates.len());
        let e = candidates.swap_remove(i);
        let (u, v) = edges[e];
        if deg[u] > cap && deg[v] > cap {
            alive[e] = false;
            deg[u] -= 1;
            deg[v] -= 1;
            non_loop[u] -= 1;
            non_loop[v] -= 1;
            removed += 1;
        }
    }

    let mut candidates: Vec<usize> = (0..edges.len())
        .filter(|&e| alive[e] && (deg[edges[e].0] > cap || deg[edges[e].1] > cap))
        .collect();
    while !candidates.is_empty() {
        let i = rng.random_range(0..candidates.len());
        let e = candidates[i];
        let (u, v) = edges[e];
        let eligible = if u == v {
            deg[u] >= cap + 2 || (deg[u] > cap && non_loop[u] == 0)
        } else {
            deg[u] > cap || deg[v] > cap
        };
        if !eligible {
            if deg[u] <= cap && deg[v] <= cap {
                candidates.swap_remove(i);
            }
            // otherwise a self-loop waiting for the node's other edges to go
            continue;
        }
        candidates.swap_remove(i);
        alive[e] = false;
        removed += 1;
        if u == v {
            deg[u] -= 2;
        } else {
            deg[u] -= 1;
            deg[v] -= 1;
            non_loop[u] -= 1;
            non_loop[v] -= 1;
        }
    }

    let seq = DegreeSequence::new(deg)?;
    let mut next: Vec<u64> = (0..seq.n()).map(|v| seq.first_stub(v)).collect();
    let mut pairs = Vec::with_capacity(edges.len() - removed as usize);
    for (e, &(u, v)) in edges.iter().enumerate() {
        if !alive[e] {
            continue;
        }
        let a = next[u];
        next[u] += 1;
        let b = next[v];
        next[v] += 1;
        pairs.push((a, b));
    }
    Ok((StubGraph::from_pairs(seq, &pairs)?, removed))
}

/// Diagnostics for the Molloy–Reed regularity conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellBehavedReport {
    /// `d_i(N)`, number of nodes of degree `i`.
    pub degree_counts: Vec<u64>,
    /// `sup_i |i(i-2) d_i(N)/N - i(i-2) f_i|`
    pub cond1_deviation: f64,
    /// Degree attaining the supremum.
    pub cond1_argmax: u64,
    pub cond1_pass: bool,
    /// Smallest `i*` with `|sum_{i <= i*} i(i-2) d_i(N)/N - E[D(D-2)]| <= eps'`.
    pub i_star: Option<u64>,
    pub cond2_pass: bool,
    pub max_degree: u64,
    pub degree_cap: u64,
    pub cap_pass: bool,
}

impl WellBehavedReport {
    pub fn passes(&self) -> bool {
        self.cond1_pass && self.cond2_pass && self.cap_pass
    }
}

/// [`check_well_behaved_with_cap`] with the default truncation exponent.
pub fn check_well_behaved(seq: &DegreeSequence, law: &DegreeLaw, eps_prime: f64) -> Result<WellBehavedReport> {
    check_well_behaved_with_cap(seq, law, eps_prime, DEFAULT_TRUNCATION_EPS)
}

pub fn check_well_behaved_with_cap(
    seq: &DegreeSequence,
    law: &DegreeLaw,
    eps_prime: f64,
    truncation_eps: f64,
) -> Result<WellBehavedReport> {
    if !(eps_prime > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps' must be positive, got {eps_prime}"
        )));
    }
    let n = seq.n() as f64;
    let max_degree = seq.max_degree();
    let mut counts = vec![0u64; max_degree as usize + 1];
    for &d in seq.degrees() {
        counts[d as usize] += 1;
    }

    let upper = max_degree.max(law.max_degree().unwrap_or(4096));
    let mut deviation = 0.0;
    let mut argmax = 0;
    for i in 1..=upper {
        let w = i as f64 * (i as f64 - 2.0);
        let emp = counts.get(i as usize).map_or(0.0, |&c| c as f64 / n);
        let dev = (w * (emp - law.pmf(i))).abs();
        if dev > deviation {
            deviation = dev;
            argmax = i;
        }
    }

    let target = law.moments().ok().map(|m| m.mu * (m.nu - 1.0));
    let mut i_star = None;
    if let Some(target) = target {
        let mut partial = 0.0;
        for (i, &c) in counts.iter().enumerate().skip(1) {
            partial += i as f64 * (i as f64 - 2.0) * c as f64 / n;
            if (partial - target).abs() <= eps_prime {
                i_star = Some(i as u64);
                break;
            }
        }
    }

    let cap = degree_cap(seq.n(), truncation_eps)?;
    Ok(WellBehavedReport {
        degree_counts: counts,
        cond1_deviation: deviation,
        cond1_argmax: argmax,
        cond1_pass: deviation < eps_prime,
        i_star,
        cond2_pass: i_star.is_some(),
        max_degree,
        degree_cap: cap,
        cap_pass: max_degree <= cap,
    })
}

use serde::Serialize;

use super::DegreeSequence;
use crate::degree::{size_biased_offspring, DegreeLaw};
use crate::error::{Error, Result};

/// Size-biased law of a realized degree sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalOffspring {
    /// `g_j = (j+1) #{i : D_i = j+1} / L_N`
    pub probs: Vec<f64>,
    pub nu_n: f64,
    /// Total variation distance to the theoretical offspring law.
    pub p_n: f64,
}

pub fn empirical_offspring(seq: &DegreeSequence, law: &DegreeLaw) -> Result<EmpiricalOffspring> {
    let l = seq.total_stubs();
    if l == 0 {
        return Err(Error::InvalidArgument("empirical offspring law needs L_N > 0".into()));
    }
    let max = seq.max_degree() as usize;
    let mut counts = vec![0u64; max + 1];
    for &d in seq.degrees() {
        counts[d as usize] += 1;
    }
    let probs: Vec<f64> = (0..max)
        .map(|j| (j as u64 + 1) as f64 * counts[j + 1] as f64 / l as f64)
        .collect();
    let nu_n = (0..max)
        .map(|j| j as f64 * (j as u64 + 1) as f64 * counts[j + 1] as f64)
        .sum::<f64>()
        / l as f64;

    let g = size_biased_offspring(law)?;
    let mut covered = 0.0;
    let mut diff = 0.0;
    for (j, &pj) in probs.iter().enumerate() {
        let gj = g.prob(j as u64);
        covered += gj;
        diff += (pj - gj).abs();
    }
    diff += (1.0 - covered).max(0.0);
    Ok(EmpiricalOffspring {
        probs,
        nu_n,
        p_n: 0.5 * diff,
    })
}

use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// Samples up to this size on both sides use exact enumeration.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Doubled midranks (always integers) of the pooled sample, plus the tie
/// group sizes.
fn doubled_ranks(pooled: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|a, b| pooled[*a].total_cmp(&pooled[*b]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share the midrank (i+j+2)/2.
        for &k in &idx[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Mann-Whitney U test with midranks for ties.
///
/// Exact: the null distribution of the first sample's rank sum is
/// enumerated over all size-`n_a` subsets of the pooled ranks, and
/// p = P(|U - mean| >= |U_obs - mean|). Larger samples use the normal
/// approximation with tie-corrected variance and continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney, AnalyticsError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalyticsError::EmptySample);
    }
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = doubled_ranks(&pooled);
    let d_obs: u64 = ranks[..na].iter().sum();
    // U = R_a - na(na+1)/2, with R_a = d_obs / 2.
    let u = d_obs as f64 / 2.0 - (na * (na + 1)) as f64 / 2.0;
    let centre = (na * (n + 1)) as i64;
    let dev_obs = (d_obs as i64 - centre).abs();

    if na.max(nb) <= EXACT_LIMIT {
        let max_sum = ranks.iter().sum::<u64>() as usize;
        // counts[j][s]: subsets of size j with doubled rank sum s.
        let mut counts = vec![vec![0u128; max_sum + 1]; na + 1];
        counts[0][0] = 1;
        for (seen, &r) in ranks.iter().enumerate() {
            let r = r as usize;
            for j in (1..=na.min(seen + 1)).rev() {
                let (lo, hi) = counts.split_at_mut(j);
                let prev = &lo[j - 1];
                let cur = &mut hi[0];
                for s in (r..=max_sum).rev() {
                    cur[s] += prev[s - r];
                }
            }
        }
        let mut extreme = 0u128;
        let mut total = 0u128;
        for (s, c) in counts[na].iter().enumerate() {
            total += c;
            if (s as i64 - centre).abs() >= dev_obs {
                extreme += c;
            }
        }
        let p = (extreme as f64 / total as f64).min(1.0);
        return Ok(MannWhitney { u, p, exact: true });
    }

    let mean = (na * nb) as f64 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / ((n * (n - 1)) as f64);
    let var = (na * nb) as f64 / 12.0 * ((n + 1) as f64 - tie_term);
    if var <= 0.0 {
        return Ok(MannWhitney { u, p: 1.0, exact: false });
    }
    let z = (((u - mean).abs() - 0.5).max(0.0)) / var.sqrt();
    let p = libm::erfc(z / std::f64::consts::SQRT_2).min(1.0);
    Ok(MannWhitney { u, p, exact: false })
}

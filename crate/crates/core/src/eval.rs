//! Scoring of tracking-area plans.
//!
//! The signaling models are proxies built from neighbor-relation data only:
//!
//! * TAU cost: HO attempts between sites in different TAs, each unordered
//!   pair counted once.
//! * Paging cost: a page for a site is broadcast in every cell of its TA, so
//!   a TA `t` costs `|t| * sum_{i in t} p_i`.
//!
//! Fewer, larger TAs therefore trade TAU load for paging load.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::SimilarityMatrix;
use crate::model::Dataset;

/// Clustering quality from the minimal alignment cost:
/// `1 - ((j_min / m) - 1) / c`.
pub fn quality(j_min: f64, m: usize, c: usize) -> f64 {
    1.0 - ((j_min / m as f64) - 1.0) / c as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilhouetteResult {
    pub per_site: Vec<f64>,
    pub mean: f64,
}

/// Silhouette over the dissimilarity `1 - s_ij`.
///
/// For site `i`, `d_i` is its mean dissimilarity to the other members of its
/// cluster and `dbar_i` the smallest mean dissimilarity to another cluster;
/// `sigma_i = (dbar_i - d_i) / max(dbar_i, d_i)`. Sites alone in their
/// cluster score 0.
pub fn silhouette(s: &SimilarityMatrix, labels: &[usize]) -> Result<SilhouetteResult> {
    let m = s.len();
    if labels.len() != m {
        return Err(Error::Config(format!(
            "{} labels for {m} sites",
            labels.len()
        )));
    }
    let k = labels.iter().copied().max().map_or(0, |l| l + 1);
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    if counts.iter().filter(|&&n| n > 0).count() < 2 {
        return Err(Error::SingleCluster);
    }

    let per_site: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if counts[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..m {
                if j != i {
                    sums[labels[j]] += 1.0 - s.s[(i, j)];
                }
            }
            let intra = sums[own] / (counts[own] - 1) as f64;
            let nearest = (0..k)
                .filter(|&c| c != own && counts[c] > 0)
                .map(|c| sums[c] / counts[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = intra.max(nearest);
            if denom > 0.0 {
                (nearest - intra) / denom
            } else {
                0.0
            }
        })
        .collect();
    let mean = per_site.iter().sum::<f64>() / m as f64;
    Ok(SilhouetteResult { per_site, mean })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PlanCosts {
    pub tau: u64,
    pub paging: u64,
}

/// HO attempts crossing a TA boundary, unordered pairs counted once.
pub fn tau_cost(ds: &Dataset, labels: &[usize]) -> u64 {
    let m = ds.len();
    let mut total = 0.0;
    for j in 0..m {
        for i in 0..j {
            if labels[i] != labels[j] {
                total += ds.attempts[(i, j)];
            }
        }
    }
    total.round() as u64
}

/// Total HO attempt mass over unordered pairs.
pub fn total_attempts(ds: &Dataset) -> u64 {
    let singletons: Vec<usize> = (0..ds.len()).collect();
    tau_cost(ds, &singletons)
}

/// Paging broadcast load: every TA costs its cell count times its demand.
pub fn paging_cost(ds: &Dataset, labels: &[usize]) -> u64 {
    let mut per_ta: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    for (site, &l) in ds.sites.iter().zip(labels) {
        let e = per_ta.entry(l).or_default();
        e.0 += 1;
        e.1 += site.paging_requests;
    }
    per_ta.values().fold(0u64, |acc, &(size, demand)| {
        acc.saturating_add(size.saturating_mul(demand))
    })
}

pub fn plan_costs(ds: &Dataset, labels: &[usize]) -> PlanCosts {
    PlanCosts {
        tau: tau_cost(ds, labels),
        paging: paging_cost(ds, labels),
    }
}

fn comb2(n: u64) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Adjusted Rand index of two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len() as u64;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&v| comb2(v)).sum();
    let sum_a: f64 = rows.values().map(|&v| comb2(v)).sum();
    let sum_b: f64 = cols.values().map(|&v| comb2(v)).sum();
    let total = comb2(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    if max_index == expected {
        // Both labelings trivial (all one cluster or all singletons).
        return 1.0;
    }
    (index - expected) / (max_index - expected)
}

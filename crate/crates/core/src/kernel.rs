//! Composite RBF similarity between sites.
//!
//! For `i != j`
//!
//! ```text
//! s_ij = exp(-gamma * (alpha * d_ij + (1 - alpha) * (1 - beta * a_ij - (1 - beta) * m_ij)))
//! ```
//!
//! where `d`, `a` and `m` are the distance, HO-attempt and MR-count matrices
//! each divided by its largest off-diagonal entry. Close sites with heavy
//! mobility between them get a weight near 1. The exponent argument lies in
//! `[0, 1]`, so off-diagonal weights lie in `[exp(-gamma), 1]`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::model::{Dataset, KernelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub s: DMatrix<f64>,
    pub params: KernelParams,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.s.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.s.nrows() == 0
    }
}

/// Divides every entry by the largest off-diagonal entry. An all-zero
/// off-diagonal yields an all-zero matrix.
pub fn normalize_feature(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut max = 0.0f64;
    for j in 0..x.ncols() {
        for i in 0..n {
            if i != j {
                max = max.max(x[(i, j)]);
            }
        }
    }
    if max > 0.0 {
        x / max
    } else {
        DMatrix::zeros(n, x.ncols())
    }
}

/// Evaluates the kernel for one pair of normalized features.
#[inline]
pub fn pair_similarity(params: &KernelParams, d: f64, a: f64, m: f64) -> f64 {
    let KernelParams { alpha, beta, gamma } = *params;
    let arg = alpha * d + (1.0 - alpha) * (1.0 - beta * a - (1.0 - beta) * m);
    (-gamma * arg).exp()
}

pub fn build_similarity(ds: &Dataset, params: KernelParams) -> SimilarityMatrix {
    let m = ds.len();
    let d = normalize_feature(&ds.dist);
    let a = normalize_feature(&ds.attempts);
    let r = normalize_feature(&ds.mrs);

    // Column-major storage: fill column by column in parallel.
    let mut s = DMatrix::zeros(m, m);
    s.as_mut_slice()
        .par_chunks_mut(m)
        .enumerate()
        .for_each(|(j, col)| {
            for (i, out) in col.iter_mut().enumerate() {
                if i != j {
                    *out = pair_similarity(&params, d[(i, j)], a[(i, j)], r[(i, j)]);
                }
            }
        });
    SimilarityMatrix { s, params }
}

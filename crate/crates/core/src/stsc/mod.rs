//! Self-tuning spectral clustering.
//!
//! The similarity matrix is normalized, its leading eigenvectors are
//! computed once, and for every candidate cluster count `C` the first `C`
//! eigenvectors are rotated towards a cluster-indicator matrix. The
//! alignment cost that remains after rotation is turned into a quality score
//! and the count with the best quality wins.

mod embedding;
mod rotation;

use nalgebra::DMatrix;
use rayon::prelude::*;

pub use embedding::{normalize_affinity, top_eigenvectors, SpectralEmbedding};
pub use rotation::{
    alignment_cost, assign_labels, cost_gradient, optimize_rotation, planes, rotate,
    rotation_matrix, RotationState,
};

use crate::error::{Error, Result};
use crate::eval::quality;
use crate::kernel::SimilarityMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct StscConfig {
    pub c_min: usize,
    pub c_max: usize,
    pub max_iters: usize,
    pub step_init: f64,
    pub step_halvings: u32,
    pub rel_tol: f64,
    /// Candidates whose quality is within this of the best count as tied;
    /// the largest tied `C` is selected.
    pub quality_tie_tol: f64,
    /// Seed each `C` with the optimum found for `C - 1`. When false every
    /// count starts from zero angles and the counts run in parallel.
    pub warm_start: bool,
}

impl Default for StscConfig {
    fn default() -> Self {
        StscConfig {
            c_min: 2,
            c_max: 12,
            max_iters: 200,
            step_init: 1.0,
            step_halvings: 30,
            rel_tol: 1e-4,
            quality_tie_tol: 1e-3,
            warm_start: true,
        }
    }
}

impl StscConfig {
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.c_min < 2 || self.c_min > self.c_max {
            return Err(Error::Config(format!(
                "need 2 <= c_min <= c_max, got c_min={} c_max={}",
                self.c_min, self.c_max
            )));
        }
        if self.c_max > m {
            return Err(Error::Config(format!(
                "c_max={} exceeds the number of sites ({m})",
                self.c_max
            )));
        }
        if !(self.step_init.is_finite() && self.step_init > 0.0) {
            return Err(Error::Config(format!(
                "step_init must be > 0, got {}",
                self.step_init
            )));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol >= 0.0) {
            return Err(Error::Config(format!(
                "rel_tol must be >= 0, got {}",
                self.rel_tol
            )));
        }
        if !(self.quality_tie_tol.is_finite() && self.quality_tie_tol >= 0.0) {
            return Err(Error::Config(format!(
                "quality_tie_tol must be >= 0, got {}",
                self.quality_tie_tol
            )));
        }
        Ok(())
    }
}

/// The outcome of rotating the first `c` eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCandidate {
    pub c: usize,
    pub j_min: f64,
    pub quality: f64,
    /// Column index of each site's dominant entry; may leave some of
    /// `0..c` unused.
    pub labels: Vec<usize>,
    pub z: DMatrix<f64>,
    pub rotation: RotationState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StscResult {
    pub selected: ClusterCandidate,
    /// One candidate per `C` in `c_min..=c_max`, ascending.
    pub all: Vec<ClusterCandidate>,
    pub embedding: SpectralEmbedding,
}

fn evaluate(x: &DMatrix<f64>, init: &RotationState, cfg: &StscConfig) -> Result<ClusterCandidate> {
    let c = init.c;
    let tag = |e: Error| Error::Candidate {
        c,
        source: Box::new(e),
    };
    let (rotation, j_min) = optimize_rotation(x, init, cfg).map_err(tag)?;
    let z = rotate(x, &rotation);
    Ok(ClusterCandidate {
        c,
        j_min,
        quality: quality(j_min, x.nrows(), c),
        labels: assign_labels(&z),
        z,
        rotation,
    })
}

/// Index of the selected candidate: maximal quality, ties within `tol`
/// resolved towards the larger `C`.
pub fn select_candidate(all: &[ClusterCandidate], tol: f64) -> Option<usize> {
    let best = all
        .iter()
        .map(|c| c.quality)
        .fold(f64::NEG_INFINITY, f64::max);
    all.iter()
        .enumerate()
        .filter(|(_, c)| c.quality >= best - tol)
        .max_by_key(|(_, c)| c.c)
        .map(|(k, _)| k)
}

pub fn run_stsc(s: &SimilarityMatrix, cfg: &StscConfig) -> Result<StscResult> {
    let m = s.len();
    cfg.validate(m)?;
    let n = normalize_affinity(s)?;
    let embedding = top_eigenvectors(&n, cfg.c_max)?;

    let all: Vec<ClusterCandidate> = if cfg.warm_start {
        let mut all = Vec::with_capacity(cfg.c_max - cfg.c_min + 1);
        let mut prev: Option<RotationState> = None;
        for c in cfg.c_min..=cfg.c_max {
            let init = prev
                .as_ref()
                .map_or_else(|| RotationState::zeros(c), |p| p.extended(c));
            let cand = evaluate(&embedding.leading(c), &init, cfg)?;
            log::debug!("C={c}: J={:.6} Q={:.6}", cand.j_min, cand.quality);
            prev = Some(cand.rotation.clone());
            all.push(cand);
        }
        all
    } else {
        (cfg.c_min..=cfg.c_max)
            .into_par_iter()
            .map(|c| evaluate(&embedding.leading(c), &RotationState::zeros(c), cfg))
            .collect::<Result<_>>()?
    };

    let idx = select_candidate(&all, cfg.quality_tie_tol).expect("non-empty candidate range");
    Ok(StscResult {
        selected: all[idx].clone(),
        all,
        embedding,
    })
}

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kernel::SimilarityMatrix;

const SYMMETRY_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-8;
const EIGEN_MAX_SWEEPS: usize = 10_000;

/// Leading eigenvectors of the normalized affinity, one per column, with
/// eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    pub x: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

impl SpectralEmbedding {
    /// The first `c` columns.
    pub fn leading(&self, c: usize) -> DMatrix<f64> {
        self.x.columns(0, c).into_owned()
    }
}

/// Symmetric normalization `D^{-1/2} S D^{-1/2}` with `D = diag(row sums)`.
///
/// This is similar to the random-walk form `S D^{-1}` (same spectrum) but
/// can be handed to a symmetric eigensolver.
pub fn normalize_affinity(s: &SimilarityMatrix) -> Result<DMatrix<f64>> {
    let m = s.len();
    let inv_sqrt: Vec<f64> =
        s.s.row_iter()
            .enumerate()
            .map(|(i, row)| {
                let deg: f64 = row.iter().sum();
                if deg > 0.0 && deg.is_finite() {
                    Ok(1.0 / deg.sqrt())
                } else {
                    Err(Error::Degenerate(format!(
                        "row {i} of the similarity has degree {deg}"
                    )))
                }
            })
            .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(m, m, |i, j| {
        s.s[(i, j)] * (inv_sqrt[i] * inv_sqrt[j])
    }))
}

/// Computes the `c_max` largest eigenpairs of a symmetric matrix.
///
/// Each eigenvector is signed so that its entry of largest magnitude is
/// positive (first such entry on ties).
pub fn top_eigenvectors(n: &DMatrix<f64>, c_max: usize) -> Result<SpectralEmbedding> {
    let m = n.nrows();
    if n.ncols() != m {
        return Err(Error::Degenerate(format!("matrix is {}x{}", m, n.ncols())));
    }
    if c_max == 0 || c_max > m {
        return Err(Error::Config(format!("c_max={c_max} must be in 1..={m}")));
    }
    let asym = (n - n.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::Degenerate(format!(
            "matrix is not symmetric (max |N - N^T| = {asym:.3e})"
        )));
    }

    let eig =
        SymmetricEigen::try_new(n.clone(), f64::EPSILON, EIGEN_MAX_SWEEPS).ok_or_else(|| {
            Error::Eigen(format!(
                "no convergence on {m}x{m} matrix after {EIGEN_MAX_SWEEPS} iterations"
            ))
        })?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let scale = n.amax().max(1.0);
    let mut x = DMatrix::zeros(m, c_max);
    let mut eigenvalues = Vec::with_capacity(c_max);
    for (k, &idx) in order.iter().take(c_max).enumerate() {
        let lambda = eig.eigenvalues[idx];
        let mut v: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        let pivot = v.iamax();
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        let residual = (n * &v - &v * lambda).norm();
        if residual > RESIDUAL_TOL * scale {
            return Err(Error::Eigen(format!(
                "eigenpair {k} (lambda={lambda}) has residual {residual:.3e}"
            )));
        }
        x.set_column(k, &v);
        eigenvalues.push(lambda);
    }
    Ok(SpectralEmbedding { x, eigenvalues })
}

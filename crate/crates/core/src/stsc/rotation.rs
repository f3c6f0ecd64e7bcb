//! Givens-rotation alignment of a spectral embedding.
//!
//! An orthogonal `C x C` matrix is parameterized by `K = C(C-1)/2` angles,
//! one per coordinate plane `(i, j)`, `i < j`, taken in lexicographic order:
//!
//! ```text
//! R(theta) = G(i_1, j_1, theta_1) * G(i_2, j_2, theta_2) * ... * G(i_K, j_K, theta_K)
//! ```
//!
//! with `G(i, j, t)` the identity except `G[i][i] = G[j][j] = cos t`,
//! `G[i][j] = -sin t` and `G[j][i] = sin t`. The angles are tuned to make the
//! rows of `Z = X R` as close as possible to one-hot, measured by
//!
//! ```text
//! J(Z) = sum_i sum_j (z_ij / mu_i)^2,   mu_i = max_j |z_ij|
//! ```
//!
//! which lies in `[M, M C]` and equals `M` exactly for a signed indicator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stsc::StscConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RotationState {
    pub c: usize,
    pub theta: Vec<f64>,
    pub plane_order: Vec<(usize, usize)>,
}

/// Coordinate planes `(i, j)`, `i < j`, in lexicographic order.
pub fn planes(c: usize) -> Vec<(usize, usize)> {
    (0..c)
        .flat_map(|i| ((i + 1)..c).map(move |j| (i, j)))
        .collect()
}

impl RotationState {
    pub fn zeros(c: usize) -> Self {
        let plane_order = planes(c);
        RotationState {
            c,
            theta: vec![0.0; plane_order.len()],
            plane_order,
        }
    }

    pub fn with_angles(c: usize, theta: Vec<f64>) -> Result<Self> {
        let plane_order = planes(c);
        if theta.len() != plane_order.len() {
            return Err(Error::Config(format!(
                "C={c} needs {} angles, got {}",
                plane_order.len(),
                theta.len()
            )));
        }
        Ok(RotationState {
            c,
            theta,
            plane_order,
        })
    }

    pub fn num_angles(&self) -> usize {
        self.theta.len()
    }

    /// Warm start for a larger cluster count: known planes keep their angle,
    /// new planes start at zero. The resulting rotation equals
    /// `diag(R_old, I)`.
    pub fn extended(&self, c: usize) -> Self {
        assert!(
            c >= self.c,
            "cannot shrink a rotation from {} to {c}",
            self.c
        );
        let mut next = RotationState::zeros(c);
        for (k, &(i, j)) in next.plane_order.iter().enumerate() {
            if j < self.c {
                // Position of (i, j) in the smaller lexicographic order.
                let idx = i * self.c - i * (i + 1) / 2 + (j - i - 1);
                next.theta[k] = self.theta[idx];
            }
        }
        next
    }
}

/// Right-multiplies `a` in place by `G(i, j, theta)`.
fn rotate_columns(a: &mut DMatrix<f64>, i: usize, j: usize, theta: f64) {
    let (s, c) = theta.sin_cos();
    for r in 0..a.nrows() {
        let (x, y) = (a[(r, i)], a[(r, j)]);
        a[(r, i)] = c * x + s * y;
        a[(r, j)] = c * y - s * x;
    }
}

/// Left-multiplies `b` in place by `G(i, j, theta)`.
fn rotate_rows(b: &mut DMatrix<f64>, i: usize, j: usize, theta: f64) {
    let (s, c) = theta.sin_cos();
    for q in 0..b.ncols() {
        let (x, y) = (b[(i, q)], b[(j, q)]);
        b[(i, q)] = c * x - s * y;
        b[(j, q)] = s * x + c * y;
    }
}

pub fn rotation_matrix(state: &RotationState) -> DMatrix<f64> {
    let mut r = DMatrix::identity(state.c, state.c);
    for (&(i, j), &t) in state.plane_order.iter().zip(&state.theta) {
        rotate_columns(&mut r, i, j, t);
    }
    r
}

/// `Z = X R(theta)`.
pub fn rotate(x: &DMatrix<f64>, state: &RotationState) -> DMatrix<f64> {
    x * rotation_matrix(state)
}

/// Column of the largest `|z_ij|` in row `i`, first on ties.
fn row_argmax(z: &DMatrix<f64>, i: usize) -> usize {
    let mut best = 0;
    for j in 1..z.ncols() {
        if z[(i, j)].abs() > z[(i, best)].abs() {
            best = j;
        }
    }
    best
}

pub fn alignment_cost(z: &DMatrix<f64>) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..z.nrows() {
        let mu = z[(i, row_argmax(z, i))].abs();
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Degenerate(format!(
                "row {i} of the embedding is zero"
            )));
        }
        // (z/mu)^2 <= 1 holds exactly in floating point, keeping M <= J <= M C.
        total += z.row(i).iter().map(|&v| (v / mu).powi(2)).sum::<f64>();
    }
    Ok(total)
}

/// Gradient of `J(X R(theta))` with respect to every angle.
///
/// The row argmax is held fixed, so the result is exact wherever it is
/// unique and a one-sided derivative on ties.
pub fn cost_gradient(x: &DMatrix<f64>, state: &RotationState) -> Result<Vec<f64>> {
    let (m, c) = (x.nrows(), state.c);
    let k_total = state.num_angles();
    let z = rotate(x, state);

    let mut argmax = Vec::with_capacity(m);
    let mut inv_mu = Vec::with_capacity(m);
    let mut row_sq = Vec::with_capacity(m);
    for i in 0..m {
        let a = row_argmax(&z, i);
        let mu = z[(i, a)].abs();
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Degenerate(format!(
                "row {i} of the embedding is zero"
            )));
        }
        argmax.push(a);
        inv_mu.push(1.0 / mu);
        row_sq.push(z.row(i).norm_squared());
    }

    // suffix[k] = G_{k+1} ... G_K
    let mut suffix = vec![DMatrix::identity(c, c); k_total];
    for k in (0..k_total.saturating_sub(1)).rev() {
        let mut b = suffix[k + 1].clone();
        let (i, j) = state.plane_order[k + 1];
        rotate_rows(&mut b, i, j, state.theta[k + 1]);
        suffix[k] = b;
    }

    // prefix = X G_1 ... G_{k-1}, advanced as k increases.
    let mut prefix = x.clone();
    let mut grad = vec![0.0; k_total];
    let mut col_i = vec![0.0; m];
    let mut col_j = vec![0.0; m];
    for k in 0..k_total {
        let (pi, pj) = state.plane_order[k];
        let (s, co) = state.theta[k].sin_cos();
        // Only columns pi and pj of prefix * dG/dtheta are non-zero.
        for r in 0..m {
            let (a, b) = (prefix[(r, pi)], prefix[(r, pj)]);
            col_i[r] = -s * a + co * b;
            col_j[r] = -co * a - s * b;
        }
        let b = &suffix[k];
        let mut g = 0.0;
        for r in 0..m {
            let mut dot = 0.0;
            for q in 0..c {
                let dz = col_i[r] * b[(pi, q)] + col_j[r] * b[(pj, q)];
                dot += z[(r, q)] * dz;
            }
            let am = argmax[r];
            let dz_max = col_i[r] * b[(pi, am)] + col_j[r] * b[(pj, am)];
            let sign = z[(r, am)].signum();
            let im = inv_mu[r];
            g += dot * im * im - row_sq[r] * dz_max * sign * im * im * im;
        }
        grad[k] = 2.0 * g;
        rotate_columns(&mut prefix, pi, pj, state.theta[k]);
    }
    Ok(grad)
}

/// Full-batch gradient descent on the angles with a halving line search.
///
/// Each iteration tries `theta - eta * grad` for `eta = step_init,
/// step_init / 2, ...` (at most `step_halvings` halvings) and accepts the
/// first strict decrease. Stops on a relative decrease below `rel_tol`, a
/// gradient norm below `rel_tol * J`, a failed line search, or after
/// `max_iters` iterations.
pub fn optimize_rotation(
    x: &DMatrix<f64>,
    init: &RotationState,
    cfg: &StscConfig,
) -> Result<(RotationState, f64)> {
    if x.ncols() != init.c {
        return Err(Error::Config(format!(
            "embedding has {} columns but the rotation is {}x{}",
            x.ncols(),
            init.c,
            init.c
        )));
    }
    let mut state = init.clone();
    let mut cost = alignment_cost(&rotate(x, &state))?;
    let mut trial = state.clone();

    for iter in 0..cfg.max_iters {
        let grad = cost_gradient(x, &state)?;
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm <= cfg.rel_tol * cost {
            break;
        }

        let mut eta = cfg.step_init;
        let mut accepted = None;
        for _ in 0..=cfg.step_halvings {
            for ((t, &t0), &g) in trial.theta.iter_mut().zip(&state.theta).zip(&grad) {
                *t = t0 - eta * g;
            }
            let c = alignment_cost(&rotate(x, &trial))?;
            if c < cost {
                accepted = Some(c);
                break;
            }
            eta *= 0.5;
        }

        let Some(next) = accepted else {
            if iter == 0 {
                return Err(Error::Convergence {
                    c: init.c,
                    cost,
                    grad_norm,
                    halvings: cfg.step_halvings,
                });
            }
            break;
        };
        let rel = (cost - next) / cost;
        std::mem::swap(&mut state, &mut trial);
        cost = next;
        if rel < cfg.rel_tol {
            break;
        }
    }
    Ok((state, cost))
}

/// `label_i = argmax_j |z_ij|`, smallest column on ties.
pub fn assign_labels(z: &DMatrix<f64>) -> Vec<usize> {
    (0..z.nrows()).map(|i| row_argmax(z, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn plane_order_is_lexicographic() {
        assert_eq!(planes(3), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(planes(4).len(), 6);
    }

    #[test]
    fn zero_angles_give_identity() {
        let r = rotation_matrix(&RotationState::zeros(5));
        assert_eq!(r, DMatrix::identity(5, 5));
    }

    #[test]
    fn quarter_turn() {
        let r = rotation_matrix(&RotationState::with_angles(2, vec![FRAC_PI_2]).unwrap());
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((r - expected).amax() < 1e-15);
    }

    #[test]
    fn extension_embeds_previous_rotation() {
        let small = RotationState::with_angles(3, vec![0.3, -1.1, 0.7]).unwrap();
        let big = small.extended(5);
        assert_eq!(big.num_angles(), 10);
        let r_small = rotation_matrix(&small);
        let r_big = rotation_matrix(&big);
        for i in 0..5 {
            for j in 0..5 {
                let expected = if i < 3 && j < 3 {
                    r_small[(i, j)]
                } else if i == j {
                    1.0
                } else {
                    0.0
                };
                assert!((r_big[(i, j)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cost_examples() {
        let mut z = DMatrix::zeros(4, 3);
        z[(0, 0)] = 0.5;
        z[(1, 2)] = -2.0;
        z[(2, 1)] = 1.0;
        z[(3, 0)] = 3.0;
        assert_eq!(alignment_cost(&z).unwrap(), 4.0);
        assert_eq!(
            alignment_cost(&DMatrix::from_element(4, 3, 1.0)).unwrap(),
            12.0
        );
        let z = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let j = alignment_cost(&z).unwrap();
        assert!((j - (1.0 + 0.25 + 1.0 / 9.0 + 1.0)).abs() < 1e-15);
        assert!((j - 2.361111111111111).abs() < 1e-12);
    }

    #[test]
    fn zero_row_is_degenerate() {
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(alignment_cost(&z), Err(Error::Degenerate(_))));
    }

    #[test]
    fn labels_use_absolute_value_and_first_tie() {
        let z = DMatrix::from_row_slice(3, 2, &[0.1, -0.9, 0.5, 0.5, 0.7, 0.2]);
        assert_eq!(assign_labels(&z), vec![1, 0, 0]);
    }

    fn indicator(labels: &[usize], c: usize) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(labels.len(), c);
        for (i, &l) in labels.iter().enumerate() {
            x[(i, l)] = 1.0;
        }
        // Orthonormal columns.
        for j in 0..c {
            let n = x.column(j).norm();
            x.column_mut(j).scale_mut(1.0 / n);
        }
        x
    }

    #[test]
    fn indicator_is_a_fixed_point() {
        let x = indicator(&[0, 1, 2, 0, 1, 2, 2], 3);
        let g = cost_gradient(&x, &RotationState::zeros(3)).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
        let (state, j) =
            optimize_rotation(&x, &RotationState::zeros(3), &StscConfig::default()).unwrap();
        assert_eq!(state.theta, vec![0.0; 3]);
        assert_eq!(j, 7.0);
    }

    #[test]
    fn zero_budget_returns_init() {
        let x = indicator(&[0, 1, 1, 0], 2);
        let init = RotationState::with_angles(2, vec![0.4]).unwrap();
        let cfg = StscConfig {
            max_iters: 0,
            ..StscConfig::default()
        };
        let (state, j) = optimize_rotation(&x, &init, &cfg).unwrap();
        assert_eq!(state, init);
        assert_eq!(j, alignment_cost(&rotate(&x, &init)).unwrap());
    }

    #[test]
    fn optimization_never_increases_cost() {
        let x = DMatrix::from_fn(9, 3, |i, j| ((i * 7 + j * 3) as f64).sin());
        let init = RotationState::with_angles(3, vec![0.2, 0.4, -0.1]).unwrap();
        let j0 = alignment_cost(&rotate(&x, &init)).unwrap();
        let (_, j) = optimize_rotation(&x, &init, &StscConfig::default()).unwrap();
        assert!(j <= j0);
    }
}

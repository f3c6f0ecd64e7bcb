//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tacluster::kernel::SimilarityMatrix;
use tacluster::model::{Dataset, KernelParams, LatLon, SiteRecord};
use tacluster::stsc::{alignment_cost, rotate, RotationState};

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| self.normal())
    }

    pub fn symmetric(&mut self, n: usize) -> DMatrix<f64> {
        let a = self.matrix(n, n);
        (&a + a.transpose()) * 0.5
    }

    /// `rows x cols` matrix with orthonormal columns (modified Gram-Schmidt).
    pub fn orthonormal(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        let mut q = self.matrix(rows, cols);
        for j in 0..cols {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                let qk = q.column(k).into_owned();
                q.column_mut(j).axpy(-proj, &qk, 1.0);
            }
            let n = q.column(j).norm();
            q.column_mut(j).scale_mut(1.0 / n);
        }
        q
    }

    pub fn angles(&mut self, c: usize) -> RotationState {
        let k = c * (c - 1) / 2;
        let theta = (0..k)
            .map(|_| self.range(-std::f64::consts::PI, std::f64::consts::PI))
            .collect();
        RotationState::with_angles(c, theta).unwrap()
    }

    /// Random valid similarity matrix: symmetric, zero diagonal, entries in (0, 1].
    pub fn similarity(&mut self, n: usize) -> SimilarityMatrix {
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.range(0.05, 1.0);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        SimilarityMatrix {
            s,
            params: KernelParams::default(),
        }
    }

    /// Random valid dataset with integral counts.
    pub fn dataset(&mut self, m: usize) -> Dataset {
        let sites: Vec<SiteRecord> = (0..m)
            .map(|i| SiteRecord {
                site_id: 1000 + i as u64,
                coords: Some(LatLon::new(
                    self.range(-60.0, 60.0),
                    self.range(-170.0, 170.0),
                )),
                paging_requests: (self.uniform() * 100_000.0) as u64,
            })
            .collect();
        let mut dist = DMatrix::zeros(m, m);
        let mut attempts = DMatrix::zeros(m, m);
        let mut mrs = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in (i + 1)..m {
                let d = self.range(0.1, 20.0);
                let a = (self.uniform() * 5000.0).floor();
                let r = (self.uniform() * 50_000.0).floor();
                for (mat, v) in [(&mut dist, d), (&mut attempts, a), (&mut mrs, r)] {
                    mat[(i, j)] = v;
                    mat[(j, i)] = v;
                }
            }
        }
        Dataset::try_new(sites, dist, attempts, mrs).unwrap()
    }

    pub fn labels(&mut self, m: usize, k: usize) -> Vec<usize> {
        (0..m).map(|_| self.below(k)).collect()
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues and eigenvectors (columns), unsorted.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale: f64 = a.iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
        }
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Silhouette written directly from its definition, one double loop per
/// site and cluster.
pub fn brute_silhouette(s: &DMatrix<f64>, labels: &[usize]) -> (Vec<f64>, f64) {
    let m = labels.len();
    let k = labels.iter().max().unwrap() + 1;
    let mut per_site = vec![0.0; m];
    for i in 0..m {
        let own = labels[i];
        let own_size = labels.iter().filter(|&&l| l == own).count();
        if own_size == 1 {
            per_site[i] = 0.0;
            continue;
        }
        let mut a_sum = 0.0;
        for j in 0..m {
            if j != i && labels[j] == own {
                a_sum += 1.0 - s[(i, j)];
            }
        }
        let a = a_sum / (own_size - 1) as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c == own {
                continue;
            }
            let mut sum = 0.0;
            let mut count = 0usize;
            for j in 0..m {
                if labels[j] == c {
                    sum += 1.0 - s[(i, j)];
                    count += 1;
                }
            }
            if count > 0 {
                b = b.min(sum / count as f64);
            }
        }
        let denom = if a > b { a } else { b };
        per_site[i] = if denom > 0.0 { (b - a) / denom } else { 0.0 };
    }
    let mut total = 0.0;
    for v in &per_site {
        total += v;
    }
    let mean = total / m as f64;
    (per_site, mean)
}

/// Central finite-difference gradient of the alignment cost.
pub fn fd_gradient(x: &DMatrix<f64>, state: &RotationState, h: f64) -> Vec<f64> {
    (0..state.theta.len())
        .map(|k| {
            let mut plus = state.clone();
            plus.theta[k] += h;
            let mut minus = state.clone();
            minus.theta[k] -= h;
            let jp = alignment_cost(&rotate(x, &plus)).unwrap();
            let jm = alignment_cost(&rotate(x, &minus)).unwrap();
            (jp - jm) / (2.0 * h)
        })
        .collect()
}

/// Smallest relative gap between the largest and second-largest `|z|` over
/// all rows.
pub fn min_argmax_gap(z: &DMatrix<f64>) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..z.nrows() {
        let mut v: Vec<f64> = z.row(i).iter().map(|x| x.abs()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        if v.len() > 1 {
            gap = gap.min((v[0] - v[1]) / v[0]);
        }
    }
    gap
}

/// Block-constant similarity with the given block sizes.
pub fn block_similarity(
    sizes: &[usize],
    within: f64,
    between: f64,
) -> (SimilarityMatrix, Vec<usize>) {
    let labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &n)| std::iter::repeat_n(b, n))
        .collect();
    let m = labels.len();
    let s = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            0.0
        } else if labels[i] == labels[j] {
            within
        } else {
            between
        }
    });
    (
        SimilarityMatrix {
            s,
            params: KernelParams::default(),
        },
        labels,
    )
}

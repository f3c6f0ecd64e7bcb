//! Synthetic datasets with a planted TA structure.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`. Uniform draws
//! take the top 53 bits of `next_u64`; normals use Box-Muller; Poisson
//! counts use Knuth's product method on chunks of mean at most 30 (the sum
//! of independent Poisson variables is Poisson). Draw order is: site
//! offsets, site paging, then for each pair `i < j` in row-major order its
//! HO attempts followed by its MR noise.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::{haversine_km, EARTH_RADIUS_KM};
use crate::model::{Dataset, LatLon, SiteRecord};

const KM_PER_DEGREE: f64 = EARTH_RADIUS_KM * PI / 180.0;
const POISSON_CHUNK: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub m: usize,
    pub k: usize,
    pub cluster_centers: Vec<LatLon>,
    pub spread_km: f64,
    pub intra_attempts_mean: f64,
    pub inter_attempts_mean: f64,
    pub mr_per_attempt: f64,
    /// Mean of the Poisson noise added to every MR count.
    pub mr_noise_mean: f64,
    pub paging_mean: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Well-separated clusters: centers on a ring, heavy mobility inside
    /// clusters and little between them.
    pub fn separable(m: usize, k: usize, seed: u64) -> Self {
        SynthSpec {
            m,
            k,
            cluster_centers: ring_centers(LatLon::new(45.0, 5.0), 4.0, k),
            spread_km: 0.6,
            intra_attempts_mean: 500.0,
            inter_attempts_mean: 5.0,
            mr_per_attempt: 12.0,
            mr_noise_mean: 20.0,
            paging_mean: 20_000.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.k > self.m {
            return Err(Error::Config(format!(
                "need m >= k >= 2, got m={} k={}",
                self.m, self.k
            )));
        }
        if self.cluster_centers.len() != self.k {
            return Err(Error::Config(format!(
                "{} cluster centers for k={}",
                self.cluster_centers.len(),
                self.k
            )));
        }
        if let Some(c) = self.cluster_centers.iter().find(|c| !c.is_valid()) {
            return Err(Error::Config(format!("invalid cluster center {c:?}")));
        }
        for (name, v) in [
            ("spread_km", self.spread_km),
            ("intra_attempts_mean", self.intra_attempts_mean),
            ("inter_attempts_mean", self.inter_attempts_mean),
            ("mr_per_attempt", self.mr_per_attempt),
            ("mr_noise_mean", self.mr_noise_mean),
            ("paging_mean", self.paging_mean),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// `k` points evenly spaced on a circle of `radius_km` around `center`.
pub fn ring_centers(center: LatLon, radius_km: f64, k: usize) -> Vec<LatLon> {
    (0..k)
        .map(|c| {
            let angle = 2.0 * PI * c as f64 / k as f64;
            offset(center, radius_km * angle.cos(), radius_km * angle.sin())
        })
        .collect()
}

fn offset(origin: LatLon, east_km: f64, north_km: f64) -> LatLon {
    LatLon::new(
        origin.lat + north_km / KM_PER_DEGREE,
        origin.lon + east_km / (KM_PER_DEGREE * origin.lat.to_radians().cos()),
    )
}

struct Draws(ChaCha8Rng);

impl Draws {
    /// Uniform in `[0, 1)`.
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        (r * c, r * s)
    }

    fn poisson(&mut self, mean: f64) -> u64 {
        let mut remaining = mean;
        let mut total = 0;
        while remaining > 0.0 {
            let chunk = remaining.min(POISSON_CHUNK);
            remaining -= chunk;
            let limit = (-chunk).exp();
            let mut p = self.uniform();
            while p > limit {
                total += 1;
                p *= self.uniform();
            }
        }
        total
    }
}

/// Generates a dataset and the planted label of every site (`i % k`).
pub fn generate(spec: &SynthSpec) -> Result<(Dataset, Vec<usize>)> {
    spec.validate()?;
    let mut rng = Draws(ChaCha8Rng::seed_from_u64(spec.seed));
    let m = spec.m;
    let planted: Vec<usize> = (0..m).map(|i| i % spec.k).collect();

    let coords: Vec<LatLon> = planted
        .iter()
        .map(|&l| {
            let (dx, dy) = rng.normal_pair();
            offset(
                spec.cluster_centers[l],
                dx * spec.spread_km,
                dy * spec.spread_km,
            )
        })
        .collect();
    let sites: Vec<SiteRecord> = coords
        .iter()
        .enumerate()
        .map(|(i, &c)| SiteRecord {
            site_id: i as u64,
            coords: Some(c),
            paging_requests: rng.poisson(spec.paging_mean),
        })
        .collect();

    let mut dist = DMatrix::zeros(m, m);
    let mut attempts = DMatrix::zeros(m, m);
    let mut mrs = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let mean = if planted[i] == planted[j] {
                spec.intra_attempts_mean
            } else {
                spec.inter_attempts_mean
            };
            let a = rng.poisson(mean);
            let r =
                (spec.mr_per_attempt * a as f64).round() as u64 + rng.poisson(spec.mr_noise_mean);
            let d = haversine_km(coords[i], coords[j]);
            for (mat, v) in [
                (&mut dist, d),
                (&mut attempts, a as f64),
                (&mut mrs, r as f64),
            ] {
                mat[(i, j)] = v;
                mat[(j, i)] = v;
            }
        }
    }

    let ds = Dataset::try_new(sites, dist, attempts, mrs)?;
    Ok((ds, planted))
}

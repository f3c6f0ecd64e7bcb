//! Domain types shared by the whole pipeline.
//!
//! Sites are indexed `0..M` in the order they appear in the sites file and
//! every matrix in a [`Dataset`] uses that index.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteRecord {
    pub site_id: u64,
    /// `None` when the sites file leaves both coordinate fields empty.
    pub coords: Option<LatLon>,
    /// Paging requests addressed to the site per observation period.
    pub paging_requests: u64,
}

/// One row of the neighbor-relation export. HO attempts are already counted
/// in both directions by the source system.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationRecord {
    pub source_id: u64,
    pub target_id: u64,
    pub isd_km: f64,
    pub ho_attempts: u64,
    pub mr_count: u64,
}

/// Dense per-pair features for `M` sites.
///
/// `dist` holds inter-site distances in km, `attempts` the handover attempts
/// and `mrs` the A3 measurement-report counts. Counts are kept as `f64` so
/// that they feed straight into the kernel; they are integral and exact up
/// to 2^53.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sites: Vec<SiteRecord>,
    pub dist: DMatrix<f64>,
    pub attempts: DMatrix<f64>,
    pub mrs: DMatrix<f64>,
}

impl Dataset {
    /// Builds a dataset and rejects it unless [`validate_dataset`] is clean.
    pub fn try_new(
        sites: Vec<SiteRecord>,
        dist: DMatrix<f64>,
        attempts: DMatrix<f64>,
        mrs: DMatrix<f64>,
    ) -> Result<Self> {
        let ds = Dataset {
            sites,
            dist,
            attempts,
            mrs,
        };
        let report = validate_dataset(&ds);
        if report.is_valid() {
            Ok(ds)
        } else {
            Err(Error::InvalidDataset(report.to_string()))
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn paging(&self) -> impl Iterator<Item = u64> + '_ {
        self.sites.iter().map(|s| s.paging_requests)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Dist,
    Attempts,
    Mrs,
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Feature::Dist => "dist",
            Feature::Attempts => "attempts",
            Feature::Mrs => "mrs",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewSites {
        m: usize,
    },
    DuplicateSiteId {
        site_id: u64,
        first: usize,
        second: usize,
    },
    InvalidCoordinates {
        site: usize,
    },
    Shape {
        feature: Feature,
        rows: usize,
        cols: usize,
    },
    NonFinite {
        feature: Feature,
        i: usize,
        j: usize,
    },
    Negative {
        feature: Feature,
        i: usize,
        j: usize,
    },
    /// Reported once per unordered pair, with `i < j`.
    Asymmetric {
        feature: Feature,
        i: usize,
        j: usize,
    },
    NonZeroDiagonal {
        feature: Feature,
        i: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewSites { m } => write!(f, "need at least 2 sites, got {m}"),
            Violation::DuplicateSiteId {
                site_id,
                first,
                second,
            } => write!(
                f,
                "site_id {site_id} appears at indices {first} and {second}"
            ),
            Violation::InvalidCoordinates { site } => {
                write!(f, "site {site} has out-of-range coordinates")
            }
            Violation::Shape {
                feature,
                rows,
                cols,
            } => write!(f, "{feature} matrix is {rows}x{cols}"),
            Violation::NonFinite { feature, i, j } => {
                write!(f, "{feature}[{i}][{j}] is not finite")
            }
            Violation::Negative { feature, i, j } => write!(f, "{feature}[{i}][{j}] is negative"),
            Violation::Asymmetric { feature, i, j } => {
                write!(f, "{feature}[{i}][{j}] != {feature}[{j}][{i}]")
            }
            Violation::NonZeroDiagonal { feature, i } => {
                write!(f, "{feature}[{i}][{i}] is not zero")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every invariant violation of `ds`. An empty report means valid.
pub fn validate_dataset(ds: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();
    let m = ds.sites.len();
    if m < 2 {
        violations.push(Violation::TooFewSites { m });
    }

    let mut seen: HashMap<u64, usize> = HashMap::with_capacity(m);
    for (idx, site) in ds.sites.iter().enumerate() {
        if let Some(&first) = seen.get(&site.site_id) {
            violations.push(Violation::DuplicateSiteId {
                site_id: site.site_id,
                first,
                second: idx,
            });
        } else {
            seen.insert(site.site_id, idx);
        }
        if matches!(site.coords, Some(c) if !c.is_valid()) {
            violations.push(Violation::InvalidCoordinates { site: idx });
        }
    }

    for (feature, mat) in [
        (Feature::Dist, &ds.dist),
        (Feature::Attempts, &ds.attempts),
        (Feature::Mrs, &ds.mrs),
    ] {
        if mat.nrows() != m || mat.ncols() != m {
            violations.push(Violation::Shape {
                feature,
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
            continue;
        }
        for i in 0..m {
            for j in 0..m {
                let v = mat[(i, j)];
                if !v.is_finite() {
                    violations.push(Violation::NonFinite { feature, i, j });
                } else if v < 0.0 {
                    violations.push(Violation::Negative { feature, i, j });
                }
                if i < j && v.is_finite() && mat[(j, i)].is_finite() && v != mat[(j, i)] {
                    violations.push(Violation::Asymmetric { feature, i, j });
                }
            }
            if feature == Feature::Dist && mat[(i, i)] != 0.0 {
                violations.push(Violation::NonZeroDiagonal { feature, i });
            }
        }
    }

    ValidationReport { violations }
}

/// Parameters of the composite similarity kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Weight of distance against mobility features, in `[0, 1]`.
    pub alpha: f64,
    /// Weight of HO attempts against MR counts, in `[0, 1]`.
    pub beta: f64,
    pub gamma: f64,
}

impl KernelParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!(
                "alpha must be in [0, 1], got {alpha}"
            )));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Config(format!("beta must be in [0, 1], got {beta}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Config(format!("gamma must be > 0, got {gamma}")));
        }
        Ok(KernelParams { alpha, beta, gamma })
    }
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            alpha: 0.5,
            beta: 0.5,
            gamma: 1.0,
        }
    }
}

/// A scored tracking-area plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TAPlan {
    /// TA label per site, dense in `0..num_tas`.
    pub labels: Vec<usize>,
    pub num_tas: usize,
    pub tau: u64,
    pub paging_cost: u64,
    pub quality: f64,
    pub silhouette: f64,
}

/// Renumbers labels densely to `0..k` keeping the relative order of the
/// original label values. Returns the new labels and `k`.
pub fn compact_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut used: Vec<usize> = labels.to_vec();
    used.sort_unstable();
    used.dedup();
    let out = labels
        .iter()
        .map(|l| used.binary_search(l).expect("label present"))
        .collect();
    (out, used.len())
}

//! CSV ingestion of the site and neighbor-relation exports.
//!
//! Two files are read:
//!
//! ```text
//! site_id,lat,lon,paging_requests
//! source_id,target_id,isd_km,ho_attempts,mr_count
//! ```
//!
//! Coordinates may be left empty (both fields), in which case every pair
//! involving that site must carry a recorded distance.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{Dataset, LatLon, RelationRecord, SiteRecord};

pub const SITES_HEADER: [&str; 4] = ["site_id", "lat", "lon", "paging_requests"];
pub const RELATIONS_HEADER: [&str; 5] = [
    "source_id",
    "target_id",
    "isd_km",
    "ho_attempts",
    "mr_count",
];

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Distances recorded for one pair may differ by at most this fraction of
/// their mean.
const MAX_DISTANCE_SPREAD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct RawTables {
    pub site_rows: Vec<SiteRecord>,
    pub relation_rows: Vec<RelationRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IngestWarning {
    /// More than one row describes the same unordered pair; their counts were summed.
    DuplicatePair { a: u64, b: u64, rows: usize },
}

impl std::fmt::Display for IngestWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IngestWarning::DuplicatePair { a, b, rows } => write!(
                f,
                "pair ({a}, {b}) is described by {rows} rows; HO attempts and MR counts were summed"
            ),
        }
    }
}

/// Great-circle distance in km between two points given in degrees.
pub fn haversine_km(a: LatLon, b: LatLon) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin()
}

pub fn parse_inputs(sites_path: &Path, relations_path: &Path) -> Result<RawTables> {
    let sites = open(sites_path)?;
    let site_rows = parse_sites(sites, sites_path)?;
    let relations = open(relations_path)?;
    let relation_rows = parse_relations(relations, relations_path, &site_rows)?;
    Ok(RawTables {
        site_rows,
        relation_rows,
    })
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    path: &'a Path,
    line: u64,
}

impl Cursor<'_> {
    fn err(&self, column: Option<&str>, message: impl Into<String>) -> Error {
        Error::Input {
            path: self.path.to_path_buf(),
            line: Some(self.line),
            column: column.map(str::to_owned),
            message: message.into(),
        }
    }

    fn field<T: FromStr>(&self, record: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
        let raw = record.get(idx).unwrap_or("").trim();
        raw.parse()
            .map_err(|_| self.err(Some(name), format!("cannot parse `{raw}` as a number")))
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, path: &Path, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| csv_error(path, e))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Input {
            path: path.to_path_buf(),
            line: Some(1),
            column: None,
            message: format!(
                "unexpected header `{}`, expected `{}`",
                header.iter().collect::<Vec<_>>().join(","),
                expected.join(",")
            ),
        });
    }
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    Error::Input {
        path: path.to_path_buf(),
        line,
        column: None,
        message: format!("malformed CSV: {e}"),
    }
}

/// Parses a sites table. `path` is only used in error messages.
pub fn parse_sites<R: Read>(input: R, path: &Path) -> Result<Vec<SiteRecord>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, path, &SITES_HEADER)?;

    let mut rows = Vec::new();
    let mut index: HashMap<u64, u64> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let cur = Cursor {
            path,
            line: record.position().map_or(0, |p| p.line()),
        };
        let site_id: u64 = cur.field(&record, 0, "site_id")?;
        let lat_raw = record.get(1).unwrap_or("");
        let lon_raw = record.get(2).unwrap_or("");
        let coords = match (lat_raw.is_empty(), lon_raw.is_empty()) {
            (true, true) => None,
            (false, false) => {
                let lat: f64 = cur.field(&record, 1, "lat")?;
                let lon: f64 = cur.field(&record, 2, "lon")?;
                if !(lat.is_finite() && (-90.0..=90.0).contains(&lat)) {
                    return Err(cur.err(Some("lat"), format!("latitude {lat} out of range")));
                }
                if !(lon.is_finite() && (-180.0..=180.0).contains(&lon)) {
                    return Err(cur.err(Some("lon"), format!("longitude {lon} out of range")));
                }
                Some(LatLon::new(lat, lon))
            }
            (true, false) => return Err(cur.err(Some("lat"), "latitude missing")),
            (false, true) => return Err(cur.err(Some("lon"), "longitude missing")),
        };
        let paging_requests: u64 = cur.field(&record, 3, "paging_requests")?;
        if let Some(first) = index.insert(site_id, cur.line) {
            return Err(cur.err(
                Some("site_id"),
                format!("duplicate site_id {site_id} (first seen on line {first})"),
            ));
        }
        rows.push(SiteRecord {
            site_id,
            coords,
            paging_requests,
        });
    }
    if rows.is_empty() {
        return Err(Error::input(path, "no sites"));
    }
    Ok(rows)
}

/// Parses a relations table, checking that every site reference is known.
pub fn parse_relations<R: Read>(
    input: R,
    path: &Path,
    sites: &[SiteRecord],
) -> Result<Vec<RelationRecord>> {
    let known: std::collections::HashSet<u64> = sites.iter().map(|s| s.site_id).collect();
    let mut rdr = reader(input);
    check_header(&mut rdr, path, &RELATIONS_HEADER)?;

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let cur = Cursor {
            path,
            line: record.position().map_or(0, |p| p.line()),
        };
        let source_id: u64 = cur.field(&record, 0, "source_id")?;
        let target_id: u64 = cur.field(&record, 1, "target_id")?;
        let isd_km: f64 = cur.field(&record, 2, "isd_km")?;
        let ho_attempts: u64 = cur.field(&record, 3, "ho_attempts")?;
        let mr_count: u64 = cur.field(&record, 4, "mr_count")?;
        for (col, id) in [("source_id", source_id), ("target_id", target_id)] {
            if !known.contains(&id) {
                return Err(cur.err(Some(col), format!("unknown site {id}")));
            }
        }
        if !(isd_km.is_finite() && isd_km >= 0.0) {
            return Err(cur.err(Some("isd_km"), format!("distance {isd_km} must be >= 0")));
        }
        if source_id == target_id && isd_km != 0.0 {
            return Err(cur.err(Some("isd_km"), "self-relation must have zero distance"));
        }
        rows.push(RelationRecord {
            source_id,
            target_id,
            isd_km,
            ho_attempts,
            mr_count,
        });
    }
    if rows.is_empty() {
        return Err(Error::input(path, "no relations"));
    }
    Ok(rows)
}

#[derive(Default)]
struct PairAccum {
    attempts: u64,
    mrs: u64,
    distances: Vec<f64>,
    rows: usize,
}

/// Assembles dense symmetric matrices and logs any ingest warnings.
pub fn build_dataset(raw: &RawTables) -> Result<Dataset> {
    let (ds, warnings) = build_dataset_with_warnings(raw)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(ds)
}

/// Like [`build_dataset`] but returns the warnings instead of logging them.
///
/// For every unordered pair the HO attempts and MR counts of all rows in
/// either direction are summed, and the distance is the mean of the recorded
/// distances or the haversine distance when no row records the pair.
/// Self-relations are dropped.
pub fn build_dataset_with_warnings(raw: &RawTables) -> Result<(Dataset, Vec<IngestWarning>)> {
    let m = raw.site_rows.len();
    let index: HashMap<u64, usize> = raw
        .site_rows
        .iter()
        .enumerate()
        .map(|(i, s)| (s.site_id, i))
        .collect();
    if index.len() != m {
        return Err(Error::InvalidDataset("duplicate site ids".into()));
    }

    let mut pairs: BTreeMap<(usize, usize), PairAccum> = BTreeMap::new();
    for row in &raw.relation_rows {
        let lookup = |id: u64| {
            index.get(&id).copied().ok_or_else(|| {
                Error::InvalidDataset(format!("relation references unknown site {id}"))
            })
        };
        let (s, t) = (lookup(row.source_id)?, lookup(row.target_id)?);
        if s == t {
            continue;
        }
        let acc = pairs.entry((s.min(t), s.max(t))).or_default();
        acc.attempts += row.ho_attempts;
        acc.mrs += row.mr_count;
        acc.distances.push(row.isd_km);
        acc.rows += 1;
    }

    let mut dist = DMatrix::zeros(m, m);
    let mut attempts = DMatrix::zeros(m, m);
    let mut mrs = DMatrix::zeros(m, m);
    let mut warnings = Vec::new();

    for (&(i, j), acc) in pairs.iter_mut() {
        let (a, b) = (raw.site_rows[i].site_id, raw.site_rows[j].site_id);
        if acc.rows > 1 {
            warnings.push(IngestWarning::DuplicatePair {
                a,
                b,
                rows: acc.rows,
            });
        }
        // Sorted so the mean does not depend on row order.
        acc.distances.sort_by(f64::total_cmp);
        let n = acc.distances.len() as f64;
        let mean = acc.distances.iter().sum::<f64>() / n;
        let spread = acc.distances[acc.distances.len() - 1] - acc.distances[0];
        if spread > MAX_DISTANCE_SPREAD * mean {
            return Err(Error::InvalidDataset(format!(
                "pair ({a}, {b}) has inconsistent distances {:?}",
                acc.distances
            )));
        }
        set_sym(&mut dist, i, j, mean);
        set_sym(&mut attempts, i, j, acc.attempts as f64);
        set_sym(&mut mrs, i, j, acc.mrs as f64);
    }

    for i in 0..m {
        for j in (i + 1)..m {
            if pairs.contains_key(&(i, j)) {
                continue;
            }
            let (si, sj) = (&raw.site_rows[i], &raw.site_rows[j]);
            match (si.coords, sj.coords) {
                (Some(a), Some(b)) => set_sym(&mut dist, i, j, haversine_km(a, b)),
                _ => {
                    return Err(Error::InvalidDataset(format!(
                        "no distance recorded for pair ({}, {}) and coordinates are missing",
                        si.site_id, sj.site_id
                    )))
                }
            }
        }
    }

    let ds = Dataset::try_new(raw.site_rows.clone(), dist, attempts, mrs)?;
    Ok((ds, warnings))
}

fn set_sym(mat: &mut DMatrix<f64>, i: usize, j: usize, v: f64) {
    mat[(i, j)] = v;
    mat[(j, i)] = v;
}

/// Reads and assembles a dataset from the two CSV files.
pub fn load_dataset(sites_path: &Path, relations_path: &Path) -> Result<Dataset> {
    build_dataset(&parse_inputs(sites_path, relations_path)?)
}

/// Writes a sites table in the format accepted by [`parse_sites`].
pub fn write_sites<W: std::io::Write>(out: W, sites: &[SiteRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SITES_HEADER)?;
    for s in sites {
        let (lat, lon) = match s.coords {
            Some(c) => (c.lat.to_string(), c.lon.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            s.site_id.to_string(),
            lat,
            lon,
            s.paging_requests.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a relations table in the format accepted by [`parse_relations`].
pub fn write_relations<W: std::io::Write>(out: W, rows: &[RelationRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RELATIONS_HEADER)?;
    for r in rows {
        w.write_record([
            r.source_id.to_string(),
            r.target_id.to_string(),
            r.isd_km.to_string(),
            r.ho_attempts.to_string(),
            r.mr_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One relation row per unordered pair `i < j`, as a complete export would list them.
pub fn relations_from_dataset(ds: &Dataset) -> Vec<RelationRecord> {
    let m = ds.len();
    let mut rows = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            rows.push(RelationRecord {
                source_id: ds.sites[i].site_id,
                target_id: ds.sites[j].site_id,
                isd_km: ds.dist[(i, j)],
                ho_attempts: ds.attempts[(i, j)] as u64,
                mr_count: ds.mrs[(i, j)] as u64,
            });
        }
    }
    rows
}

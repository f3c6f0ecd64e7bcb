//! File formats written by the command-line tool.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c_min: usize,
    pub c_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateSummary {
    pub c: usize,
    pub j_min: f64,
    pub quality: f64,
}

/// JSON report of a single planning run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub params: ReportParams,
    pub selected_c: usize,
    pub num_tas: usize,
    pub quality: f64,
    pub j_min: f64,
    pub silhouette_mean: f64,
    pub tau: u64,
    pub paging: u64,
    pub per_candidate: Vec<CandidateSummary>,
    pub labels_path: Option<PathBuf>,
}

/// Writes `bytes` next to `path` and renames it into place, so readers never
/// observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let res = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = res {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn labels_csv(ds: &Dataset, labels: &[usize]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["site_id", "ta_label"])
        .expect("in-memory write");
    for (site, l) in ds.sites.iter().zip(labels) {
        w.write_record([site.site_id.to_string(), l.to_string()])
            .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn report_json(report: &PlanReport) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
    out.push(b'\n');
    out
}

/// GeoJSON FeatureCollection with one Point per site.
pub fn geojson(ds: &Dataset, labels: &[usize]) -> Result<Vec<u8>> {
    let features = ds
        .sites
        .iter()
        .zip(labels)
        .map(|(site, &label)| {
            let c = site.coords.ok_or_else(|| {
                Error::InvalidDataset(format!("site {} has no coordinates", site.site_id))
            })?;
            Ok(json!({
                "type": "Feature",
                "geometry": { "type": "Point", "coordinates": [c.lon, c.lat] },
                "properties": {
                    "site_id": site.site_id,
                    "ta_label": label,
                    "paging_requests": site.paging_requests,
                },
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let doc = json!({ "type": "FeatureCollection", "features": features });
    let mut out = serde_json::to_vec_pretty(&doc).expect("geojson serializes");
    out.push(b'\n');
    Ok(out)
}

pub fn export_geojson(ds: &Dataset, labels: &[usize], path: &Path) -> Result<()> {
    let bytes = geojson(ds, labels)?;
    write_atomic(path, &bytes)
}

pub const SWEEP_HEADER: [&str; 8] = [
    "alpha",
    "beta",
    "num_tas",
    "taus",
    "paging_requests",
    "quality",
    "silhouette",
    "status",
];

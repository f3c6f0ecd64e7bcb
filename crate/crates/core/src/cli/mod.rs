//! End-to-end planning: ingest, similarity, clustering, scoring and the
//! `plan`, `sweep` and `synth` commands built on top of it.

mod args;
mod output;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use args::{Cli, Command, PlanArgs, StscArgs, SweepArgs, SynthArgs};
pub use output::{
    export_geojson, geojson, labels_csv, report_json, write_atomic, CandidateSummary, PlanReport,
    ReportParams, SWEEP_HEADER,
};

use crate::error::{Error, Result};
use crate::eval::{plan_costs, silhouette};
use crate::ingest::{load_dataset, relations_from_dataset, write_relations, write_sites};
use crate::kernel::build_similarity;
use crate::model::{compact_labels, Dataset, KernelParams, TAPlan};
use crate::stsc::{run_stsc, StscConfig, StscResult};
use crate::synth::{generate, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_INPUT
    }
}

/// A planning run and everything needed to report on it.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub plan: TAPlan,
    pub stsc: StscResult,
    pub params: KernelParams,
    pub config: StscConfig,
}

impl PlanOutcome {
    pub fn report(&self, labels_path: Option<PathBuf>) -> PlanReport {
        PlanReport {
            params: ReportParams {
                alpha: self.params.alpha,
                beta: self.params.beta,
                gamma: self.params.gamma,
                c_min: self.config.c_min,
                c_max: self.config.c_max,
            },
            selected_c: self.stsc.selected.c,
            num_tas: self.plan.num_tas,
            quality: self.plan.quality,
            j_min: self.stsc.selected.j_min,
            silhouette_mean: self.plan.silhouette,
            tau: self.plan.tau,
            paging: self.plan.paging_cost,
            per_candidate: self
                .stsc
                .all
                .iter()
                .map(|c| CandidateSummary {
                    c: c.c,
                    j_min: c.j_min,
                    quality: c.quality,
                })
                .collect(),
            labels_path,
        }
    }
}

/// Clamps `c_max` to the number of sites.
pub fn effective_config(cfg: &StscConfig, m: usize) -> StscConfig {
    let mut cfg = cfg.clone();
    if cfg.c_max > m {
        log::warn!("c_max={} exceeds the {m} sites; using c_max={m}", cfg.c_max);
        cfg.c_max = m;
    }
    cfg
}

/// Clusters a dataset and scores the selected plan.
pub fn plan_dataset(ds: &Dataset, params: KernelParams, cfg: &StscConfig) -> Result<PlanOutcome> {
    let cfg = effective_config(cfg, ds.len());
    let sim = build_similarity(ds, params);
    let stsc = run_stsc(&sim, &cfg)?;
    let (labels, num_tas) = compact_labels(&stsc.selected.labels);
    let sil = silhouette(&sim, &labels)?;
    let costs = plan_costs(ds, &labels);
    let plan = TAPlan {
        labels,
        num_tas,
        tau: costs.tau,
        paging_cost: costs.paging,
        quality: stsc.selected.quality,
        silhouette: sil.mean,
    };
    Ok(PlanOutcome {
        plan,
        stsc,
        params,
        config: cfg,
    })
}

/// Parses `start:stop:step` (or a single value) into grid points in
/// `[0, 1]`. `stop` is included when it lies within half a step of a point.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::Config(format!("grid `{spec}`: {msg}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("expected start:stop:step"))?;
    let (start, stop, step) = match parts.as_slice() {
        [v] => (*v, *v, 1.0),
        [start, stop, step] => (*start, *stop, *step),
        _ => return Err(bad("expected start:stop:step")),
    };
    if !(step.is_finite() && step > 0.0) {
        return Err(bad("step must be > 0"));
    }
    if !(start.is_finite() && stop.is_finite() && start <= stop) {
        return Err(bad("need start <= stop"));
    }
    let n = ((stop - start) / step + 0.5).floor() as usize;
    let points: Vec<f64> = (0..=n)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect();
    if points.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(bad("points must lie in [0, 1]"));
    }
    Ok(points)
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kernel: KernelParams,
    pub stsc: StscConfig,
    pub sites: PathBuf,
    pub relations: PathBuf,
    pub out_labels: Option<PathBuf>,
    pub out_report: Option<PathBuf>,
    pub out_geojson: Option<PathBuf>,
    pub out_sweep: Option<PathBuf>,
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub jobs: usize,
}

impl RunConfig {
    pub fn new(sites: impl Into<PathBuf>, relations: impl Into<PathBuf>) -> Self {
        let grid = parse_grid("0:1:0.1").expect("default grid");
        RunConfig {
            kernel: KernelParams::default(),
            stsc: StscConfig::default(),
            sites: sites.into(),
            relations: relations.into(),
            out_labels: None,
            out_report: None,
            out_geojson: None,
            out_sweep: None,
            alpha_grid: grid.clone(),
            beta_grid: grid,
            jobs: 1,
        }
    }
}

fn report_error(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

/// Runs one plan and writes labels, report and optional map.
pub fn cmd_plan(cfg: &RunConfig) -> i32 {
    match run_plan(cfg) {
        Ok(outcome) => {
            let p = &outcome.plan;
            println!(
                "C={} num_tas={} Q={:.6} silhouette={:.6} TAU={} paging={}",
                outcome.stsc.selected.c, p.num_tas, p.quality, p.silhouette, p.tau, p.paging_cost
            );
            EXIT_OK
        }
        Err(e) => report_error(&e),
    }
}

fn run_plan(cfg: &RunConfig) -> Result<PlanOutcome> {
    let ds = load_dataset(&cfg.sites, &cfg.relations)?;
    let outcome = plan_dataset(&ds, cfg.kernel, &cfg.stsc)?;
    let labels = &outcome.plan.labels;

    // Render everything before touching the filesystem.
    let map = cfg
        .out_geojson
        .as_ref()
        .map(|_| geojson(&ds, labels))
        .transpose()?;
    let labels_bytes = labels_csv(&ds, labels);
    let report = report_json(&outcome.report(cfg.out_labels.clone()));

    if let Some(path) = &cfg.out_labels {
        write_atomic(path, &labels_bytes)?;
    }
    if let Some(path) = &cfg.out_report {
        write_atomic(path, &report)?;
    }
    if let (Some(path), Some(bytes)) = (&cfg.out_geojson, map) {
        write_atomic(path, &bytes)?;
    }
    Ok(outcome)
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub result: std::result::Result<TAPlan, String>,
}

/// Plans every `(alpha, beta)` grid point on up to `jobs` threads. Rows come
/// back sorted by `(alpha, beta)`.
pub fn sweep(
    ds: &Dataset,
    gamma: f64,
    alpha_grid: &[f64],
    beta_grid: &[f64],
    stsc: &StscConfig,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    let mut points: Vec<(f64, f64)> = alpha_grid
        .iter()
        .flat_map(|&a| beta_grid.iter().map(move |&b| (a, b)))
        .collect();
    points.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    points.dedup();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        points
            .par_iter()
            .map(|&(alpha, beta)| {
                let result = KernelParams::new(alpha, beta, gamma)
                    .and_then(|p| plan_dataset(ds, p, stsc))
                    .map(|o| o.plan)
                    .map_err(|e| e.to_string());
                SweepRow {
                    alpha,
                    beta,
                    result,
                }
            })
            .collect()
    });
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).expect("in-memory write");
    for row in rows {
        let mut rec = vec![row.alpha.to_string(), row.beta.to_string()];
        match &row.result {
            Ok(p) => rec.extend([
                p.num_tas.to_string(),
                p.tau.to_string(),
                p.paging_cost.to_string(),
                p.quality.to_string(),
                p.silhouette.to_string(),
                "ok".to_string(),
            ]),
            Err(msg) => {
                rec.extend(std::iter::repeat_n(String::new(), 5));
                rec.push(format!("error: {msg}"));
            }
        }
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn cmd_sweep(cfg: &RunConfig) -> i32 {
    let run = || -> Result<i32> {
        let ds = load_dataset(&cfg.sites, &cfg.relations)?;
        let rows = sweep(
            &ds,
            cfg.kernel.gamma,
            &cfg.alpha_grid,
            &cfg.beta_grid,
            &cfg.stsc,
            cfg.jobs,
        )?;
        let ok = rows.iter().filter(|r| r.result.is_ok()).count();
        for row in rows.iter().filter(|r| r.result.is_err()) {
            if let Err(msg) = &row.result {
                eprintln!("alpha={} beta={}: {msg}", row.alpha, row.beta);
            }
        }
        let out = cfg
            .out_sweep
            .clone()
            .unwrap_or_else(|| PathBuf::from("sweep.csv"));
        write_atomic(&out, &sweep_csv(&rows))?;
        println!(
            "{ok}/{} grid points planned, written to {}",
            rows.len(),
            out.display()
        );
        Ok(if ok > 0 { EXIT_OK } else { EXIT_NUMERIC })
    };
    run().unwrap_or_else(|e| report_error(&e))
}

/// Writes `sites.csv`, `relations.csv` and `planted_labels.csv` into `dir`.
pub fn write_synth_fixture(spec: &SynthSpec, dir: &Path) -> Result<(Dataset, Vec<usize>)> {
    let (ds, planted) = generate(spec)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut sites = Vec::new();
    write_sites(&mut sites, &ds.sites).expect("in-memory write");
    let mut relations = Vec::new();
    write_relations(&mut relations, &relations_from_dataset(&ds)).expect("in-memory write");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["site_id", "label"])
        .expect("in-memory write");
    for (site, l) in ds.sites.iter().zip(&planted) {
        w.write_record([site.site_id.to_string(), l.to_string()])
            .expect("in-memory write");
    }
    let labels = w.into_inner().expect("in-memory write");

    write_atomic(&dir.join("sites.csv"), &sites)?;
    write_atomic(&dir.join("relations.csv"), &relations)?;
    write_atomic(&dir.join("planted_labels.csv"), &labels)?;
    Ok((ds, planted))
}

pub fn cmd_synth(spec: &SynthSpec, dir: &Path) -> i32 {
    match write_synth_fixture(spec, dir) {
        Ok((ds, _)) => {
            println!("wrote {} sites to {}", ds.len(), dir.display());
            EXIT_OK
        }
        Err(e) => report_error(&e),
    }
}

/// Dispatches a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Plan(a) => match a.run_config() {
            Ok(cfg) => cmd_plan(&cfg),
            Err(e) => report_error(&e),
        },
        Command::Sweep(a) => match a.run_config() {
            Ok(cfg) => cmd_sweep(&cfg),
            Err(e) => report_error(&e),
        },
        Command::Synth(a) => cmd_synth(&a.spec(), &a.out_dir),
    }
}

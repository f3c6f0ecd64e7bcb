use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{parse_grid, RunConfig};
use crate::error::Result;
use crate::model::{KernelParams, LatLon};
use crate::stsc::StscConfig;
use crate::synth::{ring_centers, SynthSpec};

#[derive(Debug, Parser)]
#[command(
    name = "tacluster",
    version,
    about = "Tracking-area planning with self-tuning spectral clustering"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster the sites into tracking areas and score the plan.
    Plan(PlanArgs),
    /// Plan over a grid of (alpha, beta) values and tabulate the results.
    Sweep(SweepArgs),
    /// Write a synthetic dataset with planted tracking areas.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StscArgs {
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long = "cmin", default_value_t = 2)]
    pub c_min: usize,
    /// Clamped to the number of sites.
    #[arg(long = "cmax", default_value_t = 12)]
    pub c_max: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub step_init: f64,
    #[arg(long, default_value_t = 30)]
    pub step_halvings: u32,
    #[arg(long, default_value_t = 1e-4)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub quality_tie_tol: f64,
    /// Optimize every cluster count from zero angles instead of warm-starting
    /// from the previous count.
    #[arg(long)]
    pub independent: bool,
}

impl StscArgs {
    fn config(&self) -> StscConfig {
        StscConfig {
            c_min: self.c_min,
            c_max: self.c_max,
            max_iters: self.max_iters,
            step_init: self.step_init,
            step_halvings: self.step_halvings,
            rel_tol: self.rel_tol,
            quality_tie_tol: self.quality_tie_tol,
            warm_start: !self.independent,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub sites: PathBuf,
    #[arg(long)]
    pub relations: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[command(flatten)]
    pub stsc: StscArgs,
    #[arg(long, default_value = "ta_labels.csv")]
    pub out_labels: PathBuf,
    #[arg(long, default_value = "ta_report.json")]
    pub out_report: PathBuf,
    #[arg(long)]
    pub out_geojson: Option<PathBuf>,
}

impl PlanArgs {
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(&self.sites, &self.relations);
        cfg.kernel = KernelParams::new(self.alpha, self.beta, self.stsc.gamma)?;
        cfg.stsc = self.stsc.config();
        cfg.out_labels = Some(self.out_labels.clone());
        cfg.out_report = Some(self.out_report.clone());
        cfg.out_geojson = self.out_geojson.clone();
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub sites: PathBuf,
    #[arg(long)]
    pub relations: PathBuf,
    /// `start:stop:step`, stop included within half a step.
    #[arg(long, default_value = "0:1:0.1")]
    pub alpha_grid: String,
    #[arg(long, default_value = "0:1:0.1")]
    pub beta_grid: String,
    #[command(flatten)]
    pub stsc: StscArgs,
    #[arg(long, default_value = "sweep.csv")]
    pub out_sweep: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

impl SweepArgs {
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(&self.sites, &self.relations);
        cfg.kernel = KernelParams::new(0.5, 0.5, self.stsc.gamma)?;
        cfg.stsc = self.stsc.config();
        cfg.alpha_grid = parse_grid(&self.alpha_grid)?;
        cfg.beta_grid = parse_grid(&self.beta_grid)?;
        cfg.out_sweep = Some(self.out_sweep.clone());
        cfg.jobs = self.jobs;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Number of sites.
    #[arg(long = "m", alias = "num-sites", default_value_t = 120)]
    pub m: usize,
    /// Number of planted tracking areas.
    #[arg(long = "k", alias = "num-clusters", default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500.0)]
    pub intra: f64,
    #[arg(long, default_value_t = 5.0)]
    pub inter: f64,
    #[arg(long, default_value_t = 0.6)]
    pub spread_km: f64,
    /// Radius of the ring the cluster centers sit on.
    #[arg(long, default_value_t = 4.0)]
    pub ring_km: f64,
    #[arg(long, default_value_t = 45.0)]
    pub center_lat: f64,
    #[arg(long, default_value_t = 5.0)]
    pub center_lon: f64,
    #[arg(long, default_value_t = 12.0)]
    pub mr_per_attempt: f64,
    #[arg(long, default_value_t = 20.0)]
    pub mr_noise: f64,
    #[arg(long, default_value_t = 20_000.0)]
    pub paging_mean: f64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

impl SynthArgs {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            m: self.m,
            k: self.k,
            cluster_centers: ring_centers(
                LatLon::new(self.center_lat, self.center_lon),
                self.ring_km,
                self.k,
            ),
            spread_km: self.spread_km,
            intra_attempts_mean: self.intra,
            inter_attempts_mean: self.inter,
            mr_per_attempt: self.mr_per_attempt,
            mr_noise_mean: self.mr_noise,
            paging_mean: self.paging_mean,
            seed: self.seed,
        }
    }
}

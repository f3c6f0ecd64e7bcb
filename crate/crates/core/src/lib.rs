//! Tracking-area planning for cellular networks.
//!
//! Neighbor-relation statistics (inter-site distance, handover attempts and
//! measurement reports) are combined into an RBF similarity between sites.
//! Self-tuning spectral clustering then groups the sites into tracking areas
//! and picks the number of areas itself, and each plan is scored by its
//! tracking-area-update and paging load.
//!
//! The modules follow the pipeline:
//!
//! * [`ingest`]: CSV parsing and dense dataset assembly
//! * [`kernel`]: composite similarity matrix
//! * [`stsc`]: spectral embedding, Givens-rotation alignment, model selection
//! * [`eval`]: quality, silhouette, TAU and paging costs, ARI
//! * [`synth`]: seeded synthetic datasets with planted areas
//! * [`cli`]: the `plan`, `sweep` and `synth` commands

pub mod cli;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod kernel;
pub mod model;
pub mod stsc;
pub mod synth;

pub use error::{Error, Result};
pub use model::{Dataset, KernelParams, TAPlan};

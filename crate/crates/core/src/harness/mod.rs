//! Configuration-driven experiments: simulation studies, real-data runs,
//! ingestion and CSV/SVG reporting.

pub mod config;
pub mod experiment;
pub mod ingest;
pub mod real_data;
pub mod report;
mod svg;

pub use config::{ExperimentConfig, RealDataConfig};
pub use experiment::{run_experiment, CellReport, ExperimentReport};
pub use ingest::{ingest_csv, Transform};
pub use real_data::{run_real_data, RealDataReport};
pub use report::{render_real_data, render_report, Format};

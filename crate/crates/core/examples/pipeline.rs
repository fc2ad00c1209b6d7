//! Runs every stage on the toylib fixture and prints the report.
//!
//! cargo run --example pipeline -- [workdir]

use oraclefuzz::pipeline::{Pipeline, PipelineConfig, RunOptions};
use oraclefuzz::report::{render_report, ReportFormat};

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let scratch = tempfile::tempdir()?;
    let workdir = std::env::args()
        .nth(1)
        .map_or_else(|| scratch.path().to_path_buf(), Into::into);
    let config_path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toylib/oraclefuzz.yaml");
    let config = PipelineConfig::load_with_workdir(config_path.as_ref(), Some(&workdir))?;
    let (report, stats) = Pipeline::new(config, RunOptions::default()).run()?;
    eprintln!(
        "{} targets run, {} resumed",
        stats.targets_processed, stats.targets_resumed
    );
    print!("{}", render_report(&report, ReportFormat::Markdown));
    Ok(())
}

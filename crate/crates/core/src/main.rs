use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use oraclefuzz::pipeline::{Pipeline, PipelineConfig, PipelineError, RunOptions};
use oraclefuzz::report::{render_report, ReportFormat};
use oraclefuzz::synthesis::BackendKind;

#[derive(Parser)]
#[command(
    name = "oraclefuzz",
    version,
    about = "Vulnerability-oriented fuzz driver generation for C libraries"
)]
struct Cli {
    /// Pipeline configuration (YAML or JSON).
    #[arg(long, global = true, default_value = "oraclefuzz.yaml")]
    config: PathBuf,
    /// Overrides the configured work directory.
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Worker threads for per-target stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overwrite outputs of earlier runs.
    #[arg(long, global = true)]
    force: bool,
    /// Answer prompts from recorded replies in this directory.
    #[arg(long, global = true)]
    replay: Option<PathBuf>,
    /// Write fixed timestamps into the report.
    #[arg(long, global = true)]
    normalize_timestamps: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Markdown,
}

#[derive(Subcommand)]
enum Cmd {
    /// Extract function records into inventory.json.
    Inventory,
    /// Score the inventory and write the top targets to targets.json.
    Rank,
    /// Generate a first harness for every target.
    Synth,
    /// Admit harnesses through compile, smoke and coverage checks.
    Gate,
    /// Fuzz admitted harnesses and confirm predictions.
    Fuzz,
    /// All stages, resuming finished targets.
    Run,
    /// Assemble the report from persisted outcomes.
    Report {
        #[arg(long, value_enum, default_value = "markdown")]
        format: Format,
    },
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    let mut config = PipelineConfig::load_with_workdir(&cli.config, cli.workdir.as_deref())?;
    if let Some(dir) = &cli.replay {
        let dir = std::path::absolute(dir).map_err(|e| PipelineError::Config(format!("{}: {e}", dir.display())))?;
        config.synthesis.backend.kind = BackendKind::Replay;
        config.synthesis.backend.replay_dir = Some(dir);
    }
    let mut options = RunOptions {
        force: cli.force,
        normalize_timestamps: cli.normalize_timestamps,
        ..RunOptions::default()
    };
    if let Some(jobs) = cli.jobs {
        options.jobs = jobs;
    }
    let pipeline = Pipeline::new(config, options);
    let failures = |results: &[Result<_, PipelineError>]| {
        for e in results.iter().filter_map(|r| r.as_ref().err()) {
            eprintln!("warning: {e}");
        }
    };
    match cli.command {
        Cmd::Inventory => {
            let records = pipeline.inventory()?;
            println!("{} functions", records.len());
        }
        Cmd::Rank => {
            for t in pipeline.rank()? {
                println!("{:>3}  {:.3}  {}", t.rank, t.verdict.score, t.record.name);
            }
        }
        Cmd::Synth => failures(&pipeline.synth()?),
        Cmd::Gate => {
            let sessions = pipeline.gate()?;
            failures(&sessions);
            for s in sessions.iter().flatten() {
                println!("{}: {:?}", s.target.record.name, s.status);
            }
        }
        Cmd::Fuzz => {
            for t in pipeline.fuzz()? {
                println!("{}: {:?}", t.target.record.name, t.confirmation.outcome);
            }
        }
        Cmd::Run => {
            let (report, stats) = pipeline.run()?;
            println!(
                "{} targets ({} resumed); {} confirmed with a matching CWE, {} with another crash, {} unconfirmed",
                report.targets.len(),
                stats.targets_resumed,
                report.metrics.confirmed_matching,
                report.metrics.confirmed_other,
                report.metrics.unconfirmed
            );
            println!(
                "report: {}",
                pipeline.workdir().join(oraclefuzz::pipeline::REPORT_JSON).display()
            );
        }
        Cmd::Report { format } => {
            let report = pipeline.report()?;
            let format = match format {
                Format::Json => ReportFormat::Json,
                Format::Markdown => ReportFormat::Markdown,
            };
            print!("{}", render_report(&report, format));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Gates a harness for a toylib function: compile, smoke run, coverage.
//!
//! cargo run --example gate -- parse_header [harness.c]
//! Without a harness file the template driver is gated.

use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{ensure, Context};
use oraclefuzz::gate::{gate, BuildConfig, GateConfig};
use oraclefuzz::inventory::{extract_functions, SourceUnit};
use oraclefuzz::synthesis::{detect_language, template_driver, DriverCandidate, DriverOptions, Provenance};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

fn build_toylib(out: &Path) -> anyhow::Result<BuildConfig> {
    let status = Command::new(format!("{FIXTURES}/toylib/build.sh")).arg(out).status()?;
    ensure!(status.success(), "toylib build failed");
    Ok(BuildConfig {
        library_build_dir: out.to_path_buf(),
        libraries: vec![PathBuf::from("libtoylib.a")],
        include_dirs: vec![PathBuf::from(format!("{FIXTURES}/toylib/src"))],
        ..BuildConfig::default()
    })
}

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "parse_header".into());
    let record = extract_functions(&SourceUnit::read(format!("{FIXTURES}/toylib/src/toylib.c").as_ref())?)?
        .into_iter()
        .find(|r| r.name == name)
        .with_context(|| format!("no function {name}"))?;
    let candidate = match args.next() {
        Some(path) => {
            let source_text = std::fs::read_to_string(&path)?;
            DriverCandidate {
                language: detect_language(&source_text, None),
                source_text,
                provenance: Provenance::Llm,
                attempt: 1,
                target_function: name.clone(),
            }
        }
        None => template_driver(
            &record,
            &DriverOptions {
                headers: vec!["toylib.h".into()],
                ..DriverOptions::default()
            },
        )?,
    };
    let work = tempfile::tempdir()?;
    let config = GateConfig {
        build: build_toylib(&work.path().join("lib"))?,
        ..GateConfig::default()
    };
    let report = gate(&candidate, &config, &record, &work.path().join("gate"))?;
    println!("compiled:  {}", report.compiled);
    println!("smoke run: {:?}", report.smoke_run);
    println!(
        "coverage:  {:.3} (threshold {})",
        report.coverage_fraction, report.coverage_threshold
    );
    println!("verdict:   {:?} {:?}", report.verdict, report.rejected_stage);
    if !report.compiled {
        println!("\n{}", report.compile_diagnostics);
    }
    Ok(())
}

//! Fuzzes the template harness of a toylib function and confirms the
//! oracle's prediction against the crashes found.
//!
//! cargo run --example campaign -- decode_record 20

use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{ensure, Context};
use oraclefuzz::campaign::{confirm_verdict, run_campaign, CampaignConfig, CampaignRequest};
use oraclefuzz::gate::{gate, BuildConfig, GateConfig};
use oraclefuzz::inventory::{extract_functions, SourceUnit};
use oraclefuzz::oracle::{rank_targets, OracleConfig};
use oraclefuzz::synthesis::{template_driver, DriverOptions};

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
    let name = args.next().unwrap_or_else(|| "decode_record".into());
    let budget = args.next().map(|b| b.parse()).transpose()?.unwrap_or(20);
    let records = extract_functions(&SourceUnit::read(format!("{FIXTURES}/toylib/src/toylib.c").as_ref())?)?;
    let ranked = rank_targets(
        &records,
        &OracleConfig {
            top_k: records.len(),
            ..OracleConfig::default()
        },
    )?;
    let target = ranked
        .into_iter()
        .find(|t| t.record.name == name)
        .with_context(|| format!("no function {name}"))?;

    let work = tempfile::tempdir()?;
    let config = GateConfig {
        build: build_toylib(&work.path().join("lib"))?,
        ..GateConfig::default()
    };
    let options = DriverOptions {
        headers: vec!["toylib.h".into()],
        ..DriverOptions::default()
    };
    let candidate = template_driver(&target.record, &options)?;
    let report = gate(&candidate, &config, &target.record, &work.path().join("gate"))?;
    let binary = report
        .binary
        .clone()
        .filter(|_| report.accepted())
        .context("harness rejected")?;

    let req = CampaignRequest {
        harness: &binary,
        target: &target.record,
        predicted_cwes: &target.verdict.predicted_cwes,
        target_dir: work.path(),
        build: &config.build,
    };
    let campaign = CampaignConfig {
        time_budget_seconds: budget,
        ..CampaignConfig::default()
    };
    let result = run_campaign(&req, &campaign)?;
    println!(
        "{:?} after {:.1} s, {} executions, coverage {:.2}",
        result.status, result.duration_seconds, result.executions, result.final_coverage_fraction
    );
    for c in &result.crashes {
        println!(
            "  {:?} {} ({} byte input)",
            c.crash_kind,
            c.classified_cwe.map_or("-".into(), |c| c.to_string()),
            c.input_bytes.len()
        );
    }
    let confirmation = confirm_verdict(&target.verdict, &result);
    println!(
        "predicted {:?}: {:?}",
        target.verdict.predicted_cwes, confirmation.outcome
    );
    Ok(())
}

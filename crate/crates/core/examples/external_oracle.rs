//! Ranks toylib with scores from an external model process; here the echo
//! oracle, which favours one function.
//!
//! cargo run --example external_oracle -- clamp_level

use oraclefuzz::inventory::{extract_functions, SourceUnit};
use oraclefuzz::oracle::{OracleConfig, TargetOracle, Weights};

fn main() -> anyhow::Result<()> {
    let favourite = std::env::args().nth(1).unwrap_or_else(|| "clamp_level".into());
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let records = extract_functions(&SourceUnit::read(format!("{fixtures}/toylib/src/toylib.c").as_ref())?)?;
    let config = OracleConfig {
        weights: Weights::new(0.0, 0.0, 1.0),
        top_k: records.len(),
        external_oracle_command: Some(format!("python3 {fixtures}/oracles/echo_oracle.py {favourite}")),
        ..OracleConfig::default()
    };
    for t in TargetOracle::new(config)?.rank(&records)? {
        let cwes: Vec<String> = t.verdict.predicted_cwes.iter().map(|c| c.to_string()).collect();
        println!(
            "{}. {:<14} {:.2} {:?} {}",
            t.rank,
            t.record.name,
            t.verdict.score,
            t.verdict.source,
            cwes.join(", ")
        );
    }
    Ok(())
}

//! Prints the deterministic harness for a toylib function.
//!
//! cargo run --example template_driver -- parse_header

use anyhow::Context;
use oraclefuzz::inventory::{extract_functions, SourceUnit};
use oraclefuzz::synthesis::{template_driver, DriverOptions};

fn main() -> anyhow::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "parse_header".into());
    let source = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toylib/src/toylib.c");
    let record = extract_functions(&SourceUnit::read(source.as_ref())?)?
        .into_iter()
        .find(|r| r.name == name)
        .with_context(|| format!("no function {name}"))?;
    let options = DriverOptions {
        headers: vec!["toylib.h".into()],
        ..DriverOptions::default()
    };
    print!("{}", template_driver(&record, &options)?.source_text);
    Ok(())
}

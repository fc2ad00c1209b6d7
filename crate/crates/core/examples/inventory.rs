//! Lists the function definitions of a C file.
//!
//! cargo run --example inventory -- fixtures/toylib/src/toylib.c

use oraclefuzz::inventory::{extract_functions, SourceUnit};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toylib/src/toylib.c").into());
    let records = extract_functions(&SourceUnit::read(path.as_ref())?)?;
    println!(
        "{:<16} {:>9} {:>4} {:>6}  signature",
        "function", "lines", "cc", "calls"
    );
    for r in &records {
        let lines = format!("{}-{}", r.line_span.0, r.line_span.1);
        println!(
            "{:<16} {:>9} {:>4} {:>6}  {}",
            r.name,
            lines,
            r.cyclomatic_complexity,
            r.call_count,
            r.signature()
        );
    }
    Ok(())
}

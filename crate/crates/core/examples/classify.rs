//! Classifies a sanitizer log read from a file or stdin.
//!
//! ./asan_binary 2> log.txt; cargo run --example classify -- log.txt

use std::io::Read;

use oraclefuzz::campaign::{classify_crash, dedupe_key, extract_report};

fn main() -> anyhow::Result<()> {
    let mut log = String::new();
    match std::env::args().nth(1) {
        Some(path) => log = std::fs::read_to_string(path)?,
        None => {
            std::io::stdin().read_to_string(&mut log)?;
        }
    }
    let report = extract_report(&log);
    let (kind, cwe) = classify_crash(&report);
    println!("kind:       {kind:?}");
    println!(
        "cwe:        {}",
        cwe.map_or("-".into(), |c| format!("{c} ({})", c.name().unwrap_or("?")))
    );
    println!("dedupe key: {}", dedupe_key(&report));
    Ok(())
}

//! Ranks the functions of a C file under the given heuristic weights.
//!
//! cargo run --example rank -- fixtures/toylib/src/toylib.c 0.2 0.2 0.6

use oraclefuzz::inventory::{extract_functions, SourceUnit};
use oraclefuzz::oracle::{rank_targets, OracleConfig, Weights};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/toylib/src/toylib.c").into());
    let w: Vec<f64> = args.map(|a| a.parse()).collect::<Result<_, _>>()?;
    let weights = match w.as_slice() {
        [] => Weights::default(),
        [a, b, c] => Weights::new(*a, *b, *c),
        _ => anyhow::bail!("expected three weights"),
    };
    let records = extract_functions(&SourceUnit::read(path.as_ref())?)?;
    let config = OracleConfig {
        weights,
        top_k: records.len().max(1),
        ..OracleConfig::default()
    };
    for t in rank_targets(&records, &config)? {
        let v = &t.verdict;
        let cwes: Vec<String> = v.predicted_cwes.iter().map(|c| c.to_string()).collect();
        println!(
            "{:>2}. {:<16} score {:.3}  h1 {:<5} h2 {:<5} h3 {:.3}  {}",
            t.rank,
            t.record.name,
            v.score,
            v.heuristic1,
            v.heuristic2,
            v.heuristic3_score,
            cwes.join(", ")
        );
    }
    Ok(())
}

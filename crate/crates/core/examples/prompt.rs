//! Renders the default prompt for a signature document.
//!
//! cargo run --example prompt -- fixtures/signatures/gdImageWebpPtr.yaml

use std::collections::BTreeMap;

use oraclefuzz::inventory::load_signature_spec_file;
use oraclefuzz::oracle::{OracleConfig, TargetOracle};
use oraclefuzz::synthesis::{build_prompt, PromptTemplate};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/signatures/gdImageWebpPtr.yaml").into());
    let spec = load_signature_spec_file(path.as_ref())?;
    let hints = BTreeMap::from([(spec.function_name.clone(), spec.cwe_hints.clone())]);
    let oracle = TargetOracle::new(OracleConfig::default())?.with_hints(hints);
    let target = oracle.rank(&[spec.to_record()])?.remove(0);
    let prompt = build_prompt(&target, &PromptTemplate::default(), "")?;
    print!("{}", prompt.rendered_text);
    Ok(())
}

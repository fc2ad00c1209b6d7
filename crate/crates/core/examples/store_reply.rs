//! Stores a hand-written or recorded completion as a replay fixture for the
//! first prompt a pipeline run would send for one function.
//!
//! cargo run --example store_reply -- <config> <function> <reply-file> <replay-dir>

use anyhow::{bail, Context};
use oraclefuzz::pipeline::{Pipeline, PipelineConfig, RunOptions};
use oraclefuzz::synthesis::{build_prompt, PromptTemplate, ReplayBackend};

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [config, function, reply, replay_dir] = args.as_slice() else {
        bail!("usage: store_reply <config> <function> <reply-file> <replay-dir>");
    };
    let scratch = tempfile::tempdir()?;
    let mut config = PipelineConfig::load_with_workdir(config.as_ref(), Some(scratch.path()))?;
    config.oracle.top_k = usize::MAX;
    let template = match &config.synthesis.template_path {
        Some(path) => PromptTemplate::load(path)?,
        None => PromptTemplate::default(),
    };
    let pipeline = Pipeline::new(config, RunOptions::default());
    pipeline.inventory()?;
    let target = pipeline
        .rank()?
        .into_iter()
        .find(|t| t.record.name == *function)
        .with_context(|| format!("{function} is not in the inventory"))?;
    let prompt = build_prompt(&target, &template, "")?;
    let text = std::fs::read_to_string(reply).with_context(|| reply.clone())?;
    std::fs::create_dir_all(replay_dir)?;
    let path = ReplayBackend::reply_path(replay_dir.as_ref(), &prompt.rendered_text);
    std::fs::write(&path, text)?;
    println!("{}", path.display());
    Ok(())
}

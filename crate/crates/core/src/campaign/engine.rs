use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use regex::Regex;

use super::{
    dedupe_crashes, extract_report, CampaignConfig, CampaignError, CampaignResult, CampaignStatus, CrashRecord,
    UNLIMITED_MAX_LEN,
};
use crate::cwe::Cwe;
use crate::gate::{is_sanitizer_report, measure_coverage_dir, BuildConfig, GateError};
use crate::inventory::FunctionRecord;
use crate::process::run_with_timeout;
use crate::toolchain::sanitizer_env;

pub const CRASH_INDEX: &str = "index.json";

/// Everything one campaign needs besides its configuration.
pub struct CampaignRequest<'a> {
    pub harness: &'a Path,
    pub target: &'a FunctionRecord,
    pub predicted_cwes: &'a [Cwe],
    /// `<workdir>/<target>`; the campaign owns `campaign/` and `crashes/`
    /// beneath it.
    pub target_dir: &'a Path,
    /// Sanitizer runtime settings for the harness.
    pub build: &'a BuildConfig,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CampaignError + '_ {
    move |e| CampaignError::Io(path.to_path_buf(), e)
}

fn executions_in(log: &str) -> u64 {
    static STAT: OnceLock<Regex> = OnceLock::new();
    static PULSE: OnceLock<Regex> = OnceLock::new();
    let stat = STAT.get_or_init(|| Regex::new(r"stat::number_of_executed_units:\s*(\d+)").unwrap());
    let pulse = PULSE.get_or_init(|| Regex::new(r"(?m)^#(\d+)\s").unwrap());
    stat.captures_iter(log)
        .chain(pulse.captures_iter(log))
        .filter_map(|c| c[1].parse::<u64>().ok())
        .max()
        .unwrap_or(0)
}

fn artifact_files(dir: &Path) -> BTreeSet<PathBuf> {
    std::fs::read_dir(dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name().and_then(|n| n.to_str()).is_some_and(|n| {
                        ["crash-", "leak-", "oom-", "timeout-"]
                            .iter()
                            .any(|pre| n.starts_with(pre))
                    })
                })
                .collect()
        })
        .unwrap_or_default()
}

fn fresh_dir(path: &Path) -> Result<(), CampaignError> {
    if path.exists() {
        std::fs::remove_dir_all(path).map_err(io(path))?;
    }
    std::fs::create_dir_all(path).map_err(io(path))
}

/// Fuzzes until the budget is spent or `max_crashes` crashes were seen,
/// restarting the engine after every crash.
///
/// Engine failures are reported through the result's status; only
/// configuration and filesystem problems are errors.
pub fn run_campaign(req: &CampaignRequest<'_>, config: &CampaignConfig) -> Result<CampaignResult, CampaignError> {
    config.validate()?;
    let start = Instant::now();
    let budget = Duration::from_secs(config.time_budget_seconds);
    let grace = Duration::from_secs(config.grace_seconds);
    let deadline = start + budget;

    let campaign_dir = req.target_dir.join("campaign");
    let corpus_dir = campaign_dir.join("corpus");
    let artifact_dir = campaign_dir.join("artifacts");
    let crash_dir = req.target_dir.join("crashes");
    fresh_dir(&campaign_dir)?;
    fresh_dir(&crash_dir)?;
    std::fs::create_dir_all(&corpus_dir).map_err(io(&corpus_dir))?;
    std::fs::create_dir_all(&artifact_dir).map_err(io(&artifact_dir))?;

    let max_len = config.effective_max_len(req.predicted_cwes);
    let rendered_max_len = if max_len == 0 { UNLIMITED_MAX_LEN } else { max_len };
    let env = sanitizer_env(&req.build.sanitizers, req.build.symbolizer_path().as_deref());
    let harness = std::fs::canonicalize(req.harness).unwrap_or_else(|_| req.harness.to_path_buf());
    let path_arg = |p: &Path| p.to_string_lossy().into_owned();

    let mut raw_crashes = Vec::new();
    let mut executions = 0u64;
    let mut engine_runs = 0u32;
    let mut engine_error = None;
    let mut seen_artifacts = BTreeSet::new();

    loop {
        let remaining = deadline.saturating_duration_since(Instant::now());
        // Restarts need a second of budget; the first run always goes.
        let too_short = remaining.is_zero() || (engine_runs > 0 && remaining < Duration::from_secs(1));
        if too_short || raw_crashes.len() >= config.max_crashes {
            break;
        }
        let vars: BTreeMap<&str, Vec<String>> = BTreeMap::from([
            ("binary", vec![path_arg(&harness)]),
            ("corpus_dir", vec![path_arg(&corpus_dir)]),
            ("artifact_dir", vec![path_arg(&artifact_dir)]),
            ("seed_dir", config.seed_corpus_dir.iter().map(|d| path_arg(d)).collect()),
            (
                "max_time",
                vec![(remaining.as_secs_f64().ceil() as u64).max(1).to_string()],
            ),
            ("rss_limit", vec![config.memory_limit_mb.to_string()]),
            ("max_len", vec![rendered_max_len.to_string()]),
        ]);
        let argv = config
            .engine_command
            .render(&vars)
            .map_err(|e| CampaignError::InvalidConfig(e.to_string()))?;
        engine_runs += 1;
        debug!("{}: engine run {engine_runs}: {argv:?}", req.target.name);
        let mut cmd = Command::new(&argv[0]);
        cmd.args(&argv[1..])
            .current_dir(&campaign_dir)
            .envs(env.iter().cloned());
        let out = match run_with_timeout(&mut cmd, remaining + grace / 3, None) {
            Ok(out) => out,
            Err(e) => {
                engine_error = Some(format!("cannot start engine `{}`: {e}", argv[0]));
                break;
            }
        };
        let log = out.stderr_text();
        executions += executions_in(&log);

        let new: Vec<PathBuf> = artifact_files(&artifact_dir)
            .into_iter()
            .filter(|p| seen_artifacts.insert(p.clone()))
            .collect();
        if new.is_empty() {
            if out.timed_out || out.success() {
                break;
            }
            engine_error = Some(format!(
                "engine exited with {:?} without a crash artifact: {}",
                out.status,
                log.lines().rev().take(5).collect::<Vec<_>>().join(" / ")
            ));
            break;
        }
        let report = extract_report(&log);
        for artifact in new {
            let input = std::fs::read(&artifact).map_err(io(&artifact))?;
            let mut record = CrashRecord::from_report(input, report.clone());
            let name = artifact.file_name().map(PathBuf::from).unwrap_or_default();
            let stored = crash_dir.join(&name);
            std::fs::copy(&artifact, &stored).map_err(io(&stored))?;
            record.artifact = Some(PathBuf::from("crashes").join(name));
            info!("{}: {:?} ({})", req.target.name, record.crash_kind, record.dedupe_key);
            raw_crashes.push(record);
        }
        if out.timed_out {
            break;
        }
    }

    let raw_crash_count = raw_crashes.len();
    let crashes = dedupe_crashes(raw_crashes);
    for (i, c) in crashes.iter().enumerate() {
        let path = crash_dir.join(format!("report-{i}.txt"));
        std::fs::write(&path, &c.sanitizer_report).map_err(io(&path))?;
    }
    let index = crash_dir.join(CRASH_INDEX);
    let json = serde_json::to_string_pretty(&crashes).expect("crash records serialize");
    std::fs::write(&index, json).map_err(io(&index))?;

    // The kill margin, this measurement and bookkeeping share the grace period.
    let coverage_timeout = (grace / 3).max(Duration::from_millis(500));
    let final_coverage_fraction = match measure_coverage_dir(
        &harness,
        &corpus_dir,
        req.target,
        req.build,
        &campaign_dir,
        coverage_timeout,
    ) {
        Ok(f) => f,
        Err(GateError::CoverageUnavailable(why)) => {
            warn!("{}: final coverage unavailable: {why}", req.target.name);
            0.0
        }
        Err(e) => {
            warn!("{}: final coverage failed: {e}", req.target.name);
            0.0
        }
    };

    let status = if !crashes.is_empty() {
        CampaignStatus::CrashFound
    } else if engine_error.is_some() {
        CampaignStatus::EngineError
    } else {
        CampaignStatus::BudgetExhaustedNoCrash
    };
    Ok(CampaignResult {
        target_function: req.target.name.clone(),
        crashes,
        final_coverage_fraction,
        executions,
        status,
        raw_crash_count,
        engine_runs,
        duration_seconds: start.elapsed().as_secs_f64(),
        max_input_len: max_len,
        engine_error,
    })
}

/// Reads the crash index written by [`run_campaign`].
pub fn load_crash_index(target_dir: &Path) -> Result<Vec<CrashRecord>, CampaignError> {
    let path = target_dir.join("crashes").join(CRASH_INDEX);
    let text = std::fs::read_to_string(&path).map_err(io(&path))?;
    serde_json::from_str(&text)
        .map_err(|e| CampaignError::Io(path.clone(), std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
}

/// Runs `harness` once on `input`; `Some` when a sanitizer report appears.
pub fn replay_crash(
    harness: &Path,
    input: &[u8],
    build: &BuildConfig,
    work_dir: &Path,
) -> Result<Option<CrashRecord>, CampaignError> {
    let dir = work_dir.join("replay");
    std::fs::create_dir_all(&dir).map_err(io(&dir))?;
    let file = dir.join("input");
    std::fs::write(&file, input).map_err(io(&file))?;
    let mut cmd = Command::new(harness);
    cmd.arg(&file)
        .current_dir(&dir)
        .envs(sanitizer_env(&build.sanitizers, build.symbolizer_path().as_deref()));
    let out =
        run_with_timeout(&mut cmd, Duration::from_secs(build.timeout_seconds.max(1) * 3), None).map_err(io(harness))?;
    let log = out.stderr_text();
    Ok(is_sanitizer_report(&log).then(|| CrashRecord::from_report(input.to_vec(), extract_report(&log))))
}

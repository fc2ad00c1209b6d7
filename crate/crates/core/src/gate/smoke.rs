use std::path::Path;
use std::process::Command;
use std::time::Duration;

use super::{write_seeds, BuildConfig, GateError, SmokeOutcome};
use crate::process::run_with_timeout;
use crate::toolchain::sanitizer_env;

const SANITIZER_MARKERS: &[&str] = &[
    "ERROR: AddressSanitizer",
    "ERROR: LeakSanitizer",
    "ERROR: libFuzzer",
    "runtime error:",
    "==ERROR:",
];

pub fn is_sanitizer_report(stderr: &str) -> bool {
    SANITIZER_MARKERS.iter().any(|m| stderr.contains(m))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmokeReport {
    pub outcome: SmokeOutcome,
    /// Output of the first failing run, trimmed to the sanitizer report when
    /// there is one.
    pub detail: String,
}

fn excerpt(stderr: &str) -> String {
    let lines: Vec<&str> = stderr.lines().collect();
    let start = lines
        .iter()
        .position(|l| l.contains("==ERROR") || l.contains("runtime error:"))
        .unwrap_or(0);
    lines[start..].iter().take(60).copied().collect::<Vec<_>>().join("\n")
}

/// Runs the harness once per seed; the first failure decides the outcome.
pub fn smoke_run(
    binary: &Path,
    seeds: &[Vec<u8>],
    config: &BuildConfig,
    work_dir: &Path,
) -> Result<SmokeReport, GateError> {
    let smoke_dir = work_dir.join("smoke");
    let files = write_seeds(&smoke_dir, seeds)?;
    let env = sanitizer_env(&config.sanitizers, config.symbolizer_path().as_deref());
    for file in files {
        let mut cmd = Command::new(binary);
        cmd.arg(&file).current_dir(&smoke_dir).envs(env.iter().cloned());
        let out = run_with_timeout(&mut cmd, Duration::from_secs(config.timeout_seconds), None)
            .map_err(|e| GateError::Io(binary.to_path_buf(), e))?;
        let stderr = out.stderr_text();
        let seed = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let outcome = if out.timed_out {
            SmokeOutcome::Timeout
        } else if is_sanitizer_report(&stderr) || out.signal().is_some() {
            SmokeOutcome::CrashOnEmpty
        } else if !out.success() {
            SmokeOutcome::ImmediateExitFailure
        } else {
            continue;
        };
        return Ok(SmokeReport {
            outcome,
            detail: format!("{seed}: {}", excerpt(&stderr)),
        });
    }
    Ok(SmokeReport {
        outcome: SmokeOutcome::Pass,
        detail: String::new(),
    })
}

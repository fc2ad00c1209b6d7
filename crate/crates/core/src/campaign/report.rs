//! Sanitizer report extraction and stack-based deduplication.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;

use super::CrashRecord;

const START_MARKERS: &[&str] = &["==ERROR:", "ERROR: libFuzzer", "runtime error:", "ERROR: LeakSanitizer"];

/// The report portion of an engine log: from the first error line through
/// the `SUMMARY:` line. Falls back to the last 100 lines.
pub fn extract_report(log: &str) -> String {
    let lines: Vec<&str> = log.lines().collect();
    let start = lines.iter().position(|l| START_MARKERS.iter().any(|m| l.contains(m)));
    match start {
        Some(s) => {
            let end = lines[s..]
                .iter()
                .position(|l| l.starts_with("SUMMARY:"))
                .map_or(lines.len(), |e| s + e + 1);
            lines[s..end].join("\n")
        }
        None => lines[lines.len().saturating_sub(100)..].join("\n"),
    }
}

fn frame_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // `#3 0x55d0c in decode_record /src/toylib.c:58:5` or `#3 0x55d0c  (/bin/h+0x1234)`
    RE.get_or_init(|| Regex::new(r"^\s*#(\d+)\s+0x[0-9a-fA-F]+\s+(?:in\s+(\S+)|\(([^)]+)\))").unwrap())
}

fn hex_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"0x[0-9a-fA-F]+|\b\d+\b").unwrap())
}

fn normalize_frame(function: Option<&str>, module: Option<&str>) -> String {
    if let Some(f) = function {
        return f.trim_start_matches("__interceptor_").to_string();
    }
    let module = module.unwrap_or("?");
    let path = module.split('+').next().unwrap_or(module);
    path.rsplit('/').next().unwrap_or(path).to_string()
}

/// Top three frames of the first stack trace, by function name. Reports
/// without frames key on their error line with numbers blanked.
pub fn dedupe_key(report: &str) -> String {
    let mut frames = Vec::new();
    for line in report.lines() {
        if let Some(c) = frame_regex().captures(line) {
            let index: usize = c[1].parse().unwrap_or(usize::MAX);
            if index == 0 && !frames.is_empty() {
                break;
            }
            frames.push(normalize_frame(
                c.get(2).map(|m| m.as_str()),
                c.get(3).map(|m| m.as_str()),
            ));
            if frames.len() == 3 {
                break;
            }
        }
    }
    if !frames.is_empty() {
        return frames.join(" | ");
    }
    let headline = report
        .lines()
        .find(|l| START_MARKERS.iter().any(|m| l.contains(m)))
        .or_else(|| report.lines().find(|l| !l.trim().is_empty()))
        .unwrap_or("");
    hex_regex().replace_all(headline.trim(), "N").into_owned()
}

/// Keeps the first record per key, in discovery order.
pub fn dedupe_crashes(crashes: Vec<CrashRecord>) -> Vec<CrashRecord> {
    let mut seen = HashSet::new();
    crashes
        .into_iter()
        .filter(|c| seen.insert(c.dedupe_key.clone()))
        .collect()
}

//! Line coverage from libFuzzer's `-print_coverage=1 -print_full_coverage=1`
//! dump.
//!
//! The `FULL COVERAGE:` section has one `U <lines>` / `C <lines>` pair per
//! instrumented function; the `COVERAGE:` section that follows names those
//! functions in the same order.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Duration;

use log::warn;

use super::{BuildConfig, GateError};
use crate::inventory::FunctionRecord;
use crate::process::run_with_timeout;
use crate::toolchain::sanitizer_env;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionCoverage {
    pub name: String,
    pub file: String,
    pub covered: BTreeSet<u32>,
    pub uncovered: BTreeSet<u32>,
}

impl FunctionCoverage {
    /// Lines carrying at least one instrumented point.
    pub fn executable(&self) -> BTreeSet<u32> {
        self.covered.union(&self.uncovered).copied().collect()
    }
}

fn parse_lines(rest: &str) -> BTreeSet<u32> {
    rest.split_whitespace()
        .filter_map(|w| w.parse().ok())
        .filter(|&l| l > 0)
        .collect()
}

/// Parses the coverage sections of a libFuzzer log. `None` when the dump is
/// absent or inconsistent.
pub fn parse_coverage_dump(log: &str) -> Option<Vec<FunctionCoverage>> {
    let mut lines = log.lines();
    lines.by_ref().find(|l| l.trim() == "FULL COVERAGE:")?;

    let mut sets = Vec::new();
    let mut pending_uncovered: Option<BTreeSet<u32>> = None;
    let mut saw_coverage_header = false;
    for line in lines.by_ref() {
        if line.trim() == "COVERAGE:" {
            saw_coverage_header = true;
            break;
        }
        if line == "U" || line.starts_with("U ") {
            pending_uncovered = Some(parse_lines(&line[1..]));
        } else if line == "C" || line.starts_with("C ") {
            let uncovered = pending_uncovered.take()?;
            sets.push((parse_lines(&line[1..]), uncovered));
        }
    }
    if !saw_coverage_header {
        return None;
    }

    let mut functions = Vec::new();
    for line in lines {
        let rest = line
            .strip_prefix("COVERED_FUNC: ")
            .or_else(|| line.strip_prefix("UNCOVERED_FUNC: "));
        let Some(rest) = rest else { continue };
        // hits: N edges: a/b NAME FILE:LINE
        let after_edges = rest.split_once("edges: ")?.1;
        let (_, name_and_loc) = after_edges.split_once(' ')?;
        let (name, loc) = name_and_loc.rsplit_once(' ')?;
        let file = loc.rsplit_once(':').map_or(loc, |(f, _)| f);
        functions.push((name.to_string(), file.to_string()));
    }
    if functions.len() != sets.len() {
        return None;
    }
    Some(
        functions
            .into_iter()
            .zip(sets)
            .map(|((name, file), (covered, uncovered))| FunctionCoverage {
                name,
                file,
                covered,
                uncovered,
            })
            .collect(),
    )
}

fn same_function(entry: &FunctionCoverage, target: &FunctionRecord) -> bool {
    let bare = entry.name.split('(').next().unwrap_or(&entry.name).trim();
    if bare != target.name {
        return false;
    }
    match (Path::new(&entry.file).file_name(), target.source_path.file_name()) {
        (Some(a), Some(b)) => a == b,
        _ => true,
    }
}

/// Executed over executable lines of `target`'s span.
pub fn fraction_for(functions: &[FunctionCoverage], target: &FunctionRecord) -> f64 {
    let (lo, hi) = target.line_span;
    let in_span = |l: &u32| (lo..=hi).contains(l);
    let mut covered = BTreeSet::new();
    let mut executable = BTreeSet::new();
    for f in functions.iter().filter(|f| same_function(f, target)) {
        covered.extend(f.covered.iter().copied().filter(in_span));
        executable.extend(f.executable().into_iter().filter(in_span));
    }
    if executable.is_empty() {
        0.0
    } else {
        covered.len() as f64 / executable.len() as f64
    }
}

/// Runs `binary` over `seeds` once and returns the covered fraction of
/// `target`. No seeds means no execution, so zero coverage.
pub fn measure_coverage(
    binary: &Path,
    seeds: &[Vec<u8>],
    target: &FunctionRecord,
    config: &BuildConfig,
    work_dir: &Path,
) -> Result<f64, GateError> {
    if seeds.is_empty() {
        return Ok(0.0);
    }
    let seed_dir = work_dir.join("coverage-seeds");
    super::write_seeds(&seed_dir, seeds)?;
    let timeout = Duration::from_secs(config.timeout_seconds * (seeds.len() as u64 + 1));
    measure_coverage_dir(binary, &seed_dir, target, config, work_dir, timeout)
}

/// Coverage of `target` after running every input file in `input_dir`.
pub fn measure_coverage_dir(
    binary: &Path,
    input_dir: &Path,
    target: &FunctionRecord,
    config: &BuildConfig,
    work_dir: &Path,
    timeout: Duration,
) -> Result<f64, GateError> {
    let mut cmd = Command::new(binary);
    cmd.arg("-runs=0")
        .arg("-print_coverage=1")
        .arg("-print_full_coverage=1")
        .arg(input_dir)
        .current_dir(work_dir)
        .envs(sanitizer_env(&config.sanitizers, config.symbolizer_path().as_deref()));
    let out = run_with_timeout(&mut cmd, timeout, None).map_err(|e| GateError::Io(binary.to_path_buf(), e))?;
    let log = out.stderr_text();
    let functions = parse_coverage_dump(&log).ok_or_else(|| {
        GateError::CoverageUnavailable(format!(
            "{}: no coverage dump (exit {:?}, timed out: {})",
            binary.display(),
            out.status.and_then(|s| s.code()),
            out.timed_out
        ))
    })?;
    Ok(fraction_for(&functions, target))
}

/// [`measure_coverage`] with the unavailable case folded into zero.
pub fn measure_coverage_or_zero(
    binary: &Path,
    seeds: &[Vec<u8>],
    target: &FunctionRecord,
    config: &BuildConfig,
    work_dir: &Path,
) -> Result<f64, GateError> {
    match measure_coverage(binary, seeds, target, config, work_dir) {
        Err(GateError::CoverageUnavailable(why)) => {
            warn!("{}: {why}; counting coverage as 0", target.name);
            Ok(0.0)
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DUMP: &str = "\
#3\tDONE   cov: 4 ft: 4 corp: 2/4097b lim: 4096 exec/s: 0 rss: 30Mb
FULL COVERAGE:
==1==WARNING: something about the symbolizer
U
C 4
U 19 21 26 29 29 30 33 23 36 36
C 15 19 21
U 41 46
C
COVERAGE:
COVERED_FUNC: hits: 2 edges: 1/1 LLVMFuzzerTestOneInput /tmp/h.c:4
COVERED_FUNC: hits: 2 edges: 3/13 parse_header /src/toylib/toylib.c:15
  UNCOVERED_PC: /src/toylib/toylib.c:19
UNCOVERED_FUNC: hits: 0 edges: 0/6 decode_record /src/toylib/toylib.c:41
";

    fn target(name: &str, span: (u32, u32)) -> FunctionRecord {
        FunctionRecord {
            name: name.into(),
            return_type: "int".into(),
            params: vec![],
            source_path: "fixtures/toylib/src/toylib.c".into(),
            line_span: span,
            body: String::new(),
            cyclomatic_complexity: 1,
            call_count: 0,
            variadic: false,
            function_pointer_params: false,
        }
    }

    #[test]
    fn dump_is_zipped_by_order() {
        let f = parse_coverage_dump(DUMP).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(f[1].name, "parse_header");
        assert_eq!(f[1].file, "/src/toylib/toylib.c");
        assert_eq!(f[1].covered, BTreeSet::from([15, 19, 21]));
        assert_eq!(f[1].uncovered, BTreeSet::from([19, 21, 23, 26, 29, 30, 33, 36]));
        assert!(f[2].covered.is_empty());
    }

    #[test]
    fn fraction_counts_lines_within_span() {
        let f = parse_coverage_dump(DUMP).unwrap();
        // 15, 19, 21 of {15, 19, 21, 23, 26, 29, 30, 33, 36}
        assert_eq!(fraction_for(&f, &target("parse_header", (14, 37))), 3.0 / 9.0);
        assert_eq!(fraction_for(&f, &target("decode_record", (40, 60))), 0.0);
        assert_eq!(fraction_for(&f, &target("missing", (1, 100))), 0.0);
    }

    #[test]
    fn other_file_with_same_name_is_ignored() {
        let f = parse_coverage_dump(DUMP).unwrap();
        let mut t = target("parse_header", (14, 37));
        t.source_path = "other.c".into();
        assert_eq!(fraction_for(&f, &t), 0.0);
    }

    #[test]
    fn missing_or_truncated_dump() {
        assert!(parse_coverage_dump("INFO: nothing here\n").is_none());
        assert!(parse_coverage_dump("FULL COVERAGE:\nU 1\nC 1\n").is_none());
        let mismatched = "FULL COVERAGE:\nU 1\nC 2\nCOVERAGE:\n";
        assert!(parse_coverage_dump(mismatched).is_none());
    }
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::GateError;
use crate::inventory::Language;
use crate::process::run_with_timeout;
use crate::synthesis::DriverCandidate;
use crate::toolchain::{default_symbolizer, which, CommandTemplate, Sanitizer};

pub const DEFAULT_COMPILER_COMMAND: &str =
    "{cc} -g -gdwarf-4 -O1 -fno-omit-frame-pointer {sanitizer_flags} {coverage_flags} {includes} {source} {libs} -o {output}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    /// Variables: `{cc}`, `{source}`, `{output}`, `{includes}`, `{libs}`,
    /// `{sanitizer_flags}`, `{coverage_flags}`.
    pub compiler_command: CommandTemplate,
    pub c_compiler: String,
    pub cxx_compiler: String,
    pub sanitizers: Vec<Sanitizer>,
    pub coverage_instrumentation: bool,
    /// Directory holding the prebuilt, fuzzer-instrumented library.
    pub library_build_dir: PathBuf,
    /// Archives to link, relative to `library_build_dir`; empty links every
    /// `*.a` found there.
    pub libraries: Vec<PathBuf>,
    pub include_dirs: Vec<PathBuf>,
    /// Appended after the libraries (e.g. `-lz`).
    pub link_flags: Vec<String>,
    /// Per-execution limit for smoke and coverage runs.
    pub timeout_seconds: u64,
    pub compile_timeout_seconds: u64,
    /// Overrides symbolizer discovery.
    pub symbolizer: Option<PathBuf>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            compiler_command: CommandTemplate::new(DEFAULT_COMPILER_COMMAND),
            c_compiler: "clang".into(),
            cxx_compiler: "clang++".into(),
            sanitizers: vec![Sanitizer::Address],
            coverage_instrumentation: true,
            library_build_dir: PathBuf::from("."),
            libraries: Vec::new(),
            include_dirs: Vec::new(),
            link_flags: Vec::new(),
            timeout_seconds: 10,
            compile_timeout_seconds: 120,
            symbolizer: None,
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<(), GateError> {
        if !self.sanitizers.contains(&Sanitizer::Address) {
            return Err(GateError::InvalidConfig(
                "the address sanitizer cannot be disabled".into(),
            ));
        }
        if self.timeout_seconds < 1 || self.compile_timeout_seconds < 1 {
            return Err(GateError::InvalidConfig("timeouts must be at least 1 second".into()));
        }
        Ok(())
    }

    pub fn symbolizer_path(&self) -> Option<PathBuf> {
        self.symbolizer.clone().or_else(default_symbolizer)
    }

    pub fn sanitizer_flags(&self) -> Vec<String> {
        let mut names = vec!["fuzzer"];
        for s in &self.sanitizers {
            names.push(match s {
                Sanitizer::Address => "address",
                Sanitizer::Undefined => "undefined",
                // Part of the address sanitizer runtime; toggled at run time.
                Sanitizer::Leak => continue,
            });
        }
        let mut flags = vec![format!("-fsanitize={}", names.join(","))];
        if self.sanitizers.contains(&Sanitizer::Undefined) {
            flags.push("-fno-sanitize-recover=undefined".into());
        }
        flags
    }

    pub fn coverage_flags(&self) -> Vec<String> {
        if self.coverage_instrumentation {
            vec!["-fsanitize-coverage=pc-table".into()]
        } else {
            Vec::new()
        }
    }

    pub fn library_paths(&self) -> Result<Vec<PathBuf>, GateError> {
        if !self.libraries.is_empty() {
            return Ok(self.libraries.iter().map(|l| self.library_build_dir.join(l)).collect());
        }
        let dir = &self.library_build_dir;
        let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| GateError::Io(dir.clone(), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "a"))
            .collect();
        found.sort();
        Ok(found)
    }
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub binary: PathBuf,
    pub diagnostics: String,
}

#[derive(Debug)]
pub enum CompileError {
    /// The candidate is rejected; diagnostics are verbatim compiler output.
    Failed(String),
    Gate(GateError),
}

impl From<GateError> for CompileError {
    fn from(e: GateError) -> Self {
        CompileError::Gate(e)
    }
}

/// Builds `candidate` against the prebuilt library inside `work_dir`.
pub fn compile_candidate(
    candidate: &DriverCandidate,
    config: &BuildConfig,
    work_dir: &Path,
) -> Result<Compiled, CompileError> {
    config.validate()?;
    if let Err(why) = candidate.check_well_formed() {
        return Err(CompileError::Failed(format!(
            "candidate rejected before compilation: {why}"
        )));
    }
    std::fs::create_dir_all(work_dir).map_err(|e| GateError::Io(work_dir.to_path_buf(), e))?;
    let (cc, ext) = match candidate.language {
        Language::C => (&config.c_compiler, "c"),
        Language::Cxx => (&config.cxx_compiler, "cc"),
    };
    let compiler = which(cc).ok_or_else(|| GateError::ToolchainMissing(format!("compiler `{cc}` not found")))?;
    let source = work_dir.join(format!("harness.{ext}"));
    let output = work_dir.join("harness");
    std::fs::write(&source, &candidate.source_text).map_err(|e| GateError::Io(source.clone(), e))?;
    let _ = std::fs::remove_file(&output);

    let path_arg = |p: &Path| p.to_string_lossy().into_owned();
    let mut libs: Vec<String> = config.library_paths()?.iter().map(|p| path_arg(p)).collect();
    libs.extend(config.link_flags.iter().cloned());
    let vars: BTreeMap<&str, Vec<String>> = BTreeMap::from([
        ("cc", vec![path_arg(&compiler)]),
        ("source", vec![path_arg(&source)]),
        ("output", vec![path_arg(&output)]),
        (
            "includes",
            config
                .include_dirs
                .iter()
                .map(|d| format!("-I{}", d.display()))
                .collect(),
        ),
        ("libs", libs),
        ("sanitizer_flags", config.sanitizer_flags()),
        ("coverage_flags", config.coverage_flags()),
    ]);
    let argv = config
        .compiler_command
        .render(&vars)
        .map_err(|e| GateError::InvalidConfig(e.to_string()))?;

    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..]).current_dir(work_dir);
    let out = run_with_timeout(&mut cmd, Duration::from_secs(config.compile_timeout_seconds), None).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            GateError::ToolchainMissing(format!("`{}`: {e}", argv[0]))
        } else {
            GateError::Io(PathBuf::from(&argv[0]), e)
        }
    })?;
    let mut diagnostics = out.stderr_text();
    diagnostics.push_str(&out.stdout_text());
    if out.timed_out {
        diagnostics.push_str("\ncompilation timed out\n");
        return Err(CompileError::Failed(diagnostics));
    }
    if !out.success() || !output.is_file() {
        if diagnostics.trim().is_empty() {
            diagnostics = format!("compiler exited with {:?}", out.status);
        }
        return Err(CompileError::Failed(diagnostics));
    }
    Ok(Compiled {
        binary: output,
        diagnostics,
    })
}

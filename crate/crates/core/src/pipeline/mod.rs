//! Stage-by-stage and end-to-end runs. Every stage reads the previous
//! stage's JSON from the work directory and writes its own.

mod config;
mod target;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;

use log::{info, warn};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::cwe::Cwe;
use crate::inventory::{extract_functions, load_signature_spec_file, FunctionRecord, InventoryError, SourceUnit};
use crate::oracle::{OracleError, TargetCandidate, TargetOracle};
use crate::report::{render_report, PipelineReport, ReportFormat, TargetReport};
use crate::synthesis::{GenerationSession, PromptTemplate, SessionStatus};
use crate::toolchain::which;

pub use config::{PipelineConfig, ProjectConfig, SynthesisConfig};
use target::{dir_for, failed_report, load_session, TargetContext};
pub use target::{CAMPAIGN_FILE, OUTCOME_FILE, SESSION_FILE};

pub const INVENTORY_FILE: &str = "inventory.json";
pub const HINTS_FILE: &str = "cwe_hints.json";
pub const TARGETS_FILE: &str = "targets.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MARKDOWN: &str = "report.md";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("environment error: {0}")]
    Environment(String),
    #[error("no C or C++ sources found under {0}")]
    NoSourcesFound(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{0} already exists; pass --force to overwrite")]
    OutputExists(PathBuf),
    #[error("{0} is missing; run the `{1}` stage first")]
    MissingStage(PathBuf, &'static str),
    /// A per-target failure; recorded in the report, never fatal to a run.
    #[error("{0}")]
    Target(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
}

impl PipelineError {
    /// 1 for environment problems, 2 for configuration and usage problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_)
            | PipelineError::NoSourcesFound(_)
            | PipelineError::OutputExists(_)
            | PipelineError::MissingStage(..)
            | PipelineError::Oracle(OracleError::EmptyInventory | OracleError::InvalidConfig(_)) => 2,
            _ => 1,
        }
    }

    fn is_fatal(&self) -> bool {
        !matches!(self, PipelineError::Target(_))
    }
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io(dir.to_path_buf(), e))?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("pipeline artifacts serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| PipelineError::Io(path.to_path_buf(), e))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io(path.to_path_buf(), e))?;
    serde_json::from_str(&text).map_err(|e| {
        PipelineError::Io(
            path.to_path_buf(),
            std::io::Error::new(std::io::ErrorKind::InvalidData, e),
        )
    })
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    /// Redo stages whose outputs exist.
    pub force: bool,
    /// Worker threads for per-target work.
    pub jobs: usize,
    /// Write fixed timestamps so repeated runs compare byte for byte.
    pub normalize_timestamps: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            force: false,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            normalize_timestamps: false,
        }
    }
}

/// What a `run` did besides producing the report.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    pub targets_processed: usize,
    /// Targets whose persisted outcome was reused.
    pub targets_resumed: usize,
}

type PerTarget<T> = (TargetCandidate, Result<T, PipelineError>);

pub struct Pipeline {
    config: PipelineConfig,
    options: RunOptions,
}

fn is_source_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e, "c" | "cc" | "cpp" | "cxx"))
}

impl Pipeline {
    pub fn new(config: PipelineConfig, options: RunOptions) -> Self {
        Pipeline { config, options }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn workdir(&self) -> &Path {
        &self.config.workdir
    }

    fn path(&self, name: &str) -> PathBuf {
        self.config.workdir.join(name)
    }

    fn guard(&self, path: &Path) -> Result<(), PipelineError> {
        if path.exists() && !self.options.force {
            return Err(PipelineError::OutputExists(path.to_path_buf()));
        }
        Ok(())
    }

    fn require<T: DeserializeOwned>(&self, name: &str, stage: &'static str) -> Result<T, PipelineError> {
        let path = self.path(name);
        if !path.is_file() {
            return Err(PipelineError::MissingStage(path, stage));
        }
        read_json(&path)
    }

    /// Extracts every function definition under the source directories,
    /// adds signature-only functions and drops excluded names. Writes the
    /// inventory and the CWE hints carried by signature documents.
    pub fn inventory(&self) -> Result<Vec<FunctionRecord>, PipelineError> {
        let out = self.path(INVENTORY_FILE);
        self.guard(&out)?;
        let project = &self.config.project;
        let mut files = Vec::new();
        for dir in &project.source_dirs {
            if !dir.is_dir() {
                return Err(PipelineError::NoSourcesFound(dir.display().to_string()));
            }
            for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
                let entry = entry.map_err(|e| PipelineError::Io(dir.clone(), std::io::Error::other(e.to_string())))?;
                if entry.file_type().is_file() && is_source_file(entry.path()) {
                    files.push(entry.into_path());
                }
            }
        }
        if files.is_empty() && project.signature_specs.is_empty() {
            let dirs: Vec<String> = project.source_dirs.iter().map(|d| d.display().to_string()).collect();
            return Err(PipelineError::NoSourcesFound(dirs.join(", ")));
        }

        let excluded: BTreeSet<&str> = project.exclusion_list.iter().map(String::as_str).collect();
        let mut seen = BTreeSet::new();
        let mut records = Vec::new();
        let mut keep = |r: FunctionRecord, records: &mut Vec<FunctionRecord>| {
            if excluded.contains(r.name.as_str()) {
                return;
            }
            if seen.insert(r.name.clone()) {
                records.push(r);
            } else {
                warn!(
                    "{}: duplicate definition in {} ignored",
                    r.name,
                    r.source_path.display()
                );
            }
        };
        for file in &files {
            let unit = SourceUnit::read(file).map_err(|e| PipelineError::Io(file.clone(), e))?;
            match extract_functions(&unit) {
                Ok(found) => found.into_iter().for_each(|r| keep(r, &mut records)),
                Err(e @ InventoryError::UnparsableSource { .. }) => warn!("skipping {}: {e}", file.display()),
                Err(e) => return Err(PipelineError::Environment(e.to_string())),
            }
        }
        let mut hints: BTreeMap<String, Vec<Cwe>> = BTreeMap::new();
        for spec_path in &project.signature_specs {
            let spec = match load_signature_spec_file(spec_path) {
                Ok(spec) => spec,
                Err(e) => {
                    warn!("skipping {}: {e}", spec_path.display());
                    continue;
                }
            };
            if excluded.contains(spec.function_name.as_str()) {
                continue;
            }
            if !spec.cwe_hints.is_empty() {
                hints.insert(spec.function_name.clone(), spec.cwe_hints.clone());
            }
            if !records.iter().any(|r| r.name == spec.function_name) {
                keep(spec.to_record(), &mut records);
            }
        }
        info!("inventory: {} functions from {} files", records.len(), files.len());
        write_json(&out, &records)?;
        write_json(&self.path(HINTS_FILE), &hints)?;
        Ok(records)
    }

    /// Ranks the persisted inventory and writes the `top_k` candidates.
    pub fn rank(&self) -> Result<Vec<TargetCandidate>, PipelineError> {
        let out = self.path(TARGETS_FILE);
        self.guard(&out)?;
        let records: Vec<FunctionRecord> = self.require(INVENTORY_FILE, "inventory")?;
        let hints_path = self.path(HINTS_FILE);
        let hints: BTreeMap<String, Vec<Cwe>> = if hints_path.is_file() {
            read_json(&hints_path)?
        } else {
            BTreeMap::new()
        };
        let targets = TargetOracle::new(self.config.oracle.clone())?
            .with_hints(hints)
            .rank(&records)?;
        for t in &targets {
            info!("rank {}: {} ({:.3})", t.rank, t.record.name, t.verdict.score);
        }
        write_json(&out, &targets)?;
        Ok(targets)
    }

    fn targets(&self) -> Result<Vec<TargetCandidate>, PipelineError> {
        self.require(TARGETS_FILE, "rank")
    }

    fn context(&self) -> Result<TargetContext<'_>, PipelineError> {
        let synthesis = &self.config.synthesis;
        let template = match &synthesis.template_path {
            Some(path) => PromptTemplate::load(path),
            None => Ok(PromptTemplate::default()),
        }
        .map_err(|e| PipelineError::Config(e.to_string()))?;
        let backend = match synthesis.backend.build() {
            Ok(b) => b,
            Err(e) if synthesis.template_fallback => {
                warn!("{e}; every target uses the template driver");
                None
            }
            Err(e) => return Err(PipelineError::Config(e.to_string())),
        };
        Ok(TargetContext {
            gate: self.config.effective_gate(),
            campaign: &self.config.campaign,
            template,
            driver: &synthesis.driver,
            backend,
            template_fallback: synthesis.template_fallback,
            max_attempts: synthesis.max_attempts,
            temperature: synthesis.backend.temperature,
        })
    }

    /// Builds the project library when it is configured but missing, and
    /// checks for the compiler.
    pub fn prepare_toolchain(&self) -> Result<(), PipelineError> {
        let build = &self.config.gate.build;
        if which(&build.c_compiler).is_none() {
            return Err(PipelineError::Environment(format!(
                "compiler `{}` not found",
                build.c_compiler
            )));
        }
        let Some(archive) = &self.config.project.library_archive else {
            return Ok(());
        };
        if archive.is_file() {
            return Ok(());
        }
        let Some(command) = &self.config.project.build_command else {
            return Err(PipelineError::Environment(format!(
                "library archive {} not found",
                archive.display()
            )));
        };
        let command = command.replace("{workdir}", &self.config.workdir.to_string_lossy());
        info!("building the library: {command}");
        let mut cmd = Command::new("sh");
        cmd.arg("-c").arg(&command);
        if let Some(dir) = &self.config.base_dir {
            cmd.current_dir(dir);
        }
        let out = cmd
            .output()
            .map_err(|e| PipelineError::Environment(format!("cannot run `{command}`: {e}")))?;
        if !out.status.success() || !archive.is_file() {
            return Err(PipelineError::Environment(format!(
                "library build failed ({}): {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.options.jobs.max(1))
            .build()
            .map_err(|e| PipelineError::Environment(e.to_string()))
    }

    /// Runs `work` for every target on the worker pool. Per-target errors
    /// are collected; anything else aborts.
    fn fan_out<T: Send>(
        &self,
        targets: &[TargetCandidate],
        work: impl Fn(&TargetCandidate) -> Result<T, PipelineError> + Sync,
    ) -> Result<Vec<PerTarget<T>>, PipelineError> {
        let results: Vec<_> = self
            .pool()?
            .install(|| targets.par_iter().map(|t| (t.clone(), work(t))).collect());
        let mut out = Vec::with_capacity(results.len());
        for (t, r) in results {
            match r {
                Err(e) if e.is_fatal() => return Err(e),
                Err(e) => {
                    warn!("{}: {e}", t.record.name);
                    out.push((t, Err(e)));
                }
                ok => out.push((t, ok)),
            }
        }
        Ok(out)
    }

    /// First harness candidate per target.
    pub fn synth(&self) -> Result<Vec<Result<GenerationSession, PipelineError>>, PipelineError> {
        let targets = self.targets()?;
        for t in &targets {
            self.guard(&dir_for(self.workdir(), &t.record.name).session())?;
        }
        let ctx = self.context()?;
        let results = self.fan_out(&targets, |t| {
            let dir = dir_for(self.workdir(), &t.record.name);
            reset_dir(&dir.0)?;
            ctx.synthesize(t, &dir)
        })?;
        Ok(results.into_iter().map(|(_, r)| r).collect())
    }

    /// Gates each target's pending candidate, refining on rejection.
    pub fn gate(&self) -> Result<Vec<Result<GenerationSession, PipelineError>>, PipelineError> {
        let targets = self.targets()?;
        for t in &targets {
            let dir = dir_for(self.workdir(), &t.record.name);
            match load_session(&dir)? {
                None => return Err(PipelineError::MissingStage(dir.session(), "synth")),
                Some(s) if s.status != SessionStatus::InProgress => self.guard(&dir.session())?,
                Some(_) => {}
            }
        }
        self.prepare_toolchain()?;
        let ctx = self.context()?;
        let results = self.fan_out(&targets, |t| {
            let dir = dir_for(self.workdir(), &t.record.name);
            let mut session = load_session(&dir)?.expect("checked above");
            if session.status != SessionStatus::InProgress {
                // Forced: start over from the first candidate.
                session.history.truncate(1);
                if let Some(first) = session.history.first_mut() {
                    first.gate = None;
                }
                session.status = SessionStatus::InProgress;
            }
            ctx.admit(&mut session, &dir)?;
            Ok(session)
        })?;
        Ok(results.into_iter().map(|(_, r)| r).collect())
    }

    /// Fuzzes every accepted harness and writes each target's outcome.
    pub fn fuzz(&self) -> Result<Vec<TargetReport>, PipelineError> {
        let targets = self.targets()?;
        for t in &targets {
            let dir = dir_for(self.workdir(), &t.record.name);
            match load_session(&dir)? {
                None => return Err(PipelineError::MissingStage(dir.session(), "synth")),
                Some(s) if s.status == SessionStatus::InProgress => {
                    return Err(PipelineError::MissingStage(dir.session(), "gate"))
                }
                Some(_) => self.guard(&dir.outcome())?,
            }
        }
        let ctx = self.context()?;
        let results = self.fan_out(&targets, |t| {
            let dir = dir_for(self.workdir(), &t.record.name);
            let mut session = load_session(&dir)?.expect("checked above");
            ctx.fuzz(&mut session, &dir)
        })?;
        Ok(results
            .into_iter()
            .map(|(t, r)| r.unwrap_or_else(|e| self.record_failure(&t, e.to_string())))
            .collect())
    }

    fn record_failure(&self, target: &TargetCandidate, error: String) -> TargetReport {
        let dir = dir_for(self.workdir(), &target.record.name);
        let session = load_session(&dir).ok().flatten();
        let report = failed_report(target, session.as_ref(), error);
        if let Err(e) = write_json(&dir.outcome(), &report) {
            warn!("{}: cannot persist outcome: {e}", target.record.name);
        }
        report
    }

    /// Assembles the report from persisted outcomes. Targets without one
    /// are listed as not processed.
    pub fn report(&self) -> Result<PipelineReport, PipelineError> {
        let started = now();
        self.write_report(started)
    }

    fn write_report(&self, started_at: String) -> Result<PipelineReport, PipelineError> {
        let targets = self.targets()?;
        let mut entries = Vec::with_capacity(targets.len());
        for t in &targets {
            let dir = dir_for(self.workdir(), &t.record.name);
            let entry = if dir.outcome().is_file() {
                read_json::<TargetReport>(&dir.outcome())?
            } else {
                let session = load_session(&dir)?;
                failed_report(t, session.as_ref(), "not processed".into())
            };
            entries.push(entry);
        }
        let mut report = PipelineReport::new(self.config.snapshot(), entries, started_at, now());
        if self.options.normalize_timestamps {
            report = report.normalized();
        }
        std::fs::write(self.path(REPORT_JSON), render_report(&report, ReportFormat::Json))
            .map_err(|e| PipelineError::Io(self.path(REPORT_JSON), e))?;
        std::fs::write(
            self.path(REPORT_MARKDOWN),
            render_report(&report, ReportFormat::Markdown),
        )
        .map_err(|e| PipelineError::Io(self.path(REPORT_MARKDOWN), e))?;
        Ok(report)
    }

    /// End to end. Persisted inventory, ranking and finished targets are
    /// reused unless forced.
    pub fn run(&self) -> Result<(PipelineReport, RunStats), PipelineError> {
        let started = now();
        std::fs::create_dir_all(self.workdir()).map_err(|e| PipelineError::Io(self.workdir().to_path_buf(), e))?;
        if self.options.force || !self.path(INVENTORY_FILE).is_file() {
            self.clear(INVENTORY_FILE)?;
            self.inventory()?;
            self.clear(TARGETS_FILE)?;
        }
        if self.options.force || !self.path(TARGETS_FILE).is_file() {
            self.clear(TARGETS_FILE)?;
            self.rank()?;
        }
        let targets = self.targets()?;
        let pending: Vec<TargetCandidate> = targets
            .iter()
            .filter(|t| self.options.force || !dir_for(self.workdir(), &t.record.name).outcome().is_file())
            .cloned()
            .collect();
        let stats = RunStats {
            targets_processed: pending.len(),
            targets_resumed: targets.len() - pending.len(),
        };
        if !pending.is_empty() {
            self.prepare_toolchain()?;
            let ctx = self.context()?;
            let results = self.fan_out(&pending, |t| {
                let dir = dir_for(self.workdir(), &t.record.name);
                reset_dir(&dir.0)?;
                let mut session = ctx.synthesize(t, &dir)?;
                ctx.admit(&mut session, &dir)?;
                ctx.fuzz(&mut session, &dir)
            })?;
            for (t, r) in results {
                if let Err(e) = r {
                    self.record_failure(&t, e.to_string());
                }
            }
        }
        let report = self.write_report(started)?;
        Ok((report, stats))
    }

    fn clear(&self, name: &str) -> Result<(), PipelineError> {
        let path = self.path(name);
        match std::fs::remove_file(&path) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(PipelineError::Io(path, e)),
            _ => Ok(()),
        }
    }
}

fn reset_dir(dir: &Path) -> Result<(), PipelineError> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| PipelineError::Io(dir.to_path_buf(), e))?;
    }
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io(dir.to_path_buf(), e))
}

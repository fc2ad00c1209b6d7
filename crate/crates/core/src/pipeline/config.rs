use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::campaign::CampaignConfig;
use crate::gate::GateConfig;
use crate::oracle::OracleConfig;
use crate::synthesis::{BackendConfig, DriverOptions, DEFAULT_MAX_ATTEMPTS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub name: String,
    pub source_dirs: Vec<PathBuf>,
    /// Signature documents for functions without (or in addition to) source.
    pub signature_specs: Vec<PathBuf>,
    /// Prebuilt fuzzer-instrumented archive. When absent the gate's
    /// `library_build_dir`/`libraries` settings apply.
    pub library_archive: Option<PathBuf>,
    pub include_dirs: Vec<PathBuf>,
    /// Functions left out of the inventory, e.g. ones already fuzzed.
    pub exclusion_list: Vec<String>,
    /// Run through `sh -c` in the config's directory when `library_archive`
    /// is missing. `{workdir}` is substituted.
    pub build_command: Option<String>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            name: "project".into(),
            source_dirs: Vec::new(),
            signature_specs: Vec::new(),
            library_archive: None,
            include_dirs: Vec::new(),
            exclusion_list: Vec::new(),
            build_command: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    /// Prompt template document; the bundled one when absent.
    pub template_path: Option<PathBuf>,
    pub backend: BackendConfig,
    pub max_attempts: u32,
    pub driver: DriverOptions,
    /// Use the template driver when the backend cannot be reached.
    pub template_fallback: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            template_path: None,
            backend: BackendConfig::default(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            driver: DriverOptions::default(),
            template_fallback: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub project: ProjectConfig,
    pub oracle: OracleConfig,
    pub synthesis: SynthesisConfig,
    pub gate: GateConfig,
    pub campaign: CampaignConfig,
    pub workdir: PathBuf,
    /// Directory relative paths were resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn absolutize(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    /// Reads a YAML or JSON document; relative paths are taken from the
    /// document's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        PipelineConfig::load_with_workdir(path, None)
    }

    /// Like [`load`](Self::load) but with `workdir` replacing the
    /// document's own (relative to the current directory).
    pub fn load_with_workdir(path: &Path, workdir: Option<&Path>) -> Result<Self, PipelineError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut config: PipelineConfig =
            serde_yaml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        let base = std::fs::canonicalize(&base).unwrap_or(base);
        if let Some(w) = workdir {
            config.workdir =
                std::path::absolute(w).map_err(|e| PipelineError::Config(format!("{}: {e}", w.display())))?;
        }
        config.resolve_paths(&base);
        config.validate()?;
        Ok(config)
    }

    /// Makes every relative path absolute against `base`. `{workdir}` in
    /// the library archive is replaced first.
    pub fn resolve_paths(&mut self, base: &Path) {
        if self.workdir.as_os_str().is_empty() {
            self.workdir = PathBuf::from("work");
        }
        absolutize(base, &mut self.workdir);
        let workdir = self.workdir.to_string_lossy().into_owned();
        let p = &mut self.project;
        for d in p
            .source_dirs
            .iter_mut()
            .chain(p.signature_specs.iter_mut())
            .chain(p.include_dirs.iter_mut())
        {
            absolutize(base, d);
        }
        if let Some(a) = p.library_archive.as_mut() {
            *a = PathBuf::from(a.to_string_lossy().replace("{workdir}", &workdir));
            absolutize(base, a);
        }
        if let Some(t) = self.synthesis.template_path.as_mut() {
            absolutize(base, t);
        }
        if let Some(r) = self.synthesis.backend.replay_dir.as_mut() {
            absolutize(base, r);
        }
        let b = &mut self.gate.build;
        absolutize(base, &mut b.library_build_dir);
        for d in b.include_dirs.iter_mut() {
            absolutize(base, d);
        }
        if let Some(s) = self.campaign.seed_corpus_dir.as_mut() {
            absolutize(base, s);
        }
        self.base_dir = Some(base.to_path_buf());
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.oracle
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.gate.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.campaign
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.synthesis.max_attempts == 0 {
            return Err(PipelineError::Config(
                "synthesis.max_attempts must be at least 1".into(),
            ));
        }
        if self.project.source_dirs.is_empty() && self.project.signature_specs.is_empty() {
            return Err(PipelineError::Config(
                "project lists neither source_dirs nor signature_specs".into(),
            ));
        }
        Ok(())
    }

    /// Gate settings with the project's archive and include directories
    /// folded in.
    pub fn effective_gate(&self) -> GateConfig {
        let mut gate = self.gate.clone();
        if let Some(archive) = &self.project.library_archive {
            gate.build.library_build_dir = archive.parent().map(Path::to_path_buf).unwrap_or_default();
            gate.build.libraries = archive.file_name().map(PathBuf::from).into_iter().collect();
        }
        for d in &self.project.include_dirs {
            if !gate.build.include_dirs.contains(d) {
                gate.build.include_dirs.push(d.clone());
            }
        }
        gate
    }

    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("configuration serializes")
    }
}

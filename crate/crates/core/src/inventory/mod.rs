//! Function inventory: C function extraction, structural features and
//! pre-extracted signature ingestion.

mod complexity;
mod extract;
mod fuzz_types;
pub mod lexer;
mod signature;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use complexity::{call_count, compute_cyclomatic_complexity, cyclomatic_complexity};
pub use extract::extract_functions;
pub use fuzz_types::{
    default_type_aliases, is_byte_pointer, is_integer_type, is_scalar_integer, match_fuzz_interface_types,
    normalize_type, NormalizedType, TypeAliases,
};
pub use signature::{load_signature_spec, load_signature_spec_file, SignatureSpec, SpecFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    C,
    Cxx,
}

impl Language {
    /// Guesses the language from a file extension; `None` for non-source files.
    pub fn from_path(path: &Path) -> Option<Language> {
        match path.extension()?.to_str()? {
            "c" | "h" => Some(Language::C),
            "cc" | "cpp" | "cxx" | "hpp" | "hh" | "hxx" => Some(Language::Cxx),
            _ => None,
        }
    }
}

/// One source file handed to extraction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub path: PathBuf,
    pub content: String,
    pub language: Language,
}

impl SourceUnit {
    pub fn new(path: impl Into<PathBuf>, content: impl Into<String>, language: Language) -> Self {
        SourceUnit {
            path: path.into(),
            content: content.into(),
            language,
        }
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let content = std::fs::read_to_string(path)?;
        let language = Language::from_path(path).unwrap_or(Language::C);
        Ok(SourceUnit::new(path, content, language))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Param {
    /// Empty for unnamed parameters.
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

impl Param {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Param {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

/// A function definition found in a source unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub name: String,
    pub return_type: String,
    pub params: Vec<Param>,
    pub source_path: PathBuf,
    /// 1-based inclusive line range, from the first header token to the closing brace.
    pub line_span: (u32, u32),
    /// Exact source slice from the opening to the closing brace.
    pub body: String,
    pub cyclomatic_complexity: u32,
    /// Distinct callees referenced textually in the body.
    pub call_count: u32,
    #[serde(default)]
    pub variadic: bool,
    #[serde(default)]
    pub function_pointer_params: bool,
}

impl FunctionRecord {
    /// Renders the C prototype without a trailing semicolon.
    pub fn signature(&self) -> String {
        render_signature(&self.return_type, &self.name, &self.params, self.variadic)
    }

    /// Variadic and function-pointer signatures cannot be driven from a flat
    /// byte buffer.
    pub fn template_unsupported(&self) -> bool {
        self.variadic || self.function_pointer_params
    }
}

impl fmt::Display for FunctionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({}:{}-{})",
            self.name,
            self.source_path.display(),
            self.line_span.0,
            self.line_span.1
        )
    }
}

/// Joins a declarator: `void *` + `f` gives `void *f`, `int` + `x` gives `int x`.
pub(crate) fn join_declarator(ty: &str, name: &str) -> String {
    if name.is_empty() {
        ty.to_string()
    } else if ty.ends_with('*') {
        format!("{ty}{name}")
    } else {
        format!("{ty} {name}")
    }
}

pub(crate) fn render_signature(return_type: &str, name: &str, params: &[Param], variadic: bool) -> String {
    let mut args: Vec<String> = params.iter().map(|p| join_declarator(&p.ty, &p.name)).collect();
    if variadic {
        args.push("...".to_string());
    }
    let args = if args.is_empty() {
        "void".to_string()
    } else {
        args.join(", ")
    };
    format!("{}({args})", join_declarator(return_type, name))
}

#[derive(Debug, Error)]
pub enum InventoryError {
    #[error("{path}: unparsable source: {reason}")]
    UnparsableSource { path: PathBuf, reason: String },
    #[error("malformed signature spec: {0}")]
    MalformedSpec(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

//! Command templates, sanitizer runtime options and tool discovery.

use std::collections::BTreeMap;
use std::env;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("cannot split command template {0:?}: {1}")]
    Split(String, String),
    #[error("unknown placeholder {{{0}}} in command template")]
    UnknownPlaceholder(String),
    #[error("command template renders to an empty command")]
    Empty,
}

/// A command line with `{name}` placeholders.
///
/// The template is split shell-style first. A word that is exactly one
/// placeholder expands to zero or more arguments; placeholders embedded in a
/// longer word are replaced textually (list values joined by spaces).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommandTemplate(pub String);

impl CommandTemplate {
    pub fn new(s: impl Into<String>) -> Self {
        CommandTemplate(s.into())
    }

    pub fn render(&self, vars: &BTreeMap<&str, Vec<String>>) -> Result<Vec<String>, TemplateError> {
        let words = shell_words::split(&self.0).map_err(|e| TemplateError::Split(self.0.clone(), e.to_string()))?;
        let mut argv = Vec::new();
        for word in words {
            if let Some(name) = whole_placeholder(&word) {
                let values = vars
                    .get(name)
                    .ok_or_else(|| TemplateError::UnknownPlaceholder(name.to_string()))?;
                argv.extend(values.iter().filter(|v| !v.is_empty()).cloned());
                continue;
            }
            let mut rendered = String::new();
            let mut rest = word.as_str();
            while let Some(open) = rest.find('{') {
                let Some(close) = rest[open..].find('}') else {
                    break;
                };
                let name = &rest[open + 1..open + close];
                let value = vars
                    .get(name)
                    .ok_or_else(|| TemplateError::UnknownPlaceholder(name.to_string()))?;
                rendered.push_str(&rest[..open]);
                rendered.push_str(&value.join(" "));
                rest = &rest[open + close + 1..];
            }
            rendered.push_str(rest);
            if !rendered.is_empty() {
                argv.push(rendered);
            }
        }
        if argv.is_empty() {
            return Err(TemplateError::Empty);
        }
        Ok(argv)
    }
}

fn whole_placeholder(word: &str) -> Option<&str> {
    let inner = word.strip_prefix('{')?.strip_suffix('}')?;
    (!inner.is_empty() && inner.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')).then_some(inner)
}

/// Looks `name` up on `PATH` (or accepts it as a path).
pub fn which(name: &str) -> Option<PathBuf> {
    let p = Path::new(name);
    if p.components().count() > 1 {
        return p.is_file().then(|| p.to_path_buf());
    }
    env::var_os("PATH").and_then(|paths| {
        env::split_paths(&paths)
            .map(|dir| dir.join(name))
            .find(|candidate| candidate.is_file())
    })
}

/// The best available symbolizer: llvm-symbolizer when present, else addr2line.
pub fn default_symbolizer() -> Option<PathBuf> {
    static FOUND: OnceLock<Option<PathBuf>> = OnceLock::new();
    FOUND
        .get_or_init(|| {
            std::iter::once("llvm-symbolizer".to_string())
                .chain((11..=20).rev().map(|v| format!("llvm-symbolizer-{v}")))
                .chain(std::iter::once("addr2line".to_string()))
                .find_map(|n| which(&n))
        })
        .clone()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sanitizer {
    Address,
    Undefined,
    Leak,
}

/// Environment for running an instrumented binary: symbolization on, leak
/// detection only when requested.
pub fn sanitizer_env(sanitizers: &[Sanitizer], symbolizer: Option<&Path>) -> Vec<(String, String)> {
    let mut common = vec!["symbolize=1".to_string(), "handle_abort=1".to_string()];
    if let Some(sym) = symbolizer {
        common.push(format!("external_symbolizer_path={}", sym.display()));
        if sym
            .file_name()
            .is_some_and(|n| n.to_string_lossy().contains("addr2line"))
        {
            common.push("allow_addr2line=1".to_string());
        }
    }
    let leaks = if sanitizers.contains(&Sanitizer::Leak) { 1 } else { 0 };
    let mut asan = common.clone();
    asan.push(format!("detect_leaks={leaks}"));
    asan.push("abort_on_error=0".to_string());
    let mut ubsan = common;
    ubsan.push("print_stacktrace=1".to_string());
    ubsan.push("halt_on_error=1".to_string());
    vec![
        ("ASAN_OPTIONS".to_string(), asan.join(":")),
        ("UBSAN_OPTIONS".to_string(), ubsan.join(":")),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(pairs: &[(&'static str, &[&str])]) -> BTreeMap<&'static str, Vec<String>> {
        pairs
            .iter()
            .map(|(k, v)| (*k, v.iter().map(|s| s.to_string()).collect()))
            .collect()
    }

    #[test]
    fn whole_word_placeholders_splice_lists() {
        let t = CommandTemplate::new("cc {flags} {src} -o {out}");
        let argv = t
            .render(&vars(&[
                ("flags", &["-g", "-O1"]),
                ("src", &["a b.c"]),
                ("out", &["bin"]),
            ]))
            .unwrap();
        assert_eq!(argv, ["cc", "-g", "-O1", "a b.c", "-o", "bin"]);
    }

    #[test]
    fn empty_lists_vanish_and_embedded_placeholders_substitute() {
        let t = CommandTemplate::new("{bin} -max_len={max_len} {seeds} -artifact_prefix={dir}/");
        let argv = t
            .render(&vars(&[
                ("bin", &["./h"]),
                ("max_len", &["0"]),
                ("seeds", &[]),
                ("dir", &["/tmp/x"]),
            ]))
            .unwrap();
        assert_eq!(argv, ["./h", "-max_len=0", "-artifact_prefix=/tmp/x/"]);
    }

    #[test]
    fn unknown_placeholder_is_an_error() {
        let t = CommandTemplate::new("cc {nope}");
        assert_eq!(
            t.render(&BTreeMap::new()).unwrap_err(),
            TemplateError::UnknownPlaceholder("nope".into())
        );
    }

    #[test]
    fn addr2line_symbolizer_is_allowed_explicitly() {
        let env = sanitizer_env(&[Sanitizer::Address], Some(Path::new("/usr/bin/addr2line")));
        let asan = &env[0].1;
        assert!(asan.contains("external_symbolizer_path=/usr/bin/addr2line"));
        assert!(asan.contains("allow_addr2line=1"));
        assert!(asan.contains("detect_leaks=0"));
    }

    #[test]
    fn which_finds_sh() {
        assert!(which("sh").is_some());
        assert!(which("definitely-not-a-real-tool-xyz").is_none());
    }
}

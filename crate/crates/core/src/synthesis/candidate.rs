use serde::{Deserialize, Serialize};

use crate::inventory::lexer::{tokenize_lenient, Token};
use crate::inventory::Language;

pub const ENTRY_POINT: &str = "LLVMFuzzerTestOneInput";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Llm,
    Template,
}

/// Harness source proposed for one target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriverCandidate {
    pub source_text: String,
    pub provenance: Provenance,
    pub attempt: u32,
    pub target_function: String,
    pub language: Language,
}

impl DriverCandidate {
    /// Checks that the source defines the entry point exactly once and
    /// mentions the target.
    pub fn check_well_formed(&self) -> Result<(), String> {
        let tokens = tokenize_lenient(&self.source_text);
        let definitions = count_definitions(&tokens, ENTRY_POINT);
        if definitions != 1 {
            return Err(format!("expected one definition of {ENTRY_POINT}, found {definitions}"));
        }
        if !tokens.iter().any(|t| t.is_ident() && t.text == self.target_function) {
            return Err(format!("source never references {}", self.target_function));
        }
        Ok(())
    }
}

/// Counts `name ( ... ) {` sequences.
fn count_definitions(tokens: &[Token<'_>], name: &str) -> usize {
    let mut count = 0;
    for (i, t) in tokens.iter().enumerate() {
        if !(t.is_ident() && t.text == name) || !tokens.get(i + 1).is_some_and(|n| n.is_punct("(")) {
            continue;
        }
        let mut depth = 0usize;
        let mut j = i + 1;
        while j < tokens.len() {
            if tokens[j].is_punct("(") {
                depth += 1;
            } else if tokens[j].is_punct(")") {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            j += 1;
        }
        if tokens.get(j + 1).is_some_and(|n| n.is_punct("{")) {
            count += 1;
        }
    }
    count
}

/// The first fenced code block of `reply` with its info string, or the whole
/// reply when there is no complete fence.
pub fn extract_code_block(reply: &str) -> (String, Option<String>) {
    let mut lines = reply.split_inclusive('\n');
    let mut info = None;
    for line in lines.by_ref() {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("```") {
            info = Some(rest.trim().to_string());
            break;
        }
    }
    let Some(info) = info else {
        return (reply.to_string(), None);
    };
    let mut body = String::new();
    for line in lines {
        if line.trim_start().starts_with("```") {
            return (body, (!info.is_empty()).then_some(info));
        }
        body.push_str(line);
    }
    (reply.to_string(), None)
}

/// Language of a harness: the fence tag when it names one, otherwise C++ if
/// the source uses C++-only constructs.
pub fn detect_language(source: &str, fence_info: Option<&str>) -> Language {
    match fence_info.map(|s| s.to_ascii_lowercase()).as_deref() {
        Some("c") => return Language::C,
        Some("cpp" | "c++" | "cc" | "cxx") => return Language::Cxx,
        _ => {}
    }
    let cxx_markers = [
        "extern \"C\"",
        "::",
        "FuzzedDataProvider",
        "#include <c",
        "std::",
        "nullptr",
        "template<",
    ];
    if cxx_markers.iter().any(|m| source.contains(m)) {
        Language::Cxx
    } else {
        Language::C
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(src: &str) -> DriverCandidate {
        DriverCandidate {
            source_text: src.into(),
            provenance: Provenance::Llm,
            attempt: 1,
            target_function: "target".into(),
            language: Language::C,
        }
    }

    #[test]
    fn fenced_block_is_extracted_exactly() {
        let reply = "Here you go:\n```cpp\nint x;\n  int y;\n```\nthanks\n```c\nlater\n```\n";
        assert_eq!(
            extract_code_block(reply),
            ("int x;\n  int y;\n".to_string(), Some("cpp".into()))
        );
    }

    #[test]
    fn prose_only_reply_is_returned_whole() {
        let reply = "I cannot write that harness.";
        assert_eq!(extract_code_block(reply), (reply.to_string(), None));
        let unterminated = "```c\nint x;\n";
        assert_eq!(extract_code_block(unterminated).0, unterminated);
    }

    #[test]
    fn well_formedness() {
        let good = "int LLVMFuzzerTestOneInput(const uint8_t *d, size_t n) { target(d, n); return 0; }";
        assert!(cand(good).check_well_formed().is_ok());
        let decl_only = "int LLVMFuzzerTestOneInput(const uint8_t *d, size_t n); void g(void) { target(0, 0); }";
        assert!(cand(decl_only).check_well_formed().is_err());
        let no_target = "int LLVMFuzzerTestOneInput(const uint8_t *d, size_t n) { return 0; }";
        assert!(cand(no_target)
            .check_well_formed()
            .unwrap_err()
            .contains("never references"));
        let in_comment = "// target\nint LLVMFuzzerTestOneInput(const uint8_t *d, size_t n) { return 0; }";
        assert!(cand(in_comment).check_well_formed().is_err());
    }

    #[test]
    fn language_detection() {
        assert_eq!(detect_language("int x;", Some("cpp")), Language::Cxx);
        assert_eq!(detect_language("extern \"C\" int f(void);", None), Language::Cxx);
        assert_eq!(detect_language("#include <stdint.h>\n", None), Language::C);
        assert_eq!(detect_language("#include <cstdint>\n", Some("")), Language::Cxx);
    }
}

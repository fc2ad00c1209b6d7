//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use oraclefuzz::gate::{BuildConfig, GateConfig};
use oraclefuzz::inventory::{extract_functions, FunctionRecord, SourceUnit};
use oraclefuzz::synthesis::{detect_language, DriverCandidate, Provenance};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn toylib_source() -> PathBuf {
    fixtures().join("toylib/src/toylib.c")
}

pub fn toylib_records() -> Vec<FunctionRecord> {
    extract_functions(&SourceUnit::read(&toylib_source()).unwrap()).unwrap()
}

pub fn toylib_record(name: &str) -> FunctionRecord {
    toylib_records().into_iter().find(|r| r.name == name).unwrap()
}

/// Directory holding `libtoylib.a`, built once per test binary.
pub fn toylib_lib_dir() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let exe = std::env::current_exe().unwrap();
        let tag = exe.file_stem().unwrap().to_string_lossy().into_owned();
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("toylib-{tag}"));
        let status = Command::new(fixtures().join("toylib/build.sh"))
            .arg(&dir)
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success(), "toylib build failed");
        dir
    })
}

pub fn toylib_build() -> BuildConfig {
    BuildConfig {
        library_build_dir: toylib_lib_dir().to_path_buf(),
        libraries: vec![PathBuf::from("libtoylib.a")],
        include_dirs: vec![fixtures().join("toylib/src")],
        timeout_seconds: 5,
        ..BuildConfig::default()
    }
}

pub fn toylib_gate() -> GateConfig {
    GateConfig {
        build: toylib_build(),
        ..GateConfig::default()
    }
}

/// A hand-written harness from `fixtures/<rel>`.
pub fn candidate(rel: &str, target: &str) -> DriverCandidate {
    let source_text = std::fs::read_to_string(fixtures().join(rel)).unwrap();
    DriverCandidate {
        language: detect_language(&source_text, None),
        source_text,
        provenance: Provenance::Llm,
        attempt: 1,
        target_function: target.into(),
    }
}

pub fn tool_available(name: &str) -> bool {
    oraclefuzz::toolchain::which(name).is_some()
}

/// The toylib fixture configuration with its work directory under `workdir`.
pub fn toylib_config(workdir: &Path) -> oraclefuzz::pipeline::PipelineConfig {
    oraclefuzz::pipeline::PipelineConfig::load_with_workdir(&fixtures().join("toylib/oraclefuzz.yaml"), Some(workdir))
        .unwrap()
}

/// Harness exhibiting any combination of the three defects.
pub fn engineered(syntax_error: bool, crash_on_empty: bool, reaches_target: bool) -> DriverCandidate {
    let mut body = String::new();
    if crash_on_empty {
        body.push_str(
            "    if (size == 0) {\n        volatile char *p = malloc(1);\n        free((void *)p);\n        (void)p[0];\n    }\n",
        );
    }
    if reaches_target {
        body.push_str("    parse_header((const char *)data, size, 0);\n");
    } else {
        body.push_str("    if (size == 7777)\n        parse_header((const char *)data, size, 0);\n");
    }
    if syntax_error {
        body.push_str("    int broken = ;\n");
    }
    let source_text = format!(
        "#include <stddef.h>\n#include <stdint.h>\n#include <stdlib.h>\n\n#include \"toylib.h\"\n\n\
         int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size)\n{{\n{body}    return 0;\n}}\n"
    );
    DriverCandidate {
        language: detect_language(&source_text, None),
        source_text,
        provenance: Provenance::Llm,
        attempt: 1,
        target_function: "parse_header".into(),
    }
}

/// Compiles and runs `fixtures/asan/<name>.c`, returning stderr.
pub fn capture_sanitizer_report(name: &str, sanitizers: &[oraclefuzz::toolchain::Sanitizer]) -> String {
    let dir = tempfile::tempdir().unwrap();
    let binary = dir.path().join(name);
    let status = Command::new("clang")
        .args([
            "-g",
            "-gdwarf-4",
            "-O0",
            "-fno-omit-frame-pointer",
            "-fsanitize=address",
        ])
        .arg(fixtures().join(format!("asan/{name}.c")))
        .arg("-o")
        .arg(&binary)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&binary)
        .envs(oraclefuzz::toolchain::sanitizer_env(
            sanitizers,
            oraclefuzz::toolchain::default_symbolizer().as_deref(),
        ))
        .output()
        .unwrap();
    assert!(!out.status.success(), "{name} did not fail");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

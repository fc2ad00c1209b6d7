//! Line coverage measured through the engine's coverage dump, checked
//! against a second route: guard-based instrumentation, `sancov` and
//! `addr2line`.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Stdio};

use common::{candidate, fixtures, tool_available, toylib_build, toylib_record};
use oraclefuzz::gate::{compile_candidate, measure_coverage};

const SANCOV: &str = "/usr/lib/llvm-14/bin/sancov";

const FILE_DRIVER: &str = r#"
#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>

int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size);

int main(int argc, char **argv)
{
    static uint8_t buf[1 << 16];
    for (int i = 1; i < argc; i++) {
        FILE *f = fopen(argv[i], "rb");
        size_t n = fread(buf, 1, sizeof buf, f);
        uint8_t *copy = malloc(n ? n : 1);
        fclose(f);
        for (size_t j = 0; j < n; j++)
            copy[j] = buf[j];
        LLVMFuzzerTestOneInput(copy, n);
        free(copy);
    }
    return 0;
}
"#;

fn run(cmd: &mut Command) -> String {
    let out = cmd.stderr(Stdio::inherit()).output().unwrap();
    assert!(out.status.success(), "{cmd:?}");
    String::from_utf8(out.stdout).unwrap()
}

/// Lines of `function` named by addr2line for the given PCs.
fn lines_of(binary: &Path, pcs: &str, function: &str) -> BTreeSet<u32> {
    let mut child = Command::new("addr2line")
        .args(["-f", "-e"])
        .arg(binary)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    std::io::Write::write_all(child.stdin.as_mut().unwrap(), pcs.as_bytes()).unwrap();
    drop(child.stdin.take());
    let out = String::from_utf8(child.wait_with_output().unwrap().stdout).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    lines
        .chunks(2)
        .filter(|pair| pair[0] == function)
        .filter_map(|pair| pair[1].rsplit(':').next()?.split_whitespace().next()?.parse().ok())
        .collect()
}

/// Covered / instrumented lines of `function` over `seeds`.
fn guard_route(harness: &str, function: &str, seeds: &[Vec<u8>], dir: &Path) -> f64 {
    let flags = [
        "-g",
        "-gdwarf-4",
        "-O0",
        "-fsanitize=address",
        "-fsanitize-coverage=trace-pc-guard",
    ];
    let include = format!("-I{}", fixtures().join("toylib/src").display());
    run(Command::new("clang")
        .args(flags)
        .arg("-c")
        .arg(fixtures().join("toylib/src/toylib.c"))
        .arg("-o")
        .arg(dir.join("toylib.o")));
    std::fs::write(dir.join("main.c"), FILE_DRIVER).unwrap();
    let binary = dir.join("oracle");
    run(Command::new("clang")
        .args(flags)
        .arg(&include)
        .arg(fixtures().join(harness))
        .arg(dir.join("main.c"))
        .arg(dir.join("toylib.o"))
        .arg("-o")
        .arg(&binary));

    let cov = dir.join("sancov");
    std::fs::create_dir_all(&cov).unwrap();
    let mut args = Vec::new();
    for (i, s) in seeds.iter().enumerate() {
        let p = dir.join(format!("input-{i}"));
        std::fs::write(&p, s).unwrap();
        args.push(p);
    }
    run(Command::new(&binary)
        .args(&args)
        .env("ASAN_OPTIONS", format!("coverage=1:coverage_dir={}", cov.display())));
    let dumps: Vec<_> = std::fs::read_dir(&cov).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dumps.len(), 1, "{dumps:?}");

    let covered_pcs = run(Command::new(SANCOV).arg("-print").arg(&dumps[0]));
    let all_pcs = run(Command::new(SANCOV).arg("-print-coverage-pcs").arg(&binary));
    let covered = lines_of(&binary, &covered_pcs, function);
    let all = lines_of(&binary, &all_pcs, function);
    assert!(covered.is_subset(&all));
    covered.len() as f64 / all.len() as f64
}

fn dump_route(harness: &str, function: &str, seeds: &[Vec<u8>], dir: &Path) -> f64 {
    let build = toylib_build();
    let compiled = compile_candidate(&candidate(harness, function), &build, dir).unwrap();
    measure_coverage(&compiled.binary, seeds, &toylib_record(function), &build, dir).unwrap()
}

fn agree(harness: &str, function: &str, seeds: &[Vec<u8>]) -> f64 {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oracle = guard_route(harness, function, seeds, a.path());
    let measured = dump_route(harness, function, seeds, b.path());
    assert!(
        (oracle - measured).abs() < 1e-12,
        "{harness}: oracle {oracle}, measured {measured}"
    );
    measured
}

#[test]
fn both_routes_agree_on_parse_header() {
    if !std::path::Path::new(SANCOV).exists() || !tool_available("addr2line") {
        eprintln!("skipping: sancov or addr2line missing");
        return;
    }
    let defaults = oraclefuzz::gate::default_seeds();
    assert!((agree("gate/golden.c", "parse_header", &defaults) - 3.0 / 9.0).abs() < 1e-12);

    // Flag byte, then a header with fields and separators.
    let rich = vec![b"\x01TLa=1;b=2;".to_vec(), b"\x00TL;x".to_vec(), b"\x01TL;".to_vec()];
    let f = agree("gate/golden.c", "parse_header", &rich);
    assert!(f > 3.0 / 9.0, "{f}");
}

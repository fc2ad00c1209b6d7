mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use oraclefuzz::cwe::Cwe;
use oraclefuzz::gate::compile_candidate;
use oraclefuzz::inventory::{load_signature_spec_file, FunctionRecord, Param};
use oraclefuzz::oracle::{OracleConfig, OracleVerdict, TargetCandidate, TargetOracle, VerdictSource};
use oraclefuzz::synthesis::{
    build_prompt, template_driver, template_supported, AttemptRecord, DriverOptions, GenerationSession, PromptTemplate,
    Provenance,
};

const NOTE_415: &str = "Note: The function is a candidate for the vulnerability CWE-415 (Double Free)";

fn gd_target() -> TargetCandidate {
    let spec = load_signature_spec_file(&common::fixtures().join("signatures/gdImageWebpPtr.yaml")).unwrap();
    let hints = BTreeMap::from([(spec.function_name.clone(), spec.cwe_hints.clone())]);
    let oracle = TargetOracle::new(OracleConfig::default()).unwrap().with_hints(hints);
    oracle.rank(&[spec.to_record()]).unwrap().remove(0)
}

/// Byte offsets of each template section's first line in `text`.
fn section_offsets(text: &str, template: &PromptTemplate) -> Vec<usize> {
    template
        .sections()
        .iter()
        .map(|(name, body)| {
            let first = body.lines().find(|l| !l.trim().is_empty() && !l.contains('{')).unwrap();
            text.find(first).unwrap_or_else(|| panic!("section {name} missing"))
        })
        .collect()
}

#[test]
fn default_prompt_for_a_double_free_candidate_is_byte_exact() {
    let target = gd_target();
    assert_eq!(target.verdict.predicted_cwes, vec![Cwe::DOUBLE_FREE]);
    let prompt = build_prompt(&target, &PromptTemplate::default(), "").unwrap();
    let golden = std::fs::read_to_string(common::fixtures().join("prompts/gdImageWebpPtr.txt")).unwrap();
    assert_eq!(prompt.rendered_text, golden);
    assert_eq!(prompt.rendered_text.lines().filter(|l| *l == NOTE_415).count(), 1);
    assert!(prompt
        .rendered_text
        .contains("void *gdImageWebpPtr(gdImagePtr im, int *size)"));
    let offsets = section_offsets(&prompt.rendered_text, &PromptTemplate::default());
    assert!(offsets.windows(2).all(|w| w[0] < w[1]), "{offsets:?}");
}

fn cwe() -> impl Strategy<Value = Cwe> {
    prop::sample::select(vec![
        Cwe::DOUBLE_FREE,
        Cwe::USE_AFTER_FREE,
        Cwe::OUT_OF_BOUNDS_WRITE,
        Cwe::HEAP_OVERFLOW,
        Cwe::FORMAT_STRING,
        Cwe::NULL_DEREF,
    ])
}

fn target() -> impl Strategy<Value = TargetCandidate> {
    (
        "[a-z_][a-z0-9_]{0,12}",
        prop::collection::vec(
            (
                "[a-z][a-z0-9]{0,5}",
                prop::sample::select(vec!["int", "size_t", "const char *", "void *"]),
            ),
            0..4,
        ),
        prop::collection::btree_set(cwe(), 0..3),
    )
        .prop_map(|(name, params, cwes)| {
            let params: Vec<Param> = params
                .iter()
                .enumerate()
                .map(|(i, (n, t))| Param::new(format!("{n}{i}"), *t))
                .collect();
            let record = FunctionRecord {
                name: name.clone(),
                return_type: "int".into(),
                params,
                source_path: "gen.c".into(),
                line_span: (1, 1),
                body: "{}".into(),
                cyclomatic_complexity: 1,
                call_count: 0,
                variadic: false,
                function_pointer_params: false,
            };
            TargetCandidate {
                verdict: OracleVerdict {
                    function_name: name,
                    score: 0.5,
                    predicted_cwes: cwes.into_iter().collect(),
                    heuristic1: false,
                    heuristic2: false,
                    heuristic3_score: 0.5,
                    source: VerdictSource::BuiltinLexical,
                    cwes_from_hints: false,
                },
                record,
                rank: 1,
            }
        })
}

proptest! {
    #[test]
    fn prompts_are_deterministic_and_ordered(t in target(), extra in "[ -~]{0,60}") {
        let template = PromptTemplate::default();
        let a = build_prompt(&t, &template, &extra).unwrap();
        let b = build_prompt(&t, &template, &extra).unwrap();
        prop_assert_eq!(&a, &b);
        let offsets = section_offsets(&a.rendered_text, &template);
        prop_assert!(offsets.windows(2).all(|w| w[0] < w[1]));
        for c in &t.verdict.predicted_cwes {
            let note = format!("Note: The function is a candidate for the vulnerability {c} ({})", c.name().unwrap());
            prop_assert_eq!(a.rendered_text.lines().filter(|l| *l == note).count(), 1);
        }
        if t.verdict.predicted_cwes.is_empty() {
            prop_assert!(!a.rendered_text.contains("Note: The function is a candidate"));
        }
        prop_assert!(a.rendered_text.contains(&t.record.signature()));
    }

    #[test]
    fn attempt_indices_only_increase(max in 1u32..8, tries in prop::collection::vec(0u32..10, 0..20)) {
        let mut session = GenerationSession::new(gd_target(), max, 0.0);
        for attempt in tries {
            let expected_ok = attempt >= session.next_attempt() && attempt <= max;
            let result = session.record(AttemptRecord { attempt, prompt: None, candidate: None, gate: None, note: None });
            prop_assert_eq!(result.is_ok(), expected_ok);
            prop_assert!(session.check_invariants().is_ok());
            prop_assert!(session.history.len() <= max as usize);
        }
    }
}

#[test]
fn template_drivers_compile_for_every_supported_toylib_target() {
    if !common::tool_available("clang") {
        eprintln!("clang not found; skipping");
        return;
    }
    let options = DriverOptions {
        headers: vec!["toylib.h".into()],
        ..DriverOptions::default()
    };
    let build = common::toylib_build();
    let work = tempfile::tempdir().unwrap();
    let mut built = Vec::new();
    for record in common::toylib_records() {
        if !template_supported(&record, &options.type_aliases) {
            continue;
        }
        let candidate = template_driver(&record, &options).unwrap();
        assert_eq!(candidate.provenance, Provenance::Template);
        let compiled = compile_candidate(&candidate, &build, &work.path().join(&record.name));
        assert!(compiled.is_ok(), "{}: {:?}", record.name, compiled.err());
        built.push(record.name);
    }
    assert_eq!(
        built,
        ["parse_header", "decode_record", "copy_field", "checksum", "clamp_level"]
    );
}

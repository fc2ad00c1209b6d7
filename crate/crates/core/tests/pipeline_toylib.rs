mod common;

use std::path::Path;
use std::time::{Duration, Instant, SystemTime};

use oraclefuzz::campaign::ConfirmationOutcome;
use oraclefuzz::cwe::Cwe;
use oraclefuzz::oracle::Weights;
use oraclefuzz::pipeline::{Pipeline, PipelineConfig, PipelineError, RunOptions, REPORT_JSON};
use oraclefuzz::report::{parse_report, PipelineReport};
use oraclefuzz::synthesis::{BackendKind, Provenance};

fn options(force: bool) -> RunOptions {
    RunOptions {
        force,
        normalize_timestamps: true,
        ..RunOptions::default()
    }
}

fn pipeline(config: PipelineConfig) -> Pipeline {
    Pipeline::new(config, options(false))
}

/// What a run decided per target, leaving out paths, timings and fuzzer
/// luck.
fn decisions(report: &PipelineReport) -> Vec<String> {
    report
        .targets
        .iter()
        .map(|t| {
            format!(
                "{} rank={} predicted={:?} status={:?} provenance={:?} outcome={:?} matched={:?}",
                t.target.record.name,
                t.target.rank,
                t.target.verdict.predicted_cwes,
                t.session.status,
                t.session.accepted_provenance,
                t.confirmation.outcome,
                t.confirmation.matched_cwe,
            )
        })
        .collect()
}

fn assert_two_matching(report: &PipelineReport) {
    let matched: Vec<_> = report
        .targets
        .iter()
        .filter(|t| t.confirmation.outcome == ConfirmationOutcome::ConfirmedMatchingCwe)
        .map(|t| (t.target.record.name.as_str(), t.confirmation.matched_cwe))
        .collect();
    assert_eq!(
        matched,
        [
            ("decode_record", Some(Cwe::DOUBLE_FREE)),
            ("copy_field", Some(Cwe::OUT_OF_BOUNDS_WRITE))
        ],
        "{report:#?}"
    );
    assert_eq!(report.metrics.confirmed_matching, 2);
    report.check_invariants().unwrap();
    report.metrics.check_invariants().unwrap();
}

#[test]
fn inventory_counts_exclusions_and_missing_sources() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::toylib_config(&dir.path().join("a"));
    assert_eq!(pipeline(config.clone()).inventory().unwrap().len(), 5);
    assert!(matches!(
        pipeline(config.clone()).inventory(),
        Err(PipelineError::OutputExists(_))
    ));

    let mut excluded = common::toylib_config(&dir.path().join("b"));
    excluded.project.exclusion_list = vec!["checksum".into()];
    let names: Vec<_> = pipeline(excluded)
        .inventory()
        .unwrap()
        .into_iter()
        .map(|r| r.name)
        .collect();
    assert_eq!(names, ["parse_header", "decode_record", "copy_field", "clamp_level"]);

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let mut none = common::toylib_config(&dir.path().join("c"));
    none.project.source_dirs = vec![empty];
    let err = pipeline(none).inventory().unwrap_err();
    assert!(matches!(err, PipelineError::NoSourcesFound(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn rank_stage_selects_clamps_and_defers_to_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let p = pipeline(common::toylib_config(&dir.path().join("a")));
    assert!(matches!(p.rank(), Err(PipelineError::MissingStage(_, "inventory"))));
    p.inventory().unwrap();
    let names: Vec<_> = p.rank().unwrap().into_iter().map(|t| t.record.name).collect();
    assert_eq!(names, ["decode_record", "copy_field"]);

    let mut wide = common::toylib_config(&dir.path().join("b"));
    wide.oracle.top_k = 100;
    let p = pipeline(wide);
    p.inventory().unwrap();
    assert_eq!(p.rank().unwrap().len(), 5);

    if common::tool_available("python3") {
        let mut echo = common::toylib_config(&dir.path().join("c"));
        echo.oracle.weights = Weights::new(0.0, 0.0, 1.0);
        echo.oracle.external_oracle_command = Some(format!(
            "python3 {} clamp_level",
            common::fixtures().join("oracles/echo_oracle.py").display()
        ));
        let p = pipeline(echo);
        p.inventory().unwrap();
        let top = p.rank().unwrap().remove(0);
        assert_eq!((top.rank, top.record.name.as_str()), (1, "clamp_level"));
    }
}

fn mtime(path: &Path) -> SystemTime {
    std::fs::metadata(path).unwrap().modified().unwrap()
}

#[test]
fn run_confirms_both_seeded_bugs_and_resumes_without_new_campaigns() {
    let dir = tempfile::tempdir().unwrap();
    let workdir = dir.path().join("work");
    let start = Instant::now();
    let (report, stats) = pipeline(common::toylib_config(&workdir)).run().unwrap();
    assert!(start.elapsed() < Duration::from_secs(300));
    assert_eq!((stats.targets_processed, stats.targets_resumed), (2, 0));
    assert_two_matching(&report);
    for t in &report.targets {
        assert_eq!(t.session.accepted_provenance, Some(Provenance::Template));
        let target_dir = workdir.join("targets").join(&t.target.record.name);
        for c in &t.campaign.as_ref().unwrap().crashes {
            assert!(target_dir.join(c.artifact.as_ref().unwrap()).is_file());
        }
    }

    let campaigns = ["decode_record", "copy_field"].map(|n| workdir.join("targets").join(n).join("campaign.json"));
    let before = campaigns.each_ref().map(|p| mtime(p));
    let first = std::fs::read(workdir.join(REPORT_JSON)).unwrap();
    let (again, stats) = pipeline(common::toylib_config(&workdir)).run().unwrap();
    assert_eq!((stats.targets_processed, stats.targets_resumed), (0, 2));
    assert_eq!(campaigns.each_ref().map(|p| mtime(p)), before);
    assert_eq!(std::fs::read(workdir.join(REPORT_JSON)).unwrap(), first);
    assert_eq!(again, report);
    assert_eq!(parse_report(std::str::from_utf8(&first).unwrap()).unwrap(), report);
}

#[test]
fn stage_by_stage_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let (whole, _) = pipeline(common::toylib_config(&dir.path().join("run"))).run().unwrap();

    // A fresh pipeline per stage: only the files on disk carry state.
    let staged = dir.path().join("staged");
    let fresh = || pipeline(common::toylib_config(&staged));
    fresh().inventory().unwrap();
    fresh().rank().unwrap();
    assert!(matches!(fresh().fuzz(), Err(PipelineError::MissingStage(_, "synth"))));
    assert!(fresh().synth().unwrap().iter().all(Result::is_ok));
    assert!(matches!(fresh().fuzz(), Err(PipelineError::MissingStage(_, "gate"))));
    assert!(fresh().gate().unwrap().iter().all(Result::is_ok));
    fresh().fuzz().unwrap();
    let report = fresh().report().unwrap();
    assert_eq!(decisions(&report), decisions(&whole));
    assert_two_matching(&report);
    assert!(matches!(fresh().synth(), Err(PipelineError::OutputExists(_))));
}

#[test]
fn unreachable_backend_falls_back_to_the_template_driver() {
    let dir = tempfile::tempdir().unwrap();
    let (baseline, _) = pipeline(common::toylib_config(&dir.path().join("template")))
        .run()
        .unwrap();

    let mut config = common::toylib_config(&dir.path().join("http"));
    config.synthesis.backend.kind = BackendKind::Http;
    config.synthesis.backend.base_url = "http://127.0.0.1:9/v1".into();
    config.synthesis.backend.api_key_env = "PATH".into();
    config.synthesis.backend.timeout_seconds = 2;
    let (report, _) = pipeline(config).run().unwrap();
    assert_eq!(decisions(&report), decisions(&baseline));
    assert_two_matching(&report);
}

#[test]
fn replayed_completions_drive_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = common::toylib_config(&dir.path().join("work"));
    config.synthesis.backend.kind = BackendKind::Replay;
    config.synthesis.backend.replay_dir = Some(common::fixtures().join("replies"));
    config.synthesis.template_fallback = false;
    let (report, _) = pipeline(config).run().unwrap();
    assert_two_matching(&report);
    for t in &report.targets {
        assert_eq!(
            t.session.accepted_provenance,
            Some(Provenance::Llm),
            "{}",
            t.target.record.name
        );
        assert_eq!(t.session.attempts, 1);
        let replies = dir
            .path()
            .join("work/targets")
            .join(&t.target.record.name)
            .join("replies");
        assert_eq!(std::fs::read_dir(replies).unwrap().count(), 1);
    }
}

#[test]
fn report_validates_against_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let workdir = dir.path().join("work");
    let mut config = common::toylib_config(&workdir);
    // Every function plus one the template driver cannot serve, so crash-free
    // and failed targets appear alongside the confirmed ones.
    config.oracle.top_k = 100;
    config.project.signature_specs = vec![common::fixtures().join("signatures/gdImageWebpPtr.yaml")];
    config.campaign.time_budget_seconds = 2;
    let (report, _) = pipeline(config).run().unwrap();
    assert_eq!(report.targets.len(), 6);
    assert!(report.targets.iter().any(|t| t.error.is_some()));
    assert!(report
        .targets
        .iter()
        .any(|t| t.confirmation.outcome == ConfirmationOutcome::Unconfirmed && t.campaign.is_some()));
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json");
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(workdir.join(REPORT_JSON)).unwrap()).unwrap();
    if let Err(errors) = compiled.validate(&report) {
        let errors: Vec<String> = errors.map(|e| format!("{}: {e}", e.instance_path)).collect();
        panic!("{}", errors.join("\n"));
    };
}

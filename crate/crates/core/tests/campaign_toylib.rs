mod common;

use std::path::PathBuf;

use common::{candidate, toylib_gate, toylib_record};
use oraclefuzz::campaign::{
    confirm_verdict, load_crash_index, replay_crash, run_campaign, CampaignConfig, CampaignRequest, CampaignStatus,
    ConfirmationOutcome, CrashKind,
};
use oraclefuzz::cwe::Cwe;
use oraclefuzz::gate::{compile_candidate, gate};
use oraclefuzz::oracle::{rank_targets, OracleConfig};
use oraclefuzz::synthesis::{template_driver, DriverOptions};

fn driver_options() -> DriverOptions {
    DriverOptions {
        headers: vec!["toylib.h".into()],
        ..DriverOptions::default()
    }
}

/// Gated template harness for a toylib function.
fn harness(name: &str, dir: &std::path::Path) -> PathBuf {
    let c = template_driver(&toylib_record(name), &driver_options()).unwrap();
    let report = gate(&c, &toylib_gate(), &toylib_record(name), &dir.join("gate")).unwrap();
    assert!(report.accepted(), "{report:?}");
    report.binary.unwrap()
}

#[test]
fn double_free_is_found_stored_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let binary = harness("decode_record", dir.path());
    let target = toylib_record("decode_record");
    let build = toylib_gate().build;
    let config = CampaignConfig {
        time_budget_seconds: 30,
        grace_seconds: 5,
        ..CampaignConfig::default()
    };
    let req = CampaignRequest {
        harness: &binary,
        target: &target,
        predicted_cwes: &[Cwe::DOUBLE_FREE],
        target_dir: dir.path(),
        build: &build,
    };
    let result = run_campaign(&req, &config).unwrap();
    result.check_invariants().unwrap();
    assert_eq!(result.status, CampaignStatus::CrashFound);
    assert!(result.duration_seconds <= 35.0, "{}", result.duration_seconds);
    assert_eq!(
        result.max_input_len, 0,
        "size-sensitive prediction lifts the length cap"
    );
    assert!(result.raw_crash_count >= result.crashes.len());
    assert!(result.raw_crash_count <= config.max_crashes);
    assert_eq!(result.crashes[0].crash_kind, CrashKind::DoubleFree);
    assert_eq!(result.crashes[0].classified_cwe, Some(Cwe::DOUBLE_FREE));

    assert_eq!(load_crash_index(dir.path()).unwrap(), result.crashes);
    for crash in &result.crashes {
        let stored = std::fs::read(dir.path().join(crash.artifact.as_ref().unwrap())).unwrap();
        assert_eq!(stored, crash.input_bytes);
        for _ in 0..2 {
            let replayed = replay_crash(&binary, &stored, &build, dir.path())
                .unwrap()
                .expect("reproduces");
            assert_eq!(replayed.dedupe_key, crash.dedupe_key);
            assert_eq!(replayed.crash_kind, crash.crash_kind);
        }
    }

    let ranked = rank_targets(std::slice::from_ref(&target), &OracleConfig::default()).unwrap();
    let confirmation = confirm_verdict(&ranked[0].verdict, &result);
    assert_eq!(confirmation.outcome, ConfirmationOutcome::ConfirmedMatchingCwe);
    let matched = &result.crashes[confirmation.matched_crash.unwrap()];
    let input = std::fs::read(dir.path().join(matched.artifact.as_ref().unwrap())).unwrap();
    let replayed = replay_crash(&binary, &input, &build, dir.path()).unwrap().unwrap();
    assert_eq!(replayed.classified_cwe, confirmation.matched_cwe);
}

#[test]
fn crash_free_campaigns_respect_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let binary = harness("checksum", dir.path());
    let target = toylib_record("checksum");
    let build = toylib_gate().build;
    for budget in [1u64, 3] {
        let config = CampaignConfig {
            time_budget_seconds: budget,
            grace_seconds: 4,
            ..CampaignConfig::default()
        };
        let req = CampaignRequest {
            harness: &binary,
            target: &target,
            predicted_cwes: &[],
            target_dir: dir.path(),
            build: &build,
        };
        let result = run_campaign(&req, &config).unwrap();
        assert_eq!(
            result.status,
            CampaignStatus::BudgetExhaustedNoCrash,
            "{:?}",
            result.engine_error
        );
        assert!(
            result.duration_seconds <= (budget + 4) as f64,
            "{}",
            result.duration_seconds
        );
        assert!(result.executions > 0);
        assert!(result.final_coverage_fraction > 0.0);
        assert_eq!(result.max_input_len, 4096);
        result.check_invariants().unwrap();
    }
}

#[test]
fn hung_engine_is_stopped_within_the_grace_period() {
    let dir = tempfile::tempdir().unwrap();
    let compiled = compile_candidate(
        &candidate("gate/infinite_loop.c", "parse_header"),
        &toylib_gate().build,
        dir.path(),
    )
    .unwrap();
    let target = toylib_record("parse_header");
    let build = toylib_gate().build;
    let config = CampaignConfig {
        time_budget_seconds: 2,
        grace_seconds: 4,
        ..CampaignConfig::default()
    };
    let req = CampaignRequest {
        harness: &compiled.binary,
        target: &target,
        predicted_cwes: &[],
        target_dir: dir.path(),
        build: &build,
    };
    let result = run_campaign(&req, &config).unwrap();
    assert!(result.duration_seconds <= 6.0, "{}", result.duration_seconds);
    assert!(result.crashes.is_empty());
}

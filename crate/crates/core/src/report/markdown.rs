use std::fmt::Write;

use super::PipelineReport;
use crate::cwe::Cwe;

fn cwes(list: &[Cwe]) -> String {
    if list.is_empty() {
        "-".into()
    } else {
        list.iter().map(Cwe::to_string).collect::<Vec<_>>().join(", ")
    }
}

fn ratio(p: Option<f64>) -> String {
    p.map_or_else(|| "n/a".into(), |p| format!("{p:.3}"))
}

fn snake<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(serde_json::Value::Null) => "-".into(),
        Ok(other) => other.to_string(),
        Err(_) => "?".into(),
    }
}

fn cell(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

pub fn render_markdown(report: &PipelineReport) -> String {
    let mut out = String::new();
    let m = &report.metrics;
    let _ = writeln!(out, "# Run {}\n", report.run_id);
    let _ = writeln!(out, "- schema version: {}", report.schema_version);
    let _ = writeln!(out, "- started: {}", report.started_at);
    let _ = writeln!(out, "- ended: {}\n", report.ended_at);

    let _ = writeln!(out, "## Targets\n");
    let _ = writeln!(
        out,
        "| rank | function | score | predicted | attempts | harness | gate | crashes | outcome | matched |"
    );
    let _ = writeln!(out, "|---:|---|---:|---|---:|---|---|---:|---|---|");
    for t in &report.targets {
        let gate = t.gate_reports.last().map_or_else(
            || "-".into(),
            |g| match g.rejected_stage {
                None => "accepted".into(),
                Some(stage) => format!("rejected at {}", snake(&stage)),
            },
        );
        let crashes = t.campaign.as_ref().map_or(0, |c| c.crashes.len());
        let _ = writeln!(
            out,
            "| {} | {} | {:.3} | {} | {}/{} | {} | {} | {} | {} | {} |",
            t.target.rank,
            cell(&t.target.record.name),
            t.target.verdict.score,
            cwes(&t.target.verdict.predicted_cwes),
            t.session.attempts,
            t.session.max_attempts,
            snake(&t.session.accepted_provenance),
            gate,
            crashes,
            snake(&t.confirmation.outcome),
            t.confirmation.matched_cwe.map_or_else(|| "-".into(), |c| c.to_string()),
        );
    }

    let errors: Vec<_> = report
        .targets
        .iter()
        .filter_map(|t| Some((&t.target.record.name, t.error.as_ref()?)))
        .collect();
    if !errors.is_empty() {
        let _ = writeln!(out, "\n## Errors\n");
        for (name, e) in errors {
            let _ = writeln!(out, "- {}: {}", name, cell(e));
        }
    }

    let _ = writeln!(out, "\n## Metrics\n");
    let _ = writeln!(out, "| metric | value |");
    let _ = writeln!(out, "|---|---:|");
    let _ = writeln!(out, "| flagged | {} |", m.flagged_count);
    let _ = writeln!(out, "| confirmed, matching CWE | {} |", m.confirmed_matching);
    let _ = writeln!(out, "| confirmed, other crash | {} |", m.confirmed_other);
    let _ = writeln!(out, "| unconfirmed | {} |", m.unconfirmed);
    let _ = writeln!(out, "| oracle precision (any crash) | {} |", ratio(m.oracle_precision));
    let _ = writeln!(
        out,
        "| oracle precision (matching CWE) | {} |",
        ratio(m.precision_matching)
    );
    let _ = writeln!(out, "| gate acceptance rate | {:.3} |", m.gate_acceptance_rate);
    out
}

use std::fmt::Write;

use super::ScenarioReport;
use crate::terminal::Ballot;

/// Aligned plain-text rendering of a report.
pub fn render_table(report: &ScenarioReport, ballot: &Ballot) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "scenario {} (seed {})", report.name, report.seed);
    let _ = writeln!(w);
    let _ = writeln!(w, "{:<6} {:<24} {:>8}", "id", "candidate", "votes");
    for c in ballot.candidates() {
        let n = report.tally.counts.get(&c.id).copied().unwrap_or(0);
        let _ = writeln!(w, "{:<6} {:<24} {:>8}", c.id, c.name, n);
    }
    let _ = writeln!(w, "{:<31} {:>8}", "excluded", report.tally.excluded.len());
    for x in &report.tally.excluded {
        let _ = writeln!(w, "  {:?} device {} seq {}", x.reason, x.device_id, x.seq_no);
    }

    let s = &report.snapshot;
    let _ = writeln!(w);
    let _ = writeln!(w, "{:<24} {:>10}", "turnout", s.turnout);
    let _ = writeln!(w, "{:<24} {:>10}", "votes received", s.votes_received);
    let _ = writeln!(w, "{:<24} {:>10}", "auth success", s.auth_success);
    let _ = writeln!(w, "{:<24} {:>10}", "auth failure", s.auth_failure);
    let _ = writeln!(w, "{:<24} {:>10}", "false accepts", report.auth.false_accepts);
    let _ = writeln!(w, "{:<24} {:>10}", "false rejects", report.auth.false_rejects);
    let _ = writeln!(w, "{:<24} {:>10.1}", "mean cycle ms", report.timing.mean_cycle_ms);
    let _ = writeln!(w, "{:<24} {:>10}", "max cycle ms", report.timing.max_cycle_ms);
    let _ = writeln!(w, "{:<24} {:>10}", "max display ms", report.timing.max_display_latency_ms);
    let _ = writeln!(w, "{:<24} {:>10}", "anomalies", s.anomalies.len());
    for a in &s.anomalies {
        let _ = writeln!(w, "  {:?} device {} seq {:?} at {}", a.kind, a.device_id, a.seq_no, a.detected_at);
    }

    let _ = writeln!(w);
    let _ = writeln!(w, "{:<18} {:>7} {:>8} {:>8} {:>8} {:>10}", "device", "votes", "journal", "server", "batches", "sync ms");
    for d in &report.devices {
        let head = |h: Option<u32>| h.map_or("-".to_owned(), |h| h.to_string());
        let sync_ms: u64 = d.sync_cycles.iter().map(|c| c.duration_ms).sum();
        let _ = writeln!(
            w,
            "{:<18} {:>7} {:>8} {:>8} {:>8} {:>10}",
            d.device_id.to_hex(),
            d.votes_logged,
            head(d.journal_head),
            head(d.server_head),
            d.batches_accepted,
            sync_ms
        );
    }

    let _ = writeln!(w);
    for c in &report.checks {
        let _ = writeln!(w, "[{}] {:<20} {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
    out
}

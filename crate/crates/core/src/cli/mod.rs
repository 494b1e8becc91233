//! Operator commands behind the `rfid-vote` binary.
//!
//! Each command writes its normal output to `out` and returns a [`CliError`]
//! on failure. Exit codes: 0 success, 1 integrity or invariant failure,
//! 2 bad input. Keys are always read from files holding 32 hex digits, never
//! taken from the command line.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cardauth::{issue_card, load_registry, save_registry, CardImage, Uid, VoterRegistry};
use crate::crypto::{Aes128Key, Iv128};
use crate::server::{KeyRing, Server};
use crate::simnet::{render_table, simulate, ScenarioConfig, SimError};
use crate::terminal::Ballot;
use crate::wormlog::{check_consistency, verify_log_bytes, ChainStatus, MemStorage, SyncJournal, WormError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Integrity(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Integrity(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordKind {
    Tally,
    Snapshot,
    SyncReport,
    VerifyResult,
}

/// A machine-readable output record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub kind: RecordKind,
    pub payload: serde_json::Value,
    /// Simulated time the record describes; 0 for offline commands.
    pub emitted_at: u64,
}

impl ReportRecord {
    pub fn new(kind: RecordKind, payload: &impl Serialize, emitted_at: u64) -> Self {
        Self { kind, payload: serde_json::to_value(payload).expect("payload serializes"), emitted_at }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(input)
}

pub fn read_key_file(path: &Path) -> Result<Aes128Key, CliError> {
    let text = String::from_utf8(read(path)?).map_err(|_| CliError::Input(format!("{}: not text", path.display())))?;
    Aes128Key::from_hex(text.trim()).map_err(|_| CliError::Input(format!("{}: expected 32 hex digits", path.display())))
}

pub fn write_key_file(path: &Path, key: &Aes128Key) -> Result<(), CliError> {
    write(path, format!("{}\n", key.to_hex()))
}

pub fn read_keyring(path: &Path) -> Result<KeyRing, CliError> {
    serde_json::from_slice(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_ballot(path: &Path) -> Result<Ballot, CliError> {
    serde_json::from_slice(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Writes a fresh random key drawn from `seed`.
pub fn cmd_gen_key(seed: u64, out_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = [0u8; 16];
    rng.fill_bytes(&mut k);
    write_key_file(out_path, &Aes128Key::new(k))?;
    emit(out, &format!("wrote key to {}\n", out_path.display()))
}

/// `count` distinct 4-byte UIDs drawn from `seed`.
pub fn seeded_uids(count: usize, seed: u64) -> Vec<Uid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut uids = Vec::with_capacity(count);
    while uids.len() < count {
        let mut b = [0u8; 4];
        rng.fill_bytes(&mut b);
        let uid = Uid::new(&b).expect("4 bytes");
        if seen.insert(uid) {
            uids.push(uid);
        }
    }
    uids
}

pub fn cmd_gen_registry(count: usize, seed: u64, out_path: &Path, key_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let key = read_key_file(key_path)?;
    let registry = VoterRegistry::with_voters(&key, seeded_uids(count, seed)).map_err(input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut iv = [0u8; 16];
    rng.fill_bytes(&mut iv);
    let bytes = save_registry(&registry, &key, &Iv128::new(iv)).map_err(input)?;
    write(out_path, bytes)?;
    emit(out, &format!("wrote {count} voters to {}\n", out_path.display()))
}

pub fn cmd_issue_cards(
    registry_path: &Path,
    registry_key_path: &Path,
    card_key_path: &Path,
    out_path: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let registry_key = read_key_file(registry_key_path)?;
    let card_key = read_key_file(card_key_path)?;
    let registry = load_registry(&read(registry_path)?, &registry_key).map_err(|e| CliError::Integrity(e.to_string()))?;
    let cards: Vec<CardImage> = registry.iter().map(|(uid, _)| issue_card(*uid, &card_key)).collect();
    write(out_path, serde_json::to_string_pretty(&cards).expect("cards serialize"))?;
    emit(out, &format!("issued {} cards to {}\n", cards.len(), out_path.display()))
}

/// Runs a scenario and writes its artifacts into `out_dir`.
pub fn cmd_run(scenario_path: &Path, out_dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let text = String::from_utf8(read(scenario_path)?).map_err(input)?;
    let config = ScenarioConfig::from_json(&text).map_err(input)?;
    let run = simulate(&config, false).map_err(|e| match e {
        SimError::Config(m) => CliError::Input(m),
        other => CliError::Integrity(other.to_string()),
    })?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::Input(format!("{}: {e}", out_dir.display())))?;

    let report = &run.report;
    let table = render_table(report, &config.ballot);
    let finished = report.timing.finished_ms;
    write(&out_dir.join("report.json"), report.to_json())?;
    write(&out_dir.join("report.txt"), &table)?;
    write(&out_dir.join("tally.json"), ReportRecord::new(RecordKind::Tally, &report.tally, finished).to_json())?;
    write(&out_dir.join("snapshot.json"), ReportRecord::new(RecordKind::Snapshot, &report.snapshot, finished).to_json())?;
    let syncs: Vec<_> = report.devices.iter().map(|d| (d.device_id, &d.sync_cycles)).collect();
    write(&out_dir.join("sync.json"), ReportRecord::new(RecordKind::SyncReport, &syncs, finished).to_json())?;
    write(&out_dir.join("keyring.json"), serde_json::to_string_pretty(&run.keyring).expect("keyring serializes"))?;
    write(&out_dir.join("ballot.json"), serde_json::to_string_pretty(&config.ballot).expect("ballot serializes"))?;
    write(&out_dir.join("archive.bva"), &run.archive)?;
    for ((id, log), (_, journal)) in run.logs.iter().zip(&run.journals) {
        write(&out_dir.join(format!("{id}.bvl")), log)?;
        write(&out_dir.join(format!("{id}.bvj")), journal)?;
    }
    for (id, key) in &run.keyring.devices {
        write_key_file(&out_dir.join(format!("{id}.key")), key)?;
    }

    emit(out, &table)?;
    if report.all_passed() {
        Ok(())
    } else {
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::Integrity(format!("invariant checks failed: {}", failed.join(", "))))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyResult {
    pub ok: bool,
    pub entries: Option<u32>,
    pub tampered_at: Option<u32>,
    pub torn_tail_bytes: usize,
    pub journal_head: Option<u32>,
    pub problem: Option<String>,
}

/// Checks a device log and its sync journal offline.
pub fn cmd_verify_log(log_path: &Path, journal_path: &Path, key_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let key = read_key_file(key_path)?;
    let log = read(log_path)?;
    let journal = read(journal_path)?;

    let mut result = VerifyResult { ok: false, entries: None, tampered_at: None, torn_tail_bytes: 0, journal_head: None, problem: None };
    match verify_log_bytes(&log, &key) {
        Ok(ChainStatus::Intact { entries, torn_tail_bytes }) => {
            result.entries = Some(entries);
            result.torn_tail_bytes = torn_tail_bytes;
            match SyncJournal::open(MemStorage::from_bytes(journal)) {
                Ok(j) => {
                    result.journal_head = j.head();
                    match check_consistency(entries as usize, &j) {
                        Ok(()) => result.ok = true,
                        Err(e) => result.problem = Some(e.to_string()),
                    }
                }
                Err(e) => result.problem = Some(e.to_string()),
            }
        }
        Ok(ChainStatus::TamperedAt { seq_no }) | Err(WormError::TamperedAt { seq_no }) => result.tampered_at = Some(seq_no),
        Err(e) => result.problem = Some(e.to_string()),
    }

    let line = match (&result.tampered_at, &result.problem) {
        (Some(seq), _) => format!("TamperedAt{{seq: {seq}}}\n"),
        (None, Some(p)) => format!("Corrupt: {p}\n"),
        (None, None) => format!(
            "Ok: {} entries, journal head {}\n",
            result.entries.unwrap_or(0),
            result.journal_head.map_or("none".to_owned(), |h| h.to_string())
        ),
    };
    emit(out, &line)?;
    emit(out, &ReportRecord::new(RecordKind::VerifyResult, &result, 0).to_json())?;
    emit(out, "\n")?;
    if result.ok {
        Ok(())
    } else {
        Err(CliError::Integrity(line.trim_end().to_owned()))
    }
}

/// Tallies an archive of accepted entries.
pub fn cmd_report(archive_path: &Path, keyring_path: &Path, ballot_path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let keys = read_keyring(keyring_path)?;
    let ballot = read_ballot(ballot_path)?;
    let archive = read(archive_path)?;
    let mut server = Server::from_archive(&archive, keys).map_err(|e| CliError::Integrity(e.to_string()))?;
    let anomalies = server.detect_anomalies(0);
    let tally = server.tally(&ballot);

    let mut table = String::new();
    table.push_str(&format!("{:<6} {:<24} {:>8}\n", "id", "candidate", "votes"));
    for c in ballot.candidates() {
        table.push_str(&format!("{:<6} {:<24} {:>8}\n", c.id, c.name, tally.counts[&c.id]));
    }
    table.push_str(&format!("{:<31} {:>8}\n", "excluded", tally.excluded.len()));
    for x in &tally.excluded {
        table.push_str(&format!("  {:?} device {} seq {}\n", x.reason, x.device_id, x.seq_no));
    }
    table.push_str(&format!("{:<31} {:>8}\n", "anomalies", anomalies.len()));
    for a in &anomalies {
        table.push_str(&format!("  {:?} device {} seq {:?}\n", a.kind, a.device_id, a.seq_no));
    }
    emit(out, &table)?;

    #[derive(Serialize)]
    struct Payload<'a> {
        tally: &'a crate::server::TallyResult,
        anomalies: &'a [crate::server::Anomaly],
    }
    emit(out, &ReportRecord::new(RecordKind::Tally, &Payload { tally: &tally, anomalies: &anomalies }, 0).to_json())?;
    emit(out, "\n")
}

//! Central ingest, tally and monitoring.
//!
//! [`Server::ingest`] takes raw manifest bytes in the sync wire format and
//! either accepts every entry of the batch or none of them. Accepted
//! entries are kept per device in chain order; [`Server::tally`] decrypts
//! them on demand.

mod archive;
mod tally;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cardauth::Uid;
use crate::crypto::{Aes128Key, Digest256};
use crate::sync::{peek_batch_id, BatchManifest, NackReason, UploadOutcome};
use crate::wormlog::{DeviceId, LogEntry};

pub use archive::{decode_archive, ARCHIVE_MAGIC};
pub use tally::{ExcludeReason, Exclusion, TallyResult};

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("archive corrupt: {0}")]
    ArchiveCorrupt(String),
}

/// Keys the server holds: the election vote key and one MAC key per device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyRing {
    pub vote_key: Aes128Key,
    pub devices: BTreeMap<DeviceId, Aes128Key>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnomalyKind {
    DuplicateUidAcrossDevices,
    ChecksumFailure,
    ChainBreak,
    ReplayedBatch,
    TimestampRegression,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Anomaly {
    pub kind: AnomalyKind,
    pub device_id: DeviceId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq_no: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_id: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uid: Option<Uid>,
    /// Device whose earlier entry this one conflicts with.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_device_id: Option<DeviceId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other_seq_no: Option<u32>,
    pub detected_at: u64,
}

impl Anomaly {
    fn new(kind: AnomalyKind, device_id: DeviceId, detected_at: u64) -> Self {
        Self { kind, device_id, seq_no: None, batch_id: None, uid: None, other_device_id: None, other_seq_no: None, detected_at }
    }
}

/// Cumulative counters a terminal reports about itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Telemetry {
    pub auth_success: u64,
    pub auth_failure: u64,
    pub votes_committed: u64,
    pub cycle_count: u64,
    pub cycle_total_ms: u64,
}

impl Telemetry {
    fn merge(&mut self, other: &Telemetry) {
        self.auth_success = self.auth_success.max(other.auth_success);
        self.auth_failure = self.auth_failure.max(other.auth_failure);
        self.votes_committed = self.votes_committed.max(other.votes_committed);
        self.cycle_count = self.cycle_count.max(other.cycle_count);
        self.cycle_total_ms = self.cycle_total_ms.max(other.cycle_total_ms);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitoringSnapshot {
    pub turnout: u64,
    pub auth_success: u64,
    pub auth_failure: u64,
    pub votes_received: u64,
    pub anomalies: Vec<Anomaly>,
    pub avg_cycle_ms: f64,
    pub last_sync_at: BTreeMap<DeviceId, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DeviceHead {
    next_seq: u32,
    hash: Digest256,
}

/// The vote-bearing part of the server state. Nothing outside a successful
/// ingest modifies it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ledger {
    accepted: BTreeMap<(DeviceId, u32), LogEntry>,
    /// Acceptance order across devices.
    order: Vec<(DeviceId, u32)>,
    batch_index: BTreeMap<(DeviceId, u32), Digest256>,
    heads: BTreeMap<DeviceId, DeviceHead>,
    last_sync_at: BTreeMap<DeviceId, u64>,
}

#[derive(Debug, Clone)]
pub struct Server {
    keys: KeyRing,
    ledger: Ledger,
    anomalies: Vec<Anomaly>,
    telemetry: BTreeMap<DeviceId, Telemetry>,
}

impl Server {
    pub fn new(keys: KeyRing) -> Self {
        Self { keys, ledger: Ledger::default(), anomalies: Vec::new(), telemetry: BTreeMap::new() }
    }

    pub fn keys(&self) -> &KeyRing {
        &self.keys
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    /// Verifies and absorbs one uploaded manifest at time `now`.
    ///
    /// Checks run in order: structure, manifest checksum, batch id replay,
    /// device key, then per-entry hash, MAC and chain link against the stored
    /// head. A Nack never touches the ledger; integrity failures are logged
    /// as anomalies.
    pub fn ingest(&mut self, bytes: &[u8], now: u64) -> UploadOutcome {
        let manifest = match BatchManifest::decode(bytes) {
            Ok(m) => m,
            Err(_) => return UploadOutcome::Nack { batch_id: peek_batch_id(bytes), reason: NackReason::MalformedManifest },
        };
        let (device, batch_id) = (manifest.device_id, manifest.batch_id);
        let nack = |reason| UploadOutcome::Nack { batch_id, reason };

        if !manifest.checksum_ok() {
            let mut a = Anomaly::new(AnomalyKind::ChecksumFailure, device, now);
            a.batch_id = Some(batch_id);
            self.anomalies.push(a);
            return nack(NackReason::ChecksumMismatch);
        }
        if let Some(known) = self.ledger.batch_index.get(&(device, batch_id)) {
            if *known == manifest.manifest_checksum {
                return UploadOutcome::AckDuplicate { batch_id };
            }
            let mut a = Anomaly::new(AnomalyKind::ReplayedBatch, device, now);
            a.batch_id = Some(batch_id);
            a.seq_no = Some(manifest.first_seq());
            self.anomalies.push(a);
            return nack(NackReason::ChainBreak);
        }
        let Some(device_key) = self.keys.devices.get(&device) else {
            return nack(NackReason::MalformedManifest);
        };

        let mut head = self.ledger.heads.get(&device).copied().unwrap_or(DeviceHead { next_seq: 0, hash: Digest256::ZERO });
        for e in &manifest.entries {
            if e.seq_no != head.next_seq || e.prev_hash != head.hash || !e.is_sealed(device_key) {
                let mut a = Anomaly::new(AnomalyKind::ChainBreak, device, now);
                a.batch_id = Some(batch_id);
                a.seq_no = Some(e.seq_no);
                self.anomalies.push(a);
                return nack(NackReason::ChainBreak);
            }
            head = DeviceHead { next_seq: e.seq_no + 1, hash: e.entry_hash };
        }

        let ledger = &mut self.ledger;
        for e in manifest.entries {
            ledger.order.push((device, e.seq_no));
            ledger.accepted.insert((device, e.seq_no), e);
        }
        ledger.batch_index.insert((device, batch_id), manifest.manifest_checksum);
        ledger.heads.insert(device, head);
        ledger.last_sync_at.insert(device, now);
        UploadOutcome::Ack { batch_id }
    }

    /// Folds in a terminal's cumulative counters. Stale or reordered reports
    /// never lower a counter.
    pub fn record_telemetry(&mut self, device_id: DeviceId, telemetry: &Telemetry) {
        self.telemetry.entry(device_id).or_default().merge(telemetry);
    }

    pub fn accepted_len(&self) -> usize {
        self.ledger.order.len()
    }

    /// Accepted entries in acceptance order.
    pub fn accepted(&self) -> impl Iterator<Item = &LogEntry> + '_ {
        self.ledger.order.iter().map(|k| &self.ledger.accepted[k])
    }

    /// Entries of one device in seq order.
    pub fn device_entries(&self, device_id: DeviceId) -> impl Iterator<Item = &LogEntry> + '_ {
        self.ledger.accepted.range((device_id, 0)..=(device_id, u32::MAX)).map(|(_, e)| e)
    }

    /// Highest contiguous accepted seq for a device.
    pub fn device_head(&self, device_id: DeviceId) -> Option<u32> {
        self.ledger.heads.get(&device_id).map(|h| h.next_seq - 1)
    }

    pub fn batch_count(&self, device_id: DeviceId) -> usize {
        self.ledger.batch_index.range((device_id, 0)..=(device_id, u32::MAX)).count()
    }

    pub fn anomalies(&self) -> &[Anomaly] {
        &self.anomalies
    }

    /// Re-verifies every accepted entry from genesis. Returns the first
    /// failing `(device, seq)`.
    pub fn recheck(&self) -> Result<(), (DeviceId, u32)> {
        for (device, key) in &self.keys.devices {
            let mut prev = Digest256::ZERO;
            for (i, e) in self.device_entries(*device).enumerate() {
                if e.seq_no != i as u32 || e.prev_hash != prev || !e.is_sealed(key) {
                    return Err((*device, e.seq_no));
                }
                prev = e.entry_hash;
            }
        }
        match self.ledger.accepted.keys().find(|(d, _)| !self.keys.devices.contains_key(d)) {
            Some(&k) => Err(k),
            None => Ok(()),
        }
    }

    /// Returns all anomalies after scanning accepted entries for duplicate
    /// UIDs across devices and per-device timestamp regressions. Repeated
    /// calls add nothing new.
    pub fn detect_anomalies(&mut self, now: u64) -> Vec<Anomaly> {
        let mut found = Vec::new();

        for device in self.ledger.heads.keys() {
            let mut last: Option<u64> = None;
            for e in self.device_entries(*device) {
                if last.is_some_and(|t| e.timestamp < t) {
                    let mut a = Anomaly::new(AnomalyKind::TimestampRegression, *device, now);
                    a.seq_no = Some(e.seq_no);
                    found.push(a);
                }
                last = Some(e.timestamp);
            }
        }

        let mut first_seen: BTreeMap<Uid, (DeviceId, u32)> = BTreeMap::new();
        for e in self.accepted() {
            let Some(packet) = tally::decode_vote(&self.keys.vote_key, e) else { continue };
            match first_seen.get(&packet.uid) {
                None => {
                    first_seen.insert(packet.uid, (e.device_id, e.seq_no));
                }
                Some(&(dev, seq)) if dev != e.device_id => {
                    let mut a = Anomaly::new(AnomalyKind::DuplicateUidAcrossDevices, e.device_id, now);
                    a.seq_no = Some(e.seq_no);
                    a.uid = Some(packet.uid);
                    a.other_device_id = Some(dev);
                    a.other_seq_no = Some(seq);
                    found.push(a);
                }
                Some(_) => {}
            }
        }

        let key = |a: &Anomaly| (a.kind, a.device_id, a.seq_no, a.uid);
        let known: BTreeSet<_> = self
            .anomalies
            .iter()
            .filter(|a| matches!(a.kind, AnomalyKind::TimestampRegression | AnomalyKind::DuplicateUidAcrossDevices))
            .map(key)
            .collect();
        for a in found {
            if !known.contains(&key(&a)) {
                self.anomalies.push(a);
            }
        }
        self.anomalies.clone()
    }

    pub fn snapshot(&self) -> MonitoringSnapshot {
        let mut total = Telemetry::default();
        for t in self.telemetry.values() {
            total.auth_success += t.auth_success;
            total.auth_failure += t.auth_failure;
            total.votes_committed += t.votes_committed;
            total.cycle_count += t.cycle_count;
            total.cycle_total_ms += t.cycle_total_ms;
        }
        MonitoringSnapshot {
            turnout: total.votes_committed,
            auth_success: total.auth_success,
            auth_failure: total.auth_failure,
            votes_received: self.accepted_len() as u64,
            anomalies: self.anomalies.clone(),
            avg_cycle_ms: if total.cycle_count == 0 { 0.0 } else { total.cycle_total_ms as f64 / total.cycle_count as f64 },
            last_sync_at: self.ledger.last_sync_at.clone(),
        }
    }

    /// Accepted entries in acceptance order, as an archive file.
    pub fn write_archive(&self) -> Vec<u8> {
        archive::encode_archive(self.accepted())
    }

    /// Rebuilds a server from an archive, re-verifying every entry.
    pub fn from_archive(bytes: &[u8], keys: KeyRing) -> Result<Self, ServerError> {
        let entries = decode_archive(bytes)?;
        let mut server = Server::new(keys);
        for e in entries {
            let Some(key) = server.keys.devices.get(&e.device_id) else {
                return Err(ServerError::ArchiveCorrupt(format!("no key for device {}", e.device_id)));
            };
            let head = server.ledger.heads.get(&e.device_id).copied().unwrap_or(DeviceHead { next_seq: 0, hash: Digest256::ZERO });
            if e.seq_no != head.next_seq || e.prev_hash != head.hash || !e.is_sealed(key) {
                return Err(ServerError::ArchiveCorrupt(format!("device {} seq {}", e.device_id, e.seq_no)));
            }
            let k = (e.device_id, e.seq_no);
            server.ledger.heads.insert(e.device_id, DeviceHead { next_seq: e.seq_no + 1, hash: e.entry_hash });
            server.ledger.order.push(k);
            server.ledger.accepted.insert(k, e);
        }
        Ok(server)
    }
}

#[cfg(test)]
mod tests;

//! Batch manifests and their wire encoding.
//!
//! ```text
//! request  = "BVM1" || device_id(8) || batch_id:u32 || count:u16
//!            || entry_body* || manifest_checksum(32)
//! response = code:u8 || batch_id:u32
//! ```
//!
//! `entry_body` is the log record layout without `record_len`. The manifest
//! checksum is SHA-256 over `device_id || batch_id || entry_body*`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SyncError;
use crate::crypto::Digest256;
use crate::wormlog::record::BODY_OVERHEAD;
use crate::wormlog::{DeviceId, LogEntry};

pub const MANIFEST_MAGIC: &[u8; 4] = b"BVM1";
pub const RESPONSE_LEN: usize = 5;
/// Batch id reported when a request is too damaged to read one.
pub const UNKNOWN_BATCH: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchManifest {
    pub device_id: DeviceId,
    pub batch_id: u32,
    pub entries: Vec<LogEntry>,
    pub manifest_checksum: Digest256,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NackReason {
    ChecksumMismatch,
    ChainBreak,
    MalformedManifest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UploadOutcome {
    Ack { batch_id: u32 },
    AckDuplicate { batch_id: u32 },
    Nack { batch_id: u32, reason: NackReason },
    TransportDown,
}

impl UploadOutcome {
    pub fn is_ack(&self) -> bool {
        matches!(self, UploadOutcome::Ack { .. } | UploadOutcome::AckDuplicate { .. })
    }
}

fn manifest_checksum(device_id: &DeviceId, batch_id: u32, entries: &[LogEntry]) -> Digest256 {
    let mut h = Sha256::new();
    h.update(device_id.as_bytes());
    h.update(batch_id.to_le_bytes());
    let mut buf = Vec::new();
    for e in entries {
        buf.clear();
        e.encode_body(&mut buf);
        h.update(&buf);
    }
    Digest256::new(h.finalize().into())
}

fn contiguous(entries: &[LogEntry]) -> bool {
    entries.windows(2).all(|w| w[0].seq_no.checked_add(1) == Some(w[1].seq_no))
}

impl BatchManifest {
    pub fn new(device_id: DeviceId, batch_id: u32, entries: Vec<LogEntry>) -> Result<Self, SyncError> {
        if entries.is_empty() || entries.len() > u16::MAX as usize {
            return Err(SyncError::Contract("a batch holds 1..=65535 entries".into()));
        }
        if !contiguous(&entries) {
            return Err(SyncError::Contract("batch entries are not contiguous".into()));
        }
        if entries.iter().any(|e| e.device_id != device_id) {
            return Err(SyncError::Contract("entry from another device".into()));
        }
        let manifest_checksum = manifest_checksum(&device_id, batch_id, &entries);
        Ok(Self { device_id, batch_id, entries, manifest_checksum })
    }

    pub fn first_seq(&self) -> u32 {
        self.entries[0].seq_no
    }

    pub fn last_seq(&self) -> u32 {
        self.entries[self.entries.len() - 1].seq_no
    }

    pub fn checksum_ok(&self) -> bool {
        manifest_checksum(&self.device_id, self.batch_id, &self.entries) == self.manifest_checksum
    }

    pub fn encode(&self) -> Vec<u8> {
        let body: usize = self.entries.iter().map(|e| e.body_len()).sum();
        let mut out = Vec::with_capacity(18 + body + 32);
        out.extend_from_slice(MANIFEST_MAGIC);
        out.extend_from_slice(self.device_id.as_bytes());
        out.extend_from_slice(&self.batch_id.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u16).to_le_bytes());
        for e in &self.entries {
            e.encode_body(&mut out);
        }
        out.extend_from_slice(self.manifest_checksum.as_bytes());
        out
    }

    /// Parses a request. Structural damage is an error; a checksum that does
    /// not match is left for the caller to judge via [`checksum_ok`](Self::checksum_ok).
    pub fn decode(bytes: &[u8]) -> Result<Self, SyncError> {
        let malformed = |why: &'static str| SyncError::MalformedManifest(why);
        if bytes.len() < 18 + 32 || &bytes[..4] != MANIFEST_MAGIC {
            return Err(malformed("bad header"));
        }
        let device_id = DeviceId::from_slice(&bytes[4..12]).expect("8 bytes");
        let batch_id = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
        let count = u16::from_le_bytes([bytes[16], bytes[17]]) as usize;
        if count == 0 {
            return Err(malformed("empty batch"));
        }
        let body_end = bytes.len() - 32;
        let mut pos = 18;
        let mut entries = Vec::with_capacity(count.min(body_end / BODY_OVERHEAD));
        for _ in 0..count {
            if pos >= body_end {
                return Err(malformed("fewer entries than count"));
            }
            let (e, used) = LogEntry::decode_body(device_id, &bytes[pos..body_end]).map_err(|_| malformed("bad entry"))?;
            entries.push(e);
            pos += used;
        }
        if pos != body_end {
            return Err(malformed("trailing bytes"));
        }
        if !contiguous(&entries) {
            return Err(malformed("entries not contiguous"));
        }
        let manifest_checksum = Digest256::from_slice(&bytes[body_end..]).expect("32 bytes");
        Ok(Self { device_id, batch_id, entries, manifest_checksum })
    }
}

/// Best-effort batch id from a request that failed to parse.
pub fn peek_batch_id(bytes: &[u8]) -> u32 {
    bytes.get(12..16).map_or(UNKNOWN_BATCH, |b| u32::from_le_bytes(b.try_into().unwrap()))
}

pub fn encode_response(outcome: &UploadOutcome) -> [u8; RESPONSE_LEN] {
    let (code, batch_id) = match *outcome {
        UploadOutcome::Ack { batch_id } => (0u8, batch_id),
        UploadOutcome::AckDuplicate { batch_id } => (1, batch_id),
        UploadOutcome::Nack { batch_id, reason: NackReason::ChecksumMismatch } => (2, batch_id),
        UploadOutcome::Nack { batch_id, reason: NackReason::ChainBreak } => (3, batch_id),
        UploadOutcome::Nack { batch_id, reason: NackReason::MalformedManifest } => (4, batch_id),
        UploadOutcome::TransportDown => panic!("TransportDown is never sent on the wire"),
    };
    let mut out = [0u8; RESPONSE_LEN];
    out[0] = code;
    out[1..].copy_from_slice(&batch_id.to_le_bytes());
    out
}

pub fn decode_response(bytes: &[u8]) -> Option<UploadOutcome> {
    if bytes.len() != RESPONSE_LEN {
        return None;
    }
    let batch_id = u32::from_le_bytes(bytes[1..5].try_into().unwrap());
    Some(match bytes[0] {
        0 => UploadOutcome::Ack { batch_id },
        1 => UploadOutcome::AckDuplicate { batch_id },
        2 => UploadOutcome::Nack { batch_id, reason: NackReason::ChecksumMismatch },
        3 => UploadOutcome::Nack { batch_id, reason: NackReason::ChainBreak },
        4 => UploadOutcome::Nack { batch_id, reason: NackReason::MalformedManifest },
        _ => return None,
    })
}

/// Greedy fill: every batch is full except possibly the last, which is sent
/// short rather than held back.
pub fn build_batches(
    unsynced: &[LogEntry],
    device_id: DeviceId,
    next_batch_id: u32,
    batch_size: usize,
) -> Result<Vec<BatchManifest>, SyncError> {
    if batch_size == 0 {
        return Err(SyncError::Contract("batch size must be positive".into()));
    }
    if !contiguous(unsynced) {
        return Err(SyncError::Contract("unsynced entries are not contiguous".into()));
    }
    unsynced
        .chunks(batch_size)
        .enumerate()
        .map(|(i, chunk)| BatchManifest::new(device_id, next_batch_id + i as u32, chunk.to_vec()))
        .collect()
}

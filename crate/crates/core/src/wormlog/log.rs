use std::path::Path;

use super::record::{peek_ct_len, verify_entries, LogEntry, BODY_OVERHEAD, MAX_CIPHERTEXT_LEN};
use super::storage::{FileStorage, Storage};
use super::{DeviceId, WormError};
use crate::crypto::{Aes128Key, Digest256, Iv128};

pub const LOG_MAGIC: &[u8; 4] = b"BVL1";
pub const LOG_HEADER_LEN: usize = 12;

/// Result of walking a log from genesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainStatus {
    /// Every entry verifies. `torn_tail_bytes` counts trailing bytes of an
    /// incomplete final record, which `open` would heal.
    Intact {
        entries: u32,
        torn_tail_bytes: usize,
    },
    TamperedAt {
        seq_no: u32,
    },
}

impl ChainStatus {
    pub fn is_intact(&self) -> bool {
        matches!(self, ChainStatus::Intact { .. })
    }
}

#[derive(Debug)]
pub(crate) struct ParsedLog {
    pub device_id: Option<DeviceId>,
    pub entries: Vec<LogEntry>,
    pub good_len: usize,
    pub torn_bytes: usize,
}

pub(crate) enum ParseFailure {
    BadHeader,
    TamperedAt(u32),
}

/// Splits a log file into complete records. Only an incomplete final record
/// counts as torn; any inconsistency that a crash could not produce is
/// reported as tampering at that record.
pub(crate) fn parse_log(bytes: &[u8]) -> Result<ParsedLog, ParseFailure> {
    if bytes.len() < LOG_HEADER_LEN {
        let n = bytes.len().min(4);
        if bytes[..n] != LOG_MAGIC[..n] {
            return Err(ParseFailure::BadHeader);
        }
        return Ok(ParsedLog { device_id: None, entries: Vec::new(), good_len: 0, torn_bytes: bytes.len() });
    }
    if &bytes[..4] != LOG_MAGIC {
        return Err(ParseFailure::BadHeader);
    }
    let device_id = DeviceId::from_slice(&bytes[4..12]).expect("8 bytes");

    let mut entries = Vec::new();
    let mut pos = LOG_HEADER_LEN;
    let mut torn_bytes = 0;
    while pos < bytes.len() {
        let index = entries.len() as u32;
        let rest = &bytes[pos..];
        if rest.len() < 4 {
            torn_bytes = rest.len();
            break;
        }
        let record_len = u32::from_le_bytes(rest[..4].try_into().unwrap()) as usize;
        let body = &rest[4..];
        match peek_ct_len(body) {
            Some(ct_len) if record_len != BODY_OVERHEAD + ct_len => return Err(ParseFailure::TamperedAt(index)),
            Some(_) => {}
            // Not enough bytes to cross-check; a length that claims to
            // fit in what is present is impossible for a genuine record.
            None if record_len <= body.len() => return Err(ParseFailure::TamperedAt(index)),
            None => {
                torn_bytes = rest.len();
                break;
            }
        }
        if body.len() < record_len {
            torn_bytes = rest.len();
            break;
        }
        let (entry, used) = LogEntry::decode_body(device_id, &body[..record_len]).map_err(|_| ParseFailure::TamperedAt(index))?;
        debug_assert_eq!(used, record_len);
        entries.push(entry);
        pos += 4 + record_len;
    }
    Ok(ParsedLog { device_id: Some(device_id), entries, good_len: pos, torn_bytes })
}

/// Verifies a complete log image without modifying it.
pub fn verify_log_bytes(bytes: &[u8], device_key: &Aes128Key) -> Result<ChainStatus, WormError> {
    let parsed = match parse_log(bytes) {
        Ok(p) => p,
        Err(ParseFailure::BadHeader) => return Err(WormError::BadHeader),
        Err(ParseFailure::TamperedAt(seq_no)) => return Ok(ChainStatus::TamperedAt { seq_no }),
    };
    Ok(match verify_entries(&parsed.entries, device_key) {
        Ok(()) => ChainStatus::Intact { entries: parsed.entries.len() as u32, torn_tail_bytes: parsed.torn_bytes },
        Err(seq_no) => ChainStatus::TamperedAt { seq_no },
    })
}

/// Append-only vote log for one device.
///
/// There is no API for changing a persisted entry; the only writes are
/// appends of new records and truncation of a torn tail.
#[derive(Debug)]
pub struct VoteLog<S: Storage> {
    storage: S,
    device_id: DeviceId,
    device_key: Aes128Key,
    entries: Vec<LogEntry>,
    good_len: u64,
    needs_heal: bool,
}

impl VoteLog<FileStorage> {
    pub fn open_path(path: impl AsRef<Path>, device_id: DeviceId, device_key: Aes128Key) -> Result<Self, WormError> {
        Self::open(FileStorage::open(path)?, device_id, device_key)
    }
}

impl<S: Storage> VoteLog<S> {
    /// Opens or creates a log bound to `device_id`. A torn final record is
    /// truncated; interior damage fails with `TamperedAt`.
    pub fn open(storage: S, device_id: DeviceId, device_key: Aes128Key) -> Result<Self, WormError> {
        Self::open_inner(storage, Some(device_id), device_key)
    }

    /// Opens an existing log, taking the device id from its header.
    pub fn open_existing(storage: S, device_key: Aes128Key) -> Result<Self, WormError> {
        Self::open_inner(storage, None, device_key)
    }

    fn open_inner(mut storage: S, expected: Option<DeviceId>, device_key: Aes128Key) -> Result<Self, WormError> {
        let bytes = storage.read_all()?;
        let parsed = match parse_log(&bytes) {
            Ok(p) => p,
            Err(ParseFailure::BadHeader) => return Err(WormError::BadHeader),
            Err(ParseFailure::TamperedAt(seq_no)) => return Err(WormError::TamperedAt { seq_no }),
        };

        let device_id = match (parsed.device_id, expected) {
            (Some(found), Some(expected)) if found != expected => return Err(WormError::DeviceMismatch { expected, found }),
            (Some(found), _) => found,
            (None, Some(expected)) => {
                storage.truncate(0)?;
                let mut header = LOG_MAGIC.to_vec();
                header.extend_from_slice(expected.as_bytes());
                storage.append(&header)?;
                expected
            }
            (None, None) => return Err(WormError::BadHeader),
        };

        if let Err(seq_no) = verify_entries(&parsed.entries, &device_key) {
            return Err(WormError::TamperedAt { seq_no });
        }
        let good_len = parsed.good_len.max(LOG_HEADER_LEN) as u64;
        if parsed.torn_bytes > 0 && parsed.device_id.is_some() {
            storage.truncate(good_len)?;
        }
        Ok(Self { storage, device_id, device_key, entries: parsed.entries, good_len, needs_heal: false })
    }

    /// Appends a sealed entry and returns its sequence number. On failure
    /// the log is unchanged; partially written bytes are rolled back now or
    /// before the next append.
    pub fn append(&mut self, timestamp: u64, iv: Iv128, ciphertext: Vec<u8>) -> Result<u32, WormError> {
        if ciphertext.is_empty() || !ciphertext.len().is_multiple_of(16) || ciphertext.len() > MAX_CIPHERTEXT_LEN {
            return Err(WormError::InvalidCiphertext(ciphertext.len()));
        }
        if self.needs_heal {
            self.storage.truncate(self.good_len)?;
            self.needs_heal = false;
        }
        let seq_no = self.entries.len() as u32;
        let entry = LogEntry::seal(self.device_id, seq_no, timestamp, iv, ciphertext, self.head_hash(), &self.device_key);
        let mut buf = Vec::with_capacity(4 + entry.body_len());
        entry.encode_record(&mut buf);
        if let Err(e) = self.storage.append(&buf) {
            if self.storage.truncate(self.good_len).is_err() {
                self.needs_heal = true;
            }
            return Err(e.into());
        }
        self.good_len += buf.len() as u64;
        self.entries.push(entry);
        Ok(seq_no)
    }

    /// Re-reads storage and re-verifies every link and tag.
    pub fn verify_chain(&mut self) -> Result<ChainStatus, WormError> {
        let bytes = self.storage.read_all()?;
        if bytes.len() >= LOG_HEADER_LEN && bytes[4..12] != self.device_id.as_bytes()[..] && &bytes[..4] == LOG_MAGIC {
            return Ok(ChainStatus::TamperedAt { seq_no: 0 });
        }
        verify_log_bytes(&bytes, &self.device_key)
    }

    pub fn head_hash(&self) -> Digest256 {
        self.entries.last().map(|e| e.entry_hash).unwrap_or(Digest256::ZERO)
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn device_id(&self) -> DeviceId {
        self.device_id
    }

    pub fn storage(&self) -> &S {
        &self.storage
    }

    pub fn storage_mut(&mut self) -> &mut S {
        &mut self.storage
    }

    pub fn into_storage(self) -> S {
        self.storage
    }
}

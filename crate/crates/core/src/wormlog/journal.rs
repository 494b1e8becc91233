//! Sync journal: an append-only map from acknowledged sequence ranges to
//! batch ids, kept apart from the vote log so log entries never change
//! after a later batch assignment.
//!
//! File layout: `"BVJ1"` then repeated 52-byte records
//! `batch_id:u32 || first_seq:u32 || last_seq:u32 || acked_at:u64 || rec_checksum(32)`,
//! where `rec_checksum` is SHA-256 of the 20 bytes before it.

use serde::{Deserialize, Serialize};

use super::log::VoteLog;
use super::record::LogEntry;
use super::storage::Storage;
use super::WormError;
use crate::crypto::checksum;

pub const JOURNAL_MAGIC: &[u8; 4] = b"BVJ1";
const RECORD_LEN: usize = 20 + 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncJournalEntry {
    pub batch_id: u32,
    pub first_seq: u32,
    pub last_seq: u32,
    pub acked_at: u64,
}

impl SyncJournalEntry {
    fn encode(&self) -> [u8; RECORD_LEN] {
        let mut out = [0u8; RECORD_LEN];
        out[0..4].copy_from_slice(&self.batch_id.to_le_bytes());
        out[4..8].copy_from_slice(&self.first_seq.to_le_bytes());
        out[8..12].copy_from_slice(&self.last_seq.to_le_bytes());
        out[12..20].copy_from_slice(&self.acked_at.to_le_bytes());
        let sum = checksum(&out[..20]);
        out[20..].copy_from_slice(sum.as_bytes());
        out
    }

    fn decode(rec: &[u8]) -> Option<Self> {
        if checksum(&rec[..20]).as_bytes() != &rec[20..RECORD_LEN] {
            return None;
        }
        let u32_at = |i: usize| u32::from_le_bytes(rec[i..i + 4].try_into().unwrap());
        Some(Self {
            batch_id: u32_at(0),
            first_seq: u32_at(4),
            last_seq: u32_at(8),
            acked_at: u64::from_le_bytes(rec[12..20].try_into().unwrap()),
        })
    }

    fn same_assignment(&self, other: &Self) -> bool {
        self.batch_id == other.batch_id && self.first_seq == other.first_seq && self.last_seq == other.last_seq
    }
}

#[derive(Debug)]
pub struct SyncJournal<S: Storage> {
    storage: S,
    records: Vec<SyncJournalEntry>,
    good_len: u64,
}

impl<S: Storage> SyncJournal<S> {
    pub fn open(mut storage: S) -> Result<Self, WormError> {
        let bytes = storage.read_all()?;
        if bytes.len() < 4 {
            if bytes[..] != JOURNAL_MAGIC[..bytes.len()] {
                return Err(WormError::JournalCorrupt("bad header"));
            }
            storage.truncate(0)?;
            storage.append(JOURNAL_MAGIC)?;
            return Ok(Self { storage, records: Vec::new(), good_len: 4 });
        }
        if &bytes[..4] != JOURNAL_MAGIC {
            return Err(WormError::JournalCorrupt("bad header"));
        }
        let body = &bytes[4..];
        let mut journal = Self { storage, records: Vec::new(), good_len: 4 };
        for rec in body.chunks_exact(RECORD_LEN) {
            let entry = SyncJournalEntry::decode(rec).ok_or(WormError::JournalCorrupt("record checksum"))?;
            journal.check_next(&entry)?;
            journal.records.push(entry);
            journal.good_len += RECORD_LEN as u64;
        }
        if body.len() % RECORD_LEN != 0 {
            journal.storage.truncate(journal.good_len)?;
        }
        Ok(journal)
    }

    fn check_next(&self, entry: &SyncJournalEntry) -> Result<(), WormError> {
        let (want_batch, want_first) = match self.records.last() {
            None => (0, 0),
            Some(last) => (last.batch_id + 1, last.last_seq + 1),
        };
        if entry.last_seq < entry.first_seq {
            return Err(WormError::JournalCorrupt("inverted range"));
        }
        if entry.first_seq != want_first {
            return Err(WormError::JournalCorrupt("range not contiguous with head"));
        }
        if entry.batch_id != want_batch {
            return Err(WormError::JournalCorrupt("batch id not dense"));
        }
        Ok(())
    }

    /// Durably records that `first_seq..=last_seq` was acknowledged under
    /// `batch_id`. Repeating an identical assignment is a no-op.
    pub fn record_batch_assignment(&mut self, batch_id: u32, first_seq: u32, last_seq: u32, acked_at: u64) -> Result<(), WormError> {
        let entry = SyncJournalEntry { batch_id, first_seq, last_seq, acked_at };
        if self.records.iter().any(|r| r.same_assignment(&entry)) {
            return Ok(());
        }
        self.check_next(&entry)?;
        if let Err(e) = self.storage.append(&entry.encode()) {
            let _ = self.storage.truncate(self.good_len);
            return Err(e.into());
        }
        self.good_len += RECORD_LEN as u64;
        self.records.push(entry);
        Ok(())
    }

    /// Highest acknowledged sequence number.
    pub fn head(&self) -> Option<u32> {
        self.records.last().map(|r| r.last_seq)
    }

    pub fn next_batch_id(&self) -> u32 {
        self.records.last().map_or(0, |r| r.batch_id + 1)
    }

    pub fn records(&self) -> &[SyncJournalEntry] {
        &self.records
    }

    pub fn storage(&self) -> &S {
        &self.storage
    }

    pub fn storage_mut(&mut self) -> &mut S {
        &mut self.storage
    }
}

/// Entries after the journal head, in order.
pub fn read_unsynced<'a, L: Storage, J: Storage>(log: &'a VoteLog<L>, journal: &SyncJournal<J>) -> Result<&'a [LogEntry], WormError> {
    check_consistency(log.len(), journal)?;
    let start = journal.head().map_or(0, |h| h as usize + 1);
    Ok(&log.entries()[start..])
}

/// The journal must never claim more entries than the log holds.
pub fn check_consistency<J: Storage>(log_len: usize, journal: &SyncJournal<J>) -> Result<(), WormError> {
    match journal.head() {
        Some(h) if h as usize >= log_len => Err(WormError::JournalCorrupt("journal acknowledges entries missing from the log")),
        _ => Ok(()),
    }
}

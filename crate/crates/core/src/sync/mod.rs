//! Offline accumulation and batch synchronization.
//!
//! A [`SyncAgent`] turns unsynced log entries into checksummed batches and
//! uploads them in order over a [`Transport`]. Acks are journaled; anything
//! else leaves the batch pending, and a pending batch is resent unchanged
//! under the same batch id, so the server can absorb retransmissions by
//! `(device_id, batch_id)`.

mod manifest;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::wormlog::{read_unsynced, DeviceId, Storage, SyncJournal, VoteLog, WormError};

pub use manifest::{
    build_batches, decode_response, encode_response, peek_batch_id, BatchManifest, NackReason, UploadOutcome, MANIFEST_MAGIC, RESPONSE_LEN,
    UNKNOWN_BATCH,
};

#[derive(Debug, Error)]
pub enum SyncError {
    #[error("malformed manifest: {0}")]
    MalformedManifest(&'static str),
    #[error("sync storage error: {0}")]
    Storage(#[from] WormError),
    #[error("sync contract violated: {0}")]
    Contract(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkState {
    Up,
    Down,
}

/// What came back for one request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exchange {
    Reply {
        bytes: Vec<u8>,
        delay_ms: u64,
    },
    /// Sent, but no reply arrived (request or reply dropped).
    Lost {
        delay_ms: u64,
    },
    LinkDown,
}

pub trait Transport {
    fn probe(&mut self, at_ms: u64) -> LinkState;
    fn exchange(&mut self, at_ms: u64, request: &[u8]) -> Exchange;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncConfig {
    pub batch_size: usize,
    /// Transmission time of one full batch; shorter batches scale down.
    pub batch_transmit_ms: u64,
    /// Immediate resends after a checksum Nack before giving up the cycle.
    pub max_checksum_retries: u32,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self { batch_size: 20, batch_transmit_ms: 4_800, max_checksum_retries: 3 }
    }
}

impl SyncConfig {
    pub fn transmit_ms(&self, entries: usize) -> u64 {
        self.batch_transmit_ms * entries as u64 / self.batch_size as u64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncReport {
    pub started_at: u64,
    /// Upload attempts, retries included.
    pub batches_sent: u32,
    pub acked: u32,
    pub duplicates: u32,
    pub nacked: u32,
    pub lost: u32,
    pub entries_acked: u32,
    pub link_down: bool,
    pub duration_ms: u64,
}

/// Uploads one manifest and interprets the reply. Returns the outcome and
/// the simulated time the attempt took.
pub fn upload<T: Transport>(transport: &mut T, manifest: &BatchManifest, at_ms: u64, config: &SyncConfig) -> (UploadOutcome, u64, bool) {
    let transmit = config.transmit_ms(manifest.entries.len());
    match transport.exchange(at_ms, &manifest.encode()) {
        Exchange::LinkDown => (UploadOutcome::TransportDown, 0, false),
        Exchange::Lost { delay_ms } => (UploadOutcome::TransportDown, transmit + delay_ms, true),
        Exchange::Reply { bytes, delay_ms } => {
            let cost = transmit + delay_ms;
            match decode_response(&bytes) {
                Some(
                    o @ (UploadOutcome::Ack { batch_id } | UploadOutcome::AckDuplicate { batch_id } | UploadOutcome::Nack { batch_id, .. }),
                ) if batch_id == manifest.batch_id => (o, cost, false),
                // A reply for some other batch is as good as no reply.
                _ => (UploadOutcome::TransportDown, cost, true),
            }
        }
    }
}

/// Per-device synchronization state.
#[derive(Debug, Clone)]
pub struct SyncAgent {
    device_id: DeviceId,
    config: SyncConfig,
    pending: Vec<BatchManifest>,
}

impl SyncAgent {
    pub fn new(device_id: DeviceId, config: SyncConfig) -> Self {
        Self { device_id, config, pending: Vec::new() }
    }

    pub fn config(&self) -> &SyncConfig {
        &self.config
    }

    /// Batches built but not yet acknowledged.
    pub fn pending(&self) -> &[BatchManifest] {
        &self.pending
    }

    /// One synchronization pass at simulated time `now`.
    ///
    /// Does nothing when the link probes down. Otherwise uploads pending
    /// batches and then fresh ones, in order, journaling each ack, and stops
    /// at the first lost exchange or non-checksum Nack.
    pub fn sync_cycle<L: Storage, J: Storage, T: Transport>(
        &mut self,
        log: &VoteLog<L>,
        journal: &mut SyncJournal<J>,
        transport: &mut T,
        now: u64,
    ) -> Result<SyncReport, SyncError> {
        let mut report = SyncReport { started_at: now, ..SyncReport::default() };
        if transport.probe(now) == LinkState::Down {
            report.link_down = true;
            return Ok(report);
        }

        let unsynced = read_unsynced(log, journal)?;
        let next_unsynced = journal.head().map_or(0, |h| h + 1);
        self.pending.retain(|b| b.first_seq() >= next_unsynced);
        if self.pending.first().is_some_and(|b| b.first_seq() != next_unsynced) {
            // Pending batches no longer line up with the journal head.
            self.pending.clear();
        }
        let (from_seq, next_id) = match self.pending.last() {
            Some(b) => (b.last_seq() + 1, b.batch_id + 1),
            None => (next_unsynced, journal.next_batch_id()),
        };
        let fresh = &unsynced[(from_seq - next_unsynced) as usize..];
        self.pending.extend(build_batches(fresh, self.device_id, next_id, self.config.batch_size)?);

        let mut elapsed = 0u64;
        while let Some(batch) = self.pending.first() {
            let mut batch = batch.clone();
            let mut retries = 0;
            loop {
                let (outcome, cost, lost) = upload(transport, &batch, now + elapsed, &self.config);
                if outcome != UploadOutcome::TransportDown || lost {
                    report.batches_sent += 1;
                }
                elapsed += cost;
                match outcome {
                    UploadOutcome::Ack { .. } | UploadOutcome::AckDuplicate { .. } => {
                        if matches!(outcome, UploadOutcome::AckDuplicate { .. }) {
                            report.duplicates += 1;
                        }
                        report.duration_ms = elapsed;
                        journal.record_batch_assignment(batch.batch_id, batch.first_seq(), batch.last_seq(), now + elapsed)?;
                        report.acked += 1;
                        report.entries_acked += batch.entries.len() as u32;
                        self.pending.remove(0);
                        break;
                    }
                    UploadOutcome::Nack { reason: NackReason::ChecksumMismatch, .. } if retries < self.config.max_checksum_retries => {
                        report.nacked += 1;
                        retries += 1;
                        let (first, last) = (batch.first_seq() as usize, batch.last_seq() as usize);
                        batch = BatchManifest::new(self.device_id, batch.batch_id, log.entries()[first..=last].to_vec())?;
                        self.pending[0] = batch.clone();
                    }
                    UploadOutcome::Nack { .. } => {
                        report.nacked += 1;
                        report.duration_ms = elapsed;
                        return Ok(report);
                    }
                    UploadOutcome::TransportDown => {
                        if lost {
                            report.lost += 1;
                        } else {
                            report.link_down = true;
                        }
                        report.duration_ms = elapsed;
                        return Ok(report);
                    }
                }
            }
        }
        report.duration_ms = elapsed;
        Ok(report)
    }
}

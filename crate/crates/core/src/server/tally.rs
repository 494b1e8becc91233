use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::Server;
use crate::crypto::{decrypt_packet, Aes128Key};
use crate::terminal::{parse_vote_packet, Ballot, VotePacket};
use crate::wormlog::{DeviceId, LogEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExcludeReason {
    PaddingError,
    MalformedPacket,
    UnknownCandidate,
    DuplicateUid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Exclusion {
    pub reason: ExcludeReason,
    pub device_id: DeviceId,
    pub seq_no: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyResult {
    /// Every ballot candidate appears, with zero if nobody chose it.
    pub counts: BTreeMap<u16, u64>,
    pub excluded: Vec<Exclusion>,
}

impl TallyResult {
    pub fn counted(&self) -> u64 {
        self.counts.values().sum()
    }
}

fn classify(vote_key: &Aes128Key, e: &LogEntry) -> Result<VotePacket, ExcludeReason> {
    let plain = decrypt_packet(vote_key, &e.iv, &e.ciphertext).map_err(|_| ExcludeReason::PaddingError)?;
    parse_vote_packet(&plain).map_err(|_| ExcludeReason::MalformedPacket)
}

pub(super) fn decode_vote(vote_key: &Aes128Key, e: &LogEntry) -> Option<VotePacket> {
    classify(vote_key, e).ok()
}

impl Server {
    /// Decrypts and counts accepted entries in acceptance order. The first
    /// accepted vote for a UID counts; any later one is excluded.
    pub fn tally(&self, ballot: &Ballot) -> TallyResult {
        let mut result = TallyResult { counts: ballot.candidates().iter().map(|c| (c.id, 0)).collect(), excluded: Vec::new() };
        let mut seen = BTreeSet::new();
        for e in self.accepted() {
            let verdict = classify(&self.keys.vote_key, e).and_then(|p| {
                if !ballot.contains(p.candidate_id) {
                    Err(ExcludeReason::UnknownCandidate)
                } else if !seen.insert(p.uid) {
                    Err(ExcludeReason::DuplicateUid)
                } else {
                    Ok(p.candidate_id)
                }
            });
            match verdict {
                Ok(id) => *result.counts.get_mut(&id).expect("ballot candidate") += 1,
                Err(reason) => result.excluded.push(Exclusion { reason, device_id: e.device_id, seq_no: e.seq_no }),
            }
        }
        result
    }
}

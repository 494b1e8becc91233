//! Vote packet: `uid_len:u8 || uid || candidate_id:u16 || timestamp:u64`.

use serde::{Deserialize, Serialize};

use super::TerminalError;
use crate::cardauth::Uid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotePacket {
    pub uid: Uid,
    pub candidate_id: u16,
    pub timestamp: u64,
}

pub fn build_vote_packet(uid: &Uid, candidate_id: u16, timestamp: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(1 + uid.len() + 10);
    out.push(uid.len() as u8);
    out.extend_from_slice(uid.as_bytes());
    out.extend_from_slice(&candidate_id.to_le_bytes());
    out.extend_from_slice(&timestamp.to_le_bytes());
    out
}

pub fn parse_vote_packet(bytes: &[u8]) -> Result<VotePacket, TerminalError> {
    let uid_len = *bytes.first().ok_or(TerminalError::MalformedPacket)? as usize;
    if bytes.len() != 1 + uid_len + 10 {
        return Err(TerminalError::MalformedPacket);
    }
    let uid = Uid::new(&bytes[1..1 + uid_len]).map_err(|_| TerminalError::MalformedPacket)?;
    let rest = &bytes[1 + uid_len..];
    Ok(VotePacket {
        uid,
        candidate_id: u16::from_le_bytes([rest[0], rest[1]]),
        timestamp: u64::from_le_bytes(rest[2..10].try_into().unwrap()),
    })
}

impl VotePacket {
    pub fn to_bytes(&self) -> Vec<u8> {
        build_vote_packet(&self.uid, self.candidate_id, self.timestamp)
    }
}

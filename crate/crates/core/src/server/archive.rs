//! Archive of accepted entries.
//!
//! ```text
//! archive = "BVA1" || (device_id(8) || record)*
//! ```
//!
//! `record` is the vote log record layout. Records appear in acceptance order.

use super::ServerError;
use crate::wormlog::{DeviceId, LogEntry};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"BVA1";

pub(super) fn encode_archive<'a>(entries: impl Iterator<Item = &'a LogEntry>) -> Vec<u8> {
    let mut out = ARCHIVE_MAGIC.to_vec();
    for e in entries {
        out.extend_from_slice(e.device_id.as_bytes());
        e.encode_record(&mut out);
    }
    out
}

pub fn decode_archive(bytes: &[u8]) -> Result<Vec<LogEntry>, ServerError> {
    let corrupt = |at: usize, why: &str| ServerError::ArchiveCorrupt(format!("{why} at byte {at}"));
    if bytes.get(..4) != Some(ARCHIVE_MAGIC.as_slice()) {
        return Err(corrupt(0, "bad header"));
    }
    let mut pos = 4;
    let mut entries = Vec::new();
    while pos < bytes.len() {
        let Some(head) = bytes.get(pos..pos + 12) else {
            return Err(corrupt(pos, "truncated record"));
        };
        let device_id = DeviceId::from_slice(&head[..8]).expect("8 bytes");
        let record_len = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        let body = bytes.get(pos + 12..pos + 12 + record_len).ok_or_else(|| corrupt(pos, "truncated record"))?;
        match LogEntry::decode_body(device_id, body) {
            Ok((e, used)) if used == record_len => entries.push(e),
            _ => return Err(corrupt(pos, "bad record")),
        }
        pos += 12 + record_len;
    }
    Ok(entries)
}

//! Log entry layout.
//!
//! ```text
//! record  = record_len:u32 || body
//! body    = seq_no:u32 || timestamp:u64 || iv(16) || ct_len:u16 || ciphertext
//!           || prev_hash(32) || entry_hash(32) || mac(32)
//! hashed  = device_id(8) || seq_no || timestamp || iv || ct_len || ciphertext
//! ```
//!
//! All integers are little-endian. `record_len` counts the body bytes.

use serde::{Deserialize, Serialize};

use crate::crypto::{chain_hash, device_mac, verify_device_mac, Aes128Key, Digest256, Iv128};

fixed_bytes!(
    /// Identifies a voting terminal.
    DeviceId,
    8
);

impl std::fmt::Debug for DeviceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DeviceId({})", self.to_hex())
    }
}

impl std::fmt::Display for DeviceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Fixed body bytes around the ciphertext.
pub const BODY_OVERHEAD: usize = 4 + 8 + 16 + 2 + 32 * 3;
pub const MAX_CIPHERTEXT_LEN: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub device_id: DeviceId,
    pub seq_no: u32,
    pub timestamp: u64,
    pub iv: Iv128,
    #[serde(with = "crate::hexser::vec")]
    pub ciphertext: Vec<u8>,
    pub prev_hash: Digest256,
    pub entry_hash: Digest256,
    pub mac: Digest256,
}

/// Why a body failed to decode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeError {
    /// Input ends before the body does.
    Truncated,
    /// Structurally invalid (bad ciphertext length).
    Invalid,
}

impl LogEntry {
    /// Builds a correctly linked and tagged entry.
    pub fn seal(
        device_id: DeviceId,
        seq_no: u32,
        timestamp: u64,
        iv: Iv128,
        ciphertext: Vec<u8>,
        prev_hash: Digest256,
        device_key: &Aes128Key,
    ) -> Self {
        let mut e = LogEntry { device_id, seq_no, timestamp, iv, ciphertext, prev_hash, entry_hash: Digest256::ZERO, mac: Digest256::ZERO };
        e.entry_hash = e.compute_hash();
        e.mac = device_mac(device_key, &e.entry_hash);
        e
    }

    pub fn hashed_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(38 + self.ciphertext.len());
        out.extend_from_slice(self.device_id.as_bytes());
        out.extend_from_slice(&self.seq_no.to_le_bytes());
        out.extend_from_slice(&self.timestamp.to_le_bytes());
        out.extend_from_slice(self.iv.as_bytes());
        out.extend_from_slice(&(self.ciphertext.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn compute_hash(&self) -> Digest256 {
        chain_hash(&self.prev_hash, &self.hashed_bytes())
    }

    /// Hash and MAC both check out. Does not look at the chain link.
    pub fn is_sealed(&self, device_key: &Aes128Key) -> bool {
        self.compute_hash() == self.entry_hash && verify_device_mac(device_key, &self.entry_hash, &self.mac)
    }

    pub fn body_len(&self) -> usize {
        BODY_OVERHEAD + self.ciphertext.len()
    }

    pub fn encode_body(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.seq_no.to_le_bytes());
        out.extend_from_slice(&self.timestamp.to_le_bytes());
        out.extend_from_slice(self.iv.as_bytes());
        out.extend_from_slice(&(self.ciphertext.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.ciphertext);
        out.extend_from_slice(self.prev_hash.as_bytes());
        out.extend_from_slice(self.entry_hash.as_bytes());
        out.extend_from_slice(self.mac.as_bytes());
    }

    pub fn encode_record(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.body_len() as u32).to_le_bytes());
        self.encode_body(out);
    }

    /// Decodes one body from the front of `buf`, returning the entry and the
    /// number of bytes consumed.
    pub fn decode_body(device_id: DeviceId, buf: &[u8]) -> Result<(LogEntry, usize), DecodeError> {
        let mut r = Reader { buf, pos: 0 };
        let seq_no = r.u32()?;
        let timestamp = r.u64()?;
        let iv = Iv128::new(r.array()?);
        let ct_len = r.u16()? as usize;
        if ct_len == 0 || !ct_len.is_multiple_of(16) || ct_len > MAX_CIPHERTEXT_LEN {
            return Err(DecodeError::Invalid);
        }
        let ciphertext = r.take(ct_len)?.to_vec();
        let prev_hash = Digest256::new(r.array()?);
        let entry_hash = Digest256::new(r.array()?);
        let mac = Digest256::new(r.array()?);
        Ok((LogEntry { device_id, seq_no, timestamp, iv, ciphertext, prev_hash, entry_hash, mac }, r.pos))
    }
}

/// Peeks the ciphertext length of a body, if enough bytes are present.
pub(crate) fn peek_ct_len(body: &[u8]) -> Option<usize> {
    body.get(28..30).map(|b| u16::from_le_bytes([b[0], b[1]]) as usize)
}

pub(crate) struct Reader<'a> {
    pub buf: &'a [u8],
    pub pos: usize,
}

impl<'a> Reader<'a> {
    pub fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let end = self.pos.checked_add(n).ok_or(DecodeError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(DecodeError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    pub fn u16(&mut self) -> Result<u16, DecodeError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32, DecodeError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, DecodeError> {
        Ok(u64::from_le_bytes(self.array()?))
    }
}

/// Checks hashes, MACs, dense sequence numbers and prev-links from genesis.
/// Returns the sequence position of the first bad entry.
pub fn verify_entries(entries: &[LogEntry], device_key: &Aes128Key) -> Result<(), u32> {
    let mut prev = Digest256::ZERO;
    for (i, e) in entries.iter().enumerate() {
        let i = i as u32;
        if e.seq_no != i || e.prev_hash != prev || !e.is_sealed(device_key) {
            return Err(i);
        }
        prev = e.entry_hash;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(seq: u32, prev: Digest256) -> LogEntry {
        LogEntry::seal(
            DeviceId::new(*b"TERM0001"),
            seq,
            1000 + seq as u64,
            Iv128::new([seq as u8; 16]),
            vec![0xab; 16],
            prev,
            &Aes128Key::new([5; 16]),
        )
    }

    #[test]
    fn body_roundtrip() {
        let e = entry(3, Digest256::ZERO);
        let mut buf = Vec::new();
        e.encode_body(&mut buf);
        assert_eq!(buf.len(), e.body_len());
        assert_eq!(peek_ct_len(&buf), Some(16));
        let (d, used) = LogEntry::decode_body(e.device_id, &buf).unwrap();
        assert_eq!(d, e);
        assert_eq!(used, buf.len());

        for n in 0..buf.len() {
            assert_eq!(LogEntry::decode_body(e.device_id, &buf[..n]), Err(DecodeError::Truncated));
        }
    }

    #[test]
    fn bad_ct_len_is_invalid() {
        let e = entry(0, Digest256::ZERO);
        let mut buf = Vec::new();
        e.encode_body(&mut buf);
        buf[28] = 15;
        assert_eq!(LogEntry::decode_body(e.device_id, &buf), Err(DecodeError::Invalid));
    }

    #[test]
    fn verify_finds_first_break() {
        let k = Aes128Key::new([5; 16]);
        let mut v = vec![entry(0, Digest256::ZERO)];
        for i in 1..5 {
            let prev = v.last().unwrap().entry_hash;
            v.push(entry(i, prev));
        }
        assert_eq!(verify_entries(&v, &k), Ok(()));
        v[2].timestamp += 1;
        assert_eq!(verify_entries(&v, &k), Err(2));
        assert_eq!(verify_entries(&v, &Aes128Key::new([6; 16])), Err(0));
    }
}

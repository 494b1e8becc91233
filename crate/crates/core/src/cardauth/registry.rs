use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{RegistryError, Uid};
use crate::crypto::{checksum, decrypt_packet, encrypt_packet, hmac_sha256, Aes128Key, Digest256, Iv128};

pub const REGISTRY_MAGIC: &[u8; 4] = b"BVR1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoterStatus {
    NotVoted,
    Voted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoterRecord {
    pub status: VoterStatus,
    pub voted_at: Option<u64>,
}

/// The terminal-local whitelist. Status only moves NotVoted -> Voted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoterRegistry {
    entries: BTreeMap<Uid, VoterRecord>,
    key_fingerprint: Digest256,
}

fn fingerprint(key: &Aes128Key) -> Digest256 {
    hmac_sha256(key.as_bytes(), b"BVR1 registry key fingerprint")
}

impl VoterRegistry {
    pub fn new(registry_key: &Aes128Key) -> Self {
        Self { entries: BTreeMap::new(), key_fingerprint: fingerprint(registry_key) }
    }

    pub fn with_voters(registry_key: &Aes128Key, uids: impl IntoIterator<Item = Uid>) -> Result<Self, RegistryError> {
        let mut reg = Self::new(registry_key);
        for uid in uids {
            reg.register(uid)?;
        }
        Ok(reg)
    }

    pub fn register(&mut self, uid: Uid) -> Result<(), RegistryError> {
        if self.entries.contains_key(&uid) {
            return Err(RegistryError::DuplicateVoter(uid));
        }
        self.entries.insert(uid, VoterRecord { status: VoterStatus::NotVoted, voted_at: None });
        Ok(())
    }

    pub fn get(&self, uid: &Uid) -> Option<&VoterRecord> {
        self.entries.get(uid)
    }

    pub fn mark_voted(&mut self, uid: &Uid, at: u64) -> Result<(), RegistryError> {
        let rec = self.entries.get_mut(uid).ok_or(RegistryError::UnknownVoter(*uid))?;
        if rec.status == VoterStatus::Voted {
            return Err(RegistryError::AlreadyVoted(*uid));
        }
        *rec = VoterRecord { status: VoterStatus::Voted, voted_at: Some(at) };
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Uid, &VoterRecord)> {
        self.entries.iter()
    }

    pub fn voted_count(&self) -> usize {
        self.entries.values().filter(|r| r.status == VoterStatus::Voted).count()
    }

    pub fn key_fingerprint(&self) -> &Digest256 {
        &self.key_fingerprint
    }
}

/// `"BVR1" || iv || AES-CBC(plaintext)`, where the plaintext ends in a
/// checksum of everything before it.
pub fn save_registry(registry: &VoterRegistry, registry_key: &Aes128Key, iv: &Iv128) -> Result<Vec<u8>, RegistryError> {
    if fingerprint(registry_key) != registry.key_fingerprint {
        return Err(RegistryError::KeyMismatch);
    }
    let mut plain = Vec::with_capacity(4 + registry.len() * 20 + 32);
    plain.extend_from_slice(&(registry.len() as u32).to_le_bytes());
    for (uid, rec) in &registry.entries {
        plain.push(uid.len() as u8);
        plain.extend_from_slice(uid.as_bytes());
        let (status, at) = match rec.status {
            VoterStatus::NotVoted => (0u8, 0u64),
            VoterStatus::Voted => (1u8, rec.voted_at.unwrap_or(0)),
        };
        plain.push(status);
        plain.extend_from_slice(&at.to_le_bytes());
    }
    let sum = checksum(&plain);
    plain.extend_from_slice(sum.as_bytes());

    let ct = encrypt_packet(registry_key, iv, &plain).expect("plaintext is never empty");
    let mut out = Vec::with_capacity(4 + 16 + ct.len());
    out.extend_from_slice(REGISTRY_MAGIC);
    out.extend_from_slice(iv.as_bytes());
    out.extend_from_slice(&ct);
    Ok(out)
}

pub fn load_registry(bytes: &[u8], registry_key: &Aes128Key) -> Result<VoterRegistry, RegistryError> {
    use RegistryError::RegistryCorrupt;

    if bytes.len() < 20 || &bytes[..4] != REGISTRY_MAGIC {
        return Err(RegistryCorrupt("bad header"));
    }
    let iv = Iv128::from_slice(&bytes[4..20]).expect("16 bytes");
    let plain = decrypt_packet(registry_key, &iv, &bytes[20..]).map_err(|_| RegistryCorrupt("decryption failed"))?;
    if plain.len() < 36 {
        return Err(RegistryCorrupt("truncated"));
    }
    let (body, sum) = plain.split_at(plain.len() - 32);
    if checksum(body).as_bytes() != sum {
        return Err(RegistryCorrupt("checksum mismatch"));
    }

    let count = u32::from_le_bytes(body[..4].try_into().unwrap()) as usize;
    let mut reg = VoterRegistry::new(registry_key);
    let mut pos = 4;
    for _ in 0..count {
        let uid_len = *body.get(pos).ok_or(RegistryCorrupt("truncated entry"))? as usize;
        let end = pos + 1 + uid_len + 9;
        if end > body.len() {
            return Err(RegistryCorrupt("truncated entry"));
        }
        let uid = Uid::new(&body[pos + 1..pos + 1 + uid_len]).map_err(|_| RegistryCorrupt("bad uid"))?;
        let status = body[pos + 1 + uid_len];
        let at = u64::from_le_bytes(body[end - 8..end].try_into().unwrap());
        let rec = match (status, at) {
            (0, 0) => VoterRecord { status: VoterStatus::NotVoted, voted_at: None },
            (1, t) => VoterRecord { status: VoterStatus::Voted, voted_at: Some(t) },
            _ => return Err(RegistryCorrupt("bad status")),
        };
        if reg.entries.insert(uid, rec).is_some() {
            return Err(RegistryCorrupt("duplicate uid"));
        }
        pos = end;
    }
    if pos != body.len() {
        return Err(RegistryCorrupt("trailing bytes"));
    }
    Ok(reg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> Aes128Key {
        Aes128Key::new([0x42; 16])
    }

    fn sample(n: u32) -> VoterRegistry {
        let mut reg = VoterRegistry::new(&key());
        for i in 0..n {
            let uid = if i % 3 == 0 {
                Uid::new(&[i as u8, (i >> 8) as u8, 0xee, 0x01, 0x02, 0x03, 0x04]).unwrap()
            } else {
                Uid::new(&(0xa000_0000u32 + i).to_be_bytes()).unwrap()
            };
            reg.register(uid).unwrap();
            if i % 4 == 1 {
                reg.mark_voted(&uid, 1000 + i as u64).unwrap();
            }
        }
        reg
    }

    #[test]
    fn roundtrip_100_entries() {
        let reg = sample(100);
        let bytes = save_registry(&reg, &key(), &Iv128::new([1; 16])).unwrap();
        assert_eq!(&bytes[..4], b"BVR1");
        assert_eq!(load_registry(&bytes, &key()).unwrap(), reg);
    }

    #[test]
    fn empty_roundtrip() {
        let reg = VoterRegistry::new(&key());
        let bytes = save_registry(&reg, &key(), &Iv128::new([0; 16])).unwrap();
        assert!(load_registry(&bytes, &key()).unwrap().is_empty());
    }

    #[test]
    fn wrong_key_is_corrupt() {
        let bytes = save_registry(&sample(5), &key(), &Iv128::new([1; 16])).unwrap();
        let err = load_registry(&bytes, &Aes128Key::new([0x43; 16])).unwrap_err();
        assert!(matches!(err, RegistryError::RegistryCorrupt(_)));
    }

    #[test]
    fn key_mismatch_on_save() {
        assert_eq!(save_registry(&sample(1), &Aes128Key::new([1; 16]), &Iv128::new([0; 16])), Err(RegistryError::KeyMismatch));
    }

    #[test]
    fn every_flipped_byte_is_detected() {
        let bytes = save_registry(&sample(6), &key(), &Iv128::new([9; 16])).unwrap();
        for i in 0..bytes.len() {
            for mask in [0x01u8, 0x80, 0xff] {
                let mut b = bytes.clone();
                b[i] ^= mask;
                assert!(
                    matches!(load_registry(&b, &key()), Err(RegistryError::RegistryCorrupt(_))),
                    "byte {i} mask {mask:#x} went undetected"
                );
            }
        }
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = save_registry(&sample(3), &key(), &Iv128::new([9; 16])).unwrap();
        for n in 0..bytes.len() {
            assert!(load_registry(&bytes[..n], &key()).is_err());
        }
    }

    #[test]
    fn mark_voted_transitions() {
        let mut reg = VoterRegistry::new(&key());
        let u = Uid::new(&[1, 2, 3, 4]).unwrap();
        reg.register(u).unwrap();
        reg.mark_voted(&u, 5).unwrap();
        assert_eq!(reg.get(&u).unwrap().voted_at, Some(5));
        assert_eq!(reg.mark_voted(&u, 6), Err(RegistryError::AlreadyVoted(u)));
        let other = Uid::new(&[9, 9, 9, 9]).unwrap();
        assert_eq!(reg.mark_voted(&other, 6), Err(RegistryError::UnknownVoter(other)));
        assert_eq!(reg.register(u), Err(RegistryError::DuplicateVoter(u)));
    }
}

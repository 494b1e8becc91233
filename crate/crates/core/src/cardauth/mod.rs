//! Card issuance, encrypted-UID verification and the voter whitelist.
//!
//! A card carries its UID plus a 16-byte token: the AES-128 encryption of
//! the UID's canonical block under the card key. Changing the UID on a
//! copied card breaks the token relationship, which is how clones with an
//! altered UID are caught at the terminal.

mod registry;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{ct_eq, Aes128, Aes128Key};

pub use registry::{load_registry, save_registry, VoterRecord, VoterRegistry, VoterStatus, REGISTRY_MAGIC};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CardError {
    #[error("uid length {0} is not 4, 7 or 10")]
    InvalidUidLength(usize),
    #[error("invalid hex: {0}")]
    InvalidHex(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("voter {0} is not registered")]
    UnknownVoter(Uid),
    #[error("voter {0} has already voted")]
    AlreadyVoted(Uid),
    #[error("voter {0} is already registered")]
    DuplicateVoter(Uid),
    #[error("registry file corrupt: {0}")]
    RegistryCorrupt(&'static str),
    #[error("registry is bound to a different key")]
    KeyMismatch,
}

pub const MAX_UID_LEN: usize = 10;

/// An ISO 14443 card UID: single (4), double (7) or triple (10) size.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Uid {
    len: u8,
    bytes: [u8; MAX_UID_LEN],
}

impl Uid {
    pub fn new(bytes: &[u8]) -> Result<Self, CardError> {
        if !matches!(bytes.len(), 4 | 7 | 10) {
            return Err(CardError::InvalidUidLength(bytes.len()));
        }
        let mut buf = [0u8; MAX_UID_LEN];
        buf[..bytes.len()].copy_from_slice(bytes);
        Ok(Self { len: bytes.len() as u8, bytes: buf })
    }

    pub fn from_hex(text: &str) -> Result<Self, CardError> {
        let raw = hex::decode(text.trim()).map_err(|e| CardError::InvalidHex(e.to_string()))?;
        Self::new(&raw)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes[..self.len as usize]
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.as_bytes())
    }
}

impl std::fmt::Debug for Uid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Uid({})", self.to_hex())
    }
}

impl std::fmt::Display for Uid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Uid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Uid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Uid::from_hex(&text).map_err(serde::de::Error::custom)
    }
}

/// Byte 0 holds the UID length, then the UID, then zero fill.
pub fn canonical_uid_block(uid: &Uid) -> [u8; 16] {
    let mut block = [0u8; 16];
    block[0] = uid.len;
    block[1..=uid.len()].copy_from_slice(uid.as_bytes());
    block
}

/// What the reader sees on a card.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardImage {
    pub uid: Uid,
    #[serde(with = "crate::hexser")]
    pub token: [u8; 16],
}

pub fn issue_card(uid: Uid, card_key: &Aes128Key) -> CardImage {
    CardImage { uid, token: Aes128::new(card_key).encrypt_block(&canonical_uid_block(&uid)) }
}

pub fn verify_card(card: &CardImage, card_key: &Aes128Key) -> bool {
    let expected = Aes128::new(card_key).encrypt_block(&canonical_uid_block(&card.uid));
    ct_eq(&expected, &card.token)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AuthResult {
    Eligible,
    AlreadyVoted,
    UnknownVoter,
    InvalidToken,
}

/// Read-only eligibility check. Token failure wins over registry lookup so a
/// forged card is never reported as merely unknown.
pub fn authenticate(registry: &VoterRegistry, card: &CardImage, card_key: &Aes128Key) -> AuthResult {
    if !verify_card(card, card_key) {
        return AuthResult::InvalidToken;
    }
    match registry.get(&card.uid).map(|r| r.status) {
        None => AuthResult::UnknownVoter,
        Some(VoterStatus::Voted) => AuthResult::AlreadyVoted,
        Some(VoterStatus::NotVoted) => AuthResult::Eligible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uid(s: &str) -> Uid {
        Uid::from_hex(s).unwrap()
    }

    #[test]
    fn uid_lengths() {
        for n in 0..=12 {
            let ok = Uid::new(&vec![1u8; n]).is_ok();
            assert_eq!(ok, matches!(n, 4 | 7 | 10), "len {n}");
        }
    }

    #[test]
    fn canonical_block_layout() {
        let b = canonical_uid_block(&uid("aabbccdd"));
        assert_eq!(b[..5], [0x04, 0xaa, 0xbb, 0xcc, 0xdd]);
        assert!(b[5..].iter().all(|&x| x == 0));

        let b = canonical_uid_block(&uid("0102030405060708090a"));
        assert_eq!(b[0], 0x0a);
        assert!(b[11..].iter().all(|&x| x == 0));
    }

    #[test]
    fn canonical_block_distinguishes_trailing_zeros() {
        // 7-byte uid ending in zeros vs 4-byte prefix: length byte differs.
        let a = canonical_uid_block(&uid("01020304"));
        let b = canonical_uid_block(&uid("01020304000000"));
        assert_ne!(a, b);
    }

    #[test]
    fn pinned_token() {
        // Frozen from an independent AES implementation.
        let card = issue_card(uid("01020304"), &Aes128Key::new([0; 16]));
        assert_eq!(hex::encode(card.token), "1c4ab121cd6272c422498f3fca64610c");
    }

    #[test]
    fn altered_uid_fails_verification() {
        let k = Aes128Key::new([9; 16]);
        let mut card = issue_card(uid("01020304"), &k);
        assert!(verify_card(&card, &k));
        card.uid = uid("01020305");
        assert!(!verify_card(&card, &k));
    }

    #[test]
    fn precedence_order() {
        let k = Aes128Key::new([3; 16]);
        let mut reg = VoterRegistry::new(&Aes128Key::new([4; 16]));
        let voted = uid("11111111");
        let fresh = uid("22222222");
        reg.register(voted).unwrap();
        reg.register(fresh).unwrap();
        reg.mark_voted(&voted, 10).unwrap();

        let genuine_voted = issue_card(voted, &k);
        let genuine_fresh = issue_card(fresh, &k);
        let unknown = issue_card(uid("33333333"), &k);
        let mut forged_voted = genuine_voted;
        forged_voted.token[0] ^= 1;
        let mut forged_unknown = unknown;
        forged_unknown.token[15] ^= 0x80;

        assert_eq!(authenticate(&reg, &genuine_fresh, &k), AuthResult::Eligible);
        assert_eq!(authenticate(&reg, &genuine_voted, &k), AuthResult::AlreadyVoted);
        assert_eq!(authenticate(&reg, &unknown, &k), AuthResult::UnknownVoter);
        // InvalidToken beats both AlreadyVoted and UnknownVoter.
        assert_eq!(authenticate(&reg, &forged_voted, &k), AuthResult::InvalidToken);
        assert_eq!(authenticate(&reg, &forged_unknown, &k), AuthResult::InvalidToken);
        // UnknownVoter beats AlreadyVoted trivially (absent uid has no status);
        // a genuine card under the wrong key is InvalidToken, not Eligible.
        assert_eq!(authenticate(&reg, &genuine_fresh, &Aes128Key::new([5; 16])), AuthResult::InvalidToken);
    }

    #[test]
    fn empty_registry_is_unknown() {
        let k = Aes128Key::new([1; 16]);
        let reg = VoterRegistry::new(&Aes128Key::new([2; 16]));
        assert_eq!(authenticate(&reg, &issue_card(uid("01020304"), &k), &k), AuthResult::UnknownVoter);
    }

    #[test]
    fn authenticate_is_read_only() {
        let k = Aes128Key::new([1; 16]);
        let mut reg = VoterRegistry::new(&Aes128Key::new([2; 16]));
        let u = uid("0a0b0c0d");
        reg.register(u).unwrap();
        let card = issue_card(u, &k);
        let before = reg.clone();
        assert_eq!(authenticate(&reg, &card, &k), authenticate(&reg, &card, &k));
        assert_eq!(reg, before);
    }

    #[test]
    fn card_json_roundtrip() {
        let card = issue_card(uid("01020304050607"), &Aes128Key::new([8; 16]));
        let json = serde_json::to_string(&card).unwrap();
        assert!(json.contains("\"01020304050607\""));
        assert_eq!(serde_json::from_str::<CardImage>(&json).unwrap(), card);
    }
}

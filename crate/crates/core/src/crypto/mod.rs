//! Cryptographic primitives: AES-128, CBC packet encryption with PKCS#7
//! padding, SHA-256 checksums, hash-chain links, and per-device MAC tags.
//!
//! Everything here is a pure function of its inputs.

mod aes;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub use self::aes::{Aes128, BLOCK_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("expected {expected} bytes, got {actual}")]
    InvalidLength { expected: usize, actual: usize },
    #[error("plaintext must not be empty")]
    EmptyPlaintext,
    #[error("ciphertext length {0} is not a positive multiple of 16")]
    MalformedCiphertext(usize),
    #[error("invalid PKCS#7 padding")]
    PaddingError,
    #[error("invalid hex: {0}")]
    InvalidHex(String),
}

fixed_bytes!(
    /// A 128-bit AES key. `Debug` never prints the key material.
    Aes128Key,
    16
);
fixed_bytes!(
    /// A SHA-256 output.
    Digest256,
    32
);
fixed_bytes!(
    /// A CBC initialization vector, stored next to every ciphertext.
    Iv128,
    16
);

impl std::fmt::Debug for Aes128Key {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Aes128Key(fp={})", &checksum(&self.0).to_hex()[..8])
    }
}

impl Digest256 {
    pub const ZERO: Digest256 = Digest256([0u8; 32]);
}

impl std::fmt::Debug for Digest256 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Digest256({}..)", &self.to_hex()[..16])
    }
}

impl std::fmt::Display for Digest256 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl std::fmt::Debug for Iv128 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Iv128({})", self.to_hex())
    }
}

fn to_block(block: &[u8]) -> Result<[u8; BLOCK_LEN], CryptoError> {
    block.try_into().map_err(|_| CryptoError::InvalidLength { expected: BLOCK_LEN, actual: block.len() })
}

pub fn aes128_encrypt_block(key: &Aes128Key, block: &[u8]) -> Result<[u8; BLOCK_LEN], CryptoError> {
    Ok(Aes128::new(key).encrypt_block(&to_block(block)?))
}

pub fn aes128_decrypt_block(key: &Aes128Key, block: &[u8]) -> Result<[u8; BLOCK_LEN], CryptoError> {
    Ok(Aes128::new(key).decrypt_block(&to_block(block)?))
}

/// Ciphertext length for a plaintext of `len` bytes.
pub const fn padded_len(len: usize) -> usize {
    (len / BLOCK_LEN + 1) * BLOCK_LEN
}

/// AES-128-CBC over the PKCS#7-padded plaintext.
pub fn encrypt_packet(key: &Aes128Key, iv: &Iv128, plaintext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if plaintext.is_empty() {
        return Err(CryptoError::EmptyPlaintext);
    }
    let cipher = Aes128::new(key);
    let pad = BLOCK_LEN - plaintext.len() % BLOCK_LEN;
    let mut buf = Vec::with_capacity(plaintext.len() + pad);
    buf.extend_from_slice(plaintext);
    buf.resize(plaintext.len() + pad, pad as u8);

    let mut chain = *iv.as_bytes();
    for chunk in buf.chunks_exact_mut(BLOCK_LEN) {
        for (b, c) in chunk.iter_mut().zip(chain.iter()) {
            *b ^= c;
        }
        chain = cipher.encrypt_block(&to_block(chunk)?);
        chunk.copy_from_slice(&chain);
    }
    Ok(buf)
}

pub fn decrypt_packet(key: &Aes128Key, iv: &Iv128, ciphertext: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if ciphertext.is_empty() || !ciphertext.len().is_multiple_of(BLOCK_LEN) {
        return Err(CryptoError::MalformedCiphertext(ciphertext.len()));
    }
    let cipher = Aes128::new(key);
    let mut out = Vec::with_capacity(ciphertext.len());
    let mut chain = *iv.as_bytes();
    for chunk in ciphertext.chunks_exact(BLOCK_LEN) {
        let block = to_block(chunk)?;
        let mut plain = cipher.decrypt_block(&block);
        for (p, c) in plain.iter_mut().zip(chain.iter()) {
            *p ^= c;
        }
        out.extend_from_slice(&plain);
        chain = block;
    }

    let pad = *out.last().expect("non-empty") as usize;
    if pad == 0 || pad > BLOCK_LEN || out[out.len() - pad..].iter().any(|&b| b as usize != pad) {
        return Err(CryptoError::PaddingError);
    }
    out.truncate(out.len() - pad);
    Ok(out)
}

/// SHA-256 of `data`.
pub fn checksum(data: &[u8]) -> Digest256 {
    Digest256(Sha256::digest(data).into())
}

/// `checksum(prev || entry_bytes)`. The genesis link uses [`Digest256::ZERO`].
pub fn chain_hash(prev: &Digest256, entry_bytes: &[u8]) -> Digest256 {
    let mut h = Sha256::new();
    h.update(prev.0);
    h.update(entry_bytes);
    Digest256(h.finalize().into())
}

/// HMAC-SHA-256 over `data`.
pub fn hmac_sha256(key: &[u8], data: &[u8]) -> Digest256 {
    const B: usize = 64;
    let mut block_key = [0u8; B];
    if key.len() > B {
        block_key[..32].copy_from_slice(&Sha256::digest(key));
    } else {
        block_key[..key.len()].copy_from_slice(key);
    }
    let mut inner = Sha256::new();
    inner.update(block_key.map(|b| b ^ 0x36));
    inner.update(data);
    let mut outer = Sha256::new();
    outer.update(block_key.map(|b| b ^ 0x5c));
    outer.update(inner.finalize());
    Digest256(outer.finalize().into())
}

/// Per-device tag over an entry hash.
pub fn device_mac(device_key: &Aes128Key, entry_hash: &Digest256) -> Digest256 {
    hmac_sha256(device_key.as_bytes(), entry_hash.as_bytes())
}

pub fn verify_device_mac(device_key: &Aes128Key, entry_hash: &Digest256, tag: &Digest256) -> bool {
    ct_eq(device_mac(device_key, entry_hash).as_bytes(), tag.as_bytes())
}

/// Equality without early exit.
pub fn ct_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(s: &str) -> Aes128Key {
        Aes128Key::from_hex(s).unwrap()
    }

    #[test]
    fn block_length_is_checked() {
        let k = Aes128Key::new([0; 16]);
        assert_eq!(aes128_encrypt_block(&k, &[0u8; 15]), Err(CryptoError::InvalidLength { expected: 16, actual: 15 }));
        assert!(aes128_decrypt_block(&k, &[0u8; 17]).is_err());
    }

    #[test]
    fn zero_key_zero_block_regression() {
        let ct = aes128_encrypt_block(&Aes128Key::new([0; 16]), &[0u8; 16]).unwrap();
        assert_eq!(hex::encode(ct), "66e94bd4ef8a2c3b884cfa59ca342b2e");
    }

    #[test]
    fn packet_lengths() {
        let k = key("000102030405060708090a0b0c0d0e0f");
        let iv = Iv128::new([7; 16]);
        assert_eq!(encrypt_packet(&k, &iv, &[1]).unwrap().len(), 16);
        assert_eq!(encrypt_packet(&k, &iv, &[1; 16]).unwrap().len(), 32);
        assert_eq!(encrypt_packet(&k, &iv, &[]), Err(CryptoError::EmptyPlaintext));
    }

    #[test]
    fn malformed_ciphertext() {
        let k = Aes128Key::new([0; 16]);
        let iv = Iv128::new([0; 16]);
        assert_eq!(decrypt_packet(&k, &iv, &[0; 15]), Err(CryptoError::MalformedCiphertext(15)));
        assert_eq!(decrypt_packet(&k, &iv, &[]), Err(CryptoError::MalformedCiphertext(0)));
    }

    #[test]
    fn pinned_cbc_vector() {
        // Frozen from an independent AES-CBC/PKCS#7 implementation.
        let k = key("000102030405060708090a0b0c0d0e0f");
        let iv = Iv128::from_hex("a0a1a2a3a4a5a6a7a8a9aaabacadaeaf").unwrap();
        let ct = encrypt_packet(&k, &iv, b"ballot:0003:t=01000").unwrap();
        assert_eq!(hex::encode(&ct), "b25a44bb5d8413b8b82da9134e18ccc90f4ed5001a551eec4ae1759e71968ad2");
        assert_eq!(decrypt_packet(&k, &iv, &ct).unwrap(), b"ballot:0003:t=01000");
    }

    #[test]
    fn sha256_known_answers() {
        assert_eq!(checksum(b"").to_hex(), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        assert_eq!(checksum(b"abc").to_hex(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn chain_hash_genesis_is_prefixed_zeros() {
        let mut buf = vec![0u8; 32];
        buf.extend_from_slice(b"entry");
        assert_eq!(chain_hash(&Digest256::ZERO, b"entry"), checksum(&buf));
    }

    #[test]
    fn device_mac_pinned_and_verifies() {
        let k = key("0f0e0d0c0b0a09080706050403020100");
        let h = checksum(b"abc");
        let tag = device_mac(&k, &h);
        assert_eq!(tag.to_hex(), "c2879768d6a375b12258667500e26360fd360ac0109b6f32fdf7f8aa3f528339");
        assert!(verify_device_mac(&k, &h, &tag));
        let mut flipped = *h.as_bytes();
        flipped[0] ^= 1;
        assert!(!verify_device_mac(&k, &Digest256::new(flipped), &tag));
    }

    #[test]
    fn hmac_rfc4231_case_2() {
        let tag = hmac_sha256(b"Jefe", b"what do ya want for nothing?");
        assert_eq!(tag.to_hex(), "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
    }

    #[test]
    fn key_debug_hides_material() {
        let k = key("000102030405060708090a0b0c0d0e0f");
        assert!(!format!("{k:?}").contains("000102"));
    }

    #[test]
    fn hex_serde() {
        let d = checksum(b"abc");
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, format!("\"{}\"", d.to_hex()));
        assert_eq!(serde_json::from_str::<Digest256>(&json).unwrap(), d);
        assert!(serde_json::from_str::<Iv128>("\"00\"").is_err());
    }
}

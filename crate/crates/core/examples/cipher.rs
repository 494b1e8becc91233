//! AES-128 on the FIPS-197 appendix C.1 vector, then a vote packet through
//! CBC with PKCS#7 padding.

use rfid_vote::cardauth::Uid;
use rfid_vote::crypto::{aes128_decrypt_block, aes128_encrypt_block, decrypt_packet, encrypt_packet, Aes128Key, Iv128};
use rfid_vote::terminal::{build_vote_packet, parse_vote_packet};

fn main() {
    let key = Aes128Key::from_hex("000102030405060708090a0b0c0d0e0f").unwrap();
    let plain = hex::decode("00112233445566778899aabbccddeeff").unwrap();
    let ct = aes128_encrypt_block(&key, &plain).unwrap();
    println!("block   {}", hex::encode(ct));
    assert_eq!(hex::encode(ct), "69c4e0d86a7b0430d8cdb78070b4c55a");
    assert_eq!(aes128_decrypt_block(&key, &ct).unwrap().to_vec(), plain);

    let uid = Uid::from_hex("04a1b2c3").unwrap();
    let packet = build_vote_packet(&uid, 2, 86_400_000);
    let iv = Iv128::new([7; 16]);
    let sealed = encrypt_packet(&key, &iv, &packet).unwrap();
    println!("packet  {} bytes -> {} bytes: {}", packet.len(), sealed.len(), hex::encode(&sealed));

    let opened = parse_vote_packet(&decrypt_packet(&key, &iv, &sealed).unwrap()).unwrap();
    println!("opened  uid {} candidate {} at {}", opened.uid, opened.candidate_id, opened.timestamp);

    let mut bad = sealed.clone();
    *bad.last_mut().unwrap() ^= 0x5a;
    println!("tampered last byte -> {:?}", decrypt_packet(&key, &iv, &bad).err());
}

//! A device log: append, verify, then damage it in two ways. A flipped byte
//! is reported by sequence number; a torn final write is healed on reopen.

use rfid_vote::cardauth::Uid;
use rfid_vote::crypto::{encrypt_packet, Aes128Key, Iv128};
use rfid_vote::terminal::build_vote_packet;
use rfid_vote::wormlog::{verify_log_bytes, DeviceId, MemStorage, VoteLog, LOG_HEADER_LEN};

fn main() {
    let device_key = Aes128Key::new([0x42; 16]);
    let vote_key = Aes128Key::new([0x24; 16]);
    let mut log = VoteLog::open(MemStorage::new(), DeviceId::new(*b"BOOTH-07"), device_key).unwrap();
    for i in 0..10u32 {
        let uid = Uid::new(&(0x0400_0000 + i).to_be_bytes()).unwrap();
        let iv = Iv128::new([i as u8; 16]);
        let ts = 13_500 * u64::from(i);
        log.append(ts, iv, encrypt_packet(&vote_key, &iv, &build_vote_packet(&uid, 1, ts)).unwrap()).unwrap();
    }
    println!("10 entries, head hash {}", log.head_hash());
    println!("clean log: {:?}", log.verify_chain().unwrap());

    let bytes = log.into_storage().into_bytes();
    let record = (bytes.len() - LOG_HEADER_LEN) / 10;
    let mut tampered = bytes.clone();
    tampered[LOG_HEADER_LEN + 6 * record + record / 2] ^= 0x01;
    println!("byte flipped inside entry 6: {:?}", verify_log_bytes(&tampered, &device_key));

    let torn = bytes[..bytes.len() - 9].to_vec();
    println!("last write torn: {:?}", verify_log_bytes(&torn, &device_key).unwrap());
    let reopened = VoteLog::open_existing(MemStorage::from_bytes(torn), device_key).unwrap();
    println!("reopened with {} entries; storage now {} bytes", reopened.len(), reopened.storage().bytes().len());
}

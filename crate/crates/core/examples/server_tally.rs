//! Two terminals upload to the server. One voter's card was cloned and used
//! on both; the server flags it, counts only the first vote, and rebuilds
//! the same result from its archive.

use std::collections::BTreeMap;

use rfid_vote::cardauth::Uid;
use rfid_vote::crypto::{encrypt_packet, Aes128Key, Iv128};
use rfid_vote::server::{KeyRing, Server};
use rfid_vote::sync::BatchManifest;
use rfid_vote::terminal::{build_vote_packet, Ballot, Candidate};
use rfid_vote::wormlog::{DeviceId, MemStorage, VoteLog};

fn booth(id: &[u8; 8], key: Aes128Key, vote_key: &Aes128Key, votes: &[(u32, u16, u64)]) -> VoteLog<MemStorage> {
    let mut log = VoteLog::open(MemStorage::new(), DeviceId::new(*id), key).unwrap();
    for &(voter, candidate, ts) in votes {
        let uid = Uid::new(&(0x0400_0000 + voter).to_be_bytes()).unwrap();
        let iv = Iv128::new([voter as u8 ^ id[7]; 16]);
        log.append(ts, iv, encrypt_packet(vote_key, &iv, &build_vote_packet(&uid, candidate, ts)).unwrap()).unwrap();
    }
    log
}

fn main() {
    let vote_key = Aes128Key::new([0x77; 16]);
    let (ka, kb) = (Aes128Key::new([0xa0; 16]), Aes128Key::new([0xb0; 16]));
    let a = booth(b"BOOTH-0A", ka, &vote_key, &[(1, 1, 10_000), (2, 2, 24_000), (3, 1, 38_000)]);
    let b = booth(b"BOOTH-0B", kb, &vote_key, &[(4, 2, 12_000), (1, 2, 26_000), (5, 3, 40_000)]);

    let keys = KeyRing { vote_key, devices: BTreeMap::from([(a.device_id(), ka), (b.device_id(), kb)]) };
    let mut server = Server::new(keys.clone());
    for log in [&a, &b] {
        let batch = BatchManifest::new(log.device_id(), 0, log.entries().to_vec()).unwrap();
        println!("{} -> {:?}", log.device_id(), server.ingest(&batch.encode(), 60_000));
    }
    let mut bogus = BatchManifest::new(a.device_id(), 1, a.entries()[..1].to_vec()).unwrap().encode();
    bogus[30] ^= 0x10;
    println!("damaged upload -> {:?}", server.ingest(&bogus, 61_000));

    for anomaly in server.detect_anomalies(62_000) {
        println!("anomaly {:?} on {} seq {:?}", anomaly.kind, anomaly.device_id, anomaly.seq_no);
    }
    let ballot = Ballot::new(vec![
        Candidate { id: 1, name: "Reform".into() },
        Candidate { id: 2, name: "Renewal".into() },
        Candidate { id: 3, name: "Unity".into() },
    ])
    .unwrap();
    let tally = server.tally(&ballot);
    println!("counts {:?}, excluded {:?}", tally.counts, tally.excluded);
    let snap = server.snapshot();
    println!("turnout {}, votes received {}", snap.turnout, snap.votes_received);

    let rebuilt = Server::from_archive(&server.write_archive(), keys).unwrap();
    assert_eq!(rebuilt.tally(&ballot), tally);
    println!("archive rebuild matches");
}

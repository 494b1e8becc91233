//! A terminal that logged 80 votes with no connectivity, then syncs: four
//! batches of twenty, each acknowledged and journaled. A second pass finds
//! nothing left to send, and a resend of an old batch is absorbed.

use std::collections::BTreeMap;

use rfid_vote::cardauth::Uid;
use rfid_vote::crypto::{encrypt_packet, Aes128Key, Iv128};
use rfid_vote::server::{KeyRing, Server};
use rfid_vote::sync::{encode_response, BatchManifest, Exchange, LinkState, SyncAgent, SyncConfig, Transport};
use rfid_vote::terminal::build_vote_packet;
use rfid_vote::wormlog::{DeviceId, MemStorage, SyncJournal, VoteLog};

struct Direct<'a> {
    server: &'a mut Server,
    up: bool,
}

impl Transport for Direct<'_> {
    fn probe(&mut self, _at_ms: u64) -> LinkState {
        if self.up {
            LinkState::Up
        } else {
            LinkState::Down
        }
    }

    fn exchange(&mut self, at_ms: u64, request: &[u8]) -> Exchange {
        let outcome = self.server.ingest(request, at_ms);
        Exchange::Reply { bytes: encode_response(&outcome).to_vec(), delay_ms: 0 }
    }
}

fn main() {
    let device = DeviceId::new(*b"BOOTH-03");
    let device_key = Aes128Key::new([0x33; 16]);
    let vote_key = Aes128Key::new([0x55; 16]);
    let mut log = VoteLog::open(MemStorage::new(), device, device_key).unwrap();
    for i in 0..80u32 {
        let uid = Uid::new(&(0x0400_0000 + i).to_be_bytes()).unwrap();
        let ts = 13_500 * u64::from(i);
        let iv = Iv128::new([(i % 251) as u8; 16]);
        log.append(ts, iv, encrypt_packet(&vote_key, &iv, &build_vote_packet(&uid, (i % 3 + 1) as u16, ts)).unwrap()).unwrap();
    }
    let mut journal = SyncJournal::open(MemStorage::new()).unwrap();
    let mut server = Server::new(KeyRing { vote_key, devices: BTreeMap::from([(device, device_key)]) });
    let mut agent = SyncAgent::new(device, SyncConfig::default());

    let down = agent.sync_cycle(&log, &mut journal, &mut Direct { server: &mut server, up: false }, 1_080_000).unwrap();
    println!("link down: {} batches sent", down.batches_sent);

    let now = 1_200_000;
    let report = agent.sync_cycle(&log, &mut journal, &mut Direct { server: &mut server, up: true }, now).unwrap();
    println!("link up:   {} batches acked, {} entries, {} ms", report.acked, report.entries_acked, report.duration_ms);
    for r in journal.records() {
        println!("  batch {} covers seq {}..={}", r.batch_id, r.first_seq, r.last_seq);
    }
    println!("journal head {:?}, server head {:?}", journal.head(), server.device_head(device));

    let again = agent.sync_cycle(&log, &mut journal, &mut Direct { server: &mut server, up: true }, now + 60_000).unwrap();
    println!("next pass: {} batches sent", again.batches_sent);

    let old = BatchManifest::new(device, 1, log.entries()[20..40].to_vec()).unwrap();
    println!("resent batch 1 -> {:?}", server.ingest(&old.encode(), now + 70_000));
    println!("server holds {} entries", server.accepted_len());
}

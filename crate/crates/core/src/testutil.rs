use std::collections::BTreeMap;

use crate::cardauth::Uid;
use crate::crypto::{encrypt_packet, Aes128Key, Iv128};
use crate::server::{KeyRing, Server};
use crate::sync::{Exchange, LinkState, Transport};
use crate::terminal::{build_vote_packet, Ballot, Candidate};
use crate::wormlog::{DeviceId, MemStorage, SyncJournal, VoteLog};

pub const VOTE_KEY: Aes128Key = Aes128Key::new([0x5a; 16]);

pub fn device(n: u8) -> DeviceId {
    DeviceId::new([b'D', b'E', b'V', b'-', b'0', b'0', b'0', b'0' + n])
}

pub fn device_key(n: u8) -> Aes128Key {
    Aes128Key::new([0x30 + n; 16])
}

pub fn keyring(devices: &[u8]) -> KeyRing {
    KeyRing { vote_key: VOTE_KEY, devices: devices.iter().map(|&n| (device(n), device_key(n))).collect::<BTreeMap<_, _>>() }
}

pub fn ballot() -> Ballot {
    Ballot::new(vec![
        Candidate { id: 1, name: "Ada".into() },
        Candidate { id: 2, name: "Grace".into() },
        Candidate { id: 3, name: "Barbara".into() },
    ])
    .unwrap()
}

pub fn voter(n: u32) -> Uid {
    let b = n.to_be_bytes();
    Uid::new(&[0xa0, b[1], b[2], b[3]]).unwrap()
}

/// A log on device `dev` holding one vote per `(voter, candidate)`.
pub fn vote_log(dev: u8, votes: &[(u32, u16)]) -> VoteLog<MemStorage> {
    let mut log = VoteLog::open(MemStorage::new(), device(dev), device_key(dev)).unwrap();
    for (i, &(v, cand)) in votes.iter().enumerate() {
        let ts = 11_500 * (i as u64 + 1);
        let iv = Iv128::new([(i as u8) ^ dev; 16]);
        let ct = encrypt_packet(&VOTE_KEY, &iv, &build_vote_packet(&voter(v), cand, ts)).unwrap();
        log.append(ts, iv, ct).unwrap();
    }
    log
}

pub fn simple_votes(n: u32) -> Vec<(u32, u16)> {
    (0..n).map(|i| (i, (i % 3 + 1) as u16)).collect()
}

pub fn journal() -> SyncJournal<MemStorage> {
    SyncJournal::open(MemStorage::new()).unwrap()
}

/// Direct link to a server, with a scripted sequence of interference.
pub struct Loopback<'a> {
    pub server: &'a mut Server,
    pub up: bool,
    /// Per exchange, in order: `Some(offset)` flips that request byte,
    /// `None` passes it through. Exhausted script means clean.
    pub flips: Vec<Option<usize>>,
    /// Exchanges (0-based) after which the link goes down.
    pub down_after: Option<usize>,
    /// Exchanges whose reply is lost after the server processed them.
    pub lose_reply: Vec<usize>,
    pub exchanges: usize,
}

impl<'a> Loopback<'a> {
    pub fn new(server: &'a mut Server) -> Self {
        Self { server, up: true, flips: Vec::new(), down_after: None, lose_reply: Vec::new(), exchanges: 0 }
    }
}

impl Transport for Loopback<'_> {
    fn probe(&mut self, _at: u64) -> LinkState {
        if self.up {
            LinkState::Up
        } else {
            LinkState::Down
        }
    }

    fn exchange(&mut self, at: u64, request: &[u8]) -> Exchange {
        if !self.up || self.down_after.is_some_and(|n| self.exchanges >= n) {
            return Exchange::LinkDown;
        }
        let i = self.exchanges;
        self.exchanges += 1;
        let mut bytes = request.to_vec();
        if let Some(Some(off)) = self.flips.get(i) {
            let off = off % bytes.len();
            bytes[off] ^= 0x01;
        }
        let outcome = self.server.ingest(&bytes, at);
        if self.lose_reply.contains(&i) {
            return Exchange::Lost { delay_ms: 0 };
        }
        Exchange::Reply { bytes: crate::sync::encode_response(&outcome).to_vec(), delay_ms: 0 }
    }
}

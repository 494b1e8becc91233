#![allow(dead_code)]

use std::path::PathBuf;

use rfid_vote::cardauth::Uid;
use rfid_vote::crypto::{encrypt_packet, Aes128Key, Iv128};
use rfid_vote::simnet::ScenarioConfig;
use rfid_vote::terminal::build_vote_packet;
use rfid_vote::wormlog::{DeviceId, MemStorage, SyncJournal, VoteLog};

/// Straight-line SHA-256 from the FIPS 180-4 description.
pub fn ref_sha256(msg: &[u8]) -> [u8; 32] {
    const K: [u32; 64] = [
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be,
        0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa,
        0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85,
        0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3,
        0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f,
        0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
    ];
    let mut h: [u32; 8] = [0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a, 0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19];
    let mut data = msg.to_vec();
    data.push(0x80);
    while data.len() % 64 != 56 {
        data.push(0);
    }
    data.extend_from_slice(&((msg.len() as u64) * 8).to_be_bytes());
    for chunk in data.chunks(64) {
        let mut w = [0u32; 64];
        for i in 0..16 {
            w[i] = u32::from_be_bytes(chunk[4 * i..4 * i + 4].try_into().unwrap());
        }
        for i in 16..64 {
            let s0 = w[i - 15].rotate_right(7) ^ w[i - 15].rotate_right(18) ^ (w[i - 15] >> 3);
            let s1 = w[i - 2].rotate_right(17) ^ w[i - 2].rotate_right(19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16].wrapping_add(s0).wrapping_add(w[i - 7]).wrapping_add(s1);
        }
        let [mut a, mut b, mut c, mut d, mut e, mut f, mut g, mut hh] = h;
        for i in 0..64 {
            let s1 = e.rotate_right(6) ^ e.rotate_right(11) ^ e.rotate_right(25);
            let ch = (e & f) ^ (!e & g);
            let t1 = hh.wrapping_add(s1).wrapping_add(ch).wrapping_add(K[i]).wrapping_add(w[i]);
            let s0 = a.rotate_right(2) ^ a.rotate_right(13) ^ a.rotate_right(22);
            let maj = (a & b) ^ (a & c) ^ (b & c);
            let t2 = s0.wrapping_add(maj);
            hh = g;
            g = f;
            f = e;
            e = d.wrapping_add(t1);
            d = c;
            c = b;
            b = a;
            a = t1.wrapping_add(t2);
        }
        for (x, y) in h.iter_mut().zip([a, b, c, d, e, f, g, hh]) {
            *x = x.wrapping_add(y);
        }
    }
    let mut out = [0u8; 32];
    for (i, v) in h.iter().enumerate() {
        out[4 * i..4 * i + 4].copy_from_slice(&v.to_be_bytes());
    }
    out
}

pub fn ref_hmac(key: &[u8], msg: &[u8]) -> [u8; 32] {
    let mut k = [0u8; 64];
    if key.len() > 64 {
        k[..32].copy_from_slice(&ref_sha256(key));
    } else {
        k[..key.len()].copy_from_slice(key);
    }
    let mut inner: Vec<u8> = k.iter().map(|b| b ^ 0x36).collect();
    inner.extend_from_slice(msg);
    let mut outer: Vec<u8> = k.iter().map(|b| b ^ 0x5c).collect();
    outer.extend_from_slice(&ref_sha256(&inner));
    ref_sha256(&outer)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

pub fn fixture(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_json(&std::fs::read_to_string(fixture_path(name)).unwrap()).unwrap()
}

pub const DEVICE_KEY: Aes128Key = Aes128Key::new([0x3c; 16]);
pub const VOTE_KEY: Aes128Key = Aes128Key::new([0xc3; 16]);

/// Log bytes holding `n` votes, plus the byte offset where each record starts.
pub fn sample_log(n: u32) -> (Vec<u8>, Vec<usize>) {
    let mut log = VoteLog::open(MemStorage::new(), DeviceId::new(*b"BOOTH-50"), DEVICE_KEY).unwrap();
    let mut starts = Vec::new();
    for i in 0..n {
        starts.push(log.storage().bytes().len());
        let uid = Uid::new(&(0x0450_0000 + i).to_be_bytes()).unwrap();
        let ts = 13_500 * u64::from(i);
        let iv = Iv128::new([(i * 7) as u8; 16]);
        log.append(ts, iv, encrypt_packet(&VOTE_KEY, &iv, &build_vote_packet(&uid, (i % 4 + 1) as u16, ts)).unwrap()).unwrap();
    }
    (log.into_storage().into_bytes(), starts)
}

pub fn empty_journal() -> Vec<u8> {
    let j = SyncJournal::open(MemStorage::new()).unwrap();
    j.storage().bytes().to_vec()
}

/// The entry whose record covers byte `offset`.
pub fn entry_at(starts: &[usize], offset: usize) -> u32 {
    (starts.partition_point(|&s| s <= offset) - 1) as u32
}

/// A random scenario with lossy, corrupting links and outages, drawn from
/// `seed`. Connectivity always returns once polls close.
pub fn faulty_scenario(seed: u64) -> ScenarioConfig {
    use rand::{Rng, SeedableRng};
    use rfid_vote::simnet::{Corruption, DeviceSpec, FaultPlan, LinkSchedule, LinkWindow, OffsetRule, VoterSpec};
    use rfid_vote::sync::LinkState;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut config = fixture("faults");
    config.name = format!("sweep-{seed}");
    config.seed = seed;
    let devices = rng.gen_range(1..=3usize);
    config.devices = (0..devices)
        .map(|i| DeviceSpec { id: DeviceId::new(*format!("SWEEP-{i:02}").as_bytes().first_chunk().unwrap()), key: None })
        .collect();
    let voters = rng.gen_range(5..=40u32);
    config.voters = (0..voters)
        .map(|i| VoterSpec {
            uid: Uid::new(&(0x0460_0000 + i).to_be_bytes()).unwrap(),
            candidate: rng.gen_range(1..=4),
            arrival_ms: 14_000 * u64::from(i / devices as u32) + rng.gen_range(0..500),
            device: i as usize % devices,
            behavior: Default::default(),
        })
        .collect();
    let span = 14_000 * u64::from(voters / devices as u32 + 1);
    let mut windows = Vec::new();
    let mut t = 0;
    while t < span && windows.len() < 4 {
        let from = t + rng.gen_range(0..span / 2 + 1);
        let to = from + rng.gen_range(10_000..200_000);
        windows.push(LinkWindow { from_ms: from, to_ms: to, state: LinkState::Down });
        t = to + 1;
    }
    config.link = LinkSchedule { windows, manual_override: false };
    let corruptions = (0..rng.gen_range(0..4))
        .map(|_| Corruption {
            at_ms: rng.gen_range(0..span),
            rule: match rng.gen_range(0..3) {
                0 => OffsetRule::Fixed(rng.gen_range(0..700)),
                1 => OffsetRule::FromEnd(rng.gen_range(0..40)),
                _ => OffsetRule::Random,
            },
        })
        .collect::<Vec<_>>();
    let mut corruptions = corruptions;
    corruptions.sort_by_key(|c| c.at_ms);
    let delay_min_ms = rng.gen_range(0..200);
    config.faults = FaultPlan {
        corruptions,
        corrupt_probability: rng.gen_range(0.0..0.4),
        drop_probability: rng.gen_range(0.0..0.35),
        delay_min_ms,
        delay_max_ms: delay_min_ms + rng.gen_range(0..1_500),
        seed: rng.gen(),
        ..FaultPlan::default()
    };
    config.validate().unwrap();
    config
}

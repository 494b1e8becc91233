//! What an eavesdropper on the sync link sees. Two booths' worth of votes
//! are run twice, once with every voter picking the first candidate and once
//! with every voter picking the last; the captured traffic has the same
//! shape and no plaintext UID appears in it.

use rfid_vote::simnet::{simulate, ScenarioConfig};

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/clone.json");
    let mut config = ScenarioConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
    config.extra_visits.clear();
    let last = config.ballot.candidates().last().unwrap().id;

    let mut traces = Vec::new();
    for pick in [config.ballot.candidates()[0].id, last] {
        for v in &mut config.voters {
            v.candidate = pick;
        }
        traces.push(simulate(&config, true).unwrap().trace);
    }

    for m in traces[0].iter().take(4) {
        println!("{:>8} ms {:?} {} bytes {}..", m.at_ms, m.direction, m.bytes.len(), hex::encode(&m.bytes[..24.min(m.bytes.len())]));
    }
    let shapes = |t: &[rfid_vote::simnet::WireMessage]| t.iter().map(|m| (m.direction, m.bytes.len())).collect::<Vec<_>>();
    println!("{} messages; same sizes and order under both choices: {}", traces[0].len(), shapes(&traces[0]) == shapes(&traces[1]));

    let leaked = config.voters.iter().filter(|v| {
        let uid = v.uid.as_bytes();
        traces[0].iter().any(|m| m.bytes.windows(uid.len()).any(|w| w == uid))
    });
    println!("plaintext UIDs visible on the wire: {}", leaked.count());
}

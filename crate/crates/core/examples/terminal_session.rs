//! One terminal serving a voter who cancels once, then the same card coming
//! back.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rfid_vote::cardauth::{issue_card, Uid, VoterRegistry};
use rfid_vote::crypto::Aes128Key;
use rfid_vote::terminal::{Ballot, Candidate, Effect, Terminal, TerminalConfig, TerminalEvent, TerminalKeys};
use rfid_vote::wormlog::{DeviceId, MemStorage, VoteLog};

fn show(at: u64, effects: &[Effect]) {
    for e in effects {
        match e {
            Effect::Display { message, .. } => println!("{at:>7} ms  screen: {message}"),
            other => println!("{at:>7} ms  {other:?}"),
        }
    }
}

fn main() {
    let keys = TerminalKeys { card_key: Aes128Key::new([1; 16]), vote_key: Aes128Key::new([2; 16]) };
    let voter = Uid::from_hex("04c0ffee").unwrap();
    let registry = VoterRegistry::with_voters(&Aes128Key::new([3; 16]), [voter]).unwrap();
    let ballot = Ballot::new(vec![Candidate { id: 1, name: "Harbour".into() }, Candidate { id: 2, name: "Hillside".into() }]).unwrap();
    let device = DeviceId::new(*b"BOOTH-01");
    let log = VoteLog::open(MemStorage::new(), device, Aes128Key::new([4; 16])).unwrap();
    let mut terminal = Terminal::new(registry, ballot, keys, TerminalConfig::default(), log, ChaCha8Rng::seed_from_u64(9));

    let card = issue_card(voter, &keys.card_key);
    let script = [
        (0, TerminalEvent::CardPresented { card }),
        (1_500, TerminalEvent::SelectCandidate { index: 0 }),
        (7_500, TerminalEvent::Cancel),
        (7_500, TerminalEvent::SelectCandidate { index: 1 }),
        (13_500, TerminalEvent::Confirm),
        (18_000, TerminalEvent::Tick { now: 18_000 }),
        (30_000, TerminalEvent::CardPresented { card }),
    ];
    for (at, event) in script {
        let effects = terminal.handle_event(event, at).unwrap();
        show(at, &effects);
    }

    let m = terminal.metrics();
    println!(
        "log entries {}, committed {}, refused {}, longest cycle {} ms",
        terminal.log().len(),
        m.votes_committed,
        m.auth_failure,
        m.cycle_max_ms
    );
}

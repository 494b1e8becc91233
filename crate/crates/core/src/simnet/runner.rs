use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::clock::SimClock;
use super::link::{FaultyLink, SimTransport, WireMessage};
use super::scenario::{Behavior, ScenarioConfig, ScenarioKeys, VisitKind};
use super::SimError;
use crate::cardauth::{issue_card, AuthResult, CardImage, Uid, VoterRegistry};
use crate::server::{AnomalyKind, ExcludeReason, KeyRing, MonitoringSnapshot, Server, TallyResult, Telemetry};
use crate::sync::{LinkState, SyncAgent, SyncReport};
use crate::terminal::{Effect, SessionState, Terminal, TerminalEvent, TerminalKeys};
use crate::wormlog::{check_consistency, DeviceId, MemStorage, SyncJournal, VoteLog};

/// One card presentation and what came of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitRecord {
    pub kind: VisitKind,
    pub device_id: DeviceId,
    pub uid: Uid,
    pub arrival_ms: u64,
    pub served_ms: Option<u64>,
    pub expected: AuthResult,
    pub observed: Option<AuthResult>,
    /// First message shown after the card was read.
    pub message: String,
    pub committed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthSummary {
    pub presentations: u64,
    pub results: BTreeMap<AuthResult, u64>,
    /// Accepted although the card should have been refused.
    pub false_accepts: u64,
    /// Refused although the card should have been accepted.
    pub false_rejects: u64,
    /// Refused, but for a different reason than expected.
    pub misclassified: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceReport {
    pub device_id: DeviceId,
    pub votes_logged: u64,
    pub journal_head: Option<u32>,
    pub server_head: Option<u32>,
    pub batches_accepted: u64,
    /// Sync cycles that put at least one message on the wire.
    pub sync_cycles: Vec<SyncReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub voting_cycles: u64,
    pub mean_cycle_ms: f64,
    pub max_cycle_ms: u64,
    pub max_display_latency_ms: u64,
    pub polls_closed_ms: u64,
    pub finished_ms: u64,
    pub catchup_rounds: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub seed: u64,
    pub tally: TallyResult,
    pub snapshot: MonitoringSnapshot,
    pub auth: AuthSummary,
    pub devices: Vec<DeviceReport>,
    pub timing: TimingStats,
    pub visits: Vec<VisitRecord>,
    pub checks: Vec<InvariantCheck>,
}

impl ScenarioReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Everything a run leaves behind.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub report: ScenarioReport,
    pub keys: ScenarioKeys,
    pub keyring: KeyRing,
    pub registry: VoterRegistry,
    pub cards: Vec<CardImage>,
    /// Final log and journal bytes per device.
    pub logs: Vec<(DeviceId, Vec<u8>)>,
    pub journals: Vec<(DeviceId, Vec<u8>)>,
    pub archive: Vec<u8>,
    /// Every wire message, when captured.
    pub trace: Vec<WireMessage>,
}

#[derive(Debug, Clone, Copy)]
enum Action {
    Select(usize),
    Confirm,
    Cancel,
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Arrive(usize),
    Act { device: usize, action: Action },
    Free { device: usize },
    Sync,
}

struct Visit {
    kind: VisitKind,
    device: usize,
    card: CardImage,
    arrival_ms: u64,
    candidate: Option<u16>,
    behavior: Behavior,
    expected: AuthResult,
}

struct Station {
    terminal: Terminal<MemStorage>,
    journal: SyncJournal<MemStorage>,
    agent: SyncAgent,
    queue: VecDeque<usize>,
    busy: bool,
    current: Option<usize>,
    sync_cycles: Vec<SyncReport>,
}

struct Sim<'c> {
    config: &'c ScenarioConfig,
    clock: SimClock<Event>,
    stations: Vec<Station>,
    visits: Vec<Visit>,
    records: Vec<VisitRecord>,
    server: Server,
    link: FaultyLink,
    visits_done: usize,
    last_snapshot: (u64, u64),
    monotone: bool,
}

/// Builds the presentation list in arrival order and fixes, from the
/// script alone, what a correct terminal must answer to each card.
fn plan_visits(config: &ScenarioConfig, keys: &ScenarioKeys) -> Vec<Visit> {
    let registered: BTreeSet<Uid> = config.voters.iter().map(|v| v.uid).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0x61747461636b);
    let fresh_uid = |rng: &mut ChaCha8Rng| loop {
        let mut b = [0u8; 4];
        rng.fill_bytes(&mut b);
        let uid = Uid::new(&b).expect("4 bytes");
        if !registered.contains(&uid) {
            return uid;
        }
    };

    let mut visits: Vec<Visit> = config
        .voters
        .iter()
        .map(|v| Visit {
            kind: VisitKind::Voter,
            device: v.device,
            card: issue_card(v.uid, &keys.card_key),
            arrival_ms: v.arrival_ms,
            candidate: Some(v.candidate),
            behavior: v.behavior,
            expected: AuthResult::Eligible,
        })
        .collect();
    for x in &config.extra_visits {
        let genuine = x.voter.map(|u| issue_card(u, &keys.card_key));
        let card = match x.kind {
            VisitKind::Voter => unreachable!("rejected by validation"),
            VisitKind::Repeat | VisitKind::FullCopy => genuine.expect("validated"),
            VisitKind::Unregistered => issue_card(x.uid.unwrap_or_else(|| fresh_uid(&mut rng)), &keys.card_key),
            VisitKind::Forged => {
                let uid = x.uid.unwrap_or_else(|| fresh_uid(&mut rng));
                let mut token = [0u8; 16];
                rng.fill_bytes(&mut token);
                CardImage { uid, token }
            }
            VisitKind::AlteredUid => {
                let mut card = genuine.expect("validated");
                let mut b = card.uid.as_bytes().to_vec();
                let last = b.len() - 1;
                b[last] ^= 0x01;
                card.uid = Uid::new(&b).expect("same length");
                card
            }
        };
        visits.push(Visit {
            kind: x.kind,
            device: x.device,
            card,
            arrival_ms: x.arrival_ms,
            candidate: x.candidate,
            behavior: if x.candidate.is_some() { Behavior::Vote } else { Behavior::Abandon },
            expected: AuthResult::InvalidToken,
        });
    }

    // Each device serves its queue in arrival order; ties go to the visit
    // listed first, matching the clock's insertion order.
    let mut order: Vec<usize> = (0..visits.len()).collect();
    order.sort_by_key(|&i| (visits[i].arrival_ms, i));
    let mut voted_at: BTreeSet<(usize, Uid)> = BTreeSet::new();
    for i in order {
        let v = &mut visits[i];
        let key = (v.device, v.card.uid);
        v.expected = match v.kind {
            VisitKind::Forged | VisitKind::AlteredUid => AuthResult::InvalidToken,
            VisitKind::Unregistered => AuthResult::UnknownVoter,
            VisitKind::Voter | VisitKind::Repeat | VisitKind::FullCopy if voted_at.contains(&key) => AuthResult::AlreadyVoted,
            _ => AuthResult::Eligible,
        };
        if v.expected == AuthResult::Eligible && v.behavior.commits() {
            voted_at.insert(key);
        }
    }
    visits
}

impl Sim<'_> {
    fn arrive(&mut self, v: usize, now: u64) -> Result<(), SimError> {
        let d = self.visits[v].device;
        let st = &mut self.stations[d];
        if st.busy || !st.queue.is_empty() {
            st.queue.push_back(v);
            return Ok(());
        }
        self.serve(v, now)
    }

    fn serve(&mut self, v: usize, now: u64) -> Result<(), SimError> {
        let visit = &self.visits[v];
        let d = visit.device;
        let steps = self.config.terminal.steps;
        let st = &mut self.stations[d];
        st.busy = true;
        st.current = Some(v);
        let effects = st.terminal.handle_event(TerminalEvent::CardPresented { card: visit.card }, now)?;
        let rec = &mut self.records[v];
        rec.served_ms = Some(now);
        for e in &effects {
            match e {
                Effect::Authenticated { result, .. } => rec.observed = Some(*result),
                Effect::Display { message, .. } if rec.message.is_empty() => rec.message = message.clone(),
                _ => {}
            }
        }
        match *st.terminal.state() {
            SessionState::AwaitingSelection { session } => {
                let index = visit.candidate.and_then(|c| st.terminal.ballot().index_of(c));
                let select = now + steps.auth_phase_ms() + steps.selection_ms;
                match (visit.behavior, index) {
                    (Behavior::Abandon, _) | (_, None) => {
                        self.clock.schedule(session.deadline, Event::Free { device: d });
                    }
                    (Behavior::Vote, Some(i)) => {
                        self.clock.schedule(select, Event::Act { device: d, action: Action::Select(i) });
                        self.clock.schedule(select + steps.confirmation_ms, Event::Act { device: d, action: Action::Confirm });
                    }
                    (Behavior::CancelThenVote, Some(i)) => {
                        let other = (i + 1) % st.terminal.ballot().candidates().len();
                        let cancel = select + steps.confirmation_ms;
                        let reselect = cancel + steps.selection_ms;
                        self.clock.schedule(select, Event::Act { device: d, action: Action::Select(other) });
                        self.clock.schedule(cancel, Event::Act { device: d, action: Action::Cancel });
                        self.clock.schedule(reselect, Event::Act { device: d, action: Action::Select(i) });
                        self.clock.schedule(reselect + steps.confirmation_ms, Event::Act { device: d, action: Action::Confirm });
                    }
                }
            }
            SessionState::Denied { until, .. } => self.clock.schedule(until, Event::Free { device: d }),
            ref s => return Err(SimError::Invariant(format!("terminal in {s:?} right after a card"))),
        }
        Ok(())
    }

    fn act(&mut self, d: usize, action: Action, now: u64) -> Result<(), SimError> {
        let st = &mut self.stations[d];
        let event = match action {
            Action::Select(index) => TerminalEvent::SelectCandidate { index },
            Action::Confirm => TerminalEvent::Confirm,
            Action::Cancel => TerminalEvent::Cancel,
        };
        st.terminal.handle_event(event, now)?;
        if let SessionState::Committed { until, .. } = *st.terminal.state() {
            if let Some(v) = st.current {
                self.records[v].committed = true;
            }
            self.clock.schedule(until, Event::Free { device: d });
        }
        Ok(())
    }

    fn free(&mut self, d: usize, now: u64) -> Result<(), SimError> {
        let st = &mut self.stations[d];
        st.terminal.handle_event(TerminalEvent::Tick { now }, now)?;
        if !st.terminal.is_idle() {
            return Err(SimError::Invariant(format!("device {d} not idle when freed: {:?}", st.terminal.state())));
        }
        st.busy = false;
        st.current = None;
        self.visits_done += 1;
        if let Some(next) = st.queue.pop_front() {
            self.serve(next, now)?;
        }
        Ok(())
    }

    /// Runs one sync cycle per device, back to back. Returns when the last
    /// one finished.
    fn sync_round(&mut self, start: u64) -> Result<u64, SimError> {
        let mut cursor = start;
        for st in &mut self.stations {
            if self.link.probe(cursor) == LinkState::Up {
                let m = st.terminal.metrics();
                let t = Telemetry {
                    auth_success: m.auth_success,
                    auth_failure: m.auth_failure,
                    votes_committed: m.votes_committed,
                    cycle_count: m.cycle_count,
                    cycle_total_ms: m.cycle_total_ms,
                };
                self.server.record_telemetry(st.terminal.device_id(), &t);
            }
            let mut transport = SimTransport { link: &mut self.link, server: &mut self.server };
            let report = st.agent.sync_cycle(st.terminal.log(), &mut st.journal, &mut transport, cursor)?;
            cursor += report.duration_ms;
            if report.batches_sent > 0 {
                st.sync_cycles.push(report);
            }
            let snap = self.server.snapshot();
            if snap.votes_received < self.last_snapshot.0 || snap.turnout < self.last_snapshot.1 {
                self.monotone = false;
            }
            self.last_snapshot = (snap.votes_received, snap.turnout);
        }
        Ok(cursor)
    }

    fn all_synced(&self) -> bool {
        self.stations.iter().all(|st| {
            let n = st.terminal.log().len();
            n == 0 || st.journal.head() == Some(n as u32 - 1)
        })
    }
}

impl Station {
    fn new(terminal: Terminal<MemStorage>, agent: SyncAgent) -> Result<Self, SimError> {
        Ok(Self {
            terminal,
            journal: SyncJournal::open(MemStorage::new())?,
            agent,
            queue: VecDeque::new(),
            busy: false,
            current: None,
            sync_cycles: Vec::new(),
        })
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport, SimError> {
    Ok(simulate(config, false)?.report)
}

/// Runs a scenario and keeps the logs, journals, archive and wire trace.
pub fn simulate(config: &ScenarioConfig, capture_trace: bool) -> Result<ScenarioRun, SimError> {
    config.validate()?;
    let keys = config.keys();
    let device_keys = config.device_keys();
    let keyring = KeyRing { vote_key: keys.vote_key, devices: device_keys.iter().copied().collect() };
    let registry =
        VoterRegistry::with_voters(&keys.registry_key, config.voters.iter().map(|v| v.uid)).map_err(|e| SimError::Config(e.to_string()))?;

    let mut stations = Vec::with_capacity(device_keys.len());
    for (i, (id, key)) in device_keys.iter().enumerate() {
        let log = VoteLog::open(MemStorage::new(), *id, *key)?;
        let mut iv_rng = ChaCha8Rng::seed_from_u64(config.seed);
        iv_rng.set_stream(0x6976_0000 + i as u64);
        let terminal = Terminal::new(
            registry.clone(),
            config.ballot.clone(),
            TerminalKeys { card_key: keys.card_key, vote_key: keys.vote_key },
            config.terminal,
            log,
            iv_rng,
        );
        stations.push(Station::new(terminal, SyncAgent::new(*id, config.sync))?);
    }

    let visits = plan_visits(config, &keys);
    let records = visits
        .iter()
        .map(|v| VisitRecord {
            kind: v.kind,
            device_id: device_keys[v.device].0,
            uid: v.card.uid,
            arrival_ms: v.arrival_ms,
            served_ms: None,
            expected: v.expected,
            observed: None,
            message: String::new(),
            committed: false,
        })
        .collect();
    let cards = visits.iter().map(|v| v.card).collect();

    let mut link = FaultyLink::new(config.link.clone(), config.faults.clone());
    if capture_trace {
        link.capture();
    }
    let mut sim = Sim {
        config,
        clock: SimClock::new(),
        stations,
        visits,
        records,
        server: Server::new(keyring.clone()),
        link,
        visits_done: 0,
        last_snapshot: (0, 0),
        monotone: true,
    };
    for (i, v) in sim.visits.iter().enumerate() {
        sim.clock.schedule(v.arrival_ms, Event::Arrive(i));
    }
    if !sim.visits.is_empty() {
        sim.clock.schedule(config.sync_interval_ms, Event::Sync);
    }

    while let Some((now, event)) = sim.clock.pop() {
        match event {
            Event::Arrive(v) => sim.arrive(v, now)?,
            Event::Act { device, action } => sim.act(device, action, now)?,
            Event::Free { device } => sim.free(device, now)?,
            Event::Sync => {
                let done = sim.sync_round(now)?;
                if sim.visits_done < sim.visits.len() {
                    sim.clock.schedule(done.max(now + config.sync_interval_ms), Event::Sync);
                }
            }
        }
    }

    let polls_closed_ms = sim.clock.now();
    let mut t = polls_closed_ms;
    let mut rounds = 0;
    loop {
        t = t.max(sim.link.schedule().next_up(t));
        sim.clock.advance_to(t);
        let done = sim.sync_round(t)?;
        rounds += 1;
        sim.clock.advance_to(done);
        if sim.all_synced() || rounds >= config.max_catchup_rounds {
            t = done;
            break;
        }
        t = done.max(t + config.catchup_interval_ms);
    }

    let finished_ms = t;
    sim.server.detect_anomalies(finished_ms);
    let report = build_report(&sim, polls_closed_ms, finished_ms, rounds);

    let trace = sim.link.take_trace();
    let archive = sim.server.write_archive();
    let (logs, journals) = sim
        .stations
        .iter()
        .map(|st| {
            let id = st.terminal.device_id();
            ((id, st.terminal.log().storage().bytes().to_vec()), (id, st.journal.storage().bytes().to_vec()))
        })
        .unzip();
    Ok(ScenarioRun { report, keys, keyring, registry, cards, logs, journals, archive, trace })
}

fn check(checks: &mut Vec<InvariantCheck>, name: &str, passed: bool, detail: String) {
    checks.push(InvariantCheck { name: name.to_owned(), passed, detail });
}

fn build_report(sim: &Sim<'_>, polls_closed_ms: u64, finished_ms: u64, catchup_rounds: u32) -> ScenarioReport {
    let config = sim.config;
    let server = &sim.server;
    let tally = server.tally(&config.ballot);
    let snapshot = server.snapshot();
    let mut checks = Vec::new();

    let mut auth = AuthSummary::default();
    for r in &sim.records {
        let Some(observed) = r.observed else { continue };
        auth.presentations += 1;
        *auth.results.entry(observed).or_default() += 1;
        match (r.expected == AuthResult::Eligible, observed == AuthResult::Eligible) {
            (false, true) => auth.false_accepts += 1,
            (true, false) => auth.false_rejects += 1,
            (false, false) if observed != r.expected => auth.misclassified += 1,
            _ => {}
        }
    }
    let unserved = sim.records.iter().filter(|r| r.observed.is_none()).count();
    check(
        &mut checks,
        "auth_accuracy",
        auth.false_accepts == 0 && auth.false_rejects == 0 && auth.misclassified == 0 && unserved == 0,
        format!(
            "{} presentations, {} false accepts, {} false rejects, {} misclassified, {} unserved",
            auth.presentations, auth.false_accepts, auth.false_rejects, auth.misclassified, unserved
        ),
    );

    let denied_ok = sim.records.iter().all(|r| match r.observed {
        Some(AuthResult::Eligible) => r.message == crate::terminal::MSG_AUTHENTICATED,
        Some(_) => r.message == crate::terminal::MSG_DENIED,
        None => true,
    });
    check(&mut checks, "display_messages", denied_ok, "every refusal shows the denial message".into());

    let mut devices = Vec::new();
    let mut exactly_once = true;
    let mut chains = true;
    let mut agreement = true;
    for st in &sim.stations {
        let id = st.terminal.device_id();
        let log = st.terminal.log();
        let accepted: Vec<_> = server.device_entries(id).cloned().collect();
        exactly_once &= accepted.as_slice() == log.entries();
        chains &= crate::wormlog::verify_log_bytes(log.storage().bytes(), &config_key(sim, id)).is_ok_and(|s| s.is_intact());
        agreement &= st.journal.head() == server.device_head(id) && check_consistency(log.len(), &st.journal).is_ok();
        devices.push(DeviceReport {
            device_id: id,
            votes_logged: log.len() as u64,
            journal_head: st.journal.head(),
            server_head: server.device_head(id),
            batches_accepted: server.batch_count(id) as u64,
            sync_cycles: st.sync_cycles.clone(),
        });
    }
    check(&mut checks, "exactly_once", exactly_once, "server holds exactly the committed log entries of every device".into());
    check(&mut checks, "chains_intact", chains && server.recheck().is_ok(), "device logs and server ledger re-verify".into());
    check(&mut checks, "journal_agreement", agreement, "journal head equals server head per device".into());
    check(&mut checks, "eventual_sync", sim.all_synced(), format!("{catchup_rounds} catch-up rounds after polls closed"));

    let excluded = tally.excluded.len() as u64;
    check(
        &mut checks,
        "tally_conservation",
        tally.counted() + excluded == server.accepted_len() as u64,
        format!("{} counted + {} excluded vs {} accepted", tally.counted(), excluded, server.accepted_len()),
    );

    // Recount from the script: which UIDs were meant to end up voting, for whom.
    let mut intents: BTreeMap<Uid, Vec<u16>> = BTreeMap::new();
    for v in &sim.visits {
        if v.expected == AuthResult::Eligible && v.behavior.commits() {
            intents.entry(v.card.uid).or_default().extend(v.candidate);
        }
    }
    let mut low: BTreeMap<u16, u64> = config.ballot.candidates().iter().map(|c| (c.id, 0)).collect();
    let mut high = low.clone();
    for cands in intents.values() {
        let distinct: BTreeSet<_> = cands.iter().collect();
        for c in &distinct {
            *high.get_mut(c).expect("ballot candidate") += 1;
        }
        if let [only] = distinct.iter().collect::<Vec<_>>()[..] {
            *low.get_mut(only).expect("ballot candidate") += 1;
        }
    }
    let oracle_ok = tally.counted() == intents.len() as u64 && tally.counts.iter().all(|(c, n)| low[c] <= *n && *n <= high[c]);
    check(
        &mut checks,
        "oracle_recount",
        oracle_ok,
        if low == high {
            format!("expected {low:?}, got {:?}", tally.counts)
        } else {
            format!("expected between {low:?} and {high:?}, got {:?}", tally.counts)
        },
    );

    let expected_dups: usize = intents.values().map(|c| c.len() - 1).sum();
    let dup_anomalies = snapshot.anomalies.iter().filter(|a| a.kind == AnomalyKind::DuplicateUidAcrossDevices).count();
    let dup_exclusions = tally.excluded.iter().filter(|x| x.reason == ExcludeReason::DuplicateUid).count();
    check(
        &mut checks,
        "duplicates_flagged",
        dup_anomalies == expected_dups && dup_exclusions == expected_dups,
        format!("{expected_dups} expected, {dup_anomalies} anomalies, {dup_exclusions} exclusions"),
    );
    let integrity = snapshot
        .anomalies
        .iter()
        .filter(|a| matches!(a.kind, AnomalyKind::ChainBreak | AnomalyKind::ReplayedBatch | AnomalyKind::TimestampRegression))
        .count();
    check(&mut checks, "no_chain_anomalies", integrity == 0, format!("{integrity} chain, replay or timestamp anomalies"));

    let mut timing = TimingStats { polls_closed_ms, finished_ms, catchup_rounds, ..TimingStats::default() };
    let mut total = 0;
    for st in &sim.stations {
        let m = st.terminal.metrics();
        timing.voting_cycles += m.cycle_count;
        total += m.cycle_total_ms;
        timing.max_cycle_ms = timing.max_cycle_ms.max(m.cycle_max_ms);
        timing.max_display_latency_ms = timing.max_display_latency_ms.max(m.max_display_latency_ms);
    }
    if timing.voting_cycles > 0 {
        timing.mean_cycle_ms = total as f64 / timing.voting_cycles as f64;
    }
    check(
        &mut checks,
        "display_latency",
        timing.max_display_latency_ms <= 300,
        format!("max {} ms, budget 300 ms", timing.max_display_latency_ms),
    );
    check(
        &mut checks,
        "monitoring",
        sim.monotone && snapshot.votes_received <= snapshot.turnout,
        format!("votes_received {} <= turnout {}, never decreasing", snapshot.votes_received, snapshot.turnout),
    );

    ScenarioReport {
        name: config.name.clone(),
        seed: config.seed,
        tally,
        snapshot,
        auth,
        devices,
        timing,
        visits: sim.records.clone(),
        checks,
    }
}

fn config_key(sim: &Sim<'_>, id: DeviceId) -> crate::crypto::Aes128Key {
    sim.server.keys().devices[&id]
}

/// Runs the scenario twice and compares the JSON reports byte for byte.
pub fn replay_check(config: &ScenarioConfig) -> Result<bool, SimError> {
    Ok(run_scenario(config)?.to_json() == run_scenario(config)?.to_json())
}

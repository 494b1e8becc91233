//! The voting-station state machine: card presentation, authentication,
//! candidate selection, confirmation, then encryption and log append.
//!
//! [`handle_event`] is the pure transition table. [`Terminal`] drives it,
//! executing `AppendEntry` against the device log and applying `MarkVoted`
//! only after the append succeeded.

mod packet;
mod station;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cardauth::{authenticate, AuthResult, CardImage, Uid, VoterRegistry, VoterStatus};
use crate::crypto::Aes128Key;

pub use packet::{build_vote_packet, parse_vote_packet, VotePacket};
pub use station::{Terminal, TerminalKeys, TerminalMetrics};

pub const MSG_AUTHENTICATED: &str = "Voter Authenticated";
pub const MSG_RECORDED: &str = "Vote Recorded";
pub const MSG_DENIED: &str = "Access Denied";
/// Shown again on an out-of-range selection or after Cancel.
pub const MSG_SELECT: &str = "Select Candidate";

#[derive(Debug, Error)]
pub enum TerminalError {
    #[error("malformed vote packet")]
    MalformedPacket,
    #[error("invalid ballot: {0}")]
    InvalidBallot(&'static str),
    #[error("vote storage failed: {0}")]
    Storage(#[from] crate::wormlog::WormError),
    #[error("terminal contract violated: {0}")]
    Contract(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u16,
    pub name: String,
}

/// Ordered, non-empty candidate list with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Ballot {
    candidates: Vec<Candidate>,
}

impl Ballot {
    pub fn new(candidates: Vec<Candidate>) -> Result<Self, TerminalError> {
        if candidates.is_empty() {
            return Err(TerminalError::InvalidBallot("no candidates"));
        }
        let mut ids: Vec<u16> = candidates.iter().map(|c| c.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(TerminalError::InvalidBallot("duplicate candidate id"));
        }
        Ok(Self { candidates })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn get(&self, index: usize) -> Option<&Candidate> {
        self.candidates.get(index)
    }

    pub fn contains(&self, candidate_id: u16) -> bool {
        self.candidates.iter().any(|c| c.id == candidate_id)
    }

    pub fn index_of(&self, candidate_id: u16) -> Option<usize> {
        self.candidates.iter().position(|c| c.id == candidate_id)
    }
}

impl<'de> Deserialize<'de> for Ballot {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let candidates = Vec::<Candidate>::deserialize(d)?;
        Ballot::new(candidates).map_err(serde::de::Error::custom)
    }
}

/// Simulated duration of each phase of a voting cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepDurations {
    pub card_read_ms: u64,
    pub auth_ms: u64,
    pub selection_ms: u64,
    pub confirmation_ms: u64,
    pub encryption_ms: u64,
    pub append_ms: u64,
    /// Time from an event step to the message being on screen. Overlaps the
    /// phases above rather than adding to them.
    pub display_ms: u64,
}

impl Default for StepDurations {
    fn default() -> Self {
        Self {
            card_read_ms: 500,
            auth_ms: 1_000,
            selection_ms: 6_000,
            confirmation_ms: 2_500,
            encryption_ms: 700,
            append_ms: 800,
            display_ms: 200,
        }
    }
}

impl StepDurations {
    /// Card tap to vote persisted, with no cancels.
    pub fn cycle_ms(&self) -> u64 {
        self.card_read_ms + self.auth_ms + self.selection_ms + self.confirmation_ms + self.encryption_ms + self.append_ms
    }

    pub fn auth_phase_ms(&self) -> u64 {
        self.card_read_ms + self.auth_ms
    }

    pub fn commit_phase_ms(&self) -> u64 {
        self.encryption_ms + self.append_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerminalConfig {
    pub steps: StepDurations,
    /// Measured from authentication.
    pub session_timeout_ms: u64,
    /// How long Denied and Committed stay on screen before returning to Idle.
    pub dwell_ms: u64,
}

impl Default for TerminalConfig {
    fn default() -> Self {
        Self { steps: StepDurations::default(), session_timeout_ms: 60_000, dwell_ms: 2_000 }
    }
}

/// An authenticated voter's session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub uid: Uid,
    /// When the card was tapped.
    pub started_at: u64,
    /// Abandon the session at or after this time.
    pub deadline: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SessionState {
    Idle,
    AwaitingSelection { session: Session },
    AwaitingConfirmation { session: Session, candidate_id: u16 },
    Denied { reason: AuthResult, until: u64 },
    Committed { uid: Uid, until: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TerminalEvent {
    CardPresented { card: CardImage },
    SelectCandidate { index: usize },
    Confirm,
    Cancel,
    Tick { now: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Effect {
    Display {
        message: String,
        latency_ms: u64,
    },
    /// Outcome of a card check, reported for monitoring.
    Authenticated {
        uid: Uid,
        result: AuthResult,
    },
    AppendEntry {
        packet: Vec<u8>,
        uid: Uid,
    },
    MarkVoted {
        uid: Uid,
    },
    RecordCycle {
        duration_ms: u64,
    },
}

/// Read-only inputs to one transition.
#[derive(Debug, Clone, Copy)]
pub struct MachineContext<'a> {
    pub registry: &'a VoterRegistry,
    pub ballot: &'a Ballot,
    pub card_key: &'a Aes128Key,
    pub config: &'a TerminalConfig,
    pub now: u64,
}

fn display(ctx: &MachineContext<'_>, message: &str) -> Effect {
    Effect::Display { message: message.to_owned(), latency_ms: ctx.config.steps.display_ms }
}

/// The transition table. Events that do not apply to the current state are
/// ignored and produce no effects.
pub fn handle_event(
    state: &SessionState,
    event: &TerminalEvent,
    ctx: &MachineContext<'_>,
) -> Result<(SessionState, Vec<Effect>), TerminalError> {
    use SessionState::*;
    use TerminalEvent::*;

    let now = match event {
        Tick { now } => (*now).max(ctx.now),
        _ => ctx.now,
    };
    let steps = &ctx.config.steps;

    // Expiry applies before anything else, whatever the event.
    match state {
        AwaitingSelection { session } | AwaitingConfirmation { session, .. } if now >= session.deadline => {
            return Ok((Idle, Vec::new()));
        }
        Denied { until, .. } | Committed { until, .. } if now >= *until => {
            let next = (Idle, Vec::new());
            return match event {
                // The screen has already cleared, so a new card is served.
                CardPresented { .. } => handle_event(&Idle, event, ctx),
                _ => Ok(next),
            };
        }
        _ => {}
    }

    let out = match (state, event) {
        (Idle, CardPresented { card }) => {
            let result = authenticate(ctx.registry, card, ctx.card_key);
            let auth_done = now + steps.auth_phase_ms();
            let decision = Effect::Authenticated { uid: card.uid, result };
            if result == AuthResult::Eligible {
                let session = Session { uid: card.uid, started_at: now, deadline: auth_done + ctx.config.session_timeout_ms };
                (AwaitingSelection { session }, vec![decision, display(ctx, MSG_AUTHENTICATED)])
            } else {
                (Denied { reason: result, until: auth_done + ctx.config.dwell_ms }, vec![decision, display(ctx, MSG_DENIED)])
            }
        }
        (AwaitingSelection { session }, SelectCandidate { index }) => match ctx.ballot.get(*index) {
            Some(c) => (AwaitingConfirmation { session: *session, candidate_id: c.id }, Vec::new()),
            None => (*state, vec![display(ctx, MSG_SELECT)]),
        },
        (AwaitingConfirmation { session, .. }, Cancel) => (AwaitingSelection { session: *session }, vec![display(ctx, MSG_SELECT)]),
        (AwaitingConfirmation { session, candidate_id }, Confirm) => {
            if !ctx.ballot.contains(*candidate_id) {
                return Err(TerminalError::Contract(format!("candidate {candidate_id} not on ballot")));
            }
            match ctx.registry.get(&session.uid).map(|r| r.status) {
                Some(VoterStatus::NotVoted) => {}
                other => return Err(TerminalError::Contract(format!("session for {} but registry status is {other:?}", session.uid))),
            }
            let done = now + steps.commit_phase_ms();
            let effects = vec![
                Effect::AppendEntry { packet: build_vote_packet(&session.uid, *candidate_id, now), uid: session.uid },
                Effect::MarkVoted { uid: session.uid },
                display(ctx, MSG_RECORDED),
                Effect::RecordCycle { duration_ms: done - session.started_at },
            ];
            (Committed { uid: session.uid, until: done + ctx.config.dwell_ms }, effects)
        }
        _ => (*state, Vec::new()),
    };
    Ok(out)
}

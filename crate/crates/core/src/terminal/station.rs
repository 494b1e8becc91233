use std::collections::BTreeMap;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{handle_event, Ballot, Effect, MachineContext, SessionState, TerminalConfig, TerminalError, TerminalEvent};
use crate::cardauth::{AuthResult, Uid, VoterRegistry};
use crate::crypto::{encrypt_packet, Aes128Key, Iv128};
use crate::wormlog::{DeviceId, Storage, VoteLog};

#[derive(Debug, Clone, Copy)]
pub struct TerminalKeys {
    pub card_key: Aes128Key,
    pub vote_key: Aes128Key,
}

/// Counters a terminal keeps about its own sessions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalMetrics {
    pub auth_success: u64,
    pub auth_failure: u64,
    pub auth_results: BTreeMap<String, u64>,
    pub votes_committed: u64,
    pub cycle_count: u64,
    pub cycle_total_ms: u64,
    pub cycle_max_ms: u64,
    pub max_display_latency_ms: u64,
    pub storage_errors: u64,
}

/// One voting station: state machine plus the registry copy, the device
/// log and an IV source. Single-threaded; events must arrive in clock order.
pub struct Terminal<S: Storage> {
    state: SessionState,
    registry: VoterRegistry,
    ballot: Ballot,
    keys: TerminalKeys,
    config: TerminalConfig,
    log: VoteLog<S>,
    iv_rng: ChaCha8Rng,
    metrics: TerminalMetrics,
    now: u64,
}

impl<S: Storage> Terminal<S> {
    pub fn new(
        registry: VoterRegistry,
        ballot: Ballot,
        keys: TerminalKeys,
        config: TerminalConfig,
        log: VoteLog<S>,
        iv_rng: ChaCha8Rng,
    ) -> Self {
        Self { state: SessionState::Idle, registry, ballot, keys, config, log, iv_rng, metrics: TerminalMetrics::default(), now: 0 }
    }

    /// Applies one event at simulated time `now`.
    ///
    /// On a storage failure during commit the session stays in
    /// `AwaitingConfirmation`, the registry is untouched, and the error is
    /// returned; the voter can confirm again.
    pub fn handle_event(&mut self, event: TerminalEvent, now: u64) -> Result<Vec<Effect>, TerminalError> {
        if now < self.now {
            return Err(TerminalError::Contract(format!("clock went backwards: {now} < {}", self.now)));
        }
        self.now = now;

        let ctx =
            MachineContext { registry: &self.registry, ballot: &self.ballot, card_key: &self.keys.card_key, config: &self.config, now };
        let (next, effects) = handle_event(&self.state, &event, &ctx)?;

        if let Some(Effect::AppendEntry { packet, .. }) = effects.iter().find(|e| matches!(e, Effect::AppendEntry { .. })) {
            if let Err(e) = self.commit_vote(packet, now) {
                self.metrics.storage_errors += 1;
                return Err(e);
            }
        }

        for effect in &effects {
            match effect {
                Effect::MarkVoted { uid } => self.registry.mark_voted(uid, now).map_err(|e| TerminalError::Contract(e.to_string()))?,
                Effect::Authenticated { result, .. } => {
                    if *result == AuthResult::Eligible {
                        self.metrics.auth_success += 1;
                    } else {
                        self.metrics.auth_failure += 1;
                    }
                    *self.metrics.auth_results.entry(format!("{result:?}")).or_default() += 1;
                }
                Effect::RecordCycle { duration_ms } => {
                    self.metrics.votes_committed += 1;
                    self.metrics.cycle_count += 1;
                    self.metrics.cycle_total_ms += duration_ms;
                    self.metrics.cycle_max_ms = self.metrics.cycle_max_ms.max(*duration_ms);
                }
                Effect::Display { latency_ms, .. } => {
                    self.metrics.max_display_latency_ms = self.metrics.max_display_latency_ms.max(*latency_ms);
                }
                Effect::AppendEntry { .. } => {}
            }
        }
        self.state = next;
        Ok(effects)
    }

    /// Encrypts the packet under the vote key with a fresh IV and appends it.
    fn commit_vote(&mut self, packet: &[u8], now: u64) -> Result<u32, TerminalError> {
        let mut iv = [0u8; 16];
        self.iv_rng.fill_bytes(&mut iv);
        let iv = Iv128::new(iv);
        let ct = encrypt_packet(&self.keys.vote_key, &iv, packet).map_err(|e| TerminalError::Contract(e.to_string()))?;
        Ok(self.log.append(now, iv, ct)?)
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn is_idle(&self) -> bool {
        self.state == SessionState::Idle
    }

    pub fn registry(&self) -> &VoterRegistry {
        &self.registry
    }

    pub fn ballot(&self) -> &Ballot {
        &self.ballot
    }

    pub fn config(&self) -> &TerminalConfig {
        &self.config
    }

    pub fn log(&self) -> &VoteLog<S> {
        &self.log
    }

    pub fn log_mut(&mut self) -> &mut VoteLog<S> {
        &mut self.log
    }

    pub fn metrics(&self) -> &TerminalMetrics {
        &self.metrics
    }

    pub fn device_id(&self) -> DeviceId {
        self.log.device_id()
    }

    pub fn has_voted(&self, uid: &Uid) -> bool {
        self.registry.get(uid).is_some_and(|r| r.voted_at.is_some())
    }
}

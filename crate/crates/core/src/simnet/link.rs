//! Unreliable link between terminals and the server.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::server::Server;
use crate::sync::{encode_response, Exchange, LinkState, Transport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkWindow {
    pub from_ms: u64,
    /// Exclusive.
    pub to_ms: u64,
    pub state: LinkState,
}

/// Link state over time. Outside every window the link is Up.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSchedule {
    pub windows: Vec<LinkWindow>,
    /// Operator forced the link up (manual upload).
    pub manual_override: bool,
}

impl LinkSchedule {
    pub fn always_up() -> Self {
        Self::default()
    }

    /// Down on `[from_ms, to_ms)`.
    pub fn outage(from_ms: u64, to_ms: u64) -> Self {
        Self { windows: vec![LinkWindow { from_ms, to_ms, state: LinkState::Down }], manual_override: false }
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut last_end = 0;
        for (i, w) in self.windows.iter().enumerate() {
            if w.from_ms >= w.to_ms {
                return Err(format!("link window {i} is empty or reversed"));
            }
            if i > 0 && w.from_ms < last_end {
                return Err(format!("link window {i} overlaps or is out of order"));
            }
            last_end = w.to_ms;
        }
        Ok(())
    }

    pub fn state_at(&self, at_ms: u64) -> LinkState {
        if self.manual_override {
            return LinkState::Up;
        }
        self.windows.iter().find(|w| w.from_ms <= at_ms && at_ms < w.to_ms).map_or(LinkState::Up, |w| w.state)
    }

    /// First instant at or after `at_ms` when the link is Up.
    pub fn next_up(&self, at_ms: u64) -> u64 {
        let mut t = at_ms;
        while self.state_at(t) == LinkState::Down {
            t = self.windows.iter().find(|w| w.from_ms <= t && t < w.to_ms).map_or(t + 1, |w| w.to_ms);
        }
        t
    }
}

/// Which byte a scheduled corruption flips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetRule {
    Fixed(usize),
    FromEnd(usize),
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corruption {
    /// Applies to the first uplink message sent at or after this time.
    pub at_ms: u64,
    pub rule: OffsetRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultPlan {
    pub corruptions: Vec<Corruption>,
    /// Chance that an uplink message gets one random byte flipped.
    pub corrupt_probability: f64,
    /// Chance that any message, either direction, is lost.
    pub drop_probability: f64,
    pub delay_min_ms: u64,
    pub delay_max_ms: u64,
    /// How long a sender waits for a reply that never comes.
    pub reply_timeout_ms: u64,
    pub seed: u64,
}

impl Default for FaultPlan {
    fn default() -> Self {
        Self {
            corruptions: Vec::new(),
            corrupt_probability: 0.0,
            drop_probability: 0.0,
            delay_min_ms: 0,
            delay_max_ms: 0,
            reply_timeout_ms: 2_000,
            seed: 0,
        }
    }
}

impl FaultPlan {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.drop_probability) {
            return Err("drop_probability must be in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.corrupt_probability) {
            return Err("corrupt_probability must be in [0, 1]".into());
        }
        if self.delay_min_ms > self.delay_max_ms {
            return Err("delay_min_ms exceeds delay_max_ms".into());
        }
        if self.corruptions.windows(2).any(|w| w[0].at_ms > w[1].at_ms) {
            return Err("corruptions must be in time order".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Uplink,
    Downlink,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SendResult {
    Delivered { bytes: Vec<u8>, at_ms: u64 },
    Dropped,
    LinkDown,
}

/// One message as it left the sender.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireMessage {
    pub at_ms: u64,
    pub direction: Direction,
    #[serde(with = "crate::hexser::vec")]
    pub bytes: Vec<u8>,
}

/// A link schedule plus a seeded fault source.
#[derive(Debug, Clone)]
pub struct FaultyLink {
    schedule: LinkSchedule,
    plan: FaultPlan,
    rng: ChaCha8Rng,
    next_corruption: usize,
    trace: Option<Vec<WireMessage>>,
}

impl FaultyLink {
    pub fn new(schedule: LinkSchedule, plan: FaultPlan) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(plan.seed);
        Self { schedule, plan, rng, next_corruption: 0, trace: None }
    }

    /// Records every message handed to the link from now on.
    pub fn capture(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<WireMessage> {
        self.trace.take().unwrap_or_default()
    }

    pub fn schedule(&self) -> &LinkSchedule {
        &self.schedule
    }

    pub fn plan(&self) -> &FaultPlan {
        &self.plan
    }

    pub fn probe(&self, at_ms: u64) -> LinkState {
        self.schedule.state_at(at_ms)
    }

    /// Sends one message at `at_ms`. Down link refuses it; otherwise the
    /// drop roll, delay draw and corruption all come from the plan's rng in
    /// a fixed order, so a run replays exactly.
    pub fn transport_send(&mut self, at_ms: u64, bytes: &[u8], direction: Direction) -> SendResult {
        if self.probe(at_ms) == LinkState::Down {
            return SendResult::LinkDown;
        }
        if let Some(trace) = &mut self.trace {
            trace.push(WireMessage { at_ms, direction, bytes: bytes.to_vec() });
        }
        let dropped = self.rng.gen_bool(self.plan.drop_probability);
        let delay = self.rng.gen_range(self.plan.delay_min_ms..=self.plan.delay_max_ms);
        let random_flip = self.rng.gen_bool(self.plan.corrupt_probability);
        let random_offset: usize = self.rng.gen();
        if dropped {
            return SendResult::Dropped;
        }
        let mut out = bytes.to_vec();
        if direction == Direction::Uplink && !out.is_empty() {
            while let Some(c) = self.plan.corruptions.get(self.next_corruption).filter(|c| c.at_ms <= at_ms) {
                let n = out.len();
                let off = match c.rule {
                    OffsetRule::Fixed(k) => k % n,
                    OffsetRule::FromEnd(k) => n - 1 - k % n,
                    OffsetRule::Random => random_offset % n,
                };
                out[off] ^= 0xff;
                self.next_corruption += 1;
            }
            if random_flip {
                let n = out.len();
                out[random_offset % n] ^= 1 << (random_offset / n % 8);
            }
        }
        SendResult::Delivered { bytes: out, at_ms: at_ms + delay }
    }
}

/// Carries sync traffic from one terminal to the server over a [`FaultyLink`].
pub struct SimTransport<'a> {
    pub link: &'a mut FaultyLink,
    pub server: &'a mut Server,
}

impl Transport for SimTransport<'_> {
    fn probe(&mut self, at_ms: u64) -> LinkState {
        self.link.probe(at_ms)
    }

    fn exchange(&mut self, at_ms: u64, request: &[u8]) -> Exchange {
        let timeout = self.link.plan().reply_timeout_ms;
        let (bytes, arrived) = match self.link.transport_send(at_ms, request, Direction::Uplink) {
            SendResult::LinkDown => return Exchange::LinkDown,
            SendResult::Dropped => return Exchange::Lost { delay_ms: timeout },
            SendResult::Delivered { bytes, at_ms } => (bytes, at_ms),
        };
        let outcome = self.server.ingest(&bytes, arrived);
        match self.link.transport_send(arrived, &encode_response(&outcome), Direction::Downlink) {
            SendResult::Delivered { bytes, at_ms: back } => Exchange::Reply { bytes, delay_ms: back - at_ms },
            SendResult::Dropped | SendResult::LinkDown => Exchange::Lost { delay_ms: timeout.max(arrived - at_ms) },
        }
    }
}

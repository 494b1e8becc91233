//! Scenario files.
//!
//! A scenario is a JSON document; see `fixtures/` for complete examples.
//! Keys, UIDs and device ids are hex strings and all times are simulated
//! milliseconds. Every field except `name`, `ballot`, `devices` and
//! `voters` has a default.

use std::collections::BTreeSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::link::{FaultPlan, LinkSchedule};
use super::SimError;
use crate::cardauth::Uid;
use crate::crypto::Aes128Key;
use crate::sync::SyncConfig;
use crate::terminal::{Ballot, TerminalConfig};
use crate::wormlog::DeviceId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioKeys {
    pub card_key: Aes128Key,
    pub vote_key: Aes128Key,
    pub registry_key: Aes128Key,
}

impl ScenarioKeys {
    /// Keys drawn from the scenario seed.
    pub fn derive(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0x6b657973);
        let mut key = || {
            let mut k = [0u8; 16];
            rng.fill_bytes(&mut k);
            Aes128Key::new(k)
        };
        Self { card_key: key(), vote_key: key(), registry_key: key() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub id: DeviceId,
    /// MAC key; drawn from the seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<Aes128Key>,
}

impl DeviceSpec {
    pub fn resolved_key(&self, seed: u64, index: usize) -> Aes128Key {
        self.key.unwrap_or_else(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(0x64657600 + index as u64);
            let mut k = [0u8; 16];
            rng.fill_bytes(&mut k);
            Aes128Key::new(k)
        })
    }
}

/// What a voter does after the terminal accepts their card.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    #[default]
    Vote,
    /// Picks a candidate, cancels at the confirmation screen, picks again.
    CancelThenVote,
    /// Walks away; the session times out.
    Abandon,
}

impl Behavior {
    pub fn commits(self) -> bool {
        self != Behavior::Abandon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoterSpec {
    pub uid: Uid,
    pub candidate: u16,
    pub arrival_ms: u64,
    /// Index into `devices`.
    #[serde(default)]
    pub device: usize,
    #[serde(default)]
    pub behavior: Behavior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitKind {
    Voter,
    /// A registered voter's genuine card, presented again.
    Repeat,
    /// Genuine token for a UID that is not registered.
    Unregistered,
    /// UID with a random token.
    Forged,
    /// A registered voter's token on a card whose UID was changed.
    AlteredUid,
    /// Bit-exact copy of a registered voter's card.
    FullCopy,
}

/// A card presentation other than a roster voter's first visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraVisit {
    pub kind: VisitKind,
    pub arrival_ms: u64,
    #[serde(default)]
    pub device: usize,
    /// The roster voter whose card is reused or altered.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voter: Option<Uid>,
    /// UID printed on a forged or unregistered card; drawn from the seed
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uid: Option<Uid>,
    /// Candidate chosen if the card is accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<u16>,
}

fn default_sync_interval() -> u64 {
    60_000
}

fn default_catchup_interval() -> u64 {
    30_000
}

fn default_max_catchup_rounds() -> u32 {
    2_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub ballot: Ballot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keys: Option<ScenarioKeys>,
    pub devices: Vec<DeviceSpec>,
    pub voters: Vec<VoterSpec>,
    #[serde(default)]
    pub extra_visits: Vec<ExtraVisit>,
    #[serde(default)]
    pub link: LinkSchedule,
    #[serde(default)]
    pub faults: FaultPlan,
    #[serde(default)]
    pub terminal: TerminalConfig,
    #[serde(default)]
    pub sync: SyncConfig,
    /// Period of sync cycles while polls are open.
    #[serde(default = "default_sync_interval")]
    pub sync_interval_ms: u64,
    /// Period of sync cycles after polls close, until every device is synced.
    #[serde(default = "default_catchup_interval")]
    pub catchup_interval_ms: u64,
    #[serde(default = "default_max_catchup_rounds")]
    pub max_catchup_rounds: u32,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let config: Self = serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn keys(&self) -> ScenarioKeys {
        self.keys.unwrap_or_else(|| ScenarioKeys::derive(self.seed))
    }

    pub fn device_keys(&self) -> Vec<(DeviceId, Aes128Key)> {
        self.devices.iter().enumerate().map(|(i, d)| (d.id, d.resolved_key(self.seed, i))).collect()
    }

    pub fn find_voter(&self, uid: &Uid) -> Option<&VoterSpec> {
        self.voters.iter().find(|v| v.uid == *uid)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let err = |m: String| Err(SimError::Config(m));
        if self.devices.is_empty() {
            return err("at least one device is required".into());
        }
        let ids: BTreeSet<_> = self.devices.iter().map(|d| d.id).collect();
        if ids.len() != self.devices.len() {
            return err("duplicate device id".into());
        }
        let mut uids = BTreeSet::new();
        let mut last_arrival = vec![0u64; self.devices.len()];
        for (i, v) in self.voters.iter().enumerate() {
            if v.device >= self.devices.len() {
                return err(format!("voter {i}: device index {} out of range", v.device));
            }
            if !self.ballot.contains(v.candidate) {
                return err(format!("voter {i}: candidate {} not on ballot", v.candidate));
            }
            if !uids.insert(v.uid) {
                return err(format!("voter {i}: duplicate uid {}", v.uid));
            }
            if v.arrival_ms < last_arrival[v.device] {
                return err(format!("voter {i}: arrivals must ascend per device"));
            }
            last_arrival[v.device] = v.arrival_ms;
        }
        let mut last_arrival = vec![0u64; self.devices.len()];
        for (i, x) in self.extra_visits.iter().enumerate() {
            if x.device >= self.devices.len() {
                return err(format!("extra visit {i}: device index {} out of range", x.device));
            }
            if x.arrival_ms < last_arrival[x.device] {
                return err(format!("extra visit {i}: arrivals must ascend per device"));
            }
            last_arrival[x.device] = x.arrival_ms;
            if let Some(c) = x.candidate {
                if !self.ballot.contains(c) {
                    return err(format!("extra visit {i}: candidate {c} not on ballot"));
                }
            }
            match x.kind {
                VisitKind::Voter => return err(format!("extra visit {i}: kind voter belongs in the roster")),
                VisitKind::Repeat | VisitKind::AlteredUid | VisitKind::FullCopy => match x.voter {
                    Some(u) if uids.contains(&u) => {}
                    _ => return err(format!("extra visit {i}: needs a roster voter")),
                },
                VisitKind::Unregistered | VisitKind::Forged => {
                    if x.uid.is_some_and(|u| uids.contains(&u)) && x.kind == VisitKind::Unregistered {
                        return err(format!("extra visit {i}: uid is registered"));
                    }
                }
            }
        }
        self.link.validate().map_err(SimError::Config)?;
        self.faults.validate().map_err(SimError::Config)?;
        if self.sync.batch_size == 0 {
            return err("batch_size must be positive".into());
        }
        if self.sync_interval_ms == 0 || self.catchup_interval_ms == 0 {
            return err("sync intervals must be positive".into());
        }
        if self.keys.is_some_and(|k| k.card_key == k.vote_key) {
            return err("card and vote keys must differ".into());
        }
        Ok(())
    }
}

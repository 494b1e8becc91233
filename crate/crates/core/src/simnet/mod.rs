//! Deterministic simulation: virtual clock, unreliable link and the
//! scenario runner that drives terminals, sync agents and the server.
//!
//! Nothing here reads the wall clock or an unseeded rng, so a scenario and
//! its seed fully determine the report.

mod clock;
mod link;
mod report;
mod runner;
mod scenario;

use thiserror::Error;

use crate::sync::SyncError;
use crate::terminal::TerminalError;
use crate::wormlog::WormError;

pub use clock::SimClock;
pub use link::{Corruption, Direction, FaultPlan, FaultyLink, LinkSchedule, LinkWindow, OffsetRule, SendResult, SimTransport, WireMessage};
pub use report::render_table;
pub use runner::{
    replay_check, run_scenario, simulate, AuthSummary, DeviceReport, InvariantCheck, ScenarioReport, ScenarioRun, TimingStats, VisitRecord,
};
pub use scenario::{Behavior, DeviceSpec, ExtraVisit, ScenarioConfig, ScenarioKeys, VisitKind, VoterSpec};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Terminal(#[from] TerminalError),
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Storage(#[from] WormError),
    #[error("simulation invariant broken: {0}")]
    Invariant(String),
}

//! RFID voting terminals with encrypted-UID cards, AES-128 vote packets,
//! hash-chained device logs, and offline-first batch sync to a tally server,
//! all driven by a deterministic network simulator.
//!
//! The `examples/` directory walks through each layer:
//!
//! ```text
//! cargo run --example cipher            # AES-128 known answer, CBC packets
//! cargo run --example cards             # issuing and checking cards
//! cargo run --example terminal_session  # one voter at a terminal
//! cargo run --example tamper_log        # chain verification, torn tails
//! cargo run --example offline_sync      # 80 offline votes, 4 batches
//! cargo run --example server_tally      # anomalies, tally, archive
//! cargo run --example simulate -- fixtures/faults.json
//! cargo run --example wire_trace        # what the sync link reveals
//! ```
//!
//! The `rfid-vote` binary wraps [`cli`] for scripted use.

#[macro_use]
mod hexser;

pub mod cardauth;
pub mod cli;
pub mod crypto;
pub mod server;
pub mod simnet;
pub mod sync;
pub mod terminal;
pub mod wormlog;

#[cfg(test)]
mod testutil;

//! Runs a scenario file through the full simulator and prints the report.
//!
//! ```text
//! cargo run --example simulate -- fixtures/faults.json
//! ```

use rfid_vote::simnet::{render_table, replay_check, run_scenario, ScenarioConfig};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/baseline.json").into());
    let config = ScenarioConfig::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let report = run_scenario(&config).unwrap();
    print!("{}", render_table(&report, &config.ballot));
    println!();
    println!("replays identically: {}", replay_check(&config).unwrap());
    std::process::exit(if report.all_passed() { 0 } else { 1 });
}

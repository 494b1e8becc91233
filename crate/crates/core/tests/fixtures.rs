//! Every shipped scenario runs clean and replays exactly.

mod common;

use rfid_vote::simnet::{replay_check, run_scenario};

#[test]
fn shipped_scenarios_pass_their_checks() {
    for name in ["baseline", "offline", "double-vote", "clone", "endurance", "faults"] {
        let config = common::fixture(name);
        let report = run_scenario(&config).unwrap();
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).map(|c| &c.name).collect();
        assert!(failed.is_empty(), "{name}: {failed:?}");
        assert!(replay_check(&config).unwrap(), "{name}");
    }
}

#[test]
fn shipped_scenarios_round_trip_through_json() {
    for name in ["baseline", "offline", "double-vote", "clone", "endurance", "faults"] {
        let config = common::fixture(name);
        assert_eq!(rfid_vote::simnet::ScenarioConfig::from_json(&config.to_json()).unwrap(), config, "{name}");
    }
}

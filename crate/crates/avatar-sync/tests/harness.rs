use std::path::{Path, PathBuf};
use std::sync::Arc;

use avatar_sync::config::load_config_file;
use avatar_sync::harness::{
    inject_latency, oracle_score, run_scenario, schedule, LatencyModel, RunOptions, Scenario, ScenarioError,
    TransportKind,
};
use avatar_sync_core::protocol::Message;
use avatar_sync_core::{decode_message, NarrativeConfig};
use proptest::prelude::*;

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn story() -> Arc<NarrativeConfig> {
    Arc::new(load_config_file(&repo("narrative/story.json")).unwrap())
}

fn shipped(name: &str) -> Scenario {
    Scenario::load(&repo(&format!("scenarios/{name}.json"))).unwrap()
}

fn in_process() -> RunOptions {
    RunOptions {
        transport: TransportKind::InProcess,
        ..RunOptions::default()
    }
}

#[test]
fn zero_jitter_is_a_constant_delay() {
    let model = LatencyModel {
        base_ms: 25,
        jitter_ms: 0,
        seed: 4,
    };
    let sends = [(0, 0), (1, 0), (0, 100), (1, 250)];
    assert_eq!(inject_latency(&model, &sends), vec![25, 25, 125, 275]);
}

#[test]
fn delays_follow_the_seed() {
    let sends: Vec<(usize, u64)> = (0..40).map(|i| (i % 3, i as u64 * 10)).collect();
    let model = |seed| LatencyModel {
        base_ms: 5,
        jitter_ms: 300,
        seed,
    };
    assert_eq!(inject_latency(&model(1), &sends), inject_latency(&model(1), &sends));
    assert_ne!(inject_latency(&model(1), &sends), inject_latency(&model(2), &sends));
}

proptest! {
    #[test]
    fn delivery_keeps_each_connection_in_order(
        base in 0u64..200,
        jitter in 0u64..2000,
        seed in any::<u64>(),
        raw in prop::collection::vec((0usize..4, 0u64..500), 0..60),
    ) {
        // issue times are non-decreasing per connection, as in a script
        let mut clock = [0u64; 4];
        let sends: Vec<(usize, u64)> = raw
            .into_iter()
            .map(|(c, dt)| {
                clock[c] += dt;
                (c, clock[c])
            })
            .collect();
        let model = LatencyModel { base_ms: base, jitter_ms: jitter, seed };
        let times = inject_latency(&model, &sends);
        prop_assert_eq!(times.len(), sends.len());
        for (i, (&(conn, at), &t)) in sends.iter().zip(&times).enumerate() {
            prop_assert!(t >= at + base);
            let earlier = sends[..i].iter().zip(&times).filter(|((c, _), _)| *c == conn);
            for (_, &prev) in earlier {
                prop_assert!(prev <= t, "connection {} reordered", conn);
            }
        }
    }
}

#[test]
fn schedule_is_sorted_and_complete() {
    let scenario = shipped("duo_avatar");
    let deliveries = schedule(&scenario);
    assert_eq!(deliveries.len(), scenario.plan().len());
    assert!(deliveries.windows(2).all(|w| w[0].deliver_ms <= w[1].deliver_ms));
}

fn parse(json: &str) -> Result<Scenario, ScenarioError> {
    Scenario::from_json(json)
}

#[test]
fn bad_scenarios_are_rejected() {
    let field = |r: Result<Scenario, ScenarioError>| match r {
        Err(ScenarioError::Invalid { field, .. }) => field,
        other => panic!("expected a field error, got {other:?}"),
    };
    assert_eq!(field(parse(r#"{"name": "x", "num_bots": 0}"#)), "num_bots");
    assert_eq!(field(parse(r#"{"name": "x", "num_bots": 9}"#)), "num_bots");
    assert_eq!(field(parse(r#"{"name": "x", "num_bots": 1, "mode": "karaoke"}"#)), "mode");
    assert_eq!(field(parse(r#"{"name": "x", "num_bots": 1, "room_id": "a/b"}"#)), "room_id");
    assert_eq!(field(parse(r#"{"name": "x", "num_bots": 1, "script": [[], []]}"#)), "script");
    let backwards = r#"{"name": "x", "num_bots": 1, "script": [[
        {"at_ms": 50, "send": {"tag": "leave"}},
        {"at_ms": 10, "send": {"tag": "leave"}}]]}"#;
    assert_eq!(field(parse(backwards)), "script[0][1]");
    let join = r#"{"name": "x", "num_bots": 1, "script": [[
        {"at_ms": 0, "send": {"tag": "join", "display_name": "me"}}]]}"#;
    assert_eq!(field(parse(join)), "script[0][0]");
    let server_msg = r#"{"name": "x", "num_bots": 1, "script": [[
        {"at_ms": 0, "send": {"tag": "score_update", "total": 3}}]]}"#;
    assert_eq!(field(parse(server_msg)), "script[0][0]");
    let bounds = r#"{"name": "x", "num_bots": 1, "expect": {"min_events": 9, "max_events": 2}}"#;
    assert_eq!(field(parse(bounds)), "expect");

    assert!(matches!(
        parse(r#"{"name": "x", "num_bots": 1, "latency_ms": 3}"#),
        Err(ScenarioError::Parse(_))
    ));
}

#[test]
fn relative_config_resolves_next_to_the_scenario() {
    let s = shipped("solo_toques");
    let cfg = s.config.unwrap();
    assert!(cfg.starts_with(repo("scenarios")));
    assert!(load_config_file(&cfg).is_ok());
}

#[test]
fn reports_are_reproducible() {
    let scenario = shipped("duo_surpresa");
    let a = run_scenario(&scenario, story(), &in_process()).unwrap();
    let b = run_scenario(&scenario, story(), &in_process()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert!(a.pass, "{:?}", a.failed());

    let tcp = run_scenario(&scenario, story(), &RunOptions::default()).unwrap();
    let mut tcp_json: serde_json::Value = serde_json::from_str(&tcp.to_json()).unwrap();
    tcp_json["transport"] = "in_process".into();
    assert_eq!(tcp_json, serde_json::from_str::<serde_json::Value>(&a.to_json()).unwrap());
}

#[test]
fn random_policy_runs_are_checked() {
    let scenario = parse(
        r#"{"name": "random", "num_bots": 3, "mode": "historia_avatar",
            "random": {"seed": 21, "actions_per_bot": 12, "interval_ms": 5},
            "latency": {"base_ms": 1, "jitter_ms": 30, "seed": 2}}"#,
    )
    .unwrap();
    assert_eq!(scenario.plan().len(), 36);
    let report = run_scenario(&scenario, story(), &in_process()).unwrap();
    assert!(report.pass, "{:?}", report.failed());
    assert_eq!(report.final_score, report.oracle_score);
    assert!(report.final_score >= 12, "at least one point per action");
}

#[test]
fn unmet_expectations_fail_the_report() {
    let mut scenario = shipped("duo_avatar");
    scenario.expect.final_score = Some(99);
    let report = run_scenario(&scenario, story(), &in_process()).unwrap();
    assert!(!report.pass);
    assert_eq!(report.failed(), vec!["expect_final_score".to_string()]);
    assert!(report.into_result().is_err());
}

#[test]
fn kept_logs_hold_the_whole_session() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = shipped("solo_mission");
    let opts = RunOptions {
        transport: TransportKind::Ws,
        log_dir: Some(dir.path().to_path_buf()),
        ..RunOptions::default()
    };
    let report = run_scenario(&scenario, story(), &opts).unwrap();
    assert!(report.pass, "{:?}", report.failed());
    let text = std::fs::read_to_string(dir.path().join(format!("{}.jsonl", scenario.room_id))).unwrap();
    let outputs: Vec<_> = text
        .lines()
        .map(|l| decode_message(l.as_bytes()).unwrap())
        .filter(|e| e.seq > 0)
        .collect();
    assert_eq!(oracle_score(&outputs), report.final_score);
    let completions = outputs
        .iter()
        .filter(|e| matches!(e.payload, Message::MissionComplete { .. }))
        .count();
    assert_eq!(completions, 1);
}

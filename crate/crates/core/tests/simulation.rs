use negspace::Role;
use negspace::geometry::ConditionName;
use negspace::protocol::ClickMode;
use negspace::runtime::*;
use negspace::tasks::{EventKind, score_log};

fn kinds(out: &SimOutcome) -> impl Iterator<Item = &EventKind> {
    out.tasks.iter().flat_map(|l| l.events().iter().map(|e| &e.kind))
}

#[test]
fn frame_aware_agents_make_no_mistakes() {
    for pair in 0..4 {
        let out = simulate_session(&SimConfig::standard(pair, NetworkModel::lossless(), pair as u64)).unwrap();
        assert_eq!(out.tasks.len(), 8);
        for log in &out.tasks {
            let row = score_log(log.events()).unwrap();
            assert_eq!((row.wrong_selections, row.wrong_placements), (0, 0), "pair {pair} task {}", row.task);
            assert!(log.events().iter().any(|e| e.kind == EventKind::Fade));
        }
        assert!(out.converged());
    }
}

#[test]
fn same_seed_same_logs() {
    let cfg = SimConfig::standard(2, NetworkModel::lossy(0.2, 5), 9);
    let a = simulate_session(&cfg).unwrap();
    let b = simulate_session(&cfg).unwrap();
    assert_eq!(a.jsonl(), b.jsonl());
    assert_eq!(a.training.to_jsonl(), b.training.to_jsonl());
}

#[test]
fn lost_clicks_show_up_as_retries() {
    let cfg = SimConfig::standard(1, NetworkModel::lossy(0.3, 3), 3);
    assert_eq!(cfg.host.click_mode, ClickMode::Faithful);
    let out = simulate_session(&cfg).unwrap();
    assert_eq!(out.tasks.len(), 8);
    assert!(out.stats.lost > 0);
    assert!(kinds(&out).any(|k| *k == EventKind::ClickRetry));
    assert!(out.converged());
}

#[test]
fn reliable_clicks_need_no_retries() {
    let cfg = SimConfig::standard(1, NetworkModel::lossy(0.3, 3), 3).with_click_mode(ClickMode::ReliableClicks);
    let out = simulate_session(&cfg).unwrap();
    assert!(!kinds(&out).any(|k| *k == EventKind::ClickRetry));
    assert!(out.converged());
}

#[test]
fn naive_assembler_errs_only_where_channels_mismatch() {
    let mut cfg = SimConfig::standard(0, NetworkModel::lossless(), 4);
    cfg.policies = vec![AgentPolicy::frame_aware(Role::Instructor), AgentPolicy::frame_naive(Role::Assembler, 1.0)];
    let out = simulate_session(&cfg).unwrap();
    let mut wrong_by_condition = std::collections::BTreeMap::new();
    for log in &out.tasks {
        let row = score_log(log.events()).unwrap();
        *wrong_by_condition.entry(row.condition).or_insert(0) += row.wrong_selections + row.wrong_placements;
    }
    let total: u32 = wrong_by_condition.values().sum();
    assert!(total > 0, "{wrong_by_condition:?}");
    assert!(out.converged());
}

#[test]
fn stalls_and_bad_configs_are_errors() {
    let mut cfg = SimConfig::standard(0, NetworkModel::lossless(), 0);
    cfg.max_virtual_us = 1_000_000;
    assert!(matches!(simulate_session(&cfg), Err(SimError::Stalled { .. })));

    let cfg = SimConfig::standard(0, NetworkModel { loss: -0.1, ..NetworkModel::default() }, 0);
    assert!(matches!(simulate_session(&cfg), Err(SimError::Config(_))));

    let mut cfg = SimConfig::standard(0, NetworkModel::lossless(), 0);
    cfg.host.schedule = Some(Schedule { condition_order: [[ConditionName::RL; 4]; 2], puzzles: [1, 2, 3, 4, 5, 6, 7, 8] });
    assert!(matches!(simulate_session(&cfg), Err(SimError::Config(_))));
}

#[test]
fn explicit_schedule_is_followed() {
    use ConditionName::*;
    let schedule = Schedule { condition_order: [[MW, MP, SS, RL], [RL, SS, MP, MW]], puzzles: [20, 21, 22, 23, 24, 25, 26, 27] };
    let mut cfg = SimConfig::standard(0, NetworkModel::lossless(), 0);
    cfg.host.schedule = Some(schedule);
    let out = simulate_session(&cfg).unwrap();
    let starts: Vec<(String, u32)> = out
        .tasks
        .iter()
        .map(|l| match &l.events()[0].kind {
            EventKind::TaskStart { condition, puzzle, .. } => (condition.clone(), *puzzle),
            k => panic!("log starts with {k:?}"),
        })
        .collect();
    let want: Vec<(String, u32)> =
        [MW, MP, SS, RL, RL, SS, MP, MW].iter().zip(20..).map(|(c, p)| (c.as_str().to_string(), p)).collect();
    assert_eq!(starts, want);
}

#[test]
fn reliable_clicks_survive_heavy_loss_exactly_once() {
    for seed in 0..20 {
        let net = NetworkModel { loss: 0.5, jitter_ms: 30.0, seed, ..NetworkModel::default() };
        let r = click_delivery(ClickMode::ReliableClicks, 50, net, 80_000);
        assert_eq!(r.delivered, r.sent, "seed {seed}");
        assert!(r.transmissions > 50);
    }
}

#[test]
fn faithful_clicks_lose_some_under_loss() {
    let r = click_delivery(ClickMode::Faithful, 200, NetworkModel::lossy(0.5, 1), 80_000);
    assert!(!r.delivered.is_empty() && r.delivered.len() < 200);
    assert_eq!(r.transmissions, 200);
}

mod common;

use common::gates;
use genstrat_core::builder::{
    acceptance_check, build_game, generate_pool, write_manifest, BuilderConfig, MAX_AVG_MOVES,
};
use genstrat_core::engine::fixtures::kuhn;
use genstrat_core::engine::{Step, Template};
use proptest::prelude::*;

#[test]
fn same_seed_same_bytes() {
    for seed in 0..20 {
        let cfg = BuilderConfig::with_dial(0.6);
        assert_eq!(build_game(seed, &cfg).unwrap().canonical(), build_game(seed, &cfg).unwrap().canonical());
    }
}

#[test]
fn version_change_changes_output() {
    let a = BuilderConfig::with_dial(0.7);
    let b = BuilderConfig { builder_version: "other".into(), ..a.clone() };
    let differs = (0..20).any(|s| {
        let x = build_game(s, &a).unwrap();
        let mut y = build_game(s, &b).unwrap();
        y.builder_version = x.builder_version.clone();
        x.canonical() != y.canonical()
    });
    assert!(differs);
}

#[test]
fn dial_zero_minimal_caps_is_kuhn_like() {
    for seed in 0..50 {
        let spec = build_game(seed, &BuilderConfig::minimal(0.0)).unwrap();
        assert!(spec.phases.len() <= 2);
        assert_eq!(spec.phases[0].template, Template::Action);
        assert_eq!(spec.hand_size(), 1);
        let bets = spec.phases.iter().flat_map(|p| &p.steps).filter(|s| matches!(s, Step::Betting { .. })).count();
        assert_eq!(bets, 1, "seed {seed}");
    }
}

#[test]
fn higher_dial_builds_longer_games() {
    let mean = |c: f64| {
        let cfg = BuilderConfig::with_dial(c);
        (0..200).map(|s| build_game(s, &cfg).unwrap().phases.len() as f64).sum::<f64>() / 200.0
    };
    assert!(mean(0.9) > mean(0.1));
}

#[test]
fn out_of_range_dial_is_rejected() {
    assert!(build_game(1, &BuilderConfig::with_dial(1.5)).is_err());
}

#[test]
fn clean_fixture_passes() {
    let r = acceptance_check(&kuhn(), 2000).unwrap();
    assert!(r.accepted, "{:?}", r.reasons);
    assert!(r.dead_branch_fraction.is_none());
}

#[test]
fn long_forced_sequences_fail_the_move_gate() {
    let r = acceptance_check(&gates::long_forced_sequences(), 200).unwrap();
    assert!(!r.accepted);
    assert!(r.avg_moves[0] > MAX_AVG_MOVES);
    assert!(r.reasons.iter().any(|x| x.contains("average moves")), "{:?}", r.reasons);
}

#[test]
fn rare_phase_fails_the_coverage_gate() {
    let r = acceptance_check(&gates::rare_phases(), 2000).unwrap();
    assert!(!r.accepted);
    let p3 = r.phase_fire_fractions.iter().find(|(id, _)| id == "p3").unwrap().1;
    assert!(p3 < 0.05 && p3 > 0.0, "{p3}");
    assert!(r.reasons.iter().any(|x| x.contains("phases fire")), "{:?}", r.reasons);
}

#[test]
fn never_taken_branch_fails_the_dead_branch_gate() {
    let r = acceptance_check(&gates::never_taken_branch(), 500).unwrap();
    assert!(!r.accepted);
    assert_eq!(r.dead_branch_fraction, Some(1.0));
    assert!(r.reasons.iter().any(|x| x.contains("never taken")), "{:?}", r.reasons);
}

#[test]
fn pool_scan_stops_at_target_in_seed_order() {
    let cfg = BuilderConfig::with_dial(0.4);
    let pool = generate_pool(100, 5, &cfg, 300, 500);
    assert_eq!(pool.accepted.len(), 5);
    assert!(!pool.truncated);
    assert!(pool.accepted.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(pool.rows.last().unwrap().seed, *pool.accepted.last().unwrap());
    let seeds: Vec<u64> = pool.rows.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, (100..100 + seeds.len() as u64).collect::<Vec<_>>());
    let mut buf = Vec::new();
    write_manifest(&pool.rows, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap().lines().count(), pool.rows.len());
}

#[test]
fn pool_scan_cap_sets_truncation() {
    let pool = generate_pool(0, 1000, &BuilderConfig::with_dial(0.5), 100, 10);
    assert!(pool.truncated);
    assert_eq!(pool.rows.len(), 10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn built_games_validate_and_fit_caps(seed in 0u64..1_000_000, dial in 0.0f64..=1.0) {
        let cfg = BuilderConfig::with_dial(dial);
        let spec = build_game(seed, &cfg).unwrap();
        prop_assert!(spec.validate().is_ok());
        prop_assert!(spec.phases.len() <= cfg.max_phases as usize);
        prop_assert!(spec.deck.size() <= cfg.max_deck as usize);
        prop_assert!(spec.card_demand() <= spec.deck.size() as u64);
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn genstrat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genstrat")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = genstrat(args);
    assert!(out.status.success(), "genstrat {args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn provenance(path: &Path) -> Value {
    let text = fs::read_to_string(path).unwrap();
    let first = text.lines().next().unwrap();
    let json = first.strip_prefix("# provenance: ").unwrap_or_else(|| panic!("{} lacks a header", path.display()));
    serde_json::from_str(json).unwrap()
}

const SMALL_CONFIG: &str = r#"
[builder]
acceptance_episodes = 300

[pool]
target = 10

[axes]
tier = "fast"

[selection]
k = 10

[tournament]
agents = "agents.toml"
matches_per_matchup = 4
coverage = "round_robin"

[stats]
b_alpha = 60
b_profile = 40
b_decomposition = 40
b_head_to_head = 40
"#;

const SCRIPTED_AGENTS: &str = r#"
[[agent]]
model = "random"
kind = "random"

[[agent]]
model = "l1"
kind = "l1"
l0_episodes = 300

[[agent]]
model = "mix"
kind = "mixture"
epsilon = 0.5
l0_episodes = 300
"#;

fn small_run(name: &str) -> PathBuf {
    let dir = scratch(name);
    fs::write(dir.join("config.toml"), SMALL_CONFIG).unwrap();
    fs::write(dir.join("agents.toml"), SCRIPTED_AGENTS).unwrap();
    dir
}

#[test]
fn gen_pool_reruns_are_byte_identical() {
    let dir = small_run("pool_rerun");
    let (cfg, run) = (dir.join("config.toml"), dir.join("run"));
    ok(&["--config", s(&cfg), "--run-dir", s(&run), "gen-pool", "--target", "4"]);
    let pool = fs::read(run.join("pool.jsonl")).unwrap();
    let manifest = fs::read(run.join("manifest.json")).unwrap();
    ok(&["--config", s(&cfg), "--run-dir", s(&run), "gen-pool", "--target", "4"]);
    assert_eq!(pool, fs::read(run.join("pool.jsonl")).unwrap());
    assert_eq!(manifest, fs::read(run.join("manifest.json")).unwrap());

    let index: Value = serde_json::from_slice(&manifest).unwrap();
    let entry = &index["pool.jsonl"];
    assert_eq!(entry["bytes"].as_u64().unwrap(), pool.len() as u64);
    assert_eq!(entry["command"], "gen-pool");
}

#[test]
fn full_pipeline_writes_every_table_with_provenance() {
    let dir = small_run("pipeline");
    let (cfg, run) = (dir.join("config.toml"), dir.join("run"));
    let base = ["--config", s(&cfg), "--run-dir", s(&run)];
    for step in [&["gen-pool"][..], &["score-axes"], &["select"], &["tournament"], &["report"]] {
        ok(&[&base[..], step].concat());
    }
    let report = run.join("report");
    for table in [
        "leaderboard", "bradley_terry", "leave_one_out", "per_game_alpha", "per_game_se", "head_to_head",
        "decomposition", "stability_games", "stability_cells", "axis_diagnostics", "profile", "profile_long",
        "extremes", "composite", "jaggedness", "sigma", "k_sweep",
    ] {
        let path = report.join(format!("{table}.csv"));
        assert!(path.exists(), "missing {table}.csv");
        let p = provenance(&path);
        for key in ["builder_version", "measurement_seed", "schedule_seed", "bootstrap_seed"] {
            assert!(p.get(key).is_some(), "{table}.csv provenance lacks {key}");
        }
    }
    let summary: Value = serde_json::from_slice(&fs::read(report.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["skipped"], serde_json::json!({}));
    assert_eq!(summary["games"].as_array().unwrap().len(), 10);

    // Same inputs, same report bytes.
    let before = fs::read(report.join("profile.csv")).unwrap();
    let summary_before = fs::read(report.join("summary.json")).unwrap();
    ok(&[&base[..], &["report"]].concat());
    assert_eq!(before, fs::read(report.join("profile.csv")).unwrap());
    assert_eq!(summary_before, fs::read(report.join("summary.json")).unwrap());

    let fit = ok(&[&base[..], &["fit", "--out", s(&dir.join("lb.csv"))]].concat());
    let table = String::from_utf8(fit.stdout).unwrap();
    assert!(table.contains("random") && table.contains("l1"));
}

#[test]
fn fit_on_a_table_without_completed_slots_fails() {
    let dir = scratch("empty_fit");
    let slots = dir.join("slots.jsonl");
    fs::write(&slots, "{\"_provenance\":{\"command\":\"tournament\"}}\n").unwrap();
    let out = genstrat(&["fit", "--slots", s(&slots), "--out", s(&dir.join("lb.csv"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no completed slots"));
}

#[test]
fn schema_errors_name_the_line() {
    let dir = scratch("bad_slots");
    let slots = dir.join("slots.jsonl");
    fs::write(&slots, "{\"_provenance\":{}}\n\n{\"game_seed\": \"seven\"}\n").unwrap();
    let out = genstrat(&["fit", "--slots", s(&slots)]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") || err.contains(":3:"), "{err}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = scratch("bad_config");
    let cfg = dir.join("config.toml");
    fs::write(&cfg, "[pool]\ntarget = 3\ntargett = 4\n").unwrap();
    let out = genstrat(&["--config", s(&cfg), "render", "--game", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("targett"));
}

#[test]
fn render_json_is_the_canonical_spec() {
    let out = ok(&["render", "--game", "3", "--json"]);
    let spec = genstrat_core::builder::build_game(3, &Default::default()).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), format!("{}\n", spec.canonical()));
    let text = String::from_utf8(ok(&["render", "--game", "3", "--play-seed", "5"]).stdout).unwrap();
    assert!(text.len() > 100);
}

#[test]
fn solve_prints_a_summary() {
    let dir = scratch("solve");
    let out = ok(&["solve", "--game", "2", "--iterations", "50", "--out", s(&dir.join("strategy.jsonl"))]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["game_seed"], 2);
    assert!(v["exploitability"].as_f64().unwrap() >= 0.0);
    assert!(provenance_jsonl(&dir.join("strategy.jsonl")).get("builder_version").is_some());
}

fn provenance_jsonl(path: &Path) -> Value {
    let text = fs::read_to_string(path).unwrap();
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    first["_provenance"].clone()
}

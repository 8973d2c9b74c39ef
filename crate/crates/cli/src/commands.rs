use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use genstrat_core::axes::{measure_axes, read_axis_table, write_axis_table, AxisRecord};
use genstrat_core::builder::{build_game, generate_pool, BuilderConfig, ManifestRow};
use genstrat_core::engine::{GameSpec, GameState, Seat};
use genstrat_core::selection::{farthest_point_sample, minmax_normalize, read_benchmark};
use genstrat_core::solver::{abstract_game, best_response_value, cfr_plus_solve, expected_value, exploitability, write_strategy, Lumping};
use genstrat_core::textio::{render_observation, render_rulebook};
use genstrat_core::tournament::{
    fallback_report, pick_anchors, read_slots, run_ablation, run_tournament, schedule, AgentBinding, SlotRow,
    SlotStatus,
};
use genstrat_stats::fit::{fit_alpha, fit_alpha_ci};
use genstrat_stats::report::leaderboard_csv;
use genstrat_stats::{Observations, StatsError};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::artifact::{inherit, read_jsonl, read_provenance, text_header, to_jsonl, Provenance, RunDir};
use crate::config::Loaded;
use crate::{AblationArgs, FitArgs, GenPoolArgs, RenderArgs, ScoreAxesArgs, SelectArgs, SolveArgs, TournamentArgs};

pub struct Ctx {
    pub cfg: Loaded,
    pub run: RunDir,
}

impl Ctx {
    pub fn builder(&self) -> BuilderConfig {
        self.cfg.config.builder.to_config()
    }

    /// Keys every artifact carries.
    pub fn provenance(&self, command: &str) -> Provenance {
        let mut p = Provenance::new();
        p.insert("command".into(), json!(command));
        p.insert("builder_version".into(), json!(self.builder().builder_version));
        p.insert("genstrat_version".into(), json!(env!("CARGO_PKG_VERSION")));
        p
    }
}

/// Builds every seed in parallel; a seed that no longer builds is an error naming it.
pub fn build_specs(seeds: &[u64], cfg: &BuilderConfig) -> Result<BTreeMap<u64, Arc<GameSpec>>> {
    seeds
        .par_iter()
        .map(|&s| {
            build_game(s, cfg).map(|g| (s, Arc::new(g))).with_context(|| format!("building game {s}"))
        })
        .collect()
}

pub fn read_slot_file(path: &Path) -> Result<Vec<SlotRow>> {
    let input = crate::artifact::open(path)?;
    read_slots(input).with_context(|| format!("reading slot table {}", path.display()))
}

pub fn read_axes_file(path: &Path) -> Result<Vec<AxisRecord>> {
    let input = crate::artifact::open(path)?;
    read_axis_table(input).with_context(|| format!("reading axis table {}", path.display()))
}

fn benchmark_seeds(path: &Path, limit: Option<usize>) -> Result<Vec<u64>> {
    let picks = read_benchmark(crate::artifact::open(path)?).with_context(|| format!("reading benchmark {}", path.display()))?;
    if picks.is_empty() {
        bail!("benchmark {} lists no games", path.display());
    }
    let n = limit.unwrap_or(picks.len()).min(picks.len());
    Ok(picks[..n].iter().map(|p| p.seed).collect())
}

fn observations(path: &Path, rows: &[SlotRow]) -> Result<Observations> {
    match Observations::from_slots(rows) {
        Err(StatsError::Empty) => bail!("{} has no completed slots; nothing to fit", path.display()),
        r => r.with_context(|| format!("slot table {}", path.display())),
    }
}

pub fn gen_pool(ctx: &Ctx, a: GenPoolArgs) -> Result<ExitCode> {
    let c = &ctx.cfg.config;
    let seed_start = a.seed_start.unwrap_or(c.pool.seed_start);
    let target = a.target.unwrap_or(c.pool.target);
    let max_scan = a.max_scan.unwrap_or(c.pool.max_scan);
    let episodes = a.episodes.unwrap_or(c.builder.acceptance_episodes);
    let builder = ctx.builder();
    let result = generate_pool(seed_start, target, &builder, episodes, max_scan);

    let mut p = ctx.provenance("gen-pool");
    p.insert("builder".into(), serde_json::to_value(&builder)?);
    p.insert("seed_start".into(), json!(seed_start));
    p.insert("target".into(), json!(target));
    p.insert("max_scan".into(), json!(max_scan));
    p.insert("episodes".into(), json!(episodes));
    p.insert("accepted".into(), json!(result.accepted.len()));
    p.insert("truncated".into(), json!(result.truncated));
    let out = ctx.run.path(a.out.as_deref(), "pool.jsonl");
    ctx.run.write(&out, &to_jsonl(&p, &result.rows)?, "gen-pool")?;
    eprintln!("accepted {} of {} scanned seeds -> {}", result.accepted.len(), result.rows.len(), out.display());
    if result.truncated {
        eprintln!("warning: scan cap {max_scan} reached before the target of {target}");
    }
    Ok(ExitCode::SUCCESS)
}

pub fn score_axes(ctx: &Ctx, a: ScoreAxesArgs) -> Result<ExitCode> {
    let c = &ctx.cfg.config;
    let tier = a.tier.unwrap_or(c.axes.tier);
    let measurement_seed = a.measurement_seed.unwrap_or(c.axes.measurement_seed);
    let pool_path = ctx.run.path(a.pool.as_deref(), "pool.jsonl");
    let rows: Vec<ManifestRow> = read_jsonl(&pool_path)?;
    let mut seeds: Vec<u64> = rows.iter().filter(|r| r.accepted).map(|r| r.seed).collect();
    if let Some(n) = a.limit {
        seeds.truncate(n);
    }
    if seeds.is_empty() {
        bail!("{} has no accepted games", pool_path.display());
    }
    let upstream = read_provenance(&pool_path)?;
    let specs = build_specs(&seeds, &ctx.builder())?;
    let records: Vec<AxisRecord> = seeds
        .par_iter()
        .map(|s| measure_axes(&specs[s], tier, measurement_seed).with_context(|| format!("measuring game {s}")))
        .collect::<Result<_>>()?;

    let mut own = ctx.provenance("score-axes");
    own.insert("tier".into(), json!(tier));
    own.insert("measurement_seed".into(), json!(measurement_seed));
    own.insert("measured_games".into(), json!(records.len()));
    let p = inherit(&[&upstream], own)?;
    let mut bytes = text_header(&p).into_bytes();
    write_axis_table(&records, &mut bytes)?;
    let out = ctx.run.path(a.out.as_deref(), "axes.csv");
    ctx.run.write(&out, &bytes, "score-axes")?;
    eprintln!("measured {} games ({tier}) -> {}", records.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn select(ctx: &Ctx, a: SelectArgs) -> Result<ExitCode> {
    let k = a.k.unwrap_or(ctx.cfg.config.selection.k);
    let axes_path = ctx.run.path(a.axes.as_deref(), "axes.csv");
    let records = read_axes_file(&axes_path)?;
    let pool = minmax_normalize(&records)?;
    let picks = farthest_point_sample(&pool, k).with_context(|| format!("selecting from {}", axes_path.display()))?;

    let mut own = ctx.provenance("select");
    own.insert("k".into(), json!(k));
    own.insert("pool_size".into(), json!(pool.len()));
    own.insert("bounds".into(), serde_json::to_value(pool.bounds)?);
    let p = inherit(&[&read_provenance(&axes_path)?], own)?;
    let out = ctx.run.path(a.out.as_deref(), "benchmark.jsonl");
    ctx.run.write(&out, &to_jsonl(&p, &picks)?, "select")?;
    eprintln!("selected {} of {} games -> {}", picks.len(), pool.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn render(ctx: &Ctx, a: RenderArgs) -> Result<ExitCode> {
    let spec = Arc::new(build_game(a.game, &ctx.builder()).with_context(|| format!("building game {}", a.game))?);
    let mut text = if a.json { spec.canonical() } else { render_rulebook(&spec) };
    if let Some(play_seed) = a.play_seed {
        let state = GameState::new(spec.clone(), play_seed)?;
        text.push_str("\n\n");
        text.push_str(&render_observation(&state, a.seat.into()));
    }
    if !text.ends_with('\n') {
        text.push('\n');
    }
    let target = match (&a.out, &ctx.run.root) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(_)) if a.json => Some(ctx.run.path(None, &format!("spec_{}.json", a.game))),
        (None, Some(_)) => Some(ctx.run.path(None, &format!("rulebook_{}.txt", a.game))),
        (None, None) => None,
    };
    match target {
        Some(path) => {
            let mut p = ctx.provenance("render");
            p.insert("game_seed".into(), json!(a.game));
            if let Some(s) = a.play_seed {
                p.insert("play_seed".into(), json!(s));
            }
            let mut bytes = text_header(&p).into_bytes();
            bytes.extend_from_slice(text.as_bytes());
            ctx.run.write(&path, &bytes, "render")?;
            eprintln!("{} for game {} -> {}", if a.json { "spec" } else { "rulebook" }, a.game, path.display());
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

pub fn solve(ctx: &Ctx, a: SolveArgs) -> Result<ExitCode> {
    let spec = Arc::new(build_game(a.game, &ctx.builder()).with_context(|| format!("building game {}", a.game))?);
    let lumping: Lumping = a.lumping.into();
    let game = abstract_game(&spec, lumping).with_context(|| format!("abstracting game {}", a.game))?;
    let strategy = cfr_plus_solve(&game, a.iterations);
    let summary = json!({
        "game_seed": a.game,
        "lumping": lumping,
        "iterations": a.iterations,
        "infosets": game.infoset_count(),
        "nodes": game.node_count(),
        "expected_value_alice": expected_value(&game, &strategy),
        "exploitability": exploitability(&game, &strategy),
        // Raw values: on an imperfect-recall abstraction the sum can dip below zero before clamping.
        "best_response_alice": best_response_value(&game, &strategy, Seat::Alice),
        "best_response_bob": best_response_value(&game, &strategy, Seat::Bob),
    });
    let mut p = ctx.provenance("solve");
    if let Value::Object(m) = &summary {
        p.extend(m.clone());
    }
    let mut bytes = crate::artifact::jsonl_header(&p).into_bytes();
    write_strategy(&game, &strategy, &mut bytes)?;
    let out = ctx.run.path(a.out.as_deref(), &format!("strategy_{}.jsonl", a.game));
    ctx.run.write(&out, &bytes, "solve")?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(ExitCode::SUCCESS)
}

fn agents_named<'a>(bindings: &'a [AgentBinding], names: &[String]) -> Result<Vec<&'a AgentBinding>> {
    names
        .iter()
        .map(|n| bindings.iter().find(|b| &b.model == n).with_context(|| format!("model {n} is not in the agents file")))
        .collect()
}

pub fn tournament(ctx: &Ctx, a: TournamentArgs) -> Result<ExitCode> {
    let t = &ctx.cfg.config.tournament;
    let matches = a.matches_per_matchup.unwrap_or(t.matches_per_matchup);
    let coverage = a.coverage.map(Into::into).unwrap_or(t.coverage);
    let schedule_seed = a.schedule_seed.unwrap_or(t.schedule_seed);
    let bench_path = ctx.run.path(a.benchmark.as_deref(), "benchmark.jsonl");
    let seeds = benchmark_seeds(&bench_path, a.games)?;
    let bindings = ctx.cfg.agents(a.agents.as_deref())?;
    let models: Vec<String> = bindings.iter().map(|b| b.model.clone()).collect();
    let slots = schedule(&models, &seeds, matches, coverage, schedule_seed)?;
    let specs = build_specs(&seeds, &ctx.builder())?;
    let rows = run_tournament(&specs, &bindings, &slots)?;

    let mut own = ctx.provenance("tournament");
    own.insert("schedule_seed".into(), json!(schedule_seed));
    own.insert("matches_per_matchup".into(), json!(matches));
    own.insert("coverage".into(), json!(coverage));
    own.insert("game_seeds".into(), json!(seeds));
    own.insert("agents".into(), serde_json::to_value(&bindings)?);
    let p = inherit(&[&read_provenance(&bench_path)?], own)?;
    let out = ctx.run.path(a.out.as_deref(), "slots.jsonl");
    ctx.run.write(&out, &to_jsonl(&p, &rows)?, "tournament")?;
    let fb = fallback_report(&rows);
    let fb_path = out.with_file_name("fallback.json");
    ctx.run.write(&fb_path, format!("{}\n", serde_json::to_string_pretty(&fb)?).as_bytes(), "tournament")?;

    let count = |s: SlotStatus| rows.iter().filter(|r| r.status == s).count();
    let (errors, timeouts) = (count(SlotStatus::Error), count(SlotStatus::DiscardedTimeout));
    eprintln!("{} slots ({} discarded on timeout, {} errors) -> {}", rows.len(), timeouts, errors, out.display());
    for r in rows.iter().filter(|r| r.status == SlotStatus::Error) {
        eprintln!(
            "error: game {} run {} {} vs {}: {}",
            r.game_seed,
            r.run_id,
            r.model_alice,
            r.model_bob,
            r.error.as_deref().unwrap_or("unknown")
        );
    }
    Ok(if errors > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

pub fn ablation(ctx: &Ctx, a: AblationArgs) -> Result<ExitCode> {
    let Some(ab) = &ctx.cfg.config.ablation else {
        bail!("no [ablation] section in the config");
    };
    let bench_path = ctx.run.path(a.benchmark.as_deref(), "benchmark.jsonl");
    let seeds = benchmark_seeds(&bench_path, a.games)?;
    let bindings = ctx.cfg.agents(a.agents.as_deref())?;
    let anchors: Vec<String> = if !ab.anchors.is_empty() {
        ab.anchors.clone()
    } else {
        let slots_path = ctx.run.path(a.slots.as_deref(), "slots.jsonl");
        let rows = read_slot_file(&slots_path)?;
        let fit = fit_alpha(&observations(&slots_path, &rows)?)?;
        let board: Vec<(String, f64)> = fit.models.iter().cloned().zip(fit.alpha.iter().copied()).collect();
        let (top, bottom) = pick_anchors(&board, &[ab.low.clone(), ab.high.clone()])
            .context("fewer than two leaderboard models remain after excluding the ablated variants")?;
        vec![top, bottom]
    };
    let variants = agents_named(&bindings, &[ab.low.clone(), ab.high.clone()])?;
    let anchor_bindings: Vec<AgentBinding> = agents_named(&bindings, &anchors)?.into_iter().cloned().collect();
    let specs = build_specs(&seeds, &ctx.builder())?;
    let output = run_ablation(&ab.family, variants[0], variants[1], &anchor_bindings, &specs, ab.runs)?;

    let mut own = ctx.provenance("ablation");
    own.insert("family".into(), json!(ab.family));
    own.insert("low".into(), json!(ab.low));
    own.insert("high".into(), json!(ab.high));
    own.insert("anchors".into(), json!(anchors));
    own.insert("runs".into(), json!(ab.runs));
    own.insert("game_seeds".into(), json!(seeds));
    own.insert("excluded".into(), json!(output.excluded));
    let p = inherit(&[&read_provenance(&bench_path)?], own)?;
    let out = ctx.run.path(a.out.as_deref(), "ablation_pairs.jsonl");
    ctx.run.write(&out, &to_jsonl(&p, &output.pairs)?, "ablation")?;
    eprintln!(
        "{} pairs ({} excluded) against {} -> {}",
        output.pairs.len(),
        output.excluded.len(),
        anchors.join(", "),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn fit(ctx: &Ctx, a: FitArgs) -> Result<ExitCode> {
    let s = &ctx.cfg.config.stats;
    let b = a.b.unwrap_or(s.b_alpha);
    let slots_path = ctx.run.path(a.slots.as_deref(), "slots.jsonl");
    let rows = read_slot_file(&slots_path)?;
    let obs = observations(&slots_path, &rows)?;
    let fit = fit_alpha_ci(&obs, b, s.bootstrap_seed)?;

    let mut own = ctx.provenance("fit");
    own.insert("bootstrap_seed".into(), json!(s.bootstrap_seed));
    own.insert("b_alpha".into(), json!(b));
    own.insert("clusters".into(), json!(fit.clusters));
    let p = inherit(&[&read_provenance(&slots_path)?], own)?;
    let table = leaderboard_csv(&fit);
    let out = ctx.run.path(a.out.as_deref(), "leaderboard.csv");
    ctx.run.write(&out, format!("{}{}", text_header(&p), table).as_bytes(), "fit")?;
    print!("{table}");
    Ok(ExitCode::SUCCESS)
}

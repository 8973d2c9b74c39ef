//! `genstrat report`: every table from one slot table, plus the axis and
//! ablation tables when those inputs are present.
//!
//! A stage that cannot run on this data (too few games, a rank-deficient design)
//! is recorded in `summary.json` under `skipped` instead of aborting the report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use genstrat_core::axes::AxisVector;
use genstrat_core::tournament::{fallback_report, AblationPair};
use genstrat_stats::ablation::ablation_delta;
use genstrat_stats::decomposition::variance_decomposition;
use genstrat_stats::diagnostics::axis_diagnostics;
use genstrat_stats::fit::{
    bradley_terry, discordant_pairs, fit_alpha_ci, fit_alpha_per_game, game_bootstrap, leave_one_game_out,
};
use genstrat_stats::h2h::head_to_head_matrix;
use genstrat_stats::jagged::{jaggedness, k_sweep};
use genstrat_stats::profile::{capability_profile, composite_complexity, predicted_alpha_at_extremes, ProfileOptions, AXES};
use genstrat_stats::report as tables;
use genstrat_stats::stability::rank_stability;
use serde_json::json;

use crate::artifact::{inherit, read_jsonl, read_provenance, text_header, Provenance};
use crate::commands::{build_specs, read_axes_file, read_slot_file, Ctx};
use crate::ReportArgs;

struct Writer<'a> {
    ctx: &'a Ctx,
    dir: PathBuf,
    header: String,
    written: Vec<String>,
}

impl Writer<'_> {
    fn csv(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        self.ctx.run.write(&path, format!("{}{}", self.header, body).as_bytes(), "report")?;
        self.written.push(name.to_string());
        Ok(())
    }
}

/// The run directory's default file when it exists; explicit paths must exist.
fn optional_input(ctx: &Ctx, explicit: Option<&Path>, name: &str) -> Option<PathBuf> {
    match explicit {
        Some(p) => Some(p.to_path_buf()),
        None if ctx.run.root.is_some() => Some(ctx.run.path(None, name)).filter(|p| p.exists()),
        None => None,
    }
}

pub fn report(ctx: &Ctx, a: ReportArgs) -> Result<ExitCode> {
    let s = &ctx.cfg.config.stats;
    let seed = s.bootstrap_seed;
    let slots_path = ctx.run.path(a.slots.as_deref(), "slots.jsonl");
    let rows = read_slot_file(&slots_path)?;
    let obs = match genstrat_stats::Observations::from_slots(&rows) {
        Err(genstrat_stats::StatsError::Empty) => {
            anyhow::bail!("{} has no completed slots; nothing to report", slots_path.display())
        }
        r => r?,
    };
    let axes_path = optional_input(ctx, a.axes.as_deref(), "axes.csv");
    let ablation_path = optional_input(ctx, a.ablation.as_deref(), "ablation_pairs.jsonl");

    let mut upstream: Vec<Provenance> = vec![read_provenance(&slots_path)?];
    if let Some(p) = &axes_path {
        upstream.push(read_provenance(p)?);
    }
    let mut own = ctx.provenance("report");
    own.insert("bootstrap_seed".into(), json!(seed));
    own.insert("b_alpha".into(), json!(s.b_alpha));
    own.insert("b_profile".into(), json!(s.b_profile));
    own.insert("b_decomposition".into(), json!(s.b_decomposition));
    own.insert("b_head_to_head".into(), json!(s.b_head_to_head));
    let prov = inherit(&upstream.iter().collect::<Vec<_>>(), own)?;

    let dir = match (&a.out_dir, &ctx.run.root) {
        (Some(d), _) => d.clone(),
        (None, Some(r)) => r.join("report"),
        (None, None) => PathBuf::from("report"),
    };
    let mut w = Writer { ctx, dir, header: text_header(&prov), written: Vec::new() };
    let mut skipped: BTreeMap<String, String> = BTreeMap::new();

    let overall = fit_alpha_ci(&obs, s.b_alpha, seed)?;
    w.csv("leaderboard.csv", &tables::leaderboard_csv(&overall))?;

    let mut summary = serde_json::Map::new();
    match bradley_terry(&obs) {
        Ok(bt) => {
            w.csv("bradley_terry.csv", &tables::bradley_terry_csv(&bt))?;
            summary.insert("bt_discordant_pairs".into(), json!(discordant_pairs(&bt, &overall)));
        }
        Err(e) => {
            skipped.insert("bradley_terry".into(), e.to_string());
        }
    }
    match leave_one_game_out(&obs) {
        Ok(loo) => w.csv("leave_one_out.csv", &tables::leave_one_out_csv(&loo))?,
        Err(e) => {
            skipped.insert("leave_one_out".into(), e.to_string());
        }
    }

    let mut per_game = fit_alpha_per_game(&obs);
    let boot = game_bootstrap(&obs, s.b_profile, seed);
    boot.attach_se(&mut per_game);
    w.csv("per_game_alpha.csv", &tables::per_game_csv(&per_game))?;
    if let Some(se) = tables::per_game_se_csv(&per_game) {
        w.csv("per_game_se.csv", &se)?;
    }
    summary.insert("masked_cells".into(), json!(per_game.masked_cells()));

    w.csv("head_to_head.csv", &tables::head_to_head_csv(&head_to_head_matrix(&obs, s.b_head_to_head, seed)))?;

    match variance_decomposition(&obs, s.b_decomposition, seed) {
        Ok(d) => w.csv("decomposition.csv", &tables::decomposition_csv(&d))?,
        Err(e) => {
            skipped.insert("decomposition".into(), e.to_string());
        }
    }

    let stability = rank_stability(&obs.models, &obs.games, &per_game.alpha, &overall.alpha, &boot);
    w.csv("stability_games.csv", &tables::stability_games_csv(&stability))?;
    w.csv("stability_cells.csv", &tables::stability_cells_csv(&stability))?;

    if let Some(path) = &axes_path {
        let records = read_axes_file(path)?;
        let table: Vec<(u64, [f64; AXES])> = records.iter().map(|r| (r.seed, r.axes.values())).collect();
        axis_tables(ctx, &mut w, &mut skipped, &obs, &table, &boot)?;
    } else {
        skipped.insert("axes".into(), "no axis table given".into());
    }

    if let Some(path) = &ablation_path {
        let pairs: Vec<AblationPair> = read_jsonl(path)?;
        let mut families: Vec<String> = pairs.iter().map(|p| p.family.clone()).collect();
        families.sort();
        families.dedup();
        let r = ablation_delta(&pairs, &families, s.b_alpha, seed);
        w.csv("ablation.csv", &tables::ablation_csv(&r))?;
    }

    let fb = fallback_report(&rows);
    summary.insert("fallback".into(), serde_json::to_value(&fb)?);
    summary.insert("slots".into(), json!(rows.len()));
    summary.insert("ok_slots".into(), json!(rows.iter().filter(|r| r.is_ok()).count()));
    summary.insert("models".into(), json!(obs.models));
    summary.insert("games".into(), json!(obs.games));
    summary.insert("skipped".into(), json!(skipped));
    summary.insert("tables".into(), json!(w.written));
    summary.insert("provenance".into(), json!(prov));
    let path = w.dir.join("summary.json");
    ctx.run.write(&path, format!("{}\n", serde_json::to_string_pretty(&summary)?).as_bytes(), "report")?;

    for (stage, why) in &skipped {
        eprintln!("skipped {stage}: {why}");
    }
    eprintln!("{} tables -> {}", w.written.len(), w.dir.display());
    Ok(ExitCode::SUCCESS)
}

fn axis_tables(
    ctx: &Ctx,
    w: &mut Writer,
    skipped: &mut BTreeMap<String, String>,
    obs: &genstrat_stats::Observations,
    table: &[(u64, [f64; AXES])],
    boot: &genstrat_stats::fit::GameBootstrap,
) -> Result<()> {
    let s = &ctx.cfg.config.stats;
    let lookup: BTreeMap<u64, [f64; AXES]> = table.iter().cloned().collect();
    if let Some(missing) = obs.games.iter().find(|g| !lookup.contains_key(g)) {
        skipped.insert("axes".into(), format!("axis table has no row for game {missing}"));
        return Ok(());
    }
    let columns: Vec<Vec<f64>> = (0..AXES).map(|a| obs.games.iter().map(|g| lookup[g][a]).collect()).collect();
    match axis_diagnostics(&AxisVector::NAMES, &columns) {
        Ok(d) => w.csv("axis_diagnostics.csv", &tables::diagnostics_csv(&d))?,
        Err(e) => {
            skipped.insert("axis_diagnostics".into(), e.to_string());
        }
    }

    let mut opts = ProfileOptions::new(s.b_profile, s.bootstrap_seed);
    opts.q = s.q;
    if s.rulebook_control {
        let specs = build_specs(&obs.games, &ctx.builder())?;
        opts.rulebook_chars = Some(
            specs.iter().map(|(g, spec)| (*g, genstrat_core::textio::render_rulebook(spec).chars().count())).collect(),
        );
    }
    match capability_profile(obs, table, boot, &opts) {
        Ok(fit) => {
            w.csv("profile.csv", &tables::profile_csv(&fit))?;
            w.csv("profile_long.csv", &tables::profile_long_csv(&fit))?;
            w.csv("extremes.csv", &tables::extremes_csv(&predicted_alpha_at_extremes(&fit)))?;
            let slopes: Vec<[f64; AXES]> =
                (0..fit.models.len()).map(|m| std::array::from_fn(|a| fit.slope(m, a))).collect();
            w.csv("composite.csv", &tables::composite_csv(&composite_complexity(&slopes, &fit.zscores)))?;
        }
        Err(e) => {
            skipped.insert("profile".into(), e.to_string());
        }
    }

    match jaggedness(obs, table, boot, s.neighbours) {
        Ok(j) => {
            w.csv("jaggedness.csv", &tables::jaggedness_csv(&j))?;
            w.csv("sigma.csv", &tables::sigma_csv(&j))?;
            w.csv("k_sweep.csv", &tables::k_sweep_csv(&j.models, &k_sweep(&j, table, &s.k_sweep)))?;
        }
        Err(e) => {
            skipped.insert("jaggedness".into(), e.to_string());
        }
    }
    Ok(())
}

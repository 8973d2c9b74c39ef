//! `genstrat` command line: each subcommand reads the previous stage's artifact
//! and writes its own, so a run is a chain of files under one run directory.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use genstrat_core::axes::Tier;
use genstrat_core::engine::Seat;
use genstrat_core::solver::Lumping;
use genstrat_core::tournament::Coverage;

#[derive(Debug, Parser)]
#[command(name = "genstrat", version, about = "Generated strategy-game benchmark pipeline")]
pub struct Cli {
    /// Pipeline configuration (TOML). Every field has a default.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for default input and output paths; keeps a manifest.json index.
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and screen seeds until the pool target is met.
    GenPool(GenPoolArgs),
    /// Measure the six axes for every accepted pool game.
    ScoreAxes(ScoreAxesArgs),
    /// Pick a spread-out benchmark by farthest-point sampling.
    Select(SelectArgs),
    /// Print a game's rulebook, optionally followed by an opening observation.
    Render(RenderArgs),
    /// Solve a game's abstraction with CFR+.
    Solve(SolveArgs),
    /// Play the scheduled slots between agents.
    Tournament(TournamentArgs),
    /// Paired low/high effort slots against fixed anchors.
    Ablation(AblationArgs),
    /// Fit the overall strength leaderboard.
    Fit(FitArgs),
    /// Write every analysis table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenPoolArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed_start: Option<u64>,
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long)]
    pub max_scan: Option<u64>,
    /// Random-play episodes per acceptance check.
    #[arg(long)]
    pub episodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreAxesArgs {
    #[arg(long)]
    pub pool: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub tier: Option<Tier>,
    #[arg(long)]
    pub measurement_seed: Option<u64>,
    /// Measure only the first N accepted games.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub axes: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SeatArg {
    Alice,
    Bob,
}

impl From<SeatArg> for Seat {
    fn from(s: SeatArg) -> Seat {
        match s {
            SeatArg::Alice => Seat::Alice,
            SeatArg::Bob => Seat::Bob,
        }
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub game: u64,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append the opening observation for this play seed.
    #[arg(long)]
    pub play_seed: Option<u64>,
    #[arg(long, value_enum, default_value = "alice")]
    pub seat: SeatArg,
    /// Print the canonical spec JSON instead of the rulebook.
    #[arg(long, conflicts_with = "play_seed")]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LumpingArg {
    Default,
    Fine,
}

impl From<LumpingArg> for Lumping {
    fn from(l: LumpingArg) -> Lumping {
        match l {
            LumpingArg::Default => Lumping::Default,
            LumpingArg::Fine => Lumping::Fine,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub game: u64,
    #[arg(long, default_value_t = 2000)]
    pub iterations: u64,
    #[arg(long, value_enum, default_value = "default")]
    pub lumping: LumpingArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum CoverageArg {
    RoundRobin,
    Ring,
}

impl From<CoverageArg> for Coverage {
    fn from(c: CoverageArg) -> Coverage {
        match c {
            CoverageArg::RoundRobin => Coverage::RoundRobin,
            CoverageArg::Ring => Coverage::Ring,
        }
    }
}

#[derive(Debug, Args)]
pub struct TournamentArgs {
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    /// Agent bindings (TOML `[[agent]]` tables).
    #[arg(long)]
    pub agents: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Play only the first N benchmark games.
    #[arg(long)]
    pub games: Option<usize>,
    #[arg(long)]
    pub matches_per_matchup: Option<usize>,
    #[arg(long, value_enum)]
    pub coverage: Option<CoverageArg>,
    #[arg(long)]
    pub schedule_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AblationArgs {
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    #[arg(long)]
    pub agents: Option<PathBuf>,
    /// Slot table used to rank anchor candidates when no anchors are configured.
    #[arg(long)]
    pub slots: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub games: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub slots: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bootstrap replicates for the intervals.
    #[arg(long)]
    pub b: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub slots: Option<PathBuf>,
    /// Axis table; enables the profile, diagnostics and jaggedness tables.
    #[arg(long)]
    pub axes: Option<PathBuf>,
    /// Ablation pairs; enables the ablation table.
    #[arg(long)]
    pub ablation: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Runs one parsed command line. Errors are returned for the caller to print.
pub fn run(cli: Cli) -> Result<ExitCode> {
    let loaded = config::Loaded::load(cli.config.as_deref())?;
    let ctx = commands::Ctx { cfg: loaded, run: artifact::RunDir::new(cli.run_dir) };
    match cli.command {
        Command::GenPool(a) => commands::gen_pool(&ctx, a),
        Command::ScoreAxes(a) => commands::score_axes(&ctx, a),
        Command::Select(a) => commands::select(&ctx, a),
        Command::Render(a) => commands::render(&ctx, a),
        Command::Solve(a) => commands::solve(&ctx, a),
        Command::Tournament(a) => commands::tournament(&ctx, a),
        Command::Ablation(a) => commands::ablation(&ctx, a),
        Command::Fit(a) => commands::fit(&ctx, a),
        Command::Report(a) => report::report(&ctx, a),
    }
}

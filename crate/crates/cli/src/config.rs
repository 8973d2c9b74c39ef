//! Pipeline configuration. One TOML file; every section and field has a default
//! so a partial file (or none) is valid.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use genstrat_core::axes::Tier;
use genstrat_core::builder::{BuilderConfig, DEFAULT_EPISODES};
use genstrat_core::tournament::{AgentBinding, Coverage};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub builder: BuilderSection,
    pub pool: PoolSection,
    pub axes: AxesSection,
    pub selection: SelectionSection,
    pub tournament: TournamentSection,
    pub stats: StatsSection,
    pub ablation: Option<AblationSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuilderSection {
    pub dial: f64,
    pub max_phases: u8,
    pub max_deck: u16,
    pub max_hand: u8,
    /// Defaults to the digest of the built-in template table.
    pub builder_version: Option<String>,
    pub acceptance_episodes: usize,
}

impl Default for BuilderSection {
    fn default() -> Self {
        let d = BuilderConfig::default();
        BuilderSection {
            dial: d.dial,
            max_phases: d.max_phases,
            max_deck: d.max_deck,
            max_hand: d.max_hand,
            builder_version: None,
            acceptance_episodes: DEFAULT_EPISODES,
        }
    }
}

impl BuilderSection {
    pub fn to_config(&self) -> BuilderConfig {
        let mut c = BuilderConfig {
            dial: self.dial,
            max_phases: self.max_phases,
            max_deck: self.max_deck,
            max_hand: self.max_hand,
            ..Default::default()
        };
        if let Some(v) = &self.builder_version {
            c.builder_version = v.clone();
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolSection {
    pub seed_start: u64,
    pub target: usize,
    pub max_scan: u64,
}

impl Default for PoolSection {
    fn default() -> Self {
        PoolSection { seed_start: 0, target: 200, max_scan: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxesSection {
    pub tier: Tier,
    pub measurement_seed: u64,
}

impl Default for AxesSection {
    fn default() -> Self {
        AxesSection { tier: Tier::Precise, measurement_seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub k: usize,
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection { k: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TournamentSection {
    /// Slots per (pair, game); even.
    pub matches_per_matchup: usize,
    pub coverage: Coverage,
    pub schedule_seed: u64,
    /// Agent bindings file, relative to the config file.
    pub agents: Option<PathBuf>,
}

impl Default for TournamentSection {
    fn default() -> Self {
        TournamentSection { matches_per_matchup: 40, coverage: Coverage::Ring, schedule_seed: 1, agents: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub bootstrap_seed: u64,
    pub b_alpha: usize,
    pub b_profile: usize,
    pub b_decomposition: usize,
    pub b_head_to_head: usize,
    pub neighbours: usize,
    pub k_sweep: Vec<usize>,
    pub q: f64,
    /// Adds log10 rulebook length as a profile control.
    pub rulebook_control: bool,
}

impl Default for StatsSection {
    fn default() -> Self {
        StatsSection {
            bootstrap_seed: 1,
            b_alpha: genstrat_stats::bootstrap::B_ALPHA,
            b_profile: genstrat_stats::bootstrap::B_PROFILE,
            b_decomposition: genstrat_stats::bootstrap::B_DECOMPOSITION,
            b_head_to_head: genstrat_stats::bootstrap::B_PROFILE,
            neighbours: genstrat_stats::jagged::DEFAULT_K,
            k_sweep: vec![2, 3, 4, 5],
            q: 0.05,
            rulebook_control: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSection {
    pub family: String,
    /// Model names of the two variants; both must be in the agents file.
    pub low: String,
    pub high: String,
    /// Explicit anchors; when empty, the top and bottom of the fitted leaderboard.
    #[serde(default)]
    pub anchors: Vec<String>,
    #[serde(default = "default_runs")]
    pub runs: u32,
}

fn default_runs() -> u32 {
    20
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsFile {
    #[serde(rename = "agent", default)]
    pub agents: Vec<AgentBinding>,
}

/// A loaded config plus the directory relative paths resolve against.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: PipelineConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Loaded { config: PipelineConfig::default(), base: PathBuf::from(".") }),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                let config: PipelineConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                Ok(Loaded { config, base })
            }
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn agents(&self, override_path: Option<&Path>) -> Result<Vec<AgentBinding>> {
        let path = match (override_path, &self.config.tournament.agents) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(p)) => self.resolve(p),
            (None, None) => anyhow::bail!("no agents file: pass --agents or set tournament.agents"),
        };
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading agents {}", path.display()))?;
        let file: AgentsFile = toml::from_str(&text).with_context(|| format!("parsing agents {}", path.display()))?;
        for b in &file.agents {
            b.validate().with_context(|| format!("agent {}", b.model))?;
        }
        Ok(file.agents)
    }
}

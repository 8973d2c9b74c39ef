//! Artifact I/O: provenance headers, run-directory defaults and the manifest index.
//!
//! JSONL artifacts start with one `{"_provenance": {...}}` record; CSV and text
//! artifacts start with a `# provenance: {...}` comment line. Provenance maps
//! are `BTreeMap`s, so headers are byte-stable across runs.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use genstrat_core::tournament::fnv1a64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub type Provenance = BTreeMap<String, Value>;

pub const MANIFEST: &str = "manifest.json";

pub fn jsonl_header(p: &Provenance) -> String {
    format!("{}\n", json!({ "_provenance": p }))
}

pub fn text_header(p: &Provenance) -> String {
    format!("# provenance: {}\n", serde_json::to_string(p).expect("maps of json values serialize"))
}

/// Provenance of an existing artifact, from whichever header style it carries.
/// A file without a header yields an empty map.
pub fn read_provenance(path: &Path) -> Result<Provenance> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut first = String::new();
    BufReader::new(f).read_line(&mut first).with_context(|| format!("reading {}", path.display()))?;
    let first = first.trim();
    if let Some(rest) = first.strip_prefix("# provenance:") {
        return serde_json::from_str(rest.trim()).with_context(|| format!("{}:1: bad provenance header", path.display()));
    }
    if first.contains("\"_provenance\"") {
        let mut v: BTreeMap<String, Provenance> =
            serde_json::from_str(first).with_context(|| format!("{}:1: bad provenance record", path.display()))?;
        return Ok(v.remove("_provenance").unwrap_or_default());
    }
    Ok(Provenance::new())
}

/// Upstream provenance merged under this step's keys; a conflicting
/// `builder_version` is an error because the seeds would name different games.
pub fn inherit(upstream: &[&Provenance], own: Provenance) -> Result<Provenance> {
    let mut out = Provenance::new();
    for p in upstream {
        for (k, v) in p.iter() {
            if k == "builder_version" {
                if let Some(prev) = out.get(k) {
                    anyhow::ensure!(prev == v, "inputs disagree on builder_version: {prev} vs {v}");
                }
            }
            out.insert(k.clone(), v.clone());
        }
    }
    if let (Some(up), Some(mine)) = (out.get("builder_version"), own.get("builder_version")) {
        anyhow::ensure!(
            up == mine,
            "input was built with builder_version {up} but this run uses {mine}; set builder.builder_version to match"
        );
    }
    out.extend(own);
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub command: String,
    /// FNV-1a 64 of the file bytes, hex.
    pub digest: String,
    pub bytes: u64,
}

/// Default locations for inputs and outputs, plus the manifest index when a run directory is set.
#[derive(Clone, Debug, Default)]
pub struct RunDir {
    pub root: Option<PathBuf>,
}

impl RunDir {
    pub fn new(root: Option<PathBuf>) -> Self {
        RunDir { root }
    }

    /// The explicit path if given, else `name` inside the run directory, else `name` in the working directory.
    pub fn path(&self, explicit: Option<&Path>, name: &str) -> PathBuf {
        match (explicit, &self.root) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(r)) => r.join(name),
            (None, None) => PathBuf::from(name),
        }
    }

    /// Writes `bytes` and, with a run directory, records the artifact in the manifest.
    pub fn write(&self, path: &Path, bytes: &[u8], command: &str) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.record(path, bytes, command)
    }

    fn record(&self, path: &Path, bytes: &[u8], command: &str) -> Result<()> {
        let Some(root) = &self.root else { return Ok(()) };
        let rel = path.strip_prefix(root).unwrap_or(path).to_string_lossy().replace('\\', "/");
        let index_path = root.join(MANIFEST);
        let mut index: BTreeMap<String, ManifestEntry> = match fs::read_to_string(&index_path) {
            Ok(t) => serde_json::from_str(&t).with_context(|| format!("parsing {}", index_path.display()))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(e).with_context(|| format!("reading {}", index_path.display())),
        };
        index.insert(
            rel.clone(),
            ManifestEntry {
                path: rel,
                command: command.to_string(),
                digest: format!("{:016x}", fnv1a64(bytes)),
                bytes: bytes.len() as u64,
            },
        );
        fs::create_dir_all(root)?;
        let mut text = serde_json::to_string_pretty(&index)?;
        text.push('\n');
        fs::write(&index_path, text).with_context(|| format!("writing {}", index_path.display()))
    }
}

pub fn open(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(fs::File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

/// Reads a JSONL file of `T`, skipping blanks and provenance; errors name the file and line.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() || line.contains("\"_provenance\"") {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}: invalid row", path.display(), i + 1))?);
    }
    Ok(out)
}

pub fn to_jsonl<T: Serialize>(p: &Provenance, rows: &[T]) -> Result<Vec<u8>> {
    let mut out = jsonl_header(p).into_bytes();
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

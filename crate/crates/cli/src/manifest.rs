//! Run manifests: everything needed to repeat a run, written before any result.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::ScenarioFile;
use crate::Failure;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Command {
    Simulate,
    Poa,
    Verify,
    /// `value` is the deviator's scalar value.
    Deviate { player: usize, value: f64 },
    EmitBidfn { points: usize },
    /// Discretised game on `types` x `bids` grids; `sweeps` rounds of best replies.
    Solve { types: usize, bids: usize, sweeps: usize },
}

impl Command {
    /// Files written into the output directory, in order.
    pub fn outputs(&self) -> Vec<&'static str> {
        let mut files = match self {
            Command::Simulate => vec!["traces.csv"],
            Command::Poa => vec!["poa.csv"],
            Command::Verify => vec!["verify.csv"],
            Command::Deviate { .. } => vec!["deviation.csv"],
            Command::EmitBidfn { .. } => vec!["bidfn.csv", "second_round.csv"],
            Command::Solve { .. } => vec!["strategy_table.csv", "beliefs.csv", "gap.csv"],
        };
        files.push("summary.txt");
        files
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: Command,
    /// Built-in name or path the scenario was loaded from.
    pub scenario_source: Option<String>,
    /// The resolved scenario, with flags already applied.
    pub scenario: Option<ScenarioFile>,
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub created_unix: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: Command, scenario_source: Option<String>, scenario: Option<ScenarioFile>, seed: u64, samples: usize, tol: f64) -> Self {
        let outputs = command.outputs().into_iter().map(String::from).collect();
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self { tool_version: env!("CARGO_PKG_VERSION").into(), command, scenario_source, scenario, seed, samples, tol, created_unix, outputs }
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Schema(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises") + "\n"
    }
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

//! JSON run manifest written next to the CSV outputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, SeedSource};

pub const TOOL: &str = "dephase-lab";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub seed: u64,
    pub seed_source: SeedSource,
    /// Component versions and the numerical backends in use.
    pub versions: BTreeMap<String, String>,
    pub parallel: bool,
    pub threads: usize,
    pub wall_time_s: f64,
    /// CSV file names, relative to the manifest.
    pub outputs: Vec<String>,
    /// True when a numerical failure cut the run short.
    pub partial: bool,
    pub failure: Option<String>,
    pub notes: Vec<String>,
    /// Largest numeric versus closed-form deviation, for `compare`.
    pub max_abs_deviation: Option<f64>,
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("dephase-lab".to_string(), dephase_lab::VERSION.to_string()),
        ("dephase-lab-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("rng".to_string(), "ChaCha8 (rand_chacha), one stream per task".to_string()),
        ("linear_algebra".to_string(), "nalgebra".to_string()),
    ])
}

impl Manifest {
    pub fn file_name(command: &str, hash: &str) -> String {
        format!("{command}_{hash}.manifest.json")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

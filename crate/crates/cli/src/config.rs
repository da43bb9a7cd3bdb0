//! Run configuration: a flat `key = value` file merged with command-line
//! flags (flags win), validated into a [`RunConfig`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use dephase_lab::channels::ProbeFamily;
use dephase_lab::coherence::sdp::SolverOptions;
use dephase_lab::operator::Bipartition;
use dephase_lab::shotsim::{DEFAULT_RESAMPLES, MIN_RESAMPLES_3SIGMA};
use dephase_lab::states::{EncodingMask, GraphSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grid::{parse_grid, parse_int_grid};

pub const SEED_ENV: &str = "DEPHASE_LAB_SEED";

/// Largest register simulated densely.
pub const MAX_QUBITS: usize = 10;

/// Largest number of support blocks accepted for a coherence program.
const MAX_SUPPORT_BLOCKS: f64 = 1e5;

/// Largest φ spacing accepted for variance estimates.
const MAX_PHI_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(String);

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

/// Flags shared by every subcommand. Values are parsed after merging with
/// the config file, so they are kept as text here.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// ghz, ghz_encoded, cluster, cluster_encoded, graph or product.
    #[arg(long)]
    pub family: Option<String>,
    /// Register size, or a grid such as 2:8 for `qfi`.
    #[arg(long)]
    pub n: Option<String>,
    /// Encoding bitstring overriding the family default, 1 = Hadamard.
    #[arg(long)]
    pub mask: Option<String>,
    /// Noise grid, e.g. 0:1:0.05 or 0,0.5,1.
    #[arg(long)]
    pub p: Option<String>,
    /// Phase grid, e.g. 0:pi:0.01.
    #[arg(long)]
    pub phi: Option<String>,
    /// Shots per phase estimate.
    #[arg(long)]
    pub shots: Option<String>,
    /// Monte-Carlo resamples for confidence intervals.
    #[arg(long)]
    pub resamples: Option<String>,
    /// RNG seed; falls back to $DEPHASE_LAB_SEED, then 0.
    #[arg(long)]
    pub seed: Option<String>,
    /// Comma-separated bipartitions such as 1v234,12v34 (default: all).
    #[arg(long)]
    pub partitions: Option<String>,
    /// Coherence levels, e.g. 1,2,3.
    #[arg(long)]
    pub k: Option<String>,
    /// Outputs for `sweep`: negativity, purity, entropy, qfi, coherence, fringes, variance.
    #[arg(long)]
    pub out: Option<String>,
    /// Edge-list file for the graph family.
    #[arg(long)]
    pub graph: Option<String>,
    /// Directory for CSV files and the manifest.
    #[arg(long = "out-dir")]
    pub out_dir: Option<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<String>,
    /// Iteration cap for the coherence solver.
    #[arg(long = "max-iterations")]
    pub max_iterations: Option<String>,
}

const KEYS: [&str; 15] = [
    "family",
    "n",
    "mask",
    "p",
    "phi",
    "shots",
    "resamples",
    "seed",
    "partitions",
    "k",
    "out",
    "graph",
    "out_dir",
    "threads",
    "max_iterations",
];

impl Overrides {
    fn entries(&self) -> BTreeMap<&'static str, String> {
        let fields = [
            &self.family,
            &self.n,
            &self.mask,
            &self.p,
            &self.phi,
            &self.shots,
            &self.resamples,
            &self.seed,
            &self.partitions,
            &self.k,
            &self.out,
            &self.graph,
            &self.out_dir,
            &self.threads,
            &self.max_iterations,
        ];
        KEYS.iter()
            .zip(fields)
            .filter_map(|(k, v)| v.clone().map(|v| (*k, v)))
            .collect()
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<&'static str, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().replace('-', "_");
        let key = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| ConfigError::new(format!("line {}: unknown key '{key}'", lineno + 1)))?;
        if out.insert(*key, value.trim().to_string()).is_some() {
            return Err(ConfigError::new(format!("line {}: duplicate key '{key}'", lineno + 1)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Sweep,
    Fringes,
    Variance,
    Qfi,
    Coherence,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sweep => "sweep",
            Self::Fringes => "fringes",
            Self::Variance => "variance",
            Self::Qfi => "qfi",
            Self::Coherence => "coherence",
            Self::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ghz,
    GhzEncoded,
    Cluster,
    ClusterEncoded,
    Graph,
    Product,
}

impl FromStr for Family {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s.trim() {
            "ghz" => Self::Ghz,
            "ghz_encoded" => Self::GhzEncoded,
            "cluster" => Self::Cluster,
            "cluster_encoded" => Self::ClusterEncoded,
            "graph" => Self::Graph,
            "product" => Self::Product,
            other => return Err(ConfigError::new(format!("unknown family '{other}'"))),
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ghz => "ghz",
            Self::GhzEncoded => "ghz_encoded",
            Self::Cluster => "cluster",
            Self::ClusterEncoded => "cluster_encoded",
            Self::Graph => "graph",
            Self::Product => "product",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Negativity,
    Purity,
    Entropy,
    Qfi,
    Coherence,
    Fringes,
    Variance,
}

impl Output {
    pub fn name(self) -> &'static str {
        match self {
            Self::Negativity => "negativity",
            Self::Purity => "purity",
            Self::Entropy => "entropy",
            Self::Qfi => "qfi",
            Self::Coherence => "coherence",
            Self::Fringes => "fringes",
            Self::Variance => "variance",
        }
    }
}

impl FromStr for Output {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s.trim() {
            "negativity" => Self::Negativity,
            "purity" => Self::Purity,
            "entropy" => Self::Entropy,
            "qfi" => Self::Qfi,
            "coherence" => Self::Coherence,
            "fringes" => Self::Fringes,
            "variance" => Self::Variance,
            other => return Err(ConfigError::new(format!("unknown output '{other}'"))),
        })
    }
}

/// Graph read from an edge-list file, echoed into the config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEcho {
    pub n_qubits: usize,
    /// One-based edges.
    pub edges: Vec<(usize, usize)>,
}

/// Everything that determines the numbers in the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub family: Family,
    pub graph: Option<GraphEcho>,
    pub n: Vec<usize>,
    pub mask: Option<String>,
    pub p: Vec<f64>,
    pub phi: Vec<f64>,
    pub shots: u64,
    pub resamples: usize,
    pub seed: u64,
    pub outputs: Vec<Output>,
    pub partitions: Vec<String>,
    pub k: Vec<usize>,
    pub max_iterations: usize,
}

/// Where the seed came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Flag,
    ConfigFile,
    Environment,
    Default,
}

/// Settings that do not affect the numbers and are excluded from the hash.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub seed_source: SeedSource,
    pub config_file: Option<PathBuf>,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError::new(format!("{key}: cannot parse '{value}'")))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Merges the config file (if any), flags and environment into a validated
/// configuration.
pub fn load(command: Command, flags: &Overrides) -> Result<(RunConfig, Settings), ConfigError> {
    let mut values = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    let from_file_seed = values.contains_key("seed");
    values.extend(flags.entries());
    let (seed_text, seed_source) = if flags.seed.is_some() {
        (flags.seed.clone(), SeedSource::Flag)
    } else if from_file_seed {
        (values.get("seed").cloned(), SeedSource::ConfigFile)
    } else if let Ok(env) = std::env::var(SEED_ENV) {
        (Some(env), SeedSource::Environment)
    } else {
        (None, SeedSource::Default)
    };
    let seed = match seed_text {
        Some(s) => parse_num::<u64>("seed", &s)?,
        None => 0,
    };
    let get = |key: &str, default: &str| values.get(key).cloned().unwrap_or_else(|| default.to_string());

    let family: Family = get("family", "ghz").parse()?;
    let graph = match (family, values.get("graph")) {
        (Family::Graph, Some(path)) => {
            let text = std::fs::read_to_string(Path::new(path))
                .map_err(|e| ConfigError::new(format!("cannot read graph {path}: {e}")))?;
            let spec = GraphSpec::from_edge_list(&text).map_err(|e| ConfigError::new(format!("graph {path}: {e}")))?;
            Some(GraphEcho {
                n_qubits: spec.n_qubits(),
                edges: spec.edges().map(|(a, b)| (a + 1, b + 1)).collect(),
            })
        }
        (Family::Graph, None) => return Err(ConfigError::new("family graph needs --graph <edge-list file>")),
        (_, Some(_)) => return Err(ConfigError::new("--graph is only valid with --family graph")),
        (_, None) => None,
    };

    let default_n = match (&graph, command) {
        (Some(g), _) => g.n_qubits.to_string(),
        (None, Command::Qfi) => "2:8".to_string(),
        (None, _) => "4".to_string(),
    };
    let n = parse_int_grid(&get("n", &default_n))?;
    if n.is_empty() {
        return Err(ConfigError::new("n: empty"));
    }
    if let Some(&bad) = n.iter().find(|&&v| !(2..=MAX_QUBITS).contains(&v)) {
        return Err(ConfigError::new(format!("n: {bad} outside 2..={MAX_QUBITS}")));
    }
    if n.len() > 1 && command != Command::Qfi {
        return Err(ConfigError::new(format!("n: a single register size is needed for {}", command.name())));
    }
    if let Some(g) = &graph {
        if n != [g.n_qubits] {
            return Err(ConfigError::new(format!("n: graph file has {} qubits", g.n_qubits)));
        }
    }

    let mask = match values.get("mask") {
        Some(m) => {
            let m = m.trim().to_string();
            if n.len() != 1 || m.len() != n[0] {
                return Err(ConfigError::new(format!("mask '{m}' must have one bit per qubit")));
            }
            EncodingMask::from_str(&m).map_err(|e| ConfigError::new(format!("mask: {e}")))?;
            Some(m)
        }
        None => None,
    };

    let p = parse_grid(&get("p", "0:1:0.05"), None).map_err(|e| ConfigError::new(format!("p: {e}")))?;
    if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(ConfigError::new(format!("p: {bad} outside [0, 1]")));
    }
    let phi = parse_grid(&get("phi", "0:pi:0.01"), None).map_err(|e| ConfigError::new(format!("phi: {e}")))?;

    let shots: u64 = parse_num("shots", &get("shots", "1000"))?;
    if shots == 0 {
        return Err(ConfigError::new("shots must be positive"));
    }
    let resamples: usize = parse_num("resamples", &get("resamples", &DEFAULT_RESAMPLES.to_string()))?;
    if resamples < MIN_RESAMPLES_3SIGMA {
        return Err(ConfigError::new(format!(
            "resamples must be at least {MIN_RESAMPLES_3SIGMA} for 3-sigma intervals"
        )));
    }

    let mut outputs = match command {
        Command::Sweep => list(&get("out", "negativity,purity,entropy,qfi"))
            .map(Output::from_str)
            .collect::<Result<Vec<_>, _>>()?,
        _ if values.contains_key("out") => {
            return Err(ConfigError::new(format!("--out is only valid for sweep, not {}", command.name())));
        }
        _ => Vec::new(),
    };
    outputs.sort();
    outputs.dedup();
    if command == Command::Sweep && outputs.is_empty() {
        return Err(ConfigError::new("out: no outputs requested"));
    }

    let partitions = match values.get("partitions") {
        Some(text) => list(text)
            .map(|label| {
                Bipartition::parse(label, n[0])
                    .map(|b| b.label())
                    .map_err(|e| ConfigError::new(format!("partitions: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };

    let k = parse_int_grid(&get("k", "1"))?;
    let needs_k = command == Command::Coherence || outputs.contains(&Output::Coherence);
    if needs_k {
        let dim = 1usize << n[0];
        for &level in &k {
            if level == 0 || level > dim {
                return Err(ConfigError::new(format!("k: {level} outside 1..={dim}")));
            }
            if binomial(dim, level) > MAX_SUPPORT_BLOCKS {
                return Err(ConfigError::new(format!(
                    "k: level {level} at n = {} needs {} support blocks",
                    n[0],
                    binomial(dim, level)
                )));
            }
        }
    }

    if command == Command::Variance || outputs.contains(&Output::Variance) {
        let mut sorted = phi.clone();
        sorted.sort_by(f64::total_cmp);
        let widest = sorted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        if sorted.len() < 2 || widest > MAX_PHI_STEP + 1e-12 {
            return Err(ConfigError::new(format!(
                "phi: variance needs a grid spacing of at most {MAX_PHI_STEP} rad"
            )));
        }
    }

    let max_iterations: usize = parse_num(
        "max_iterations",
        &get("max_iterations", &SolverOptions::default().max_iterations.to_string()),
    )?;
    if max_iterations == 0 {
        return Err(ConfigError::new("max_iterations must be positive"));
    }

    let threads = match values.get("threads") {
        Some(t) => {
            let t: usize = parse_num("threads", t)?;
            if t == 0 {
                return Err(ConfigError::new("threads must be positive"));
            }
            Some(t)
        }
        None => None,
    };

    let config = RunConfig {
        command,
        family,
        graph,
        n,
        mask,
        p,
        phi,
        shots,
        resamples,
        seed,
        outputs,
        partitions,
        k,
        max_iterations,
    };
    let settings = Settings {
        out_dir: PathBuf::from(get("out_dir", ".")),
        threads,
        seed_source,
        config_file: flags.config.clone(),
    };
    Ok((config, settings))
}

impl RunConfig {
    /// First 12 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    /// The probe for register size `n`, with any mask override applied.
    pub fn family_for(&self, n: usize) -> dephase_lab::Result<ProbeFamily> {
        let base = match self.family {
            Family::Ghz => ProbeFamily::ghz(n)?,
            Family::GhzEncoded => ProbeFamily::ghz_encoded(n)?,
            Family::Cluster => ProbeFamily::cluster(n)?,
            Family::ClusterEncoded => ProbeFamily::cluster_encoded(n)?,
            Family::Product => ProbeFamily::product(n)?,
            Family::Graph => {
                let g = self.graph.as_ref().expect("graph family carries its graph");
                let edges: Vec<(usize, usize)> = g.edges.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
                ProbeFamily::graph(&GraphSpec::new(g.n_qubits, &edges)?, None)?
            }
        };
        match &self.mask {
            Some(m) => base.with_mask(Some(EncodingMask::from_str(m)?)),
            None => Ok(base),
        }
    }

    /// Requested bipartitions, or all of them.
    pub fn bipartitions(&self, n: usize) -> Vec<Bipartition> {
        if self.partitions.is_empty() {
            Bipartition::all(n)
        } else {
            self.partitions
                .iter()
                .map(|l| Bipartition::parse(l, n).expect("validated at load"))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Overrides {
        Overrides::default()
    }

    #[test]
    fn config_text_parses_and_rejects_unknown_keys() {
        let m = parse_config_text("# comment\nfamily = ghz\nout-dir = results # trailing\n\np=0:1:0.5\n").unwrap();
        assert_eq!(m["family"], "ghz");
        assert_eq!(m["out_dir"], "results");
        assert_eq!(m["p"], "0:1:0.5");
        assert!(parse_config_text("colour = red").is_err());
        assert!(parse_config_text("family").is_err());
        assert!(parse_config_text("n = 2\nn = 3").is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let dir = std::env::temp_dir().join(format!("dephase-lab-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "family = cluster\np = 0.5\nseed = 9\n").unwrap();
        let mut f = flags();
        f.config = Some(path);
        f.p = Some("0.25".into());
        let (cfg, settings) = load(Command::Sweep, &f).unwrap();
        assert_eq!(cfg.family, Family::Cluster);
        assert_eq!(cfg.p, vec![0.25]);
        assert_eq!(cfg.seed, 9);
        assert_eq!(settings.seed_source, SeedSource::ConfigFile);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn validation_errors() {
        let with = |set: fn(&mut Overrides)| {
            let mut f = flags();
            set(&mut f);
            load(Command::Sweep, &f)
        };
        assert!(with(|f| f.family = Some("w".into())).is_err());
        assert!(with(|f| f.p = Some("0:2:0.5".into())).is_err());
        assert!(with(|f| f.n = Some("2:4".into())).is_err());
        assert!(with(|f| f.mask = Some("101".into())).is_err());
        assert!(with(|f| f.partitions = Some("1v2".into())).is_err());
        assert!(with(|f| f.out = Some("colour".into())).is_err());
        assert!(with(|f| f.resamples = Some("10".into())).is_err());
        assert!(with(|f| f.shots = Some("0".into())).is_err());
        assert!(with(|f| f.family = Some("graph".into())).is_err());
        assert!(with(|f| f.phi = Some("0:1:0.1".into())).is_ok());
        assert!(with(|f| {
            f.phi = Some("0:1:0.1".into());
            f.out = Some("variance".into());
        })
        .is_err());
        assert!(load(Command::Qfi, &Overrides { n: Some("2:8".into()), ..flags() }).is_ok());
        assert!(load(Command::Coherence, &Overrides { k: Some("8".into()), ..flags() }).is_ok());
        assert!(load(Command::Coherence, &Overrides { k: Some("17".into()), ..flags() }).is_err());
        let big = Overrides {
            n: Some("6".into()),
            k: Some("4".into()),
            ..flags()
        };
        assert!(load(Command::Coherence, &big).is_err());
    }

    #[test]
    fn hash_ignores_settings_but_not_numbers() {
        let base = load(Command::Sweep, &flags()).unwrap();
        let moved = load(
            Command::Sweep,
            &Overrides {
                out_dir: Some("elsewhere".into()),
                threads: Some("3".into()),
                ..flags()
            },
        )
        .unwrap();
        assert_eq!(base.0.hash(), moved.0.hash());
        let other = load(Command::Sweep, &Overrides { p: Some("0.5".into()), ..flags() }).unwrap();
        assert_ne!(base.0.hash(), other.0.hash());
        assert_eq!(base.0.hash().len(), 12);
    }

    #[test]
    fn partitions_are_canonicalized() {
        let (cfg, _) = load(Command::Sweep, &Overrides { partitions: Some("12|34, 1v234".into()), ..flags() }).unwrap();
        assert_eq!(cfg.partitions, vec!["12v34", "1v234"]);
    }
}

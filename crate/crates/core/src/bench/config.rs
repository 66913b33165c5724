//! Run configuration in a flat `key = value` text format.
//!
//! | key | meaning |
//! |-----|---------|
//! | `graph` | path to a graph file |
//! | `graph_format` | `gset`, `dimacs` or `auto` (by extension) |
//! | `regular` | `n,d,seed` generator spec, used when `graph` is absent |
//! | `allow_weights` | accept Gset weights other than 1 |
//! | `problem` | `mis`, `mc` or `gc` |
//! | `penalty`, `colors` | MIS penalty, GC color count |
//! | `arch`, `optimizer`, `lr`, `dropout` | model and base optimizer |
//! | `z_emb`, `z_1`, `z_2`, `beta`, `i0`, `node` | chaotic feedback (`node` is `random` or an index) |
//! | `epochs`, `patience`, `min_delta`, `eval_every` | budget and stopping (`patience = none` disables) |
//! | `seeds` | comma-separated list |
//! | `repair` | greedy MIS repair of the reported solutions |
//! | `out`, `workers` | output directory, worker count (0 = all cores) |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{generate_regular, load_dimacs_col, load_gset, GsetOptions, Graph};
use crate::hamiltonian::{ProblemEncoding, ProblemKind};
use crate::nn::Arch;
use crate::trainer::{
    ChaoticConfig, LayerStrengths, NodeMode, OptimizerConfig, OptimizerKind, TrainConfig,
    DEFAULT_BETA, DEFAULT_I0, DEFAULT_MIN_DELTA, DEFAULT_PATIENCE, DEFAULT_Z0,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    Gset,
    Dimacs,
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GraphSource {
    File { path: PathBuf, format: GraphFormat },
    Regular { n: usize, d: usize, seed: u64 },
}

impl GraphSource {
    pub fn load(&self, allow_weights: bool) -> Result<Graph> {
        match self {
            GraphSource::Regular { n, d, seed } => generate_regular(*n, *d, *seed),
            GraphSource::File { path, format } => {
                let fmt = match format {
                    GraphFormat::Auto if path.extension().is_some_and(|e| e == "col") => GraphFormat::Dimacs,
                    GraphFormat::Auto => GraphFormat::Gset,
                    f => *f,
                };
                match fmt {
                    GraphFormat::Dimacs => load_dimacs_col(path),
                    _ => load_gset(path, GsetOptions { allow_weights }),
                }
            }
        }
    }

    /// Degree of the generator, when the graph is known to be regular.
    pub fn regular_degree(&self) -> Option<usize> {
        match self {
            GraphSource::Regular { d, .. } => Some(*d),
            GraphSource::File { .. } => None,
        }
    }
}

pub fn parse_regular_spec(s: &str) -> Result<GraphSource> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::param(format!("expected `n,d,seed`, got `{s}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    Ok(GraphSource::Regular {
        n: parts[0].parse().map_err(|_| bad())?,
        d: parts[1].parse().map_err(|_| bad())?,
        seed: parts[2].parse().map_err(|_| bad())?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub graph: GraphSource,
    pub allow_weights: bool,
    pub problem: ProblemKind,
    pub penalty: f64,
    pub colors: usize,
    pub arch: Arch,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub dropout: f64,
    pub z: [f64; 3],
    pub beta: f64,
    pub i0: f64,
    pub node_mode: NodeMode,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub min_delta: f64,
    pub eval_every: usize,
    pub seeds: Vec<u64>,
    pub repair: bool,
    pub out: PathBuf,
    pub workers: usize,
}

pub const DEFAULT_LR: f64 = 0.1;

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            graph: GraphSource::Regular { n: 100, d: 3, seed: 0 },
            allow_weights: false,
            problem: ProblemKind::MaxCut,
            penalty: 2.0,
            colors: 5,
            arch: Arch::Gcn,
            optimizer: OptimizerKind::Adam,
            lr: DEFAULT_LR,
            dropout: 0.0,
            z: DEFAULT_Z0,
            beta: DEFAULT_BETA,
            i0: DEFAULT_I0,
            node_mode: NodeMode::RandomPerEpoch,
            epochs: 10_000,
            patience: Some(DEFAULT_PATIENCE),
            min_delta: DEFAULT_MIN_DELTA,
            eval_every: 1,
            seeds: vec![0],
            repair: false,
            out: PathBuf::from("out"),
            workers: 0,
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

/// A comma-separated list (`0,3,7`) or a half-open range (`0..5`).
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let bad = || Error::param(format!("bad seed range `{s}`"));
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a >= b {
            return Err(bad());
        }
        return Ok((a..b).collect());
    }
    let seeds = s
        .split(',')
        .map(|t| t.trim().parse::<u64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::param(format!("bad seed list `{s}`")))?;
    if seeds.is_empty() {
        return Err(Error::param("seed list is empty"));
    }
    Ok(seeds)
}

impl RunConfig {
    pub fn encoding(&self) -> Result<ProblemEncoding<f64>> {
        match self.problem {
            ProblemKind::Mis => ProblemEncoding::mis(self.penalty),
            ProblemKind::MaxCut => Ok(ProblemEncoding::MaxCut),
            ProblemKind::Coloring => ProblemEncoding::coloring(self.colors),
            ProblemKind::Qubo => Err(Error::param("QUBO runs need an explicit matrix; use the library API")),
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig<f64> {
        TrainConfig {
            arch: self.arch,
            chaos: ChaoticConfig {
                z0: LayerStrengths::new(self.z[0], self.z[1], self.z[2]),
                beta: self.beta,
                i0: self.i0,
                node_mode: self.node_mode,
            },
            optimizer: OptimizerConfig::new(self.optimizer, self.lr),
            dropout: self.dropout,
            max_epochs: self.epochs,
            patience: self.patience,
            min_delta: self.min_delta,
            eval_every: self.eval_every,
            seed,
            keep_best_params: false,
        }
    }

    pub fn load_graph(&self) -> Result<Graph> {
        self.graph.load(self.allow_weights)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::param("seed list is empty"));
        }
        if let GraphSource::File { path, .. } = &self.graph {
            if !path.is_file() {
                return Err(Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "graph file not found"),
                ));
            }
        }
        self.encoding()?;
        self.train_config(self.seeds[0]).validate()
    }

    /// Every key except `out` and `workers`, which do not affect results.
    fn result_keys(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.graph {
            GraphSource::File { path, format } => {
                kv("graph", path.display().to_string());
                let f = match format {
                    GraphFormat::Gset => "gset",
                    GraphFormat::Dimacs => "dimacs",
                    GraphFormat::Auto => "auto",
                };
                kv("graph_format", f.into());
            }
            GraphSource::Regular { n, d, seed } => kv("regular", format!("{n},{d},{seed}")),
        }
        kv("allow_weights", self.allow_weights.to_string());
        kv("problem", self.problem.to_string());
        kv("penalty", format!("{:?}", self.penalty));
        kv("colors", self.colors.to_string());
        kv("arch", self.arch.to_string());
        kv("optimizer", self.optimizer.to_string());
        kv("lr", format!("{:?}", self.lr));
        kv("dropout", format!("{:?}", self.dropout));
        kv("z_emb", format!("{:?}", self.z[0]));
        kv("z_1", format!("{:?}", self.z[1]));
        kv("z_2", format!("{:?}", self.z[2]));
        kv("beta", format!("{:?}", self.beta));
        kv("i0", format!("{:?}", self.i0));
        let node = match self.node_mode {
            NodeMode::RandomPerEpoch => "random".to_string(),
            NodeMode::Fixed(d) => d.to_string(),
        };
        kv("node", node);
        kv("epochs", self.epochs.to_string());
        kv("patience", self.patience.map_or("none".into(), |p| p.to_string()));
        kv("min_delta", format!("{:?}", self.min_delta));
        kv("eval_every", self.eval_every.to_string());
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        kv("seeds", seeds.join(","));
        kv("repair", self.repair.to_string());
        s
    }

    pub fn to_kv(&self) -> String {
        let mut s = self.result_keys();
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "workers = {}", self.workers);
        s
    }

    /// First 16 hex digits of the SHA-256 of the result-affecting keys.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.result_keys().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn from_kv(text: &str, source: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut graph_path: Option<PathBuf> = None;
        let mut format = GraphFormat::Auto;
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: source.to_string(),
                line: k + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .map(|(a, b)| (a.trim(), b.trim()))
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let bad = || err(format!("bad value `{value}` for `{key}`"));
            let num = || value.parse::<f64>().map_err(|_| bad());
            let count = || value.parse::<usize>().map_err(|_| bad());
            match key {
                "graph" => graph_path = Some(PathBuf::from(value)),
                "graph_format" => {
                    format = match value {
                        "gset" => GraphFormat::Gset,
                        "dimacs" => GraphFormat::Dimacs,
                        "auto" => GraphFormat::Auto,
                        _ => return Err(bad()),
                    }
                }
                "regular" => cfg.graph = parse_regular_spec(value).map_err(|_| bad())?,
                "allow_weights" => cfg.allow_weights = parse_bool(value).ok_or_else(bad)?,
                "problem" => cfg.problem = value.parse().map_err(|_| bad())?,
                "penalty" => cfg.penalty = num()?,
                "colors" => cfg.colors = count()?,
                "arch" => cfg.arch = value.parse().map_err(|_| bad())?,
                "optimizer" => cfg.optimizer = value.parse().map_err(|_| bad())?,
                "lr" => cfg.lr = num()?,
                "dropout" => cfg.dropout = num()?,
                "z_emb" => cfg.z[0] = num()?,
                "z_1" => cfg.z[1] = num()?,
                "z_2" => cfg.z[2] = num()?,
                "beta" => cfg.beta = num()?,
                "i0" => cfg.i0 = num()?,
                "node" => {
                    cfg.node_mode = match value {
                        "random" => NodeMode::RandomPerEpoch,
                        v => NodeMode::Fixed(v.parse().map_err(|_| bad())?),
                    }
                }
                "epochs" => cfg.epochs = count()?,
                "patience" => {
                    cfg.patience = match value {
                        "none" => None,
                        _ => Some(count()?),
                    }
                }
                "min_delta" => cfg.min_delta = num()?,
                "eval_every" => cfg.eval_every = count()?,
                "seeds" => cfg.seeds = parse_seeds(value).map_err(|_| bad())?,
                "repair" => cfg.repair = parse_bool(value).ok_or_else(bad)?,
                "out" => cfg.out = PathBuf::from(value),
                "workers" => cfg.workers = count()?,
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        if let Some(path) = graph_path {
            cfg.graph = GraphSource::File { path, format };
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv(&text, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_kv()).map_err(|e| Error::io(path, e))
    }
}

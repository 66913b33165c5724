//! Multi-seed solving with per-seed artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::hamiltonian::{ProblemEncoding, ProblemKind};
use crate::projection::{approximation_ratio, greedy_repair_mis, save_solution, Assignment};
use crate::trainer::{save_trajectory_csv, train, EpochRecord, StopReason};

#[derive(Clone, Debug)]
pub struct SeedOutcome {
    pub seed: u64,
    /// Best projected solution, after repair when enabled.
    pub best: Option<Assignment>,
    /// The unrepaired best, when repair changed it.
    pub raw_best: Option<Assignment>,
    pub stop: StopReason,
    pub epochs: usize,
    pub seconds_per_epoch: f64,
    pub train_seconds: f64,
    pub records: Vec<EpochRecord<f64>>,
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))
}

pub(crate) fn run_one(cfg: &RunConfig, g: &Graph, enc: &ProblemEncoding<f64>, seed: u64) -> Result<SeedOutcome> {
    let r = train(g, enc, &cfg.train_config(seed))?;
    let mut best = r.best.clone();
    let mut raw_best = None;
    if cfg.repair && cfg.problem == ProblemKind::Mis {
        if let Some(a) = &r.best {
            let fixed = greedy_repair_mis(&a.values, g);
            if fixed != a.values {
                raw_best = Some(a.clone());
                best = Some(Assignment::evaluate(enc, fixed, a.epoch, g)?);
            }
        }
    }
    Ok(SeedOutcome {
        seed,
        best,
        raw_best,
        stop: r.stop.clone(),
        epochs: r.epochs_run(),
        seconds_per_epoch: r.seconds_per_epoch(),
        train_seconds: r.train_seconds,
        records: r.records,
    })
}

/// Trains once per seed on a bounded pool. Errors are kept per seed so one
/// failing seed does not abort the others.
pub fn run_seeds(cfg: &RunConfig, g: &Graph) -> Result<Vec<(u64, Result<SeedOutcome>)>> {
    let enc = cfg.encoding()?;
    let pool = thread_pool(cfg.workers)?;
    Ok(pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&s| (s, run_one(cfg, g, &enc, s)))
            .collect()
    }))
}

#[derive(Clone, Debug)]
pub struct SolveSummary {
    pub config_hash: String,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub outcomes: Vec<SeedOutcome>,
    pub failures: Vec<(u64, String)>,
    /// Index into `outcomes` of the best seed.
    pub best: Option<usize>,
    pub regular_degree: Option<usize>,
}

impl SolveSummary {
    pub fn best_outcome(&self) -> Option<&SeedOutcome> {
        self.best.map(|i| &self.outcomes[i])
    }

    pub fn ratio(&self, a: &Assignment) -> Option<f64> {
        match (a.report.kind, self.regular_degree) {
            (ProblemKind::MaxCut, Some(d)) => Some(approximation_ratio(a.report.objective, d, self.n_nodes)),
            _ => None,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "config_hash {}", self.config_hash);
        let _ = writeln!(s, "graph nodes {} edges {}", self.n_nodes, self.n_edges);
        for o in &self.outcomes {
            let _ = write!(s, "seed {} ", o.seed);
            match &o.best {
                Some(a) => {
                    let _ = write!(
                        s,
                        "objective {} violations {} hamiltonian {} best_epoch {}",
                        a.report.objective, a.report.violations, a.report.hamiltonian, a.epoch
                    );
                    if let Some(r) = self.ratio(a) {
                        let _ = write!(s, " ratio {r:.4}");
                    }
                }
                None => s.push_str("objective none"),
            }
            let _ = writeln!(
                s,
                " epochs {} stop {} sec_per_epoch {:.3e}",
                o.epochs, o.stop, o.seconds_per_epoch
            );
        }
        for (seed, msg) in &self.failures {
            let _ = writeln!(s, "seed {seed} error {msg}");
        }
        match self.best_outcome().and_then(|o| o.best.as_ref().map(|a| (o.seed, a))) {
            Some((seed, a)) => {
                let _ = writeln!(s, "best seed {seed} objective {} hamiltonian {}", a.report.objective, a.report.hamiltonian);
            }
            None => s.push_str("best none\n"),
        }
        s
    }
}

/// The shared degree of a non-empty regular graph.
fn common_degree(g: &Graph) -> Option<usize> {
    let d = g.degree(0);
    (d > 0 && (1..g.n_nodes()).all(|i| g.degree(i) == d)).then_some(d)
}

pub fn summarize(cfg: &RunConfig, g: &Graph, results: Vec<(u64, Result<SeedOutcome>)>) -> SolveSummary {
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push((seed, e.to_string())),
        }
    }
    let mut best: Option<usize> = None;
    for (i, o) in outcomes.iter().enumerate() {
        let Some(a) = &o.best else { continue };
        let better = best
            .and_then(|b| outcomes[b].best.as_ref())
            .is_none_or(|cur| a.report.is_better_than(&cur.report));
        if better {
            best = Some(i);
        }
    }
    SolveSummary {
        config_hash: cfg.hash(),
        n_nodes: g.n_nodes(),
        n_edges: g.n_edges(),
        outcomes,
        failures,
        best,
        regular_degree: cfg.graph.regular_degree().or_else(|| common_degree(g)),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs every seed and writes `manifest.txt`, `summary.txt`, and per seed
/// `trajectory_seed<k>.csv` and `solution_seed<k>.txt` into `cfg.out`.
/// Fails only when the configuration is unusable or no seed succeeded.
pub fn run_solve(cfg: &RunConfig) -> Result<SolveSummary> {
    cfg.validate()?;
    let g = cfg.load_graph()?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    write_text(
        &cfg.out.join("manifest.txt"),
        &format!("# config_hash {}\n{}", cfg.hash(), cfg.to_kv()),
    )?;
    let results = run_seeds(cfg, &g)?;
    let summary = summarize(cfg, &g, results);
    for o in &summary.outcomes {
        save_trajectory_csv(cfg.out.join(format!("trajectory_seed{}.csv", o.seed)), &o.records)?;
        if let Some(a) = &o.best {
            save_solution(cfg.out.join(format!("solution_seed{}.txt", o.seed)), a, summary.ratio(a))?;
        }
    }
    write_text(&cfg.out.join("summary.txt"), &summary.render())?;
    if summary.best.is_none() {
        return Err(Error::Numeric {
            epoch: 0,
            stage: "no seed produced a solution".into(),
        });
    }
    Ok(summary)
}

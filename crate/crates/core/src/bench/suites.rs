//! Benchmark suites. Each row carries the configuration hash, seed, wall
//! clock and, where one exists, the published reference value.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use super::config::{GraphFormat, GraphSource, RunConfig};
use super::solve::{run_seeds, summarize, SolveSummary};
use crate::dynamics::{attractor_spread, lyapunov_max, toy_train, ToyConfig, ToyMode};
use crate::error::{Error, Result};
use crate::graph::queen_graph;
use crate::hamiltonian::ProblemKind;
use crate::nn::Arch;
use crate::projection::approximation_ratio;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    RegularScaling,
    Gset,
    Queen,
    Citation,
    Toy,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::RegularScaling, Suite::Gset, Suite::Queen, Suite::Citation, Suite::Toy];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::RegularScaling => "regular_scaling",
            Suite::Gset => "gset",
            Suite::Queen => "queen",
            Suite::Citation => "citation",
            Suite::Toy => "toy",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| Error::param(format!("unknown suite `{s}`")))
    }
}

/// Directory of the graph files shipped with the crate.
pub fn bundled_data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchOptions {
    /// Searched for dataset files; the bundled directory is always searched
    /// afterwards.
    pub data_dir: Option<PathBuf>,
    pub out: PathBuf,
    pub seeds: Vec<u64>,
    /// Include the large instances.
    pub extended: bool,
    /// Overrides every suite's epoch budget.
    pub epochs: Option<usize>,
    /// Epochs per timing run for graphs above 1000 nodes when not extended.
    pub timing_epochs: usize,
    pub workers: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            data_dir: None,
            out: PathBuf::from("bench_out"),
            seeds: vec![0, 1, 2],
            extended: false,
            epochs: None,
            timing_epochs: 100,
            workers: 0,
        }
    }
}

impl BenchOptions {
    fn find(&self, names: &[String]) -> Option<PathBuf> {
        let dirs = self.data_dir.iter().cloned().chain(std::iter::once(bundled_data_dir()));
        for dir in dirs {
            for name in names {
                let p = dir.join(name);
                if p.is_file() {
                    return Some(p);
                }
            }
        }
        None
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub method: String,
    pub metric: String,
    /// `NaN` for skipped rows.
    pub value: f64,
    pub published: Option<String>,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub seconds: f64,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub suite: Suite,
    pub rows: Vec<BenchRow>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("suite,instance,method,metric,value,published,config_hash,seed,seconds,note\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{:.3},{}",
                self.suite,
                csv_field(&r.instance),
                csv_field(&r.method),
                r.metric,
                r.value,
                csv_field(r.published.as_deref().unwrap_or("")),
                r.config_hash,
                r.seed.map(|x| x.to_string()).unwrap_or_default(),
                r.seconds,
                csv_field(&r.note)
            );
        }
        s
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "{:<14} {:<10} {:<14} {:>12} {:>12}  {}\n",
            "instance", "method", "metric", "ours", "published", "note"
        );
        for r in &self.rows {
            let v = if r.value.is_nan() { "-".to_string() } else { format!("{}", round_for_display(r.value)) };
            let _ = writeln!(
                s,
                "{:<14} {:<10} {:<14} {:>12} {:>12}  {}",
                r.instance,
                r.method,
                r.metric,
                v,
                r.published.as_deref().unwrap_or("-"),
                r.note
            );
        }
        s
    }
}

fn round_for_display(x: f64) -> f64 {
    if x.fract() == 0.0 {
        x
    } else {
        (x * 1e4).round() / 1e4
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn skipped(instance: &str, method: &str, published: Option<String>, why: String) -> BenchRow {
    log::warn!("{instance}: {why}");
    BenchRow {
        instance: instance.into(),
        method: method.into(),
        metric: "objective".into(),
        value: f64::NAN,
        published,
        config_hash: String::new(),
        seed: None,
        seconds: 0.0,
        note: why,
    }
}

fn solve(cfg: &RunConfig) -> Result<(SolveSummary, f64)> {
    let g = cfg.load_graph()?;
    let t = Instant::now();
    let results = run_seeds(cfg, &g)?;
    Ok((summarize(cfg, &g, results), t.elapsed().as_secs_f64()))
}

fn objective_row(instance: &str, method: &str, cfg: &RunConfig, published: Option<String>, note: String) -> Result<BenchRow> {
    let (summary, seconds) = solve(cfg)?;
    let best = summary.best_outcome();
    Ok(BenchRow {
        instance: instance.into(),
        method: method.into(),
        metric: "objective".into(),
        value: best
            .and_then(|o| o.best.as_ref())
            .map_or(f64::NAN, |a| a.report.objective as f64),
        published,
        config_hash: cfg.hash(),
        seed: best.map(|o| o.seed),
        seconds,
        note,
    })
}

fn base(opts: &BenchOptions) -> RunConfig {
    RunConfig {
        seeds: opts.seeds.clone(),
        workers: opts.workers,
        out: opts.out.clone(),
        ..RunConfig::default()
    }
}

fn regular_scaling(opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let mut sizes = vec![100usize, 1000, 10_000];
    if opts.extended {
        sizes.push(100_000);
    }
    let mut rows = Vec::new();
    for (method, chaotic, published) in [("BP", false, "0.90-0.92"), ("CGBP", true, "0.95")] {
        let mut times = Vec::new();
        for &n in &sizes {
            let full = opts.epochs.unwrap_or(10_000);
            let epochs = if n > 1000 && !opts.extended { opts.timing_epochs.min(full) } else { full };
            let mut cfg = base(opts);
            cfg.graph = GraphSource::Regular { n, d: 3, seed: 0 };
            cfg.epochs = epochs;
            if !chaotic {
                cfg.z = [0.0; 3];
            }
            let (summary, seconds) = solve(&cfg)?;
            let spe: Vec<f64> = summary.outcomes.iter().map(|o| o.seconds_per_epoch).collect();
            let mean_spe = spe.iter().sum::<f64>() / spe.len().max(1) as f64;
            times.push(mean_spe);
            let best = summary.best_outcome();
            let ratio = best
                .and_then(|o| o.best.as_ref())
                .map_or(f64::NAN, |a| approximation_ratio(a.report.objective, 3, n));
            let instance = format!("({n},3)");
            rows.push(BenchRow {
                instance: instance.clone(),
                method: method.into(),
                metric: "ratio".into(),
                value: ratio,
                published: Some(published.into()),
                config_hash: cfg.hash(),
                seed: best.map(|o| o.seed),
                seconds,
                note: format!("{epochs} epochs"),
            });
            rows.push(BenchRow {
                instance,
                method: method.into(),
                metric: "epoch_seconds".into(),
                value: mean_spe,
                published: None,
                config_hash: cfg.hash(),
                seed: None,
                seconds,
                note: format!("mean over {} seeds", spe.len()),
            });
        }
        let ns: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
        rows.push(BenchRow {
            instance: "all".into(),
            method: method.into(),
            metric: "time_slope".into(),
            value: loglog_slope(&ns, &times),
            published: Some("~1".into()),
            config_hash: String::new(),
            seed: None,
            seconds: 0.0,
            note: "log-log slope of epoch time vs n".into(),
        });
    }
    Ok(rows)
}

fn file_instances(
    opts: &BenchOptions,
    instances: &[(&str, Vec<String>, ProblemKind, usize, u64, bool)],
    arch: Arch,
    method: &str,
    epochs: usize,
    fallback: impl Fn(&str) -> Option<PathBuf>,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for (name, files, problem, colors, published, extended) in instances {
        if *extended && !opts.extended {
            rows.push(skipped(name, method, Some(published.to_string()), "extended instance; pass --extended".into()));
            continue;
        }
        let (path, note) = match opts.find(files) {
            Some(p) => (p, String::new()),
            None => match fallback(name) {
                Some(p) => (p, "generated".to_string()),
                None => {
                    rows.push(skipped(name, method, Some(published.to_string()), format!("missing dataset ({})", files.join(" | "))));
                    continue;
                }
            },
        };
        let mut cfg = base(opts);
        cfg.graph = GraphSource::File {
            path,
            format: GraphFormat::Auto,
        };
        cfg.problem = *problem;
        cfg.colors = *colors;
        cfg.arch = arch;
        cfg.epochs = opts.epochs.unwrap_or(epochs);
        let note = if *problem == ProblemKind::Coloring {
            format!("{colors} colors {note}").trim().to_string()
        } else {
            note
        };
        rows.push(objective_row(name, method, &cfg, Some(published.to_string()), note)?);
    }
    Ok(rows)
}

fn gset(opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let table = [("G14", 3035, false), ("G15", 3003, false), ("G22", 13177, true), ("G49", 6000, true), ("G50", 5878, true)];
    let instances: Vec<_> = table
        .iter()
        .map(|&(name, published, ext)| {
            let files = vec![name.to_string(), format!("{name}.txt"), name.to_lowercase(), format!("{}.txt", name.to_lowercase())];
            (name, files, ProblemKind::MaxCut, 0, published, ext)
        })
        .collect();
    file_instances(opts, &instances, Arch::Gcn, "GCN+CGBP", 20_000, |_| None)
}

fn queen(opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let table = [
        (5, 5, 5, 0),
        (6, 6, 7, 0),
        (7, 7, 7, 0),
        (8, 8, 9, 0),
        (9, 9, 10, 0),
        (8, 12, 12, 0),
        (11, 11, 11, 13),
        (13, 13, 13, 15),
    ];
    let names: Vec<String> = table.iter().map(|(r, c, _, _)| format!("queen{r}-{c}")).collect();
    let instances: Vec<_> = table
        .iter()
        .zip(&names)
        .map(|(&(r, c, colors, published), name)| {
            (name.as_str(), vec![format!("queen{r}_{c}.col")], ProblemKind::Coloring, colors, published, false)
        })
        .collect();
    let scratch = opts.out.join("generated");
    let fallback = |name: &str| -> Option<PathBuf> {
        let (r, c) = name.strip_prefix("queen")?.split_once('-')?;
        let (r, c) = (r.parse().ok()?, c.parse().ok()?);
        fs::create_dir_all(&scratch).ok()?;
        let path = scratch.join(format!("queen{r}_{c}.col"));
        let file = fs::File::create(&path).ok()?;
        crate::graph::write_dimacs_col(&queen_graph(r, c), std::io::BufWriter::new(file)).ok()?;
        Some(path)
    };
    file_instances(opts, &instances, Arch::Sage, "SAGE+CGBP", 100_000, fallback)
}

fn citation(opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let table = [("Cora", 5, 0, false), ("Citeseer", 6, 0, false), ("Pubmed", 8, 2, true)];
    let instances: Vec<_> = table
        .iter()
        .map(|&(name, colors, published, ext)| {
            let lower = name.to_lowercase();
            (name, vec![format!("{lower}.col"), format!("{name}.col")], ProblemKind::Coloring, colors, published, ext)
        })
        .collect();
    file_instances(opts, &instances, Arch::Sage, "SAGE+CGBP", 100_000, |_| None)
}

fn toy(opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    let seed = opts.seeds.first().copied().unwrap_or(0);
    let cfg = ToyConfig::<f64>::standard(ToyMode::Fixed, 5000, seed);
    let t = Instant::now();
    let mut rows = Vec::new();
    let mut row = |metric: &str, value: f64, published: Option<&str>, note: &str| {
        rows.push(BenchRow {
            instance: "3-node".into(),
            method: "CGBP-1".into(),
            metric: metric.into(),
            value,
            published: published.map(str::to_string),
            config_hash: String::new(),
            seed: Some(seed),
            seconds: t.elapsed().as_secs_f64(),
            note: note.into(),
        });
    };
    for (z, published) in [(0.0, None), (10.0, Some("> 0")), (15.0, None)] {
        let l = lyapunov_max(&cfg, z, 1000, 4000)?;
        row("lyapunov", l, published, &format!("frozen z = {z}"));
    }
    for z in [10.0, 0.0] {
        let s = attractor_spread(&cfg, z, 1000, 200)?;
        row("spread_w", s, None, &format!("frozen z = {z}, last 200 of 1000"));
    }
    let losses = toy_train(&cfg)?.losses();
    let tail = &losses[losses.len().saturating_sub(100)..];
    let range = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max) - tail.iter().copied().fold(f64::INFINITY, f64::min);
    row("loss_range", range, Some("converged"), "annealed run, last 100 of 5000 epochs");
    Ok(rows)
}

/// Runs one suite and writes `<suite>_report.csv` into `opts.out`.
pub fn run_bench(suite: Suite, opts: &BenchOptions) -> Result<BenchReport> {
    if opts.seeds.is_empty() {
        return Err(Error::param("seed list is empty"));
    }
    let rows = match suite {
        Suite::RegularScaling => regular_scaling(opts)?,
        Suite::Gset => gset(opts)?,
        Suite::Queen => queen(opts)?,
        Suite::Citation => citation(opts)?,
        Suite::Toy => toy(opts)?,
    };
    let report = BenchReport { suite, rows };
    write_report(&opts.out, &report)?;
    Ok(report)
}

fn write_report(dir: &Path, report: &BenchReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{}_report.csv", report.suite));
    fs::write(&path, report.to_csv()).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_laws() {
        let xs = [1e2, 1e3, 1e4];
        let lin: Vec<f64> = xs.iter().map(|x| 3.0 * x).collect();
        assert!((loglog_slope(&xs, &lin) - 1.0).abs() < 1e-12);
        let quad: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((loglog_slope(&xs, &quad) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("tables".parse::<Suite>().is_err());
    }

    #[test]
    fn csv_quotes_fields_with_commas() {
        let report = BenchReport {
            suite: Suite::RegularScaling,
            rows: vec![BenchRow {
                instance: "(100,3)".into(),
                method: "BP".into(),
                metric: "ratio".into(),
                value: 0.9,
                published: Some("0.90-0.92".into()),
                config_hash: "abc".into(),
                seed: Some(1),
                seconds: 0.5,
                note: String::new(),
            }],
        };
        let csv = report.to_csv();
        assert!(csv.lines().nth(1).unwrap().starts_with("regular_scaling,\"(100,3)\",BP,ratio,0.9,"));
    }
}

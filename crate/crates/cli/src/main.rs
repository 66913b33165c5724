//! `cgbp` command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use cgbp::bench::{
    parse_regular_spec, parse_seeds, run_bench, run_solve, run_sweep, BenchOptions, GraphFormat,
    GraphSource, RunConfig, Suite, SweepSpec,
};
use cgbp::dynamics::{bifurcation_sweep, lyapunov_max, toy_train, write_bifurcation_csv, ToyConfig, ToyMode};
use cgbp::graph::{generate_regular, queen_graph, write_dimacs_col, write_gset};
use cgbp::trainer::NodeMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cgbp", version, about = "Combinatorial optimization with chaotically trained GNNs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on one graph for each seed and write solutions.
    Solve(RunArgs),
    /// Random hyperparameter search around a base configuration.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Number of candidates, the base configuration included.
        #[arg(long, default_value_t = 50)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        sweep_seed: u64,
        /// Multipliers for the chaotic strengths, e.g. `0.5,1,2`.
        #[arg(long)]
        z_scales: Option<String>,
        /// Annealing constants to choose from, e.g. `0.99,0.999`.
        #[arg(long)]
        betas: Option<String>,
    },
    /// Run a benchmark suite and print its report.
    Bench {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        /// Directory with Gset / citation / queen files.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long, default_value = "bench_out")]
        out: PathBuf,
        #[arg(long, default_value = "0,1,2")]
        seeds: String,
        /// Include the large instances.
        #[arg(long)]
        extended: bool,
        /// Override every instance's epoch budget.
        #[arg(long)]
        epochs: Option<usize>,
        /// Epochs per timing run above 1000 nodes.
        #[arg(long, default_value_t = 100)]
        timing_epochs: usize,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Three-point single-neuron dynamics.
    Toy {
        #[arg(long, value_enum, default_value = "cgbp1")]
        mode: ToyModeArg,
        #[arg(long)]
        z0: Option<f64>,
        #[arg(long, default_value_t = 0.999)]
        beta: f64,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        #[arg(long, default_value_t = 0.65)]
        i0: f64,
        #[arg(long, default_value_t = 5000)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trajectory CSV path.
        #[arg(long, default_value = "toy.csv")]
        out: PathBuf,
        /// Also print Lyapunov exponents at these frozen strengths.
        #[arg(long, value_delimiter = ',')]
        lyapunov: Vec<f64>,
        /// Write a frozen-z bifurcation diagram CSV to this path.
        #[arg(long)]
        bifurcation: Option<PathBuf>,
    },
    /// Write a generated graph to a file.
    Gen {
        /// `n,d,seed` random regular graph.
        #[arg(long, conflicts_with = "queen")]
        regular: Option<String>,
        /// `rows,cols` queen graph.
        #[arg(long)]
        queen: Option<String>,
        #[arg(long, value_enum, default_value = "gset")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    RegularScaling,
    Gset,
    Queen,
    Citation,
    Toy,
}

#[derive(Clone, Copy, ValueEnum)]
enum ToyModeArg {
    Bp,
    Cgbp1,
    Cgbpr,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Gset,
    Dimacs,
    Auto,
}

#[derive(Args)]
struct RunArgs {
    /// Key-value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "regular")]
    graph: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// `n,d,seed` random regular graph.
    #[arg(long)]
    regular: Option<String>,
    #[arg(long)]
    allow_weights: bool,
    /// `mis`, `mc` or `gc`.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    penalty: Option<f64>,
    #[arg(long)]
    colors: Option<usize>,
    /// `gcn` or `sage`.
    #[arg(long)]
    arch: Option<String>,
    /// `sgd`, `sgdm` or `adam`.
    #[arg(long)]
    opt: Option<String>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    /// Initial strengths `emb,layer1,layer2`, or one value for all three.
    #[arg(long)]
    z: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    i0: Option<f64>,
    /// `random` or a fixed node index.
    #[arg(long)]
    node: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Early-stopping window, or `none`.
    #[arg(long)]
    patience: Option<String>,
    #[arg(long)]
    eval_every: Option<usize>,
    /// `0,1,2` or `0..10`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    repair: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn graph_format(f: FormatArg) -> GraphFormat {
    match f {
        FormatArg::Gset => GraphFormat::Gset,
        FormatArg::Dimacs => GraphFormat::Dimacs,
        FormatArg::Auto => GraphFormat::Auto,
    }
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number `{t}`")))
        .collect()
}

impl RunArgs {
    fn to_config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.graph {
            c.graph = GraphSource::File {
                path: p.clone(),
                format: self.format.map_or(GraphFormat::Auto, graph_format),
            };
        }
        if let Some(r) = &self.regular {
            c.graph = parse_regular_spec(r)?;
        }
        c.allow_weights |= self.allow_weights;
        if let Some(p) = &self.problem {
            c.problem = p.parse()?;
        }
        if let Some(v) = self.penalty {
            c.penalty = v;
        }
        if let Some(v) = self.colors {
            c.colors = v;
        }
        if let Some(a) = &self.arch {
            c.arch = a.parse()?;
        }
        if let Some(o) = &self.opt {
            c.optimizer = o.parse()?;
        }
        if let Some(v) = self.lr {
            c.lr = v;
        }
        if let Some(v) = self.dropout {
            c.dropout = v;
        }
        if let Some(z) = &self.z {
            c.z = match parse_floats(z)?.as_slice() {
                [v] => [*v; 3],
                [a, b, d] => [*a, *b, *d],
                _ => bail!("--z takes one value or three (`emb,layer1,layer2`)"),
            };
        }
        if let Some(v) = self.beta {
            c.beta = v;
        }
        if let Some(v) = self.i0 {
            c.i0 = v;
        }
        if let Some(n) = &self.node {
            c.node_mode = match n.as_str() {
                "random" => NodeMode::RandomPerEpoch,
                k => NodeMode::Fixed(k.parse().with_context(|| format!("bad node `{k}`"))?),
            };
        }
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(p) = &self.patience {
            c.patience = match p.as_str() {
                "none" => None,
                k => Some(k.parse().with_context(|| format!("bad patience `{k}`"))?),
            };
        }
        if let Some(v) = self.eval_every {
            c.eval_every = v;
        }
        if let Some(s) = &self.seeds {
            c.seeds = parse_seeds(s)?;
        }
        c.repair |= self.repair;
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        if let Some(w) = self.workers {
            c.workers = w;
        }
        Ok(c)
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Solve(args) => {
            let cfg = args.to_config()?;
            let summary = run_solve(&cfg)?;
            print!("{}", summary.render());
            println!("artifacts in {}", cfg.out.display());
        }
        Command::Sweep {
            run,
            budget,
            sweep_seed,
            z_scales,
            betas,
        } => {
            let base = run.to_config()?;
            let spec = SweepSpec {
                budget,
                seed: sweep_seed,
                z_scales: z_scales.as_deref().map(parse_floats).transpose()?,
                betas: betas.as_deref().map(parse_floats).transpose()?,
                ..SweepSpec::default()
            };
            let result = run_sweep(&spec, &base)?;
            let w = result.winner();
            println!(
                "winner candidate {} objective {} lr {:e} dropout {:.3} hash {}",
                w.candidate,
                w.objective.map_or("none".into(), |o| o.to_string()),
                w.config.lr,
                w.config.dropout,
                w.config.hash()
            );
            println!("leaderboard in {}", base.out.join("leaderboard.csv").display());
        }
        Command::Bench {
            suite,
            data_dir,
            out,
            seeds,
            extended,
            epochs,
            timing_epochs,
            workers,
        } => {
            let suite = match suite {
                SuiteArg::RegularScaling => Suite::RegularScaling,
                SuiteArg::Gset => Suite::Gset,
                SuiteArg::Queen => Suite::Queen,
                SuiteArg::Citation => Suite::Citation,
                SuiteArg::Toy => Suite::Toy,
            };
            let opts = BenchOptions {
                data_dir,
                out,
                seeds: parse_seeds(&seeds)?,
                extended,
                epochs,
                timing_epochs,
                workers,
            };
            let report = run_bench(suite, &opts)?;
            print!("{}", report.render());
        }
        Command::Toy {
            mode,
            z0,
            beta,
            eta,
            i0,
            epochs,
            seed,
            out,
            lyapunov,
            bifurcation,
        } => {
            let mode = match mode {
                ToyModeArg::Bp => ToyMode::Bp,
                ToyModeArg::Cgbp1 => ToyMode::Fixed,
                ToyModeArg::Cgbpr => ToyMode::Random,
            };
            let mut cfg = ToyConfig::<f64>::standard(mode, epochs, seed);
            if let Some(z) = z0 {
                cfg.z0 = z;
            }
            cfg.beta = beta;
            cfg.eta = eta;
            cfg.i0 = i0;
            let tr = toy_train(&cfg)?;
            let file = File::create(&out).with_context(|| format!("cannot create {}", out.display()))?;
            let mut w = BufWriter::new(file);
            tr.write_csv(&mut w)?;
            w.flush()?;
            if let Some(e) = tr.failed_at {
                eprintln!("numeric failure at epoch {e}");
            }
            let last = tr.records.last().expect("initial state is always recorded");
            println!("final w {:.6} b {:.6} loss {:.6e}; trajectory in {}", last.w, last.b, last.loss, out.display());
            for z in lyapunov {
                println!("lyapunov z={z} {:.6e}", lyapunov_max(&cfg, z, 1000, 4000)?);
            }
            if let Some(path) = bifurcation {
                let sweep = bifurcation_sweep(&cfg, cfg.z0.max(1.0), 100, 1000, 200)?;
                let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
                let mut w = BufWriter::new(file);
                write_bifurcation_csv(&mut w, &sweep)?;
                w.flush()?;
                println!("bifurcation diagram in {}", path.display());
            }
        }
        Command::Gen {
            regular,
            queen,
            format,
            out,
        } => {
            let g = match (regular, queen) {
                (Some(r), None) => match parse_regular_spec(&r)? {
                    GraphSource::Regular { n, d, seed } => generate_regular(n, d, seed)?,
                    GraphSource::File { .. } => unreachable!(),
                },
                (None, Some(q)) => {
                    let (r, c) = q.split_once(',').context("--queen takes `rows,cols`")?;
                    queen_graph(r.trim().parse()?, c.trim().parse()?)
                }
                _ => bail!("pass exactly one of --regular or --queen"),
            };
            let file = File::create(&out).with_context(|| format!("cannot create {}", out.display()))?;
            let mut w = BufWriter::new(file);
            match format {
                FormatArg::Dimacs => write_dimacs_col(&g, &mut w)?,
                FormatArg::Gset | FormatArg::Auto => write_gset(&g, &mut w)?,
            }
            w.flush()?;
            println!("wrote {} nodes, {} edges to {}", g.n_nodes(), g.n_edges(), out.display());
        }
    }
    Ok(())
}

//! Hard decisions from soft outputs, benchmark metrics, and solution files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::hamiltonian::{discrete_objective, ObjectiveReport, ProblemEncoding};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// A discrete solution, the epoch that produced it, and its score.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub values: Vec<usize>,
    pub epoch: usize,
    pub report: ObjectiveReport,
}

impl Assignment {
    pub fn evaluate<T: Scalar>(
        enc: &ProblemEncoding<T>,
        values: Vec<usize>,
        epoch: usize,
        g: &Graph,
    ) -> Result<Self> {
        let report = discrete_objective(enc, &values, g)?;
        Ok(Assignment {
            values,
            epoch,
            report,
        })
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// `x_i = 1` iff `p_i > threshold`; ties round down.
pub fn project_binary<T: Scalar>(p: &Matrix<T>, threshold: T) -> Vec<usize> {
    (0..p.rows()).map(|i| usize::from(p[(i, 0)] > threshold)).collect()
}

/// Row-wise argmax with ties going to the lowest index.
pub fn project_argmax<T: Scalar>(p: &Matrix<T>) -> Vec<usize> {
    (0..p.rows())
        .map(|i| {
            let row = p.row(i);
            let mut best = 0;
            for (c, &x) in row.iter().enumerate().skip(1) {
                if x > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Threshold at 0.5 for binary encodings, argmax for coloring.
pub fn project<T: Scalar>(enc: &ProblemEncoding<T>, p: &Matrix<T>) -> Vec<usize> {
    match enc {
        ProblemEncoding::Coloring { .. } => project_argmax(p),
        _ => project_binary(p, T::lit(DEFAULT_THRESHOLD)),
    }
}

/// Asymptotic max-cut constant for random regular graphs.
pub const CUT_UB_P_STAR: f64 = 0.7632;

/// `(d/4 + P*·√(d/4))·n`, the approximate max-cut upper bound of a random
/// d-regular graph.
pub fn cut_upper_bound(d: usize, n: usize) -> f64 {
    let q = d as f64 / 4.0;
    (q + CUT_UB_P_STAR * q.sqrt()) * n as f64
}

pub fn approximation_ratio(cut: u64, d: usize, n: usize) -> f64 {
    cut as f64 / cut_upper_bound(d, n)
}

/// Removes one endpoint of every edge inside the set, visiting edges in
/// canonical order. The endpoint with larger degree goes (ties: larger
/// index). Deselecting never creates a new violation, so one pass is enough.
pub fn greedy_repair_mis(values: &[usize], g: &Graph) -> Vec<usize> {
    let mut out = values.to_vec();
    for &(u, v) in g.edges() {
        if out[u] == 1 && out[v] == 1 {
            let drop = if g.degree(u) > g.degree(v) { u } else { v };
            out[drop] = 0;
        }
    }
    out
}

/// One `node value` line per node, then `#`-prefixed summary lines.
pub fn write_solution<W: Write>(mut out: W, a: &Assignment, ratio: Option<f64>) -> std::io::Result<()> {
    for (i, v) in a.values.iter().enumerate() {
        writeln!(out, "{i} {v}")?;
    }
    writeln!(out, "# problem {}", a.report.kind)?;
    writeln!(out, "# epoch {}", a.epoch)?;
    writeln!(out, "# objective {}", a.report.objective)?;
    writeln!(out, "# violations {}", a.report.violations)?;
    writeln!(out, "# hamiltonian {}", a.report.hamiltonian)?;
    if let Some(r) = ratio {
        writeln!(out, "# ratio {r:.6}")?;
    }
    Ok(())
}

pub fn save_solution(path: impl AsRef<Path>, a: &Assignment, ratio: Option<f64>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_solution(&mut w, a, ratio)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Reads the value column of a solution file, ignoring the footer.
pub fn read_solution_values<R: BufRead>(input: R, source: &str) -> Result<Vec<usize>> {
    let mut values = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            path: source.to_string(),
            line: k + 1,
            msg: msg.to_string(),
        };
        let mut toks = line.split_whitespace();
        let id: usize = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| err("bad node id"))?;
        let v: usize = toks.next().and_then(|t| t.parse().ok()).ok_or_else(|| err("bad value"))?;
        if id != values.len() {
            return Err(err("node ids must be consecutive from 0"));
        }
        values.push(v);
    }
    Ok(values)
}

pub fn load_solution_values(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_solution_values(BufReader::new(file), &path.display().to_string())
}

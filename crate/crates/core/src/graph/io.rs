//! Gset edge lists (`n m` header, then `u v w`, 1-based) and DIMACS `.col`
//! files (`p edge n m`, `e u v`, `c` comments).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::warn;

use super::Graph;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default)]
pub struct GsetOptions {
    /// Map every edge weight to 1 instead of rejecting weighted files.
    pub allow_weights: bool,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn load_gset(path: impl AsRef<Path>, opts: GsetOptions) -> Result<Graph> {
    let path = path.as_ref();
    parse_gset(open(path)?, &path.display().to_string(), opts)
}

pub fn load_dimacs_col(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    parse_dimacs_col(open(path)?, &path.display().to_string())
}

struct LineErr<'a> {
    source: &'a str,
}

impl LineErr<'_> {
    fn at(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.source.to_string(),
            line,
            msg: msg.into(),
        }
    }
}

fn parse_index(tok: Option<&str>, n: usize, line: usize, err: &LineErr) -> Result<usize> {
    let tok = tok.ok_or_else(|| err.at(line, "missing node index"))?;
    let idx: usize = tok
        .parse()
        .map_err(|_| err.at(line, format!("bad node index `{tok}`")))?;
    if idx == 0 || idx > n {
        return Err(err.at(line, format!("node index {idx} outside 1..={n}")));
    }
    Ok(idx - 1)
}

/// `source` is used only to label error messages.
pub fn parse_gset<R: BufRead>(reader: R, source: &str, opts: GsetOptions) -> Result<Graph> {
    let err = LineErr { source };
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut reweighted = 0usize;

    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let mut toks = line.split_whitespace();
        let Some(first) = toks.next() else { continue };
        let Some((n, m)) = header else {
            let n = first
                .parse()
                .map_err(|_| err.at(lineno, "header must be `n m`"))?;
            let m = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err.at(lineno, "header must be `n m`"))?;
            header = Some((n, m));
            continue;
        };
        if edges.len() == m {
            return Err(err.at(lineno, format!("more than the declared {m} edges")));
        }
        let u = parse_index(Some(first), n, lineno, &err)?;
        let v = parse_index(toks.next(), n, lineno, &err)?;
        let w: f64 = match toks.next() {
            Some(t) => t
                .parse()
                .map_err(|_| err.at(lineno, format!("bad weight `{t}`")))?,
            None => 1.0,
        };
        if w != 1.0 {
            if !opts.allow_weights {
                return Err(err.at(
                    lineno,
                    format!("edge weight {w} unsupported (only unweighted instances)"),
                ));
            }
            reweighted += 1;
        }
        if u == v {
            return Err(err.at(lineno, format!("self-loop on node {}", u + 1)));
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            return Err(err.at(lineno, format!("duplicate edge {} {}", u + 1, v + 1)));
        }
        edges.push(key);
    }

    let (n, m) = header.ok_or_else(|| err.at(0, "empty file"))?;
    if edges.len() != m {
        return Err(err.at(0, format!("declared {m} edges, found {}", edges.len())));
    }
    if reweighted > 0 {
        warn!("{source}: {reweighted} edge weights mapped to 1");
    }
    Graph::from_edges(n, edges)
}

pub fn parse_dimacs_col<R: BufRead>(reader: R, source: &str) -> Result<Graph> {
    let err = LineErr { source };
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    let mut raw_edges = 0usize;
    let mut duplicates = 0usize;

    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            None | Some("c") => {}
            Some("p") => {
                if header.is_some() {
                    return Err(err.at(lineno, "second `p` line"));
                }
                let _format = toks.next();
                let n = toks.next().and_then(|t| t.parse().ok());
                let m = toks.next().and_then(|t| t.parse().ok());
                match (n, m) {
                    (Some(n), Some(m)) => header = Some((n, m)),
                    _ => return Err(err.at(lineno, "`p` line must be `p edge n m`")),
                }
            }
            Some("e") => {
                let (n, _) = header.ok_or_else(|| err.at(lineno, "`e` line before `p` line"))?;
                let u = parse_index(toks.next(), n, lineno, &err)?;
                let v = parse_index(toks.next(), n, lineno, &err)?;
                if u == v {
                    return Err(err.at(lineno, format!("self-loop on node {}", u + 1)));
                }
                raw_edges += 1;
                let key = (u.min(v), u.max(v));
                if seen.insert(key) {
                    edges.push(key);
                } else {
                    duplicates += 1;
                }
            }
            // Node weights and similar annotations carry nothing we use.
            Some("n") | Some("x") => {}
            Some(other) => {
                return Err(err.at(lineno, format!("unknown line type `{other}`")));
            }
        }
    }

    let (n, m) = header.ok_or_else(|| err.at(0, "missing `p` line"))?;
    if duplicates > 0 {
        warn!("{source}: dropped {duplicates} duplicate edge lines");
    }
    if raw_edges != m {
        warn!("{source}: header declares {m} edges, file lists {raw_edges}");
    }
    Graph::from_edges(n, edges)
}

pub fn write_gset<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", g.n_nodes(), g.n_edges())?;
    for &(u, v) in g.edges() {
        writeln!(out, "{} {} 1", u + 1, v + 1)?;
    }
    Ok(())
}

pub fn write_dimacs_col<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "p edge {} {}", g.n_nodes(), g.n_edges())?;
    for &(u, v) in g.edges() {
        writeln!(out, "e {} {}", u + 1, v + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gset(s: &str) -> Result<Graph> {
        parse_gset(s.as_bytes(), "mem", GsetOptions::default())
    }

    fn line_of(e: Error) -> usize {
        match e {
            Error::Parse { line, .. } => line,
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn minimal_gset_is_a_path() {
        let g = gset("3 2\n1 2 1\n2 3 1").unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn gset_errors_carry_line_numbers() {
        assert_eq!(line_of(gset("x y\n").unwrap_err()), 1);
        assert_eq!(line_of(gset("3 2\n1 2 1\n2 4 1\n").unwrap_err()), 3);
        assert_eq!(line_of(gset("3 2\n1 2 1\n2 1 1\n").unwrap_err()), 3);
        assert_eq!(line_of(gset("3 1\n1 2 1\n2 3 1\n").unwrap_err()), 3);
        assert_eq!(line_of(gset("3 2\n1 2 -1\n2 3 1\n").unwrap_err()), 2);
        assert!(gset("3 3\n1 2 1\n").is_err());
    }

    #[test]
    fn gset_weights_can_be_flattened() {
        let opts = GsetOptions { allow_weights: true };
        let g = parse_gset("3 2\n1 2 -1\n2 3 1\n".as_bytes(), "mem", opts).unwrap();
        assert_eq!(g.n_edges(), 2);
    }

    #[test]
    fn minimal_dimacs() {
        let g = parse_dimacs_col("p edge 2 1\ne 1 2".as_bytes(), "mem").unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn dimacs_dedups_mirrored_lines() {
        let s = "c queen-style file\np edge 3 4\ne 1 2\ne 2 1\ne 2 3\ne 3 2\n";
        let g = parse_dimacs_col(s.as_bytes(), "mem").unwrap();
        assert_eq!(g.n_edges(), 2);
    }

    #[test]
    fn dimacs_errors() {
        let e = parse_dimacs_col("c hi\ne 1 2\n".as_bytes(), "mem").unwrap_err();
        assert_eq!(line_of(e), 2);
        let e = parse_dimacs_col("p edge 2 1\ne 1 3\n".as_bytes(), "mem").unwrap_err();
        assert_eq!(line_of(e), 2);
        assert!(parse_dimacs_col("c nothing\n".as_bytes(), "mem").is_err());
    }

    #[test]
    fn missing_file_names_path() {
        let e = load_gset("/no/such/G14", GsetOptions::default()).unwrap_err();
        assert!(e.to_string().contains("/no/such/G14"));
    }
}

//! Plain-text model checkpoints.
//!
//! Layout (version 1), one item per line:
//!
//! ```text
//! cgbp-model 1
//! arch gcn|sage
//! dims <n_nodes> <d0> <d1> <d2>
//! dropout <p>
//! tensor <name> <rows> <cols>
//! <cols whitespace-separated values>      (repeated <rows> times)
//! ...
//! ```
//!
//! Tensors appear in the order `embedding w1 b1 gamma1 beta1 w2 b2 gamma2
//! beta2 running_mean1 running_var1 running_mean2 running_var2`. Values are
//! written as shortest round-trip 64-bit decimals.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Arch, BnAffine, Dense, Dims, Model, Params, RunningStats};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

const MAGIC: &str = "cgbp-model";
const VERSION: u32 = 1;

fn write_tensor<T: Scalar, W: Write>(
    out: &mut W,
    name: &str,
    rows: usize,
    cols: usize,
    data: &[T],
) -> std::io::Result<()> {
    writeln!(out, "tensor {name} {rows} {cols}")?;
    for r in 0..rows {
        let line: Vec<String> = data[r * cols..(r + 1) * cols]
            .iter()
            .map(|x| format!("{:?}", x.as_f64()))
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_checkpoint<T: Scalar, W: Write>(m: &Model<T>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "arch {}", m.arch)?;
    let Dims { d0, d1, d2 } = m.dims;
    writeln!(out, "dims {} {d0} {d1} {d2}", m.n_nodes())?;
    writeln!(out, "dropout {:?}", m.dropout.as_f64())?;
    let p = &m.params;
    let row = |v: &[T]| (1, v.len());
    let tensors: [(&str, (usize, usize), &[T]); 13] = [
        ("embedding", p.embedding.shape(), p.embedding.as_slice()),
        ("w1", p.layer1.w.shape(), p.layer1.w.as_slice()),
        ("b1", row(&p.layer1.b), &p.layer1.b),
        ("gamma1", row(&p.norm1.gamma), &p.norm1.gamma),
        ("beta1", row(&p.norm1.beta), &p.norm1.beta),
        ("w2", p.layer2.w.shape(), p.layer2.w.as_slice()),
        ("b2", row(&p.layer2.b), &p.layer2.b),
        ("gamma2", row(&p.norm2.gamma), &p.norm2.gamma),
        ("beta2", row(&p.norm2.beta), &p.norm2.beta),
        ("running_mean1", row(&m.stats1.mean), &m.stats1.mean),
        ("running_var1", row(&m.stats1.var), &m.stats1.var),
        ("running_mean2", row(&m.stats2.mean), &m.stats2.mean),
        ("running_var2", row(&m.stats2.var), &m.stats2.var),
    ];
    for (name, (rows, cols), data) in tensors {
        write_tensor(&mut out, name, rows, cols, data)?;
    }
    Ok(())
}

pub fn save_checkpoint<T: Scalar>(m: &Model<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_checkpoint(m, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

struct Reader<'a, R> {
    lines: std::iter::Enumerate<std::io::Lines<R>>,
    source: &'a str,
    line: usize,
}

impl<R: BufRead> Reader<'_, R> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.source.to_string(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<String> {
        match self.lines.next() {
            Some((k, Ok(l))) => {
                self.line = k + 1;
                Ok(l)
            }
            Some((_, Err(e))) => Err(Error::io(self.source, e)),
            None => Err(self.err("unexpected end of checkpoint")),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let l = self.next_line()?;
        let mut toks = l.split_whitespace().map(str::to_string);
        if toks.next().as_deref() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(toks.collect())
    }

    fn num<V: std::str::FromStr>(&self, tok: &str) -> Result<V> {
        tok.parse().map_err(|_| self.err(format!("bad number `{tok}`")))
    }

    fn tensor<T: Scalar>(&mut self, name: &str, rows: usize, cols: usize) -> Result<Vec<T>> {
        let head = self.keyed("tensor")?;
        let shape_ok = head.len() == 3
            && head[0] == name
            && self.num::<usize>(&head[1])? == rows
            && self.num::<usize>(&head[2])? == cols;
        if !shape_ok {
            return Err(self.err(format!("expected tensor {name} {rows} {cols}")));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let l = self.next_line()?;
            let before = data.len();
            for tok in l.split_whitespace() {
                data.push(T::lit(self.num::<f64>(tok)?));
            }
            if data.len() - before != cols {
                return Err(self.err(format!("tensor {name}: expected {cols} values")));
            }
        }
        Ok(data)
    }
}

pub fn read_checkpoint<T: Scalar, R: BufRead>(input: R, source: &str) -> Result<Model<T>> {
    let mut r = Reader {
        lines: input.lines().enumerate(),
        source,
        line: 0,
    };
    let v = r.keyed(MAGIC)?;
    if v.first().map(|s| s.as_str()) != Some("1") {
        return Err(r.err("unsupported checkpoint version"));
    }
    let arch: Arch = r
        .keyed("arch")?
        .first()
        .ok_or_else(|| r.err("missing arch"))?
        .parse()?;
    let d = r.keyed("dims")?;
    if d.len() != 4 {
        return Err(r.err("dims needs 4 values"));
    }
    let n: usize = r.num(&d[0])?;
    let dims = Dims {
        d0: r.num(&d[1])?,
        d1: r.num(&d[2])?,
        d2: r.num(&d[3])?,
    };
    let dv = r.keyed("dropout")?;
    let dropout = T::lit(r.num(dv.first().ok_or_else(|| r.err("missing dropout"))?)?);
    let f1 = arch.fan_in(dims.d0);
    let f2 = arch.fan_in(dims.d1);

    let embedding = Matrix::from_vec(n, dims.d0, r.tensor("embedding", n, dims.d0)?)?;
    let w1 = Matrix::from_vec(f1, dims.d1, r.tensor("w1", f1, dims.d1)?)?;
    let b1 = r.tensor("b1", 1, dims.d1)?;
    let gamma1 = r.tensor("gamma1", 1, dims.d1)?;
    let beta1 = r.tensor("beta1", 1, dims.d1)?;
    let w2 = Matrix::from_vec(f2, dims.d2, r.tensor("w2", f2, dims.d2)?)?;
    let b2 = r.tensor("b2", 1, dims.d2)?;
    let gamma2 = r.tensor("gamma2", 1, dims.d2)?;
    let beta2 = r.tensor("beta2", 1, dims.d2)?;
    let stats1 = RunningStats {
        mean: r.tensor("running_mean1", 1, dims.d1)?,
        var: r.tensor("running_var1", 1, dims.d1)?,
    };
    let stats2 = RunningStats {
        mean: r.tensor("running_mean2", 1, dims.d2)?,
        var: r.tensor("running_var2", 1, dims.d2)?,
    };
    Ok(Model {
        arch,
        dims,
        params: Params {
            embedding,
            layer1: Dense { w: w1, b: b1 },
            norm1: BnAffine {
                gamma: gamma1,
                beta: beta1,
            },
            layer2: Dense { w: w2, b: b2 },
            norm2: BnAffine {
                gamma: gamma2,
                beta: beta2,
            },
        },
        stats1,
        stats2,
        dropout,
    })
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<Model<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(BufReader::new(file), &path.display().to_string())
}

//! Single-neuron toy model trained on three points, used to study the
//! chaotic update as a discrete dynamical system in `(w, b)`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const TOY_INPUTS: [f64; 3] = [0.1, 0.9, 0.7];
pub const TOY_TARGETS: [f64; 3] = [0.0, 1.0, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ToyMode {
    /// Plain gradient descent.
    Bp,
    /// Chaotic feedback always from sample 0.
    Fixed,
    /// Chaotic feedback from a sample drawn uniformly every epoch.
    Random,
}

impl fmt::Display for ToyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ToyMode::Bp => "bp",
            ToyMode::Fixed => "cgbp1",
            ToyMode::Random => "cgbpr",
        })
    }
}

impl FromStr for ToyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bp" => Ok(ToyMode::Bp),
            "cgbp1" | "cgbp-1" | "fixed" => Ok(ToyMode::Fixed),
            "cgbpr" | "cgbp-r" | "random" => Ok(ToyMode::Random),
            _ => Err(Error::param(format!("unknown toy mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyConfig<T> {
    pub x: Vec<T>,
    pub t: Vec<T>,
    pub eta: T,
    pub z0: T,
    pub beta: T,
    pub i0: T,
    pub mode: ToyMode,
    pub epochs: usize,
    pub seed: u64,
}

impl<T: Scalar> ToyConfig<T> {
    /// The three-point problem with `η = 0.1`, `z0 = 10`, `β = 0.999`,
    /// `I0 = 0.65`.
    pub fn standard(mode: ToyMode, epochs: usize, seed: u64) -> Self {
        ToyConfig {
            x: TOY_INPUTS.iter().map(|&v| T::lit(v)).collect(),
            t: TOY_TARGETS.iter().map(|&v| T::lit(v)).collect(),
            eta: T::lit(0.1),
            z0: if mode == ToyMode::Bp { T::zero() } else { T::lit(10.0) },
            beta: T::lit(0.999),
            i0: T::lit(0.65),
            mode,
            epochs,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() || self.x.len() != self.t.len() {
            return Err(Error::param("inputs and targets must have equal, non-zero length"));
        }
        if (self.mode == ToyMode::Bp) != (self.z0 == T::zero()) {
            return Err(Error::param("BP mode requires z0 = 0 and chaotic modes z0 > 0"));
        }
        if !(self.z0 >= T::zero() && self.eta > T::zero()) {
            return Err(Error::param("need z0 >= 0 and eta > 0"));
        }
        if !(self.beta > T::zero() && self.beta <= T::one()) {
            return Err(Error::param("beta outside (0, 1]"));
        }
        if !(self.i0 > T::zero() && self.i0 < T::one()) {
            return Err(Error::param("I0 outside (0, 1)"));
        }
        Ok(())
    }

    fn outputs(&self, w: T, b: T) -> Vec<T> {
        self.x.iter().map(|&x| (w * x + b).sigmoid()).collect()
    }

    /// Mean squared error over all samples.
    pub fn loss(&self, w: T, b: T) -> T {
        let n = T::from_usize_lossy(self.x.len());
        self.outputs(w, b)
            .iter()
            .zip(&self.t)
            .map(|(&o, &t)| (o - t) * (o - t))
            .sum::<T>()
            / n
    }

    /// `(∂MSE/∂w, ∂MSE/∂b)`.
    pub fn gradient(&self, w: T, b: T) -> (T, T) {
        let scale = T::lit(2.0) / T::from_usize_lossy(self.x.len());
        let mut gw = T::zero();
        let mut gb = T::zero();
        for ((&x, &t), o) in self.x.iter().zip(&self.t).zip(self.outputs(w, b)) {
            let d = scale * (o - t) * o * (T::one() - o);
            gw += d * x;
            gb += d;
        }
        (gw, gb)
    }

    /// The map `(w, b) ↦ (w', b')` for strength `z` and feedback sample `i`.
    pub fn map(&self, w: T, b: T, z: T, i: usize) -> (T, T) {
        let (gw, gb) = self.gradient(w, b);
        let mut w2 = w - self.eta * gw;
        let mut b2 = b - self.eta * gb;
        if z != T::zero() {
            let kick = z * (self.i0 - (w * self.x[i] + b).sigmoid());
            w2 += kick;
            b2 += kick;
        }
        (w2, b2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToyState<T> {
    pub w: T,
    pub b: T,
    pub z: T,
    pub epoch: usize,
}

impl<T: Scalar> ToyState<T> {
    /// `(w, b)` uniform in `[-1, 1]` from the config seed, `z = z0`.
    pub fn initial(cfg: &ToyConfig<T>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        ToyState {
            w: T::lit(rng.gen_range(-1.0..=1.0)),
            b: T::lit(rng.gen_range(-1.0..=1.0)),
            z: cfg.z0,
            epoch: 0,
        }
    }
}

fn toy_numeric(epoch: usize) -> Error {
    Error::Numeric {
        epoch,
        stage: "toy map".into(),
    }
}

pub fn toy_step<T: Scalar, R: Rng + ?Sized>(s: ToyState<T>, cfg: &ToyConfig<T>, rng: &mut R) -> Result<ToyState<T>> {
    let i = match cfg.mode {
        ToyMode::Bp | ToyMode::Fixed => 0,
        ToyMode::Random => rng.gen_range(0..cfg.x.len()),
    };
    let (w, b) = cfg.map(s.w, s.b, s.z, i);
    if !(w.is_finite() && b.is_finite()) {
        return Err(toy_numeric(s.epoch + 1));
    }
    Ok(ToyState {
        w,
        b,
        z: s.z * cfg.beta,
        epoch: s.epoch + 1,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyRecord<T> {
    pub epoch: usize,
    pub w: T,
    pub b: T,
    pub outputs: Vec<T>,
    pub loss: T,
    pub z: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyTrajectory<T> {
    /// Entry 0 is the initial state; entry k follows k updates.
    pub records: Vec<ToyRecord<T>>,
    pub failed_at: Option<usize>,
}

impl<T: Scalar> ToyTrajectory<T> {
    pub fn losses(&self) -> Vec<T> {
        self.records.iter().map(|r| r.loss).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let k = self.records.first().map_or(0, |r| r.outputs.len());
        let o_cols: String = (1..=k).map(|i| format!(",o{i}")).collect();
        writeln!(out, "epoch,w,b{o_cols},loss,z")?;
        for r in &self.records {
            write!(out, "{},{:e},{:e}", r.epoch, r.w.as_f64(), r.b.as_f64())?;
            for o in &r.outputs {
                write!(out, ",{:e}", o.as_f64())?;
            }
            writeln!(out, ",{:e},{:e}", r.loss.as_f64(), r.z.as_f64())?;
        }
        Ok(())
    }
}

/// Runs `cfg.epochs` steps from the seeded initial state. A numeric failure
/// ends the trajectory early and is reported in `failed_at`.
pub fn toy_train<T: Scalar>(cfg: &ToyConfig<T>) -> Result<ToyTrajectory<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut s = ToyState::initial(cfg);
    let record = |s: &ToyState<T>| ToyRecord {
        epoch: s.epoch,
        w: s.w,
        b: s.b,
        outputs: cfg.outputs(s.w, s.b),
        loss: cfg.loss(s.w, s.b),
        z: s.z,
    };
    let mut records = vec![record(&s)];
    let mut failed_at = None;
    for _ in 0..cfg.epochs {
        match toy_step(s, cfg, &mut rng) {
            Ok(next) => {
                s = next;
                records.push(record(&s));
            }
            Err(Error::Numeric { epoch, .. }) => {
                failed_at = Some(epoch);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ToyTrajectory { records, failed_at })
}

pub const FD_STEP: f64 = 1e-7;

/// Largest Lyapunov exponent of the frozen-`z` map with feedback from
/// sample 0, by tangent-vector propagation with finite-difference
/// Jacobian-vector products, renormalised every step. The first
/// `transient` iterates are discarded.
pub fn lyapunov_max<T: Scalar>(cfg: &ToyConfig<T>, z_frozen: T, transient: usize, steps: usize) -> Result<f64> {
    if steps < 100 {
        return Err(Error::param("need at least 100 steps"));
    }
    if !(z_frozen >= T::zero()) {
        return Err(Error::param("frozen z must be non-negative"));
    }
    let s0 = ToyState::initial(cfg);
    let (mut w, mut b) = (s0.w, s0.b);
    for k in 0..transient {
        (w, b) = cfg.map(w, b, z_frozen, 0);
        if !(w.is_finite() && b.is_finite()) {
            return Err(toy_numeric(k + 1));
        }
    }
    let h = T::lit(FD_STEP);
    let inv_sqrt2 = T::FRAC_1_SQRT_2();
    let (mut vw, mut vb) = (inv_sqrt2, inv_sqrt2);
    let mut sum = 0.0;
    for k in 0..steps {
        let (w2, b2) = cfg.map(w, b, z_frozen, 0);
        let (wp, bp) = cfg.map(w + h * vw, b + h * vb, z_frozen, 0);
        let (tw, tb) = ((wp - w2) / h, (bp - b2) / h);
        let norm = (tw * tw + tb * tb).sqrt();
        if !(w2.is_finite() && b2.is_finite() && norm.is_finite() && norm > T::zero()) {
            return Err(toy_numeric(transient + k + 1));
        }
        sum += norm.as_f64().ln();
        vw = tw / norm;
        vb = tb / norm;
        w = w2;
        b = b2;
    }
    Ok(sum / steps as f64)
}

/// The last `tail` of `iters` iterates of `w` under the frozen-`z` map.
pub fn attractor<T: Scalar>(cfg: &ToyConfig<T>, z_frozen: T, iters: usize, tail: usize) -> Result<Vec<T>> {
    let s0 = ToyState::initial(cfg);
    let (mut w, mut b) = (s0.w, s0.b);
    let mut out = Vec::with_capacity(tail);
    for k in 0..iters {
        (w, b) = cfg.map(w, b, z_frozen, 0);
        if !(w.is_finite() && b.is_finite()) {
            return Err(toy_numeric(k + 1));
        }
        if k + tail >= iters {
            out.push(w);
        }
    }
    Ok(out)
}

/// `max − min` of the attractor of `w`.
pub fn attractor_spread<T: Scalar>(cfg: &ToyConfig<T>, z_frozen: T, iters: usize, tail: usize) -> Result<f64> {
    let pts = attractor(cfg, z_frozen, iters, tail)?;
    let lo = pts.iter().fold(f64::INFINITY, |m, x| m.min(x.as_f64()));
    let hi = pts.iter().fold(f64::NEG_INFINITY, |m, x| m.max(x.as_f64()));
    Ok(if pts.is_empty() { 0.0 } else { hi - lo })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BifurcationPoint {
    pub z: f64,
    pub spread: f64,
    pub tail: Vec<f64>,
}

/// Frozen-`z` attractors for `z = z_max·(1 − k/steps)`, `k = 0..=steps`,
/// each started from the seeded initial state.
pub fn bifurcation_sweep<T: Scalar>(
    cfg: &ToyConfig<T>,
    z_max: f64,
    steps: usize,
    iters: usize,
    tail: usize,
) -> Result<Vec<BifurcationPoint>> {
    if steps == 0 {
        return Err(Error::param("sweep needs at least one step"));
    }
    (0..=steps)
        .map(|k| {
            let z = z_max * (1.0 - k as f64 / steps as f64);
            let pts: Vec<f64> = attractor(cfg, T::lit(z), iters, tail)?.iter().map(|x| x.as_f64()).collect();
            let lo = pts.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = pts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(BifurcationPoint {
                z,
                spread: hi - lo,
                tail: pts,
            })
        })
        .collect()
}

pub fn write_bifurcation_csv<W: Write>(mut out: W, sweep: &[BifurcationPoint]) -> std::io::Result<()> {
    writeln!(out, "z,w")?;
    for p in sweep {
        for w in &p.tail {
            writeln!(out, "{:e},{:e}", p.z, w)?;
        }
    }
    Ok(())
}

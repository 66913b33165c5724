//! SGD, SGD with momentum, and Adam over the full parameter set.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::Params;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Sgd,
    Sgdm,
    Adam,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::Sgd, OptimizerKind::Sgdm, OptimizerKind::Adam];
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Sgdm => "sgdm",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "sgdm" | "momentum" => Ok(OptimizerKind::Sgdm),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::param(format!("unknown optimizer `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig<T> {
    pub kind: OptimizerKind,
    pub lr: T,
    pub momentum: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> OptimizerConfig<T> {
    pub fn new(kind: OptimizerKind, lr: T) -> Self {
        OptimizerConfig {
            kind,
            lr,
            momentum: T::lit(0.9),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > T::zero() && self.lr.is_finite()) {
            return Err(Error::param(format!("learning rate {} must be positive", self.lr)));
        }
        let unit = |x: T| x >= T::zero() && x < T::one();
        if !(unit(self.momentum) && unit(self.beta1) && unit(self.beta2) && self.eps > T::zero()) {
            return Err(Error::param("optimizer constants out of range"));
        }
        Ok(())
    }
}

/// Optimizer with its accumulators. Momentum follows the convention
/// `v ← μv + g`, `θ ← θ − ηv`; Adam uses bias-corrected moments.
#[derive(Clone, Debug)]
pub struct OptimizerState<T> {
    pub config: OptimizerConfig<T>,
    pub step: u64,
    first: Option<Params<T>>,
    second: Option<Params<T>>,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(config: OptimizerConfig<T>, like: &Params<T>) -> Result<Self> {
        config.validate()?;
        let (first, second) = match config.kind {
            OptimizerKind::Sgd => (None, None),
            OptimizerKind::Sgdm => (Some(Params::zeros_like(like)), None),
            OptimizerKind::Adam => (Some(Params::zeros_like(like)), Some(Params::zeros_like(like))),
        };
        Ok(OptimizerState {
            config,
            step: 0,
            first,
            second,
        })
    }

    /// Applies one base update from `grads` to `params`.
    pub fn step(&mut self, params: &mut Params<T>, grads: &Params<T>) -> Result<()> {
        if !params.same_shape(grads) {
            return Err(Error::contract("gradient shapes differ from parameters"));
        }
        self.step += 1;
        let c = self.config;
        match c.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
                    for (x, &gx) in p.iter_mut().zip(g) {
                        *x -= c.lr * gx;
                    }
                }
            }
            OptimizerKind::Sgdm => {
                let vel = self.first.as_mut().expect("momentum buffer");
                for ((p, g), v) in params
                    .tensors_mut()
                    .into_iter()
                    .zip(grads.tensors())
                    .zip(vel.tensors_mut())
                {
                    for ((x, &gx), vx) in p.iter_mut().zip(g).zip(v.iter_mut()) {
                        *vx = c.momentum * *vx + gx;
                        *x -= c.lr * *vx;
                    }
                }
            }
            OptimizerKind::Adam => {
                let m1 = self.first.as_mut().expect("first moment");
                let m2 = self.second.as_mut().expect("second moment");
                let t = i32::try_from(self.step).unwrap_or(i32::MAX);
                let bc1 = T::one() - c.beta1.powi(t);
                let bc2 = T::one() - c.beta2.powi(t);
                for (((p, g), a), b) in params
                    .tensors_mut()
                    .into_iter()
                    .zip(grads.tensors())
                    .zip(m1.tensors_mut())
                    .zip(m2.tensors_mut())
                {
                    for (((x, &gx), ax), bx) in p.iter_mut().zip(g).zip(a.iter_mut()).zip(b.iter_mut()) {
                        *ax = c.beta1 * *ax + (T::one() - c.beta1) * gx;
                        *bx = c.beta2 * *bx + (T::one() - c.beta2) * gx * gx;
                        let m_hat = *ax / bc1;
                        let v_hat = *bx / bc2;
                        *x -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
                    }
                }
            }
        }
        if !params.all_finite() {
            return Err(Error::Numeric {
                epoch: 0,
                stage: format!("{} update", c.kind),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_regular;
    use crate::nn::{init_model, Arch};

    fn params() -> Params<f64> {
        let g = generate_regular(6, 3, 0).unwrap();
        init_model(&g, Arch::Gcn, 1, 0).unwrap().params
    }

    fn filled(like: &Params<f64>, v: f64) -> Params<f64> {
        let mut p = Params::zeros_like(like);
        for t in p.tensors_mut() {
            t.fill(v);
        }
        p
    }

    #[test]
    fn sgd_step_is_exact() {
        let p0 = params();
        let g = filled(&p0, 0.25);
        let mut p = p0.clone();
        let mut opt = OptimizerState::new(OptimizerConfig::new(OptimizerKind::Sgd, 0.1), &p).unwrap();
        opt.step(&mut p, &g).unwrap();
        for (a, b) in p.tensors().iter().zip(p0.tensors()) {
            for (&x, &x0) in a.iter().zip(b) {
                assert_eq!(x, x0 - 0.1 * 0.25);
            }
        }
    }

    /// Single-parameter traces on f(x) = x²/2 from x = 1, so g = x.
    fn trace(kind: OptimizerKind, lr: f64, steps: usize) -> Vec<f64> {
        let base = params();
        let mut p = filled(&base, 1.0);
        let mut opt = OptimizerState::new(OptimizerConfig::new(kind, lr), &p).unwrap();
        let mut out = Vec::new();
        for _ in 0..steps {
            let g = p.clone();
            opt.step(&mut p, &g).unwrap();
            out.push(p.layer1.w[(0, 0)]);
        }
        out
    }

    #[test]
    fn momentum_trace() {
        // v1 = 1, x1 = 0.9; v2 = 0.9 + 0.9 = 1.8, x2 = 0.72;
        // v3 = 1.62 + 0.72 = 2.34, x3 = 0.486.
        let t = trace(OptimizerKind::Sgdm, 0.1, 3);
        for (a, b) in t.iter().zip([0.9, 0.72, 0.486]) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn adam_trace_matches_reference() {
        // Textbook recurrence evaluated with 50-digit arithmetic.
        let t = trace(OptimizerKind::Adam, 0.1, 3);
        let reference = [0.90000000099999999, 0.80041222971233739, 0.70158627450441421];
        for (a, b) in t.iter().zip(reference) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_bad_config_and_shapes() {
        let p = params();
        assert!(OptimizerState::new(OptimizerConfig::new(OptimizerKind::Adam, 0.0), &p).is_err());
        let other = init_model::<f64>(&generate_regular(10, 3, 0).unwrap(), Arch::Gcn, 1, 0)
            .unwrap()
            .params;
        let mut opt = OptimizerState::new(OptimizerConfig::new(OptimizerKind::Sgd, 0.1), &p).unwrap();
        let mut q = p.clone();
        assert!(opt.step(&mut q, &other).is_err());
    }
}

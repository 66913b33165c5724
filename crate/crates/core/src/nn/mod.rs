//! Two-layer GNN with a trainable node-embedding table.
//!
//! Pipeline: embedding → [layer 1 → batch-norm → ReLU → dropout] →
//! [layer 2 → batch-norm → sigmoid | row-softmax]. Gradients are derived by
//! hand in [`network_backward`].

mod batchnorm;
mod checkpoint;
mod layers;
mod network;

pub use batchnorm::{
    bn_backward, bn_forward_eval, bn_forward_train, BatchStats, BnAffine, BnCache, RunningStats,
    BN_EPSILON, BN_MOMENTUM,
};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use layers::{
    gcn_aggregate, gcn_layer_backward, gcn_layer_forward, sage_concat, sage_layer_backward,
    sage_layer_forward, Activation, LayerForward, LayerGrads,
};
pub use network::{
    network_backward, network_backward_with, network_forward, network_forward_with, ForwardCache,
    Mode,
};

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arch {
    Gcn,
    Sage,
}

impl Arch {
    /// Rows of the weight matrix for a given input width.
    pub fn fan_in(self, width: usize) -> usize {
        match self {
            Arch::Gcn => width,
            Arch::Sage => 2 * width,
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::Gcn => "gcn",
            Arch::Sage => "sage",
        })
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Arch::Gcn),
            "sage" | "graphsage" => Ok(Arch::Sage),
            _ => Err(Error::param(format!("unknown architecture `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub d0: usize,
    pub d1: usize,
    pub d2: usize,
}

impl Dims {
    /// `d0 = ⌊√n⌋`, `d1 = ⌊d0/2⌋` (at least 1).
    pub fn for_graph(n: usize, d2: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("graph has no nodes"));
        }
        if d2 == 0 {
            return Err(Error::param("output width must be at least 1"));
        }
        let d0 = (n as f64).sqrt().floor() as usize;
        // Guard against float rounding for perfect squares.
        let d0 = if (d0 + 1) * (d0 + 1) <= n { d0 + 1 } else { d0 };
        Ok(Dims {
            d0,
            d1: (d0 / 2).max(1),
            d2,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    /// `fan_in × out`
    pub w: Matrix<T>,
    pub b: Vec<T>,
}

/// Every trainable tensor of the model. Gradients and optimizer moments
/// share this layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T> {
    pub embedding: Matrix<T>,
    pub layer1: Dense<T>,
    pub norm1: BnAffine<T>,
    pub layer2: Dense<T>,
    pub norm2: BnAffine<T>,
}

pub type Gradients<T> = Params<T>;

pub const PARAM_NAMES: [&str; 9] = [
    "embedding", "w1", "b1", "gamma1", "beta1", "w2", "b2", "gamma2", "beta2",
];

impl<T: Scalar> Params<T> {
    pub fn zeros_like(other: &Params<T>) -> Self {
        let z = |m: &Matrix<T>| Matrix::zeros(m.rows(), m.cols());
        Params {
            embedding: z(&other.embedding),
            layer1: Dense {
                w: z(&other.layer1.w),
                b: vec![T::zero(); other.layer1.b.len()],
            },
            norm1: BnAffine {
                gamma: vec![T::zero(); other.norm1.gamma.len()],
                beta: vec![T::zero(); other.norm1.beta.len()],
            },
            layer2: Dense {
                w: z(&other.layer2.w),
                b: vec![T::zero(); other.layer2.b.len()],
            },
            norm2: BnAffine {
                gamma: vec![T::zero(); other.norm2.gamma.len()],
                beta: vec![T::zero(); other.norm2.beta.len()],
            },
        }
    }

    /// Flat views in [`PARAM_NAMES`] order.
    pub fn tensors(&self) -> [&[T]; 9] {
        [
            self.embedding.as_slice(),
            self.layer1.w.as_slice(),
            &self.layer1.b,
            &self.norm1.gamma,
            &self.norm1.beta,
            self.layer2.w.as_slice(),
            &self.layer2.b,
            &self.norm2.gamma,
            &self.norm2.beta,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [T]; 9] {
        [
            self.embedding.as_mut_slice(),
            self.layer1.w.as_mut_slice(),
            &mut self.layer1.b,
            &mut self.norm1.gamma,
            &mut self.norm1.beta,
            self.layer2.w.as_mut_slice(),
            &mut self.layer2.b,
            &mut self.norm2.gamma,
            &mut self.norm2.beta,
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn same_shape(&self, other: &Params<T>) -> bool {
        self.embedding.shape() == other.embedding.shape()
            && self.layer1.w.shape() == other.layer1.w.shape()
            && self.layer2.w.shape() == other.layer2.w.shape()
            && self
                .tensors()
                .iter()
                .zip(other.tensors())
                .all(|(a, b)| a.len() == b.len())
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    pub arch: Arch,
    pub dims: Dims,
    pub params: Params<T>,
    pub stats1: RunningStats<T>,
    pub stats2: RunningStats<T>,
    /// Dropout probability after the first layer's ReLU.
    pub dropout: T,
}

impl<T: Scalar> Model<T> {
    pub fn n_nodes(&self) -> usize {
        self.params.embedding.rows()
    }

    /// Folds the batch statistics of a train-mode forward pass into the
    /// running averages used in eval mode.
    pub fn update_running_stats(&mut self, cache: &ForwardCache<T>) {
        let n = self.n_nodes();
        self.stats1.update(&cache.bn1, n);
        self.stats2.update(&cache.bn2, n);
    }

    pub fn set_dropout(&mut self, p: T) -> Result<()> {
        if !(p >= T::zero() && p < T::one()) {
            return Err(Error::param(format!("dropout {p} outside [0, 1)")));
        }
        self.dropout = p;
        Ok(())
    }
}

/// Model sized by the standard width scheme for `g`.
pub fn init_model<T: Scalar>(g: &Graph, arch: Arch, d2: usize, seed: u64) -> Result<Model<T>> {
    let dims = Dims::for_graph(g.n_nodes(), d2)?;
    init_model_with_dims(g.n_nodes(), arch, dims, seed)
}

/// Uniform `[-√k, √k]` initialisation with `k = 1/fan_in`; the embedding
/// table uses `k = 1/d0`. Batch-norm starts as the identity.
pub fn init_model_with_dims<T: Scalar>(
    n_nodes: usize,
    arch: Arch,
    dims: Dims,
    seed: u64,
) -> Result<Model<T>> {
    if n_nodes == 0 || dims.d0 == 0 || dims.d1 == 0 || dims.d2 == 0 {
        return Err(Error::param(format!(
            "invalid model size n={n_nodes}, dims={dims:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |rows: usize, cols: usize, fan_in: usize| {
        let bound = (1.0 / fan_in as f64).sqrt();
        Matrix::from_fn(rows, cols, |_, _| T::lit(rng.gen_range(-bound..=bound)))
    };
    let embedding = uniform(n_nodes, dims.d0, dims.d0);
    let fan1 = arch.fan_in(dims.d0);
    let w1 = uniform(fan1, dims.d1, fan1);
    let b1 = uniform(1, dims.d1, fan1).into_vec();
    let fan2 = arch.fan_in(dims.d1);
    let w2 = uniform(fan2, dims.d2, fan2);
    let b2 = uniform(1, dims.d2, fan2).into_vec();
    Ok(Model {
        arch,
        dims,
        params: Params {
            embedding,
            layer1: Dense { w: w1, b: b1 },
            norm1: BnAffine::identity(dims.d1),
            layer2: Dense { w: w2, b: b2 },
            norm2: BnAffine::identity(dims.d2),
        },
        stats1: RunningStats::new(dims.d1),
        stats2: RunningStats::new(dims.d2),
        dropout: T::zero(),
    })
}

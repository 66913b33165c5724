use rand::Rng;

use super::batchnorm::{bn_backward, bn_forward_eval, bn_forward_train, BnCache};
use super::layers::{
    gcn_layer_backward, gcn_layer_forward, sage_layer_backward, sage_layer_forward, LayerForward,
};
use super::{Arch, Gradients, Model, Params};
use crate::error::{Error, Result};
use crate::graph::{degree_norm, Graph, NormTable};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Everything the backward pass and the chaotic feedback need from one
/// forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    pub mode: Mode,
    pub layer1: LayerForward<T>,
    pub bn1: BnCache<T>,
    /// Batch-norm output of layer 1, before ReLU.
    pub bn1_out: Matrix<T>,
    /// Inverted-dropout scale factors (`0` or `1/(1-p)`), train mode only.
    pub dropout_mask: Option<Matrix<T>>,
    /// Input to layer 2.
    pub hidden: Matrix<T>,
    pub layer2: LayerForward<T>,
    pub bn2: BnCache<T>,
    pub output: Matrix<T>,
}

impl<T: Scalar> ForwardCache<T> {
    /// Sigmoid of the raw pre-activation of `node` in layer 1 or 2.
    pub fn intermediate_row(&self, layer: usize, node: usize) -> Vec<T> {
        match layer {
            1 => self.layer1.intermediate_row(node),
            2 => self.layer2.intermediate_row(node),
            _ => panic!("layer index {layer} not in 1..=2"),
        }
    }
}

fn numeric(stage: &str) -> Error {
    Error::Numeric {
        epoch: 0,
        stage: stage.to_string(),
    }
}

fn softmax_rows<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

pub fn network_forward<T: Scalar, R: Rng + ?Sized>(
    m: &Model<T>,
    g: &Graph,
    mode: Mode,
    rng: &mut R,
) -> Result<(Matrix<T>, ForwardCache<T>)> {
    let norm = match m.arch {
        Arch::Gcn => degree_norm(g),
        Arch::Sage => NormTable::empty(),
    };
    network_forward_with(m, g, &norm, mode, rng)
}

/// As [`network_forward`] with a precomputed normalisation table.
pub fn network_forward_with<T: Scalar, R: Rng + ?Sized>(
    m: &Model<T>,
    g: &Graph,
    norm: &NormTable<T>,
    mode: Mode,
    rng: &mut R,
) -> Result<(Matrix<T>, ForwardCache<T>)> {
    if m.n_nodes() != g.n_nodes() {
        return Err(Error::contract(format!(
            "model built for {} nodes, graph has {}",
            m.n_nodes(),
            g.n_nodes()
        )));
    }
    let p = &m.params;
    let layer = |w: &Matrix<T>, b: &[T], h: &Matrix<T>| match m.arch {
        Arch::Gcn => gcn_layer_forward(w, b, h, g, norm),
        Arch::Sage => sage_layer_forward(w, b, h, g),
    };

    let layer1 = layer(&p.layer1.w, &p.layer1.b, &p.embedding)?;
    if !layer1.pre.all_finite() {
        return Err(numeric("layer1"));
    }
    let (bn1_out, bn1) = match mode {
        Mode::Train => bn_forward_train(&layer1.pre, &p.norm1),
        Mode::Eval => bn_forward_eval(&layer1.pre, &p.norm1, &m.stats1),
    };
    let mut hidden = bn1_out.map(|x| x.max(T::zero()));
    let dropout_mask = if mode == Mode::Train && m.dropout > T::zero() {
        let keep = T::one() - m.dropout;
        let scale = T::one() / keep;
        let keep_f = keep.as_f64();
        let mask = Matrix::from_fn(hidden.rows(), hidden.cols(), |_, _| {
            if rng.gen::<f64>() < keep_f {
                scale
            } else {
                T::zero()
            }
        });
        for (h, &s) in hidden.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            *h *= s;
        }
        Some(mask)
    } else {
        None
    };

    let layer2 = layer(&p.layer2.w, &p.layer2.b, &hidden)?;
    if !layer2.pre.all_finite() {
        return Err(numeric("layer2"));
    }
    let (bn2_out, bn2) = match mode {
        Mode::Train => bn_forward_train(&layer2.pre, &p.norm2),
        Mode::Eval => bn_forward_eval(&layer2.pre, &p.norm2, &m.stats2),
    };
    let output = if m.dims.d2 == 1 {
        bn2_out.map(Scalar::sigmoid)
    } else {
        softmax_rows(&bn2_out)
    };
    if !output.all_finite() {
        return Err(numeric("output"));
    }
    let cache = ForwardCache {
        mode,
        layer1,
        bn1,
        bn1_out,
        dropout_mask,
        hidden,
        layer2,
        bn2,
        output: output.clone(),
    };
    Ok((output, cache))
}

pub fn network_backward<T: Scalar>(
    m: &Model<T>,
    g: &Graph,
    cache: &ForwardCache<T>,
    d_out: &Matrix<T>,
) -> Result<Gradients<T>> {
    let norm = match m.arch {
        Arch::Gcn => degree_norm(g),
        Arch::Sage => NormTable::empty(),
    };
    network_backward_with(m, g, &norm, cache, d_out)
}

/// Exact gradients of a scalar loss with respect to every parameter, given
/// `d_out = ∂loss/∂output` and the cache of the matching forward pass.
pub fn network_backward_with<T: Scalar>(
    m: &Model<T>,
    g: &Graph,
    norm: &NormTable<T>,
    cache: &ForwardCache<T>,
    d_out: &Matrix<T>,
) -> Result<Gradients<T>> {
    let n = g.n_nodes();
    let Model { dims, params, .. } = m;
    if m.n_nodes() != n
        || cache.output.shape() != (n, dims.d2)
        || cache.layer1.pre.shape() != (n, dims.d1)
        || cache.hidden.shape() != (n, dims.d1)
    {
        return Err(Error::contract("forward cache does not match model/graph"));
    }
    if d_out.shape() != cache.output.shape() {
        return Err(Error::contract(format!(
            "output gradient shape {:?} != output shape {:?}",
            d_out.shape(),
            cache.output.shape()
        )));
    }

    let out = &cache.output;
    let mut d_bn2 = Matrix::zeros(n, dims.d2);
    if dims.d2 == 1 {
        for i in 0..n {
            let y = out[(i, 0)];
            d_bn2[(i, 0)] = d_out[(i, 0)] * y * (T::one() - y);
        }
    } else {
        for i in 0..n {
            let dot: T = out.row(i).iter().zip(d_out.row(i)).map(|(&p, &d)| p * d).sum();
            for c in 0..dims.d2 {
                d_bn2[(i, c)] = out[(i, c)] * (d_out[(i, c)] - dot);
            }
        }
    }

    let (d_pre2, dgamma2, dbeta2) = bn_backward(&d_bn2, &params.norm2, &cache.bn2);
    let g2 = match m.arch {
        Arch::Gcn => gcn_layer_backward(&params.layer2.w, &cache.layer2, &d_pre2, g, norm),
        Arch::Sage => sage_layer_backward(&params.layer2.w, &cache.layer2, &d_pre2, g),
    };

    let mut d_bn1 = g2.h_in;
    if let Some(mask) = &cache.dropout_mask {
        for (d, &s) in d_bn1.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            *d *= s;
        }
    }
    for (d, &y) in d_bn1.as_mut_slice().iter_mut().zip(cache.bn1_out.as_slice()) {
        if y <= T::zero() {
            *d = T::zero();
        }
    }
    let (d_pre1, dgamma1, dbeta1) = bn_backward(&d_bn1, &params.norm1, &cache.bn1);
    let g1 = match m.arch {
        Arch::Gcn => gcn_layer_backward(&params.layer1.w, &cache.layer1, &d_pre1, g, norm),
        Arch::Sage => sage_layer_backward(&params.layer1.w, &cache.layer1, &d_pre1, g),
    };

    let grads = Params {
        embedding: g1.h_in,
        layer1: super::Dense { w: g1.w, b: g1.b },
        norm1: super::BnAffine {
            gamma: dgamma1,
            beta: dbeta1,
        },
        layer2: super::Dense { w: g2.w, b: g2.b },
        norm2: super::BnAffine {
            gamma: dgamma2,
            beta: dbeta2,
        },
    };
    if !grads.all_finite() {
        return Err(numeric("backward"));
    }
    Ok(grads)
}

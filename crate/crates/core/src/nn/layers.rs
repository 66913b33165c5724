//! GCN and GraphSAGE layers: sparse aggregation over the CSR adjacency
//! followed by a dense transform.

use crate::error::{Error, Result};
use crate::graph::{Graph, NormTable};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(T::zero()),
            Activation::Sigmoid => x.sigmoid(),
        }
    }
}

/// Result of one layer: the aggregated (GCN) or concatenated (SAGE) input
/// that feeds the dense transform, and the raw pre-activation.
#[derive(Clone, Debug)]
pub struct LayerForward<T> {
    pub input: Matrix<T>,
    pub pre: Matrix<T>,
}

impl<T: Scalar> LayerForward<T> {
    pub fn output(&self, act: Activation) -> Matrix<T> {
        self.pre.map(|x| act.apply(x))
    }

    /// Sigmoid of the raw pre-activation, whatever the layer's activation.
    pub fn intermediate(&self) -> Matrix<T> {
        self.pre.map(Scalar::sigmoid)
    }

    pub fn intermediate_row(&self, node: usize) -> Vec<T> {
        self.pre.row(node).iter().map(|x| x.sigmoid()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct LayerGrads<T> {
    pub w: Matrix<T>,
    pub b: Vec<T>,
    pub h_in: Matrix<T>,
}

fn check_rows<T: Scalar>(h: &Matrix<T>, g: &Graph) -> Result<()> {
    if h.rows() != g.n_nodes() {
        return Err(Error::contract(format!(
            "feature rows {} != node count {}",
            h.rows(),
            g.n_nodes()
        )));
    }
    Ok(())
}

fn dense<T: Scalar>(input: &Matrix<T>, w: &Matrix<T>, b: &[T]) -> Result<Matrix<T>> {
    if input.cols() != w.rows() || b.len() != w.cols() {
        return Err(Error::contract(format!(
            "layer shapes: input {:?}, weight {:?}, bias {}",
            input.shape(),
            w.shape(),
            b.len()
        )));
    }
    let mut pre = input.matmul(w);
    for i in 0..pre.rows() {
        for (x, &bj) in pre.row_mut(i).iter_mut().zip(b) {
            *x += bj;
        }
    }
    Ok(pre)
}

/// `Σ_{j∈N(i)} h_j / c_ij` for every node.
pub fn gcn_aggregate<T: Scalar>(h: &Matrix<T>, g: &Graph, norm: &NormTable<T>) -> Matrix<T> {
    let width = h.cols();
    let mut out = Matrix::zeros(g.n_nodes(), width);
    for i in 0..g.n_nodes() {
        let coeffs = norm.row(g, i);
        let row = out.row_mut(i);
        for (&j, &c) in g.neighbors(i).iter().zip(coeffs) {
            for (o, &x) in row.iter_mut().zip(h.row(j)) {
                *o += c * x;
            }
        }
    }
    out
}

/// `concat(h_i, mean_{j∈N(i)} h_j)`; isolated nodes get a zero mean part.
pub fn sage_concat<T: Scalar>(h: &Matrix<T>, g: &Graph) -> Matrix<T> {
    let width = h.cols();
    let mut out = Matrix::zeros(g.n_nodes(), 2 * width);
    for i in 0..g.n_nodes() {
        let row = out.row_mut(i);
        row[..width].copy_from_slice(h.row(i));
        let nb = g.neighbors(i);
        if nb.is_empty() {
            continue;
        }
        let agg = &mut row[width..];
        for &j in nb {
            for (o, &x) in agg.iter_mut().zip(h.row(j)) {
                *o += x;
            }
        }
        let inv = T::one() / T::from_usize_lossy(nb.len());
        for o in agg.iter_mut() {
            *o *= inv;
        }
    }
    out
}

pub fn gcn_layer_forward<T: Scalar>(
    w: &Matrix<T>,
    b: &[T],
    h_in: &Matrix<T>,
    g: &Graph,
    norm: &NormTable<T>,
) -> Result<LayerForward<T>> {
    check_rows(h_in, g)?;
    let input = gcn_aggregate(h_in, g, norm);
    let pre = dense(&input, w, b)?;
    Ok(LayerForward { input, pre })
}

pub fn sage_layer_forward<T: Scalar>(
    w: &Matrix<T>,
    b: &[T],
    h_in: &Matrix<T>,
    g: &Graph,
) -> Result<LayerForward<T>> {
    check_rows(h_in, g)?;
    let input = sage_concat(h_in, g);
    let pre = dense(&input, w, b)?;
    Ok(LayerForward { input, pre })
}

fn dense_backward<T: Scalar>(
    w: &Matrix<T>,
    input: &Matrix<T>,
    d_pre: &Matrix<T>,
) -> (Matrix<T>, Vec<T>, Matrix<T>) {
    let dw = input.t_matmul(d_pre);
    let db = d_pre.col_sums();
    let d_input = d_pre.matmul_t(w);
    (dw, db, d_input)
}

pub fn gcn_layer_backward<T: Scalar>(
    w: &Matrix<T>,
    fwd: &LayerForward<T>,
    d_pre: &Matrix<T>,
    g: &Graph,
    norm: &NormTable<T>,
) -> LayerGrads<T> {
    let (dw, db, d_agg) = dense_backward(w, &fwd.input, d_pre);
    // The normalised adjacency is symmetric, so its transpose is itself.
    let h_in = gcn_aggregate(&d_agg, g, norm);
    LayerGrads { w: dw, b: db, h_in }
}

pub fn sage_layer_backward<T: Scalar>(
    w: &Matrix<T>,
    fwd: &LayerForward<T>,
    d_pre: &Matrix<T>,
    g: &Graph,
) -> LayerGrads<T> {
    let (dw, db, d_cat) = dense_backward(w, &fwd.input, d_pre);
    let width = d_cat.cols() / 2;
    let mut h_in = Matrix::zeros(g.n_nodes(), width);
    for i in 0..g.n_nodes() {
        h_in.row_mut(i).copy_from_slice(&d_cat.row(i)[..width]);
    }
    for i in 0..g.n_nodes() {
        let nb = g.neighbors(i);
        if nb.is_empty() {
            continue;
        }
        let inv = T::one() / T::from_usize_lossy(nb.len());
        let d_mean = &d_cat.row(i)[width..];
        for &j in nb {
            for (o, &x) in h_in.row_mut(j).iter_mut().zip(d_mean) {
                *o += inv * x;
            }
        }
    }
    LayerGrads { w: dw, b: db, h_in }
}

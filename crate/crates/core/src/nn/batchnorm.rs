//! Per-feature batch normalisation across the node dimension.

use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPSILON: f64 = 1e-5;

/// Learned scale and shift.
#[derive(Clone, Debug, PartialEq)]
pub struct BnAffine<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

impl<T: Scalar> BnAffine<T> {
    pub fn identity(width: usize) -> Self {
        BnAffine {
            gamma: vec![T::one(); width],
            beta: vec![T::zero(); width],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunningStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

impl<T: Scalar> RunningStats<T> {
    pub fn new(width: usize) -> Self {
        RunningStats {
            mean: vec![T::zero(); width],
            var: vec![T::one(); width],
        }
    }

    /// Exponential update with the batch statistics; the variance fed in is
    /// the unbiased estimate.
    pub fn update(&mut self, cache: &BnCache<T>, n: usize) {
        let Some(batch) = &cache.batch else { return };
        let m = T::lit(BN_MOMENTUM);
        let unbias = if n > 1 {
            T::from_usize_lossy(n) / T::from_usize_lossy(n - 1)
        } else {
            T::one()
        };
        for k in 0..self.mean.len() {
            self.mean[k] = (T::one() - m) * self.mean[k] + m * batch.mean[k];
            self.var[k] = (T::one() - m) * self.var[k] + m * batch.var[k] * unbias;
        }
    }
}

#[derive(Clone, Debug)]
pub struct BatchStats<T> {
    pub mean: Vec<T>,
    /// Biased (population) variance used for normalisation.
    pub var: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct BnCache<T> {
    pub xhat: Matrix<T>,
    pub inv_std: Vec<T>,
    /// Present in train mode only.
    pub batch: Option<BatchStats<T>>,
}

fn normalize<T: Scalar>(
    x: &Matrix<T>,
    mean: &[T],
    inv_std: &[T],
    affine: &BnAffine<T>,
) -> (Matrix<T>, Matrix<T>) {
    let (n, f) = x.shape();
    let mut xhat = Matrix::zeros(n, f);
    let mut y = Matrix::zeros(n, f);
    for i in 0..n {
        for k in 0..f {
            let h = (x[(i, k)] - mean[k]) * inv_std[k];
            xhat[(i, k)] = h;
            y[(i, k)] = affine.gamma[k] * h + affine.beta[k];
        }
    }
    (xhat, y)
}

pub fn bn_forward_train<T: Scalar>(x: &Matrix<T>, affine: &BnAffine<T>) -> (Matrix<T>, BnCache<T>) {
    let (n, f) = x.shape();
    let inv_n = T::one() / T::from_usize_lossy(n.max(1));
    let mean: Vec<T> = x.col_sums().into_iter().map(|s| s * inv_n).collect();
    let mut var = vec![T::zero(); f];
    for i in 0..n {
        for k in 0..f {
            let d = x[(i, k)] - mean[k];
            var[k] += d * d;
        }
    }
    for v in var.iter_mut() {
        *v *= inv_n;
    }
    let eps = T::lit(BN_EPSILON);
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let (xhat, y) = normalize(x, &mean, &inv_std, affine);
    let cache = BnCache {
        xhat,
        inv_std,
        batch: Some(BatchStats { mean, var }),
    };
    (y, cache)
}

pub fn bn_forward_eval<T: Scalar>(
    x: &Matrix<T>,
    affine: &BnAffine<T>,
    stats: &RunningStats<T>,
) -> (Matrix<T>, BnCache<T>) {
    let eps = T::lit(BN_EPSILON);
    let inv_std: Vec<T> = stats.var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let (xhat, y) = normalize(x, &stats.mean, &inv_std, affine);
    let cache = BnCache {
        xhat,
        inv_std,
        batch: None,
    };
    (y, cache)
}

/// Returns `(dx, dgamma, dbeta)`.
pub fn bn_backward<T: Scalar>(
    dy: &Matrix<T>,
    affine: &BnAffine<T>,
    cache: &BnCache<T>,
) -> (Matrix<T>, Vec<T>, Vec<T>) {
    let (n, f) = dy.shape();
    let mut dgamma = vec![T::zero(); f];
    let mut dbeta = vec![T::zero(); f];
    for i in 0..n {
        for k in 0..f {
            dgamma[k] += dy[(i, k)] * cache.xhat[(i, k)];
            dbeta[k] += dy[(i, k)];
        }
    }
    let mut dx = Matrix::zeros(n, f);
    if cache.batch.is_some() {
        // Batch statistics depend on x: project out the mean and the
        // xhat-direction of the upstream gradient.
        let inv_n = T::one() / T::from_usize_lossy(n.max(1));
        for i in 0..n {
            for k in 0..f {
                let g = affine.gamma[k] * cache.inv_std[k];
                dx[(i, k)] = g
                    * (dy[(i, k)] - inv_n * dbeta[k] - inv_n * cache.xhat[(i, k)] * dgamma[k]);
            }
        }
    } else {
        for i in 0..n {
            for k in 0..f {
                dx[(i, k)] = dy[(i, k)] * affine.gamma[k] * cache.inv_std[k];
            }
        }
    }
    (dx, dgamma, dbeta)
}

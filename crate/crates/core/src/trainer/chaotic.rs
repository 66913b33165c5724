//! Chaotic feedback: the auxiliary loss used for logging, the closed-form
//! additive update term, annealing and node selection.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{ForwardCache, Model, Params};
use crate::scalar::Scalar;

/// One chaotic strength per trainable layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerStrengths<T> {
    pub embedding: T,
    pub layer1: T,
    pub layer2: T,
}

impl<T: Scalar> LayerStrengths<T> {
    pub fn new(embedding: T, layer1: T, layer2: T) -> Self {
        LayerStrengths {
            embedding,
            layer1,
            layer2,
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.embedding, self.layer1, self.layer2]
    }

    pub fn is_zero(&self) -> bool {
        self.as_array().iter().all(|z| *z == T::zero())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeMode {
    Fixed(usize),
    RandomPerEpoch,
}

pub const DEFAULT_Z0: [f64; 3] = [20.0, 3.0, 1.0];
pub const DEFAULT_BETA: f64 = 0.999;
pub const DEFAULT_I0: f64 = 0.65;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChaoticConfig<T> {
    pub z0: LayerStrengths<T>,
    pub beta: T,
    pub i0: T,
    pub node_mode: NodeMode,
}

impl<T: Scalar> Default for ChaoticConfig<T> {
    fn default() -> Self {
        ChaoticConfig {
            z0: LayerStrengths::new(
                T::lit(DEFAULT_Z0[0]),
                T::lit(DEFAULT_Z0[1]),
                T::lit(DEFAULT_Z0[2]),
            ),
            beta: T::lit(DEFAULT_BETA),
            i0: T::lit(DEFAULT_I0),
            node_mode: NodeMode::RandomPerEpoch,
        }
    }
}

impl<T: Scalar> ChaoticConfig<T> {
    /// Zero strengths: training reduces to plain backpropagation.
    pub fn plain() -> Self {
        ChaoticConfig {
            z0: LayerStrengths::zero(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.i0 > T::zero() && self.i0 < T::one()) {
            return Err(Error::param(format!("I0 = {} outside (0, 1)", self.i0)));
        }
        if !(self.beta > T::zero() && self.beta <= T::one()) {
            return Err(Error::param(format!("beta = {} outside (0, 1]", self.beta)));
        }
        if self.z0.as_array().iter().any(|z| !(*z >= T::zero() && z.is_finite())) {
            return Err(Error::param("chaotic strengths must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Sigmoid outputs of node `d` for the embedding, layer 1 and layer 2.
/// The embedding's output is the sigmoid of its own entries.
pub fn intermediate_outputs<T: Scalar>(
    model: &Model<T>,
    cache: &ForwardCache<T>,
    d: usize,
) -> Result<[Vec<T>; 3]> {
    if d >= model.n_nodes() || cache.layer1.pre.rows() != model.n_nodes() {
        return Err(Error::contract(format!(
            "node {d} / cache rows {} vs {} nodes",
            cache.layer1.pre.rows(),
            model.n_nodes()
        )));
    }
    let emb = model.params.embedding.row(d).iter().map(|x| x.sigmoid()).collect();
    Ok([emb, cache.intermediate_row(1, d), cache.intermediate_row(2, d)])
}

fn entropy_term<T: Scalar>(o: T, i0: T) -> T {
    -(i0 * o.ln() + (T::one() - i0) * (T::one() - o).ln())
}

/// `−Σ_l z_l Σ_j (I0·ln o_dj + (1−I0)·ln(1−o_dj))`. Fails if any output is
/// saturated at 0 or 1 and its strength is non-zero.
pub fn chaotic_loss_value<T: Scalar>(
    model: &Model<T>,
    cache: &ForwardCache<T>,
    i0: T,
    z: &LayerStrengths<T>,
    d: usize,
) -> Result<T> {
    let outs = intermediate_outputs(model, cache, d)?;
    let mut total = T::zero();
    for (zl, o) in z.as_array().iter().zip(&outs) {
        if *zl == T::zero() {
            continue;
        }
        for &x in o {
            if !(x > T::zero() && x < T::one()) {
                return Err(Error::Numeric {
                    epoch: 0,
                    stage: format!("chaotic loss: output {x} saturated"),
                });
            }
            total += *zl * entropy_term(x, i0);
        }
    }
    Ok(total)
}

pub const LOG_CLAMP: f64 = 1e-12;

/// As [`chaotic_loss_value`] with outputs clamped to `[1e-12, 1 − 1e-12]`,
/// for logging.
pub fn chaotic_loss_clamped<T: Scalar>(
    model: &Model<T>,
    cache: &ForwardCache<T>,
    i0: T,
    z: &LayerStrengths<T>,
    d: usize,
) -> Result<T> {
    let outs = intermediate_outputs(model, cache, d)?;
    let lo = T::lit(LOG_CLAMP);
    let hi = T::one() - lo;
    let mut total = T::zero();
    for (zl, o) in z.as_array().iter().zip(&outs) {
        for &x in o {
            total += *zl * entropy_term(x.max(lo).min(hi), i0);
        }
    }
    Ok(total)
}

/// Per-column additive deltas `z_l·(I0 − o_dj)`. A layer with zero
/// strength carries `None` so that nothing at all is added to it.
#[derive(Clone, Debug, PartialEq)]
pub struct ChaoticDeltas<T> {
    pub node: usize,
    /// Added to row `node` of the embedding table.
    pub embedding: Option<Vec<T>>,
    /// Added to every entry of column `j` of `W1` and to `b1[j]`.
    pub layer1: Option<Vec<T>>,
    pub layer2: Option<Vec<T>>,
}

impl<T: Scalar> ChaoticDeltas<T> {
    pub fn is_empty(&self) -> bool {
        self.embedding.is_none() && self.layer1.is_none() && self.layer2.is_none()
    }

    /// Adds the deltas to `params` in place.
    pub fn apply(&self, params: &mut Params<T>) {
        if let Some(delta) = &self.embedding {
            for (w, &dj) in params.embedding.row_mut(self.node).iter_mut().zip(delta) {
                *w += dj;
            }
        }
        for (delta, dense) in [
            (&self.layer1, &mut params.layer1),
            (&self.layer2, &mut params.layer2),
        ] {
            let Some(delta) = delta else { continue };
            for i in 0..dense.w.rows() {
                for (w, &dj) in dense.w.row_mut(i).iter_mut().zip(delta) {
                    *w += dj;
                }
            }
            for (b, &dj) in dense.b.iter_mut().zip(delta) {
                *b += dj;
            }
        }
    }

    /// Dense parameter-shaped view, zero where nothing is added.
    pub fn to_dense(&self, like: &Params<T>) -> Params<T> {
        let mut out = Params::zeros_like(like);
        self.apply(&mut out);
        out
    }
}

pub fn chaotic_increment<T: Scalar>(
    model: &Model<T>,
    cache: &ForwardCache<T>,
    i0: T,
    z: &LayerStrengths<T>,
    d: usize,
) -> Result<ChaoticDeltas<T>> {
    if z.as_array().iter().any(|zl| *zl < T::zero()) {
        return Err(Error::param("chaotic strengths must be non-negative"));
    }
    let [emb, o1, o2] = intermediate_outputs(model, cache, d)?;
    let delta = |zl: T, o: Vec<T>| {
        (zl != T::zero()).then(|| o.into_iter().map(|x| zl * (i0 - x)).collect())
    };
    Ok(ChaoticDeltas {
        node: d,
        embedding: delta(z.embedding, emb),
        layer1: delta(z.layer1, o1),
        layer2: delta(z.layer2, o2),
    })
}

/// One annealing step `z ← βz`.
pub fn anneal<T: Scalar>(z: LayerStrengths<T>, beta: T) -> LayerStrengths<T> {
    LayerStrengths::new(z.embedding * beta, z.layer1 * beta, z.layer2 * beta)
}

pub fn select_node<R: Rng + ?Sized>(mode: NodeMode, rng: &mut R, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::param("cannot select a node from an empty graph"));
    }
    match mode {
        NodeMode::Fixed(d) if d >= n => {
            Err(Error::param(format!("fixed node {d} out of range for {n} nodes")))
        }
        NodeMode::Fixed(d) => Ok(d),
        NodeMode::RandomPerEpoch => Ok(rng.gen_range(0..n)),
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::graph::{generate_regular, Graph};
    use crate::nn::{init_model, network_forward, Arch, Mode};

    fn setup() -> (Graph, Model<f64>, ForwardCache<f64>) {
        let g = generate_regular(12, 3, 1).unwrap();
        let m = init_model(&g, Arch::Gcn, 1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, cache) = network_forward(&m, &g, Mode::Train, &mut rng).unwrap();
        (g, m, cache)
    }

    /// Forces every intermediate output of node 0 to `o` by rewriting the
    /// cached pre-activations and the embedding row.
    fn force_outputs(m: &mut Model<f64>, cache: &mut ForwardCache<f64>, o: f64) {
        let logit = (o / (1.0 - o)).ln();
        m.params.embedding.row_mut(0).fill(logit);
        cache.layer1.pre.row_mut(0).fill(logit);
        cache.layer2.pre.row_mut(0).fill(logit);
    }

    #[test]
    fn loss_at_i0_is_width_times_entropy() {
        let (_, mut m, mut cache) = setup();
        force_outputs(&mut m, &mut cache, 0.65);
        let ones = LayerStrengths::new(1.0, 1.0, 1.0);
        let width = (m.dims.d0 + m.dims.d1 + m.dims.d2) as f64;
        let h = -(0.65f64 * 0.65f64.ln() + 0.35 * 0.35f64.ln());
        let l = chaotic_loss_value(&m, &cache, 0.65, &ones, 0).unwrap();
        assert!((l - width * h).abs() < 1e-12);
        assert!((h - 0.6474).abs() < 1e-4);
    }

    #[test]
    fn loss_at_half_is_ln2_per_unit() {
        let (_, mut m, mut cache) = setup();
        force_outputs(&mut m, &mut cache, 0.5);
        let only2 = LayerStrengths::new(0.0, 0.0, 1.0);
        let l = chaotic_loss_value(&m, &cache, 0.65, &only2, 0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        let none = LayerStrengths::zero();
        assert_eq!(chaotic_loss_value(&m, &cache, 0.65, &none, 0).unwrap(), 0.0);
    }

    #[test]
    fn saturated_output_is_a_numeric_failure() {
        let (_, mut m, cache) = setup();
        m.params.embedding.row_mut(0).fill(1e3);
        let z = LayerStrengths::new(1.0, 0.0, 0.0);
        assert!(matches!(
            chaotic_loss_value(&m, &cache, 0.65, &z, 0),
            Err(Error::Numeric { .. })
        ));
        assert!(chaotic_loss_clamped(&m, &cache, 0.65, &z, 0).unwrap().is_finite());
    }

    #[test]
    fn increment_values_and_signs() {
        let (_, mut m, mut cache) = setup();
        let z = LayerStrengths::new(1.0, 1.0, 1.0);
        force_outputs(&mut m, &mut cache, 0.5);
        let d = chaotic_increment(&m, &cache, 0.65, &z, 0).unwrap();
        for v in d.layer1.unwrap() {
            assert!((v - 0.15).abs() < 1e-12);
        }
        force_outputs(&mut m, &mut cache, 0.9);
        let d = chaotic_increment(&m, &cache, 0.65, &z, 0).unwrap();
        assert!(d.embedding.unwrap().iter().all(|&v| v < 0.0));
    }

    #[test]
    fn fixed_point_gives_exact_zero() {
        // Pre-activation 0 gives o = 0.5 exactly, so I0 = 0.5 is the fixed point.
        let (_, mut m, mut cache) = setup();
        m.params.embedding.row_mut(0).fill(0.0);
        cache.layer1.pre.row_mut(0).fill(0.0);
        cache.layer2.pre.row_mut(0).fill(0.0);
        let z = LayerStrengths::new(3.0, 2.0, 1.0);
        let d = chaotic_increment(&m, &cache, 0.5, &z, 0).unwrap();
        let dense = d.to_dense(&m.params);
        assert!(dense.tensors().iter().all(|t| t.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn dense_view_is_column_constant() {
        let (_, m, cache) = setup();
        let z = LayerStrengths::new(20.0, 3.0, 1.0);
        let d = chaotic_increment(&m, &cache, 0.65, &z, 4).unwrap();
        let dense = d.to_dense(&m.params);
        let w1 = &dense.layer1.w;
        for j in 0..w1.cols() {
            for i in 0..w1.rows() {
                assert_eq!(w1[(i, j)], w1[(0, j)]);
            }
            assert_eq!(dense.layer1.b[j], w1[(0, j)]);
        }
        for i in 0..dense.embedding.rows() {
            let nonzero = dense.embedding.row(i).iter().any(|&x| x != 0.0);
            assert_eq!(nonzero, i == 4);
        }
    }

    #[test]
    fn zero_strength_adds_nothing() {
        let (_, m, cache) = setup();
        let d = chaotic_increment(&m, &cache, 0.65, &LayerStrengths::zero(), 0).unwrap();
        assert!(d.is_empty());
        let mut p = m.params.clone();
        d.apply(&mut p);
        assert_eq!(p, m.params);
    }

    #[test]
    fn annealing_closed_form() {
        let mut z = LayerStrengths::new(10.0, 10.0, 0.0);
        for _ in 0..1000 {
            z = anneal(z, 0.999);
        }
        let exact = 10.0 * 0.999f64.powi(1000);
        assert!((z.embedding - exact).abs() / exact < 1e-12);
        assert!((z.embedding - 3.6770).abs() < 1e-4);
        assert_eq!(z.layer2, 0.0);
        assert_eq!(anneal(LayerStrengths::new(2.0, 2.0, 2.0), 1.0).layer1, 2.0);
    }

    #[test]
    fn node_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(select_node(NodeMode::Fixed(0), &mut rng, 5).unwrap(), 0);
        assert!(select_node(NodeMode::Fixed(5), &mut rng, 5).is_err());
        for _ in 0..10 {
            assert_eq!(select_node(NodeMode::RandomPerEpoch, &mut rng, 1).unwrap(), 0);
        }
        let draws = |seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| select_node(NodeMode::RandomPerEpoch, &mut r, 3).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draws(9), draws(9));
    }

    #[test]
    fn node_selection_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n_draws = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n_draws {
            counts[select_node(NodeMode::RandomPerEpoch, &mut rng, 3).unwrap()] += 1;
        }
        let expected = n_draws as f64 / 3.0;
        let sigma = (n_draws as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 5.0 * sigma);
        }
        // Chi-square with 2 degrees of freedom; 0.999 quantile is 13.8.
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 13.8);
    }

    #[test]
    fn config_validation() {
        assert!(ChaoticConfig::<f64>::default().validate().is_ok());
        let bad_i0 = ChaoticConfig {
            i0: 1.0,
            ..ChaoticConfig::<f64>::default()
        };
        assert!(bad_i0.validate().is_err());
        let bad_beta = ChaoticConfig {
            beta: 0.0,
            ..ChaoticConfig::<f64>::default()
        };
        assert!(bad_beta.validate().is_err());
    }
}

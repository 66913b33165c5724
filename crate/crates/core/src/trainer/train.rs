//! The training loop and its records.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::chaotic::{anneal, chaotic_increment, chaotic_loss_clamped, select_node, ChaoticConfig, LayerStrengths};
use super::optimizer::{OptimizerConfig, OptimizerKind, OptimizerState};
use crate::error::{Error, Result};
use crate::graph::{degree_norm, Graph, NormTable};
use crate::hamiltonian::{ObjectiveReport, ProblemEncoding};
use crate::nn::{init_model, network_backward_with, network_forward_with, Arch, Mode, Model};
use crate::projection::{project, Assignment};
use crate::scalar::Scalar;

pub const DEFAULT_PATIENCE: usize = 1000;
pub const DEFAULT_MIN_DELTA: f64 = 0.001;

/// Random streams derived from the run seed.
const DROPOUT_STREAM: u64 = 1;
const NODE_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig<T> {
    pub arch: Arch,
    pub chaos: ChaoticConfig<T>,
    pub optimizer: OptimizerConfig<T>,
    pub dropout: T,
    pub max_epochs: usize,
    /// Stop after this many epochs without a loss improvement larger than
    /// `min_delta`; `None` always runs the full budget.
    pub patience: Option<usize>,
    pub min_delta: T,
    /// Project and score every k-th epoch (and always the last one).
    pub eval_every: usize,
    pub seed: u64,
    /// Keep a copy of the model at the lowest training loss.
    pub keep_best_params: bool,
}

impl<T: Scalar> TrainConfig<T> {
    pub fn new(arch: Arch, optimizer: OptimizerKind, lr: T, max_epochs: usize, seed: u64) -> Self {
        TrainConfig {
            arch,
            chaos: ChaoticConfig::default(),
            optimizer: OptimizerConfig::new(optimizer, lr),
            dropout: T::zero(),
            max_epochs,
            patience: Some(DEFAULT_PATIENCE),
            min_delta: T::lit(DEFAULT_MIN_DELTA),
            eval_every: 1,
            seed,
            keep_best_params: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.chaos.validate()?;
        self.optimizer.validate()?;
        if !(self.dropout >= T::zero() && self.dropout < T::one()) {
            return Err(Error::param(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.eval_every == 0 {
            return Err(Error::param("eval_every must be at least 1"));
        }
        if self.patience == Some(0) {
            return Err(Error::param("patience must be at least 1"));
        }
        if !(self.min_delta >= T::zero()) {
            return Err(Error::param("min_delta must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord<T> {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Relaxed loss of the train-mode forward pass at the start of the epoch.
    pub loss_h: T,
    pub loss_c: T,
    /// Strengths used during this epoch (before annealing).
    pub z: LayerStrengths<T>,
    pub node: usize,
    /// Score of the projected eval-mode output after this epoch's update.
    pub objective: Option<ObjectiveReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    Converged { epoch: usize },
    MaxEpochs,
    NumericFailure { epoch: usize, stage: String },
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::Converged { epoch } => write!(f, "converged at epoch {epoch}"),
            StopReason::MaxEpochs => f.write_str("max_epochs"),
            StopReason::NumericFailure { epoch, stage } => {
                write!(f, "numeric failure at epoch {epoch} ({stage})")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainResult<T> {
    pub records: Vec<EpochRecord<T>>,
    /// Lowest discrete Hamiltonian over all scored epochs; ties keep the
    /// earliest.
    pub best: Option<Assignment>,
    /// Projection at the last scored epoch.
    pub last: Option<Assignment>,
    pub best_loss: T,
    pub best_params: Option<Model<T>>,
    pub final_model: Model<T>,
    pub stop: StopReason,
    /// Wall-clock seconds spent in the epoch loop.
    pub train_seconds: f64,
}

impl<T: Scalar> TrainResult<T> {
    pub fn epochs_run(&self) -> usize {
        self.records.len()
    }

    pub fn seconds_per_epoch(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.train_seconds / self.records.len() as f64
        }
    }
}

fn numeric_at(e: Error, epoch: usize) -> Error {
    match e {
        Error::Numeric { stage, .. } => Error::Numeric { epoch, stage },
        other => other,
    }
}

pub fn train<T: Scalar>(g: &Graph, enc: &ProblemEncoding<T>, cfg: &TrainConfig<T>) -> Result<TrainResult<T>> {
    train_observed(g, enc, cfg, |_, _| {})
}

/// As [`train`], calling `observer` after every epoch with the record and
/// the updated model.
pub fn train_observed<T: Scalar>(
    g: &Graph,
    enc: &ProblemEncoding<T>,
    cfg: &TrainConfig<T>,
    mut observer: impl FnMut(&EpochRecord<T>, &Model<T>),
) -> Result<TrainResult<T>> {
    cfg.validate()?;
    enc.validate()?;
    let mut model = init_model::<T>(g, cfg.arch, enc.output_width(), cfg.seed)?;
    model.set_dropout(cfg.dropout)?;
    let mut opt = OptimizerState::new(cfg.optimizer, &model.params)?;
    let norm = match cfg.arch {
        Arch::Gcn => degree_norm(g),
        Arch::Sage => NormTable::empty(),
    };
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dropout_rng.set_stream(DROPOUT_STREAM);
    let mut node_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    node_rng.set_stream(NODE_STREAM);

    let mut z = cfg.chaos.z0;
    let mut records = Vec::with_capacity(cfg.max_epochs.min(1 << 20));
    let mut best: Option<Assignment> = None;
    let mut last: Option<Assignment> = None;
    let mut best_loss = T::infinity();
    let mut best_params = None;
    let mut reference_loss = T::infinity();
    let mut stale = 0usize;
    let mut stop = StopReason::MaxEpochs;

    let start = Instant::now();
    for epoch in 1..=cfg.max_epochs {
        let step = (|| -> Result<(EpochRecord<T>, Option<Assignment>)> {
            let (p, cache) = network_forward_with(&model, g, &norm, Mode::Train, &mut dropout_rng)?;
            let (loss_h, d_p) = enc.evaluate(&p, g);
            if !loss_h.is_finite() {
                return Err(Error::Numeric {
                    epoch,
                    stage: "loss".into(),
                });
            }
            let grads = network_backward_with(&model, g, &norm, &cache, &d_p)?;
            let node = select_node(cfg.chaos.node_mode, &mut node_rng, g.n_nodes())?;
            let loss_c = chaotic_loss_clamped(&model, &cache, cfg.chaos.i0, &z, node)?;
            let deltas = chaotic_increment(&model, &cache, cfg.chaos.i0, &z, node)?;
            opt.step(&mut model.params, &grads)?;
            if !deltas.is_empty() {
                deltas.apply(&mut model.params);
                if !model.params.all_finite() {
                    return Err(Error::Numeric {
                        epoch,
                        stage: "chaotic update".into(),
                    });
                }
            }
            model.update_running_stats(&cache);

            let scored = if epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs {
                let (p_eval, _) = network_forward_with(&model, g, &norm, Mode::Eval, &mut dropout_rng)?;
                Some(Assignment::evaluate(enc, project(enc, &p_eval), epoch, g)?)
            } else {
                None
            };
            let record = EpochRecord {
                epoch,
                loss_h,
                loss_c,
                z,
                node,
                objective: scored.as_ref().map(|a| a.report),
            };
            Ok((record, scored))
        })();

        let (record, scored) = match step {
            Ok(v) => v,
            Err(e @ Error::Numeric { .. }) => {
                let Error::Numeric { stage, .. } = numeric_at(e, epoch) else { unreachable!() };
                log::warn!("numeric failure at epoch {epoch}: {stage}");
                stop = StopReason::NumericFailure { epoch, stage };
                break;
            }
            Err(e) => return Err(e),
        };

        z = anneal(z, cfg.chaos.beta);
        if record.loss_h < best_loss {
            best_loss = record.loss_h;
            if cfg.keep_best_params {
                best_params = Some(model.clone());
            }
        }
        if let Some(a) = scored {
            if best.as_ref().is_none_or(|b| a.report.is_better_than(&b.report)) {
                best = Some(a.clone());
            }
            last = Some(a);
        }
        observer(&record, &model);
        let loss_h = record.loss_h;
        records.push(record);

        if loss_h < reference_loss - cfg.min_delta {
            reference_loss = loss_h;
            stale = 0;
        } else {
            stale += 1;
        }
        if cfg.patience.is_some_and(|p| stale >= p) {
            stop = StopReason::Converged { epoch };
            break;
        }
    }
    let train_seconds = start.elapsed().as_secs_f64();

    Ok(TrainResult {
        records,
        best,
        last,
        best_loss,
        best_params,
        final_model: model,
        stop,
        train_seconds,
    })
}

pub const TRAJECTORY_HEADER: &str = "epoch,loss_H,loss_C,z_emb,z_1,z_2,d,objective";

/// One CSV row per epoch; `objective` is empty for unscored epochs.
pub fn write_trajectory_csv<T: Scalar, W: Write>(mut out: W, records: &[EpochRecord<T>]) -> std::io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for r in records {
        let obj = r.objective.map(|o| o.objective.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e},{},{}",
            r.epoch,
            r.loss_h.as_f64(),
            r.loss_c.as_f64(),
            r.z.embedding.as_f64(),
            r.z.layer1.as_f64(),
            r.z.layer2.as_f64(),
            r.node,
            obj
        )?;
    }
    Ok(())
}

pub fn save_trajectory_csv<T: Scalar>(path: impl AsRef<Path>, records: &[EpochRecord<T>]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_trajectory_csv(&mut w, records)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

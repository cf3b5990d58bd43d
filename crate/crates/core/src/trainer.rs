//! Supervised training of one operator network.
//!
//! The objective is `L_tot = w_ic * L_ic + w_data * L_data` where `L_data` is
//! the mean squared error over the full predicted field and `L_ic` the mean
//! squared error of the `tau* = 0` column against the gas-phase initial
//! profile (the solid target is the same profile, by local equilibrium).

use std::fmt::Debug;
use std::time::Instant;

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::deeponet::{DeepONet, DeepONetGrads};
use crate::error::{Error, Result};
use crate::field::Phase;
use crate::icgen::Dataset;
use crate::nn::{AdamConfig, AdamState, Real};
use crate::solver::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub ic: f64,
    pub data: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { ic: 3.0, data: 1.0 }
    }
}

impl LossWeights {
    pub fn combine(&self, ic: f64, data: f64) -> f64 {
        self.ic * ic + self.data * data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub ic: f64,
    pub data: f64,
    pub total: f64,
}

impl LossTerms {
    pub fn is_finite(&self) -> bool {
        self.ic.is_finite() && self.data.is_finite() && self.total.is_finite()
    }
}

fn check_loss_shapes<F>(
    pred: &ArrayView2<F>,
    ic_target: &ArrayView2<F>,
    truth: &ArrayView2<F>,
    grid: &Grid,
) -> Result<()> {
    if pred.dim() != truth.dim() || pred.ncols() != grid.n_points() {
        return Err(Error::Shape(format!(
            "prediction {:?}, truth {:?}, grid has {} points",
            pred.dim(),
            truth.dim(),
            grid.n_points()
        )));
    }
    if ic_target.dim() != (pred.nrows(), grid.n_x) {
        return Err(Error::Shape(format!(
            "initial-condition target is {:?}, expected ({}, {})",
            ic_target.dim(),
            pred.nrows(),
            grid.n_x
        )));
    }
    Ok(())
}

/// Loss terms for flattened predictions (`N x n_x*n_t`, row-major fields).
pub fn loss_terms<F: Real>(
    pred: ArrayView2<F>,
    ic_target: ArrayView2<F>,
    truth: ArrayView2<F>,
    grid: &Grid,
    weights: LossWeights,
) -> Result<LossTerms> {
    check_loss_shapes(&pred, &ic_target, &truth, grid)?;
    let sq = |a: F, b: F| {
        let d = (a - b).to_f64().unwrap_or(f64::NAN);
        d * d
    };
    let data_sum: f64 = pred.iter().zip(truth.iter()).map(|(&p, &t)| sq(p, t)).sum();
    let data = data_sum / pred.len() as f64;
    let cols = grid.initial_column();
    let mut ic_sum = 0.0;
    for (p_row, t_row) in pred.rows().into_iter().zip(ic_target.rows()) {
        for (&c, &t) in cols.iter().zip(t_row.iter()) {
            ic_sum += sq(p_row[c], t);
        }
    }
    let ic = ic_sum / ic_target.len() as f64;
    Ok(LossTerms {
        ic,
        data,
        total: weights.combine(ic, data),
    })
}

/// Minibatch of initial conditions and flattened reference fields.
#[derive(Debug, Clone)]
pub struct Batch<F> {
    /// `N x n_x`; also the initial-condition target for either phase.
    pub ics: Array2<F>,
    /// `N x n_x*n_t`
    pub targets: Array2<F>,
}

impl<F: Real> Batch<F> {
    pub fn from_dataset(dataset: &Dataset, indices: &[usize], phase: Phase) -> Self {
        let (nx, nt) = (dataset.grid.n_x, dataset.grid.n_t);
        let fields = match phase {
            Phase::Gas => &dataset.gas,
            Phase::Solid => &dataset.solid,
        };
        let mut ics = Array2::zeros((indices.len(), nx));
        let mut targets = Array2::zeros((indices.len(), nx * nt));
        for (r, &i) in indices.iter().enumerate() {
            ics.row_mut(r).assign(&dataset.ics.row(i).mapv(F::lit));
            let field = fields.index_axis(Axis(0), i);
            for (dst, &v) in targets.row_mut(r).iter_mut().zip(field.iter()) {
                *dst = F::lit(v);
            }
        }
        Self { ics, targets }
    }

    pub fn len(&self) -> usize {
        self.ics.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.ics.nrows() == 0
    }
}

/// Canonical query grid plus loss weights; shared by every batch.
#[derive(Debug, Clone)]
pub struct Objective<F> {
    pub grid: Grid,
    pub weights: LossWeights,
    coords: Array2<F>,
    ic_columns: Vec<usize>,
}

impl<F: Real> Objective<F> {
    pub fn new(grid: Grid, weights: LossWeights) -> Self {
        Self {
            grid,
            weights,
            coords: grid.coordinates().mapv(F::lit),
            ic_columns: grid.initial_column(),
        }
    }

    pub fn loss(&self, model: &DeepONet<F>, batch: &Batch<F>) -> Result<LossTerms> {
        let pred = model.forward_batch(batch.ics.view(), self.coords.view())?;
        loss_terms(pred.view(), batch.ics.view(), batch.targets.view(), &self.grid, self.weights)
    }

    pub fn loss_and_gradients(
        &self,
        model: &DeepONet<F>,
        batch: &Batch<F>,
    ) -> Result<(LossTerms, DeepONetGrads<F>)> {
        let (pred, cache) = model.forward_train(batch.ics.view(), self.coords.view())?;
        let terms = loss_terms(pred.view(), batch.ics.view(), batch.targets.view(), &self.grid, self.weights)?;
        if !terms.is_finite() {
            return Err(Error::Numerical(format!("non-finite loss {terms:?}")));
        }
        let n = batch.len() as f64;
        let data_scale = F::lit(2.0 * self.weights.data / (n * self.grid.n_points() as f64));
        let ic_scale = F::lit(2.0 * self.weights.ic / (n * self.grid.n_x as f64));
        let mut grad = &pred - &batch.targets;
        grad *= data_scale;
        for (r, ic_row) in batch.ics.rows().into_iter().enumerate() {
            for (&c, &target) in self.ic_columns.iter().zip(ic_row.iter()) {
                grad[[r, c]] += ic_scale * (pred[[r, c]] - target);
            }
        }
        let grads = model.backward(cache, grad.view())?;
        Ok((terms, grads))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlateauConfig {
    pub factor: f64,
    /// Epochs without relative improvement before the rate is reduced.
    pub patience: usize,
    /// Relative improvement that counts as progress.
    pub threshold: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self {
            factor: 0.5,
            patience: 2000,
            threshold: 1e-6,
        }
    }
}

/// Reduce-on-plateau learning rate keyed to the epoch training loss.
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    config: PlateauConfig,
    lr: f64,
    min_lr: f64,
    best: f64,
    bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(config: PlateauConfig, lr: f64, min_lr: f64) -> Self {
        Self {
            config,
            lr: lr.max(min_lr),
            min_lr,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn step(&mut self, loss: f64) -> f64 {
        if loss < self.best * (1.0 - self.config.threshold) {
            self.best = loss;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs > self.config.patience {
                self.lr = (self.lr * self.config.factor).max(self.min_lr);
                self.bad_epochs = 0;
            }
        }
        self.lr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub weights: LossWeights,
    pub lr: f64,
    pub min_lr: f64,
    pub max_epochs: usize,
    pub val_every: usize,
    pub early_stop_patience: usize,
    pub scheduler: PlateauConfig,
    /// Initial conditions per minibatch; 0 means the whole training split.
    pub batch_size: usize,
    pub seed: u64,
    pub phase: Phase,
    /// Manual epoch cap applied on top of `max_epochs`.
    pub stop_at: Option<usize>,
    pub adam: AdamConfig,
    /// Progress logging period in epochs; 0 disables it.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            weights: LossWeights::default(),
            lr: 1e-4,
            min_lr: 1e-7,
            max_epochs: 500_000,
            val_every: 100,
            early_stop_patience: 10_000,
            scheduler: PlateauConfig::default(),
            batch_size: 64,
            seed: 0,
            phase: Phase::Gas,
            stop_at: None,
            adam: AdamConfig::default(),
            log_every: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let w = self.weights;
        if !(w.ic >= 0.0 && w.data >= 0.0) || (w.ic == 0.0 && w.data == 0.0) {
            return Err(Error::invalid("weights", "must be >= 0 and not both zero"));
        }
        if self.val_every == 0 {
            return Err(Error::invalid("val_every", "must be > 0"));
        }
        if !self.early_stop_patience.is_multiple_of(self.val_every) {
            return Err(Error::invalid(
                "early_stop_patience",
                format!("must be a multiple of val_every = {}", self.val_every),
            ));
        }
        if !(self.lr >= 0.0 && self.min_lr >= 0.0) {
            return Err(Error::invalid("lr", "learning rates must be >= 0"));
        }
        if !(self.scheduler.factor > 0.0 && self.scheduler.factor <= 1.0) {
            return Err(Error::invalid("scheduler.factor", "must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn epoch_limit(&self) -> usize {
        self.stop_at.map_or(self.max_epochs, |s| s.min(self.max_epochs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_ic: f64,
    pub train_data: f64,
    pub val_loss: f64,
    pub val_ic: f64,
    pub val_data: f64,
    pub lr: f64,
}

/// Summary of a training run. `history` is exported separately as CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub wall_time_s: f64,
    pub best_epoch: usize,
    pub min_train_loss: Option<f64>,
    pub min_val_loss: Option<f64>,
    pub min_data_loss: Option<f64>,
    pub min_ic_loss: Option<f64>,
    pub epochs_run: usize,
    pub final_lr: f64,
    #[serde(skip)]
    pub history: Vec<HistoryRecord>,
}

impl TrainReport {
    pub fn write_history_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "train_loss", "val_loss", "lr"])?;
        for h in &self.history {
            w.serialize((h.epoch, h.train_loss, h.val_loss, h.lr))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Same report with the wall-clock field zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trained<F> {
    pub model: DeepONet<F>,
    pub report: TrainReport,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError<F: Debug> {
    #[error(transparent)]
    Setup(#[from] Error),

    /// `checkpoint` holds the parameters before the failing update.
    #[error("non-finite loss at epoch {epoch}: {reason}")]
    NonFinite {
        epoch: usize,
        reason: String,
        checkpoint: Box<DeepONet<F>>,
        report: Box<TrainReport>,
    },
}

impl<F: Debug> TrainError<F> {
    pub fn exit_code(&self) -> i32 {
        match self {
            TrainError::Setup(e) => e.exit_code(),
            TrainError::NonFinite { .. } => 3,
        }
    }
}

/// Loss over a whole split, evaluated in chunks of `chunk` initial conditions.
pub fn split_loss<F: Real>(
    model: &DeepONet<F>,
    objective: &Objective<F>,
    dataset: &Dataset,
    indices: &[usize],
    chunk: usize,
) -> Result<LossTerms> {
    if indices.is_empty() {
        return Err(Error::invalid("split", "no samples to evaluate"));
    }
    let (mut ic, mut data) = (0.0, 0.0);
    for part in indices.chunks(chunk.max(1)) {
        let batch = Batch::from_dataset(dataset, part, model.phase);
        let t = objective.loss(model, &batch)?;
        ic += t.ic * part.len() as f64;
        data += t.data * part.len() as f64;
    }
    let n = indices.len() as f64;
    let (ic, data) = (ic / n, data / n);
    Ok(LossTerms {
        ic,
        data,
        total: objective.weights.combine(ic, data),
    })
}

fn min_opt(cur: Option<f64>, v: f64) -> Option<f64> {
    Some(cur.map_or(v, |c| c.min(v)))
}

/// Trains `model` and returns the parameters with the lowest validation loss.
pub fn train<F: Real>(
    mut model: DeepONet<F>,
    dataset: &Dataset,
    config: &TrainConfig,
) -> std::result::Result<Trained<F>, TrainError<F>> {
    config.validate()?;
    if model.phase != config.phase {
        return Err(Error::invalid(
            "phase",
            format!("model predicts {}, config trains {}", model.phase, config.phase),
        )
        .into());
    }
    if model.config.sensors != dataset.grid.n_x {
        return Err(Error::Shape(format!(
            "model has {} sensors, dataset grid has {} cells",
            model.config.sensors, dataset.grid.n_x
        ))
        .into());
    }
    let start = Instant::now();
    let mut report = TrainReport {
        wall_time_s: 0.0,
        best_epoch: 0,
        min_train_loss: None,
        min_val_loss: None,
        min_data_loss: None,
        min_ic_loss: None,
        epochs_run: 0,
        final_lr: config.lr,
        history: Vec::new(),
    };
    let limit = config.epoch_limit();
    if limit == 0 {
        report.wall_time_s = start.elapsed().as_secs_f64();
        return Ok(Trained { model, report });
    }

    let train_idx = dataset.splits.train.clone();
    let val_idx = dataset.splits.val.clone();
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::invalid("dataset", "training needs non-empty train and val splits").into());
    }
    let batch_size = if config.batch_size == 0 {
        train_idx.len()
    } else {
        config.batch_size
    };

    let objective = Objective::<F>::new(dataset.grid, config.weights);
    let mut adam = AdamState::for_params(&model.parameters_mut(), config.adam);
    let mut scheduler = PlateauScheduler::new(config.scheduler, config.lr, config.min_lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order = train_idx;
    let mut best_model = model.clone();
    let mut best_val: Option<f64> = None;

    for epoch in 1..=limit {
        order.shuffle(&mut rng);
        let lr = scheduler.lr();
        let (mut ic_sum, mut data_sum) = (0.0, 0.0);
        for part in order.chunks(batch_size) {
            let batch = Batch::from_dataset(dataset, part, model.phase);
            let step = objective
                .loss_and_gradients(&model, &batch)
                .and_then(|(terms, grads)| {
                    adam.step(&mut model.parameters_mut(), &grads.slices(), lr)?;
                    Ok(terms)
                });
            let terms = match step {
                Ok(t) => t,
                Err(Error::Numerical(reason)) => {
                    report.wall_time_s = start.elapsed().as_secs_f64();
                    report.epochs_run = epoch - 1;
                    return Err(TrainError::NonFinite {
                        epoch,
                        reason,
                        checkpoint: Box::new(model),
                        report: Box::new(report),
                    });
                }
                Err(e) => return Err(e.into()),
            };
            ic_sum += terms.ic * part.len() as f64;
            data_sum += terms.data * part.len() as f64;
        }
        let n = order.len() as f64;
        let (train_ic, train_data) = (ic_sum / n, data_sum / n);
        let train_loss = config.weights.combine(train_ic, train_data);
        report.min_train_loss = min_opt(report.min_train_loss, train_loss);
        report.min_ic_loss = min_opt(report.min_ic_loss, train_ic);
        report.min_data_loss = min_opt(report.min_data_loss, train_data);
        report.epochs_run = epoch;
        scheduler.step(train_loss);

        if epoch % config.val_every == 0 || epoch == limit {
            let val = split_loss(&model, &objective, dataset, &val_idx, batch_size)?;
            if !val.is_finite() {
                report.wall_time_s = start.elapsed().as_secs_f64();
                return Err(TrainError::NonFinite {
                    epoch,
                    reason: format!("validation loss {val:?}"),
                    checkpoint: Box::new(best_model),
                    report: Box::new(report),
                });
            }
            report.history.push(HistoryRecord {
                epoch,
                train_loss,
                train_ic,
                train_data,
                val_loss: val.total,
                val_ic: val.ic,
                val_data: val.data,
                lr,
            });
            if best_val.is_none_or(|b| val.total < b) {
                best_val = Some(val.total);
                best_model = model.clone();
                report.best_epoch = epoch;
            }
            report.min_val_loss = best_val;
            if config.log_every > 0 {
                log::info!(
                    "epoch {epoch}: train {train_loss:.4e} (ic {train_ic:.3e}, data {train_data:.3e}) val {:.4e} lr {lr:.1e}",
                    val.total
                );
            }
            if epoch - report.best_epoch >= config.early_stop_patience {
                log::info!("early stop at epoch {epoch}, best epoch {}", report.best_epoch);
                break;
            }
        } else if config.log_every > 0 && epoch % config.log_every == 0 {
            log::info!("epoch {epoch}: train {train_loss:.4e} lr {lr:.1e}");
        }
    }

    report.final_lr = scheduler.lr();
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(Trained {
        model: best_model,
        report,
    })
}

/// Slice of a flattened batch prediction corresponding to sample `r`, reshaped to a field.
pub fn unflatten(pred: ArrayView2<f64>, r: usize, grid: &Grid) -> Array2<f64> {
    pred.slice(s![r, ..])
        .to_owned()
        .into_shape_with_order((grid.n_x, grid.n_t))
        .expect("grid-sized row")
}

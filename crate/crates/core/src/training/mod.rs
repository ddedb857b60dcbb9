//! Two-phase training: a fairness-agnostic base autoencoder first, then a
//! fresh autoencoder under the fairness-regularized objective, with the base
//! scores frozen as group-fidelity targets.

mod grid;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use grid::{grid_search, pareto_frontier, pareto_select, Grid, GridCell, ParetoPoint, UnsupervisedMetrics};

use crate::dataset::{LabeledDataset, Standardizer};
use crate::detector::{self, init_params, Activation, AeConfig, AutoencoderParams};
use crate::error::{Error, Result};
use crate::losses::{
    BaseReduction, LossBreakdown, LossSpec, LossWeights, ProtectedTarget, RankSmoothing,
    SigmoidOrientation, Variant,
};
use crate::numgrad::{eval_loss_and_grad, AdamState, DenseMatrix};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// One Adam step per epoch on every row.
    #[default]
    Full,
    /// Shuffled minibatches of the given size; parity and fidelity terms are
    /// computed within each minibatch only.
    Minibatch(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub variant: Variant,
    pub alpha: f64,
    pub gamma: f64,
    /// Sigmoid scale of the smoothed ranks.
    pub c: f64,
    pub orientation: SigmoidOrientation,
    pub unit_scale: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch: BatchMode,
    pub flag_fraction: f64,
    pub seed: u64,
    /// Hidden width; chosen from the input dimension when absent.
    pub hidden_dim: Option<usize>,
    pub activation: Activation,
    pub base_reduction: BaseReduction,
    /// Number of seeds tried by [`select_base`].
    pub base_seeds: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let w = LossWeights::default();
        Self {
            variant: Variant::FairOd,
            alpha: w.alpha,
            gamma: w.gamma,
            c: w.smoothing.c,
            orientation: w.smoothing.orientation,
            unit_scale: w.smoothing.unit_scale,
            learning_rate: 0.01,
            epochs: 1000,
            batch: BatchMode::Full,
            flag_fraction: 0.05,
            seed: 0,
            hidden_dim: None,
            activation: Activation::Tanh,
            base_reduction: w.base_reduction,
            base_seeds: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights().validate()?;
        if !(self.flag_fraction > 0.0 && self.flag_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "flag fraction {} not in (0, 1)",
                self.flag_fraction
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if self.batch == BatchMode::Minibatch(0) {
            return Err(Error::InvalidArgument("minibatch size must be positive".into()));
        }
        if self.hidden_dim == Some(0) {
            return Err(Error::InvalidArgument("hidden_dim must be positive".into()));
        }
        if self.base_seeds == 0 {
            return Err(Error::InvalidArgument("base_seeds must be at least 1".into()));
        }
        Ok(())
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            alpha: self.alpha,
            gamma: self.gamma,
            smoothing: RankSmoothing {
                c: self.c,
                orientation: self.orientation,
                unit_scale: self.unit_scale,
            },
            base_reduction: self.base_reduction,
        }
    }

    pub fn ae_config(&self, input_dim: usize, seed: u64) -> AeConfig {
        let mut cfg = AeConfig::for_input(input_dim, seed);
        if let Some(m) = self.hidden_dim {
            cfg.hidden_dim = m;
        }
        cfg.activation = self.activation;
        cfg
    }
}

/// A trained model with its training history and training-set scores.
/// Equality ignores the wall-clock time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub variant: Variant,
    pub config: TrainConfig,
    /// Seed the parameters were initialized from.
    pub init_seed: u64,
    pub params: AutoencoderParams,
    /// One loss evaluation per epoch, taken before that epoch's update.
    pub trace: Vec<LossBreakdown>,
    pub scores: Vec<f64>,
    /// Seconds of wall-clock time; not serialized so identical runs produce
    /// identical documents.
    #[serde(skip)]
    pub elapsed_secs: f64,
}

impl PartialEq for FitResult {
    fn eq(&self, o: &Self) -> bool {
        self.variant == o.variant
            && self.config == o.config
            && self.init_seed == o.init_seed
            && self.params == o.params
            && self.trace == o.trace
            && self.scores == o.scores
    }
}

impl FitResult {
    pub fn final_loss(&self) -> Option<&LossBreakdown> {
        self.trace.last()
    }

    /// Scores of `x` under the trained parameters. No group information is
    /// involved.
    pub fn score(&self, x: &DenseMatrix) -> Result<Vec<f64>> {
        detector::score(&self.params, x)
    }
}

/// A fitted model bundled with the feature transform it was trained under.
/// Scoring needs raw features only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub feature_names: Vec<String>,
    pub standardizer: Standardizer,
    pub fit: FitResult,
}

impl TrainedModel {
    /// Scores of untransformed feature rows.
    pub fn score_raw(&self, features: &DenseMatrix) -> Result<Vec<f64>> {
        let x = self.standardizer.transform(features)?;
        self.fit.score(&x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.standardizer.means.len() != m.fit.params.input_dim() {
            return Err(Error::Schema(format!(
                "standardizer has {} columns, model expects {}",
                m.standardizer.means.len(),
                m.fit.params.input_dim()
            )));
        }
        Ok(m)
    }
}

fn with_epoch(err: Error, epoch: usize) -> Error {
    match err {
        Error::NumericalOverflow { term } => Error::NumericalOverflow {
            term: format!("{term} (epoch {epoch})"),
        },
        other => other,
    }
}

/// Runs Adam on `spec` from parameters initialized with `seed`.
fn optimize(
    x: &DenseMatrix,
    spec: &LossSpec,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(AutoencoderParams, Vec<LossBreakdown>)> {
    spec.validate(x.rows())?;
    let mut params = init_params(&cfg.ae_config(x.cols(), seed))?;
    let mut adam = AdamState::for_params(&params, cfg.learning_rate);
    let mut trace = Vec::with_capacity(cfg.epochs);
    match cfg.batch {
        BatchMode::Full => {
            for epoch in 0..cfg.epochs {
                let (loss, grads) =
                    eval_loss_and_grad(&params, x, spec).map_err(|e| with_epoch(e, epoch))?;
                adam.step(&mut params, &grads)?;
                trace.push(loss);
            }
        }
        BatchMode::Minibatch(size) => {
            // Separate stream from initialization so batch order does not
            // correlate with the initial weights.
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            let mut order: Vec<usize> = (0..x.rows()).collect();
            for epoch in 0..cfg.epochs {
                order.shuffle(&mut rng);
                let mut acc = LossBreakdown::default();
                let chunks: Vec<&[usize]> = order.chunks(size).collect();
                for rows in &chunks {
                    let mut rows = rows.to_vec();
                    rows.sort_unstable();
                    let sub = spec.subset(&rows)?;
                    let xb = x.select_rows(&rows);
                    let (loss, grads) = eval_loss_and_grad(&params, &xb, &sub)
                        .map_err(|e| with_epoch(e, epoch))?;
                    adam.step(&mut params, &grads)?;
                    acc.total += loss.total;
                    acc.base += loss.base;
                    acc.sp += loss.sp;
                    acc.gf += loss.gf;
                    acc.degenerate |= loss.degenerate;
                }
                let k = chunks.len() as f64;
                acc.total /= k;
                acc.sp /= k;
                acc.gf /= k;
                trace.push(acc);
            }
        }
    }
    Ok((params, trace))
}

fn finish(
    x: &DenseMatrix,
    cfg: &TrainConfig,
    variant: Variant,
    seed: u64,
    params: AutoencoderParams,
    trace: Vec<LossBreakdown>,
    start: Instant,
) -> Result<FitResult> {
    let scores = detector::score(&params, x)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::overflow("training-set scores"));
    }
    Ok(FitResult {
        variant,
        config: TrainConfig {
            variant,
            ..cfg.clone()
        },
        init_seed: seed,
        params,
        trace,
        scores,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Trains on the reconstruction loss alone, initialized from `cfg.seed`.
/// The protected attribute is never read.
pub fn fit_base(ds: &LabeledDataset, cfg: &TrainConfig) -> Result<FitResult> {
    fit_base_features(&ds.features, cfg, cfg.seed)
}

fn fit_base_features(x: &DenseMatrix, cfg: &TrainConfig, seed: u64) -> Result<FitResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut spec = LossSpec::base_only();
    spec.weights = cfg.weights();
    let (params, trace) = optimize(x, &spec, cfg, seed)?;
    finish(x, cfg, Variant::BaseOnly, seed, params, trace, start)
}

/// Trains base models from seeds `cfg.seed .. cfg.seed + cfg.base_seeds`
/// and keeps the one with the lowest final reconstruction loss (earliest
/// seed on ties).
pub fn select_base(ds: &LabeledDataset, cfg: &TrainConfig) -> Result<FitResult> {
    cfg.validate()?;
    let mut best: Option<FitResult> = None;
    for k in 0..cfg.base_seeds as u64 {
        let fit = fit_base_features(&ds.features, cfg, cfg.seed.wrapping_add(k))?;
        let loss: f64 = fit.scores.iter().sum();
        let better = match &best {
            None => true,
            Some(b) => loss < b.scores.iter().sum::<f64>(),
        };
        if better {
            best = Some(fit);
        }
    }
    Ok(best.expect("base_seeds >= 1"))
}

/// Protected targets for every attribute of `ds`, with base scores attached.
pub fn protected_targets(ds: &LabeledDataset, base_scores: &[f64]) -> Result<Vec<ProtectedTarget>> {
    let mut targets = vec![ProtectedTarget::new("pv", ds.pv.clone(), Some(base_scores.to_vec()))?];
    for extra in &ds.extra_pvs {
        targets.push(ProtectedTarget::new(
            extra.name.clone(),
            extra.ids.clone(),
            Some(base_scores.to_vec()),
        )?);
    }
    Ok(targets)
}

/// Trains a fresh autoencoder, initialized from `cfg.seed`, on
/// `cfg.variant`'s objective. Base scores and ideal DCGs are computed once
/// from `base` before training. The returned model scores rows from
/// features alone.
pub fn fit_fairod(ds: &LabeledDataset, base: &FitResult, cfg: &TrainConfig) -> Result<FitResult> {
    cfg.validate()?;
    let start = Instant::now();
    if base.params.input_dim() != ds.dim() {
        return Err(Error::dim(format!(
            "base model expects {} features, data has {}",
            base.params.input_dim(),
            ds.dim()
        )));
    }
    let spec = if cfg.variant == Variant::BaseOnly {
        let mut s = LossSpec::base_only();
        s.weights = cfg.weights();
        s
    } else {
        let base_scores = detector::score(&base.params, &ds.features)?;
        LossSpec {
            variant: cfg.variant,
            weights: cfg.weights(),
            targets: protected_targets(ds, &base_scores)?,
        }
    };
    let (params, trace) = optimize(&ds.features, &spec, cfg, cfg.seed)?;
    finish(&ds.features, cfg, cfg.variant, cfg.seed, params, trace, start)
}

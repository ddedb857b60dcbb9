use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use fairod_core::detector::Activation;
use fairod_core::evalmetrics::HmConvention;
use fairod_core::losses::{BaseReduction, SigmoidOrientation, Variant};
use fairod_core::training::{BatchMode, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "fairod", version, about = "Fairness-aware autoencoder outlier detection")]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

/// A fully resolved invocation. This is what manifests record.
#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "args", rename_all = "snake_case")]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Train a base or fairness-regularized model.
    Train(TrainArgs),
    /// Evaluate a trained model on a dataset.
    Eval(EvalArgs),
    /// Search the α × γ grid and pick a model on the Pareto frontier.
    Grid(GridArgs),
    /// Compare fairod with its relaxed variants and the base model.
    Ablate(AblateArgs),
    /// Check the parity claims on every small population.
    Claims(ClaimsArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Grid(_) => "grid",
            Command::Ablate(_) => "ablate",
            Command::Claims(_) => "claims",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthName {
    Synth1,
    Synth2,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub name: SynthName,
    /// Majority-group rows.
    #[arg(long, default_value_t = 2000)]
    pub major: usize,
    /// Minority-group rows.
    #[arg(long, default_value_t = 400)]
    pub minor: usize,
    /// Outlier rows, split across groups in proportion to their sizes.
    #[arg(long, default_value_t = 120)]
    pub outliers: usize,
    #[arg(long)]
    pub seed: u64,
    /// Standard deviation of inlier x1 (synth2 only).
    #[arg(long, default_value_t = 1.44)]
    pub x1_std: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// How CSV columns map to protected attributes and labels.
#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ColumnArgs {
    #[arg(long, default_value = "pv")]
    pub pv_column: String,
    /// Label column; `label` is used when present and this is not given.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Further protected attributes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub extra_pv_columns: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantArg {
    Base,
    Fairod,
    #[value(name = "fairod_l", alias = "fairod-l")]
    FairodL,
    #[value(name = "fairod_c", alias = "fairod-c")]
    FairodC,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Base => Variant::BaseOnly,
            VariantArg::Fairod => Variant::FairOd,
            VariantArg::FairodL => Variant::FairOdL,
            VariantArg::FairodC => Variant::FairOdC,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationArg {
    Increasing,
    Decreasing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationArg {
    Tanh,
    Relu,
    Sigmoid,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionArg {
    Sum,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HmArg {
    Standard,
    Literal,
}

impl From<HmArg> for HmConvention {
    fn from(h: HmArg) -> Self {
        match h {
            HmArg::Standard => HmConvention::Standard,
            HmArg::Literal => HmConvention::Literal,
        }
    }
}

/// Training hyperparameters shared by `train`, `grid` and `ablate`.
#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    /// Sigmoid scale of the smoothed ranks.
    #[arg(long, default_value_t = 50.0)]
    pub c: f64,
    #[arg(long, value_enum, default_value_t = OrientationArg::Increasing)]
    pub orientation: OrientationArg,
    /// Rescale scores to unit range inside the fidelity loss.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub unit_scale: bool,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    /// Minibatch size; 0 trains on all rows at once.
    #[arg(long, default_value_t = 0)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    pub flag_fraction: f64,
    /// Hidden width; 2 for up to 100 features, 8 above, when not given.
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long, value_enum, default_value_t = ActivationArg::Tanh)]
    pub activation: ActivationArg,
    #[arg(long, value_enum, default_value_t = ReductionArg::Mean)]
    pub base_reduction: ReductionArg,
    /// Initializations tried when training a base model.
    #[arg(long, default_value_t = 5)]
    pub base_seeds: usize,
}

impl ModelArgs {
    pub fn to_config(&self, variant: Variant, seed: u64) -> TrainConfig {
        TrainConfig {
            variant,
            alpha: self.alpha,
            gamma: self.gamma,
            c: self.c,
            orientation: match self.orientation {
                OrientationArg::Increasing => SigmoidOrientation::Increasing,
                OrientationArg::Decreasing => SigmoidOrientation::Decreasing,
            },
            unit_scale: self.unit_scale,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch: match self.batch_size {
                0 => BatchMode::Full,
                b => BatchMode::Minibatch(b),
            },
            flag_fraction: self.flag_fraction,
            seed,
            hidden_dim: self.hidden_dim,
            activation: match self.activation {
                ActivationArg::Tanh => Activation::Tanh,
                ActivationArg::Relu => Activation::Relu,
                ActivationArg::Sigmoid => Activation::Sigmoid,
                ActivationArg::Linear => Activation::Linear,
            },
            base_reduction: match self.base_reduction {
                ReductionArg::Sum => BaseReduction::Sum,
                ReductionArg::Mean => BaseReduction::Mean,
            },
            base_seeds: self.base_seeds,
        }
    }
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Fairod)]
    pub variant: VariantArg,
    /// Base model JSON; required for every variant except `base`.
    #[arg(long)]
    pub base: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Check that permuting the protected column leaves every score unchanged.
    #[arg(long)]
    pub verify_treatment_parity: bool,
    #[command(flatten)]
    pub columns: ColumnArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Reference model for group fidelity; the model itself when absent.
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// One-row CSV summary; defaults to the report path with a `.csv` extension.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Per-row scores as CSV.
    #[arg(long)]
    pub scores_out: Option<PathBuf>,
    /// Fraction flagged; the model's training value when absent.
    #[arg(long)]
    pub flag_fraction: Option<f64>,
    /// Top-k size for rank agreement; ⌈f·N⌉ when absent.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value_t = HmArg::Standard)]
    pub hm: HmArg,
    #[arg(long)]
    pub verify_treatment_parity: bool,
    #[command(flatten)]
    pub columns: ColumnArgs,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct GridArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub base: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Results table CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Selected model JSON; defaults to the table path with a `.selected.json` extension.
    #[arg(long)]
    pub selected: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = VariantArg::Fairod)]
    pub variant: VariantArg,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.5, 0.9])]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.1, 1.0])]
    pub gammas: Vec<f64>,
    /// Worker threads for grid cells.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub columns: ColumnArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub base: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Comparison CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.5, 0.9])]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.1, 1.0])]
    pub gammas: Vec<f64>,
    /// Train every variant at --alpha/--gamma instead of selecting per variant on the grid.
    #[arg(long)]
    pub fixed: bool,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub columns: ColumnArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ClaimsArgs {
    /// Largest population size enumerated.
    #[arg(long, default_value_t = 10)]
    pub max_n: usize,
    /// Verdict JSON; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

//! Training objectives.
//!
//! Every loss here is a function of the per-row score vector; each term
//! returns its value together with the gradient with respect to the scores,
//! which [`crate::numgrad::eval_loss_and_grad`] pushes back through the
//! autoencoder.

mod composite;
mod fidelity;
mod parity;

use serde::{Deserialize, Serialize};

pub use composite::{total_loss, LossBreakdown, LossSpec, ProtectedTarget};
pub use fidelity::{
    idcg_group, loss_gf, loss_gf_corr, smooth_rank, BaseScoreSet, RankSmoothing,
    SigmoidOrientation,
};
pub use parity::{loss_sp, pearson_abs_corr, pearson_abs_corr_grad};

pub(crate) use fidelity::gain;

use crate::detector::{self, AutoencoderParams};
use crate::error::{Error, Result};
use crate::numgrad::DenseMatrix;

/// Guard added to standard-deviation denominators.
pub const EPS: f64 = 1e-8;

/// A scalar loss term and its gradient with respect to the scores.
#[derive(Clone, Debug, PartialEq)]
pub struct TermValue {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Some input was degenerate (constant scores, single group, zero
    /// relevance) and contributed 0.
    pub degenerate: bool,
}

impl TermValue {
    pub fn zero(n: usize) -> Self {
        Self {
            value: 0.0,
            grad: vec![0.0; n],
            degenerate: false,
        }
    }

    pub fn degenerate(n: usize) -> Self {
        Self {
            degenerate: true,
            ..Self::zero(n)
        }
    }

    pub(crate) fn accumulate(&mut self, other: &TermValue, weight: f64) {
        self.value += weight * other.value;
        for (g, o) in self.grad.iter_mut().zip(&other.grad) {
            *g += weight * o;
        }
        self.degenerate |= other.degenerate;
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Reconstruction only.
    #[default]
    BaseOnly,
    /// Reconstruction, statistical parity and NDCG group fidelity.
    #[serde(rename = "fairod")]
    FairOd,
    /// Reconstruction and statistical parity only.
    #[serde(rename = "fairod_l")]
    FairOdL,
    /// Group fidelity replaced by per-group correlation with base scores.
    #[serde(rename = "fairod_c")]
    FairOdC,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::FairOd,
        Variant::FairOdL,
        Variant::FairOdC,
        Variant::BaseOnly,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::BaseOnly => "base",
            Variant::FairOd => "fairod",
            Variant::FairOdL => "fairod_l",
            Variant::FairOdC => "fairod_c",
        }
    }

    pub fn needs_base_scores(self) -> bool {
        matches!(self, Variant::FairOd | Variant::FairOdC)
    }

    pub fn uses_pv(self) -> bool {
        !matches!(self, Variant::BaseOnly)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" | "base_only" => Ok(Variant::BaseOnly),
            "fairod" => Ok(Variant::FairOd),
            "fairod_l" | "fairod-l" => Ok(Variant::FairOdL),
            "fairod_c" | "fairod-c" => Ok(Variant::FairOdC),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}

/// How the reconstruction term aggregates rows inside the composite loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseReduction {
    /// `Σ_i ‖x_i − G(x_i)‖²`
    Sum,
    /// The sum divided by the number of rows.
    #[default]
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Weight of reconstruction against parity, in `[0, 1]`.
    pub alpha: f64,
    /// Weight of the group-fidelity term, `≥ 0`.
    pub gamma: f64,
    pub smoothing: RankSmoothing,
    pub base_reduction: BaseReduction,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            gamma: 0.1,
            smoothing: RankSmoothing::default(),
            base_reduction: BaseReduction::default(),
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!("alpha {} not in [0, 1]", self.alpha)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma {} must be >= 0", self.gamma)));
        }
        if !(self.smoothing.c > 0.0 && self.smoothing.c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigmoid scale {} must be > 0",
                self.smoothing.c
            )));
        }
        Ok(())
    }
}

/// `Σ_i ‖x_i − G(x_i)‖²` over the batch.
pub fn loss_base(params: &AutoencoderParams, batch: &DenseMatrix) -> Result<f64> {
    Ok(detector::score(params, batch)?.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{init_params, AeConfig, Activation};

    #[test]
    fn base_loss_equals_sum_of_scores_and_brute_force() {
        let p = init_params(&AeConfig::for_input(3, 4)).unwrap();
        let x = DenseMatrix::from_vec(5, 3, (0..15).map(|i| (i as f64 * 0.9).cos()).collect())
            .unwrap();
        let l = loss_base(&p, &x).unwrap();
        let s: f64 = detector::score(&p, &x).unwrap().iter().sum();
        assert!((l - s).abs() < 1e-12);
        let recon = detector::reconstruct(&p, &x).unwrap();
        let brute: f64 = x
            .as_slice()
            .iter()
            .zip(recon.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!((l - brute).abs() < 1e-12);
    }

    #[test]
    fn perfect_reconstruction_has_zero_base_loss() {
        let mut p = AutoencoderParams::zeros(2, 2, Activation::Linear);
        for i in 0..2 {
            p.w_enc.set(i, i, 1.0);
            p.w_hid.set(i, i, 1.0);
            p.w_out.set(i, i, 1.0);
        }
        let x = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![0.5, 4.0]]).unwrap();
        assert_eq!(loss_base(&p, &x).unwrap(), 0.0);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("nope".parse::<Variant>().is_err());
    }
}

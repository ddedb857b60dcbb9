use serde::{Deserialize, Serialize};

use crate::dataset::{group_view, GroupView};
use crate::detector::{self, AutoencoderParams};
use crate::error::{Error, Result};
use crate::losses::{
    loss_gf, loss_gf_corr, loss_sp, BaseReduction, BaseScoreSet, LossWeights, TermValue, Variant,
};
use crate::numgrad::DenseMatrix;

/// One protected attribute as seen by the fairness terms.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtectedTarget {
    pub name: String,
    pub pv: Vec<u32>,
    pub groups: GroupView,
    pub base: Option<BaseScoreSet>,
}

impl ProtectedTarget {
    pub fn new(name: impl Into<String>, pv: Vec<u32>, base_scores: Option<Vec<f64>>) -> Result<Self> {
        let groups = group_view(&pv);
        let base = base_scores
            .map(|raw| BaseScoreSet::new(raw, &groups))
            .transpose()?;
        Ok(Self {
            name: name.into(),
            pv,
            groups,
            base,
        })
    }

    /// Restriction to `rows`; base normalization bounds are kept, ideal DCGs
    /// are recomputed for the subset.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let pv: Vec<u32> = rows.iter().map(|&i| self.pv[i]).collect();
        let groups = group_view(&pv);
        let base = self
            .base
            .as_ref()
            .map(|b| b.subset(rows, &groups))
            .transpose()?;
        Ok(Self {
            name: self.name.clone(),
            pv,
            groups,
            base,
        })
    }
}

/// A fully specified objective: variant, weights and the protected
/// attributes it regularizes against.
#[derive(Clone, Debug, PartialEq)]
pub struct LossSpec {
    pub variant: Variant,
    pub weights: LossWeights,
    pub targets: Vec<ProtectedTarget>,
}

/// Component values of one loss evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    /// Unweighted `Σ_i ‖x_i − G(x_i)‖²`.
    pub base: f64,
    pub sp: f64,
    pub gf: f64,
    pub degenerate: bool,
}

impl LossSpec {
    pub fn base_only() -> Self {
        Self {
            variant: Variant::BaseOnly,
            weights: LossWeights {
                base_reduction: BaseReduction::Sum,
                ..LossWeights::default()
            },
            targets: Vec::new(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.weights.validate()?;
        if self.variant.uses_pv() && self.targets.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "variant {} needs a protected attribute",
                self.variant
            )));
        }
        for t in &self.targets {
            if t.pv.len() != n {
                return Err(Error::dim(format!(
                    "{} has {} entries for {n} rows",
                    t.name,
                    t.pv.len()
                )));
            }
            if self.variant.needs_base_scores() {
                match &t.base {
                    None => return Err(Error::MissingBaseScores(self.variant.to_string())),
                    Some(b) if b.len() != n => {
                        return Err(Error::dim(format!(
                            "{} base scores for {n} rows",
                            b.len()
                        )))
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        Ok(Self {
            variant: self.variant,
            weights: self.weights,
            targets: self
                .targets
                .iter()
                .map(|t| t.subset(rows))
                .collect::<Result<_>>()?,
        })
    }

    /// Loss value and its gradient with respect to `scores`.
    pub fn evaluate_scores(&self, scores: &[f64]) -> Result<(LossBreakdown, Vec<f64>)> {
        let n = scores.len();
        self.validate(n)?;
        let w = &self.weights;
        let base_sum: f64 = scores.iter().sum();
        let base_scale = match w.base_reduction {
            BaseReduction::Sum => 1.0,
            BaseReduction::Mean => 1.0 / n.max(1) as f64,
        };
        let mut out = LossBreakdown {
            base: base_sum,
            ..LossBreakdown::default()
        };
        let base_weight = if self.variant == Variant::BaseOnly {
            1.0
        } else {
            w.alpha
        };
        let mut grad = vec![base_weight * base_scale; n];
        out.total = base_weight * base_scale * base_sum;
        if !out.total.is_finite() {
            return Err(Error::overflow("reconstruction loss"));
        }
        if self.variant == Variant::BaseOnly {
            return Ok((out, grad));
        }

        let mut sp = TermValue::zero(n);
        let mut gf = TermValue::zero(n);
        for t in &self.targets {
            sp.accumulate(&loss_sp(scores, &t.pv)?, 1.0);
            match self.variant {
                Variant::FairOd => {
                    let base = t.base.as_ref().expect("validated");
                    gf.accumulate(&loss_gf(scores, base, &t.groups, &w.smoothing)?, 1.0);
                }
                Variant::FairOdC => {
                    let base = t.base.as_ref().expect("validated");
                    gf.accumulate(&loss_gf_corr(scores, base, &t.groups)?, 1.0);
                }
                Variant::FairOdL | Variant::BaseOnly => {}
            }
        }
        if !sp.value.is_finite() {
            return Err(Error::overflow("statistical parity loss"));
        }
        if !gf.value.is_finite() {
            return Err(Error::overflow("group fidelity loss"));
        }
        out.sp = sp.value;
        out.gf = gf.value;
        out.degenerate = sp.degenerate || gf.degenerate;
        let gf_weight = match self.variant {
            Variant::FairOd | Variant::FairOdC => w.gamma,
            _ => 0.0,
        };
        out.total += (1.0 - w.alpha) * sp.value + gf_weight * gf.value;
        for ((g, s), f) in grad.iter_mut().zip(&sp.grad).zip(&gf.grad) {
            *g += (1.0 - w.alpha) * s + gf_weight * f;
        }
        Ok((out, grad))
    }
}

/// Composite objective evaluated on a batch.
pub fn total_loss(
    params: &AutoencoderParams,
    batch: &DenseMatrix,
    spec: &LossSpec,
) -> Result<LossBreakdown> {
    let scores = detector::score(params, batch)?;
    Ok(spec.evaluate_scores(&scores)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{init_params, AeConfig};
    use crate::losses::loss_base;

    fn batch() -> (AutoencoderParams, DenseMatrix, Vec<u32>) {
        let p = init_params(&AeConfig::for_input(3, 21)).unwrap();
        let x = DenseMatrix::from_vec(12, 3, (0..36).map(|i| (i as f64 * 1.7).sin() * 1.5).collect())
            .unwrap();
        let pv = (0..12).map(|i| (i % 3 == 0) as u32).collect();
        (p, x, pv)
    }

    fn spec(variant: Variant, alpha: f64, gamma: f64, pv: Vec<u32>, base: Option<Vec<f64>>) -> LossSpec {
        LossSpec {
            variant,
            weights: LossWeights {
                alpha,
                gamma,
                base_reduction: BaseReduction::Sum,
                ..LossWeights::default()
            },
            targets: vec![ProtectedTarget::new("pv", pv, base).unwrap()],
        }
    }

    #[test]
    fn alpha_one_gamma_zero_is_base_loss() {
        let (p, x, pv) = batch();
        let base = detector::score(&p, &x).unwrap();
        let s = spec(Variant::FairOd, 1.0, 0.0, pv, Some(base));
        let l = total_loss(&p, &x, &s).unwrap();
        assert_eq!(l.total, loss_base(&p, &x).unwrap());
    }

    #[test]
    fn fairod_l_equals_fairod_with_zero_gamma() {
        let (p, x, pv) = batch();
        let base = detector::score(&p, &x).unwrap();
        let a = total_loss(&p, &x, &spec(Variant::FairOdL, 0.3, 0.0, pv.clone(), None)).unwrap();
        let b = total_loss(&p, &x, &spec(Variant::FairOd, 0.3, 0.0, pv, Some(base))).unwrap();
        assert!((a.total - b.total).abs() < 1e-12);
    }

    #[test]
    fn terms_sum_as_weighted() {
        let (p, x, pv) = batch();
        let base = detector::score(&p, &x).unwrap();
        let s = spec(Variant::FairOd, 0.5, 0.0, pv.clone(), Some(base));
        let l = total_loss(&p, &x, &s).unwrap();
        let scores = detector::score(&p, &x).unwrap();
        let sp = loss_sp(&scores, &pv).unwrap().value;
        assert!((l.total - (0.5 * loss_base(&p, &x).unwrap() + 0.5 * sp)).abs() < 1e-12);
    }

    #[test]
    fn mean_reduction_divides_by_rows() {
        let (p, x, _) = batch();
        let mut s = LossSpec::base_only();
        s.weights.base_reduction = BaseReduction::Mean;
        let l = total_loss(&p, &x, &s).unwrap();
        assert!((l.total - loss_base(&p, &x).unwrap() / 12.0).abs() < 1e-12);
    }

    #[test]
    fn missing_base_scores_rejected() {
        let (p, x, pv) = batch();
        for v in [Variant::FairOd, Variant::FairOdC] {
            let s = spec(v, 0.5, 0.1, pv.clone(), None);
            assert!(matches!(total_loss(&p, &x, &s), Err(Error::MissingBaseScores(_))));
        }
        assert!(total_loss(&p, &x, &spec(Variant::FairOdL, 0.5, 0.1, pv, None)).is_ok());
    }
}

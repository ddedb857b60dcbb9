//! Dense arithmetic, exact loss gradients, finite-difference checking and
//! the Adam update.

mod adam;
mod matrix;

pub use adam::AdamState;
pub use matrix::DenseMatrix;

use crate::detector::AutoencoderParams;
use crate::error::{Error, Result};
use crate::losses::{LossBreakdown, LossSpec};

/// One gradient matrix per parameter tensor, in
/// [`AutoencoderParams::tensors`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub tensors: Vec<DenseMatrix>,
}

impl GradientSet {
    pub fn new(tensors: Vec<DenseMatrix>) -> Self {
        Self { tensors }
    }

    pub fn zeros_like(params: &AutoencoderParams) -> Self {
        Self::new(
            params
                .tensors()
                .iter()
                .map(|t| DenseMatrix::zeros(t.rows(), t.cols()))
                .collect(),
        )
    }

    pub fn ensure_finite(&self) -> Result<()> {
        for t in &self.tensors {
            t.ensure_finite("gradient")?;
        }
        Ok(())
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.tensors.iter().flat_map(|t| t.as_slice().iter().copied())
    }

    /// Largest entrywise `|a − b| / max(|a|, |b|, floor)`.
    pub fn max_relative_error(&self, other: &GradientSet, floor: f64) -> Result<f64> {
        if self.tensors.len() != other.tensors.len()
            || self
                .tensors
                .iter()
                .zip(&other.tensors)
                .any(|(a, b)| a.shape() != b.shape())
        {
            return Err(Error::dim("gradient sets differ in shape"));
        }
        Ok(self
            .values()
            .zip(other.values())
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
            .fold(0.0, f64::max))
    }
}

/// Loss breakdown and exact gradient of `spec` at `params` on `batch`.
///
/// Every loss is a function of the per-row scores, so the loss module
/// supplies `∂L/∂s` and the autoencoder backpropagates it.
pub fn eval_loss_and_grad(
    params: &AutoencoderParams,
    batch: &DenseMatrix,
    spec: &LossSpec,
) -> Result<(LossBreakdown, GradientSet)> {
    let cache = params.forward(batch)?;
    let scores = crate::detector::row_sq_norms(&cache.residual);
    let (loss, score_grad) = spec.evaluate_scores(&scores)?;
    if !loss.total.is_finite() {
        return Err(Error::overflow("total loss"));
    }
    let grads = params.backward(batch, &cache, &score_grad)?;
    Ok((loss, grads))
}

/// Central differences of a scalar function of a flat vector.
pub fn finite_diff(f: impl Fn(&[f64]) -> Result<f64>, theta: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("step h must be positive".into()));
    }
    let mut probe = theta.to_vec();
    let mut out = Vec::with_capacity(theta.len());
    for j in 0..theta.len() {
        probe[j] = theta[j] + h;
        let up = f(&probe)?;
        probe[j] = theta[j] - h;
        let down = f(&probe)?;
        probe[j] = theta[j];
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Central-difference estimate of the gradient of `spec`'s total loss.
pub fn finite_diff_grad(
    params: &AutoencoderParams,
    batch: &DenseMatrix,
    spec: &LossSpec,
    h: f64,
) -> Result<GradientSet> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("step h must be positive".into()));
    }
    let mut probe = params.clone();
    let mut grads = GradientSet::zeros_like(params);
    for t in 0..grads.tensors.len() {
        for j in 0..grads.tensors[t].as_slice().len() {
            let orig = params.tensors()[t].as_slice()[j];
            probe.tensors_mut()[t].as_mut_slice()[j] = orig + h;
            let up = crate::losses::total_loss(&probe, batch, spec)?.total;
            probe.tensors_mut()[t].as_mut_slice()[j] = orig - h;
            let down = crate::losses::total_loss(&probe, batch, spec)?.total;
            probe.tensors_mut()[t].as_mut_slice()[j] = orig;
            grads.tensors[t].as_mut_slice()[j] = (up - down) / (2.0 * h);
        }
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::Activation;

    #[test]
    fn quadratic_and_constant() {
        let g = finite_diff(|t| Ok(t[0] * t[0]), &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-6);
        let g = finite_diff(|_| Ok(4.2), &[1.0, -2.0, 0.5], 1e-5).unwrap();
        assert_eq!(g, vec![0.0; 3]);
        assert!(finite_diff(|t| Ok(t[0]), &[1.0], 0.0).is_err());
    }

    #[test]
    fn zero_net_on_zero_input_has_zero_loss_and_gradient() {
        let p = AutoencoderParams::zeros(3, 2, Activation::Tanh);
        let x = DenseMatrix::zeros(4, 3);
        let (loss, grads) = eval_loss_and_grad(&p, &x, &LossSpec::base_only()).unwrap();
        assert_eq!(loss.total, 0.0);
        assert!(grads.values().all(|g| g == 0.0));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let p = AutoencoderParams::zeros(3, 2, Activation::Tanh);
        let x = DenseMatrix::zeros(4, 2);
        assert!(matches!(
            eval_loss_and_grad(&p, &x, &LossSpec::base_only()),
            Err(Error::Dimension(_))
        ));
    }
}

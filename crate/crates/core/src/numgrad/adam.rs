use crate::detector::AutoencoderParams;
use crate::error::{Error, Result};
use crate::numgrad::{DenseMatrix, GradientSet};

/// Adam with bias correction. Owned by a single training run.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<DenseMatrix>,
    v: Vec<DenseMatrix>,
}

impl AdamState {
    /// Moments shaped like `shapes`, with β1 = 0.9, β2 = 0.999, ε = 1e-8.
    pub fn new(shapes: &[(usize, usize)], learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: shapes.iter().map(|&(r, c)| DenseMatrix::zeros(r, c)).collect(),
            v: shapes.iter().map(|&(r, c)| DenseMatrix::zeros(r, c)).collect(),
        }
    }

    pub fn for_params(params: &AutoencoderParams, learning_rate: f64) -> Self {
        let shapes: Vec<_> = params.tensors().iter().map(|t| t.shape()).collect();
        Self::new(&shapes, learning_rate)
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[DenseMatrix] {
        &self.m
    }

    pub fn second_moments(&self) -> &[DenseMatrix] {
        &self.v
    }

    pub fn step(&mut self, params: &mut AutoencoderParams, grads: &GradientSet) -> Result<()> {
        self.step_tensors(params.tensors_mut().as_mut_slice(), &grads.tensors)
    }

    pub fn step_tensors(&mut self, params: &mut [&mut DenseMatrix], grads: &[DenseMatrix]) -> Result<()> {
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::InvalidArgument("Adam betas must lie in (0, 1)".into()));
        }
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::dim(format!(
                "Adam state has {} tensors, got {} params and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.shape() != m.shape() || g.shape() != m.shape() {
                return Err(Error::dim("Adam tensor shape mismatch"));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for (((pi, &gi), mi), vi) in p
                .as_mut_slice()
                .iter_mut()
                .zip(g.as_slice())
                .zip(m.as_mut_slice())
                .zip(v.as_mut_slice())
            {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *pi -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
            }
            p.ensure_finite("Adam update")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DenseMatrix {
        DenseMatrix::from_vec(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut st = AdamState::new(&[(1, 1)], 0.1);
        let mut theta = scalar(0.0);
        st.step_tensors(&mut [&mut theta], &[scalar(1.0)]).unwrap();
        // m̂ = 1, v̂ = 1 → θ = −0.1 / (1 + 1e-8)
        assert!((theta.get(0, 0) + 0.1).abs() < 1e-8);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let mut st = AdamState::new(&[(1, 1)], 0.1);
        let mut theta = scalar(0.5);
        st.step_tensors(&mut [&mut theta], &[scalar(2.0)]).unwrap();
        let m1 = st.first_moments()[0].get(0, 0);
        let after_first = theta.get(0, 0);
        // m̂/√v̂ is no longer zero after a nonzero step, so reset a fresh state
        let mut fresh = AdamState::new(&[(1, 1)], 0.1);
        let mut still = scalar(0.5);
        for _ in 0..3 {
            fresh.step_tensors(&mut [&mut still], &[scalar(0.0)]).unwrap();
        }
        assert_eq!(still.get(0, 0), 0.5);
        st.step_tensors(&mut [&mut theta], &[scalar(0.0)]).unwrap();
        assert!(st.first_moments()[0].get(0, 0).abs() < m1.abs());
        assert!(theta.get(0, 0) < after_first);
    }

    #[test]
    fn constant_gradient_moves_monotonically() {
        let mut st = AdamState::new(&[(1, 1)], 0.01);
        let mut theta = scalar(0.0);
        let mut prev = 0.0;
        for _ in 0..10 {
            st.step_tensors(&mut [&mut theta], &[scalar(2.5)]).unwrap();
            let now = theta.get(0, 0);
            assert!(now < prev);
            prev = now;
        }
        // with a constant gradient every bias-corrected step is ≈ lr
        assert!((prev + 0.1).abs() < 1e-6);
    }

    #[test]
    fn deterministic_and_shape_checked() {
        let run = || {
            let mut st = AdamState::new(&[(1, 2)], 0.05);
            let mut p = DenseMatrix::from_vec(1, 2, vec![1.0, -1.0]).unwrap();
            let g = DenseMatrix::from_vec(1, 2, vec![0.3, -0.7]).unwrap();
            st.step_tensors(&mut [&mut p], &[g]).unwrap();
            (p, st)
        };
        assert_eq!(run(), run());
        let mut st = AdamState::new(&[(1, 2)], 0.05);
        let mut p = scalar(0.0);
        assert!(st.step_tensors(&mut [&mut p], &[scalar(1.0)]).is_err());
    }
}

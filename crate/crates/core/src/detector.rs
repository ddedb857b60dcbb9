//! Autoencoder base detector.
//!
//! Layout is encoder `d → m` followed by decoder `m → m → d`: two hidden
//! layers (the code and one decoder layer), linear output. The outlier score
//! of a row is its squared reconstruction error `‖x − G(x)‖²`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numgrad::{DenseMatrix, GradientSet};

/// Hidden-unit nonlinearity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
    Sigmoid,
    /// Identity; only useful for pass-through checks.
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation output `y = f(x)`
    /// (and the pre-activation for relu).
    #[inline]
    fn derivative(self, pre: f64, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Linear => 1.0,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Self::Tanh),
            "relu" => Ok(Self::Relu),
            "sigmoid" => Ok(Self::Sigmoid),
            "linear" => Ok(Self::Linear),
            other => Err(Error::InvalidArgument(format!("unknown activation {other:?}"))),
        }
    }
}

/// Hidden width: 2 for `d ≤ 100`, 8 otherwise.
pub fn hidden_size_rule(input_dim: usize) -> usize {
    if input_dim <= 100 {
        2
    } else {
        8
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AeConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl AeConfig {
    /// Config with the hidden width taken from [`hidden_size_rule`].
    pub fn for_input(input_dim: usize, seed: u64) -> Self {
        Self {
            input_dim,
            hidden_dim: hidden_size_rule(input_dim),
            activation: Activation::Tanh,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidArgument(
                "input and hidden dimensions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Weights and biases of the three affine maps. Biases are `1 x n` rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ParamsDocument", try_from = "ParamsDocument")]
pub struct AutoencoderParams {
    pub activation: Activation,
    pub w_enc: DenseMatrix,
    pub b_enc: DenseMatrix,
    pub w_hid: DenseMatrix,
    pub b_hid: DenseMatrix,
    pub w_out: DenseMatrix,
    pub b_out: DenseMatrix,
}

pub const TENSOR_NAMES: [&str; 6] = ["w_enc", "b_enc", "w_hid", "b_hid", "w_out", "b_out"];

/// Glorot-uniform weights, zero biases, deterministic in `cfg.seed`.
pub fn init_params(cfg: &AeConfig) -> Result<AutoencoderParams> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (d, m) = (cfg.input_dim, cfg.hidden_dim);
    let mut glorot = |fan_in: usize, fan_out: usize| {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        DenseMatrix::from_vec(fan_in, fan_out, data)
    };
    Ok(AutoencoderParams {
        activation: cfg.activation,
        w_enc: glorot(d, m)?,
        b_enc: DenseMatrix::zeros(1, m),
        w_hid: glorot(m, m)?,
        b_hid: DenseMatrix::zeros(1, m),
        w_out: glorot(m, d)?,
        b_out: DenseMatrix::zeros(1, d),
    })
}

/// Intermediate activations kept for the backward pass.
pub(crate) struct ForwardCache {
    pub z1: DenseMatrix,
    pub h1: DenseMatrix,
    pub z2: DenseMatrix,
    pub h2: DenseMatrix,
    /// `x − G(x)`
    pub residual: DenseMatrix,
}

impl AutoencoderParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize, activation: Activation) -> Self {
        Self {
            activation,
            w_enc: DenseMatrix::zeros(input_dim, hidden_dim),
            b_enc: DenseMatrix::zeros(1, hidden_dim),
            w_hid: DenseMatrix::zeros(hidden_dim, hidden_dim),
            b_hid: DenseMatrix::zeros(1, hidden_dim),
            w_out: DenseMatrix::zeros(hidden_dim, input_dim),
            b_out: DenseMatrix::zeros(1, input_dim),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_enc.rows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_enc.cols()
    }

    pub fn tensors(&self) -> [&DenseMatrix; 6] {
        [
            &self.w_enc,
            &self.b_enc,
            &self.w_hid,
            &self.b_hid,
            &self.w_out,
            &self.b_out,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut DenseMatrix; 6] {
        [
            &mut self.w_enc,
            &mut self.b_enc,
            &mut self.w_hid,
            &mut self.b_hid,
            &mut self.w_out,
            &mut self.b_out,
        ]
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.as_slice().len()).sum()
    }

    fn check_shapes(&self) -> Result<()> {
        let (d, m) = (self.input_dim(), self.hidden_dim());
        let expected = [(d, m), (1, m), (m, m), (1, m), (m, d), (1, d)];
        for ((t, want), name) in self.tensors().iter().zip(expected).zip(TENSOR_NAMES) {
            if t.shape() != want {
                return Err(Error::dim(format!(
                    "{name} is {:?}, expected {want:?}",
                    t.shape()
                )));
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &DenseMatrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::dim(format!(
                "input has {} columns, autoencoder expects {}",
                x.cols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub(crate) fn forward(&self, x: &DenseMatrix) -> Result<ForwardCache> {
        self.check_input(x)?;
        let act = self.activation;
        let mut z1 = x.matmul(&self.w_enc)?;
        z1.add_row_broadcast(&self.b_enc)?;
        let h1 = z1.map(|v| act.apply(v));
        let mut z2 = h1.matmul(&self.w_hid)?;
        z2.add_row_broadcast(&self.b_hid)?;
        let h2 = z2.map(|v| act.apply(v));
        let mut out = h2.matmul(&self.w_out)?;
        out.add_row_broadcast(&self.b_out)?;
        out.ensure_finite("reconstruction")?;
        let residual = DenseMatrix::from_vec(
            x.rows(),
            x.cols(),
            x.as_slice()
                .iter()
                .zip(out.as_slice())
                .map(|(a, b)| a - b)
                .collect(),
        )?;
        Ok(ForwardCache {
            z1,
            h1,
            z2,
            h2,
            residual,
        })
    }

    /// Gradient of a scalar loss with respect to every parameter, given the
    /// loss gradient with respect to the per-row scores.
    pub(crate) fn backward(
        &self,
        x: &DenseMatrix,
        cache: &ForwardCache,
        score_grad: &[f64],
    ) -> Result<GradientSet> {
        let act = self.activation;
        let d = x.cols();
        // ∂s_i/∂out_ij = −2 (x_ij − out_ij)
        let mut d_out = cache.residual.clone();
        for (row, &g) in d_out.as_mut_slice().chunks_exact_mut(d).zip(score_grad) {
            for v in row.iter_mut() {
                *v *= -2.0 * g;
            }
        }
        let g_w_out = cache.h2.t_matmul(&d_out)?;
        let g_b_out = d_out.column_sums();

        let mut d_z2 = d_out.matmul_t(&self.w_out)?;
        for ((g, &pre), &y) in d_z2
            .as_mut_slice()
            .iter_mut()
            .zip(cache.z2.as_slice())
            .zip(cache.h2.as_slice())
        {
            *g *= act.derivative(pre, y);
        }
        let g_w_hid = cache.h1.t_matmul(&d_z2)?;
        let g_b_hid = d_z2.column_sums();

        let mut d_z1 = d_z2.matmul_t(&self.w_hid)?;
        for ((g, &pre), &y) in d_z1
            .as_mut_slice()
            .iter_mut()
            .zip(cache.z1.as_slice())
            .zip(cache.h1.as_slice())
        {
            *g *= act.derivative(pre, y);
        }
        let g_w_enc = x.t_matmul(&d_z1)?;
        let g_b_enc = d_z1.column_sums();

        let grads = GradientSet::new(vec![g_w_enc, g_b_enc, g_w_hid, g_b_hid, g_w_out, g_b_out]);
        grads.ensure_finite()?;
        Ok(grads)
    }

    /// Flat JSON-friendly document: shape header plus row-major values.
    pub fn to_document(&self) -> ParamsDocument {
        ParamsDocument {
            input_dim: self.input_dim(),
            hidden_dim: self.hidden_dim(),
            activation: self.activation,
            tensors: self
                .tensors()
                .iter()
                .zip(TENSOR_NAMES)
                .map(|(t, name)| TensorDocument {
                    name: name.to_string(),
                    rows: t.rows(),
                    cols: t.cols(),
                    values: t.as_slice().to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &ParamsDocument) -> Result<Self> {
        let mut params = Self::zeros(doc.input_dim, doc.hidden_dim, doc.activation);
        if doc.tensors.len() != TENSOR_NAMES.len() {
            return Err(Error::Schema(format!(
                "expected {} tensors, found {}",
                TENSOR_NAMES.len(),
                doc.tensors.len()
            )));
        }
        for (slot, t) in params.tensors_mut().into_iter().zip(&doc.tensors) {
            *slot = DenseMatrix::from_vec(t.rows, t.cols, t.values.clone())?;
        }
        params.check_shapes()?;
        Ok(params)
    }
}

impl From<AutoencoderParams> for ParamsDocument {
    fn from(p: AutoencoderParams) -> Self {
        p.to_document()
    }
}

impl TryFrom<ParamsDocument> for AutoencoderParams {
    type Error = Error;

    fn try_from(doc: ParamsDocument) -> Result<Self> {
        Self::from_document(&doc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorDocument {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsDocument {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub activation: Activation,
    pub tensors: Vec<TensorDocument>,
}

/// Forward pass `G(x)`.
pub fn reconstruct(params: &AutoencoderParams, x: &DenseMatrix) -> Result<DenseMatrix> {
    let cache = params.forward(x)?;
    let data = x
        .as_slice()
        .iter()
        .zip(cache.residual.as_slice())
        .map(|(a, r)| a - r)
        .collect();
    DenseMatrix::from_vec(x.rows(), x.cols(), data)
}

/// Per-row squared reconstruction error.
pub fn score(params: &AutoencoderParams, x: &DenseMatrix) -> Result<Vec<f64>> {
    let cache = params.forward(x)?;
    Ok(row_sq_norms(&cache.residual))
}

pub(crate) fn row_sq_norms(m: &DenseMatrix) -> Vec<f64> {
    m.as_slice()
        .chunks_exact(m.cols().max(1))
        .map(|r| r.iter().map(|v| v * v).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hidden_rule_boundaries() {
        assert_eq!(hidden_size_rule(2), 2);
        assert_eq!(hidden_size_rule(100), 2);
        assert_eq!(hidden_size_rule(101), 8);
        assert_eq!(hidden_size_rule(1549), 8);
    }

    #[test]
    fn init_is_seeded_and_within_glorot_bound() {
        let cfg = AeConfig::for_input(5, 11);
        let a = init_params(&cfg).unwrap();
        let b = init_params(&cfg).unwrap();
        assert_eq!(a, b);
        let c = init_params(&AeConfig { seed: 12, ..cfg.clone() }).unwrap();
        assert_ne!(a, c);
        let bound_enc = (6.0f64 / 7.0).sqrt();
        assert!(a.w_enc.max_abs() <= bound_enc);
        assert!(a.w_hid.max_abs() <= (6.0f64 / 4.0).sqrt());
        assert_eq!(a.b_enc.max_abs(), 0.0);
        assert_eq!(a.b_out.max_abs(), 0.0);
    }

    #[test]
    fn zero_net_reconstructs_zero() {
        let p = AutoencoderParams::zeros(3, 2, Activation::Tanh);
        let x = DenseMatrix::from_rows(&[vec![1., 2., 3.], vec![-1., 0., 4.]]).unwrap();
        assert!(reconstruct(&p, &x).unwrap().as_slice().iter().all(|&v| v == 0.0));
    }

    fn pass_through(d: usize) -> AutoencoderParams {
        let mut p = AutoencoderParams::zeros(d, d, Activation::Linear);
        for i in 0..d {
            p.w_enc.set(i, i, 1.0);
            p.w_hid.set(i, i, 1.0);
            p.w_out.set(i, i, 1.0);
        }
        p
    }

    #[test]
    fn pass_through_net_reconstructs_exactly() {
        let p = pass_through(3);
        let x = DenseMatrix::from_rows(&[vec![1.5, -2., 3.25], vec![0.1, 0.2, 0.3]]).unwrap();
        assert_eq!(reconstruct(&p, &x).unwrap(), x);
        assert_eq!(score(&p, &x).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn score_hand_value() {
        let p = AutoencoderParams::zeros(2, 2, Activation::Tanh);
        let x = DenseMatrix::from_rows(&[vec![1., 1.]]).unwrap();
        assert_eq!(score(&p, &x).unwrap(), vec![2.0]);
    }

    #[test]
    fn batch_scores_match_row_scores() {
        let p = init_params(&AeConfig::for_input(4, 3)).unwrap();
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|i| (0..4).map(|j| ((i * 4 + j) as f64 * 0.37).sin() * 2.0).collect())
            .collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let batch = score(&p, &x).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let single = score(&p, &DenseMatrix::from_rows(&[r.clone()]).unwrap()).unwrap();
            assert!((single[0] - batch[i]).abs() <= 1e-12);
            assert!(batch[i] >= 0.0);
        }
    }

    #[test]
    fn wrong_width_is_a_dimension_error() {
        let p = AutoencoderParams::zeros(3, 2, Activation::Tanh);
        let x = DenseMatrix::zeros(2, 4);
        assert!(matches!(score(&p, &x), Err(Error::Dimension(_))));
    }

    #[test]
    fn document_round_trip() {
        let p = init_params(&AeConfig::for_input(3, 9)).unwrap();
        let json = serde_json::to_string(&p.to_document()).unwrap();
        let doc: ParamsDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(AutoencoderParams::from_document(&doc).unwrap(), p);
    }
}

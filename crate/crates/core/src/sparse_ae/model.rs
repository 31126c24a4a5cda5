use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::{Error, Result};

/// Layer widths of the autoencoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AeDims {
    /// Input and output size, `p·q`.
    pub input: usize,
    pub latent: usize,
    pub h2: usize,
    pub h3: usize,
}

impl AeDims {
    pub fn new(input: usize, latent: usize, h2: usize, h3: usize) -> Result<Self> {
        let d = AeDims {
            input,
            latent,
            h2,
            h3,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.latent == 0 || self.h2 == 0 || self.h3 == 0 {
            return Err(Error::invalid(format!("zero-sized layer in {self:?}")));
        }
        Ok(())
    }

    /// `(rows, cols)` of the four weight matrices, input to output.
    pub fn weight_shapes(&self) -> [(usize, usize); 4] {
        [
            (self.latent, self.input),
            (self.h2, self.latent),
            (self.h3, self.h2),
            (self.input, self.h3),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.weight_shapes().iter().map(|&(r, c)| r * c + r).sum()
    }

    /// Offsets of each layer's weights and bias in the flat parameter vector.
    /// The canonical order is `W1, b1, W2, b2, W3, b3, W4, b4`, weights
    /// row-major (`W[r][c]` at `r·cols + c`).
    pub(crate) fn offsets(&self) -> [(usize, usize); 4] {
        let mut out = [(0, 0); 4];
        let mut at = 0;
        for (k, &(r, c)) in self.weight_shapes().iter().enumerate() {
            out[k] = (at, at + r * c);
            at += r * c + r;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-a).exp()),
            Activation::Tanh => a.tanh(),
            Activation::Linear => a,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Tanh => 1,
            Activation::Linear => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Sigmoid),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Linear),
            _ => None,
        }
    }
}

/// Borrowed view of one dense layer.
#[derive(Debug, Clone, Copy)]
pub struct LayerView<'a> {
    pub rows: usize,
    pub cols: usize,
    pub weights: &'a [f64],
    pub bias: &'a [f64],
    pub activation: Activation,
}

impl LayerView<'_> {
    /// `out[r] = act(b[r] + Σ_c W[r][c]·input[c])`
    pub fn forward_into(&self, input: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            let a = self.bias[r] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            *o = self.activation.apply(a);
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.forward_into(input, &mut out);
        out
    }
}

/// Encoder and decoder parameters, stored as one flat vector in the
/// canonical order described on [`AeDims::offsets`].
#[derive(Debug, Clone, PartialEq)]
pub struct AeModel {
    pub dims: AeDims,
    /// Activations of the two decoder hidden layers. The encoder is always
    /// sigmoid and the output layer always linear.
    pub hidden_activations: [Activation; 2],
    pub config: TrainConfig,
    params: Vec<f64>,
}

impl AeModel {
    /// Builds a model from raw parameters; `params.len()` must equal
    /// `dims.param_count()` and every entry must be finite.
    pub fn from_params(
        dims: AeDims,
        hidden_activations: [Activation; 2],
        config: TrainConfig,
        params: Vec<f64>,
    ) -> Result<Self> {
        dims.validate()?;
        if params.len() != dims.param_count() {
            return Err(Error::DimensionMismatch {
                expected: dims.param_count(),
                actual: params.len(),
            });
        }
        if let Some(k) = params.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("parameter {k} is not finite")));
        }
        Ok(AeModel {
            dims,
            hidden_activations,
            config,
            params,
        })
    }

    /// A model with every weight and bias zero.
    pub fn zeros(dims: AeDims) -> Result<Self> {
        dims.validate()?;
        Ok(AeModel {
            dims,
            hidden_activations: [Activation::Sigmoid; 2],
            config: TrainConfig {
                latent: dims.latent,
                decoder_hidden: (dims.h2, dims.h3),
                ..TrainConfig::default()
            },
            params: vec![0.0; dims.param_count()],
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn set_params(&mut self, params: Vec<f64>) {
        debug_assert_eq!(params.len(), self.params.len());
        self.params = params;
    }

    pub fn activations(&self) -> [Activation; 4] {
        [
            Activation::Sigmoid,
            self.hidden_activations[0],
            self.hidden_activations[1],
            Activation::Linear,
        ]
    }

    /// Layer `k` (0 = encoder, 3 = output).
    pub fn layer(&self, k: usize) -> LayerView<'_> {
        layer_view(&self.dims, self.activations(), &self.params, k)
    }

    /// Mutable weights and bias of layer `k`.
    pub fn layer_mut(&mut self, k: usize) -> (&mut [f64], &mut [f64]) {
        let (w, b) = self.dims.offsets()[k];
        let rows = self.dims.weight_shapes()[k].0;
        let (head, tail) = self.params.split_at_mut(b);
        (&mut head[w..], &mut tail[..rows])
    }

    pub fn enc_weights(&self) -> &[f64] {
        self.layer(0).weights
    }

    pub fn enc_bias(&self) -> &[f64] {
        self.layer(0).bias
    }

    pub fn out_weights(&self) -> &[f64] {
        self.layer(3).weights
    }

    pub fn out_bias(&self) -> &[f64] {
        self.layer(3).bias
    }
}

pub(crate) fn layer_view<'a>(
    dims: &AeDims,
    acts: [Activation; 4],
    params: &'a [f64],
    k: usize,
) -> LayerView<'a> {
    let (rows, cols) = dims.weight_shapes()[k];
    let (w, b) = dims.offsets()[k];
    LayerView {
        rows,
        cols,
        weights: &params[w..b],
        bias: &params[b..b + rows],
        activation: acts[k],
    }
}

/// Uniform `[-r, r]` weights with `r = sqrt(6 / (fan_in + fan_out))` and
/// zero biases, drawn from a ChaCha8 stream seeded with `seed`.
pub fn init_model(dims: AeDims, seed: u64) -> Result<AeModel> {
    let mut model = AeModel::zeros(dims)?;
    model.config.seed = seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..4 {
        let (rows, cols) = dims.weight_shapes()[k];
        let r = (6.0 / (rows + cols) as f64).sqrt();
        let (w, _) = model.layer_mut(k);
        for v in w.iter_mut() {
            *v = rng.random_range(-r..=r);
        }
    }
    Ok(model)
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Latent code `sigmoid(W1·x + b1)`.
pub fn encode(m: &AeModel, x: &[f64]) -> Result<Vec<f64>> {
    check_len(m.dims.input, x.len())?;
    Ok(m.layer(0).forward(x))
}

/// Reconstruction from a latent code through the two hidden layers and the
/// linear output layer.
pub fn decode(m: &AeModel, z: &[f64]) -> Result<Vec<f64>> {
    check_len(m.dims.latent, z.len())?;
    let z2 = m.layer(1).forward(z);
    let z3 = m.layer(2).forward(&z2);
    Ok(m.layer(3).forward(&z3))
}

pub fn reconstruct(m: &AeModel, x: &[f64]) -> Result<Vec<f64>> {
    decode(m, &encode(m, x)?)
}

/// Mean squared pixel error between `x` and its reconstruction.
pub fn reconstruction_mse(m: &AeModel, x: &[f64]) -> Result<f64> {
    let xhat = reconstruct(m, x)?;
    Ok(mse(x, &xhat))
}

pub(crate) fn mse(x: &[f64], xhat: &[f64]) -> f64 {
    x.iter().zip(xhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64
}

//! Sparse autoencoder over normalized histogram images.
//!
//! Architecture, for an input of `D = p·q` pixels:
//!
//! ```text
//! z   = sigmoid(W1·x + b1)          latent, L units
//! z2  = φ2(W2·z + b2)               decoder hidden, h2 units
//! z3  = φ3(W3·z2 + b3)              decoder hidden, h3 units
//! x̂   = W4·z3 + b4                  linear output, D units
//! ```
//!
//! The training objective is
//! `mse + β·Σ_j KL(ρ ‖ ρ̂_j) + λ·½·Σ W²`, where `ρ̂_j` is the batch-mean
//! activation of latent unit `j` and biases are not regularized.

mod format;
mod loss;
mod model;
mod train;

pub use format::{load_model, load_model_file, save_model, save_model_file, MODEL_MAGIC, MODEL_VERSION};
pub use loss::{gradient, loss, loss_and_gradient, LossBreakdown};
pub use model::{
    decode, encode, init_model, reconstruct, reconstruction_mse, Activation, AeDims, AeModel,
    LayerView,
};
pub use train::{train, train_with_report, TrainConfig, TrainReport};

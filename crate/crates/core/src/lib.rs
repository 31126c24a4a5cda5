//! Detection of spoofed satellite downlink transmissions from raw IQ samples.
//!
//! The pipeline turns fixed-size chunks of complex baseband samples into
//! grayscale constellation histograms, reconstructs them with a sparse
//! autoencoder trained only on legitimate traffic, and flags a chunk as
//! spoofed when its reconstruction error exceeds `mean + 3·std` of the
//! training errors.
//!
//! ```
//! use spoofguard::chansim::{gen_dqpsk_chunk, ChannelParams};
//! use spoofguard::imaging::{make_histogram, normalize_image, GridSpec};
//!
//! let chunk = gen_dqpsk_chunk(&ChannelParams::legitimate(0.05, 7), 1000).unwrap();
//! let image = make_histogram(&chunk, &GridSpec::square(32, 1.5).unwrap()).unwrap();
//! let x = normalize_image(&image);
//! assert_eq!(x.len(), 32 * 32);
//! ```
//!
//! Modules, in pipeline order:
//!
//! * [`iq`]: capture parsing, chunking and the geometric SNR statistic.
//! * [`imaging`]: histogram images and PGM export.
//! * [`sparse_ae`]: the autoencoder, its loss and gradient, training and persistence.
//! * [`lbfgs`]: the quasi-Newton optimizer used for training.
//! * [`detector`]: threshold fitting and classification.
//! * [`evalkit`]: ROC AUC, K-fold evaluation, SNR overlap and overhead timing.
//! * [`chansim`]: a synthetic DQPSK channel for desk-scale experiments.
//!
//! The guide under `book/` walks through each stage; its code listings are
//! compiled and run as doc-tests of this crate.

pub mod chansim;
pub mod detector;
mod error;
pub mod evalkit;
pub mod imaging;
pub mod iq;
pub mod lbfgs;
pub mod sparse_ae;

pub use error::{Error, Result};

// Book chapters are doc-tested so the guide never drifts from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/iq-and-snr.md")]
    mod iq_and_snr {}
    #[doc = include_str!("../../../book/src/histogram-images.md")]
    mod histogram_images {}
    #[doc = include_str!("../../../book/src/sparse-autoencoder.md")]
    mod sparse_autoencoder {}
    #[doc = include_str!("../../../book/src/threshold.md")]
    mod threshold {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

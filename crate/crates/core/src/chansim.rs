//! Synthetic DQPSK downlink for desk-scale experiments.
//!
//! Symbols are drawn uniformly from the four QPSK points at 45°, 135°, 225°
//! and 315° on a circle of radius `amplitude`. Each sample is then passed
//! through an optional per-sample Rician gain, a Gaussian phase jitter and
//! additive white Gaussian noise on both axes. Differential encoding is not
//! modelled: only the symbol geometry reaches the histogram.
//!
//! A spoofer is modelled as the same constellation with a noisier channel;
//! this is a stand-in construction, not a model of orbital propagation.

use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::iq::{Capture, CaptureMeta, IqChunk, IqFileFormat, IqSample, Label};
use crate::{Error, Result};

/// Spoofer noise relative to the legitimate channel in the default pairing.
pub const SPOOF_NOISE_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Standard deviation of the Gaussian noise on each axis.
    pub noise_sigma: f64,
    /// Constellation radius.
    pub amplitude: f64,
    /// Rician K-factor; `f64::INFINITY` disables fading.
    pub fading_k: f64,
    /// Standard deviation of the phase jitter, radians.
    pub phase_jitter: f64,
    pub seed: u64,
}

impl ChannelParams {
    /// Unit-radius constellation with AWGN only.
    pub fn legitimate(noise_sigma: f64, seed: u64) -> Self {
        ChannelParams {
            noise_sigma,
            amplitude: 1.0,
            fading_k: f64::INFINITY,
            phase_jitter: 0.0,
            seed,
        }
    }

    /// The default spoofer paired with a legitimate channel of noise
    /// `legit_sigma`: three times the noise, same geometry.
    pub fn spoofer(legit_sigma: f64, seed: u64) -> Self {
        ChannelParams::legitimate(SPOOF_NOISE_FACTOR * legit_sigma, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::invalid("noise_sigma must be finite and >= 0"));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::invalid("amplitude must be finite and > 0"));
        }
        if !(self.phase_jitter >= 0.0 && self.phase_jitter.is_finite()) {
            return Err(Error::invalid("phase_jitter must be finite and >= 0"));
        }
        if self.fading_k.is_nan() || self.fading_k < 0.0 {
            return Err(Error::invalid("fading_k must be >= 0 (or infinite)"));
        }
        Ok(())
    }
}

/// The four constellation points for a given radius.
pub fn constellation(amplitude: f64) -> [(f64, f64); 4] {
    std::array::from_fn(|k| {
        let a = FRAC_PI_4 * (2 * k + 1) as f64;
        (amplitude * a.cos(), amplitude * a.sin())
    })
}

/// Draws `n` samples through the channel described by `p`. The output is a
/// pure function of `(p, n)`.
pub fn gen_dqpsk_chunk(p: &ChannelParams, n: usize) -> Result<IqChunk> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let noise = Normal::new(0.0, p.noise_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let jitter = Normal::new(0.0, p.phase_jitter).map_err(|e| Error::invalid(e.to_string()))?;
    let points = constellation(p.amplitude);
    let (los, scatter) = if p.fading_k.is_finite() {
        let k = p.fading_k;
        ((k / (k + 1.0)).sqrt(), (1.0 / (2.0 * (k + 1.0))).sqrt())
    } else {
        (1.0, 0.0)
    };

    let samples = (0..n)
        .map(|_| {
            let (mut i, mut q) = points[rng.random_range(0..4)];
            if p.fading_k.is_finite() {
                let hr: f64 = los + scatter * rng.sample::<f64, _>(StandardNormal);
                let hi: f64 = scatter * rng.sample::<f64, _>(StandardNormal);
                (i, q) = (hr * i - hi * q, hr * q + hi * i);
            }
            if p.phase_jitter > 0.0 {
                let (s, c) = jitter.sample(&mut rng).sin_cos();
                (i, q) = (c * i - s * q, c * q + s * i);
            }
            i += noise.sample(&mut rng);
            q += noise.sample(&mut rng);
            IqSample::new(i as f32, q as f32)
        })
        .collect();
    IqChunk::new(samples, Label::Unknown, "")
}

/// SplitMix64 finalizer, used to spread a master seed over chunk indices.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Labelled chunks of both classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub legit: Vec<IqChunk>,
    pub spoof: Vec<IqChunk>,
}

fn gen_class(p: &ChannelParams, count: usize, n: usize, label: Label, tag: &str) -> Result<Vec<IqChunk>> {
    (0..count)
        .into_par_iter()
        .map(|k| {
            let params = ChannelParams {
                seed: derive_seed(p.seed, k as u64),
                ..*p
            };
            let mut c = gen_dqpsk_chunk(&params, n)?;
            c.label = label;
            c.source_id = format!("{tag}_{k:05}");
            Ok(c)
        })
        .collect()
}

/// `chunks_per_class` chunks of `n` samples per class; chunk `k` of a class
/// is seeded with `derive_seed(class.seed, k)`.
pub fn gen_dataset(
    legit: &ChannelParams,
    spoof: &ChannelParams,
    chunks_per_class: usize,
    n: usize,
) -> Result<Dataset> {
    if chunks_per_class == 0 {
        return Err(Error::invalid("chunks_per_class must be at least 1"));
    }
    if n == 0 {
        return Err(Error::invalid("chunk size must be at least 1"));
    }
    Ok(Dataset {
        legit: gen_class(legit, chunks_per_class, n, Label::Legitimate, "legit")?,
        spoof: gen_class(spoof, chunks_per_class, n, Label::Spoofed, "spoof")?,
    })
}

impl Dataset {
    /// Writes one `<source_id>.iq` capture plus `.meta` sidecar per chunk.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.legit
            .iter()
            .chain(&self.spoof)
            .map(|c| {
                let path = dir.join(format!("{}.iq", c.source_id));
                let cap = Capture {
                    samples: c.samples().to_vec(),
                    meta: CaptureMeta {
                        label: c.label,
                        source: c.source_id.clone(),
                        sample_rate: None,
                        boundaries: None,
                    },
                };
                cap.save(&path)?;
                Ok(path)
            })
            .collect()
    }

    /// Reads every `.iq` capture in `dir` (sorted by name), chunks it with
    /// `n` samples, and sorts chunks by label. Unlabelled captures are
    /// skipped.
    pub fn load(dir: impl AsRef<Path>, n: usize, format: IqFileFormat) -> Result<Self> {
        let mut ds = Dataset {
            legit: Vec::new(),
            spoof: Vec::new(),
        };
        for path in list_captures(dir)? {
            let cap = Capture::load(&path, format)?;
            let chunks = cap.chunks(n)?;
            match cap.meta.label {
                Label::Legitimate => ds.legit.extend(chunks),
                Label::Spoofed => ds.spoof.extend(chunks),
                Label::Unknown => {}
            }
        }
        Ok(ds)
    }
}

/// Sorted `.iq` files directly inside `dir`.
pub fn list_captures(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "iq") && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

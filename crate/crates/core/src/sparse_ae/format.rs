//! Binary model files.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "AEMD"
//! 4       4     version (u32 LE)
//! 8       32    dims: input, latent, h2, h3 (u64 LE each)
//! 40      4     activation tags: encoder, hidden 2, hidden 3, output
//! 44      40    hyperparameters: epochs u64, sparsity weight f64,
//!               sparsity target f64, L2 weight f64, seed u64
//! 84      8     parameter count (u64 LE)
//! 92      8·n   parameters, f64 LE, canonical order
//! end-4   4     CRC-32 (IEEE) of every preceding byte
//! ```

use std::fs;
use std::path::Path;

use super::model::{Activation, AeDims, AeModel};
use super::TrainConfig;
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"AEMD";
pub const MODEL_VERSION: u32 = 1;
const HEADER_LEN: usize = 92;

pub fn save_model(m: &AeModel) -> Vec<u8> {
    let params = m.params();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * params.len() + 4);
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    for v in [m.dims.input, m.dims.latent, m.dims.h2, m.dims.h3] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend(m.activations().iter().map(|a| a.tag()));
    let c = &m.config;
    out.extend_from_slice(&(c.epochs as u64).to_le_bytes());
    out.extend_from_slice(&c.sparsity_weight.to_le_bytes());
    out.extend_from_slice(&c.sparsity_target.to_le_bytes());
    out.extend_from_slice(&c.l2_weight.to_le_bytes());
    out.extend_from_slice(&c.seed.to_le_bytes());
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let mut a = [0u8; N];
        a.copy_from_slice(&self.buf[self.pos..self.pos + N]);
        self.pos += N;
        a
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()).map_err(|_| Error::ModelFormat("size field overflows usize".into()))
    }
}

pub fn load_model(bytes: &[u8]) -> Result<AeModel> {
    let bad = |msg: String| Error::ModelFormat(msg);
    if bytes.len() < HEADER_LEN + 4 {
        return Err(bad(format!("file too short ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != MODEL_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4-byte tail"));
    let mut r = Reader { buf: body, pos: 4 };
    let version = u32::from_le_bytes(r.take());
    if version != MODEL_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    if crc32fast::hash(body) != stored {
        return Err(bad("checksum mismatch".into()));
    }
    let dims = AeDims {
        input: r.usize()?,
        latent: r.usize()?,
        h2: r.usize()?,
        h3: r.usize()?,
    };
    dims.validate().map_err(|e| bad(e.to_string()))?;
    let tags: [u8; 4] = r.take();
    let acts: Vec<Activation> = tags
        .iter()
        .map(|&t| Activation::from_tag(t).ok_or_else(|| bad(format!("unknown activation tag {t}"))))
        .collect::<Result<_>>()?;
    if acts[0] != Activation::Sigmoid || acts[3] != Activation::Linear {
        return Err(bad("encoder must be sigmoid and output linear".into()));
    }
    let config = TrainConfig {
        epochs: r.usize()?,
        sparsity_weight: r.f64(),
        sparsity_target: r.f64(),
        l2_weight: r.f64(),
        latent: dims.latent,
        decoder_hidden: (dims.h2, dims.h3),
        seed: r.u64(),
    };
    let count = r.usize()?;
    if count != dims.param_count() {
        return Err(bad(format!(
            "parameter count {count} does not match dims ({})",
            dims.param_count()
        )));
    }
    if body.len() != HEADER_LEN + 8 * count {
        return Err(bad(format!(
            "expected {} bytes, found {}",
            HEADER_LEN + 8 * count + 4,
            bytes.len()
        )));
    }
    let params: Vec<f64> = (0..count).map(|_| r.f64()).collect();
    AeModel::from_params(dims, [acts[1], acts[2]], config, params).map_err(|e| bad(e.to_string()))
}

pub fn save_model_file(m: &AeModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, save_model(m)).map_err(|e| Error::io(path, e))
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<AeModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    load_model(&bytes)
}

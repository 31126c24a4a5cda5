//! Constellation histograms rendered as grayscale images.
//!
//! The IQ plane is cut into a `p × q` grid of half-open tiles
//! `[b_I[i], b_I[i+1]) × [b_Q[j], b_Q[j+1])`; the last tile along each axis
//! also includes its upper edge. Each tile counts the samples falling into it
//! and the count, truncated at 255, becomes one 8-bit pixel. Samples outside
//! the grid are tallied separately rather than folded into edge tiles.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::iq::IqChunk;
use crate::{Error, Result};

/// Default number of tiles along each axis; `224² = 50 176` autoencoder inputs.
pub const DEFAULT_BINS: usize = 224;
/// Default half-width of the binned square around the origin.
pub const DEFAULT_HALF_RANGE: f64 = 1.5;

/// Binning geometry. Bin edges along I are `i_min + j·(i_max − i_min)/p`
/// for `j = 0..p`, with the final edge pinned to `i_max`; likewise along Q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub p: usize,
    pub q: usize,
    pub i_range: (f64, f64),
    pub q_range: (f64, f64),
}

impl GridSpec {
    pub fn new(p: usize, q: usize, i_range: (f64, f64), q_range: (f64, f64)) -> Result<Self> {
        let g = GridSpec {
            p,
            q,
            i_range,
            q_range,
        };
        g.validate()?;
        Ok(g)
    }

    /// A `bins × bins` grid over `[-half, half]²`.
    pub fn square(bins: usize, half: f64) -> Result<Self> {
        GridSpec::new(bins, bins, (-half, half), (-half, half))
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.q == 0 {
            return Err(Error::invalid("grid needs at least one bin per axis"));
        }
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.i_range) || !ok(self.q_range) {
            return Err(Error::invalid(format!(
                "grid ranges must be finite with min < max, got I {:?} Q {:?}",
                self.i_range, self.q_range
            )));
        }
        Ok(())
    }

    /// Number of pixels, `p·q`.
    pub fn len(&self) -> usize {
        self.p * self.q
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn i_edge(&self, j: usize) -> f64 {
        edge(self.i_range, self.p, j)
    }

    pub fn q_edge(&self, j: usize) -> f64 {
        edge(self.q_range, self.q, j)
    }

    fn i_bin(&self, x: f64) -> Option<usize> {
        bin_of(x, self.i_range, self.p)
    }

    fn q_bin(&self, x: f64) -> Option<usize> {
        bin_of(x, self.q_range, self.q)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            p: DEFAULT_BINS,
            q: DEFAULT_BINS,
            i_range: (-DEFAULT_HALF_RANGE, DEFAULT_HALF_RANGE),
            q_range: (-DEFAULT_HALF_RANGE, DEFAULT_HALF_RANGE),
        }
    }
}

fn edge((lo, hi): (f64, f64), bins: usize, j: usize) -> f64 {
    if j >= bins {
        hi
    } else {
        lo + j as f64 * (hi - lo) / bins as f64
    }
}

// A float guess of the bin is nudged until it agrees with the edge
// comparisons exactly, so results match a literal indicator evaluation.
fn bin_of(x: f64, range: (f64, f64), bins: usize) -> Option<usize> {
    let (lo, hi) = range;
    if !(x >= lo && x <= hi) {
        return None;
    }
    let guess = ((x - lo) / (hi - lo) * bins as f64).floor();
    let mut k = if guess < 0.0 {
        0
    } else {
        (guess as usize).min(bins - 1)
    };
    while k > 0 && x < edge(range, bins, k) {
        k -= 1;
    }
    while k + 1 < bins && x >= edge(range, bins, k + 1) {
        k += 1;
    }
    Some(k)
}

/// Untruncated tile counts (indexed `i·q + j`) and the out-of-grid tally.
pub fn histogram_counts(chunk: &IqChunk, grid: &GridSpec) -> Result<(Vec<u32>, usize)> {
    grid.validate()?;
    if chunk.is_empty() {
        return Err(Error::invalid("cannot image an empty chunk"));
    }
    let mut counts = vec![0u32; grid.len()];
    let mut outside = 0;
    for s in chunk.samples() {
        match (grid.i_bin(s.i as f64), grid.q_bin(s.q as f64)) {
            (Some(i), Some(j)) => counts[i * grid.q + j] += 1,
            _ => outside += 1,
        }
    }
    Ok((counts, outside))
}

/// An 8-bit `p × q` histogram image. Pixel `(i, j)` is the tile at I-bin `i`
/// and Q-bin `j`, stored row-major as `i·q + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramImage {
    pixels: Vec<u8>,
    pub grid: GridSpec,
    pub n_source: usize,
    pub n_out_of_range: usize,
}

impl HistogramImage {
    /// Wraps an existing pixel buffer, e.g. one read back from disk.
    pub fn from_pixels(pixels: Vec<u8>, grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        if pixels.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                actual: pixels.len(),
            });
        }
        Ok(HistogramImage {
            pixels,
            grid,
            n_source: 0,
            n_out_of_range: 0,
        })
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.pixels[i * self.grid.q + j]
    }
}

/// Builds the histogram image of a chunk, truncating tile counts at 255.
pub fn make_histogram(chunk: &IqChunk, grid: &GridSpec) -> Result<HistogramImage> {
    let (counts, outside) = histogram_counts(chunk, grid)?;
    Ok(HistogramImage {
        pixels: counts.into_iter().map(|c| c.min(255) as u8).collect(),
        grid: *grid,
        n_source: chunk.len(),
        n_out_of_range: outside,
    })
}

/// Row-major pixels scaled into `[0, 1]`: the autoencoder's input vector.
pub fn normalize_image(m: &HistogramImage) -> Vec<f64> {
    m.pixels.iter().map(|&p| p as f64 / 255.0).collect()
}

/// Encodes a binary (P5) PGM, `p` pixels wide and `q` tall. The top row is
/// the highest Q bin so the picture reads like a constellation plot.
pub fn encode_pgm(m: &HistogramImage) -> Vec<u8> {
    let (p, q) = (m.grid.p, m.grid.q);
    let mut out = format!("P5\n{p} {q}\n255\n").into_bytes();
    out.reserve(p * q);
    for row in 0..q {
        let j = q - 1 - row;
        out.extend((0..p).map(|i| m.get(i, j)));
    }
    out
}

pub fn export_pgm(m: &HistogramImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_pgm(m)).map_err(|e| Error::io(path, e))
}

/// Decodes a P5 PGM written by [`encode_pgm`] back onto `grid`.
pub fn decode_pgm(bytes: &[u8], grid: GridSpec) -> Result<HistogramImage> {
    // Header: magic, width, height, maxval separated by whitespace, then one
    // whitespace byte before the payload.
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Pgm("truncated header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(Error::Pgm(format!("unsupported magic {:?}", fields[0])));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Pgm(format!("bad header field {s:?}")))
    };
    let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval != 255 {
        return Err(Error::Pgm(format!("maxval {maxval} unsupported")));
    }
    if (w, h) != (grid.p, grid.q) {
        return Err(Error::Pgm(format!(
            "image is {w}x{h} but grid is {}x{}",
            grid.p, grid.q
        )));
    }
    let payload = bytes.get(pos..).unwrap_or_default();
    if payload.len() != w * h {
        return Err(Error::Pgm(format!(
            "expected {} payload bytes, found {}",
            w * h,
            payload.len()
        )));
    }
    let mut pixels = vec![0u8; w * h];
    for row in 0..h {
        let j = h - 1 - row;
        for i in 0..w {
            pixels[i * h + j] = payload[row * w + i];
        }
    }
    HistogramImage::from_pixels(pixels, grid)
}

pub fn read_pgm(path: impl AsRef<Path>, grid: GridSpec) -> Result<HistogramImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, grid)
}

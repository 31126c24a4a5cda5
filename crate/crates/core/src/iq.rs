//! Raw IQ captures: parsing, chunking and the per-sample geometric SNR.
//!
//! The canonical capture format is headerless interleaved `I,Q` pairs of
//! 32-bit little-endian IEEE-754 floats (`.iq`). An optional `.meta` sidecar
//! next to the capture carries `key=value` lines:
//!
//! ```text
//! label=legitimate
//! source=sat-pass-0042
//! sample_rate=250000
//! boundaries=0,1800,3600
//! ```
//!
//! When `boundaries` is present, chunks never straddle two messages.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One complex baseband sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IqSample {
    pub i: f32,
    pub q: f32,
}

impl IqSample {
    pub const fn new(i: f32, q: f32) -> Self {
        IqSample { i, q }
    }

    pub fn is_finite(&self) -> bool {
        self.i.is_finite() && self.q.is_finite()
    }
}

/// Ground-truth class of a chunk, when known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Legitimate,
    Spoofed,
    #[default]
    Unknown,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Legitimate => "legitimate",
            Label::Spoofed => "spoofed",
            Label::Unknown => "unknown",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "legitimate" => Ok(Label::Legitimate),
            "spoofed" => Ok(Label::Spoofed),
            "unknown" => Ok(Label::Unknown),
            other => Err(Error::invalid(format!("unknown label {other:?}"))),
        }
    }
}

/// A window of exactly `N` consecutive samples: the unit of classification.
#[derive(Debug, Clone, PartialEq)]
pub struct IqChunk {
    samples: Vec<IqSample>,
    pub label: Label,
    pub source_id: String,
}

impl IqChunk {
    pub fn new(samples: Vec<IqSample>, label: Label, source_id: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("a chunk needs at least one sample"));
        }
        Ok(IqChunk {
            samples,
            label,
            source_id: source_id.into(),
        })
    }

    pub fn samples(&self) -> &[IqSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; chunks are constructed non-empty.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<IqSample> {
        self.samples
    }
}

/// On-disk sample encodings understood by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IqFileFormat {
    /// Interleaved `f32` little-endian pairs (8 bytes per sample).
    #[default]
    Cf32Le,
    /// Interleaved `i16` little-endian pairs scaled by `1/32768`.
    Ci16Le,
    /// Interleaved offset-binary `u8` pairs as produced by RTL-SDR dongles.
    Cu8,
}

impl IqFileFormat {
    pub fn record_size(self) -> usize {
        match self {
            IqFileFormat::Cf32Le => 8,
            IqFileFormat::Ci16Le => 4,
            IqFileFormat::Cu8 => 2,
        }
    }

    fn decode(self, rec: &[u8]) -> IqSample {
        match self {
            IqFileFormat::Cf32Le => IqSample::new(
                f32::from_le_bytes([rec[0], rec[1], rec[2], rec[3]]),
                f32::from_le_bytes([rec[4], rec[5], rec[6], rec[7]]),
            ),
            IqFileFormat::Ci16Le => IqSample::new(
                i16::from_le_bytes([rec[0], rec[1]]) as f32 / 32768.0,
                i16::from_le_bytes([rec[2], rec[3]]) as f32 / 32768.0,
            ),
            IqFileFormat::Cu8 => IqSample::new(
                (rec[0] as f32 - 127.5) / 127.5,
                (rec[1] as f32 - 127.5) / 127.5,
            ),
        }
    }
}

impl FromStr for IqFileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cf32" | "cf32le" | "cf32_le" => Ok(IqFileFormat::Cf32Le),
            "ci16" | "ci16le" | "ci16_le" => Ok(IqFileFormat::Ci16Le),
            "cu8" => Ok(IqFileFormat::Cu8),
            other => Err(Error::invalid(format!("unknown IQ format {other:?}"))),
        }
    }
}

/// Decodes a byte buffer into samples, rejecting truncated records and
/// non-finite values.
pub fn parse_iq_bytes(bytes: &[u8], format: IqFileFormat) -> Result<Vec<IqSample>> {
    let rec = format.record_size();
    let whole = bytes.len() / rec * rec;
    if whole != bytes.len() {
        return Err(Error::TruncatedRecord { offset: whole });
    }
    bytes
        .chunks_exact(rec)
        .enumerate()
        .map(|(index, r)| {
            let s = format.decode(r);
            if s.is_finite() {
                Ok(s)
            } else {
                Err(Error::NonFiniteSample { index })
            }
        })
        .collect()
}

pub fn parse_iq_file(path: impl AsRef<Path>, format: IqFileFormat) -> Result<Vec<IqSample>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_iq_bytes(&bytes, format)
}

/// Serializes samples in the canonical `cf32` little-endian layout.
pub fn write_iq_bytes(samples: &[IqSample]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        out.extend_from_slice(&s.i.to_le_bytes());
        out.extend_from_slice(&s.q.to_le_bytes());
    }
    out
}

pub fn write_iq_file(path: impl AsRef<Path>, samples: &[IqSample]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_iq_bytes(samples)).map_err(|e| Error::io(path, e))
}

/// Contents of a `.meta` sidecar.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CaptureMeta {
    pub label: Label,
    pub source: String,
    pub sample_rate: Option<f64>,
    /// Start indices of the messages contained in the capture.
    pub boundaries: Option<Vec<usize>>,
}

impl CaptureMeta {
    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = CaptureMeta::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| Error::Metadata {
                line: lineno + 1,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected key=value".into()))?;
            let value = value.trim();
            match key.trim() {
                "label" => meta.label = value.parse().map_err(|e: Error| bad(e.to_string()))?,
                "source" => meta.source = value.to_string(),
                "sample_rate" => {
                    meta.sample_rate =
                        Some(value.parse().map_err(|_| bad(format!("bad sample rate {value:?}")))?)
                }
                "boundaries" => {
                    let idx = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| bad(format!("bad boundary list {value:?}")))?;
                    if idx.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(bad("boundaries must be strictly increasing".into()));
                    }
                    meta.boundaries = Some(idx);
                }
                // Unknown keys are tolerated so sidecars can carry extra provenance.
                _ => {}
            }
        }
        Ok(meta)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("label={}\nsource={}\n", self.label, self.source);
        if let Some(rate) = self.sample_rate {
            out.push_str(&format!("sample_rate={rate}\n"));
        }
        if let Some(b) = &self.boundaries {
            let list: Vec<String> = b.iter().map(usize::to_string).collect();
            out.push_str(&format!("boundaries={}\n", list.join(",")));
        }
        out
    }
}

/// Sidecar path for a capture: same stem, `.meta` extension.
pub fn meta_path(capture: &Path) -> PathBuf {
    capture.with_extension("meta")
}

/// A loaded capture file plus its (possibly defaulted) metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Capture {
    pub samples: Vec<IqSample>,
    pub meta: CaptureMeta,
}

impl Capture {
    /// Loads `path` and, if present, its `.meta` sidecar. Without a sidecar the
    /// label is `Unknown` and the source id is the file stem.
    pub fn load(path: impl AsRef<Path>, format: IqFileFormat) -> Result<Self> {
        let path = path.as_ref();
        let samples = parse_iq_file(path, format)?;
        let mpath = meta_path(path);
        let meta = if mpath.exists() {
            let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
            CaptureMeta::parse(&text)?
        } else {
            CaptureMeta {
                source: path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                ..CaptureMeta::default()
            }
        };
        Ok(Capture { samples, meta })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_iq_file(path, &self.samples)?;
        let mpath = meta_path(path);
        fs::write(&mpath, self.meta.to_text()).map_err(|e| Error::io(&mpath, e))
    }

    /// Chunks the capture, honouring message boundaries when the sidecar
    /// provides them. Chunks inherit the capture's label and source.
    pub fn chunks(&self, n: usize) -> Result<Vec<IqChunk>> {
        let mut out = match &self.meta.boundaries {
            Some(b) => chunk_within_messages(&self.samples, n, b)?,
            None => chunk(&self.samples, n)?,
        };
        for c in &mut out {
            c.label = self.meta.label;
            c.source_id.clone_from(&self.meta.source);
        }
        Ok(out)
    }
}

/// Splits samples into consecutive non-overlapping chunks of `n`; the
/// trailing `len % n` samples are dropped.
pub fn chunk(samples: &[IqSample], n: usize) -> Result<Vec<IqChunk>> {
    if n == 0 {
        return Err(Error::invalid("chunk size must be at least 1"));
    }
    Ok(samples
        .chunks_exact(n)
        .map(|c| IqChunk {
            samples: c.to_vec(),
            label: Label::Unknown,
            source_id: String::new(),
        })
        .collect())
}

/// Like [`chunk`], but each message (delimited by the start indices in
/// `boundaries`) is chunked on its own, so no chunk crosses a boundary.
pub fn chunk_within_messages(
    samples: &[IqSample],
    n: usize,
    boundaries: &[usize],
) -> Result<Vec<IqChunk>> {
    if n == 0 {
        return Err(Error::invalid("chunk size must be at least 1"));
    }
    if let Some(&last) = boundaries.last() {
        if last > samples.len() {
            return Err(Error::invalid(format!(
                "boundary {last} beyond capture length {}",
                samples.len()
            )));
        }
    }
    let mut starts: Vec<usize> = boundaries.to_vec();
    if starts.first() != Some(&0) {
        starts.insert(0, 0);
    }
    let mut out = Vec::new();
    for (k, &start) in starts.iter().enumerate() {
        let end = starts.get(k + 1).copied().unwrap_or(samples.len());
        out.extend(chunk(&samples[start..end], n)?);
    }
    Ok(out)
}

/// A signal-to-noise ratio in decibels, clamped to `[-120, 120]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Snr(f64);

impl Snr {
    pub const LIMIT_DB: f64 = 120.0;

    pub fn from_db(db: f64) -> Self {
        Snr(db.clamp(-Self::LIMIT_DB, Self::LIMIT_DB))
    }

    pub fn db(self) -> f64 {
        self.0
    }
}

const POWER_FLOOR: f64 = 1e-12;

/// Geometric SNR of one sample: received power relative to the origin over
/// the error power relative to the reference point `(1, 0)`.
pub fn snr_of_sample(s: IqSample) -> Snr {
    let (i, q) = (s.i as f64, s.q as f64);
    let signal = (i * i + q * q).max(POWER_FLOOR);
    let noise = ((i - 1.0) * (i - 1.0) + q * q).max(POWER_FLOOR);
    Snr::from_db(10.0 * (signal / noise).log10())
}

/// Mean of the per-sample SNRs in the dB domain.
pub fn chunk_snr(c: &IqChunk) -> Snr {
    let sum: f64 = c.samples.iter().map(|&s| snr_of_sample(s).db()).sum();
    Snr::from_db(sum / c.samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(i: f32, q: f32) -> IqSample {
        IqSample::new(i, q)
    }

    #[test]
    fn parses_two_cf32_records() {
        let mut bytes = Vec::new();
        for v in [1.0f32, 0.0, 0.0, 1.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(bytes.len(), 16);
        let got = parse_iq_bytes(&bytes, IqFileFormat::Cf32Le).unwrap();
        assert_eq!(got, vec![s(1.0, 0.0), s(0.0, 1.0)]);
    }

    #[test]
    fn empty_buffer_is_empty_sequence() {
        assert!(parse_iq_bytes(&[], IqFileFormat::Cf32Le).unwrap().is_empty());
    }

    #[test]
    fn truncated_record_reports_offset() {
        let err = parse_iq_bytes(&[0u8; 17], IqFileFormat::Cf32Le).unwrap_err();
        assert_eq!(err.to_string(), "truncated record at offset 16");
    }

    #[test]
    fn non_finite_is_rejected_with_index() {
        let bytes = write_iq_bytes(&[s(0.0, 0.0), s(0.5, f32::NAN), s(f32::INFINITY, 0.0)]);
        match parse_iq_bytes(&bytes, IqFileFormat::Cf32Le) {
            Err(Error::NonFiniteSample { index }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn integer_formats_scale_to_unit_range() {
        let bytes: Vec<u8> = [i16::MIN, 16384].iter().flat_map(|v| v.to_le_bytes()).collect();
        assert_eq!(
            parse_iq_bytes(&bytes, IqFileFormat::Ci16Le).unwrap(),
            vec![s(-1.0, 0.5)]
        );
        let got = parse_iq_bytes(&[255, 0], IqFileFormat::Cu8).unwrap();
        assert_eq!(got, vec![s(1.0, -1.0)]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cap.iq");
        let samples = vec![s(0.25, -0.75), s(1e-3, 3.5)];
        write_iq_file(&p, &samples).unwrap();
        assert_eq!(parse_iq_file(&p, IqFileFormat::Cf32Le).unwrap(), samples);
        assert!(matches!(
            parse_iq_file(dir.path().join("missing.iq"), IqFileFormat::Cf32Le),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn chunk_counts() {
        let v = vec![s(0.0, 0.0); 2500];
        assert_eq!(chunk(&v, 1000).unwrap().len(), 2);
        assert_eq!(chunk(&v[..1000], 1000).unwrap().len(), 1);
        assert_eq!(chunk(&v[..999], 1000).unwrap().len(), 0);
        assert!(matches!(chunk(&v, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn chunks_never_straddle_messages() {
        let v: Vec<_> = (0..25).map(|k| s(k as f32, 0.0)).collect();
        let chunks = chunk_within_messages(&v, 4, &[0, 10, 18]).unwrap();
        // messages of 10, 8, 7 samples -> 2 + 2 + 1 chunks
        assert_eq!(chunks.len(), 5);
        assert_eq!(chunks[2].samples()[0].i, 10.0);
        assert_eq!(chunks[4].samples()[0].i, 18.0);
        assert!(chunk_within_messages(&v, 4, &[30]).is_err());
    }

    #[test]
    fn meta_round_trip_and_errors() {
        let meta = CaptureMeta {
            label: Label::Spoofed,
            source: "drone-30m".into(),
            sample_rate: Some(250000.0),
            boundaries: Some(vec![0, 100, 250]),
        };
        assert_eq!(CaptureMeta::parse(&meta.to_text()).unwrap(), meta);
        assert!(CaptureMeta::parse("label=maybe").is_err());
        assert!(CaptureMeta::parse("no equals sign").is_err());
        assert!(CaptureMeta::parse("boundaries=5,3").is_err());
        let m = CaptureMeta::parse("# comment\n\nlabel=legitimate\nextra=1\n").unwrap();
        assert_eq!(m.label, Label::Legitimate);
    }

    #[test]
    fn capture_chunks_inherit_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.iq");
        let cap = Capture {
            samples: vec![s(0.1, 0.2); 12],
            meta: CaptureMeta {
                label: Label::Legitimate,
                source: "pass-1".into(),
                sample_rate: None,
                boundaries: Some(vec![0, 5]),
            },
        };
        cap.save(&p).unwrap();
        let back = Capture::load(&p, IqFileFormat::Cf32Le).unwrap();
        assert_eq!(back, cap);
        let chunks = back.chunks(3).unwrap();
        assert_eq!(chunks.len(), 3);
        assert!(chunks.iter().all(|c| c.label == Label::Legitimate && c.source_id == "pass-1"));

        let bare = dir.path().join("bare.iq");
        write_iq_file(&bare, &[s(0.0, 0.0)]).unwrap();
        let c = Capture::load(&bare, IqFileFormat::Cf32Le).unwrap();
        assert_eq!(c.meta.label, Label::Unknown);
        assert_eq!(c.meta.source, "bare");
    }

    #[test]
    fn snr_examples() {
        assert_eq!(snr_of_sample(s(0.5, 0.0)).db(), 0.0);
        assert!((snr_of_sample(s(2.0, 0.0)).db() - 10.0 * 4f64.log10()).abs() < 1e-12);
        assert!((snr_of_sample(s(2.0, 0.0)).db() - 6.0206).abs() < 1e-4);
        assert_eq!(snr_of_sample(s(1.0, 0.0)).db(), 120.0);
        assert_eq!(snr_of_sample(s(0.0, 0.0)).db(), -120.0);
    }

    #[test]
    fn chunk_snr_is_mean_of_db() {
        let c = IqChunk::new(vec![s(0.5, 0.0); 7], Label::Unknown, "").unwrap();
        assert_eq!(chunk_snr(&c).db(), 0.0);
        let c = IqChunk::new(vec![s(2.0, 0.0); 2], Label::Unknown, "").unwrap();
        assert!((chunk_snr(&c).db() - 6.0206).abs() < 1e-4);
        let c = IqChunk::new(vec![s(0.5, 0.0), s(2.0, 0.0)], Label::Unknown, "").unwrap();
        assert!((chunk_snr(&c).db() - 3.0103).abs() < 1e-4);
        assert!(IqChunk::new(vec![], Label::Unknown, "").is_err());
    }

    proptest! {
        #[test]
        fn chunking_is_a_partition_prefix(len in 0usize..300, n in 1usize..40) {
            let v: Vec<_> = (0..len).map(|k| s(k as f32, -(k as f32))).collect();
            let chunks = chunk(&v, n).unwrap();
            prop_assert_eq!(chunks.len(), len / n);
            let flat: Vec<_> = chunks.iter().flat_map(|c| c.samples().iter().copied()).collect();
            prop_assert_eq!(&flat[..], &v[..len / n * n]);
        }

        #[test]
        fn snr_symmetric_in_q(i in -3.0f32..3.0, q in -3.0f32..3.0) {
            prop_assert_eq!(snr_of_sample(s(i, q)), snr_of_sample(s(i, -q)));
        }

        #[test]
        fn snr_zero_on_bisector(q in -100.0f32..100.0) {
            prop_assert_eq!(snr_of_sample(s(0.5, q)).db(), 0.0);
        }

        #[test]
        fn bytes_round_trip(v in proptest::collection::vec((-1e6f32..1e6, -1e6f32..1e6), 0..64)) {
            let samples: Vec<_> = v.into_iter().map(|(i, q)| s(i, q)).collect();
            let bytes = write_iq_bytes(&samples);
            let back = parse_iq_bytes(&bytes, IqFileFormat::Cf32Le).unwrap();
            prop_assert_eq!(write_iq_bytes(&back), bytes);
        }
    }
}

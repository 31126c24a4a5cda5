//! Evaluation: ROC AUC, K-fold cross-validation with AUC quantiles, the SNR
//! overlap statistic and per-chunk timing overheads.
//!
//! The AUC is computed as the normalized Mann-Whitney U statistic: the
//! fraction of (legitimate, spoofed) score pairs in which the spoofed score
//! is higher, ties counting one half. Higher scores mean "more anomalous".
//!
//! K-fold protocol: the legitimate images are shuffled once and split into
//! `k` near-equal folds. For each fold the autoencoder and its threshold are
//! fitted on the other `k − 1` folds (80 % of the data when `k = 5`); the
//! held-out legitimate fold and the whole spoofed set are then scored. The
//! spoofed images never take part in training.
//!
//! Quantiles of the fold AUCs use linear interpolation between order
//! statistics: for sorted values `v[0..n]` the `p`-quantile is read at
//! position `h = (n − 1)·p`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{fit_threshold, Decision, DetectorState};
use crate::imaging::{encode_pgm, make_histogram, normalize_image};
use crate::iq::{chunk_snr, IqChunk};
use crate::sparse_ae::{reconstruction_mse, save_model, train_with_report, AeModel, TrainConfig};
use crate::{Error, Result};

/// Area under the ROC curve for "spoofed scores exceed legitimate ones".
pub fn roc_auc(scores_legit: &[f64], scores_spoof: &[f64]) -> Result<f64> {
    if scores_legit.is_empty() || scores_spoof.is_empty() {
        return Err(Error::invalid("roc_auc needs scores for both classes"));
    }
    if scores_legit.iter().chain(scores_spoof).any(|s| s.is_nan()) {
        return Err(Error::invalid("roc_auc scores must not be NaN"));
    }
    let mut all: Vec<(f64, bool)> = scores_legit
        .iter()
        .map(|&s| (s, false))
        .chain(scores_spoof.iter().map(|&s| (s, true)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Sum of mid-ranks (1-based) of the spoofed scores.
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < all.len() {
        let mut end = start + 1;
        while end < all.len() && all[end].0 == all[start].0 {
            end += 1;
        }
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        let spoofed = all[start..end].iter().filter(|e| e.1).count();
        rank_sum += mid_rank * spoofed as f64;
        start = end;
    }
    let (nl, ns) = (scores_legit.len() as f64, scores_spoof.len() as f64);
    let u = rank_sum - ns * (ns + 1.0) / 2.0;
    Ok(u / (nl * ns))
}

/// Linear-interpolation quantile of `values` (need not be sorted).
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("quantile of an empty set"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("quantile level {p} outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Result<Self> {
        Ok(Quantiles {
            q05: quantile(values, 0.05)?,
            q50: quantile(values, 0.5)?,
            q95: quantile(values, 0.95)?,
        })
    }
}

/// Shuffles `0..n` with `seed` and cuts it into `k` contiguous folds whose
/// sizes differ by at most one.
pub fn kfold_partition(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid(format!("k-fold needs k >= 2, got {k}")));
    }
    if n < k {
        return Err(Error::invalid(format!("{n} items cannot fill {k} folds")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(idx[at..at + len].to_vec());
        at += len;
    }
    Ok(folds)
}

/// Seeded split of `0..n` into `(train, held_out)` with
/// `round(n·fraction)` held out. Both lists come back sorted.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid(format!("holdout fraction {fraction} outside [0, 1)")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_out = (n as f64 * fraction).round() as usize;
    let mut held = idx.split_off(n - n_out);
    idx.sort_unstable();
    held.sort_unstable();
    Ok((idx, held))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub k: usize,
    pub train: TrainConfig,
    /// Seed of the fold shuffle.
    pub shuffle_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 5,
            train: TrainConfig::default(),
            shuffle_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test_legit: usize,
    pub auc: f64,
    pub tau: f64,
    /// Held-out legitimate images flagged as spoofed.
    pub false_positive_rate: f64,
    /// Spoofed images flagged as spoofed.
    pub true_positive_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overhead {
    /// Median time to build one histogram image from a chunk, ms.
    pub tau_img_ms: f64,
    /// Median time to score and classify one image, ms.
    pub tau_ae_ms: f64,
    /// Median time for the whole chunk-to-verdict path, ms.
    pub tau_total_ms: f64,
    pub model_bytes: usize,
    pub image_bytes: usize,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrOverlap {
    /// Spoofed chunks whose SNR falls inside the legitimate `[min, max]`.
    pub inside_fraction: f64,
    /// `1 − inside_fraction`: spoofed chunks outside the legitimate range.
    pub outside_fraction: f64,
    pub legit_interval_db: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub fold_aucs: Vec<f64>,
    pub quantiles: Quantiles,
    pub folds: Vec<FoldResult>,
    pub n_legit: usize,
    pub n_spoof: usize,
    #[serde(default)]
    pub timing: Option<Overhead>,
    #[serde(default)]
    pub snr_overlap: Option<SnrOverlap>,
    /// Snapshot of the configuration that produced the report.
    pub config: serde_json::Value,
}

/// One fold's scores plus the model trained for it.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub result: FoldResult,
    pub model: AeModel,
    pub legit_scores: Vec<f64>,
    pub spoof_scores: Vec<f64>,
    /// Training loss at the start and after each optimizer iteration.
    pub loss_history: Vec<f64>,
}

/// Runs every fold and keeps the trained models. Folds run in parallel;
/// results are independent of scheduling.
pub fn kfold_outcomes(
    legit_images: &[Vec<f64>],
    spoof_images: &[Vec<f64>],
    cfg: &EvalConfig,
) -> Result<Vec<FoldOutcome>> {
    if spoof_images.is_empty() {
        return Err(Error::invalid("k-fold evaluation needs spoofed images"));
    }
    let folds = kfold_partition(legit_images.len(), cfg.k, cfg.shuffle_seed)?;
    if legit_images.len() - folds.iter().map(Vec::len).max().unwrap_or(0) < 2 {
        return Err(Error::invalid(format!(
            "{} legitimate images leave a fold with fewer than 2 training images",
            legit_images.len()
        )));
    }
    folds
        .par_iter()
        .enumerate()
        .map(|(f, test_idx)| {
            let mut held_out = vec![false; legit_images.len()];
            test_idx.iter().for_each(|&i| held_out[i] = true);
            let train_set: Vec<Vec<f64>> = legit_images
                .iter()
                .zip(&held_out)
                .filter(|(_, &h)| !h)
                .map(|(x, _)| x.clone())
                .collect();
            let (model, report) = train_with_report(&train_set, &cfg.train)?;
            let score = |x: &Vec<f64>| reconstruction_mse(&model, x);
            let train_scores = train_set.iter().map(score).collect::<Result<Vec<_>>>()?;
            let (tau, _, _) = fit_threshold(&train_scores)?;
            let legit_scores = test_idx
                .iter()
                .map(|&i| score(&legit_images[i]))
                .collect::<Result<Vec<_>>>()?;
            let spoof_scores = spoof_images.iter().map(score).collect::<Result<Vec<_>>>()?;
            let flagged = |s: &[f64]| s.iter().filter(|&&v| v > tau).count() as f64 / s.len() as f64;
            let result = FoldResult {
                fold: f,
                n_train: train_set.len(),
                n_test_legit: test_idx.len(),
                auc: roc_auc(&legit_scores, &spoof_scores)?,
                tau,
                false_positive_rate: flagged(&legit_scores),
                true_positive_rate: flagged(&spoof_scores),
            };
            Ok(FoldOutcome {
                result,
                model,
                legit_scores,
                spoof_scores,
                loss_history: report.loss_history,
            })
        })
        .collect()
}

/// K-fold evaluation summarized as per-fold AUCs and their quantiles.
pub fn kfold_eval(
    legit_images: &[Vec<f64>],
    spoof_images: &[Vec<f64>],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let outcomes = kfold_outcomes(legit_images, spoof_images, cfg)?;
    report_from_outcomes(&outcomes, legit_images.len(), spoof_images.len(), cfg)
}

pub fn report_from_outcomes(
    outcomes: &[FoldOutcome],
    n_legit: usize,
    n_spoof: usize,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let fold_aucs: Vec<f64> = outcomes.iter().map(|o| o.result.auc).collect();
    Ok(EvalReport {
        quantiles: Quantiles::of(&fold_aucs)?,
        fold_aucs,
        folds: outcomes.iter().map(|o| o.result.clone()).collect(),
        n_legit,
        n_spoof,
        timing: None,
        snr_overlap: None,
        config: serde_json::to_value(cfg).expect("config serializes"),
    })
}

/// Fraction of spoofed chunks whose SNR lies inside the `[min, max]` SNR
/// interval of the legitimate chunks.
pub fn snr_overlap(legit_chunks: &[IqChunk], spoof_chunks: &[IqChunk]) -> Result<f64> {
    Ok(snr_overlap_summary(legit_chunks, spoof_chunks)?.inside_fraction)
}

pub fn snr_overlap_summary(legit_chunks: &[IqChunk], spoof_chunks: &[IqChunk]) -> Result<SnrOverlap> {
    if legit_chunks.is_empty() || spoof_chunks.is_empty() {
        return Err(Error::invalid("SNR overlap needs chunks of both classes"));
    }
    let legit: Vec<f64> = legit_chunks.iter().map(|c| chunk_snr(c).db()).collect();
    let spoof: Vec<f64> = spoof_chunks.iter().map(|c| chunk_snr(c).db()).collect();
    Ok(overlap_of_values(&legit, &spoof))
}

pub(crate) fn overlap_of_values(legit: &[f64], spoof: &[f64]) -> SnrOverlap {
    let lo = legit.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = legit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inside = spoof.iter().filter(|&&s| s >= lo && s <= hi).count() as f64 / spoof.len() as f64;
    SnrOverlap {
        inside_fraction: inside,
        outside_fraction: 1.0 - inside,
        legit_interval_db: (lo, hi),
    }
}

pub const DEFAULT_TIMING_REPS: usize = 1000;

fn median_ms(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

/// Median wall-clock cost of imaging and classifying `chunk` with
/// `detector`, plus the on-disk sizes of the model and one PGM image.
pub fn measure_overhead(detector: &DetectorState, chunk: &IqChunk, reps: usize) -> Result<Overhead> {
    if reps == 0 {
        return Err(Error::invalid("timing needs at least one repetition"));
    }
    let grid = detector.grid;
    let image = make_histogram(chunk, &grid)?;
    detector.classify(&image)?;

    let mut img_t = Vec::with_capacity(reps);
    let mut ae_t = Vec::with_capacity(reps);
    let mut total_t = Vec::with_capacity(reps);
    let mut sink = 0usize;
    for _ in 0..reps {
        let t = Instant::now();
        let m = make_histogram(chunk, &grid)?;
        img_t.push(t.elapsed().as_secs_f64() * 1e3);
        sink += m.n_out_of_range;

        let t = Instant::now();
        let v = detector.classify(&image)?;
        ae_t.push(t.elapsed().as_secs_f64() * 1e3);
        sink += usize::from(v.decision == Decision::Spoofed);

        let t = Instant::now();
        let m = make_histogram(chunk, &grid)?;
        let v = detector.classify(&m)?;
        total_t.push(t.elapsed().as_secs_f64() * 1e3);
        sink += usize::from(v.decision == Decision::Spoofed);
    }
    std::hint::black_box(sink);

    Ok(Overhead {
        tau_img_ms: median_ms(img_t),
        tau_ae_ms: median_ms(ae_t),
        tau_total_ms: median_ms(total_t),
        model_bytes: save_model(&detector.model).len(),
        image_bytes: encode_pgm(&image).len(),
        repetitions: reps,
    })
}

/// Normalized histogram vectors for a set of chunks, in order.
pub fn images_of(chunks: &[IqChunk], grid: &crate::imaging::GridSpec) -> Result<Vec<Vec<f64>>> {
    chunks
        .par_iter()
        .map(|c| Ok(normalize_image(&make_histogram(c, grid)?)))
        .collect()
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text summary.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "K-fold evaluation ({} folds)", self.folds.len());
        let _ = writeln!(s, "legitimate images: {}   spoofed images: {}", self.n_legit, self.n_spoof);
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:>4}  {:>7}  {:>6}  {:>8}  {:>12}  {:>6}  {:>6}",
            "fold", "n_train", "n_test", "auc", "tau", "fpr", "tpr"
        );
        for f in &self.folds {
            let _ = writeln!(
                s,
                "{:>4}  {:>7}  {:>6}  {:>8.4}  {:>12.6e}  {:>6.3}  {:>6.3}",
                f.fold, f.n_train, f.n_test_legit, f.auc, f.tau, f.false_positive_rate, f.true_positive_rate
            );
        }
        let q = &self.quantiles;
        let _ = writeln!(s);
        let _ = writeln!(s, "ROC AUC quantiles  q0.05 {:.4}  q0.50 {:.4}  q0.95 {:.4}", q.q05, q.q50, q.q95);
        if let Some(o) = &self.snr_overlap {
            let _ = writeln!(
                s,
                "SNR: legitimate range [{:.3}, {:.3}] dB; spoofed inside {:.1}%, outside {:.1}%",
                o.legit_interval_db.0,
                o.legit_interval_db.1,
                100.0 * o.inside_fraction,
                100.0 * o.outside_fraction
            );
        }
        if let Some(t) = &self.timing {
            let _ = writeln!(s);
            let _ = writeln!(s, "{:<14} {:>12}", "overhead", "value");
            let _ = writeln!(s, "{:<14} {:>12.4}", "tau_img (ms)", t.tau_img_ms);
            let _ = writeln!(s, "{:<14} {:>12.4}", "tau_ae (ms)", t.tau_ae_ms);
            let _ = writeln!(s, "{:<14} {:>12.4}", "total (ms)", t.tau_total_ms);
            let _ = writeln!(s, "{:<14} {:>12.2}", "M_ae (MB)", t.model_bytes as f64 / 1e6);
            let _ = writeln!(s, "{:<14} {:>12.2}", "M_image (KB)", t.image_bytes as f64 / 1e3);
        }
        s
    }

    /// `fold,auc,tau,fpr,tpr` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("fold,n_train,n_test_legit,auc,tau,false_positive_rate,true_positive_rate\n");
        for f in &self.folds {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                f.fold, f.n_train, f.n_test_legit, f.auc, f.tau, f.false_positive_rate, f.true_positive_rate
            );
        }
        s
    }

    /// Writes `report.json`, `report.txt` and `folds.csv` into `dir`.
    pub fn write_all(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = [
            ("report.json", self.to_json()),
            ("report.txt", self.to_text()),
            ("folds.csv", self.to_csv()),
        ];
        files
            .into_iter()
            .map(|(name, body)| {
                let p = dir.join(name);
                fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
                Ok(p)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iq::{IqSample, Label};
    use proptest::prelude::*;

    fn pairwise(legit: &[f64], spoof: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &l in legit {
            for &s in spoof {
                acc += if s > l {
                    1.0
                } else if s == l {
                    0.5
                } else {
                    0.0
                };
            }
        }
        acc / (legit.len() * spoof.len()) as f64
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0.1, 0.2], &[0.3, 0.4]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.3], &[0.3]).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.1, 0.4], &[0.2, 0.3]).unwrap(), 0.5);
        assert_eq!(pairwise(&[0.1, 0.4], &[0.2, 0.3]), 0.5);
        assert!(roc_auc(&[], &[0.3]).is_err());
        assert!(roc_auc(&[0.1], &[]).is_err());
        assert!(roc_auc(&[f64::NAN], &[0.1]).is_err());
    }

    #[test]
    fn quantile_interpolates() {
        let v = [0.9, 0.7, 1.0, 0.8, 0.6];
        assert!((quantile(&v, 0.05).unwrap() - 0.62).abs() < 1e-12);
        assert_eq!(quantile(&v, 0.5).unwrap(), 0.8);
        assert!((quantile(&v, 0.95).unwrap() - 0.98).abs() < 1e-12);
        let q = Quantiles::of(&[0.7; 5]).unwrap();
        assert_eq!((q.q05, q.q50, q.q95), (0.7, 0.7, 0.7));
        assert!(quantile(&[], 0.5).is_err());
        assert!(quantile(&v, 1.5).is_err());
    }

    #[test]
    fn partition_is_a_partition() {
        let folds = kfold_partition(103, 5, 4).unwrap();
        assert_eq!(folds.len(), 5);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
        assert!(folds.iter().all(|f| f.len() == 20 || f.len() == 21));
        let f100 = kfold_partition(100, 5, 0).unwrap();
        assert!(f100.iter().all(|f| 100 - f.len() == 80));
        assert!(kfold_partition(10, 1, 0).is_err());
        assert!(kfold_partition(3, 5, 0).is_err());
    }

    #[test]
    fn holdout_takes_a_fifth() {
        let (train, held) = holdout_split(100, 0.2, 3).unwrap();
        assert_eq!((train.len(), held.len()), (80, 20));
        let mut all = [train.clone(), held].concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(holdout_split(100, 0.2, 3).unwrap().0, train);
        assert_eq!(holdout_split(5, 0.0, 1).unwrap().1.len(), 0);
        assert!(holdout_split(5, 1.0, 1).is_err());
    }

    fn chunk_at(points: &[(f32, f32)]) -> IqChunk {
        IqChunk::new(points.iter().map(|&(i, q)| IqSample::new(i, q)).collect(), Label::Unknown, "").unwrap()
    }

    #[test]
    fn snr_overlap_examples() {
        // (0.5, 0) is 0 dB, (2, 0) about 6 dB
        let legit = vec![chunk_at(&[(0.5, 0.0)]), chunk_at(&[(0.5, 3.0)])];
        let far = vec![chunk_at(&[(2.0, 0.0)])];
        assert_eq!(snr_overlap(&legit, &far).unwrap(), 0.0);
        let same = vec![chunk_at(&[(0.5, 1.0)]), chunk_at(&[(0.5, -2.0)])];
        assert_eq!(snr_overlap(&legit, &same).unwrap(), 1.0);
        let o = overlap_of_values(&[0.0, 2.5, 1.0], &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!((o.inside_fraction - 0.6).abs() < 1e-15);
        assert!((o.outside_fraction - 0.4).abs() < 1e-15);
        assert_eq!(o.legit_interval_db, (0.0, 2.5));
        assert!(snr_overlap(&[], &far).is_err());
    }

    #[test]
    fn report_renderings() {
        let r = EvalReport {
            fold_aucs: vec![0.9, 1.0],
            quantiles: Quantiles::of(&[0.9, 1.0]).unwrap(),
            folds: (0..2)
                .map(|f| FoldResult {
                    fold: f,
                    n_train: 8,
                    n_test_legit: 2,
                    auc: 0.9 + 0.1 * f as f64,
                    tau: 0.01,
                    false_positive_rate: 0.0,
                    true_positive_rate: 1.0,
                })
                .collect(),
            n_legit: 10,
            n_spoof: 10,
            timing: None,
            snr_overlap: None,
            config: serde_json::json!({"k": 2}),
        };
        let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.to_csv().lines().count(), 3);
        assert!(r.to_text().contains("q0.50 0.9500"));
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(r.write_all(dir.path()).unwrap().len(), 3);
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise(
            legit in proptest::collection::vec(0u8..20, 1..60),
            spoof in proptest::collection::vec(0u8..20, 1..60),
        ) {
            // small integer scores force plenty of ties
            let l: Vec<f64> = legit.iter().map(|&v| v as f64 / 4.0).collect();
            let s: Vec<f64> = spoof.iter().map(|&v| v as f64 / 4.0).collect();
            prop_assert!((roc_auc(&l, &s).unwrap() - pairwise(&l, &s)).abs() <= 1e-12);
        }

        #[test]
        fn auc_complement_without_ties(v in proptest::collection::btree_set(0u32..100_000, 2..80), split in 1usize..79) {
            let v: Vec<f64> = v.into_iter().map(f64::from).collect();
            let split = split.min(v.len() - 1);
            let (a, b) = v.split_at(split);
            let sum = roc_auc(a, b).unwrap() + roc_auc(b, a).unwrap();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn auc_invariant_under_monotone_transform(
            legit in proptest::collection::vec(-5.0f64..5.0, 1..40),
            spoof in proptest::collection::vec(-5.0f64..5.0, 1..40),
        ) {
            let f = |x: &f64| (x * 0.7).exp() + 3.0 * x;
            let lt: Vec<f64> = legit.iter().map(f).collect();
            let st: Vec<f64> = spoof.iter().map(f).collect();
            prop_assert_eq!(roc_auc(&legit, &spoof).unwrap(), roc_auc(&lt, &st).unwrap());
        }
    }
}

//! Threshold fitting and per-image classification.
//!
//! The threshold is `τ = mean + 3·std` of the reconstruction errors of the
//! (legitimate-only) training images, with the sample (`n − 1`) standard
//! deviation. An image with error `≤ τ` is legitimate, otherwise spoofed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::imaging::{normalize_image, GridSpec, HistogramImage};
use crate::sparse_ae::{load_model_file, reconstruction_mse, save_model_file, AeModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Legitimate,
    Spoofed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub mse: f64,
    pub tau: f64,
    pub decision: Decision,
}

/// Applies the inclusive `mse ≤ τ` rule.
pub fn decide(mse: f64, tau: f64) -> Verdict {
    let decision = if mse <= tau {
        Decision::Legitimate
    } else {
        Decision::Spoofed
    };
    Verdict { mse, tau, decision }
}

/// Threshold statistics: `(tau, mean, std)`.
pub fn fit_threshold(mse_train: &[f64]) -> Result<(f64, f64, f64)> {
    if mse_train.len() < 2 {
        return Err(Error::invalid(format!(
            "threshold needs at least 2 training errors, got {}",
            mse_train.len()
        )));
    }
    if mse_train.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("training errors must be finite and non-negative"));
    }
    let n = mse_train.len() as f64;
    let mean = mse_train.iter().sum::<f64>() / n;
    let var = mse_train.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    Ok((mean + 3.0 * std, mean, std))
}

/// A trained model together with its fitted threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorState {
    pub model: AeModel,
    pub tau: f64,
    pub mse_train: Vec<f64>,
    pub mean_train: f64,
    pub std_train: f64,
    /// Binning geometry the model was trained on.
    pub grid: GridSpec,
    /// Samples per image at training time.
    pub chunk_size: usize,
}

impl DetectorState {
    /// Scores the training images with `model` and fits the threshold.
    pub fn fit(
        model: AeModel,
        train_images: &[Vec<f64>],
        grid: GridSpec,
        chunk_size: usize,
    ) -> Result<Self> {
        if grid.len() != model.dims.input {
            return Err(Error::DimensionMismatch {
                expected: model.dims.input,
                actual: grid.len(),
            });
        }
        let mse_train = train_images
            .iter()
            .map(|x| reconstruction_mse(&model, x))
            .collect::<Result<Vec<_>>>()?;
        let (tau, mean_train, std_train) = fit_threshold(&mse_train)?;
        Ok(DetectorState {
            model,
            tau,
            mse_train,
            mean_train,
            std_train,
            grid,
            chunk_size,
        })
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        reconstruction_mse(&self.model, x)
    }

    pub fn classify_vector(&self, x: &[f64]) -> Result<Verdict> {
        Ok(decide(self.score(x)?, self.tau))
    }

    pub fn classify(&self, image: &HistogramImage) -> Result<Verdict> {
        if image.grid.len() != self.model.dims.input {
            return Err(Error::DimensionMismatch {
                expected: self.model.dims.input,
                actual: image.grid.len(),
            });
        }
        self.classify_vector(&normalize_image(image))
    }

    /// Writes `<stem>.aemd` and `<stem>.json` next to each other; returns
    /// both paths. `run_config` is echoed verbatim into the sidecar.
    pub fn save(
        &self,
        stem: impl AsRef<Path>,
        run_config: Option<serde_json::Value>,
    ) -> Result<(PathBuf, PathBuf)> {
        let stem = stem.as_ref();
        let model_path = stem.with_extension("aemd");
        let side_path = stem.with_extension("json");
        save_model_file(&self.model, &model_path)?;
        let side = Sidecar {
            model_file: model_path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            tau: self.tau,
            mean_train: self.mean_train,
            std_train: self.std_train,
            mse_train: self.mse_train.clone(),
            grid: self.grid,
            chunk_size: self.chunk_size,
            run_config,
        };
        let text = serde_json::to_string_pretty(&side).map_err(|source| Error::Json {
            path: side_path.clone(),
            source,
        })?;
        fs::write(&side_path, text).map_err(|e| Error::io(&side_path, e))?;
        Ok((model_path, side_path))
    }

    /// Loads a detector from its `.json` sidecar (or the shared stem); the
    /// model file is resolved relative to the sidecar.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let side_path = path.as_ref().with_extension("json");
        let text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
        let side: Sidecar = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: side_path.clone(),
            source,
        })?;
        let model_path = side_path
            .parent()
            .unwrap_or_else(|| Path::new(""))
            .join(&side.model_file);
        let model = load_model_file(&model_path)?;
        side.grid.validate()?;
        if side.grid.len() != model.dims.input {
            return Err(Error::DimensionMismatch {
                expected: model.dims.input,
                actual: side.grid.len(),
            });
        }
        Ok(DetectorState {
            model,
            tau: side.tau,
            mse_train: side.mse_train,
            mean_train: side.mean_train,
            std_train: side.std_train,
            grid: side.grid,
            chunk_size: side.chunk_size,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    model_file: String,
    tau: f64,
    mean_train: f64,
    std_train: f64,
    mse_train: Vec<f64>,
    grid: GridSpec,
    chunk_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    run_config: Option<serde_json::Value>,
}

/// Re-reads the run configuration echoed into a detector sidecar.
pub fn load_run_config(path: impl AsRef<Path>) -> Result<Option<serde_json::Value>> {
    let side_path = path.as_ref().with_extension("json");
    let text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let side: Sidecar = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: side_path.clone(),
        source,
    })?;
    Ok(side.run_config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse_ae::{AeDims, AeModel};
    use proptest::prelude::*;

    #[test]
    fn threshold_examples() {
        assert_eq!(fit_threshold(&[1.0; 4]).unwrap(), (1.0, 1.0, 0.0));
        let (tau, mean, std) = fit_threshold(&[0.0, 2.0]).unwrap();
        assert_eq!(mean, 1.0);
        assert!((std - 2f64.sqrt()).abs() < 1e-15);
        assert!((tau - 5.2426).abs() < 1e-4);
        let (tau, mean, std) = fit_threshold(&[1.0, 3.0, 5.0]).unwrap();
        assert_eq!((tau, mean, std), (9.0, 3.0, 2.0));
        assert!(fit_threshold(&[1.0]).is_err());
        assert!(fit_threshold(&[1.0, -1.0]).is_err());
        assert!(fit_threshold(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn boundary_is_legitimate() {
        assert_eq!(decide(0.5, 0.5).decision, Decision::Legitimate);
        assert_eq!(decide(0.5 + 1e-12, 0.5).decision, Decision::Spoofed);
        assert_eq!(decide(0.0, 0.0).decision, Decision::Legitimate);
    }

    fn constant_model(d: usize, value: f64) -> AeModel {
        let mut m = AeModel::zeros(AeDims::new(d, 2, 2, 2).unwrap()).unwrap();
        m.layer_mut(3).1.iter_mut().for_each(|b| *b = value);
        m
    }

    #[test]
    fn classify_checks_grid() {
        let g = GridSpec::square(2, 1.0).unwrap();
        let imgs = vec![vec![0.0; 4], vec![0.1; 4], vec![0.2; 4]];
        let det = DetectorState::fit(constant_model(4, 0.0), &imgs, g, 10).unwrap();
        let img = HistogramImage::from_pixels(vec![0; 4], g).unwrap();
        assert_eq!(det.classify(&img).unwrap().decision, Decision::Legitimate);
        let wrong = HistogramImage::from_pixels(vec![0; 9], GridSpec::square(3, 1.0).unwrap()).unwrap();
        assert!(matches!(det.classify(&wrong), Err(Error::DimensionMismatch { .. })));
        let bright = HistogramImage::from_pixels(vec![255; 4], g).unwrap();
        assert_eq!(det.classify(&bright).unwrap().decision, Decision::Spoofed);
        assert!(DetectorState::fit(constant_model(9, 0.0), &imgs, g, 10).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::square(2, 1.0).unwrap();
        let imgs = vec![vec![0.0; 4], vec![0.3; 4], vec![0.1; 4]];
        let det = DetectorState::fit(constant_model(4, 0.05), &imgs, g, 250).unwrap();
        let cfg = serde_json::json!({"chunk_size": 250});
        let (mp, sp) = det.save(dir.path().join("det"), Some(cfg.clone())).unwrap();
        assert!(mp.exists() && sp.exists());
        let back = DetectorState::load(&sp).unwrap();
        assert_eq!(back, det);
        assert_eq!(load_run_config(&sp).unwrap(), Some(cfg));
        let (tau, _, _) = fit_threshold(&back.mse_train).unwrap();
        assert!((tau - back.tau).abs() <= 1e-12);
    }

    proptest! {
        #[test]
        fn decision_flips_once(tau in 0.0f64..10.0, a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            // monotone: once spoofed, larger errors stay spoofed
            if decide(lo, tau).decision == Decision::Spoofed {
                prop_assert_eq!(decide(hi, tau).decision, Decision::Spoofed);
            }
            prop_assert_eq!(decide(lo, tau).decision == Decision::Legitimate, lo <= tau);
        }

        #[test]
        fn threshold_is_reproducible(v in proptest::collection::vec(0.0f64..1.0, 2..50)) {
            let (tau, mean, std) = fit_threshold(&v).unwrap();
            prop_assert!((tau - (mean + 3.0 * std)).abs() <= 1e-12);
            prop_assert_eq!(fit_threshold(&v).unwrap().0, tau);
        }
    }
}

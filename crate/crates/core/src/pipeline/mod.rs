//! End-to-end scoring: GLCM features, manifold features appended as extra
//! columns, a classifier trained on the labeled rows only, and the repeated
//! random-split protocol.
//!
//! Manifold features (autoencoder or PCA) are fitted transductively by
//! default: every image, labeled or not, contributes to the fit. The
//! classifier never sees the unlabeled rows' labels or uses them for training.

mod features;
mod report;

pub use features::{FeatureConfig, FeatureMode, FeatureModel, MinMaxScaler, RawFeatures};
pub use report::ScoreReport;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::forest::{error_rate, train_forest, ForestConfig, Label, LabeledDataset};
use crate::seed::{self, stream};
use crate::texture::GrayImage;

/// Which rows the manifold features are fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fitting {
    /// Train and test rows together.
    #[default]
    Transductive,
    /// Train rows only; test rows are only encoded.
    Inductive,
}

impl Fitting {
    pub fn name(&self) -> &'static str {
        match self {
            Fitting::Transductive => "transductive",
            Fitting::Inductive => "inductive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: FeatureMode,
    pub runs: usize,
    pub train_fraction: f64,
    pub master_seed: u64,
    pub features: FeatureConfig,
    pub forest: ForestConfig,
    pub fitting: Fitting,
    /// Fit manifold features once and reuse them for every run. Only
    /// meaningful for transductive fitting.
    pub shared_model: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: FeatureMode::GlcmOnly,
            runs: 100,
            train_fraction: 0.5,
            master_seed: 0,
            features: FeatureConfig::default(),
            forest: ForestConfig::default(),
            fitting: Fitting::Transductive,
            shared_model: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.mode.validate()?;
        if self.runs == 0 {
            return Err(invalid("runs must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(invalid(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        self.features.autoencoder.validate()
    }
}

/// Trains on labeled rows and predicts others. The pipeline hands it only the
/// training rows and the test feature matrix.
pub trait Classifier: Sync {
    fn fit_predict(&self, train: &LabeledDataset, test: ArrayView2<f64>) -> Result<Vec<Label>>;
}

/// Random forest with the given configuration; the seed is overridden per run.
#[derive(Debug, Clone, Default)]
pub struct RandomForestClassifier {
    pub config: ForestConfig,
}

impl Classifier for RandomForestClassifier {
    fn fit_predict(&self, train: &LabeledDataset, test: ArrayView2<f64>) -> Result<Vec<Label>> {
        train_forest(train, &self.config)?.predict_rows(test)
    }
}

struct SeededForest<'a> {
    config: &'a ForestConfig,
    seed: u64,
}

impl Classifier for SeededForest<'_> {
    fn fit_predict(&self, train: &LabeledDataset, test: ArrayView2<f64>) -> Result<Vec<Label>> {
        let config = ForestConfig {
            seed: self.seed,
            ..self.config.clone()
        };
        train_forest(train, &config)?.predict_rows(test)
    }
}

/// Transductive feature matrix for all images: GLCM (or pooled pixel) base
/// columns with manifold columns appended, fitted on every row.
pub fn build_features(
    images: &[GrayImage],
    mode: FeatureMode,
    cfg: &FeatureConfig,
    ae_seed: u64,
) -> Result<Array2<f64>> {
    let raw = RawFeatures::extract(images, mode, cfg)?;
    let rows: Vec<usize> = (0..raw.len()).collect();
    FeatureModel::fit(&raw, &rows, mode, cfg, ae_seed)?.transform(&raw)
}

/// Features for one split. The manifold fit sees `train ++ test` (or `train`
/// alone when inductive), in that order.
fn split_features(
    raw: &RawFeatures,
    train: &[usize],
    test: &[usize],
    config: &ExperimentConfig,
    run_seed: u64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let fit_rows: Vec<usize> = match config.fitting {
        Fitting::Transductive => train.iter().chain(test).copied().collect(),
        Fitting::Inductive => train.to_vec(),
    };
    let model = FeatureModel::fit(
        raw,
        &fit_rows,
        config.mode,
        &config.features,
        seed::derive(run_seed, stream::AUTOENCODER),
    )?;
    let train_x = model.transform(&raw.select(train))?;
    let test_x = model.transform(&raw.select(test))?;
    Ok((train_x, test_x))
}

fn score_split(
    features: (Array2<f64>, Array2<f64>),
    train_labels: Vec<Label>,
    classifier: &dyn Classifier,
) -> Result<Vec<Label>> {
    let (train_x, test_x) = features;
    let dataset = LabeledDataset::new(train_x, train_labels)?;
    let pred = classifier.fit_predict(&dataset, test_x.view())?;
    if pred.len() != test_x.nrows() {
        return Err(invalid(
            "classifier returned the wrong number of predictions",
        ));
    }
    Ok(pred)
}

/// Scores `test_images` with a classifier trained on `train_images`. Manifold
/// features are fitted per `config.fitting` with seeds derived from `run_seed`.
/// Predictions come back in test order.
pub fn mf_tacoma_score(
    train_images: &[GrayImage],
    train_labels: &[Label],
    test_images: &[GrayImage],
    config: &ExperimentConfig,
    run_seed: u64,
) -> Result<Vec<Label>> {
    let classifier = SeededForest {
        config: &config.forest,
        seed: seed::derive(run_seed, stream::FOREST),
    };
    mf_tacoma_score_with(
        train_images,
        train_labels,
        test_images,
        config,
        run_seed,
        &classifier,
    )
}

pub fn mf_tacoma_score_with(
    train_images: &[GrayImage],
    train_labels: &[Label],
    test_images: &[GrayImage],
    config: &ExperimentConfig,
    run_seed: u64,
    classifier: &dyn Classifier,
) -> Result<Vec<Label>> {
    if train_images.is_empty() {
        return Err(invalid("no training images"));
    }
    if train_images.len() != train_labels.len() {
        return Err(invalid("training images and labels differ in length"));
    }
    if test_images.is_empty() {
        return Ok(Vec::new());
    }
    let all: Vec<GrayImage> = train_images.iter().chain(test_images).cloned().collect();
    let raw = RawFeatures::extract(&all, config.mode, &config.features)?;
    let n = train_images.len();
    let train: Vec<usize> = (0..n).collect();
    let test: Vec<usize> = (n..all.len()).collect();
    let feats = split_features(&raw, &train, &test, config, run_seed)?;
    score_split(feats, train_labels.to_vec(), classifier)
}

/// Seed of run `r` (0-based).
pub fn run_seed(master: u64, r: usize) -> u64 {
    seed::derive(master, r as u64)
}

/// Uniform random split without stratification. Depends only on `run_seed`,
/// so every mode sees the same split for the same master seed.
pub fn random_split(n: usize, train_fraction: f64, run_seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(run_seed, stream::SPLIT));
    idx.shuffle(&mut rng);
    let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

pub fn run_experiment(
    images: &[GrayImage],
    labels: &[Label],
    config: &ExperimentConfig,
) -> Result<ScoreReport> {
    run_experiment_inner(images, labels, config, None)
}

/// As [`run_experiment`] with a caller-supplied classifier (forest seeds are
/// then the classifier's business).
pub fn run_experiment_with(
    images: &[GrayImage],
    labels: &[Label],
    config: &ExperimentConfig,
    classifier: &dyn Classifier,
) -> Result<ScoreReport> {
    run_experiment_inner(images, labels, config, Some(classifier))
}

fn run_experiment_inner(
    images: &[GrayImage],
    labels: &[Label],
    config: &ExperimentConfig,
    classifier: Option<&dyn Classifier>,
) -> Result<ScoreReport> {
    config.validate()?;
    if images.len() != labels.len() {
        return Err(invalid("images and labels differ in length"));
    }
    if images.len() < 2 {
        return Err(invalid("an experiment needs at least 2 labeled images"));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(invalid("an experiment needs at least 2 distinct labels"));
    }

    let raw = RawFeatures::extract(images, config.mode, &config.features)?;
    let shared = if config.shared_model && config.fitting == Fitting::Transductive {
        let rows: Vec<usize> = (0..raw.len()).collect();
        let model = FeatureModel::fit(
            &raw,
            &rows,
            config.mode,
            &config.features,
            seed::derive(config.master_seed, stream::AUTOENCODER),
        )?;
        Some(model.transform(&raw)?)
    } else {
        None
    };

    let one_run = |r: usize| -> Result<f64> {
        let rs = run_seed(config.master_seed, r);
        let (train, test) = random_split(images.len(), config.train_fraction, rs);
        let feats = match &shared {
            Some(all) => (all.select(Axis(0), &train), all.select(Axis(0), &test)),
            None => split_features(&raw, &train, &test, config, rs)?,
        };
        let train_labels = train.iter().map(|&i| labels[i]).collect();
        let truth: Vec<Label> = test.iter().map(|&i| labels[i]).collect();
        let forest = SeededForest {
            config: &config.forest,
            seed: seed::derive(rs, stream::FOREST),
        };
        let clf: &dyn Classifier = classifier.unwrap_or(&forest);
        let pred = score_split(feats, train_labels, clf)?;
        error_rate(&pred, &truth)
    };
    let errors = (0..config.runs)
        .into_par_iter()
        .map(one_run)
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScoreReport::from_errors(config, errors))
}

/// Runs the protocol once per `k` under `PcOnly(k)` (`sole`) or
/// `GlcmPlusPc(k)`. The master seed is shared, so every `k` sees the same
/// splits.
pub fn pca_sweep_reports(
    images: &[GrayImage],
    labels: &[Label],
    ks: &[usize],
    sole: bool,
    config: &ExperimentConfig,
) -> Result<Vec<ScoreReport>> {
    if ks.is_empty() {
        return Err(invalid("empty list of component counts"));
    }
    ks.iter()
        .map(|&k| {
            let mode = if sole {
                FeatureMode::PcOnly(k)
            } else {
                FeatureMode::GlcmPlusPc(k)
            };
            run_experiment(
                images,
                labels,
                &ExperimentConfig {
                    mode,
                    ..config.clone()
                },
            )
        })
        .collect()
}

/// `(k, mean error)` per entry of `ks`, in input order.
pub fn pca_sweep(
    images: &[GrayImage],
    labels: &[Label],
    ks: &[usize],
    sole: bool,
    config: &ExperimentConfig,
) -> Result<Vec<(usize, f64)>> {
    Ok(pca_sweep_reports(images, labels, ks, sole, config)?
        .into_iter()
        .zip(ks)
        .map(|(r, &k)| (k, r.mean_error))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes_and_disjointness() {
        let (train, test) = random_split(11, 0.5, 3);
        assert_eq!(train.len() + test.len(), 11);
        assert_eq!(train.len(), 6);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
        assert_eq!(random_split(11, 0.5, 3), (train, test));
        // Extreme fractions still leave one row on each side.
        assert_eq!(random_split(4, 0.01, 1).0.len(), 1);
        assert_eq!(random_split(4, 0.99, 1).1.len(), 1);
    }

    #[test]
    fn config_validation() {
        let bad = [
            ExperimentConfig {
                runs: 0,
                ..Default::default()
            },
            ExperimentConfig {
                train_fraction: 1.0,
                ..Default::default()
            },
            ExperimentConfig {
                train_fraction: 0.0,
                ..Default::default()
            },
            ExperimentConfig {
                mode: FeatureMode::PcOnly(0),
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn degenerate_datasets_rejected() {
        let img = GrayImage::filled(8, 8, 10).unwrap();
        let cfg = ExperimentConfig {
            runs: 1,
            ..Default::default()
        };
        assert!(run_experiment(std::slice::from_ref(&img), &[0], &cfg).is_err());
        assert!(run_experiment(&[img.clone(), img.clone()], &[1, 1], &cfg).is_err());
        assert!(run_experiment(&[img.clone(), img], &[1], &cfg).is_err());
    }

    #[test]
    fn empty_train_rejected() {
        let img = GrayImage::filled(8, 8, 10).unwrap();
        let cfg = ExperimentConfig::default();
        assert!(mf_tacoma_score(&[], &[], &[img], &cfg, 0).is_err());
    }
}

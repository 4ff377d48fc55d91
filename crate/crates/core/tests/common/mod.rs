//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls the code under test except to read
//! inputs.

#![allow(dead_code)]

use std::time::Duration;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use texscore::autoencoder::{AutoencoderModel, TrainConfig};
use texscore::forest::{best_split, train_forest, ForestConfig, LabeledDataset, Node};
use texscore::texture::{compute_glcm, Direction, QuantizedImage, SpatialRelationship};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- GLCM

/// Offsets written out by hand: rows grow downward, columns to the right.
pub fn compass(name: &str) -> (isize, isize) {
    match name {
        "e" => (0, 1),
        "w" => (0, -1),
        "n" => (-1, 0),
        "s" => (1, 0),
        "ne" => (-1, 1),
        "nw" => (-1, -1),
        "se" => (1, 1),
        "sw" => (1, -1),
        _ => panic!("bad direction {name}"),
    }
}

pub fn random_quantized(rng: &mut impl Rng, w: usize, h: usize, levels: usize) -> QuantizedImage {
    let values = (0..w * h)
        .map(|_| rng.random_range(1..=levels as u16))
        .collect();
    QuantizedImage::new(w, h, levels, values).unwrap()
}

/// Visits every pixel and, when its neighbor at `(dr, dc)` exists, tallies
/// the ordered pair. Returned matrix is row-major with 0-based indices.
pub fn naive_glcm(img: &QuantizedImage, dr: isize, dc: isize) -> Vec<u64> {
    let l = img.levels();
    let mut m = vec![0u64; l * l];
    for r in 0..img.height() as isize {
        for c in 0..img.width() as isize {
            let (r2, c2) = (r + dr, c + dc);
            if r2 < 0 || c2 < 0 || r2 >= img.height() as isize || c2 >= img.width() as isize {
                continue;
            }
            let a = img.get(r as usize, c as usize) as usize - 1;
            let b = img.get(r2 as usize, c2 as usize) as usize - 1;
            m[a * l + b] += 1;
        }
    }
    m
}

/// Outcome of the GLCM oracle sweep shared by the integration test and the
/// acceptance suite.
pub struct GlcmSweep {
    pub cases: usize,
    pub oracle_mismatches: usize,
    pub total_mismatches: usize,
    pub transpose_mismatches: usize,
    pub elapsed: Duration,
}

/// `cases` random images of 4x4 to 64x64 pixels, 2 to 51 levels, every
/// direction and a distance in 1..=5 that fits the image.
pub fn glcm_sweep(cases: usize, seed: u64) -> GlcmSweep {
    let start = std::time::Instant::now();
    let mut rng = rng(seed);
    let mut out = GlcmSweep {
        cases: 0,
        oracle_mismatches: 0,
        total_mismatches: 0,
        transpose_mismatches: 0,
        elapsed: Duration::ZERO,
    };
    for case in 0..cases {
        let w = rng.random_range(4..=64usize);
        let h = rng.random_range(4..=64usize);
        let levels = rng.random_range(2..=51usize);
        let img = random_quantized(&mut rng, w, h, levels);
        let max_d = 5.min(w.min(h) - 1);
        let d = rng.random_range(1..=max_d);
        for dir in Direction::ALL {
            let (ur, uc) = compass(dir.short_name());
            let (dr, dc) = (ur * d as isize, uc * d as isize);
            let rel = SpatialRelationship::new(dir, d).unwrap();
            let g = compute_glcm(&img, rel).unwrap();
            if g.counts() != naive_glcm(&img, dr, dc).as_slice() {
                out.oracle_mismatches += 1;
            }
            let expected_total = (h - dr.unsigned_abs()) * (w - dc.unsigned_abs());
            if g.total() != expected_total as u64 || g.counts().iter().sum::<u64>() != g.total() {
                out.total_mismatches += 1;
            }
            let opp = compute_glcm(&img, rel.opposite()).unwrap();
            let transposed_ok =
                (0..levels).all(|a| (0..levels).all(|b| g.count(a, b) == opp.count(b, a)));
            if !transposed_ok {
                out.transpose_mismatches += 1;
            }
        }
        out.cases = case + 1;
    }
    out.elapsed = start.elapsed();
    out
}

// ---------------------------------------------------------------- PCA

pub fn random_matrix(rng: &mut impl Rng, n: usize, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, p), |_| rng.random_range(-2.0..2.0))
}

/// Sample covariance with divisor `n - 1`, computed entry by entry.
pub fn covariance(x: ArrayView2<f64>) -> Array2<f64> {
    let (n, p) = x.dim();
    let means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
    Array2::from_shape_fn((p, p), |(a, b)| {
        (0..n)
            .map(|i| (x[[i, a]] - means[a]) * (x[[i, b]] - means[b]))
            .sum::<f64>()
            / (n as f64 - 1.0)
    })
}

/// Eigenpairs from nalgebra, sorted by descending eigenvalue. Column `j` of
/// the returned matrix pairs with value `j`.
pub fn oracle_eigen(m: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let p = m.nrows();
    let dm = DMatrix::from_fn(p, p, |i, j| m[[i, j]]);
    let eig = dm.symmetric_eigen();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Array2::from_shape_fn((p, p), |(r, c)| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Smallest of `|u - v|` and `|u + v|` in max norm.
pub fn sign_free_distance(u: &[f64], v: &[f64]) -> f64 {
    let plus = u
        .iter()
        .zip(v)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let minus = u
        .iter()
        .zip(v)
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max);
    plus.min(minus)
}

// ---------------------------------------------------------------- Autoencoder

pub fn random_model(rng: &mut impl Rng, p: usize, h: usize) -> AutoencoderModel {
    let mut u = || rng.random_range(-1.0..1.0);
    AutoencoderModel {
        w1: Array2::from_shape_fn((h, p), |_| u()),
        b1: Array1::from_shape_fn(h, |_| u()),
        w2: Array2::from_shape_fn((p, h), |_| u()),
        b2: Array1::from_shape_fn(p, |_| u()),
    }
}

/// Worst relative error between analytic gradients and central differences
/// of the loss, over every parameter.
pub fn gradient_check(
    model: &AutoencoderModel,
    batch: ArrayView2<f64>,
    lambda: f64,
    eps: f64,
) -> f64 {
    let g = model.gradients(batch, lambda).unwrap();
    let loss = |m: &AutoencoderModel| m.loss(batch, lambda).unwrap();
    let rel = |analytic: f64, numeric: f64| {
        (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
    };
    let mut worst: f64 = 0.0;

    macro_rules! check {
        ($field:ident, $grad:expr) => {
            for (idx, &analytic) in $grad.indexed_iter() {
                let mut plus = model.clone();
                plus.$field[idx] += eps;
                let mut minus = model.clone();
                minus.$field[idx] -= eps;
                let numeric = (loss(&plus) - loss(&minus)) / (2.0 * eps);
                worst = worst.max(rel(analytic, numeric));
            }
        };
    }
    check!(w1, g.w1);
    check!(b1, g.b1);
    check!(w2, g.w2);
    check!(b2, g.b2);
    worst
}

pub struct GradientSweep {
    pub configs: usize,
    pub with_penalty: usize,
    pub worst_relative_error: f64,
    pub elapsed: Duration,
}

pub fn gradient_sweep(configs: usize, seed: u64) -> GradientSweep {
    let start = std::time::Instant::now();
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    let mut with_penalty = 0;
    for i in 0..configs {
        let p = rng.random_range(1..=6usize);
        let h = rng.random_range(1..=5usize);
        let n = rng.random_range(1..=5usize);
        let lambda = if i % 2 == 0 {
            rng.random_range(0.01..1.0)
        } else {
            0.0
        };
        if lambda > 0.0 {
            with_penalty += 1;
        }
        let model = random_model(&mut rng, p, h);
        let batch = Array2::from_shape_fn((n, p), |_| rng.random::<f64>());
        worst = worst.max(gradient_check(&model, batch.view(), lambda, 1e-5));
    }
    GradientSweep {
        configs,
        with_penalty,
        worst_relative_error: worst,
        elapsed: start.elapsed(),
    }
}

pub fn default_train(seed: u64) -> TrainConfig {
    TrainConfig {
        seed,
        ..TrainConfig::default()
    }
}

// ---------------------------------------------------------------- CART

/// Reference CART: recursive, re-counts classes from scratch for every
/// candidate and compares weighted Gini impurity as exact fractions.
/// Emits nodes in preorder, matching the arena layout of the real trees.
pub fn oracle_cart(x: ArrayView2<f64>, y: &[u32]) -> Vec<Node> {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut nodes = Vec::new();
    grow(x, y, &classes, &rows, &mut nodes);
    nodes
}

fn class_counts(y: &[u32], classes: &[u32], rows: &[usize]) -> Vec<u64> {
    classes
        .iter()
        .map(|c| rows.iter().filter(|&&r| y[r] == *c).count() as u64)
        .collect()
}

/// Weighted Gini times `n`, as the fraction `num / den`:
/// `n_l - S_l / n_l + n_r - S_r / n_r` with `S = sum of squared counts`.
fn weighted_gini(left: &[u64], right: &[u64]) -> (i128, i128) {
    let nl: i128 = left.iter().sum::<u64>() as i128;
    let nr: i128 = right.iter().sum::<u64>() as i128;
    let sl: i128 = left.iter().map(|&c| (c * c) as i128).sum();
    let sr: i128 = right.iter().map(|&c| (c * c) as i128).sum();
    ((nl * nl - sl) * nr + (nr * nr - sr) * nl, nl * nr)
}

fn less(a: (i128, i128), b: (i128, i128)) -> bool {
    a.0 * b.1 < b.0 * a.1
}

fn grow(
    x: ArrayView2<f64>,
    y: &[u32],
    classes: &[u32],
    rows: &[usize],
    nodes: &mut Vec<Node>,
) -> usize {
    let me = nodes.len();
    let counts = class_counts(y, classes, rows);
    let max = *counts.iter().max().unwrap();
    let label = classes[counts.iter().position(|&c| c == max).unwrap()];
    nodes.push(Node::Leaf { label });
    if counts.iter().filter(|&&c| c > 0).count() <= 1 {
        return me;
    }
    let n = rows.len() as i128;
    let parent_s: i128 = counts.iter().map(|&c| (c * c) as i128).sum();
    let parent = (n * n - parent_s, n);

    let mut best: Option<((i128, i128), usize, f64)> = None;
    for f in 0..x.ncols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| x[[r, f]]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = w[0] + (w[1] - w[0]) / 2.0;
            let t = if t >= w[1] { w[0] } else { t };
            let l: Vec<usize> = rows.iter().copied().filter(|&r| x[[r, f]] <= t).collect();
            let r: Vec<usize> = rows.iter().copied().filter(|&r| x[[r, f]] > t).collect();
            let score = weighted_gini(&class_counts(y, classes, &l), &class_counts(y, classes, &r));
            if !less(score, parent) {
                continue;
            }
            if best.is_none_or(|(b, _, _)| less(score, b)) {
                best = Some((score, f, t));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return me;
    };
    let l: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| x[[r, feature]] <= threshold)
        .collect();
    let r: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| x[[r, feature]] > threshold)
        .collect();
    let left = grow(x, y, classes, &l, nodes);
    let right = grow(x, y, classes, &r, nodes);
    nodes[me] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    me
}

/// Small datasets with few distinct values so ties are common.
pub fn micro_dataset(rng: &mut impl Rng) -> (Array2<f64>, Vec<u32>) {
    let n = rng.random_range(2..=8usize);
    let p = rng.random_range(1..=3usize);
    let k = rng.random_range(2..=3u32);
    let x = Array2::from_shape_fn((n, p), |_| rng.random_range(0..4) as f64 * 0.5);
    let y = (0..n).map(|_| rng.random_range(0..k)).collect();
    (x, y)
}

pub struct CartSweep {
    pub trials: usize,
    pub tree_mismatches: usize,
    pub split_mismatches: usize,
}

/// Compares the single-tree forest mode and `best_split` against the
/// reference on `trials` micro-datasets.
pub fn cart_sweep(trials: usize, seed: u64) -> CartSweep {
    let mut rng = rng(seed);
    let mut out = CartSweep {
        trials,
        tree_mismatches: 0,
        split_mismatches: 0,
    };
    for t in 0..trials {
        let (x, y) = micro_dataset(&mut rng);
        let expected = oracle_cart(x.view(), &y);
        let data = LabeledDataset::new(x.clone(), y.clone()).unwrap();
        let forest = train_forest(
            &data,
            &ForestConfig {
                seed: t as u64,
                ..ForestConfig::single_exhaustive_tree()
            },
        )
        .unwrap();
        if forest.trees()[0].nodes() != expected.as_slice() {
            out.tree_mismatches += 1;
        }

        let classes = data.classes().to_vec();
        let class_of: Vec<usize> = y
            .iter()
            .map(|l| classes.binary_search(l).unwrap())
            .collect();
        let rows: Vec<usize> = (0..x.nrows()).collect();
        let feats: Vec<usize> = (0..x.ncols()).collect();
        let got = best_split(x.view(), &rows, &class_of, classes.len(), &feats, 1);
        let want = match expected[0] {
            Node::Split {
                feature, threshold, ..
            } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        };
        if got.map(|s| (s.feature, s.threshold)) != want {
            out.split_mismatches += 1;
        }
    }
    out
}

// ---------------------------------------------------------------- PGM

pub const FUZZ_WIDTH: usize = 12;
pub const FUZZ_HEIGHT: usize = 10;

/// Valid file the fuzz corpus mutates. Raster bytes are 200: neither ASCII
/// whitespace nor a digit, so they cannot be mistaken for header tokens.
pub fn fuzz_base() -> Vec<u8> {
    let mut f = format!("P5\n{FUZZ_WIDTH} {FUZZ_HEIGHT}\n255\n").into_bytes();
    f.extend(std::iter::repeat_n(200u8, FUZZ_WIDTH * FUZZ_HEIGHT));
    f
}

fn with_header(header: &str) -> Vec<u8> {
    let mut f = header.as_bytes().to_vec();
    f.extend(std::iter::repeat_n(200u8, FUZZ_WIDTH * FUZZ_HEIGHT));
    f
}

/// Exactly 100 header mutations of [`fuzz_base`], each of which leaves an
/// invalid file.
pub fn pgm_fuzz_corpus() -> Vec<Vec<u8>> {
    let base = fuzz_base();
    let header_len = base.len() - FUZZ_WIDTH * FUZZ_HEIGHT;
    let mut corpus = Vec::new();

    for magic in [
        "P1", "P2", "P3", "P4", "P6", "P7", "p5", "Q5", "5P", "PF", "", "P",
    ] {
        corpus.push(with_header(&format!("{magic}\n12 10\n255\n")));
    }
    corpus.push(with_header("P 5\n12 10\n255\n"));
    corpus.push(with_header("P512 10\n255\n"));

    for dims in [
        "0 10",
        "12 0",
        "0 0",
        "11 10",
        "13 10",
        "12 9",
        "12 11",
        "10 13",
        "-12 10",
        "12 -10",
        "1.2e1 10",
        "0xC 10",
        "twelve 10",
        "12",
        "12 10 7",
        "99999999999999999999999 10",
        "12 99999999999999999999",
        "18446744073709551615 2",
        "121 1",
        "1 119",
        "7 20",
    ] {
        corpus.push(with_header(&format!("P5\n{dims}\n255\n")));
    }
    for maxval in [
        "0", "1", "254", "256", "65535", "25a", "-255", "255.0", "", "0255x", "1e3",
    ] {
        corpus.push(with_header(&format!("P5\n12 10\n{maxval}\n")));
    }
    // Every proper prefix of the header, with no raster.
    for cut in 0..header_len {
        corpus.push(base[..cut].to_vec());
    }
    // Delete one header byte.
    for i in 0..header_len {
        let mut f = base.clone();
        f.remove(i);
        corpus.push(f);
    }
    // Insert a stray letter.
    for i in 0..header_len {
        let mut f = base.clone();
        f.insert(i, b'x');
        corpus.push(f);
    }
    // Header valid but raster one byte short or long.
    let mut short = base.clone();
    short.pop();
    corpus.push(short);
    let mut long = base.clone();
    long.push(200);
    corpus.push(long);
    // Replace each header digit with a letter.
    for i in (0..header_len).filter(|&i| base[i].is_ascii_digit() && i >= 2) {
        let mut f = base.clone();
        f[i] = b'o';
        corpus.push(f);
    }
    for header in [
        "P5x\n12 10\n255\n",
        "P5\n12 10\n255\r\n",
        "P5\n12 10\n255  ",
        "P5\n+12 10\n255\n",
    ] {
        corpus.push(with_header(header));
    }
    // Comment swallowing the maxval line.
    corpus.push(with_header("P5\n12 #10\n255\n"));
    corpus.push(with_header("P5\n12 10\n# 255\n"));

    corpus.truncate(100);
    assert_eq!(
        corpus.len(),
        100,
        "corpus generator produced {} cases",
        corpus.len()
    );
    corpus
}

// ---------------------------------------------------------------- PCA sweep

pub struct PcaSweep {
    pub matrices: usize,
    pub max_eigenvalue_error: f64,
    pub max_component_error: f64,
    pub components_compared: usize,
    pub max_reconstruction_error: f64,
}

/// Random matrices with `N, p <= 12` against the nalgebra reference.
/// Components are compared where the eigenvalue gap exceeds 1e-6, since
/// eigenvectors of repeated eigenvalues are not unique. Reconstruction is
/// checked with all `p` components whenever `N > p`.
pub fn pca_oracle_sweep(matrices: usize, seed: u64) -> PcaSweep {
    use texscore::pca::fit_pca;
    let mut rng = rng(seed);
    let mut out = PcaSweep {
        matrices,
        max_eigenvalue_error: 0.0,
        max_component_error: 0.0,
        components_compared: 0,
        max_reconstruction_error: 0.0,
    };
    for _ in 0..matrices {
        let n = rng.random_range(2..=12usize);
        let p = rng.random_range(1..=12usize);
        let x = random_matrix(&mut rng, n, p);
        let k = n.min(p);
        let model = fit_pca(x.view(), k).unwrap();
        let (values, vectors) = oracle_eigen(&covariance(x.view()));
        let spectrum = model.explained_spectrum();
        for j in 0..k {
            out.max_eigenvalue_error = out
                .max_eigenvalue_error
                .max((spectrum[j] - values[j]).abs());
            let gap_below = if j + 1 < p {
                values[j] - values[j + 1]
            } else {
                f64::INFINITY
            };
            let gap_above = if j > 0 {
                values[j - 1] - values[j]
            } else {
                f64::INFINITY
            };
            if gap_below.min(gap_above) < 1e-6 {
                continue;
            }
            let got: Vec<f64> = model.components().row(j).to_vec();
            let want: Vec<f64> = vectors.column(j).to_vec();
            out.max_component_error = out.max_component_error.max(sign_free_distance(&got, &want));
            out.components_compared += 1;
        }
        if n > p {
            let full = fit_pca(x.view(), p).unwrap();
            for row in x.rows() {
                let back = full.reconstruct(full.project(row).unwrap().view()).unwrap();
                let err = (&back - &row).iter().map(|v| v.abs()).fold(0.0, f64::max);
                out.max_reconstruction_error = out.max_reconstruction_error.max(err);
            }
        }
    }
    out
}

// ---------------------------------------------------------------- training

/// `(initial loss, final loss, parameters finite)` after 50 default epochs
/// on uniform random data.
pub fn training_sanity(seed: u64) -> (f64, f64, bool) {
    let mut rng = rng(seed);
    let data = Array2::from_shape_fn((40, 12), |_| rng.random::<f64>());
    let cfg = TrainConfig {
        epochs: 50,
        ..default_train(seed)
    };
    let init = AutoencoderModel::init(12, 5, cfg.seed).unwrap();
    let before = init.loss(data.view(), cfg.lambda).unwrap();
    let model = texscore::autoencoder::train(data.view(), 5, &cfg).unwrap();
    let after = model.loss(data.view(), cfg.lambda).unwrap();
    (before, after, model.is_finite())
}

/// Bound on the mean absolute reconstruction error per coordinate; the
/// trainer reached 0.026 when it was set.
pub const CAPACITY_BOUND: f64 = 0.05;

/// Mean absolute per-coordinate reconstruction error on four points in
/// three dimensions, three hidden units, no penalty.
pub fn capacity_error() -> f64 {
    let data = ndarray::array![
        [0.1, 0.9, 0.5],
        [0.8, 0.2, 0.3],
        [0.4, 0.4, 0.9],
        [0.9, 0.7, 0.1]
    ];
    let cfg = TrainConfig {
        learning_rate: 0.5,
        epochs: 20_000,
        batch_size: 4,
        lambda: 0.0,
        seed: 4,
    };
    let model = texscore::autoencoder::train(data.view(), 3, &cfg).unwrap();
    let mut total = 0.0;
    for row in data.rows() {
        let (_, xhat) = model.forward(row).unwrap();
        total += (&xhat - &row).iter().map(|v| v.abs()).sum::<f64>();
    }
    total / data.len() as f64
}

// ---------------------------------------------------------------- leakage

/// Training rows, training labels, test rows.
pub type SpyCall = (Array2<f64>, Vec<u32>, Array2<f64>);

/// Classifier that records exactly what the pipeline hands it.
#[derive(Default)]
pub struct Spy {
    pub calls: std::sync::Mutex<Vec<SpyCall>>,
}

impl texscore::pipeline::Classifier for Spy {
    fn fit_predict(
        &self,
        train: &LabeledDataset,
        test: ArrayView2<f64>,
    ) -> texscore::Result<Vec<u32>> {
        self.calls.lock().unwrap().push((
            train.features().to_owned(),
            train.labels().to_vec(),
            test.to_owned(),
        ));
        Ok(vec![train.labels()[0]; test.nrows()])
    }
}

pub fn glcm_rows(images: &[texscore::texture::GrayImage], idx: &[usize]) -> Array2<f64> {
    use texscore::texture::glcm_features;
    let cfg = texscore::FeatureConfig::default();
    let mut out = Array2::zeros((idx.len(), cfg.levels * cfg.levels));
    for (r, &i) in idx.iter().enumerate() {
        let f = glcm_features(&images[i], cfg.levels, cfg.relationship, cfg.raw_counts).unwrap();
        out.row_mut(r).assign(&Array1::from(f));
    }
    out
}

/// Runs an experiment through [`Spy`] and checks that every classifier call
/// received exactly one split's training rows and labels, and that split's
/// test rows without labels. `config` must use default GLCM settings and a
/// mode that keeps the GLCM columns first.
pub fn check_classifier_isolation(
    images: &[texscore::texture::GrayImage],
    labels: &[u32],
    config: &texscore::ExperimentConfig,
) -> Result<(), String> {
    use ndarray::s;
    use texscore::pipeline::{random_split, run_experiment_with, run_seed};
    let glcm = config.features.levels * config.features.levels;
    let spy = Spy::default();
    run_experiment_with(images, labels, config, &spy).map_err(|e| e.to_string())?;
    let calls = spy.calls.into_inner().unwrap();
    if calls.len() != config.runs {
        return Err(format!(
            "{} classifier calls for {} runs",
            calls.len(),
            config.runs
        ));
    }
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..config.runs)
        .map(|r| {
            random_split(
                images.len(),
                config.train_fraction,
                run_seed(config.master_seed, r),
            )
        })
        .collect();
    let mut matched = vec![false; config.runs];
    for (train_x, train_y, test_x) in &calls {
        let base = train_x.slice(s![.., ..glcm]);
        let r = splits
            .iter()
            .position(|(train, _)| glcm_rows(images, train) == base)
            .ok_or("classifier training rows match no split's training images")?;
        let (train, test) = &splits[r];
        matched[r] = true;
        if train_y != &train.iter().map(|&i| labels[i]).collect::<Vec<_>>() {
            return Err(format!("run {r}: training labels differ from the split"));
        }
        if test_x.slice(s![.., ..glcm]) != glcm_rows(images, test) {
            return Err(format!("run {r}: test rows differ from the split"));
        }
    }
    if matched.iter().any(|m| !m) {
        return Err("some run never reached the classifier".into());
    }
    Ok(())
}

/// The manifold fit is meant to see test rows when transductive and not when
/// inductive. Replaces two test images and reports whether the training
/// rows' manifold columns moved, as `(transductive_moved, inductive_moved)`.
pub fn manifold_sensitivity(
    train: &[texscore::texture::GrayImage],
    train_labels: &[u32],
    test: &[texscore::texture::GrayImage],
    replacement: &[texscore::texture::GrayImage; 2],
    config: &texscore::ExperimentConfig,
) -> (bool, bool) {
    use ndarray::s;
    use texscore::pipeline::{mf_tacoma_score_with, Fitting};
    let glcm = config.features.levels * config.features.levels;
    let mut altered = test.to_vec();
    altered[0] = replacement[0].clone();
    altered[1] = replacement[1].clone();
    let train_matrix = |fitting, test: &[texscore::texture::GrayImage]| {
        let spy = Spy::default();
        let cfg = texscore::ExperimentConfig {
            fitting,
            ..config.clone()
        };
        mf_tacoma_score_with(train, train_labels, test, &cfg, 17, &spy).unwrap();
        spy.calls.into_inner().unwrap().remove(0).0
    };
    let moved = |fitting| {
        let a = train_matrix(fitting, test);
        let b = train_matrix(fitting, &altered);
        assert_eq!(
            a.slice(s![.., ..glcm]),
            b.slice(s![.., ..glcm]),
            "GLCM columns must not move"
        );
        a != b
    };
    (moved(Fitting::Transductive), moved(Fitting::Inductive))
}

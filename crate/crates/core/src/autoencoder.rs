//! Single-hidden-layer sigmoid autoencoder trained by plain mini-batch SGD.
//!
//! ```text
//! z    = sigmoid(W1 x + b1)
//! xhat = sigmoid(W2 z + b2)
//! J    = (1/n) sum_i 0.5 |xhat_i - x_i|^2 + (lambda/2) (|W1|_F^2 + |W2|_F^2)
//! ```
//!
//! The hidden activations `z` are the manifold features handed to the
//! pipeline. Biases are not penalized.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::distr::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::textfmt::{push_row, Lines};

const FORMAT_TAG: &str = "texscore-autoencoder";
const FORMAT_VERSION: u32 = 1;

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Weight-decay coefficient on both weight matrices.
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 32,
            lambda: 1e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if self.epochs == 0 {
            return Err(invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    /// `hidden x input`
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// `input x hidden`
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// Gradients with the same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// Per-layer half-width of the uniform initialization.
pub fn init_radius(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

impl AutoencoderModel {
    /// Uniform fan-based initialization, zero biases.
    pub fn init(input_dim: usize, hidden_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 {
            return Err(invalid("autoencoder dimensions must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r1 = init_radius(input_dim, hidden_dim);
        let r2 = init_radius(hidden_dim, input_dim);
        let u1 = Uniform::new_inclusive(-r1, r1).expect("finite radius");
        let u2 = Uniform::new_inclusive(-r2, r2).expect("finite radius");
        let w1 = Array2::from_shape_simple_fn((hidden_dim, input_dim), || u1.sample(&mut rng));
        let w2 = Array2::from_shape_simple_fn((input_dim, hidden_dim), || u2.sample(&mut rng));
        Ok(Self {
            w1,
            b1: Array1::zeros(hidden_dim),
            w2,
            b2: Array1::zeros(input_dim),
        })
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Self {
            w1: Array2::zeros((hidden_dim, input_dim)),
            b1: Array1::zeros(hidden_dim),
            w2: Array2::zeros((input_dim, hidden_dim)),
            b2: Array1::zeros(input_dim),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn is_finite(&self) -> bool {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .all(|v| v.is_finite())
    }

    fn check_cols(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(invalid(format!(
                "expected input of dimension {}, got {}",
                self.input_dim(),
                cols
            )));
        }
        Ok(())
    }

    /// Returns `(z, xhat)` for one input vector.
    pub fn forward(&self, x: ArrayView1<f64>) -> Result<(Array1<f64>, Array1<f64>)> {
        self.check_cols(x.len())?;
        let z = self.hidden(x);
        let xhat = (self.w2.dot(&z) + &self.b2).mapv_into(sigmoid);
        Ok((z, xhat))
    }

    fn forward_batch(&self, x: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
        let z = (x.dot(&self.w1.t()) + &self.b1).mapv_into(sigmoid);
        let xhat = (z.dot(&self.w2.t()) + &self.b2).mapv_into(sigmoid);
        (z, xhat)
    }

    fn hidden(&self, x: ArrayView1<f64>) -> Array1<f64> {
        (self.w1.dot(&x) + &self.b1).mapv_into(sigmoid)
    }

    /// Hidden activations for every row, order preserved. Rows are encoded
    /// one at a time so each matches [`AutoencoderModel::forward`] bit for bit
    /// regardless of its position in the batch.
    pub fn encode(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_cols(data.ncols())?;
        let mut out = Array2::zeros((data.nrows(), self.hidden_dim()));
        for (row, x) in out.rows_mut().into_iter().zip(data.rows()) {
            self.hidden(x).move_into(row);
        }
        Ok(out)
    }

    fn weight_norm_sq(&self) -> f64 {
        self.w1.iter().chain(&self.w2).map(|w| w * w).sum()
    }

    pub fn loss(&self, batch: ArrayView2<f64>, lambda: f64) -> Result<f64> {
        if batch.nrows() == 0 {
            return Err(invalid("loss needs a non-empty batch"));
        }
        self.check_cols(batch.ncols())?;
        let (_, xhat) = self.forward_batch(batch);
        let sq: f64 = Zip::from(&xhat)
            .and(&batch)
            .fold(0.0, |acc, &y, &x| acc + (y - x) * (y - x));
        Ok(0.5 * sq / batch.nrows() as f64 + 0.5 * lambda * self.weight_norm_sq())
    }

    /// Exact back-propagated gradient of [`AutoencoderModel::loss`].
    pub fn gradients(&self, batch: ArrayView2<f64>, lambda: f64) -> Result<Gradients> {
        if batch.nrows() == 0 {
            return Err(invalid("gradients need a non-empty batch"));
        }
        self.check_cols(batch.ncols())?;
        let n = batch.nrows() as f64;
        let (z, xhat) = self.forward_batch(batch);

        let mut d2 = &xhat - &batch;
        Zip::from(&mut d2)
            .and(&xhat)
            .for_each(|d, &y| *d *= y * (1.0 - y) / n);
        let mut w2 = d2.t().dot(&z);
        w2.scaled_add(lambda, &self.w2);
        let b2 = d2.sum_axis(Axis(0));

        let mut d1 = d2.dot(&self.w2);
        Zip::from(&mut d1)
            .and(&z)
            .for_each(|d, &a| *d *= a * (1.0 - a));
        let mut w1 = d1.t().dot(&batch);
        w1.scaled_add(lambda, &self.w1);
        let b1 = d1.sum_axis(Axis(0));

        Ok(Gradients { w1, b1, w2, b2 })
    }

    fn step(&mut self, g: &Gradients, lr: f64) {
        self.w1.scaled_add(-lr, &g.w1);
        self.b1.scaled_add(-lr, &g.b1);
        self.w2.scaled_add(-lr, &g.w2);
        self.b2.scaled_add(-lr, &g.b2);
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{FORMAT_TAG} {FORMAT_VERSION} {} {}\n",
            self.input_dim(),
            self.hidden_dim()
        );
        out.push_str("w1\n");
        for row in self.w1.rows() {
            push_row(&mut out, row.iter().copied());
        }
        out.push_str("b1\n");
        push_row(&mut out, self.b1.iter().copied());
        out.push_str("w2\n");
        for row in self.w2.rows() {
            push_row(&mut out, row.iter().copied());
        }
        out.push_str("b2\n");
        push_row(&mut out, self.b2.iter().copied());
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let header = lines.tagged(FORMAT_TAG)?;
        if header.len() != 3 {
            return Err(lines.err("header must be: texscore-autoencoder <version> <p> <hidden>"));
        }
        let version: u32 = lines.parse(header[0], "version")?;
        if version != FORMAT_VERSION {
            return Err(lines.err(format!("unsupported version {version}")));
        }
        let p: usize = lines.parse(header[1], "input dimension")?;
        let h: usize = lines.parse(header[2], "hidden dimension")?;
        if p == 0 || h == 0 {
            return Err(lines.err("dimensions must be positive"));
        }
        let mut m = Self::zeros(p, h);
        lines.tagged("w1")?;
        for i in 0..h {
            m.w1.row_mut(i).assign(&Array1::from(lines.floats(p)?));
        }
        lines.tagged("b1")?;
        m.b1 = Array1::from(lines.floats(h)?);
        lines.tagged("w2")?;
        for i in 0..p {
            m.w2.row_mut(i).assign(&Array1::from(lines.floats(h)?));
        }
        lines.tagged("b2")?;
        m.b2 = Array1::from(lines.floats(p)?);
        if !m.is_finite() {
            return Err(lines.err("non-finite parameter"));
        }
        Ok(m)
    }
}

/// Trains from a fresh initialization seeded by `config.seed`.
pub fn train(
    data: ArrayView2<f64>,
    hidden_dim: usize,
    config: &TrainConfig,
) -> Result<AutoencoderModel> {
    config.validate()?;
    if data.nrows() == 0 {
        return Err(invalid("training data is empty"));
    }
    let init = AutoencoderModel::init(data.ncols(), hidden_dim, config.seed)?;
    train_from(init, data, config)
}

/// Continues SGD from `model`. Rows are reshuffled every epoch.
pub fn train_from(
    mut model: AutoencoderModel,
    data: ArrayView2<f64>,
    config: &TrainConfig,
) -> Result<AutoencoderModel> {
    config.validate()?;
    if data.nrows() == 0 {
        return Err(invalid("training data is empty"));
    }
    model.check_cols(data.ncols())?;
    // Separate stream from initialization so both are reproducible on their own.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_5a3f_1e0b_u64);
    let mut order: Vec<usize> = (0..data.nrows()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch = data.select(Axis(0), chunk);
            let g = model.gradients(batch.view(), config.lambda)?;
            model.step(&g, config.learning_rate);
        }
    }
    Ok(model)
}

/// Trains an autoencoder on `data` (targets equal inputs) and returns it with
/// the hidden-layer representation of every row.
pub fn mf_learner(
    data: ArrayView2<f64>,
    hidden_dim: usize,
    config: &TrainConfig,
) -> Result<(AutoencoderModel, Array2<f64>)> {
    let model = train(data, hidden_dim, config)?;
    let z = model.encode(data)?;
    Ok((model, z))
}

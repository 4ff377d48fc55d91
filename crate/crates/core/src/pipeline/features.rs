//! Base feature extraction and fitted manifold features.

use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::autoencoder::{self, AutoencoderModel, TrainConfig};
use crate::error::{invalid, Error, Result};
use crate::pca::{fit_pca, PcaModel};
use crate::textfmt::{push_row, Lines};
use crate::texture::{glcm_features, Direction, GrayImage, SpatialRelationship, DEFAULT_LEVELS};

/// Which base columns and which manifold columns make up a feature row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureMode {
    GlcmOnly,
    /// Leading principal components of the GLCM features alone.
    PcOnly(usize),
    /// GLCM features followed by leading principal components.
    GlcmPlusPc(usize),
    /// Pooled pixels followed by autoencoder features of the pooled pixels.
    ImagePlusAeImage(usize),
    /// GLCM features followed by autoencoder features of the pooled pixels.
    GlcmPlusAeImage(usize),
    /// GLCM features followed by autoencoder features of the GLCM features.
    GlcmPlusAeGlcm(usize),
}

impl FeatureMode {
    pub const NAMES: [&'static str; 6] = [
        "glcm",
        "pc-only",
        "glcm+pc",
        "image+ae-image",
        "glcm+ae-image",
        "glcm+ae-glcm",
    ];

    /// Builds a mode from its CLI name and the component count / manifold
    /// dimension (ignored for `glcm`).
    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        let mode = match name {
            "glcm" => return Ok(FeatureMode::GlcmOnly),
            "pc-only" => FeatureMode::PcOnly(dim),
            "glcm+pc" => FeatureMode::GlcmPlusPc(dim),
            "image+ae-image" => FeatureMode::ImagePlusAeImage(dim),
            "glcm+ae-image" => FeatureMode::GlcmPlusAeImage(dim),
            "glcm+ae-glcm" => FeatureMode::GlcmPlusAeGlcm(dim),
            other => {
                return Err(invalid(format!(
                    "unknown feature mode '{other}' (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        mode.validate()?;
        Ok(mode)
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeatureMode::GlcmOnly => "glcm",
            FeatureMode::PcOnly(_) => "pc-only",
            FeatureMode::GlcmPlusPc(_) => "glcm+pc",
            FeatureMode::ImagePlusAeImage(_) => "image+ae-image",
            FeatureMode::GlcmPlusAeImage(_) => "glcm+ae-image",
            FeatureMode::GlcmPlusAeGlcm(_) => "glcm+ae-glcm",
        }
    }

    /// Table label.
    pub fn description(&self) -> &'static str {
        match self {
            FeatureMode::GlcmOnly => "GLCM",
            FeatureMode::PcOnly(_) => "PCs",
            FeatureMode::GlcmPlusPc(_) => "GLCM + PCs",
            FeatureMode::ImagePlusAeImage(_) => "Image + AE image features",
            FeatureMode::GlcmPlusAeImage(_) => "GLCM + AE image features",
            FeatureMode::GlcmPlusAeGlcm(_) => "GLCM + AE GLCM features",
        }
    }

    /// Principal components or hidden units, `None` for `GlcmOnly`.
    pub fn manifold_dim(&self) -> Option<usize> {
        match *self {
            FeatureMode::GlcmOnly => None,
            FeatureMode::PcOnly(k) | FeatureMode::GlcmPlusPc(k) => Some(k),
            FeatureMode::ImagePlusAeImage(h)
            | FeatureMode::GlcmPlusAeImage(h)
            | FeatureMode::GlcmPlusAeGlcm(h) => Some(h),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.manifold_dim() {
            Some(0) => Err(invalid(format!(
                "mode {} needs a dimension of at least 1",
                self.name()
            ))),
            _ => Ok(()),
        }
    }

    fn needs_glcm(&self) -> bool {
        !matches!(self, FeatureMode::ImagePlusAeImage(_))
    }

    fn needs_pixels(&self) -> bool {
        matches!(
            self,
            FeatureMode::ImagePlusAeImage(_) | FeatureMode::GlcmPlusAeImage(_)
        )
    }

    fn keeps_glcm_columns(&self) -> bool {
        !matches!(
            self,
            FeatureMode::PcOnly(_) | FeatureMode::ImagePlusAeImage(_)
        )
    }

    /// Number of columns the mode produces.
    pub fn dimension(&self, cfg: &FeatureConfig) -> usize {
        let glcm = cfg.levels * cfg.levels;
        let pixels = cfg.grid.0 * cfg.grid.1;
        match *self {
            FeatureMode::GlcmOnly => glcm,
            FeatureMode::PcOnly(k) => k,
            FeatureMode::GlcmPlusPc(k) => glcm + k,
            FeatureMode::ImagePlusAeImage(h) => pixels + h,
            FeatureMode::GlcmPlusAeImage(h) | FeatureMode::GlcmPlusAeGlcm(h) => glcm + h,
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.manifold_dim() {
            Some(d) => write!(f, "{}({d})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

/// Settings shared by every feature mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureConfig {
    pub levels: usize,
    pub relationship: SpatialRelationship,
    /// Raw GLCM counts instead of frequencies.
    pub raw_counts: bool,
    /// Pooling grid `(width, height)` for pixel modes.
    pub grid: (usize, usize),
    pub autoencoder: TrainConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVELS,
            relationship: SpatialRelationship::default(),
            raw_counts: false,
            grid: (64, 64),
            autoencoder: TrainConfig::default(),
        }
    }
}

/// Per-image features that do not depend on any fitting: GLCM vectors and
/// pooled pixels, as the mode requires.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeatures {
    pub glcm: Option<Array2<f64>>,
    pub pixels: Option<Array2<f64>>,
    rows: usize,
}

impl RawFeatures {
    pub fn extract(images: &[GrayImage], mode: FeatureMode, cfg: &FeatureConfig) -> Result<Self> {
        if images.is_empty() {
            return Err(invalid("no images"));
        }
        mode.validate()?;
        let glcm = if mode.needs_glcm() {
            let rows = images
                .par_iter()
                .map(|im| glcm_features(im, cfg.levels, cfg.relationship, cfg.raw_counts))
                .collect::<Result<Vec<_>>>()?;
            Some(stack(&rows, cfg.levels * cfg.levels))
        } else {
            None
        };
        let pixels = if mode.needs_pixels() {
            let (w, h) = (images[0].width(), images[0].height());
            if let Some(bad) = images
                .iter()
                .position(|im| im.width() != w || im.height() != h)
            {
                return Err(invalid(format!(
                    "pixel modes need equally sized images: image {} is {}x{}, image 0 is {w}x{h}",
                    bad,
                    images[bad].width(),
                    images[bad].height()
                )));
            }
            let rows = images
                .par_iter()
                .map(|im| im.mean_pool(cfg.grid.0, cfg.grid.1))
                .collect::<Result<Vec<_>>>()?;
            Some(stack(&rows, cfg.grid.0 * cfg.grid.1))
        } else {
            None
        };
        Ok(Self {
            glcm,
            pixels,
            rows: images.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Rows `idx` of every present matrix.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            glcm: self.glcm.as_ref().map(|m| m.select(Axis(0), idx)),
            pixels: self.pixels.as_ref().map(|m| m.select(Axis(0), idx)),
            rows: idx.len(),
        }
    }

    fn glcm(&self) -> Result<&Array2<f64>> {
        self.glcm
            .as_ref()
            .ok_or_else(|| invalid("GLCM features were not extracted for this mode"))
    }

    fn pixels(&self) -> Result<&Array2<f64>> {
        self.pixels
            .as_ref()
            .ok_or_else(|| invalid("pixel features were not extracted for this mode"))
    }
}

fn stack(rows: &[Vec<f64>], width: usize) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), width));
    for (i, r) in rows.iter().enumerate() {
        out.row_mut(i)
            .assign(&ndarray::ArrayView1::from(r.as_slice()));
    }
    out
}

/// Per-column min-max scaling onto [0, 1]. Constant columns map to 0, and
/// values outside the fitted range are clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Array1<f64>,
    pub max: Array1<f64>,
}

impl MinMaxScaler {
    pub fn fit(data: ArrayView2<f64>) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(invalid("cannot fit a scaler on zero rows"));
        }
        let min = data.fold_axis(Axis(0), f64::INFINITY, |a, &b| a.min(b));
        let max = data.fold_axis(Axis(0), f64::NEG_INFINITY, |a, &b| a.max(b));
        Ok(Self { min, max })
    }

    pub fn transform(&self, data: ArrayView2<f64>) -> Array2<f64> {
        let mut out = data.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (lo, hi) = (self.min[j], self.max[j]);
            let range = hi - lo;
            if range > 0.0 {
                col.mapv_inplace(|v| ((v - lo) / range).clamp(0.0, 1.0));
            } else {
                col.fill(0.0);
            }
        }
        out
    }
}

/// Everything fitted on the manifold-fitting rows, ready to turn raw features
/// into classifier inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureModel {
    pub mode: FeatureMode,
    pub config: FeatureConfig,
    pub scaler: Option<MinMaxScaler>,
    pub autoencoder: Option<AutoencoderModel>,
    pub pca: Option<PcaModel>,
}

const FORMAT_TAG: &str = "texscore-features";
const FORMAT_VERSION: u32 = 1;

impl FeatureModel {
    /// Fits the manifold part of `mode` on `raw` rows `fit_rows`, in that
    /// order. `ae_seed` replaces the seed in `cfg.autoencoder`.
    pub fn fit(
        raw: &RawFeatures,
        fit_rows: &[usize],
        mode: FeatureMode,
        cfg: &FeatureConfig,
        ae_seed: u64,
    ) -> Result<Self> {
        mode.validate()?;
        if fit_rows.is_empty() {
            return Err(invalid("no rows to fit manifold features on"));
        }
        let mut model = Self {
            mode,
            config: cfg.clone(),
            scaler: None,
            autoencoder: None,
            pca: None,
        };
        match mode {
            FeatureMode::GlcmOnly => {}
            FeatureMode::PcOnly(k) | FeatureMode::GlcmPlusPc(k) => {
                let data = raw.glcm()?.select(Axis(0), fit_rows);
                model.pca = Some(fit_pca(data.view(), k)?);
            }
            FeatureMode::ImagePlusAeImage(h)
            | FeatureMode::GlcmPlusAeImage(h)
            | FeatureMode::GlcmPlusAeGlcm(h) => {
                let source = if matches!(mode, FeatureMode::GlcmPlusAeGlcm(_)) {
                    raw.glcm()?
                } else {
                    raw.pixels()?
                };
                let data = source.select(Axis(0), fit_rows);
                let scaler = MinMaxScaler::fit(data.view())?;
                let scaled = scaler.transform(data.view());
                let train_cfg = TrainConfig {
                    seed: ae_seed,
                    ..cfg.autoencoder.clone()
                };
                model.autoencoder = Some(autoencoder::train(scaled.view(), h, &train_cfg)?);
                model.scaler = Some(scaler);
            }
        }
        Ok(model)
    }

    pub fn dimension(&self) -> usize {
        self.mode.dimension(&self.config)
    }

    /// Classifier inputs for every row of `raw`: base columns first, manifold
    /// columns appended.
    pub fn transform(&self, raw: &RawFeatures) -> Result<Array2<f64>> {
        let base = if self.mode.keeps_glcm_columns() {
            Some(raw.glcm()?.clone())
        } else if matches!(self.mode, FeatureMode::ImagePlusAeImage(_)) {
            Some(raw.pixels()?.clone())
        } else {
            None
        };
        let manifold = match self.mode {
            FeatureMode::GlcmOnly => None,
            FeatureMode::PcOnly(_) | FeatureMode::GlcmPlusPc(_) => {
                let pca = self
                    .pca
                    .as_ref()
                    .ok_or_else(|| invalid("PCA model missing"))?;
                Some(pca.project_rows(raw.glcm()?.view())?)
            }
            FeatureMode::GlcmPlusAeGlcm(_)
            | FeatureMode::GlcmPlusAeImage(_)
            | FeatureMode::ImagePlusAeImage(_) => {
                let source = if matches!(self.mode, FeatureMode::GlcmPlusAeGlcm(_)) {
                    raw.glcm()?
                } else {
                    raw.pixels()?
                };
                let scaler = self
                    .scaler
                    .as_ref()
                    .ok_or_else(|| invalid("scaler missing"))?;
                let ae = self
                    .autoencoder
                    .as_ref()
                    .ok_or_else(|| invalid("autoencoder missing"))?;
                Some(ae.encode(scaler.transform(source.view()).view())?)
            }
        };
        let out = match (base, manifold) {
            (Some(b), Some(m)) => {
                concatenate(Axis(1), &[b.view(), m.view()]).expect("row counts agree")
            }
            (Some(b), None) => b,
            (None, Some(m)) => m,
            (None, None) => unreachable!("every mode has base or manifold columns"),
        };
        debug_assert_eq!(out.ncols(), self.dimension());
        Ok(out)
    }

    /// Header plus scaler; the autoencoder and PCA models are stored in their
    /// own files.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = format!("{FORMAT_TAG} {FORMAT_VERSION}\n");
        out.push_str(&format!(
            "mode {} {}\n",
            self.mode.name(),
            self.mode.manifold_dim().unwrap_or(0)
        ));
        out.push_str(&format!("levels {}\n", c.levels));
        out.push_str(&format!(
            "relationship {} {}\n",
            c.relationship.direction, c.relationship.distance
        ));
        out.push_str(&format!("raw_counts {}\n", u8::from(c.raw_counts)));
        out.push_str(&format!("grid {} {}\n", c.grid.0, c.grid.1));
        match &self.scaler {
            Some(s) => {
                out.push_str(&format!("scaler {}\n", s.min.len()));
                push_row(&mut out, s.min.iter().copied());
                push_row(&mut out, s.max.iter().copied());
            }
            None => out.push_str("scaler 0\n"),
        }
        out
    }

    pub fn from_text(
        text: &str,
        autoencoder: Option<AutoencoderModel>,
        pca: Option<PcaModel>,
    ) -> Result<Self> {
        let mut lines = Lines::new(text);
        let head = lines.tagged(FORMAT_TAG)?;
        let version: u32 = lines.parse(head.first().copied().unwrap_or(""), "version")?;
        if version != FORMAT_VERSION {
            return Err(lines.err(format!("unsupported version {version}")));
        }
        let m = lines.tagged("mode")?;
        if m.len() != 2 {
            return Err(lines.err("expected: mode <name> <dim>"));
        }
        let mode = FeatureMode::from_name(m[0], lines.parse(m[1], "dimension")?)
            .map_err(|e| lines.err(e.to_string()))?;
        let lv = lines.tagged("levels")?;
        let levels: usize = lines.parse(lv.first().copied().unwrap_or(""), "levels")?;
        let rel = lines.tagged("relationship")?;
        if rel.len() != 2 {
            return Err(lines.err("expected: relationship <direction> <distance>"));
        }
        let direction = Direction::from_str(rel[0]).map_err(|e| lines.err(e.to_string()))?;
        let distance: usize = lines.parse(rel[1], "distance")?;
        let relationship =
            SpatialRelationship::new(direction, distance).map_err(|e| lines.err(e.to_string()))?;
        let rc = lines.tagged("raw_counts")?;
        let raw_counts = match rc.first().copied() {
            Some("0") => false,
            Some("1") => true,
            _ => return Err(lines.err("raw_counts must be 0 or 1")),
        };
        let g = lines.tagged("grid")?;
        if g.len() != 2 {
            return Err(lines.err("expected: grid <width> <height>"));
        }
        let grid = (
            lines.parse(g[0], "grid width")?,
            lines.parse(g[1], "grid height")?,
        );
        let s = lines.tagged("scaler")?;
        let scaler_len: usize = lines.parse(s.first().copied().unwrap_or(""), "scaler length")?;
        let scaler = if scaler_len > 0 {
            let min = Array1::from(lines.floats(scaler_len)?);
            let max = Array1::from(lines.floats(scaler_len)?);
            Some(MinMaxScaler { min, max })
        } else {
            None
        };
        let model = Self {
            mode,
            config: FeatureConfig {
                levels,
                relationship,
                raw_counts,
                grid,
                autoencoder: TrainConfig::default(),
            },
            scaler,
            autoencoder,
            pca,
        };
        model.check_complete()?;
        Ok(model)
    }

    fn check_complete(&self) -> Result<()> {
        let missing = |what: &str| {
            Err(Error::InvalidArgument(format!(
                "mode {} requires a {what} model",
                self.mode.name()
            )))
        };
        match self.mode {
            FeatureMode::PcOnly(_) | FeatureMode::GlcmPlusPc(_) if self.pca.is_none() => {
                missing("PCA")
            }
            FeatureMode::ImagePlusAeImage(_)
            | FeatureMode::GlcmPlusAeImage(_)
            | FeatureMode::GlcmPlusAeGlcm(_)
                if self.autoencoder.is_none() || self.scaler.is_none() =>
            {
                missing("autoencoder")
            }
            _ => Ok(()),
        }
    }
}

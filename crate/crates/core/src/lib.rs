//! Texture-based image scoring with manifold regularizing features.
//!
//! Images are reduced to gray-level co-occurrence matrices ([`texture`]),
//! optionally augmented with low-dimensional representations learned by PCA
//! ([`pca`]) or a one-hidden-layer autoencoder ([`autoencoder`]), and scored
//! by a random forest ([`forest`]). [`pipeline`] ties these together under a
//! repeated random-split protocol.

pub mod autoencoder;
pub mod error;
pub mod forest;
pub mod io;
mod linalg;
pub mod pca;
pub mod pipeline;
pub mod seed;
pub mod synth;
mod textfmt;
pub mod texture;

pub use autoencoder::{AutoencoderModel, TrainConfig};
pub use error::{Error, Result};
pub use forest::{ForestConfig, ForestModel, Label, LabeledDataset};
pub use linalg::{symmetric_eigen, SymmetricEigen};
pub use pca::{fit_pca, PcaModel};
pub use pipeline::{ExperimentConfig, FeatureConfig, FeatureMode, Fitting, ScoreReport};
pub use synth::{synth_generate, SynthSpec};
pub use texture::{
    compute_glcm, direction_offset, quantize, Direction, Glcm, GrayImage, QuantizedImage,
    SpatialRelationship,
};

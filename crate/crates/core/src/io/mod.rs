//! File formats: binary PGM rasters and CSV manifests.

pub mod manifest;
pub mod pgm;

pub use manifest::{Manifest, ManifestEntry, DEFAULT_LABELS};
pub use pgm::{decode_pgm, encode_pgm, load_pgm, write_pgm};

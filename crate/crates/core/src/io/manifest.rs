//! `path,label` CSV manifests. Relative paths resolve against the manifest's
//! directory; an empty label marks an unlabeled (to-be-scored) image.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{invalid, Error, Result};
use crate::forest::Label;
use crate::io::pgm::load_pgm;
use crate::texture::GrayImage;

/// Labels accepted unless the caller supplies another set.
pub const DEFAULT_LABELS: [Label; 4] = [0, 1, 2, 3];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Option<Label>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>, label_set: &[Label]) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::parse(&text, base, label_set)
    }

    pub fn parse(text: &str, base: &Path, label_set: &[Label]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| invalid(format!("manifest header: {e}")))?
            .clone();
        if headers.len() != 2 || &headers[0] != "path" || &headers[1] != "label" {
            return Err(Error::Format {
                line: 1,
                message: "manifest header must be 'path,label'".into(),
            });
        }
        let mut seen = HashSet::new();
        let mut entries = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 2;
            let record = record.map_err(|e| Error::Format {
                line: row,
                message: e.to_string(),
            })?;
            let fmt_err = |message: String| Error::Format { line: row, message };
            if record.len() != 2 {
                return Err(fmt_err(format!(
                    "expected 2 fields, found {}",
                    record.len()
                )));
            }
            if record[0].is_empty() {
                return Err(fmt_err("empty path".into()));
            }
            let raw = PathBuf::from(&record[0]);
            let path = if raw.is_absolute() {
                raw
            } else {
                base.join(raw)
            };
            if !seen.insert(path.clone()) {
                return Err(fmt_err(format!("duplicate path '{}'", path.display())));
            }
            let label = if record[1].is_empty() {
                None
            } else {
                let l: Label = record[1]
                    .parse()
                    .map_err(|_| fmt_err(format!("label '{}' is not an integer", &record[1])))?;
                if !label_set.contains(&l) {
                    return Err(fmt_err(format!(
                        "label {l} outside the label set {label_set:?}"
                    )));
                }
                Some(l)
            };
            entries.push(ManifestEntry { path, label });
        }
        Ok(Self { entries })
    }

    /// Writes paths relative to `base` when possible.
    pub fn to_csv(&self, base: &Path) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["path", "label"]).expect("in-memory write");
        for e in &self.entries {
            let p = e.path.strip_prefix(base).unwrap_or(&e.path);
            let label = e.label.map(|l| l.to_string()).unwrap_or_default();
            w.write_record([p.to_string_lossy().as_ref(), label.as_str()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 paths")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Loads every image in manifest order.
    pub fn load_images(&self) -> Result<Vec<GrayImage>> {
        self.entries
            .iter()
            .map(|e| {
                load_pgm(&e.path).map_err(|err| match err {
                    Error::Io(io) => invalid(format!("cannot read '{}': {io}", e.path.display())),
                    Error::Parse { offset, message } => Error::Parse {
                        offset,
                        message: format!("{}: {message}", e.path.display()),
                    },
                    other => other,
                })
            })
            .collect()
    }
}

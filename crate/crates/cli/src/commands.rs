use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use texscore::autoencoder::{AutoencoderModel, TrainConfig};
use texscore::forest::{train_forest, ForestConfig, ForestModel, Label, LabeledDataset};
use texscore::io::{load_pgm, write_pgm, Manifest, ManifestEntry};
use texscore::pca::{fit_pca, spectrum_csv, PcaModel};
use texscore::pipeline::{
    self, ExperimentConfig, FeatureConfig, FeatureMode, FeatureModel, Fitting, RawFeatures,
    ScoreReport,
};
use texscore::seed::{self, stream};
use texscore::synth::{synth_generate, SynthSpec};
use texscore::texture::{glcm_features, Direction, GrayImage, SpatialRelationship};

use crate::{
    Cli, Command, ExperimentArgs, GlcmArgs, ModelArgs, ScoreArgs, SpectrumArgs, SynthArgs,
    TextureArgs, TrainArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(texscore::Error),
}

impl From<texscore::Error> for CliError {
    fn from(e: texscore::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

const FEATURES_FILE: &str = "features.txt";
const FOREST_FILE: &str = "forest.txt";
const AUTOENCODER_FILE: &str = "autoencoder.txt";
const PCA_FILE: &str = "pca.txt";

pub fn dispatch(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Glcm(a) => glcm(a, &cli.labels),
        Command::PcaSpectrum(a) => pca_spectrum(a),
        Command::Train(a) => train(a, &cli.labels),
        Command::Score(a) => score(a, &cli.labels),
        Command::Experiment(a) => experiment(a, &cli.labels),
        Command::Synth(a) => synth(a),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn relationship(t: &TextureArgs) -> CliResult<SpatialRelationship> {
    let direction: Direction = t
        .direction
        .parse()
        .map_err(|e: texscore::Error| CliError::Usage(e.to_string()))?;
    SpatialRelationship::new(direction, t.distance).map_err(|e| CliError::Usage(e.to_string()))
}

fn feature_config(m: &ModelArgs) -> CliResult<FeatureConfig> {
    Ok(FeatureConfig {
        levels: m.texture.levels,
        relationship: relationship(&m.texture)?,
        raw_counts: m.texture.raw_counts,
        grid: (m.grid, m.grid),
        autoencoder: TrainConfig {
            learning_rate: m.lr,
            epochs: m.epochs,
            batch_size: m.batch_size,
            lambda: m.lambda,
            seed: m.seed,
        },
    })
}

fn feature_mode(m: &ModelArgs) -> CliResult<FeatureMode> {
    let dim = match m.mode.as_str() {
        "pc-only" | "glcm+pc" => m.k,
        _ => m.dim,
    };
    FeatureMode::from_name(&m.mode, dim).map_err(|e| CliError::Usage(e.to_string()))
}

fn forest_config(m: &ModelArgs) -> ForestConfig {
    ForestConfig {
        n_trees: m.trees,
        mtry: m.mtry,
        min_leaf: m.min_leaf,
        seed: m.seed,
        ..ForestConfig::default()
    }
}

fn experiment_config(m: &ModelArgs) -> CliResult<ExperimentConfig> {
    Ok(ExperimentConfig {
        mode: feature_mode(m)?,
        master_seed: m.seed,
        features: feature_config(m)?,
        forest: forest_config(m),
        ..ExperimentConfig::default()
    })
}

fn image_list(
    manifest: Option<&Path>,
    positional: &[PathBuf],
    labels: &[Label],
) -> CliResult<Vec<PathBuf>> {
    match (manifest, positional.is_empty()) {
        (Some(m), true) => Ok(Manifest::load(m, labels)?
            .entries
            .into_iter()
            .map(|e| e.path)
            .collect()),
        (None, false) => Ok(positional.to_vec()),
        (Some(_), false) => Err(CliError::Usage(
            "give either --manifest or image paths, not both".into(),
        )),
        (None, true) => Err(CliError::Usage("no images given".into())),
    }
}

fn load_images(paths: &[PathBuf]) -> CliResult<Vec<GrayImage>> {
    let m = Manifest {
        entries: paths
            .iter()
            .map(|p| ManifestEntry {
                path: p.clone(),
                label: None,
            })
            .collect(),
    };
    Ok(m.load_images()?)
}

fn csv_row(values: impl IntoIterator<Item = f64>) -> String {
    let parts: Vec<String> = values.into_iter().map(|v| v.to_string()).collect();
    parts.join(",")
}

fn glcm(a: &GlcmArgs, labels: &[Label]) -> CliResult {
    let rel = relationship(&a.texture)?;
    let paths = image_list(a.manifest.as_deref(), &a.images, labels)?;
    let mut out = String::new();
    for p in &paths {
        let img = load_pgm(p)?;
        let f = glcm_features(&img, a.texture.levels, rel, a.texture.raw_counts)?;
        out.push_str(&csv_row(f));
        out.push('\n');
    }
    write_output(a.out.as_deref(), &out)
}

/// Headerless numeric CSV.
pub fn read_feature_csv(text: &str) -> texscore::Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| texscore::Error::Format {
                        line: i + 1,
                        message: format!("bad number '{t}'"),
                    })
            })
            .collect::<texscore::Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(texscore::Error::Format {
                    line: i + 1,
                    message: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let p = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Array2::from_shape_vec((rows.len(), p), flat).expect("rectangular rows"))
}

fn pca_spectrum(a: &SpectrumArgs) -> CliResult {
    let data = read_feature_csv(&fs::read_to_string(&a.features)?)?;
    let k = a.k.unwrap_or(data.nrows().min(data.ncols()));
    let model = fit_pca(data.view(), k)?;
    write_output(a.out.as_deref(), &spectrum_csv(&model.explained_spectrum()))
}

fn labeled_split(manifest: &Manifest) -> (Vec<usize>, Vec<usize>) {
    let mut labeled = Vec::new();
    let mut unlabeled = Vec::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        if e.label.is_some() {
            labeled.push(i);
        } else {
            unlabeled.push(i);
        }
    }
    (labeled, unlabeled)
}

fn train(a: &TrainArgs, labels: &[Label]) -> CliResult {
    let cfg = experiment_config(&a.model)?;
    let manifest = Manifest::load(&a.manifest, labels)?;
    let (labeled, _) = labeled_split(&manifest);
    if labeled.is_empty() {
        return Err(CliError::Data(texscore::Error::InvalidArgument(
            "manifest has no labeled images".into(),
        )));
    }
    let images = load_images(
        &labeled
            .iter()
            .map(|&i| manifest.entries[i].path.clone())
            .collect::<Vec<_>>(),
    )?;
    let y: Vec<Label> = labeled
        .iter()
        .map(|&i| manifest.entries[i].label.expect("labeled"))
        .collect();

    let raw = RawFeatures::extract(&images, cfg.mode, &cfg.features)?;
    let rows: Vec<usize> = (0..raw.len()).collect();
    let fm = FeatureModel::fit(
        &raw,
        &rows,
        cfg.mode,
        &cfg.features,
        seed::derive(cfg.master_seed, stream::AUTOENCODER),
    )?;
    let x = fm.transform(&raw)?;
    let forest = train_forest(
        &LabeledDataset::new(x, y)?,
        &ForestConfig {
            seed: seed::derive(cfg.master_seed, stream::FOREST),
            ..cfg.forest.clone()
        },
    )?;

    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join(FEATURES_FILE), fm.to_text())?;
    fs::write(a.out.join(FOREST_FILE), forest.to_text())?;
    if let Some(ae) = &fm.autoencoder {
        fs::write(a.out.join(AUTOENCODER_FILE), ae.to_text())?;
    }
    if let Some(pca) = &fm.pca {
        fs::write(a.out.join(PCA_FILE), pca.to_text())?;
    }
    Ok(())
}

fn read_optional(path: PathBuf) -> CliResult<Option<String>> {
    match fs::read_to_string(&path) {
        Ok(t) => Ok(Some(t)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn labels_csv(paths: &[PathBuf], labels: &[Label]) -> String {
    let mut out = String::from("path,label\n");
    for (p, l) in paths.iter().zip(labels) {
        out.push_str(&format!("{},{l}\n", p.display()));
    }
    out
}

fn score(a: &ScoreArgs, labels: &[Label]) -> CliResult {
    match &a.models {
        Some(dir) => score_with_models(a, dir, labels),
        None => score_transductive(a, labels),
    }
}

fn score_with_models(a: &ScoreArgs, dir: &Path, labels: &[Label]) -> CliResult {
    let ae = read_optional(dir.join(AUTOENCODER_FILE))?
        .map(|t| AutoencoderModel::from_text(&t))
        .transpose()?;
    let pca = read_optional(dir.join(PCA_FILE))?
        .map(|t| PcaModel::from_text(&t))
        .transpose()?;
    let fm = FeatureModel::from_text(&fs::read_to_string(dir.join(FEATURES_FILE))?, ae, pca)?;
    let forest = ForestModel::from_text(&fs::read_to_string(dir.join(FOREST_FILE))?)?;

    let paths = image_list(a.manifest.as_deref(), &a.images, labels)?;
    let images = load_images(&paths)?;
    let raw = RawFeatures::extract(&images, fm.mode, &fm.config)?;
    let pred = forest.predict_rows(fm.transform(&raw)?.view())?;
    write_output(a.out.as_deref(), &labels_csv(&paths, &pred))
}

fn score_transductive(a: &ScoreArgs, labels: &[Label]) -> CliResult {
    let Some(manifest_path) = &a.manifest else {
        return Err(CliError::Usage(
            "score needs --models or a --manifest with labeled and unlabeled rows".into(),
        ));
    };
    if !a.images.is_empty() {
        return Err(CliError::Usage(
            "positional images are only accepted with --models".into(),
        ));
    }
    let mut cfg = experiment_config(&a.model)?;
    if a.inductive {
        cfg.fitting = Fitting::Inductive;
    }
    let manifest = Manifest::load(manifest_path, labels)?;
    let (labeled, unlabeled) = labeled_split(&manifest);
    let path_of = |idx: &[usize]| {
        idx.iter()
            .map(|&i| manifest.entries[i].path.clone())
            .collect::<Vec<_>>()
    };
    let train_paths = path_of(&labeled);
    let test_paths = path_of(&unlabeled);
    let train_images = load_images(&train_paths)?;
    let test_images = load_images(&test_paths)?;
    let y: Vec<Label> = labeled
        .iter()
        .map(|&i| manifest.entries[i].label.expect("labeled"))
        .collect();
    let pred = pipeline::mf_tacoma_score(&train_images, &y, &test_images, &cfg, cfg.master_seed)?;
    write_output(a.out.as_deref(), &labels_csv(&test_paths, &pred))
}

fn experiment(a: &ExperimentArgs, labels: &[Label]) -> CliResult {
    let mut cfg = experiment_config(&a.model)?;
    cfg.runs = a.runs;
    cfg.train_fraction = a.train_fraction;
    cfg.shared_model = a.shared_model;
    if a.inductive {
        cfg.fitting = Fitting::Inductive;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let manifest = Manifest::load(&a.manifest, labels)?;
    let (labeled, unlabeled) = labeled_split(&manifest);
    if !unlabeled.is_empty() {
        eprintln!("note: ignoring {} unlabeled manifest rows", unlabeled.len());
    }
    let paths: Vec<PathBuf> = labeled
        .iter()
        .map(|&i| manifest.entries[i].path.clone())
        .collect();
    let images = load_images(&paths)?;
    let y: Vec<Label> = labeled
        .iter()
        .map(|&i| manifest.entries[i].label.expect("labeled"))
        .collect();

    let reports = if a.k_list.is_empty() {
        vec![pipeline::run_experiment(&images, &y, &cfg)?]
    } else {
        pipeline::pca_sweep_reports(&images, &y, &a.k_list, a.sole, &cfg)?
    };
    print!("{}", ScoreReport::to_table(&reports));
    if let Some(out) = &a.out {
        fs::write(out, ScoreReport::to_csv(&reports))?;
    }
    Ok(())
}

fn synth(a: &SynthArgs) -> CliResult {
    let spec = SynthSpec {
        width: a.size,
        height: a.size,
        ..SynthSpec::new(a.per_class, a.seed)
    };
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (images, labels) = synth_generate(&spec)?;
    fs::create_dir_all(&a.out)?;
    let mut entries = Vec::with_capacity(images.len());
    let mut counters = std::collections::HashMap::<Label, usize>::new();
    for (img, &label) in images.iter().zip(&labels) {
        let n = counters.entry(label).or_default();
        let path = a.out.join(format!("class{label}_{:04}.pgm", *n));
        *n += 1;
        write_pgm(&path, img)?;
        entries.push(ManifestEntry {
            path,
            label: Some(label),
        });
    }
    let manifest = Manifest { entries };
    fs::write(a.out.join("manifest.csv"), manifest.to_csv(&a.out))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_csv_parsing() {
        let m = read_feature_csv("1,2,3\n4,5,6\n").unwrap();
        assert_eq!(m.dim(), (2, 3));
        assert_eq!(m[[1, 2]], 6.0);
        assert!(read_feature_csv("1,2\n3\n").is_err());
        assert!(read_feature_csv("1,x\n").is_err());
    }

    #[test]
    fn mode_dimension_flag_selection() {
        let mut m = ModelArgs {
            mode: "pc-only".into(),
            dim: 25,
            k: 7,
            texture: TextureArgs {
                direction: "ne".into(),
                distance: 3,
                levels: 51,
                raw_counts: false,
            },
            grid: 64,
            epochs: 1,
            lr: 0.1,
            batch_size: 4,
            lambda: 0.0,
            trees: 1,
            mtry: None,
            min_leaf: 1,
            seed: 0,
        };
        assert_eq!(feature_mode(&m).unwrap(), FeatureMode::PcOnly(7));
        m.mode = "glcm+ae-glcm".into();
        assert_eq!(feature_mode(&m).unwrap(), FeatureMode::GlcmPlusAeGlcm(25));
        m.mode = "bogus".into();
        assert!(matches!(feature_mode(&m), Err(CliError::Usage(_))));
    }
}

use std::fmt::Write as _;
use std::str::FromStr;

use super::{ExperimentConfig, FeatureMode, Fitting};
use crate::error::{Error, Result};
use crate::texture::{Direction, SpatialRelationship};

const CSV_HEADER: &str =
    "features,manifold_dim,fitting,runs,train_fraction,master_seed,levels,direction,distance,mean_error,std_error,per_run_errors";

/// Per-run test error rates of one experiment and their summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub mode: FeatureMode,
    pub fitting: Fitting,
    pub runs: usize,
    pub train_fraction: f64,
    pub master_seed: u64,
    pub levels: usize,
    pub relationship: SpatialRelationship,
    pub per_run_errors: Vec<f64>,
    pub mean_error: f64,
    /// Sample standard deviation (divisor `runs - 1`), 0 for a single run.
    pub std_error: f64,
}

impl ScoreReport {
    pub fn from_errors(config: &ExperimentConfig, errors: Vec<f64>) -> Self {
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let std = if errors.len() > 1 {
            (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mode: config.mode,
            fitting: config.fitting,
            runs: config.runs,
            train_fraction: config.train_fraction,
            master_seed: config.master_seed,
            levels: config.features.levels,
            relationship: config.features.relationship,
            per_run_errors: errors,
            mean_error: mean,
            std_error: std,
        }
    }

    fn csv_row(&self) -> String {
        let errors: Vec<String> = self.per_run_errors.iter().map(|e| e.to_string()).collect();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.mode.name(),
            self.mode.manifold_dim().unwrap_or(0),
            self.fitting.name(),
            self.runs,
            self.train_fraction,
            self.master_seed,
            self.levels,
            self.relationship.direction,
            self.relationship.distance,
            self.mean_error,
            self.std_error,
            errors.join(";")
        )
    }

    /// One header line and one row per report.
    pub fn to_csv(reports: &[ScoreReport]) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in reports {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Vec<ScoreReport>> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            _ => {
                return Err(Error::Format {
                    line: 1,
                    message: "missing report header".into(),
                })
            }
        }
        lines.map(|(i, l)| parse_row(l.trim(), i + 1)).collect()
    }

    /// Fixed-width table: Features, Dim. of manifold, Error rate.
    pub fn to_table(reports: &[ScoreReport]) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<28} {:>16} {:>18}",
            "Features", "Dim. of manifold", "Error rate"
        );
        let _ = writeln!(out, "{}", "-".repeat(64));
        for r in reports {
            let dim = r
                .mode
                .manifold_dim()
                .map(|d| d.to_string())
                .unwrap_or_else(|| "---".into());
            let err = format!(
                "{:.2}% (sd {:.2})",
                100.0 * r.mean_error,
                100.0 * r.std_error
            );
            let _ = writeln!(out, "{:<28} {:>16} {:>18}", r.mode.description(), dim, err);
        }
        out
    }
}

fn parse_row(line: &str, lineno: usize) -> Result<ScoreReport> {
    let err = |message: String| Error::Format {
        line: lineno,
        message,
    };
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 12 {
        return Err(err(format!("expected 12 fields, found {}", f.len())));
    }
    fn num<T: FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
        s.parse().map_err(|_| Error::Format {
            line,
            message: format!("bad {what} '{s}'"),
        })
    }
    let dim: usize = num(f[1], "manifold dimension", lineno)?;
    let mode = FeatureMode::from_name(f[0], dim).map_err(|e| err(e.to_string()))?;
    let fitting = match f[2] {
        "transductive" => Fitting::Transductive,
        "inductive" => Fitting::Inductive,
        other => return Err(err(format!("bad fitting '{other}'"))),
    };
    let direction = Direction::from_str(f[7]).map_err(|e| err(e.to_string()))?;
    let distance: usize = num(f[8], "distance", lineno)?;
    let per_run_errors = if f[11].is_empty() {
        Vec::new()
    } else {
        f[11]
            .split(';')
            .map(|e| num::<f64>(e, "error rate", lineno))
            .collect::<Result<Vec<_>>>()?
    };
    let runs: usize = num(f[3], "run count", lineno)?;
    if per_run_errors.len() != runs {
        return Err(err(format!(
            "{} per-run errors for {runs} runs",
            per_run_errors.len()
        )));
    }
    Ok(ScoreReport {
        mode,
        fitting,
        runs,
        train_fraction: num(f[4], "train fraction", lineno)?,
        master_seed: num(f[5], "seed", lineno)?,
        levels: num(f[6], "levels", lineno)?,
        relationship: SpatialRelationship::new(direction, distance)
            .map_err(|e| err(e.to_string()))?,
        per_run_errors,
        mean_error: num(f[9], "mean error", lineno)?,
        std_error: num(f[10], "std error", lineno)?,
    })
}

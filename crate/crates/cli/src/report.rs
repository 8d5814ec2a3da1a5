//! CSV emission. Reals are written with 17 significant digits in
//! scientific notation, independent of locale.

use std::path::{Path, PathBuf};

use fourier_debias::experiments::{AdaptiveDiffRow, ErrorStats, SimulationRow};

use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Real(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Field {
    fn render(&self) -> String {
        match self {
            Self::Real(v) => real(*v),
            Self::Int(v) => v.to_string(),
            Self::Text(s) => s.clone(),
            Self::Empty => String::new(),
        }
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Self::Real(v)
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Self::Int(v as u64)
    }
}

impl From<Option<f64>> for Field {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Self::Empty, Self::Real)
    }
}

/// `1.2345678901234567e-2`.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Manifest comment line, header, rows.
pub fn table(manifest: &RunManifest, header: &[&str], rows: &[Vec<Field>]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row.iter().map(Field::render))?;
    }
    let body = w
        .into_inner()
        .map_err(|e| CliError::Csv(e.into_error().into()))?;
    let mut out = manifest.csv_comment()?;
    out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
    Ok(out)
}

/// Single-row table from `(column, value)` pairs.
pub fn record(manifest: &RunManifest, fields: &[(&str, Field)]) -> CliResult<String> {
    let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
    let row: Vec<Field> = fields.iter().map(|(_, v)| v.clone()).collect();
    table(manifest, &header, &[row])
}

const ESTIMATORS: [&str; 3] = ["plugin", "tf", "adaptive"];
const STATS: [&str; 6] = [
    "bias",
    "variance",
    "mse",
    "bias_se",
    "variance_se",
    "mse_se",
];

pub fn sweep_header() -> Vec<String> {
    let mut h: Vec<String> = ["alpha", "d", "threshold", "cutoff_level", "trials"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for stat in STATS {
        for est in ESTIMATORS {
            h.push(format!("{est}_{stat}"));
        }
    }
    h.extend(
        [
            "mean_k_hat",
            "ref_half_power",
            "ref_full_power",
            "ref_root_n",
            "ref_inv_n",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

fn stat(s: Option<&ErrorStats>, which: &str) -> Field {
    let Some(s) = s else {
        return Field::Empty;
    };
    Field::Real(match which {
        "bias" => s.bias,
        "variance" => s.variance,
        "mse" => s.mse,
        "bias_se" => s.bias_se,
        "variance_se" => s.variance_se,
        "mse_se" => s.mse_se,
        _ => unreachable!("unknown statistic {which}"),
    })
}

pub fn sweep_row(r: &SimulationRow) -> Vec<Field> {
    let mut row = vec![
        Field::Real(r.alpha),
        r.d.into(),
        Field::Real(r.threshold),
        Field::Int(u64::from(r.cutoff_level)),
        r.trials.into(),
    ];
    for which in STATS {
        row.push(stat(Some(&r.plugin), which));
        row.push(stat(Some(&r.tf), which));
        row.push(stat(r.adaptive.as_ref(), which));
    }
    row.push(r.mean_k_hat.into());
    row.push(Field::Real(r.reference.half_power));
    row.push(Field::Real(r.reference.full_power));
    row.push(Field::Real(r.reference.root_n));
    row.push(Field::Real(r.reference.inv_n));
    row
}

pub fn sweep_csv(manifest: &RunManifest, rows: &[SimulationRow]) -> CliResult<String> {
    let header = sweep_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<Field>> = rows.iter().map(sweep_row).collect();
    table(manifest, &header, &rows)
}

pub fn adaptive_diff_csv(manifest: &RunManifest, rows: &[AdaptiveDiffRow]) -> CliResult<String> {
    let header = [
        "alpha",
        "d",
        "trials",
        "diff_mean",
        "diff_variance",
        "diff_mean_se",
        "diff_abs_p99",
    ];
    let rows: Vec<Vec<Field>> = rows
        .iter()
        .map(|r| {
            vec![
                Field::Real(r.alpha),
                r.d.into(),
                r.trials.into(),
                Field::Real(r.diff.mean),
                Field::Real(r.diff.variance),
                Field::Real(r.diff.mean_se),
                Field::Real(r.diff.abs_p99),
            ]
        })
        .collect();
    table(manifest, &header, &rows)
}

/// Writes `content` to `dir/name`, creating `dir` if needed.
pub fn write_artifact(dir: &Path, name: &str, content: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

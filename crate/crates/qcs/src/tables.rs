//! Delimited output tables. Every file starts with a
//! `# config_digest=<hex>, seed=<n>` comment line and is written atomically
//! (temporary sibling, then rename). Floats use shortest round-trip
//! formatting, so identical inputs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use qcs_core::data::TaskKind;
use qcs_core::metrics::{ClassificationReport, CorrelationRow, MetricReport, RegressionReport};
use qcs_core::scoring::{ScoreCard, ScoringVariant};

use crate::error::FormatError;

/// Digest and global seed stamped on every artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub digest: String,
    pub seed: u64,
}

impl Provenance {
    pub fn comment(&self) -> String {
        format!("config_digest={}, seed={}", self.digest, self.seed)
    }
}

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(FormatError::io(parent))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(FormatError::io(&tmp))?;
    fs::rename(&tmp, path).map_err(FormatError::io(path))
}

pub fn render_table(provenance: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, FormatError> {
    let mut out = format!("# {}\n", provenance.comment()).into_bytes();
    let mut wtr = csv::Writer::from_writer(&mut out);
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(row)?;
    }
    wtr.flush().map_err(FormatError::io("<buffer>"))?;
    drop(wtr);
    Ok(out)
}

pub fn write_table(path: &Path, provenance: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Result<(), FormatError> {
    write_atomic(path, &render_table(provenance, header, rows)?)
}

/// Reads a table, checking its header, and returns the data records.
pub fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, FormatError> {
    let bytes = fs::read(path).map_err(FormatError::io(path))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes.as_slice());
    let found = rdr.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(FormatError::Header(format!(
            "{}: expected columns {}, found {}",
            path.display(),
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(rdr.records().collect::<Result<_, _>>()?)
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, row: usize, header: &[&str], column: usize) -> Result<T, FormatError> {
    let cell = record.get(column).unwrap_or_default();
    cell.parse().map_err(|_| FormatError::cell(row, header[column], format!("cannot parse '{cell}'")))
}

/// Optional float: empty cell means absent.
fn opt_field(record: &csv::StringRecord, row: usize, header: &[&str], column: usize) -> Result<Option<f64>, FormatError> {
    match record.get(column) {
        Some("") | None => Ok(None),
        Some(_) => field(record, row, header, column).map(Some),
    }
}

// Manifest.

pub const MANIFEST_HEADER: [&str; 4] = ["circuit_id", "file", "seed", "config_digest"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub circuit_id: usize,
    /// Genome file path relative to the output directory.
    pub file: String,
    /// Per-circuit seed used by scoring and training.
    pub seed: u64,
}

pub fn write_manifest(path: &Path, provenance: &Provenance, entries: &[ManifestEntry]) -> Result<(), FormatError> {
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| vec![e.circuit_id.to_string(), e.file.clone(), e.seed.to_string(), provenance.digest.clone()])
        .collect();
    write_table(path, provenance, &MANIFEST_HEADER, &rows)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, FormatError> {
    read_table(path, &MANIFEST_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(ManifestEntry {
                circuit_id: field(r, i + 1, &MANIFEST_HEADER, 0)?,
                file: r.get(1).unwrap_or_default().to_string(),
                seed: field(r, i + 1, &MANIFEST_HEADER, 2)?,
            })
        })
        .collect()
}

// Scorecards.

pub const SCORE_HEADER: [&str; 5] = ["circuit_id", "cnr", "repcap", "final_score", "config_digest"];

pub fn write_scores(path: &Path, provenance: &Provenance, cards: &[ScoreCard]) -> Result<(), FormatError> {
    let rows: Vec<Vec<String>> = cards
        .iter()
        .map(|c| vec![c.circuit_id.to_string(), num(c.cnr), num(c.repcap), num(c.final_score), c.config_digest.clone()])
        .collect();
    write_table(path, provenance, &SCORE_HEADER, &rows)
}

pub fn read_scores(path: &Path, variant: ScoringVariant) -> Result<Vec<ScoreCard>, FormatError> {
    read_table(path, &SCORE_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(ScoreCard {
                circuit_id: field(r, i + 1, &SCORE_HEADER, 0)?,
                variant,
                cnr: field(r, i + 1, &SCORE_HEADER, 1)?,
                repcap: field(r, i + 1, &SCORE_HEADER, 2)?,
                final_score: field(r, i + 1, &SCORE_HEADER, 3)?,
                config_digest: r.get(4).unwrap_or_default().to_string(),
            })
        })
        .collect()
}

// Metric table.

pub const CLASSIFICATION_METRICS: [&str; 7] =
    ["circuit_id", "status", "mse", "accuracy", "f1", "pr_auc", "final_train_loss"];
pub const REGRESSION_METRICS: [&str; 5] = ["circuit_id", "status", "mse", "spearman_r", "final_train_loss"];

/// Test-split metrics of one trained circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricReport,
    pub final_train_loss: f64,
}

/// One metric-table row; failures keep their message and no values.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub circuit_id: usize,
    pub outcome: Result<Evaluation, String>,
}

fn metric_header(task: TaskKind) -> &'static [&'static str] {
    match task {
        TaskKind::Classification => &CLASSIFICATION_METRICS,
        TaskKind::Regression => &REGRESSION_METRICS,
    }
}

pub fn write_metrics(path: &Path, provenance: &Provenance, task: TaskKind, rows: &[MetricRow]) -> Result<(), FormatError> {
    let header = metric_header(task);
    let rendered: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let mut cells = vec![row.circuit_id.to_string()];
            match &row.outcome {
                Ok(eval) => {
                    cells.push("ok".into());
                    match eval.report {
                        MetricReport::Classification(r) => {
                            cells.extend([num(r.mse), num(r.accuracy), num(r.f1), num(r.pr_auc)]);
                        }
                        MetricReport::Regression(r) => {
                            cells.extend([num(r.mse), r.spearman_r.map(num).unwrap_or_default()]);
                        }
                    }
                    cells.push(num(eval.final_train_loss));
                }
                Err(message) => {
                    cells.push(format!("failed: {message}"));
                    cells.resize(header.len(), String::new());
                }
            }
            cells
        })
        .collect();
    write_table(path, provenance, header, &rendered)
}

pub fn read_metrics(path: &Path, task: TaskKind) -> Result<Vec<MetricRow>, FormatError> {
    let header = metric_header(task);
    read_table(path, header)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let row = i + 1;
            let circuit_id = field(r, row, header, 0)?;
            let status = r.get(1).unwrap_or_default();
            if let Some(message) = status.strip_prefix("failed: ") {
                return Ok(MetricRow { circuit_id, outcome: Err(message.to_string()) });
            }
            if status != "ok" {
                return Err(FormatError::cell(row, "status", format!("unknown status '{status}'")));
            }
            let report = match task {
                TaskKind::Classification => MetricReport::Classification(ClassificationReport {
                    mse: field(r, row, header, 2)?,
                    accuracy: field(r, row, header, 3)?,
                    f1: field(r, row, header, 4)?,
                    pr_auc: field(r, row, header, 5)?,
                }),
                TaskKind::Regression => MetricReport::Regression(RegressionReport {
                    mse: field(r, row, header, 2)?,
                    spearman_r: opt_field(r, row, header, 3)?,
                }),
            };
            let final_train_loss = field(r, row, header, header.len() - 1)?;
            Ok(MetricRow { circuit_id, outcome: Ok(Evaluation { report, final_train_loss }) })
        })
        .collect()
}

// Training artifacts.

pub fn write_trace(path: &Path, provenance: &Provenance, trace: &[f64]) -> Result<(), FormatError> {
    let rows: Vec<Vec<String>> = trace.iter().enumerate().map(|(e, &l)| vec![(e + 1).to_string(), num(l)]).collect();
    write_table(path, provenance, &["epoch", "loss"], &rows)
}

pub const PARAMS_HEADER: [&str; 2] = ["slot", "value"];

pub fn write_params(path: &Path, provenance: &Provenance, params: &[f64]) -> Result<(), FormatError> {
    let rows: Vec<Vec<String>> = params.iter().enumerate().map(|(s, &v)| vec![s.to_string(), num(v)]).collect();
    write_table(path, provenance, &PARAMS_HEADER, &rows)
}

pub fn read_params(path: &Path) -> Result<Vec<f64>, FormatError> {
    read_table(path, &PARAMS_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let slot: usize = field(r, i + 1, &PARAMS_HEADER, 0)?;
            if slot != i {
                return Err(FormatError::cell(i + 1, "slot", format!("expected slot {i}, found {slot}")));
            }
            field(r, i + 1, &PARAMS_HEADER, 1)
        })
        .collect()
}

// Correlation report.

pub const CORRELATION_HEADER: [&str; 4] = ["variant", "metric", "n_circuits", "rho"];

pub fn write_correlation(path: &Path, provenance: &Provenance, rows: &[CorrelationRow]) -> Result<(), FormatError> {
    let rendered: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.variant.clone(), r.metric.to_string(), r.n_circuits.to_string(), num(r.rho)])
        .collect();
    write_table(path, provenance, &CORRELATION_HEADER, &rendered)
}

/// (variant, metric, rho) triples.
pub fn read_correlation(path: &Path) -> Result<Vec<(String, String, f64)>, FormatError> {
    read_table(path, &CORRELATION_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok((r[0].to_string(), r[1].to_string(), field(r, i + 1, &CORRELATION_HEADER, 3)?))
        })
        .collect()
}

pub fn write_scatter_data(path: &Path, provenance: &Provenance, row: &CorrelationRow) -> Result<(), FormatError> {
    let metric = row.metric.to_string();
    let header = ["circuit_id", "final_score", metric.as_str()];
    let rendered: Vec<Vec<String>> =
        row.points.iter().map(|&(id, s, m)| vec![id.to_string(), num(s), num(m)]).collect();
    write_table(path, provenance, &header, &rendered)
}

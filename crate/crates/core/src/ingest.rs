//! File input and report output.
//!
//! Joint CSV: a rectangular grid of decimals, one row per state of A, one
//! column per state of B, with an optional header row (detected by a
//! non-numeric first cell). Pairs CSV: two label columns `a,b`. Reports are
//! JSON objects `{meta, result}` or CSV renderings of the same result.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::dist::{DistError, JointDist, NormalizeMode};
use crate::entropy::Unit;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}, column {col}: cannot parse {cell:?} as a number")]
    Parse { line: u64, col: usize, cell: String },
    #[error("line {line}: ragged row {row} has {found} columns, expected {expected}")]
    RaggedRow {
        line: u64,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: expected two columns a,b, found {found}")]
    PairWidth { line: u64, found: usize },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("no data")]
    EmptyInput,
    #[error("pseudocount must be a nonnegative finite number, got {0}")]
    NegativePseudocount(f64),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

fn read_text(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

/// Parse a numeric grid, skipping a header row whose first cell is not a
/// number. Rows must all have the same width.
pub fn parse_grid(text: &str) -> Result<Vec<Vec<f64>>, IngestError> {
    let mut grid: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader(text).records().enumerate() {
        let record = record?;
        let line = record.position().map_or(0, csv::Position::line);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if idx == 0 && record.get(0).is_some_and(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>().map_err(|_| IngestError::Parse {
                    line,
                    col: col + 1,
                    cell: cell.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(first) = grid.first() {
            if row.len() != first.len() {
                return Err(IngestError::RaggedRow {
                    line,
                    row: grid.len() + 1,
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        grid.push(row);
    }
    if grid.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(grid)
}

pub fn parse_joint_csv(text: &str, mode: NormalizeMode) -> Result<JointDist, IngestError> {
    Ok(JointDist::new(&parse_grid(text)?, mode)?)
}

pub fn read_joint_csv(path: impl AsRef<Path>, mode: NormalizeMode) -> Result<JointDist, IngestError> {
    parse_joint_csv(&read_text(path.as_ref())?, mode)
}

/// Read every number in a grid file, row-major. Used for single-row or
/// single-column files such as sample streams and marginal vectors.
pub fn read_values(path: impl AsRef<Path>) -> Result<Vec<f64>, IngestError> {
    Ok(parse_grid(&read_text(path.as_ref())?)?.into_iter().flatten().collect())
}

/// Read a grid file as a list of rows.
pub fn read_grid(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>, IngestError> {
    parse_grid(&read_text(path.as_ref())?)
}

/// Parse two-column label pairs; an optional header `a,b` is skipped.
pub fn parse_pairs_csv(text: &str) -> Result<Vec<(String, String)>, IngestError> {
    let mut pairs = Vec::new();
    for (idx, record) in reader(text).records().enumerate() {
        let record = record?;
        let line = record.position().map_or(0, csv::Position::line);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(IngestError::PairWidth {
                line,
                found: record.len(),
            });
        }
        if idx == 0 && &record[0] == "a" && &record[1] == "b" {
            continue;
        }
        pairs.push((record[0].to_string(), record[1].to_string()));
    }
    Ok(pairs)
}

pub fn read_pairs_csv(path: impl AsRef<Path>) -> Result<Vec<(String, String)>, IngestError> {
    parse_pairs_csv(&read_text(path.as_ref())?)
}

/// Observed co-occurrence counts with their labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountTable {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub counts: Vec<u64>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairsJoint {
    pub joint: JointDist,
    pub table: CountTable,
}

impl PairsJoint {
    pub fn index_a(&self, label: &str) -> Option<usize> {
        self.table.row_labels.iter().position(|l| l == label)
    }

    pub fn index_b(&self, label: &str) -> Option<usize> {
        self.table.col_labels.iter().position(|l| l == label)
    }
}

/// Empirical joint from label pairs. Labels are indexed in order of first
/// appearance; `pseudocount` is added to every cell before normalizing.
pub fn joint_from_pairs<S: AsRef<str>>(pairs: &[(S, S)], pseudocount: f64) -> Result<PairsJoint, IngestError> {
    if !(pseudocount >= 0.0 && pseudocount.is_finite()) {
        return Err(IngestError::NegativePseudocount(pseudocount));
    }
    if pairs.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    fn intern(label: &str, index: &mut HashMap<String, usize>, labels: &mut Vec<String>) -> usize {
        *index.entry(label.to_string()).or_insert_with(|| {
            labels.push(label.to_string());
            labels.len() - 1
        })
    }
    let (mut ia, mut ib) = (HashMap::new(), HashMap::new());
    let (mut la, mut lb) = (Vec::new(), Vec::new());
    let idx: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(a, b)| {
            (
                intern(a.as_ref(), &mut ia, &mut la),
                intern(b.as_ref(), &mut ib, &mut lb),
            )
        })
        .collect();
    let (rows, cols) = (la.len(), lb.len());
    let mut counts = vec![0u64; rows * cols];
    for (i, j) in idx {
        counts[i * cols + j] += 1;
    }
    let data = counts.iter().map(|&c| c as f64 + pseudocount).collect();
    let joint = JointDist::from_row_major(rows, cols, data, NormalizeMode::Renormalize)?;
    Ok(PairsJoint {
        joint,
        table: CountTable {
            rows,
            cols,
            counts,
            row_labels: la,
            col_labels: lb,
        },
    })
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn format_joint_csv(j: &JointDist) -> String {
    let mut out = String::new();
    for i in 0..j.rows() {
        let cells: Vec<String> = j.row(i).iter().map(|&x| format_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_joint_csv(j: &JointDist, path: impl AsRef<Path>) -> Result<(), IngestError> {
    write_text(path.as_ref(), &format_joint_csv(j))
}

fn write_text(path: &Path, text: &str) -> Result<(), IngestError> {
    fs::write(path, text).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub version: String,
    pub unit: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
}

impl ReportMeta {
    pub fn new(unit: Unit) -> Self {
        ReportMeta {
            version: TOOLKIT_VERSION.to_string(),
            unit: unit.name().to_string(),
            seed: None,
            rng: None,
        }
    }

    pub fn with_seed(mut self, seed: u64, rng: &str) -> Self {
        self.seed = Some(seed);
        self.rng = Some(rng.to_string());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    meta: &'a ReportMeta,
    result: &'a T,
}

pub fn render_json<T: Serialize>(result: &T, meta: &ReportMeta) -> Result<String, IngestError> {
    let mut s = serde_json::to_string_pretty(&Envelope { meta, result })?;
    s.push('\n');
    Ok(s)
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), |x| {
            if n.is_f64() {
                format_f64(x)
            } else {
                n.to_string()
            }
        }),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Array(items) => items.iter().map(csv_cell).collect::<Vec<_>>().join(";"),
        Value::Object(_) => v.to_string(),
    }
}

/// CSV rendering of a result: an array of records becomes a table with a
/// header row, anything else becomes `field,value` lines. Metadata goes in
/// leading `#` comment lines.
pub fn render_csv<T: Serialize>(result: &T, meta: &ReportMeta) -> Result<String, IngestError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match serde_json::to_value(result)? {
        Value::Array(rows) => {
            let header: Vec<String> = match rows.first() {
                Some(Value::Object(o)) => o.keys().cloned().collect(),
                _ => vec!["value".to_string()],
            };
            w.write_record(&header)?;
            for row in &rows {
                match row {
                    Value::Object(o) => {
                        w.write_record(header.iter().map(|k| o.get(k).map(csv_cell).unwrap_or_default()))?
                    }
                    other => w.write_record([csv_cell(other)])?,
                }
            }
        }
        Value::Object(o) => {
            w.write_record(["field", "value"])?;
            for (k, v) in &o {
                w.write_record([k.clone(), csv_cell(v)])?;
            }
        }
        other => {
            w.write_record(["value"])?;
            w.write_record([csv_cell(&other)])?;
        }
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
        .expect("csv writer emits UTF-8");
    let mut out = format!("# version {}\n# unit {}\n", meta.version, meta.unit);
    if let Some(seed) = meta.seed {
        out.push_str(&format!("# seed {seed}\n"));
    }
    if let Some(rng) = &meta.rng {
        out.push_str(&format!("# rng {rng}\n"));
    }
    out.push_str(&body);
    Ok(out)
}

pub fn render_report<T: Serialize>(result: &T, meta: &ReportMeta, format: ReportFormat) -> Result<String, IngestError> {
    match format {
        ReportFormat::Json => render_json(result, meta),
        ReportFormat::Csv => render_csv(result, meta),
    }
}

pub fn write_report<T: Serialize>(
    result: &T,
    meta: &ReportMeta,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<(), IngestError> {
    write_text(path.as_ref(), &render_report(result, meta, format)?)
}

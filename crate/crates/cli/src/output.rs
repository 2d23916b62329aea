//! CSV tables and run manifests.
//!
//! Every table has exactly five columns: the swept variable, `rate_bps`,
//! `segment`, `n_realizations`, `seed`. The first column is named after the
//! variable: `snr_db`, `d_m`, `molecules_per_impulse` or `distance_m`.

use std::io::Write;
use std::path::{Path, PathBuf};

use nanolink::{RateResult, Segment, SweepRow};
use serde::{Deserialize, Serialize};

pub const RATE_COLUMNS: [&str; 4] = ["rate_bps", "segment", "n_realizations", "seed"];

/// One CSV row in the fixed schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub x: f64,
    pub rate_bps: f64,
    pub segment: Segment,
    pub n_realizations: u64,
    pub seed: u64,
}

impl From<&SweepRow> for Row {
    fn from(r: &SweepRow) -> Self {
        Row {
            x: r.x,
            rate_bps: r.rate_bps,
            segment: r.segment,
            n_realizations: r.n_realizations,
            seed: r.seed,
        }
    }
}

impl Row {
    pub fn from_result(x: f64, r: &RateResult) -> Self {
        Row {
            x,
            rate_bps: r.rate_bps,
            segment: r.segment,
            n_realizations: r.n_realizations,
            seed: r.seed,
        }
    }
}

fn fmt_f64(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

pub fn write_csv(path: &Path, x_name: &str, rows: &[Row]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![x_name];
    header.extend(RATE_COLUMNS);
    w.write_record(&header)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.x),
            fmt_f64(r.rate_bps),
            r.segment.as_str().to_string(),
            r.n_realizations.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<PathBuf>,
    pub config: serde_json::Value,
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, manifest)?;
    writeln!(f)?;
    Ok(())
}

/// Schema violations found by [`check_csv`].
#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("column {index} is `{found}`, expected `{expected}`")]
    Column {
        index: usize,
        found: String,
        expected: String,
    },
    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    Cell { row: usize, column: String, value: String },
}

/// Parse a CSV produced by this tool and check it against the schema.
/// Returns the name of the swept variable and the rows.
pub fn check_csv(path: &Path) -> Result<(String, Vec<Row>), SchemaError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let x_name = header.get(0).unwrap_or("").to_string();
    let allowed = ["snr_db", "d_m", "molecules_per_impulse", "distance_m"];
    if !allowed.contains(&x_name.as_str()) {
        return Err(SchemaError::Column {
            index: 0,
            found: x_name,
            expected: allowed.join("|"),
        });
    }
    if header.len() != 5 {
        return Err(SchemaError::Column {
            index: header.len(),
            found: header.iter().collect::<Vec<_>>().join(","),
            expected: "5 columns".into(),
        });
    }
    for (i, name) in RATE_COLUMNS.iter().enumerate() {
        if header.get(i + 1) != Some(name) {
            return Err(SchemaError::Column {
                index: i + 1,
                found: header.get(i + 1).unwrap_or("").into(),
                expected: name.to_string(),
            });
        }
    }
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let cell = |k: usize| rec.get(k).unwrap_or("");
        let bad = |k: usize| SchemaError::Cell {
            row: n,
            column: header.get(k).unwrap_or("").into(),
            value: cell(k).into(),
        };
        let x: f64 = cell(0).parse().map_err(|_| bad(0))?;
        let rate_bps: f64 = cell(1).parse().map_err(|_| bad(1))?;
        if rate_bps.is_nan() || rate_bps < 0.0 {
            return Err(bad(1));
        }
        let segment = match cell(2) {
            "MC" => Segment::Mc,
            "THZ" => Segment::Thz,
            "HOP1" => Segment::Hop1,
            "HOP2" => Segment::Hop2,
            "E2E" => Segment::E2e,
            _ => return Err(bad(2)),
        };
        let n_realizations = cell(3).parse().map_err(|_| bad(3))?;
        let seed = cell(4).parse().map_err(|_| bad(4))?;
        rows.push(Row {
            x,
            rate_bps,
            segment,
            n_realizations,
            seed,
        });
    }
    Ok((x_name, rows))
}

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::metrics::EvalReport;

/// Metric columns of every result table, in CSV order.
pub const METRIC_COLUMNS: [&str; 5] = ["mrr@10", "mrr", "ndcg@1", "ndcg@5", "ndcg"];
pub const NDCG5_COLUMN: usize = 3;
/// Rows that are reported but never ranked as distillation methods.
pub const REFERENCE_METHODS: [&str; 2] = ["Teacher", "RelevanceOnly"];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub config: String,
    /// Aggregates ×100 in [`METRIC_COLUMNS`] order.
    pub metrics: [f64; 5],
    pub seed: Option<u64>,
    /// Transform mode of the selected configuration, when known.
    pub transform_on: Option<bool>,
    /// Per-query values per column; empty for rows loaded from CSV.
    pub per_query: Vec<BTreeMap<String, f64>>,
    /// Per-column significance against the baseline row at p < 0.01.
    pub significant: Option<[bool; 5]>,
}

impl ResultRow {
    pub fn published(method: &str, metrics: [f64; 5]) -> Self {
        Self {
            method: method.into(),
            config: "published".into(),
            metrics,
            seed: None,
            transform_on: None,
            per_query: Vec::new(),
            significant: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    method: String,
    config: String,
    #[serde(rename = "mrr@10")]
    mrr10: f64,
    mrr: f64,
    #[serde(rename = "ndcg@1")]
    ndcg1: f64,
    #[serde(rename = "ndcg@5")]
    ndcg5: f64,
    ndcg: f64,
    seed: Option<u64>,
}

/// Failed grid point, kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct FailedPoint {
    pub method: String,
    pub config: String,
    pub config_hash: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub name: String,
    pub rows: Vec<ResultRow>,
    pub failed: Vec<FailedPoint>,
}

impl ResultTable {
    pub fn row(&self, method: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Writes `method,config,<metric columns>,seed` with a header row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), HarnessError> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.rows {
            let [mrr10, mrr, ndcg1, ndcg5, ndcg] = r.metrics;
            out.serialize(CsvRow {
                method: r.method.clone(),
                config: r.config.clone(),
                mrr10,
                mrr,
                ndcg1,
                ndcg5,
                ndcg,
                seed: r.seed,
            })?;
        }
        if self.rows.is_empty() {
            let mut header = vec!["method", "config"];
            header.extend(METRIC_COLUMNS);
            header.push("seed");
            out.write_record(header)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, HarnessError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read_csv<R: Read>(r: R, name: &str) -> Result<Self, HarnessError> {
        let mut rows = Vec::new();
        for rec in csv::Reader::from_reader(r).deserialize::<CsvRow>() {
            let rec = rec?;
            rows.push(ResultRow {
                method: rec.method,
                config: rec.config,
                metrics: [rec.mrr10, rec.mrr, rec.ndcg1, rec.ndcg5, rec.ndcg],
                seed: rec.seed,
                transform_on: None,
                per_query: Vec::new(),
                significant: None,
            });
        }
        Ok(Self {
            name: name.into(),
            rows,
            failed: Vec::new(),
        })
    }

    /// Reads a CSV file; the table is named after the file stem.
    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        Self::read_csv(std::fs::File::open(path)?, &name)
    }

    /// Every `*.csv` in `dir`, sorted by file name.
    pub fn load_dir(dir: &Path) -> Result<Vec<Self>, HarnessError> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        paths.retain(|p| p.extension().is_some_and(|e| e == "csv"));
        paths.sort();
        paths.iter().map(|p| Self::from_path(p)).collect()
    }
}

/// Per-query CSV: `query_id` then one column per report, rows in query id
/// order. Queries a report does not retain get an empty cell.
pub fn per_query_csv(reports: &[EvalReport]) -> Result<String, HarnessError> {
    let queries: BTreeSet<&String> = reports.iter().flat_map(|r| r.per_query.keys()).collect();
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["query_id".to_string()];
    header.extend(reports.iter().map(|r| r.spec.label()));
    out.write_record(&header)?;
    for q in queries {
        let mut rec = vec![q.clone()];
        rec.extend(
            reports
                .iter()
                .map(|r| r.per_query.get(q).map_or_else(String::new, |v| v.to_string())),
        );
        out.write_record(&rec)?;
    }
    let bytes = out.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

//! Result tables transcribed from published distillation experiments,
//! compiled into the binary so rank aggregation needs no data files.

use super::{HarnessError, ResultTable};

const TABLES: [(&str, &str); 6] = [
    ("istella", include_str!("../../data/published/istella.csv")),
    ("msmarco", include_str!("../../data/published/msmarco.csv")),
    ("nq", include_str!("../../data/published/nq.csv")),
    ("nq_transfer", include_str!("../../data/published/nq_transfer.csv")),
    ("nq_zeroshot", include_str!("../../data/published/nq_zeroshot.csv")),
    ("web30k", include_str!("../../data/published/web30k.csv")),
];

/// The bundled tables, sorted by name.
pub fn published_tables() -> Result<Vec<ResultTable>, HarnessError> {
    TABLES
        .iter()
        .map(|(name, text)| ResultTable::read_csv(text.as_bytes(), name))
        .collect()
}

//! File formats, dataset construction and teacher-score statistics.
//!
//! - TREC run: `<qid> <ph> <docid> <rank> <score> <tag>`
//! - TREC qrel: `<qid> <ph> <docid> <label>`
//! - ranking LibSVM: `<label> qid:<q> <fid>:<val> ... [# comment]`
//!
//! Parsers are streaming over any [`std::io::BufRead`] and report the
//! 1-based line number of the first malformed line.

mod libsvm;
mod stats;
mod synthetic;
mod trec;

pub use libsvm::{parse_libsvm_ranking, write_libsvm_ranking};
pub use stats::{score_stats, teacher_score_stats, ScoreStats};
pub use synthetic::{generate_synthetic, utility, utility_std, SyntheticSpec};
pub use trec::{
    format_trec_qrels, format_trec_run, join_run_qrels, parse_qrels, parse_trec_run,
    qrels_from_records, run_from_records, run_records_from_scores, write_trec_qrels,
    write_trec_run, JoinOutcome, TrecQrelRecord, TrecRunRecord,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataIoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate document {doc_id} for query {query_id}")]
    DuplicateDocument { query_id: String, doc_id: String },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("no teacher scores in dataset {0}")]
    NoTeacherScores(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> DataIoError {
    DataIoError::Parse {
        line,
        message: message.into(),
    }
}

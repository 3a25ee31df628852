use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::student::TrainTrace;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    step: usize,
    train_loss: f64,
    ndcg5_vs_relevance: Option<f64>,
    ndcg5_vs_teacher: Option<f64>,
}

const HEADER: &str = "step,train_loss,ndcg5_vs_relevance,ndcg5_vs_teacher\n";

/// CSV of traces sorted by step. Missing validation values are empty cells.
pub fn export_learning_dynamics(traces: &[TrainTrace]) -> Result<String, HarnessError> {
    let mut sorted: Vec<&TrainTrace> = traces.iter().collect();
    sorted.sort_by_key(|t| t.step);
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(HEADER.as_bytes().to_vec());
    for t in sorted {
        out.serialize(Row {
            step: t.step,
            train_loss: t.train_loss,
            ndcg5_vs_relevance: t.val_ndcg5_relevance,
            ndcg5_vs_teacher: t.val_ndcg5_teacher,
        })?;
    }
    let bytes = out.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_learning_dynamics(text: &str) -> Result<Vec<TrainTrace>, HarnessError> {
    if !text.starts_with(HEADER.trim_end()) {
        return Err(HarnessError::Dynamics("unexpected header".into()));
    }
    csv::Reader::from_reader(text.as_bytes())
        .deserialize::<Row>()
        .map(|r| {
            let r = r?;
            Ok(TrainTrace {
                step: r.step,
                train_loss: r.train_loss,
                val_ndcg5_relevance: r.ndcg5_vs_relevance,
                val_ndcg5_teacher: r.ndcg5_vs_teacher,
            })
        })
        .collect()
}

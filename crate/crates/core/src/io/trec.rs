use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use super::{parse_err, DataIoError};
use crate::metrics::{Qrels, Run};
use crate::ranking::argsort_desc;
use crate::types::{Dataset, RankList};

/// One line of a TREC run file. Placeholder columns are kept verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct TrecRunRecord {
    pub query_id: String,
    pub placeholder: String,
    pub doc_id: String,
    pub rank: u64,
    pub score: f64,
    pub tag: String,
}

/// One line of a TREC qrel file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrecQrelRecord {
    pub query_id: String,
    pub placeholder: String,
    pub doc_id: String,
    pub label: f64,
}

fn fields<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, Vec<String>), DataIoError>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(DataIoError::Io(e))),
        Ok(line) => {
            let f: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            (!f.is_empty()).then_some(Ok((i + 1, f)))
        }
    })
}

pub fn parse_trec_run<R: BufRead>(reader: R) -> Result<Vec<TrecRunRecord>, DataIoError> {
    fields(reader)
        .map(|item| {
            let (line, f) = item?;
            if f.len() != 6 {
                return Err(parse_err(line, format!("expected 6 fields, found {}", f.len())));
            }
            let rank: u64 = f[3]
                .parse()
                .map_err(|_| parse_err(line, format!("bad rank {:?}", f[3])))?;
            if rank == 0 {
                return Err(parse_err(line, "rank must be at least 1"));
            }
            let score: f64 = f[4]
                .parse()
                .map_err(|_| parse_err(line, format!("bad score {:?}", f[4])))?;
            if !score.is_finite() {
                return Err(parse_err(line, format!("score {:?} is not finite", f[4])));
            }
            let mut f = f.into_iter();
            let mut next = || f.next().unwrap_or_default();
            let (query_id, placeholder, doc_id) = (next(), next(), next());
            let (_, _, tag) = (next(), next(), next());
            Ok(TrecRunRecord {
                query_id,
                placeholder,
                doc_id,
                rank,
                score,
                tag,
            })
        })
        .collect()
}

pub fn parse_qrels<R: BufRead>(reader: R) -> Result<Vec<TrecQrelRecord>, DataIoError> {
    fields(reader)
        .map(|item| {
            let (line, f) = item?;
            if f.len() != 4 {
                return Err(parse_err(line, format!("expected 4 fields, found {}", f.len())));
            }
            let label: f64 = f[3]
                .parse()
                .map_err(|_| parse_err(line, format!("bad label {:?}", f[3])))?;
            if !label.is_finite() || label < 0.0 {
                return Err(parse_err(line, format!("label {:?} must be finite and non-negative", f[3])));
            }
            let mut f = f.into_iter();
            let mut next = || f.next().unwrap_or_default();
            Ok(TrecQrelRecord {
                query_id: next(),
                placeholder: next(),
                doc_id: next(),
                label,
            })
        })
        .collect()
}

/// Writes run records. Scores use the shortest decimal form that parses back
/// to the same `f64`.
pub fn write_trec_run<W: Write>(mut w: W, records: &[TrecRunRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(
            w,
            "{} {} {} {} {} {}",
            r.query_id, r.placeholder, r.doc_id, r.rank, r.score, r.tag
        )?;
    }
    Ok(())
}

pub fn format_trec_run(records: &[TrecRunRecord]) -> String {
    let mut buf = Vec::new();
    write_trec_run(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn write_trec_qrels<W: Write>(mut w: W, records: &[TrecQrelRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(w, "{} {} {} {}", r.query_id, r.placeholder, r.doc_id, r.label)?;
    }
    Ok(())
}

pub fn format_trec_qrels(records: &[TrecQrelRecord]) -> String {
    let mut buf = Vec::new();
    write_trec_qrels(&mut buf, records).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Run records for per-list scores aligned with `ds.lists`, ranked by
/// descending score.
pub fn run_records_from_scores(ds: &Dataset, scores: &[Vec<f64>], tag: &str) -> Vec<TrecRunRecord> {
    let mut out = Vec::new();
    for (rl, s) in ds.lists.iter().zip(scores) {
        for (pos, &i) in argsort_desc(s).iter().enumerate() {
            out.push(TrecRunRecord {
                query_id: rl.query_id.clone(),
                placeholder: "Q0".into(),
                doc_id: rl.doc_ids[i].clone(),
                rank: pos as u64 + 1,
                score: s[i],
                tag: tag.into(),
            });
        }
    }
    out
}

pub fn run_from_records(records: &[TrecRunRecord]) -> Result<Run, DataIoError> {
    let mut seen = HashSet::new();
    let mut run = Run::default();
    for r in records {
        if !seen.insert((r.query_id.as_str(), r.doc_id.as_str())) {
            return Err(DataIoError::DuplicateDocument {
                query_id: r.query_id.clone(),
                doc_id: r.doc_id.clone(),
            });
        }
        run.insert(&r.query_id, &r.doc_id, r.score);
    }
    Ok(run)
}

/// Qrels from records; a repeated (query, doc) keeps the last label.
pub fn qrels_from_records(records: &[TrecQrelRecord]) -> Qrels {
    let mut q = Qrels::default();
    for r in records {
        q.insert(&r.query_id, &r.doc_id, r.label);
    }
    q
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinOutcome {
    pub dataset: Dataset,
    /// Judged documents that never appear in the run.
    pub dropped_qrel_docs: usize,
    /// Queries whose joined labels are all zero.
    pub empty_queries: Vec<String>,
}

/// Builds one list per run query (first-appearance order) with teacher
/// scores from the run and relevance from the qrels (0 when unjudged).
/// Documents are ordered by descending score; ties keep file order.
pub fn join_run_qrels(
    run: &[TrecRunRecord],
    qrels: &[TrecQrelRecord],
    name: &str,
) -> Result<JoinOutcome, DataIoError> {
    let mut labels: HashMap<(&str, &str), f64> = HashMap::new();
    for q in qrels {
        labels.insert((q.query_id.as_str(), q.doc_id.as_str()), q.label);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut grouped: HashMap<&str, Vec<&TrecRunRecord>> = HashMap::new();
    let mut seen = HashSet::new();
    for r in run {
        if !seen.insert((r.query_id.as_str(), r.doc_id.as_str())) {
            return Err(DataIoError::DuplicateDocument {
                query_id: r.query_id.clone(),
                doc_id: r.doc_id.clone(),
            });
        }
        grouped
            .entry(r.query_id.as_str())
            .or_insert_with(|| {
                order.push(r.query_id.as_str());
                Vec::new()
            })
            .push(r);
    }
    let mut used = 0usize;
    let mut empty_queries = Vec::new();
    let lists = order
        .iter()
        .map(|&qid| {
            let mut docs = grouped.remove(qid).unwrap_or_default();
            docs.sort_by(|a, b| b.score.total_cmp(&a.score));
            let relevance: Vec<f64> = docs
                .iter()
                .map(|d| match labels.get(&(qid, d.doc_id.as_str())) {
                    Some(&y) => {
                        used += 1;
                        y
                    }
                    None => 0.0,
                })
                .collect();
            if relevance.iter().all(|&y| y <= 0.0) {
                empty_queries.push(qid.to_string());
            }
            RankList {
                query_id: qid.to_string(),
                doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
                features: None,
                relevance: Some(relevance),
                teacher_scores: Some(docs.iter().map(|d| d.score).collect()),
            }
        })
        .collect();
    Ok(JoinOutcome {
        dataset: Dataset::new(name, 0, lists),
        dropped_qrel_docs: labels.len() - used,
        empty_queries,
    })
}

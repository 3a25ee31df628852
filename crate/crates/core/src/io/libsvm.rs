use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{parse_err, DataIoError};
use crate::types::{Dataset, RankList};

struct Row {
    label: f64,
    doc_id: Option<String>,
    features: Vec<(usize, f64)>,
}

fn parse_line(line: usize, text: &str) -> Result<Option<(String, Row)>, DataIoError> {
    let (body, comment) = match text.split_once('#') {
        Some((b, c)) => (b, Some(c)),
        None => (text, None),
    };
    let mut tokens = body.split_whitespace();
    let Some(label_tok) = tokens.next() else {
        return Ok(None);
    };
    let label: f64 = label_tok
        .parse()
        .map_err(|_| parse_err(line, format!("bad label {label_tok:?}")))?;
    if !label.is_finite() || label < 0.0 {
        return Err(parse_err(line, format!("label {label_tok:?} must be finite and non-negative")));
    }
    let qid = tokens
        .next()
        .and_then(|t| t.strip_prefix("qid:"))
        .filter(|q| !q.is_empty())
        .ok_or_else(|| parse_err(line, "expected qid:<id> after the label"))?;
    let mut features = Vec::new();
    let mut last = 0usize;
    for tok in tokens {
        let (fid, val) = tok
            .split_once(':')
            .ok_or_else(|| parse_err(line, format!("bad feature token {tok:?}")))?;
        let fid: usize = fid
            .parse()
            .map_err(|_| parse_err(line, format!("bad feature id in {tok:?}")))?;
        let val: f64 = val
            .parse()
            .map_err(|_| parse_err(line, format!("bad feature value in {tok:?}")))?;
        if fid == 0 {
            return Err(parse_err(line, "feature ids are 1-based"));
        }
        if fid <= last {
            return Err(parse_err(line, format!("feature id {fid} after {last} is not increasing")));
        }
        last = fid;
        features.push((fid, val));
    }
    let doc_id = comment.and_then(|c| {
        let rest = c.split_once("docid")?.1.trim_start();
        let rest = rest.strip_prefix('=').unwrap_or(rest);
        rest.split_whitespace().next().map(str::to_string)
    });
    Ok(Some((qid.to_string(), Row { label, doc_id, features })))
}

/// Reads ranking LibSVM lines into one list per qid, in order of first
/// appearance. Features are densified to the largest feature id seen in the
/// file. Doc ids come from a `docid = X` comment when present, otherwise from
/// the position within the list.
pub fn parse_libsvm_ranking<R: BufRead>(reader: R, name: &str) -> Result<Dataset, DataIoError> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<Row>> = HashMap::new();
    let mut dim = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some((qid, row)) = parse_line(i + 1, &line)? {
            dim = dim.max(row.features.last().map_or(0, |f| f.0));
            groups
                .entry(qid.clone())
                .or_insert_with(|| {
                    order.push(qid);
                    Vec::new()
                })
                .push(row);
        }
    }
    let lists = order
        .into_iter()
        .map(|qid| {
            let rows = groups.remove(&qid).unwrap_or_default();
            let mut doc_ids = Vec::with_capacity(rows.len());
            let mut features = Vec::with_capacity(rows.len());
            let mut relevance = Vec::with_capacity(rows.len());
            for (pos, row) in rows.into_iter().enumerate() {
                doc_ids.push(row.doc_id.unwrap_or_else(|| pos.to_string()));
                let mut dense = vec![0.0; dim];
                for (fid, v) in row.features {
                    dense[fid - 1] = v;
                }
                features.push(dense);
                relevance.push(row.label);
            }
            RankList {
                query_id: qid,
                doc_ids,
                features: Some(features),
                relevance: Some(relevance),
                teacher_scores: None,
            }
        })
        .collect();
    Ok(Dataset::new(name, dim, lists))
}

/// Writes lists with features in ranking LibSVM form. Zero features are
/// omitted; a missing relevance vector is written as label 0.
pub fn write_libsvm_ranking<W: Write>(mut w: W, ds: &Dataset) -> std::io::Result<()> {
    for rl in &ds.lists {
        let Some(features) = &rl.features else { continue };
        for (i, row) in features.iter().enumerate() {
            let label = rl.relevance.as_ref().map_or(0.0, |r| r[i]);
            write!(w, "{} qid:{}", label, rl.query_id)?;
            for (j, v) in row.iter().enumerate() {
                if *v != 0.0 {
                    write!(w, " {}:{}", j + 1, v)?;
                }
            }
            writeln!(w, " # docid = {}", rl.doc_ids[i])?;
        }
    }
    Ok(())
}

//! Dataset loading behind `--format`.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use rdkit::io::{
    generate_synthetic, parse_libsvm_ranking, parse_qrels, parse_trec_run, SyntheticSpec, TrecQrelRecord,
    TrecRunRecord,
};
use rdkit::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// TREC run (teacher scores) files; no features.
    Trec,
    /// Ranking LibSVM with `qid:`; teacher scores from an optional TREC run.
    Libsvm,
    /// JSON generator spec as written by `rdkit synth`.
    Synthetic,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn read_run(path: &Path) -> Result<Vec<TrecRunRecord>> {
    parse_trec_run(open(path)?).with_context(|| path.display().to_string())
}

pub fn read_qrels(path: &Path) -> Result<Vec<TrecQrelRecord>> {
    parse_qrels(open(path)?).with_context(|| path.display().to_string())
}

pub fn read_synthetic_spec(path: &Path) -> Result<SyntheticSpec> {
    serde_json::from_reader(open(path)?).with_context(|| format!("{}: not a synthetic spec", path.display()))
}

pub fn load_dataset(path: &Path, teacher: Option<&Path>, format: Format) -> Result<Dataset> {
    let mut ds = match format {
        Format::Libsvm => {
            parse_libsvm_ranking(open(path)?, &stem(path)).with_context(|| path.display().to_string())?
        }
        Format::Synthetic => generate_synthetic(&read_synthetic_spec(path)?)?,
        Format::Trec => bail!(
            "{}: TREC files carry no features; use --format libsvm or synthetic",
            path.display()
        ),
    };
    if let Some(t) = teacher {
        attach_teacher(&mut ds, &read_run(t)?).with_context(|| t.display().to_string())?;
    }
    Ok(ds)
}

/// Replaces teacher scores with the scores of a TREC run, matched by query
/// and document id. Every document needs a score.
fn attach_teacher(ds: &mut Dataset, records: &[TrecRunRecord]) -> Result<()> {
    let scores: HashMap<(&str, &str), f64> = records
        .iter()
        .map(|r| ((r.query_id.as_str(), r.doc_id.as_str()), r.score))
        .collect();
    for rl in ds.lists.iter_mut() {
        let t = rl
            .doc_ids
            .iter()
            .map(|d| {
                scores
                    .get(&(rl.query_id.as_str(), d.as_str()))
                    .copied()
                    .with_context(|| format!("no teacher score for query {} document {d}", rl.query_id))
            })
            .collect::<Result<Vec<f64>>>()?;
        rl.teacher_scores = Some(t);
    }
    Ok(())
}

/// Zero-pads feature rows so every dataset has the largest dimension. LibSVM
/// files only reveal the highest feature id they happen to contain.
pub fn align_dims(sets: &mut [&mut Dataset]) {
    let dim = sets.iter().map(|d| d.feature_dim).max().unwrap_or(0);
    for ds in sets.iter_mut() {
        if ds.feature_dim == dim {
            continue;
        }
        ds.feature_dim = dim;
        for rl in ds.lists.iter_mut() {
            for row in rl.features.iter_mut().flatten() {
                row.resize(dim, 0.0);
            }
        }
    }
}

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Parser;
use rdkit::exec::Exec;
use rdkit::harness::{
    aggregate_ranks, evaluate_model, export_learning_dynamics, per_query_csv, published_tables, run_sweep,
    EvalOptions, GridPoint, ResultRow, ResultTable, SweepGrid, METRIC_COLUMNS, NDCG5_COLUMN,
};
use rdkit::io::{
    format_trec_qrels, format_trec_run, generate_synthetic, join_run_qrels, qrels_from_records, run_from_records,
    run_records_from_scores, score_stats, teacher_score_stats, write_libsvm_ranking, ScoreStats, SyntheticSpec,
    TrecQrelRecord,
};
use rdkit::metrics::{evaluate_with, MetricKind, MetricSpec};
use rdkit::{Dataset, DistillConfig, DistillLoss, LinearModel};
use serde::Serialize;
use serde_json::json;

use crate::data::{align_dims, load_dataset, read_qrels, read_run, Format};
use crate::manifest::{digest_file, strip_out_dir, FileDigest, Outputs, RunManifest};
use crate::{
    Cli, Command, DataFlags, EvalFlags, EvaluateArgs, ReportArgs, RerunArgs, StatsArgs, SweepArgs, SynthArgs, TrainArgs,
};

struct Ctx {
    out_dir: PathBuf,
    exec: Exec,
    args: Vec<String>,
}

impl Ctx {
    fn manifest(&self, command: &str, config: serde_json::Value, seeds: Vec<u64>, inputs: Vec<FileDigest>) -> RunManifest {
        RunManifest {
            tool: "rdkit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args: self.args.clone(),
            config,
            seeds,
            inputs,
            outputs: Vec::new(),
        }
    }

    fn eval_options(&self, flags: &EvalFlags) -> EvalOptions {
        EvalOptions {
            policy: flags.policy,
            mrr_threshold: flags.binarize_threshold,
            exec: self.exec,
        }
    }
}

pub fn run(cli: Cli, raw_args: &[String]) -> Result<()> {
    let ctx = Ctx {
        out_dir: cli.out_dir,
        exec: Exec::from_jobs(cli.jobs),
        args: strip_out_dir(raw_args),
    };
    match &cli.command {
        Command::Evaluate(a) => evaluate(&ctx, a),
        Command::Train(a) => train(&ctx, a),
        Command::Sweep(a) => sweep(&ctx, a),
        Command::Stats(a) => stats(&ctx, a),
        Command::Synth(a) => synth(&ctx, a),
        Command::Report(a) => report(&ctx, a),
        Command::Rerun(a) => rerun(&ctx, a),
    }
}

fn digests<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<Vec<FileDigest>> {
    paths.into_iter().map(digest_file).collect()
}

fn print_row(cells: &[String], first_width: usize) {
    let mut line = String::new();
    for (i, c) in cells.iter().enumerate() {
        if i == 0 {
            line.push_str(&format!("{c:<first_width$}"));
        } else {
            line.push_str(&format!(" {c:>10}"));
        }
    }
    println!("{}", line.trim_end());
}

fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn metric_specs(a: &EvaluateArgs) -> Vec<MetricSpec> {
    let EvalFlags {
        policy,
        binarize_threshold,
    } = a.eval;
    if a.metric.is_empty() {
        return match a.cutoff {
            None => MetricSpec::standard_columns(policy, binarize_threshold).to_vec(),
            Some(k) => vec![
                MetricSpec::mrr(Some(k)).with_threshold(binarize_threshold).with_policy(policy),
                MetricSpec::ndcg(Some(k)).with_policy(policy),
            ],
        };
    }
    a.metric
        .iter()
        .map(|m| {
            let mut m = m.with_policy(policy);
            if m.cutoff.is_none() {
                m.cutoff = a.cutoff;
            }
            if m.kind == MetricKind::Mrr {
                m = m.with_threshold(binarize_threshold);
            }
            m
        })
        .collect()
}

fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<()> {
    let run_records = read_run(&a.run)?;
    let qrel_records = read_qrels(&a.qrels)?;
    let join = join_run_qrels(&run_records, &qrel_records, "eval").with_context(|| a.run.display().to_string())?;
    let run = run_from_records(&run_records)?;
    let qrels = qrels_from_records(&qrel_records);

    let specs = metric_specs(a);
    let reports = specs
        .iter()
        .map(|s| evaluate_with(&run, &qrels, s, ctx.exec))
        .collect::<Result<Vec<_>, _>>()?;

    if join.dropped_qrel_docs > 0 {
        eprintln!("warning: {} judged documents are missing from the run", join.dropped_qrel_docs);
    }
    let missing = qrels.queries.keys().filter(|q| !run.queries.contains_key(*q)).count();
    if missing > 0 {
        eprintln!("warning: {missing} judged queries are missing from the run");
    }
    if let Some(r) = reports.first() {
        if !r.unjudged_queries.is_empty() {
            eprintln!("warning: {} run queries have no judgments", r.unjudged_queries.len());
        }
    }
    if !join.empty_queries.is_empty() {
        eprintln!(
            "warning: {} queries have no relevant document (policy {})",
            join.empty_queries.len(),
            a.eval.policy
        );
    }

    let labels: Vec<String> = reports.iter().map(|r| r.spec.label()).collect();
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    print_row(&header, 8);
    let mut values = vec!["all".to_string()];
    values.extend(reports.iter().map(|r| format!("{:.4}", r.aggregate)));
    print_row(&values, 8);

    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.spec.label(),
                r.aggregate.to_string(),
                r.retained_count.to_string(),
                r.dropped_count.to_string(),
            ]
        })
        .collect();
    let header: Vec<String> = ["metric", "value", "retained", "dropped"].map(String::from).to_vec();
    let mut out = Outputs::new(&ctx.out_dir)?;
    out.write("eval_summary.csv", csv_string(&header, &rows)?)?;
    out.write("eval_per_query.csv", per_query_csv(&reports)?)?;
    let config = json!({
        "metrics": labels,
        "policy": a.eval.policy.to_string(),
        "binarize_threshold": a.eval.binarize_threshold,
    });
    out.finish(ctx.manifest("evaluate", config, vec![], digests([a.run.as_path(), a.qrels.as_path()])?))?;
    Ok(())
}

struct Sets {
    train: Dataset,
    val: Option<Dataset>,
    test: Option<Dataset>,
    inputs: Vec<FileDigest>,
}

fn load_sets(d: &DataFlags) -> Result<Sets> {
    let load = |p: &Option<PathBuf>, t: &Option<PathBuf>| -> Result<Option<Dataset>> {
        p.as_deref().map(|p| load_dataset(p, t.as_deref(), d.format)).transpose()
    };
    let mut train = load_dataset(&d.train, d.train_teacher.as_deref(), d.format)?;
    let mut val = load(&d.val, &d.val_teacher)?;
    let mut test = load(&d.test, &d.test_teacher)?;
    {
        let mut sets: Vec<&mut Dataset> = vec![&mut train];
        sets.extend(val.as_mut());
        sets.extend(test.as_mut());
        align_dims(&mut sets);
    }
    let paths = [
        Some(&d.train),
        d.train_teacher.as_ref(),
        d.val.as_ref(),
        d.val_teacher.as_ref(),
        d.test.as_ref(),
        d.test_teacher.as_ref(),
    ];
    let inputs = digests(paths.into_iter().flatten().map(PathBuf::as_path))?;
    Ok(Sets {
        train,
        val,
        test,
        inputs,
    })
}

#[derive(Serialize)]
struct ModelFile<'a> {
    config: &'a DistillConfig,
    best_step: usize,
    best_val_ndcg5: Option<f64>,
    model: &'a LinearModel,
}

fn grid_point(cfg: &DistillConfig) -> GridPoint {
    if cfg.alpha == 1.0 {
        return GridPoint::baseline(cfg.learning_rate);
    }
    let transform = cfg.effective_transform();
    GridPoint {
        loss: cfg.distill_loss,
        learning_rate: cfg.learning_rate,
        alpha: cfg.alpha,
        transform_on: transform,
        temperature: transform.then_some(cfg.temperature),
        top_k: cfg.distill_loss.uses_top_k().then_some(cfg.top_k),
    }
}

fn print_table(table: &ResultTable) {
    let width = table.rows.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    let mut header = vec!["method".to_string()];
    header.extend(METRIC_COLUMNS.iter().map(|c| c.to_string()));
    print_row(&header, width);
    for r in &table.rows {
        let mut cells = vec![r.method.clone()];
        for (c, v) in r.metrics.iter().enumerate() {
            let mark = match r.significant {
                Some(s) if s[c] => "*",
                _ => "",
            };
            cells.push(format!("{v:.4}{mark}"));
        }
        print_row(&cells, width);
    }
}

fn train(ctx: &Ctx, a: &TrainArgs) -> Result<()> {
    let cfg = a.config();
    cfg.validate()?;
    let sets = load_sets(&a.data)?;
    let val = sets
        .val
        .unwrap_or_else(|| Dataset::new("none", sets.train.feature_dim, Vec::new()));
    let outcome = rdkit::train(&sets.train, &val, &cfg)?;

    let mut out = Outputs::new(&ctx.out_dir)?;
    let file = ModelFile {
        config: &cfg,
        best_step: outcome.best_step,
        best_val_ndcg5: outcome.best_val_ndcg5,
        model: outcome.model(),
    };
    out.write("model.json", serde_json::to_string_pretty(&file)? + "\n")?;
    out.write("trace.csv", export_learning_dynamics(&outcome.traces)?)?;
    match outcome.best_val_ndcg5 {
        Some(v) => println!("best checkpoint: step {} (validation NDCG@5 {v:.4})", outcome.best_step),
        None => println!("no validation; keeping the final model (step {})", outcome.best_step),
    }

    if let Some(test) = &sets.test {
        let eval = evaluate_model(outcome.model(), test, &ctx.eval_options(&a.eval))?;
        let point = grid_point(&cfg);
        let table = ResultTable {
            name: test.name.clone(),
            rows: vec![ResultRow {
                method: point.method().to_string(),
                config: point.config_id(),
                metrics: eval.metrics,
                seed: Some(cfg.seed),
                transform_on: (point.loss != DistillLoss::None).then_some(point.transform_on),
                per_query: eval.per_query.to_vec(),
                significant: None,
            }],
            failed: Vec::new(),
        };
        print_table(&table);
        out.write("test_metrics.csv", table.to_csv_string()?)?;
        let scores = test
            .lists
            .iter()
            .map(|rl| outcome.model().score(rl))
            .collect::<Result<Vec<_>, _>>()?;
        out.write("test.run", format_trec_run(&run_records_from_scores(test, &scores, "rdkit")))?;
    }
    let config = serde_json::to_value(&cfg)?;
    out.finish(ctx.manifest("train", config, vec![cfg.seed], sets.inputs))?;
    Ok(())
}

pub fn sweep_grid(a: &SweepArgs) -> SweepGrid {
    SweepGrid {
        learning_rates: a.lrs.clone(),
        alphas: a.alphas.clone(),
        temperatures: a.temperatures.clone(),
        top_ks: a.top_ks.clone(),
        transform_modes: a.transform_modes.iter().map(|t| t.is_on()).collect(),
        losses: if a.losses.is_empty() {
            DistillLoss::METHODS.to_vec()
        } else {
            a.losses.clone()
        },
        include_baseline: !a.no_baseline,
    }
}

fn sweep(ctx: &Ctx, a: &SweepArgs) -> Result<()> {
    let (Some(_), Some(_)) = (&a.data.val, &a.data.test) else {
        bail!("sweep needs --val for selection and --test for reporting");
    };
    let sets = load_sets(&a.data)?;
    let (val, test) = (sets.val.expect("checked"), sets.test.expect("checked"));
    let grid = sweep_grid(a);
    let base = a.training.apply(DistillConfig::default());
    let outcome = run_sweep(&sets.train, &val, &test, &grid, &base, &ctx.eval_options(&a.eval))?;

    print_table(&outcome.table);
    for f in &outcome.table.failed {
        eprintln!("warning: {} [{}] failed: {}", f.config, f.config_hash, f.error);
    }
    let rows: Vec<Vec<String>> = outcome
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let selected = outcome.selected.get(p.point.method()) == Some(&i);
            vec![
                p.point.method().to_string(),
                p.config_id.clone(),
                p.val_ndcg5.map_or_else(String::new, |v| v.to_string()),
                selected.to_string(),
                p.model.as_ref().err().cloned().unwrap_or_default(),
            ]
        })
        .collect();
    let header: Vec<String> = ["method", "config", "val_ndcg@5", "selected", "error"].map(String::from).to_vec();

    let mut out = Outputs::new(&ctx.out_dir)?;
    out.write("sweep.csv", outcome.table.to_csv_string()?)?;
    out.write("sweep_points.csv", csv_string(&header, &rows)?)?;
    let config = json!({
        "base": base,
        "grid": {
            "learning_rates": grid.learning_rates,
            "alphas": grid.alphas,
            "temperatures": grid.temperatures,
            "top_ks": grid.top_ks,
            "transform_modes": grid.transform_modes,
            "losses": grid.losses,
            "include_baseline": grid.include_baseline,
        },
        "policy": a.eval.policy.to_string(),
        "binarize_threshold": a.eval.binarize_threshold,
    });
    out.finish(ctx.manifest("sweep", config, vec![base.seed], sets.inputs))?;
    Ok(())
}

fn stats(ctx: &Ctx, a: &StatsArgs) -> Result<()> {
    let mut rows: Vec<(String, ScoreStats)> = Vec::new();
    for (i, input) in a.input.iter().enumerate() {
        let name = input
            .file_stem()
            .map_or_else(|| input.display().to_string(), |s| s.to_string_lossy().into_owned());
        let s = match a.format {
            Format::Trec => {
                let scores: Vec<f64> = read_run(input)?.iter().map(|r| r.score).collect();
                score_stats(&scores).with_context(|| format!("{}: no scores", input.display()))?
            }
            f => {
                let ds = load_dataset(input, a.teacher.get(i).map(PathBuf::as_path), f)?;
                teacher_score_stats(&ds).with_context(|| input.display().to_string())?
            }
        };
        rows.push((name, s));
    }

    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(7);
    let columns = ["Mean", "Std", "Min", "25%", "50%", "75%", "Max"];
    let mut header = vec![String::new()];
    header.extend(columns.map(String::from));
    print_row(&header, width);
    let values = |s: &ScoreStats| [s.mean, s.std, s.min, s.p25, s.p50, s.p75, s.max];
    for (name, s) in &rows {
        let mut cells = vec![name.clone()];
        cells.extend(values(s).iter().map(|v| format!("{v:.4}")));
        print_row(&cells, width);
    }

    let mut csv_header = vec!["input".to_string()];
    csv_header.extend(columns.map(String::from));
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, s)| {
            let mut r = vec![name.clone()];
            r.extend(values(s).iter().map(f64::to_string));
            r
        })
        .collect();
    let mut out = Outputs::new(&ctx.out_dir)?;
    out.write("stats.csv", csv_string(&csv_header, &csv_rows)?)?;
    let config = json!({ "format": format!("{:?}", a.format).to_lowercase() });
    let inputs = digests(a.input.iter().chain(&a.teacher).map(PathBuf::as_path))?;
    out.finish(ctx.manifest("stats", config, vec![], inputs))?;
    Ok(())
}

fn synth(ctx: &Ctx, a: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_queries: a.n_queries,
        list_len_range: (a.list_len, a.max_list_len.unwrap_or(a.list_len)),
        feature_dim: a.feature_dim,
        teacher_quality: a.teacher_quality,
        label_sparsity: a.label_sparsity,
        seed: a.seed,
    };
    let ds = generate_synthetic(&spec)?;
    let teacher: Vec<Vec<f64>> = ds
        .lists
        .iter()
        .map(|rl| rl.teacher_scores.clone().unwrap_or_default())
        .collect();
    let qrels: Vec<TrecQrelRecord> = ds
        .lists
        .iter()
        .flat_map(|rl| {
            let labels = rl.relevance.clone().unwrap_or_default();
            rl.doc_ids.iter().zip(labels).map(|(d, y)| TrecQrelRecord {
                query_id: rl.query_id.clone(),
                placeholder: "0".into(),
                doc_id: d.clone(),
                label: y,
            })
        })
        .collect();
    let mut libsvm = Vec::new();
    write_libsvm_ranking(&mut libsvm, &ds)?;

    let mut out = Outputs::new(&ctx.out_dir)?;
    out.write(&format!("{}.json", a.name), serde_json::to_string_pretty(&spec)? + "\n")?;
    out.write(&format!("{}.libsvm", a.name), libsvm)?;
    out.write(
        &format!("{}.teacher.run", a.name),
        format_trec_run(&run_records_from_scores(&ds, &teacher, "teacher")),
    )?;
    out.write(&format!("{}.qrels", a.name), format_trec_qrels(&qrels))?;
    println!(
        "{}: {} queries, {} documents, {} features",
        a.name,
        ds.len(),
        ds.num_docs(),
        ds.feature_dim
    );
    out.finish(ctx.manifest("synth", serde_json::to_value(&spec)?, vec![spec.seed], Vec::new()))?;
    Ok(())
}

fn report(ctx: &Ctx, a: &ReportArgs) -> Result<()> {
    let column = METRIC_COLUMNS
        .iter()
        .position(|c| c.eq_ignore_ascii_case(a.column.trim()))
        .with_context(|| format!("unknown column {:?}; expected one of {}", a.column, METRIC_COLUMNS.join(", ")))?;
    let (tables, inputs) = match &a.tables {
        Some(dir) => {
            let tables = ResultTable::load_dir(dir)?;
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()?;
            paths.retain(|p| p.extension().is_some_and(|e| e == "csv"));
            paths.sort();
            (tables, digests(paths.iter().map(PathBuf::as_path))?)
        }
        None => (published_tables()?, Vec::new()),
    };
    let ranks = aggregate_ranks(&tables, column)?;

    let width = ranks.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    let mut header: Vec<String> = ["method", "mean", "best", "worst"].map(String::from).to_vec();
    header.extend(tables.iter().map(|t| t.name.clone()));
    print_row(&header, width);
    let mut rows = Vec::new();
    for r in &ranks {
        let per_table = r.per_table.iter().map(|v| v.map_or_else(String::new, |v| v.to_string()));
        let mut cells = vec![r.method.clone(), format!("{:.2}", r.mean), r.best.to_string(), r.worst.to_string()];
        cells.extend(per_table.clone());
        print_row(&cells, width);
        let mut row = vec![r.method.clone(), r.mean.to_string(), r.best.to_string(), r.worst.to_string()];
        row.extend(per_table);
        rows.push(row);
    }
    let mut out = Outputs::new(&ctx.out_dir)?;
    out.write("ranks.csv", csv_string(&header, &rows)?)?;
    let config = json!({
        "column": METRIC_COLUMNS[column],
        "tables": if a.tables.is_some() { "directory" } else { "bundled" },
    });
    out.finish(ctx.manifest("report", config, vec![], inputs))?;
    if column == NDCG5_COLUMN && a.tables.is_none() {
        if let Some(s) = ranks.iter().find(|r| r.method == "Softmax") {
            println!("Softmax mean rank: {:.1}", s.mean);
        }
    }
    Ok(())
}

fn rerun(ctx: &Ctx, a: &RerunArgs) -> Result<()> {
    let m = RunManifest::read(&a.manifest)?;
    if m.command == "rerun" {
        bail!("{} records a rerun; replay the original manifest", a.manifest.display());
    }
    for input in &m.inputs {
        let now = digest_file(Path::new(&input.path))?;
        if now.sha256 != input.sha256 {
            bail!("input {} changed since the recorded run", input.path);
        }
    }
    let mut argv = vec!["rdkit".to_string()];
    argv.extend(m.args.iter().cloned());
    argv.push("--out-dir".into());
    argv.push(ctx.out_dir.display().to_string());
    let cli = Cli::try_parse_from(&argv).context("manifest arguments no longer parse")?;
    if matches!(cli.command, Command::Rerun(_)) {
        bail!("manifest arguments describe a rerun");
    }
    run(cli, &argv[1..])?;

    let mut differing = Vec::new();
    for o in &m.outputs {
        let now = digest_file(&ctx.out_dir.join(&o.path))?;
        if now.sha256 != o.sha256 {
            differing.push(o.path.clone());
        }
    }
    if !differing.is_empty() {
        bail!("{} of {} outputs differ: {}", differing.len(), m.outputs.len(), differing.join(", "));
    }
    println!("reproduced {} outputs byte for byte", m.outputs.len());
    Ok(())
}

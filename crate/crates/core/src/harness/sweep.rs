use std::collections::BTreeMap;

use super::{
    evaluate_model, paired_ttest, EvalOptions, FailedPoint, HarnessError, ModelEval, ResultRow,
    ResultTable,
};
use crate::seed::stable_hash;
use crate::student::{train, LinearModel};
use crate::types::{Dataset, DistillConfig, DistillLoss};

/// Hyperparameter grid. Temperature only varies with the transform on, and
/// top-K only for RD and RankDistil; points that collapse to the same
/// effective configuration are trained once.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub learning_rates: Vec<f64>,
    pub alphas: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub top_ks: Vec<usize>,
    pub transform_modes: Vec<bool>,
    pub losses: Vec<DistillLoss>,
    /// Also sweep the relevance-only baseline over the learning rates.
    pub include_baseline: bool,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            learning_rates: vec![0.1, 1.0, 10.0],
            alphas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            temperatures: vec![0.1, 1.0, 2.0, 5.0, 10.0],
            top_ks: vec![1, 5, 10],
            transform_modes: vec![true, false],
            losses: DistillLoss::METHODS.to_vec(),
            include_baseline: true,
        }
    }
}

/// One effective configuration of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub loss: DistillLoss,
    pub learning_rate: f64,
    pub alpha: f64,
    pub transform_on: bool,
    /// `None` when the transform is off.
    pub temperature: Option<f64>,
    /// `None` for losses without a top-K.
    pub top_k: Option<usize>,
}

impl GridPoint {
    pub fn baseline(learning_rate: f64) -> Self {
        Self {
            loss: DistillLoss::None,
            learning_rate,
            alpha: 1.0,
            transform_on: false,
            temperature: None,
            top_k: None,
        }
    }

    pub fn method(&self) -> &'static str {
        self.loss.method_name()
    }

    pub fn apply(&self, base: &DistillConfig) -> DistillConfig {
        DistillConfig {
            distill_loss: self.loss,
            alpha: self.alpha,
            learning_rate: self.learning_rate,
            transform_on: self.transform_on,
            temperature: self.temperature.unwrap_or(base.temperature),
            top_k: self.top_k.unwrap_or(base.top_k),
            ..base.clone()
        }
    }

    /// Stable identifier such as `Softmax/lr=1/alpha=0.5/T=2`.
    pub fn config_id(&self) -> String {
        let mut id = format!("{}/lr={}/alpha={}", self.method(), self.learning_rate, self.alpha);
        if let Some(t) = self.temperature {
            id.push_str(&format!("/T={t}"));
        } else if self.loss != DistillLoss::None {
            id.push_str("/transform=off");
        }
        if let Some(k) = self.top_k {
            id.push_str(&format!("/K={k}"));
        }
        id
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let checks = [
            (self.learning_rates.is_empty(), "learning rates"),
            (self.alphas.is_empty(), "alphas"),
            (self.temperatures.is_empty(), "temperatures"),
            (self.top_ks.is_empty(), "top-K values"),
            (self.transform_modes.is_empty(), "transform modes"),
            (self.losses.is_empty() && !self.include_baseline, "losses"),
        ];
        match checks.iter().find(|c| c.0) {
            Some(&(_, what)) => Err(HarnessError::EmptyGrid(what)),
            None => Ok(()),
        }
    }

    /// Distinct effective grid points in grid order, baseline first.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out: Vec<GridPoint> = Vec::new();
        let mut push = |p: GridPoint| {
            if !out.contains(&p) {
                out.push(p);
            }
        };
        if self.include_baseline {
            for &lr in &self.learning_rates {
                push(GridPoint::baseline(lr));
            }
        }
        for &loss in &self.losses {
            if loss == DistillLoss::None {
                continue;
            }
            let ks: Vec<Option<usize>> = if loss.uses_top_k() {
                self.top_ks.iter().map(|&k| Some(k)).collect()
            } else {
                vec![None]
            };
            for &lr in &self.learning_rates {
                for &alpha in &self.alphas {
                    for &mode in &self.transform_modes {
                        let on = (mode || loss.requires_transform()) && !loss.is_order_only();
                        let temps: Vec<Option<f64>> = if on {
                            self.temperatures.iter().map(|&t| Some(t)).collect()
                        } else {
                            vec![None]
                        };
                        for &temperature in &temps {
                            for &top_k in &ks {
                                push(GridPoint {
                                    loss,
                                    learning_rate: lr,
                                    alpha,
                                    transform_on: on,
                                    temperature,
                                    top_k,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Outcome of training one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub point: GridPoint,
    pub config_id: String,
    /// Best validation NDCG@5 ×100 seen during training.
    pub val_ndcg5: Option<f64>,
    pub model: Result<LinearModel, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Baseline row first, then methods in grid order.
    pub table: ResultTable,
    pub points: Vec<PointRecord>,
    /// Index into `points` of each method's selected point.
    pub selected: BTreeMap<String, usize>,
}

/// Per method, the index of the successful point with the highest
/// validation NDCG@5; the first such point wins ties. Methods whose points
/// all failed are absent.
pub fn select_best(points: &[PointRecord]) -> BTreeMap<String, usize> {
    let mut best: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let Ok(_) = p.model else { continue };
        let score = p.val_ndcg5.unwrap_or(f64::NEG_INFINITY);
        match best.get(p.point.method()) {
            Some(&(_, s)) if s >= score => {}
            _ => {
                best.insert(p.point.method().to_string(), (i, score));
            }
        }
    }
    best.into_iter().map(|(m, (i, _))| (m, i)).collect()
}

/// Trains every grid point on `ds_train`, selects per method by validation
/// NDCG@5 and reports test metrics of the selected checkpoints. Grid points
/// run through `opts.exec`; results are merged in grid order.
pub fn run_sweep(
    ds_train: &Dataset,
    ds_val: &Dataset,
    ds_test: &Dataset,
    grid: &SweepGrid,
    base_cfg: &DistillConfig,
    opts: &EvalOptions,
) -> Result<SweepOutcome, HarnessError> {
    grid.validate()?;
    let points = grid.points();
    let records = opts.exec.map(&points, |p| {
        let cfg = p.apply(base_cfg);
        let config_id = p.config_id();
        let result = cfg
            .validate()
            .map_err(|e| e.to_string())
            .and_then(|_| train(ds_train, ds_val, &cfg).map_err(|e| e.to_string()));
        let (val_ndcg5, model) = match result {
            Ok(out) => (out.best_val_ndcg5, Ok(out.best_model)),
            Err(e) => (None, Err(e)),
        };
        PointRecord {
            point: *p,
            config_id,
            val_ndcg5,
            model,
        }
    });

    let selected = select_best(&records);
    let mut methods: Vec<&'static str> = Vec::new();
    for r in &records {
        if !methods.contains(&r.point.method()) {
            methods.push(r.point.method());
        }
    }
    let failed: Vec<FailedPoint> = records
        .iter()
        .filter_map(|r| {
            r.model.as_ref().err().map(|e| FailedPoint {
                method: r.point.method().to_string(),
                config: r.config_id.clone(),
                config_hash: format!("{:016x}", stable_hash(&r.config_id)),
                error: e.clone(),
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(methods.len());
    let mut evals: Vec<ModelEval> = Vec::with_capacity(methods.len());
    for method in methods {
        let Some(&i) = selected.get(method) else {
            return Err(HarnessError::NoSuccessfulPoint {
                method: method.to_string(),
                failures: failed.iter().filter(|f| f.method == method).count(),
            });
        };
        let rec = &records[i];
        let model = rec.model.as_ref().expect("selected points succeeded");
        let eval = evaluate_model(model, ds_test, opts)?;
        rows.push(ResultRow {
            method: method.to_string(),
            config: rec.config_id.clone(),
            metrics: eval.metrics,
            seed: Some(base_cfg.seed),
            transform_on: (rec.point.loss != DistillLoss::None).then_some(rec.point.transform_on),
            per_query: eval.per_query.to_vec(),
            significant: None,
        });
        evals.push(eval);
    }

    if let Some(b) = rows.iter().position(|r| r.method == DistillLoss::None.method_name()) {
        let base = evals[b].clone();
        for (row, eval) in rows.iter_mut().zip(&evals) {
            if row.method == DistillLoss::None.method_name() {
                continue;
            }
            let mut sig = [false; 5];
            for (c, s) in sig.iter_mut().enumerate() {
                let (a, b): (Vec<f64>, Vec<f64>) = eval.per_query[c]
                    .iter()
                    .filter_map(|(q, v)| base.per_query[c].get(q).map(|w| (*v, *w)))
                    .unzip();
                *s = paired_ttest(&a, &b).is_ok_and(|t| t.significant_at_001 && t.t > 0.0);
            }
            row.significant = Some(sig);
        }
    }

    Ok(SweepOutcome {
        table: ResultTable {
            name: ds_test.name.clone(),
            rows,
            failed,
        },
        points: records,
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_point_counts() {
        let g = SweepGrid::default();
        let pts = g.points();
        let count = |l: DistillLoss| pts.iter().filter(|p| p.loss == l).count();
        assert_eq!(count(DistillLoss::None), 3);
        // lr × α × (5 temperatures on + 1 off)
        assert_eq!(count(DistillLoss::Softmax), 3 * 5 * 6);
        // order-only: transform never applies
        assert_eq!(count(DistillLoss::PairLog), 3 * 5);
        assert_eq!(count(DistillLoss::Rd), 3 * 5 * 3);
        // always transformed, with K
        assert_eq!(count(DistillLoss::RankDistil), 3 * 5 * 5 * 3);
    }

    #[test]
    fn config_ids_are_distinct() {
        let pts = SweepGrid::default().points();
        let mut ids: Vec<String> = pts.iter().map(GridPoint::config_id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), pts.len());
    }

    #[test]
    fn empty_grid_is_rejected() {
        let g = SweepGrid {
            alphas: vec![],
            ..SweepGrid::default()
        };
        assert!(matches!(g.validate(), Err(HarnessError::EmptyGrid("alphas"))));
    }

    fn record(loss: DistillLoss, val: Option<f64>, ok: bool) -> PointRecord {
        let point = GridPoint { loss, ..GridPoint::baseline(0.1) };
        PointRecord {
            config_id: point.config_id(),
            point,
            val_ndcg5: val,
            model: if ok { Ok(LinearModel::zeros(1)) } else { Err("diverged".into()) },
        }
    }

    #[test]
    fn selection_prefers_first_on_ties_and_skips_failures() {
        let recs = vec![
            record(DistillLoss::Mse, Some(50.0), true),
            record(DistillLoss::Mse, Some(60.0), false),
            record(DistillLoss::Mse, Some(50.0), true),
            record(DistillLoss::Softmax, Some(10.0), false),
        ];
        let sel = select_best(&recs);
        assert_eq!(sel.get("MSE"), Some(&0));
        assert!(!sel.contains_key("Softmax"));
        assert_eq!(select_best(&recs), sel);
    }
}

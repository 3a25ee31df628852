use super::{evaluate_model, EvalOptions, HarnessError};
use crate::student::train;
use crate::types::{Dataset, DistillConfig, DistillLoss};

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCell {
    pub loss: DistillLoss,
    pub alpha: f64,
    /// MRR@10 ×100 on the evaluation set.
    pub mrr10: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AlphaCurve {
    /// Loss-major, α in the order given.
    pub cells: Vec<AlphaCell>,
}

impl AlphaCurve {
    pub fn get(&self, loss: DistillLoss, alpha: f64) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.loss == loss && c.alpha == alpha)
            .map(|c| c.mrr10)
    }

    /// Best interior value minus the better endpoint (α = 0 or 1); positive
    /// when some 0 < α < 1 beats both.
    pub fn interior_margin(&self, loss: DistillLoss) -> Option<f64> {
        let ends = self.get(loss, 0.0)?.max(self.get(loss, 1.0)?);
        self.cells
            .iter()
            .filter(|c| c.loss == loss && c.alpha > 0.0 && c.alpha < 1.0)
            .map(|c| c.mrr10)
            .reduce(f64::max)
            .map(|best| best - ends)
    }

    /// CSV with columns `loss,alpha,mrr@10`.
    pub fn to_csv_string(&self) -> Result<String, HarnessError> {
        let mut out = csv::Writer::from_writer(Vec::new());
        out.write_record(["loss", "alpha", "mrr@10"])?;
        for c in &self.cells {
            out.write_record([c.loss.name().to_string(), c.alpha.to_string(), c.mrr10.to_string()])?;
        }
        let bytes = out.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// One training run per (loss, α), scored by MRR@10 of the best checkpoint
/// on `ds_val`. Runs go through `opts.exec`.
pub fn alpha_sensitivity(
    ds_train: &Dataset,
    ds_val: &Dataset,
    losses: &[DistillLoss],
    alphas: &[f64],
    base_cfg: &DistillConfig,
    opts: &EvalOptions,
) -> Result<AlphaCurve, HarnessError> {
    let jobs: Vec<(DistillLoss, f64)> = losses
        .iter()
        .flat_map(|&l| alphas.iter().map(move |&a| (l, a)))
        .collect();
    let results = opts.exec.map(&jobs, |&(loss, alpha)| -> Result<AlphaCell, HarnessError> {
        let cfg = DistillConfig {
            distill_loss: loss,
            alpha,
            ..base_cfg.clone()
        };
        let out = train(ds_train, ds_val, &cfg)?;
        let eval = evaluate_model(out.model(), ds_val, opts)?;
        Ok(AlphaCell {
            loss,
            alpha,
            mrr10: eval.metrics[0],
        })
    });
    Ok(AlphaCurve {
        cells: results.into_iter().collect::<Result<_, _>>()?,
    })
}

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rdkit::objective::{apply_loss, LossParams};
use rdkit::ranking::argsort_desc;
use rdkit::{
    combined_loss, derive_task_constraints, transform_teacher_scores, DistillConfig, DistillLoss, RelevanceLoss,
    TaskKind, TransformSpec,
};

fn scores(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    n.prop_flat_map(|n| prop::collection::vec(-20.0f64..20.0, n))
}

proptest! {
    #[test]
    fn transform_keeps_order_and_lands_on_the_simplex(t in scores(1..=12), temp in 0.5f64..10.0) {
        let p = transform_teacher_scores(&t, TransformSpec::softmax(temp)).unwrap();
        prop_assert_eq!(argsort_desc(&p), argsort_desc(&t));
        prop_assert!(p.iter().all(|&v| v > 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn hotter_transforms_are_closer_to_uniform(t in scores(2..=12)) {
        let n = t.len() as f64;
        let mut last = f64::INFINITY;
        for temp in [0.1, 1.0, 2.0, 5.0, 10.0] {
            let p = transform_teacher_scores(&t, TransformSpec::softmax(temp)).unwrap();
            let dev = p.iter().map(|v| (v - 1.0 / n).abs()).fold(0.0, f64::max);
            prop_assert!(dev <= last + 1e-15);
            last = dev;
        }
    }

    #[test]
    fn combined_loss_is_affine_in_alpha(
        (y, t, s) in (2usize..=8).prop_flat_map(|n| (
            prop::collection::vec(0u8..=3, n),
            prop::collection::vec(-3.0f64..3.0, n),
            prop::collection::vec(-3.0f64..3.0, n),
        )),
        alpha in 0.0f64..=1.0,
        li in 0usize..8,
    ) {
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        prop_assume!(y.iter().any(|&v| v > 0.0));
        let loss = DistillLoss::METHODS[li];
        let t = transform_teacher_scores(&t, TransformSpec::softmax(1.0)).unwrap();
        let p = LossParams { seed: 3, ..LossParams::default() };
        let at = |a: f64| combined_loss(Some(&y), Some(&t), &s, a, RelevanceLoss::Softmax, loss, &p).unwrap().value;
        let mixed = alpha * at(1.0) + (1.0 - alpha) * at(0.0);
        prop_assert!((at(alpha) - mixed).abs() <= 1e-12 * (1.0 + mixed.abs()));
    }
}

#[test]
fn identity_transform_passes_scores_through() {
    let t = [84.36, -63.08, 0.0];
    assert_eq!(transform_teacher_scores(&t, TransformSpec::OFF).unwrap(), t.to_vec());
}

#[test]
fn rd_and_rankdistil_clamp_top_k_to_the_list() {
    let p = LossParams { top_k: 10, ..LossParams::default() };
    let r = apply_loss(DistillLoss::Rd, &[0.3, 0.1, 0.9], &[0.0, 0.0, 0.0], &p).unwrap();
    assert_abs_diff_eq!(r.value, 3.0 * 2f64.ln(), epsilon = 1e-15);
    let r = apply_loss(DistillLoss::RankDistil, &[0.2, 0.8], &[0.0, 0.0], &p).unwrap();
    assert_abs_diff_eq!(r.value, 2f64.ln(), epsilon = 1e-15);
}

#[test]
fn zeroshot_constraints() {
    let cfg = DistillConfig {
        alpha: 0.5,
        distill_loss: DistillLoss::Softmax,
        ..DistillConfig::default()
    };
    let once = derive_task_constraints(TaskKind::T3TransferZeroshot, &cfg).unwrap();
    assert_eq!(once.alpha, 0.0);
    assert_eq!(derive_task_constraints(TaskKind::T3TransferZeroshot, &once).unwrap(), once);
    assert_eq!(derive_task_constraints(TaskKind::T1InDomain, &cfg).unwrap(), cfg);
    let rd = DistillConfig {
        distill_loss: DistillLoss::Rd,
        ..cfg
    };
    assert!(derive_task_constraints(TaskKind::T3TransferZeroshot, &rd).is_err());
}

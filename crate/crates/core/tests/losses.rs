use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::Rng;
use rdkit::losses::*;
use rdkit::seed;

/// Central differences of `f` at `s` with step `h`.
fn numeric_gradient(f: &dyn Fn(&[f64]) -> f64, s: &[f64], h: f64) -> Vec<f64> {
    (0..s.len())
        .map(|i| {
            let mut up = s.to_vec();
            let mut down = s.to_vec();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    // Floor at the resolution of central differences with step 1e-6.
    let scale = numeric.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-6);
    diff / scale
}

fn graded_labels<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(0..=4) as f64).collect();
    if y.iter().all(|&v| v == 0.0) {
        y[0] = 1.0;
    }
    y
}

fn scores<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

fn softmax(t: &[f64]) -> Vec<f64> {
    let m = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = t.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

fn check_gradient(name: &str, loss: &dyn Fn(&[f64]) -> LossResult, s: &[f64]) {
    let analytic = loss(s).gradient;
    let numeric = numeric_gradient(&|x| loss(x).value, s, 1e-6);
    let err = relative_error(&analytic, &numeric);
    assert!(err < 1e-4, "{name}: relative error {err} at s={s:?}");
}

#[test]
fn every_loss_matches_finite_differences() {
    let mut rng = seed::rng(41);
    for _ in 0..30 {
        let n = rng.random_range(2..=10);
        let y = graded_labels(&mut rng, n);
        let s = scores(&mut rng, n);
        let t = scores(&mut rng, n);
        check_gradient("MSE", &|x| loss_mse(&y, x).unwrap(), &s);
        check_gradient("PairLog", &|x| loss_pair_logistic(&y, x).unwrap(), &s);
        check_gradient("PairMSE", &|x| loss_pair_mse(&y, x).unwrap(), &s);
        check_gradient("Softmax", &|x| loss_softmax(&y, x).unwrap(), &s);

        let noise = draw_gumbel_noise(n, &NoiseSpec { seed: rng.random(), ..NoiseSpec::default() }).unwrap();
        check_gradient("GumbelNDCG", &|x| loss_gumbel_ndcg_with_noise(&y, x, &noise, 0.1).unwrap(), &s);

        let w = lambda_weights(&y, &s).unwrap();
        check_gradient("LambdaLoss", &|x| loss_lambda_with_weights(&y, x, &w).unwrap(), &s);

        let k = rng.random_range(1..=n);
        let order = teacher_order(&t);
        check_gradient("RD", &|x| loss_rd(&order, x, k).unwrap(), &s);

        let samples = sample_permutations(&softmax(&t), k, 4, rng.random()).unwrap();
        check_gradient("RankDistil", &|x| loss_rankdistil_with_samples(&samples, x).unwrap(), &s);
    }
}

#[test]
fn pair_logistic_matches_pair_enumeration() {
    let y = [2.0, 1.0, 0.0];
    let s = [0.3, -0.1, 0.5];
    let mut expected = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if y[i] > y[j] {
                expected -= (1.0 / (1.0 + (-(s[i] - s[j]) as f64).exp())).ln();
            }
        }
    }
    assert_abs_diff_eq!(loss_pair_logistic(&y, &s).unwrap().value, expected, epsilon = 1e-14);
}

#[test]
fn documented_values() {
    assert_eq!(loss_mse(&[1.0, 0.0], &[0.0, 0.0]).unwrap().gradient, vec![-2.0, 0.0]);
    assert_abs_diff_eq!(loss_pair_logistic(&[1.0, 0.0], &[0.0, 0.0]).unwrap().value, 2f64.ln(), epsilon = 1e-15);
    assert_eq!(loss_pair_mse(&[1.0, 0.0], &[0.0, 0.0]).unwrap().value, 2.0);
    let delta = 1.0 - 1.0 / 3f64.log2();
    assert_abs_diff_eq!(delta, 0.36907, epsilon = 1e-5);
    assert_abs_diff_eq!(loss_lambda(&[1.0, 0.0], &[0.0, 0.0]).unwrap().value, delta * 2f64.ln(), epsilon = 1e-12);
    assert_abs_diff_eq!(loss_lambda(&[1.0, 0.0], &[0.0, 0.0]).unwrap().value, 0.25583, epsilon = 1e-5);
    assert_abs_diff_eq!(loss_rd(&[0, 1], &[0.0, 0.0], 2).unwrap().value, 2.0 * 2f64.ln(), epsilon = 1e-15);
}

#[test]
fn rd_gradient_support_is_the_teacher_top_k() {
    let mut rng = seed::rng(5);
    for _ in 0..50 {
        let n = rng.random_range(2..=10);
        let t = scores(&mut rng, n);
        let s = scores(&mut rng, n);
        let k = rng.random_range(1..=n);
        let order = teacher_order(&t);
        let g = loss_rd(&order, &s, k).unwrap().gradient;
        for (i, gi) in g.iter().enumerate() {
            assert_eq!(*gi != 0.0, order[..k].contains(&i));
        }
    }
}

#[test]
fn indicator_gated_losses_are_silent_on_equal_labels() {
    let s = [0.4, -1.2, 2.0, 0.0];
    for y in [[0.0; 4], [2.0; 4]] {
        let r = loss_pair_logistic(&y, &s).unwrap();
        assert_eq!((r.value, r.gradient.clone()), (0.0, vec![0.0; 4]));
        let w = vec![1.0; 16];
        let r = loss_lambda_with_weights(&y, &s, &w).unwrap();
        assert_eq!((r.value, r.gradient), (0.0, vec![0.0; 4]));
    }
    let r = loss_lambda(&[1.0, 1.0, 1.0], &[0.3, 0.2, -0.5]).unwrap();
    assert_eq!(r.value, 0.0);
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn plackett_luce_sums_to_one_over_permutations() {
    let mut rng = seed::rng(9);
    for l in 2..=6 {
        let s = scores(&mut rng, l);
        let perms = permutations(l);
        for k in 1..=l {
            // Each full permutation contributes its length-K prefix; the
            // (L−K)! completions of a prefix share its probability.
            let total: f64 = perms
                .iter()
                .map(|p| plackett_luce_log_prob(&p[..k], &s).unwrap().exp())
                .sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }
}

fn analytic_prob(probs: &[f64], perm: &[usize]) -> f64 {
    let mut left = 1.0;
    let mut p = 1.0;
    for &i in perm {
        p *= probs[i] / left;
        left -= probs[i];
    }
    p
}

#[test]
fn sampler_frequencies_match_sequential_probabilities() {
    let probs = [0.5, 0.3, 0.2];
    let samples = sample_permutations(&probs, 3, 20_000, 77).unwrap();
    for perm in permutations(3) {
        let freq = samples.iter().filter(|s| **s == perm).count() as f64 / samples.len() as f64;
        assert!((freq - analytic_prob(&probs, &perm)).abs() < 0.015, "{perm:?}: {freq}");
    }
}

#[test]
fn rankdistil_single_sample_is_negative_log_likelihood() {
    let samples = sample_permutations(&[0.1, 0.2, 0.3, 0.4], 2, 1, 12).unwrap();
    let s = [0.5, -0.3, 0.2, 1.1];
    let r = loss_rankdistil_with_samples(&samples, &s).unwrap();
    assert_abs_diff_eq!(r.value, -plackett_luce_log_prob(&samples[0], &s).unwrap(), epsilon = 1e-15);
    let r = loss_rankdistil(&[0.5, 0.5], &[0.0, 0.0], 2, 3, 1).unwrap();
    assert_abs_diff_eq!(r.value, 2f64.ln(), epsilon = 1e-15);
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (2usize..=10).prop_flat_map(|n| {
        (
            prop::collection::vec(0u8..=4, n).prop_map(|v| v.into_iter().map(f64::from).collect::<Vec<_>>()),
            prop::collection::vec(-3.0f64..3.0, n),
            -50.0f64..50.0,
        )
    })
}

fn same(a: &LossResult, b: &LossResult) -> bool {
    (a.value - b.value).abs() <= 1e-9 && a.gradient.iter().zip(&b.gradient).all(|(x, y)| (x - y).abs() <= 1e-9)
}

proptest! {
    #[test]
    fn pairwise_and_listwise_losses_ignore_score_shifts((y, s, c) in instance()) {
        prop_assume!(y.iter().any(|&v| v > 0.0));
        let shifted: Vec<f64> = s.iter().map(|v| v + c).collect();
        prop_assert!(same(&loss_pair_logistic(&y, &s).unwrap(), &loss_pair_logistic(&y, &shifted).unwrap()));
        prop_assert!(same(&loss_pair_mse(&y, &s).unwrap(), &loss_pair_mse(&y, &shifted).unwrap()));
        prop_assert!(same(&loss_softmax(&y, &s).unwrap(), &loss_softmax(&y, &shifted).unwrap()));
        prop_assert!(same(&loss_lambda(&y, &s).unwrap(), &loss_lambda(&y, &shifted).unwrap()));
        let noise = draw_gumbel_noise(s.len(), &NoiseSpec::default()).unwrap();
        prop_assert!(same(
            &loss_gumbel_ndcg_with_noise(&y, &s, &noise, 0.1).unwrap(),
            &loss_gumbel_ndcg_with_noise(&y, &shifted, &noise, 0.1).unwrap()
        ));
    }

    #[test]
    fn mse_moves_with_score_shifts((y, s, c) in instance()) {
        prop_assume!(c.abs() > 1e-3);
        let shifted: Vec<f64> = s.iter().map(|v| v + c).collect();
        prop_assert!(loss_mse(&y, &s).unwrap().value != loss_mse(&y, &shifted).unwrap().value);
    }
}

use idealpoint::logistic::{self, LogisticData};
use idealpoint::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn simulate(n: usize, b0: f64, b1: f64, seed: u64) -> LogisticData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
    let y = x
        .iter()
        .map(|&v| rng.random::<f64>() < 1.0 / (1.0 + (-(b0 + b1 * v)).exp()))
        .collect();
    LogisticData::new(x, y).unwrap()
}

fn subset(data: &LogisticData, skip: usize) -> LogisticData {
    let keep = |k: &usize| *k != skip;
    LogisticData::new(
        (0..data.len()).filter(keep).map(|k| data.x()[k]).collect(),
        (0..data.len()).filter(keep).map(|k| data.y()[k]).collect(),
    )
    .unwrap()
}

#[test]
fn one_step_cooks_tracks_exact_deletion() {
    let data = simulate(80, -0.3, 1.1, 5);
    let fit = logistic::fit_mle(&data).unwrap();
    let cooks = logistic::cooks_distance(&fit);
    // information matrix is the inverse of the covariance
    let [[a, b], [_, d]] = fit.cov;
    let det = a * d - b * b;
    let info = [[d / det, -b / det], [-b / det, a / det]];
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&i, &j| cooks.distances[j].total_cmp(&cooks.distances[i]));
    for &i in order.iter().take(5) {
        let refit = logistic::fit_mle(&subset(&data, i)).unwrap();
        let delta = [fit.coef[0] - refit.coef[0], fit.coef[1] - refit.coef[1]];
        let exact = (delta[0] * (info[0][0] * delta[0] + info[0][1] * delta[1])
            + delta[1] * (info[1][0] * delta[0] + info[1][1] * delta[1]))
            / 2.0;
        let rel = (cooks.distances[i] - exact).abs() / exact;
        assert!(rel < 0.2, "row {i}: one-step {} vs exact {exact}", cooks.distances[i]);
    }
}

#[test]
fn box_tidwell_holds_its_size_under_linearity() {
    let replicates = 200;
    let rejected = (0..replicates)
        .filter(|&r| {
            let data = simulate(500, 0.2, 0.9, 1000 + r);
            logistic::box_tidwell(&data).unwrap().linearity_rejected(0.05)
        })
        .count();
    let rate = rejected as f64 / replicates as f64;
    assert!((rate - 0.05).abs() <= 0.03, "rejection rate {rate}");
}

#[test]
fn box_tidwell_detects_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..600).map(|_| rng.random::<f64>() * 4.0).collect();
    let y = x
        .iter()
        .map(|&v: &f64| rng.random::<f64>() < 1.0 / (1.0 + (-(-3.0 + 0.4 * v * v)).exp()))
        .collect();
    let bt = logistic::box_tidwell(&LogisticData::new(x, y).unwrap()).unwrap();
    assert!(bt.linearity_rejected(0.05), "p = {}", bt.p);
}

#[test]
fn auc_is_the_concordance_probability() {
    let data = simulate(60, 0.0, 1.5, 9);
    let roc = logistic::roc_auc(data.x(), data.y()).unwrap();
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..data.len() {
        for j in 0..data.len() {
            if data.y()[i] && !data.y()[j] {
                pairs += 1.0;
                wins += match data.x()[i].partial_cmp(&data.x()[j]).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
    }
    approx::assert_abs_diff_eq!(roc.auc, wins / pairs, epsilon = 1e-12);
}

#[test]
fn single_class_and_separation_are_errors() {
    let x: Vec<f64> = (0..12).map(f64::from).collect();
    let all = LogisticData::new(x.clone(), vec![true; 12]).unwrap();
    assert!(matches!(logistic::fit_mle(&all), Err(Error::SingleClass)));
    let split = LogisticData::new(x.clone(), x.iter().map(|&v| v > 5.5).collect()).unwrap();
    let err = logistic::fit_mle(&split).unwrap_err();
    assert!(matches!(err, Error::Separation(_)));
    assert!(err.is_numerical());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn affine_rescaling_of_x_only_rescales_the_slope(shift in -3.0f64..3.0, scale in 0.2f64..5.0, seed in 0u64..500) {
        let data = simulate(120, -0.2, 0.8, seed);
        let moved = LogisticData::new(data.x().iter().map(|v| shift + scale * v).collect(), data.y().to_vec()).unwrap();
        let (Ok(a), Ok(b)) = (logistic::fit_mle(&data), logistic::fit_mle(&moved)) else {
            return Ok(());
        };
        prop_assert!((a.coef[1] - b.coef[1] * scale).abs() < 1e-6);
        prop_assert!((a.residual_deviance - b.residual_deviance).abs() < 1e-6);
        prop_assert!((a.p[1] - b.p[1]).abs() < 1e-6);
        let ra = logistic::roc_auc_fit(&a).unwrap();
        let rb = logistic::roc_auc_fit(&b).unwrap();
        prop_assert!((ra.auc - rb.auc).abs() < 1e-12);
    }

    #[test]
    fn row_order_does_not_matter(seed in 0u64..500, rotate in 1usize..119) {
        let data = simulate(120, 0.4, -1.0, seed);
        let mut x = data.x().to_vec();
        let mut y = data.y().to_vec();
        x.rotate_left(rotate);
        y.rotate_left(rotate);
        let (Ok(a), Ok(b)) = (logistic::fit_mle(&data), logistic::fit_mle(&LogisticData::new(x, y).unwrap())) else {
            return Ok(());
        };
        prop_assert!((a.coef[0] - b.coef[0]).abs() < 1e-8);
        prop_assert!((a.coef[1] - b.coef[1]).abs() < 1e-8);
        prop_assert!((a.aic - b.aic).abs() < 1e-8);
    }
}

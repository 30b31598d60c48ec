//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use idealpoint::diagnostics::{self, summarize_diagnostics};
use idealpoint::logistic::{self, BayesConfig, LogisticData};
use idealpoint::mcmc::{self, InitRule, McmcConfig, PosteriorDraws, Problem};
use idealpoint::model::{self, IdealPoints, ItemParams, Link, PriorSpec};
use idealpoint::rollcall::{BinaryView, Bloc};
use idealpoint::stats;
use idealpoint::synthetic::{self, Synthetic, SyntheticSpec, TinyInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn recovery_config() -> McmcConfig {
    McmcConfig {
        iterations: 8000,
        warmup: 2000,
        thin: 2,
        chains: 4,
        ..McmcConfig::default()
    }
}

fn fit(data: &Synthetic, link: Link, anchors: Option<&[(String, f64); 2]>) -> PosteriorDraws {
    let (problem, _) = Problem::from_matrix(&data.matrix, &data.roster, anchors, PriorSpec::default(), link)
        .expect("recovery fixture builds a problem");
    mcmc::run(&recovery_config(), &problem).expect("recovery fit runs")
}

/// Posterior means of ideal points free in both fits, paired by id.
fn paired_means(a: &PosteriorDraws, b: &PosteriorDraws) -> (Vec<f64>, Vec<f64>) {
    let theirs = synthetic::free_beta_means(b);
    synthetic::free_beta_means(a)
        .into_iter()
        .filter_map(|(id, x)| theirs.iter().find(|(j, _)| *j == id).map(|(_, y)| (x, *y)))
        .unzip()
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for link in [Link::Probit, Link::Logit] {
        let instance = TinyInstance::canonical(link);
        let oracle = synthetic::quadrature_posterior(&instance).expect("oracle");
        let config = McmcConfig {
            iterations: 60_000,
            warmup: 5_000,
            thin: 1,
            chains: 4,
            init: InitRule::PriorDraw,
            ..McmcConfig::default()
        };
        let draws = mcmc::run(&config, &instance.problem().expect("problem")).expect("sampler");
        for (p, name) in oracle.moments.names.iter().enumerate() {
            assert_eq!(&draws.params[p].name, name);
            let x = draws.pooled(p);
            let dm = (stats::mean(&x) - oracle.moments.means[p]).abs();
            let ds = (stats::sd(&x) - oracle.moments.sds[p]).abs();
            worst = worst.max(dm).max(ds);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        worst < 0.05 && secs < 120.0,
        format!("max |sampler - quadrature| = {worst:.4} (< 0.05), {secs:.1}s (< 120s)"),
    )
}

fn criterion_2(data: &Synthetic, logit: &PosteriorDraws, secs: f64) -> Outcome {
    let (ids, means): (Vec<String>, Vec<f64>) = synthetic::free_beta_means(logit).into_iter().unzip();
    let truth: Vec<f64> = ids.iter().map(|id| data.true_beta(id).unwrap()).collect();
    let r = stats::pearson(&means, &truth);
    let max_rhat = summarize_diagnostics(logit).max_rhat().unwrap_or(f64::INFINITY);
    outcome(
        r >= 0.90 && max_rhat <= 1.05 && secs < 300.0,
        format!("pearson = {r:.4} (>= 0.90), max R-hat = {max_rhat:.4} (<= 1.05), {secs:.1}s (< 300s)"),
    )
}

fn criterion_3(logit: &PosteriorDraws, probit: &PosteriorDraws) -> Outcome {
    let (a, b) = paired_means(logit, probit);
    let rho = stats::spearman(&a, &b);
    outcome(rho >= 0.98, format!("spearman(logit, probit) = {rho:.4} (>= 0.98)"))
}

fn criterion_4(data: &Synthetic, logit: &PosteriorDraws) -> Outcome {
    // first opposition and first coalition member outside the default anchors
    let pick = |bloc: Bloc| {
        data.roster
            .iter()
            .find(|l| l.anchor.is_none() && l.bloc == bloc)
            .map(|l| l.id.clone())
            .expect("both blocs present")
    };
    let anchors = [(pick(Bloc::Opposition), -1.0), (pick(Bloc::Coalition), 1.0)];
    let other = fit(data, Link::Logit, Some(&anchors));
    let (a, b) = paired_means(logit, &other);
    let rho = stats::spearman(&a, &b);
    outcome(
        rho >= 0.95,
        format!("spearman across anchor pairs ({}, {}) = {rho:.4} (>= 0.95)", anchors[0].0, anchors[1].0),
    )
}

fn random_instance(rng: &mut ChaCha8Rng) -> (BinaryView, ItemParams, Vec<f64>, Vec<Option<f64>>) {
    let n = rng.random_range(3..12);
    let m = rng.random_range(1..10);
    let cells = (0..n * m)
        .map(|_| (rng.random::<f64>() < 0.8).then(|| rng.random::<bool>()))
        .collect();
    let normal = |rng: &mut ChaCha8Rng, s: f64| s * rng.sample::<f64, _>(StandardNormal);
    let items = ItemParams {
        mu: (0..m).map(|_| normal(rng, 2.0)).collect(),
        alpha: (0..m).map(|_| normal(rng, 2.0)).collect(),
    };
    let beta: Vec<f64> = (0..n).map(|_| normal(rng, 1.0)).collect();
    let mut pins = vec![None; n];
    pins[0] = Some(-1.0);
    pins[1] = Some(1.0);
    (BinaryView::from_cells(n, m, cells), items, beta, pins)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let link = if k % 2 == 0 { Link::Logit } else { Link::Probit };
        let (view, items, beta, pins) = random_instance(&mut rng);
        let points = IdealPoints::new(beta.clone(), pins.clone());
        let flipped_items = ItemParams {
            mu: items.mu.clone(),
            alpha: items.alpha.iter().map(|a| -a).collect(),
        };
        let flipped = IdealPoints::new(
            beta.iter().map(|b| -b).collect(),
            pins.iter().map(|p| p.map(|v| -v)).collect(),
        );
        let a = model::log_likelihood(&view, &items, &points, link).unwrap();
        let b = model::log_likelihood(&view, &flipped_items, &flipped, link).unwrap();
        worst = worst.max((a - b).abs());
    }
    outcome(worst < 1e-9, format!("max |delta log-likelihood| = {worst:.2e} over 100 instances (< 1e-9)"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let priors = PriorSpec::default();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..20 {
        let link = if k % 2 == 0 { Link::Logit } else { Link::Probit };
        let (view, items, beta, pins) = random_instance(&mut rng);
        let points = IdealPoints::new(beta, pins);
        let g = model::grad_log_posterior(&view, &items, &points, &priors, link).unwrap();
        let lp = |items: &ItemParams, points: &IdealPoints| {
            model::log_posterior(&view, items, points, &priors, link).unwrap()
        };
        let mut check = |analytic: f64, plus: f64, minus: f64| {
            let fd = (plus - minus) / (2.0 * h);
            worst = worst.max((analytic - fd).abs() / fd.abs().max(1.0));
        };
        for j in 0..items.len() {
            for which in 0..2 {
                let shifted = |d: f64| {
                    let mut it = items.clone();
                    if which == 0 {
                        it.mu[j] += d;
                    } else {
                        it.alpha[j] += d;
                    }
                    lp(&it, &points)
                };
                let analytic = if which == 0 { g.mu[j] } else { g.alpha[j] };
                check(analytic, shifted(h), shifted(-h));
            }
        }
        for i in points.free_indices().collect::<Vec<_>>() {
            let shifted = |d: f64| {
                let mut p = points.clone();
                p.set(i, p.get(i) + d);
                lp(&items, &p)
            };
            check(g.beta[i], shifted(h), shifted(-h));
        }
    }
    outcome(worst < 1e-4, format!("max relative gradient error = {worst:.2e} over 20 instances (< 1e-4)"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = 5000;
    let iid: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..s).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let rhat = diagnostics::split_rhat(&iid).unwrap();
    let ratio = diagnostics::diagnose("x", &iid, true).ess_over_s.unwrap();
    let shifted = vec![iid[0].clone(), iid[1].iter().map(|x| x + 1.0).collect()];
    let rhat_shift = diagnostics::split_rhat(&shifted).unwrap();
    outcome(
        (0.99..=1.02).contains(&rhat) && (0.9..=1.1).contains(&ratio) && rhat_shift > 1.1,
        format!("iid R-hat = {rhat:.4}, ess/S = {ratio:.3}, shifted R-hat = {rhat_shift:.3}"),
    )
}

fn twelve_point_fixture() -> LogisticData {
    let x = vec![-2.1, -1.5, -1.2, -0.7, -0.3, 0.0, 0.2, 0.5, 0.9, 1.3, 1.8, 2.4];
    let y = [0, 0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 1];
    LogisticData::new(x, y.iter().map(|&v| v == 1).collect()).unwrap()
}

/// Bernoulli log-likelihood maximized by brute force: a 0.01 grid over
/// [-5, 5]^2, then a 1e-3 grid around the best cell. The log-likelihood is
/// concave, so the fine window contains the global maximum.
fn grid_search_mle(x: &[f64], y: &[bool]) -> (f64, f64) {
    let ll = |b0: f64, b1: f64| -> f64 {
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let p = 1.0 / (1.0 + (-(b0 + b1 * xi)).exp());
                if yi {
                    p.ln()
                } else {
                    (1.0 - p).ln()
                }
            })
            .sum()
    };
    let search = |lo0: f64, lo1: f64, step: f64, count: usize| {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for a in 0..=count {
            for b in 0..=count {
                let (b0, b1) = (lo0 + step * a as f64, lo1 + step * b as f64);
                let v = ll(b0, b1);
                if v > best.0 {
                    best = (v, b0, b1);
                }
            }
        }
        (best.1, best.2)
    };
    let (c0, c1) = search(-5.0, -5.0, 0.01, 1000);
    search(c0 - 0.05, c1 - 0.05, 1e-3, 100)
}

fn criterion_8() -> Outcome {
    let data = twelve_point_fixture();
    let fit = logistic::fit_mle(&data).unwrap();
    let (g0, g1) = grid_search_mle(data.x(), data.y());
    let coef_err = (fit.coef[0] - g0).abs().max((fit.coef[1] - g1).abs());

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let scores: Vec<f64> = (0..20).map(|_| (rng.random::<f64>() * 10.0).round() / 10.0).collect();
    let labels: Vec<bool> = (0..20).map(|i| i % 3 != 0).collect();
    let auc = logistic::roc_auc(&scores, &labels).unwrap().auc;
    let (mut num, mut den) = (0u32, 0u32);
    for (i, &pi) in labels.iter().enumerate() {
        for (j, &pj) in labels.iter().enumerate() {
            if pi && !pj {
                den += 2;
                num += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    let concordance = num as f64 / den as f64;
    let p = stats::chi_square_sf(3.841, 1.0);
    let or = logistic::odds_ratio(0.7857);
    outcome(
        coef_err < 2e-3 && auc == concordance && (p - 0.05).abs() < 1e-3 && (or - 2.194).abs() < 1e-3,
        format!(
            "|MLE - grid| = {coef_err:.1e}, AUC {auc} vs concordance {concordance}, LRT p = {p:.5}, OR = {or:.4}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x: Vec<f64> = (0..144).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<bool> = x
        .iter()
        .map(|&xi| rng.random::<f64>() < 1.0 / (1.0 + (-(-1.0 + 0.8 * xi)).exp()))
        .collect();
    let data = LogisticData::new(x, y).unwrap();
    let mle = logistic::fit_mle(&data).unwrap();
    let bayes = logistic::fit_bayes(&data, 10.0, &BayesConfig::default()).unwrap();
    let d0 = (bayes.intercept.mean - mle.coef[0]).abs();
    let d1 = (bayes.slope.mean - mle.coef[1]).abs();
    outcome(
        d0 < 0.1 && d1 < 0.1,
        format!("|bayes - mle| = ({d0:.4}, {d1:.4}) (< 0.1 each)"),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_idealpoint"))
        .args(args)
        .current_dir(dir)
        .output()
        .map(|o| {
            if !o.status.success() {
                eprintln!("{}", String::from_utf8_lossy(&o.stderr));
            }
            o.status.success()
        })
        .unwrap_or(false)
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_10() -> Outcome {
    let work = tempfile::tempdir().unwrap();
    let root = work.path();
    let config = "iterations = 1200\nwarmup = 200\nthin = 2\nchains = 2\nseed = 11\n\
                  bayes_warmup = 300\nbayes_draws = 300\n";
    std::fs::write(root.join("run.cfg"), config).unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["simulate", "--out", "sim", "--n", "15", "--m", "30"],
        vec!["describe", "--votes", "sim/votes.csv", "--meta", "sim/meta.csv", "--out", "desc"],
        vec!["fit", "--votes", "sim/votes.csv", "--meta", "sim/meta.csv", "--out", "fit"],
        vec!["summarize", "--run", "fit", "--out", "sum"],
        vec!["probs", "--run", "fit", "--out", "probs"],
        vec!["compare", "--run", "fit", "--other", "fit", "--out", "cmp"],
        vec!["logit", "--run", "fit", "--out", "logit"],
        vec!["oracle", "--out", "oracle"],
    ];
    let mut snapshots = Vec::new();
    for round in 0..2 {
        for cmd in &commands {
            let mut args = vec!["--config", "run.cfg"];
            args.extend(cmd);
            if !run_cli(root, &args) {
                return outcome(false, format!("`{}` failed in round {}", cmd.join(" "), round + 1));
            }
        }
        snapshots.push(csv_files(root));
    }
    let same = snapshots[0] == snapshots[1];
    outcome(
        same && !snapshots[0].is_empty(),
        format!("{} CSV files across 8 commands, byte-identical on rerun: {same}", snapshots[0].len()),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    let mut report = |id: u8, name: &'static str, o: Outcome| {
        println!("criterion {id:>2} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };

    report(1, "oracle equivalence", criterion_1());

    let data = synthetic::generate(&SyntheticSpec::default()).expect("recovery fixture");
    let started = Instant::now();
    let logit = fit(&data, Link::Logit, None);
    let secs = started.elapsed().as_secs_f64();
    report(2, "synthetic recovery", criterion_2(&data, &logit, secs));
    let probit = fit(&data, Link::Probit, None);
    report(3, "link agreement", criterion_3(&logit, &probit));
    report(4, "anchor robustness", criterion_4(&data, &logit));
    report(5, "reflection invariance", criterion_5());
    report(6, "gradient check", criterion_6());
    report(7, "diagnostics calibration", criterion_7());
    report(8, "logistic oracle", criterion_8());
    report(9, "weak-prior agreement", criterion_9());
    report(10, "reproducibility", criterion_10());

    let failed = results.iter().filter(|(_, _, o)| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

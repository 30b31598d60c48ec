//! Logistic regression of a binary legislator attribute on estimated ideal
//! points: maximum likelihood by Newton/IRLS, deviance tests, odds ratios,
//! ROC/AUC, Box-Tidwell linearity check, Cook's distances and a Bayesian
//! fit with normal priors.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::diagnostics;
use crate::error::{Error, Result};
use crate::stats;

/// Newton iterations stop once every score component is below this.
pub const SCORE_TOLERANCE: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 25;
/// Any coefficient beyond this magnitude is treated as separation.
pub const SEPARATION_BOUND: f64 = 30.0;
pub const MIN_ROWS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticData {
    x: Vec<f64>,
    y: Vec<bool>,
}

impl LogisticData {
    pub fn new(x: Vec<f64>, y: Vec<bool>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Domain(format!("{} predictors but {} responses", x.len(), y.len())));
        }
        if x.len() < MIN_ROWS {
            return Err(Error::Domain(format!("need at least {MIN_ROWS} rows, got {}", x.len())));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("x[{i}]")));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[bool] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn y_f64(&self) -> Vec<f64> {
        self.y.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    fn require_both_classes(&self) -> Result<()> {
        let ones = self.y.iter().filter(|&&b| b).count();
        if ones == 0 || ones == self.y.len() {
            return Err(Error::SingleClass);
        }
        Ok(())
    }

    fn design(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), 2, |i, j| if j == 0 { 1.0 } else { self.x[i] })
    }

    /// Complete or quasi-complete separation by the single predictor.
    fn separated(&self) -> bool {
        let range = |class: bool| {
            self.x
                .iter()
                .zip(&self.y)
                .filter(|(_, &y)| y == class)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&x, _)| (lo.min(x), hi.max(x)))
        };
        let (lo0, hi0) = range(false);
        let (lo1, hi1) = range(true);
        hi0 <= lo1 || hi1 <= lo0
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-likelihood contribution of a Bernoulli outcome under logit `eta`.
fn bernoulli_log_lik(eta: f64, y: f64) -> f64 {
    // y * eta - log(1 + e^eta)
    y * eta - (eta.max(0.0) + (-eta.abs()).exp().ln_1p())
}

#[derive(Clone, Debug)]
pub(crate) struct Irls {
    pub coef: DVector<f64>,
    /// Inverse of the (penalized) information at the solution.
    pub cov: DMatrix<f64>,
    pub fitted: Vec<f64>,
    pub log_lik: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Newton-Raphson on the Bernoulli log-likelihood, optionally with an
/// independent `N(0, 1/prior_precision)` penalty on every coefficient.
pub(crate) fn irls(design: &DMatrix<f64>, y: &[f64], prior_precision: f64) -> Result<Irls> {
    let p = design.ncols();
    let yv = DVector::from_column_slice(y);
    let mut coef = DVector::zeros(p);
    let mut iterations = 0;
    let mut converged = false;
    let info_at = |coef: &DVector<f64>| -> (DVector<f64>, DMatrix<f64>, DVector<f64>) {
        let eta = design * coef;
        let fitted = eta.map(sigmoid);
        let w = fitted.map(|pi| pi * (1.0 - pi));
        let score = design.transpose() * (&yv - &fitted) - coef * prior_precision;
        let mut info = design.transpose() * DMatrix::from_diagonal(&w) * design;
        for k in 0..p {
            info[(k, k)] += prior_precision;
        }
        (score, info, fitted)
    };
    loop {
        let (score, info, _) = info_at(&coef);
        if score.amax() < SCORE_TOLERANCE {
            converged = true;
            break;
        }
        if iterations == MAX_ITERATIONS {
            break;
        }
        let chol = info
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Degenerate("information matrix is singular".into()))?;
        coef += chol.solve(&score);
        iterations += 1;
        if coef.amax() > SEPARATION_BOUND {
            return Err(Error::Separation(SEPARATION_BOUND));
        }
    }
    let (_, info, fitted) = info_at(&coef);
    let cov = info
        .cholesky()
        .ok_or_else(|| Error::Degenerate("information matrix is singular".into()))?
        .inverse();
    let eta = design * &coef;
    let log_lik = eta.iter().zip(y).map(|(&e, &yi)| bernoulli_log_lik(e, yi)).sum();
    Ok(Irls {
        coef,
        cov,
        fitted: fitted.iter().copied().collect(),
        log_lik,
        iterations,
        converged,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticFit {
    pub data: LogisticData,
    /// Intercept then slope.
    pub coef: [f64; 2],
    pub se: [f64; 2],
    pub z: [f64; 2],
    pub p: [f64; 2],
    pub cov: [[f64; 2]; 2],
    pub log_likelihood: f64,
    pub null_deviance: f64,
    pub residual_deviance: f64,
    pub aic: f64,
    pub fitted: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn fit_mle(data: &LogisticData) -> Result<LogisticFit> {
    data.require_both_classes()?;
    if data.separated() {
        return Err(Error::Separation(SEPARATION_BOUND));
    }
    let y = data.y_f64();
    let fit = irls(&data.design(), &y, 0.0)?;
    let coef = [fit.coef[0], fit.coef[1]];
    let se = [fit.cov[(0, 0)].sqrt(), fit.cov[(1, 1)].sqrt()];
    let z = [coef[0] / se[0], coef[1] / se[1]];
    let ybar = stats::mean(&y);
    let null_ll: f64 = y
        .iter()
        .map(|&yi| if yi > 0.5 { ybar.ln() } else { (1.0 - ybar).ln() })
        .sum();
    let residual_deviance = -2.0 * fit.log_lik;
    Ok(LogisticFit {
        data: data.clone(),
        coef,
        se,
        z,
        p: [stats::two_sided_normal_p(z[0]), stats::two_sided_normal_p(z[1])],
        cov: [[fit.cov[(0, 0)], fit.cov[(0, 1)]], [fit.cov[(1, 0)], fit.cov[(1, 1)]]],
        log_likelihood: fit.log_lik,
        null_deviance: -2.0 * null_ll,
        residual_deviance,
        aic: residual_deviance + 2.0 * 2.0,
        fitted: fit.fitted,
        iterations: fit.iterations,
        converged: fit.converged,
    })
}

impl LogisticFit {
    pub fn odds_ratios(&self) -> [f64; 2] {
        [odds_ratio(self.coef[0]), odds_ratio(self.coef[1])]
    }

    /// Signed square roots of each row's deviance contribution.
    pub fn deviance_residuals(&self) -> Vec<f64> {
        self.fitted
            .iter()
            .zip(self.data.y())
            .map(|(&pi, &y)| {
                if y {
                    (-2.0 * pi.ln()).sqrt()
                } else {
                    -(-2.0 * (1.0 - pi).ln()).sqrt()
                }
            })
            .collect()
    }

    pub fn null_df(&self) -> usize {
        self.data.len() - 1
    }

    pub fn residual_df(&self) -> usize {
        self.data.len() - 2
    }
}

pub fn odds_ratio(coefficient: f64) -> f64 {
    coefficient.exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LikelihoodRatio {
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
}

/// Deviance drop from the intercept-only model, against chi-square(1).
pub fn lrt_chisq(fit: &LogisticFit) -> LikelihoodRatio {
    let statistic = fit.null_deviance - fit.residual_deviance;
    LikelihoodRatio {
        statistic,
        df: 1,
        p: stats::chi_square_sf(statistic, 1.0),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Roc {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, one step per distinct score.
    pub points: Vec<(f64, f64)>,
    pub thresholds: Vec<f64>,
    pub auc: f64,
}

/// ROC curve by sweeping the distinct scores from high to low, with the
/// trapezoid area accumulated in exact integer arithmetic.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<Roc> {
    assert_eq!(scores.len(), labels.len());
    let pos = labels.iter().filter(|&&b| b).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut twice_area = 0u128;
    let mut k = 0;
    while k < order.len() {
        let t = scores[order[k]];
        let (tp_prev, fp_prev) = (tp, fp);
        while k < order.len() && scores[order[k]] == t {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        twice_area += ((fp - fp_prev) as u128) * ((tp_prev + tp) as u128);
        thresholds.push(t);
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(Roc {
        points,
        thresholds,
        auc: twice_area as f64 / (2 * pos as u128 * neg as u128) as f64,
    })
}

pub fn roc_auc_fit(fit: &LogisticFit) -> Result<Roc> {
    roc_auc(&fit.fitted, fit.data.y())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxTidwell {
    pub coefficient: f64,
    pub se: f64,
    /// Wald z of the `x log x` term.
    pub statistic: f64,
    pub p: f64,
}

impl BoxTidwell {
    pub fn linearity_rejected(&self, alpha: f64) -> bool {
        self.p < alpha
    }
}

/// Box-Tidwell linearity check on the shifted predictor
/// `x' = x - min(x) + 1`, testing the `x' ln x'` term by Wald z.
pub fn box_tidwell(data: &LogisticData) -> Result<BoxTidwell> {
    data.require_both_classes()?;
    let lo = data.x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::Degenerate("predictor is constant".into()));
    }
    let shifted: Vec<f64> = data.x.iter().map(|x| x - lo + 1.0).collect();
    let term: Vec<f64> = shifted.iter().map(|s| s * s.ln()).collect();

    // z collinear with (1, x) leaves nothing to test
    let base = data.design();
    let zv = DVector::from_column_slice(&term);
    let beta = (base.transpose() * &base)
        .cholesky()
        .ok_or_else(|| Error::Degenerate("predictor is constant".into()))?
        .solve(&(base.transpose() * &zv));
    let resid = &zv - &base * beta;
    let zbar = stats::mean(&term);
    let total: f64 = term.iter().map(|t| (t - zbar).powi(2)).sum();
    if resid.norm_squared() <= 1e-10 * total.max(f64::MIN_POSITIVE) {
        return Err(Error::Degenerate("x log x term is collinear with x".into()));
    }

    let design = DMatrix::from_fn(data.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => data.x[i],
        _ => term[i],
    });
    let fit = irls(&design, &data.y_f64(), 0.0)?;
    let coefficient = fit.coef[2];
    let se = fit.cov[(2, 2)].sqrt();
    let statistic = coefficient / se;
    Ok(BoxTidwell {
        coefficient,
        se,
        statistic,
        p: stats::two_sided_normal_p(statistic),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CooksDistance {
    pub distances: Vec<f64>,
    pub leverage: Vec<f64>,
    /// `4 / n`.
    pub threshold: f64,
    pub influential: Vec<bool>,
}

/// One-step Cook's distances from the weighted hat matrix of the final
/// IRLS iteration.
pub fn cooks_distance(fit: &LogisticFit) -> CooksDistance {
    let n = fit.data.len();
    let k = 2.0;
    let c = fit.cov;
    let mut distances = Vec::with_capacity(n);
    let mut leverage = Vec::with_capacity(n);
    for i in 0..n {
        let x = fit.data.x[i];
        let pi = fit.fitted[i];
        let w = pi * (1.0 - pi);
        let quad = c[0][0] + 2.0 * c[0][1] * x + c[1][1] * x * x;
        let h = w * quad;
        let y = if fit.data.y[i] { 1.0 } else { 0.0 };
        let pearson = (y - pi) / w.sqrt();
        leverage.push(h);
        distances.push(pearson * pearson * h / (k * (1.0 - h).powi(2)));
    }
    let threshold = 4.0 / n as f64;
    CooksDistance {
        influential: distances.iter().map(|&d| d > threshold).collect(),
        distances,
        leverage,
        threshold,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BayesConfig {
    pub chains: usize,
    pub warmup: usize,
    /// Retained draws per chain.
    pub draws: usize,
    pub seed: u64,
    pub adapt_window: usize,
}

impl Default for BayesConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            warmup: 1000,
            draws: 1000,
            seed: 20_100_720,
            adapt_window: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BayesParam {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    pub mcse: Option<f64>,
    pub rhat: Option<f64>,
    pub n_eff: Option<f64>,
}

impl BayesParam {
    fn from_chains(name: &str, chains: &[Vec<f64>]) -> Self {
        let pooled = chains.concat();
        let sorted = stats::sorted(&pooled);
        let d = diagnostics::diagnose(name, chains, chains.len() >= 2);
        Self {
            name: name.to_string(),
            mean: d.mean,
            sd: d.sd,
            q10: stats::quantile_sorted(&sorted, 0.1),
            q50: stats::quantile_sorted(&sorted, 0.5),
            q90: stats::quantile_sorted(&sorted, 0.9),
            mcse: d.mcse,
            rhat: d.rhat,
            n_eff: d.ess,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BayesLogisticFit {
    pub prior_sd: f64,
    pub intercept: BayesParam,
    pub slope: BayesParam,
    pub log_posterior: BayesParam,
    /// Post-warmup acceptance rate per chain.
    pub acceptance: Vec<f64>,
    pub config: BayesConfig,
}

/// Adaptive random-walk Metropolis on `(intercept, slope)` with independent
/// `N(0, prior_sd^2)` priors. Proposals take the shape of the Laplace
/// covariance at the posterior mode; their scale adapts during warmup.
pub fn fit_bayes(data: &LogisticData, prior_sd: f64, config: &BayesConfig) -> Result<BayesLogisticFit> {
    data.require_both_classes()?;
    if !(prior_sd > 0.0) || !prior_sd.is_finite() {
        return Err(Error::Config(format!("prior sd must be positive, got {prior_sd}")));
    }
    if config.chains == 0 || config.draws < 20 || config.adapt_window == 0 {
        return Err(Error::Config("bayesian fit needs chains >= 1 and draws >= 20".into()));
    }
    let design = data.design();
    let y = data.y_f64();
    let precision = 1.0 / (prior_sd * prior_sd);
    let mode = irls(&design, &y, precision)?;
    let chol = mode
        .cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("posterior curvature is singular".into()))?;
    let l = chol.l();
    let shape = [[l[(0, 0)], 0.0], [l[(1, 0)], l[(1, 1)]]];

    let log_post = |b0: f64, b1: f64| -> f64 {
        let mut acc = stats::CompensatedSum::new();
        for (x, yi) in data.x.iter().zip(&y) {
            acc.add(bernoulli_log_lik(b0 + b1 * x, *yi));
        }
        acc.value() - 0.5 * precision * (b0 * b0 + b1 * b1)
    };

    let mut b0_chains = Vec::with_capacity(config.chains);
    let mut b1_chains = Vec::with_capacity(config.chains);
    let mut lp_chains = Vec::with_capacity(config.chains);
    let mut acceptance = Vec::with_capacity(config.chains);
    for c in 0..config.chains {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(c as u64));
        let step = |rng: &mut ChaCha8Rng, s: f64| -> (f64, f64) {
            let e1: f64 = rng.sample(StandardNormal);
            let e2: f64 = rng.sample(StandardNormal);
            (s * shape[0][0] * e1, s * (shape[1][0] * e1 + shape[1][1] * e2))
        };
        // overdispersed start around the mode
        let (d0, d1) = step(&mut rng, 2.0);
        let (mut b0, mut b1) = (mode.coef[0] + d0, mode.coef[1] + d1);
        let mut lp = log_post(b0, b1);
        let mut scale = 2.38 / 2f64.sqrt();
        let mut window_accepts = 0usize;
        let mut accepts = 0usize;
        let (mut draws0, mut draws1, mut lps) = (Vec::new(), Vec::new(), Vec::new());
        for it in 0..config.warmup + config.draws {
            let (d0, d1) = step(&mut rng, scale);
            let (p0, p1) = (b0 + d0, b1 + d1);
            let lp_new = log_post(p0, p1);
            let accepted = rng.random::<f64>().ln() < lp_new - lp;
            if accepted {
                b0 = p0;
                b1 = p1;
                lp = lp_new;
            }
            if it < config.warmup {
                window_accepts += accepted as usize;
                if (it + 1) % config.adapt_window == 0 {
                    let rate = window_accepts as f64 / config.adapt_window as f64;
                    scale = (scale * ((rate - 0.35) * 2.0).exp()).max(1e-4);
                    window_accepts = 0;
                }
            } else {
                accepts += accepted as usize;
                draws0.push(b0);
                draws1.push(b1);
                lps.push(lp);
            }
        }
        acceptance.push(accepts as f64 / config.draws as f64);
        b0_chains.push(draws0);
        b1_chains.push(draws1);
        lp_chains.push(lps);
    }
    Ok(BayesLogisticFit {
        prior_sd,
        intercept: BayesParam::from_chains("(Intercept)", &b0_chains),
        slope: BayesParam::from_chains("ideal_point", &b1_chains),
        log_posterior: BayesParam::from_chains("log-posterior", &lp_chains),
        acceptance,
        config: *config,
    })
}

impl BayesLogisticFit {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["parameter", "mean", "sd", "q10", "q50", "q90", "mcse", "rhat", "n_eff"])?;
        let opt = |v: Option<f64>| v.map_or("NA".to_string(), |x| x.to_string());
        for p in [&self.intercept, &self.slope, &self.log_posterior] {
            w.write_record([
                p.name.clone(),
                p.mean.to_string(),
                p.sd.to_string(),
                p.q10.to_string(),
                p.q50.to_string(),
                p.q90.to_string(),
                opt(p.mcse),
                opt(p.rhat),
                opt(p.n_eff),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::truncnorm::latent_utility;
use super::{AcceptanceRates, InitRule, McmcConfig, Problem};
use crate::error::{Error, Result};
use crate::model::{self, IdealPoints, ItemParams};
use crate::rollcall::Bloc;

/// Proposal scales never shrink below this.
pub const MIN_PROPOSAL_SCALE: f64 = 1e-4;
const MAX_PROPOSAL_SCALE: f64 = 100.0;
const TARGET_ACCEPT: f64 = 0.4;
const INITIAL_ITEM_SCALE: f64 = 0.3;
const INITIAL_BETA_SCALE: f64 = 0.5;
/// Rescaling applied when a 2-d item proposal takes the shape of the
/// warmup covariance (2.38 / sqrt(2)).
const SHAPED_ITEM_SCALE: f64 = 1.68;
const MIN_SHAPE_SAMPLES: usize = 50;

/// Lower-triangular Cholesky factor of a 2x2 proposal shape.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Shape2 {
    l11: f64,
    l21: f64,
    l22: f64,
}

impl Shape2 {
    const IDENTITY: Shape2 = Shape2 {
        l11: 1.0,
        l21: 0.0,
        l22: 1.0,
    };

    fn from_cov(c11: f64, c21: f64, c22: f64) -> Option<Self> {
        let l11 = c11.sqrt();
        let l21 = c21 / l11;
        let rest = c22 - l21 * l21;
        if !(l11 > 0.0) || !(rest > 0.0) || !l21.is_finite() {
            return None;
        }
        Some(Shape2 {
            l11,
            l21,
            l22: rest.sqrt(),
        })
    }
}

/// Running mean and covariance of one `(mu, alpha)` pair.
#[derive(Clone, Copy, Debug, Default)]
struct PairMoments {
    count: usize,
    mean: [f64; 2],
    m2: [f64; 3],
}

impl PairMoments {
    fn push(&mut self, x: f64, y: f64) {
        self.count += 1;
        let k = self.count as f64;
        let dx = x - self.mean[0];
        let dy = y - self.mean[1];
        self.mean[0] += dx / k;
        self.mean[1] += dy / k;
        self.m2[0] += dx * (x - self.mean[0]);
        self.m2[1] += dx * (y - self.mean[1]);
        self.m2[2] += dy * (y - self.mean[1]);
    }

    fn cov(&self) -> (f64, f64, f64) {
        let d = (self.count - 1) as f64;
        (self.m2[0] / d, self.m2[1] / d, self.m2[2] / d)
    }
}

/// Current values of every parameter plus the sampler's own bookkeeping.
#[derive(Clone, Debug)]
pub struct LatentState {
    pub mu: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: IdealPoints,
    /// Probit latent utilities, one per observed cell in row-major order.
    pub ystar: Vec<f64>,
    row_start: Vec<usize>,
    col_cells: Vec<Vec<(usize, bool, usize)>>,

    item_scale: Vec<f64>,
    item_shape: Vec<Shape2>,
    beta_scale: Vec<f64>,
    moments: Vec<PairMoments>,
    windows_since_reset: usize,

    window_item_accepts: Vec<u32>,
    window_beta_accepts: Vec<u32>,
    window_len: u32,
    item_accepts: Vec<u64>,
    beta_accepts: Vec<u64>,
    sweeps: u64,
    frozen: bool,
}

impl LatentState {
    fn new(problem: &Problem, mu: Vec<f64>, alpha: Vec<f64>, beta: Vec<f64>) -> Self {
        let view = &problem.view;
        let mut row_start = Vec::with_capacity(view.n());
        let mut col_cells = vec![Vec::new(); view.m()];
        let mut k = 0;
        for i in 0..view.n() {
            row_start.push(k);
            for &(j, y) in view.row(i) {
                col_cells[j].push((i, y, k));
                k += 1;
            }
        }
        let m = view.m();
        let n = view.n();
        Self {
            mu,
            alpha,
            beta: problem.ideal_points(beta),
            ystar: vec![0.0; view.n_obs()],
            row_start,
            col_cells,
            item_scale: vec![INITIAL_ITEM_SCALE; m],
            item_shape: vec![Shape2::IDENTITY; m],
            beta_scale: vec![INITIAL_BETA_SCALE; n],
            moments: vec![PairMoments::default(); m],
            windows_since_reset: 0,
            window_item_accepts: vec![0; m],
            window_beta_accepts: vec![0; n],
            window_len: 0,
            item_accepts: vec![0; m],
            beta_accepts: vec![0; n],
            sweeps: 0,
            frozen: false,
        }
    }

    pub fn items(&self) -> ItemParams {
        ItemParams {
            mu: self.mu.clone(),
            alpha: self.alpha.clone(),
        }
    }

    pub fn log_posterior(&self, problem: &Problem) -> f64 {
        model::log_prior_unchecked(&self.mu, &self.alpha, &self.beta, &problem.priors)
            + model::log_likelihood_unchecked(
                &problem.view,
                &self.mu,
                &self.alpha,
                self.beta.values(),
                problem.link,
            )
    }

    /// Appends the free parameters in draw-column order: all mu, all alpha,
    /// then free betas by row.
    pub fn write_free(&self, problem: &Problem, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.mu);
        out.extend_from_slice(&self.alpha);
        out.extend(
            (0..problem.n())
                .filter(|&i| !self.beta.is_anchored(i))
                .map(|i| self.beta.get(i)),
        );
    }

    pub fn item_scales(&self) -> &[f64] {
        &self.item_scale
    }

    pub fn beta_scales(&self) -> &[f64] {
        &self.beta_scale
    }

    /// Overrides every proposal scale (clamped to the allowed range).
    pub fn set_proposal_scales(&mut self, scale: f64) {
        let s = scale.clamp(MIN_PROPOSAL_SCALE, MAX_PROPOSAL_SCALE);
        self.item_scale.iter_mut().for_each(|v| *v = s);
        self.beta_scale.iter_mut().for_each(|v| *v = s);
    }

    /// Stops adaptation; acceptance counting restarts from here.
    pub fn freeze(&mut self) {
        self.frozen = true;
        self.item_accepts.iter_mut().for_each(|a| *a = 0);
        self.beta_accepts.iter_mut().for_each(|a| *a = 0);
        self.sweeps = 0;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Post-freeze acceptance rates for the Metropolis kernel.
    pub fn acceptance(&self, problem: &Problem) -> Option<AcceptanceRates> {
        if problem.link != crate::model::Link::Logit || self.sweeps == 0 {
            return None;
        }
        let s = self.sweeps as f64;
        Some(AcceptanceRates {
            items: self.item_accepts.iter().map(|&a| a as f64 / s).collect(),
            betas: (0..problem.n())
                .filter(|&i| !self.beta.is_anchored(i))
                .map(|i| self.beta_accepts[i] as f64 / s)
                .collect(),
        })
    }

    /// Warmup-only adaptation hook, called after iteration `it`.
    pub fn adapt(&mut self, it: usize, config: &McmcConfig) {
        if self.frozen {
            return;
        }
        let shape_from = config.warmup / 4;
        let shape_at = config.warmup / 2;
        if it >= shape_from && it < shape_at {
            for j in 0..self.mu.len() {
                self.moments[j].push(self.mu[j], self.alpha[j]);
            }
        }
        if (it + 1) % config.adapt_window == 0 && self.window_len > 0 {
            let step = 1.0 / ((self.windows_since_reset + 1) as f64).sqrt();
            let w = self.window_len as f64;
            for (scale, acc) in self.item_scale.iter_mut().zip(&self.window_item_accepts) {
                *scale = rescale(*scale, *acc as f64 / w, step);
            }
            for (scale, acc) in self.beta_scale.iter_mut().zip(&self.window_beta_accepts) {
                *scale = rescale(*scale, *acc as f64 / w, step);
            }
            self.window_item_accepts.iter_mut().for_each(|a| *a = 0);
            self.window_beta_accepts.iter_mut().for_each(|a| *a = 0);
            self.window_len = 0;
            self.windows_since_reset += 1;
        }
        if it + 1 == shape_at {
            for j in 0..self.mu.len() {
                let mom = &self.moments[j];
                if mom.count < MIN_SHAPE_SAMPLES {
                    continue;
                }
                let (c11, c21, c22) = mom.cov();
                let jitter = 1e-8 * (c11 + c22).max(1e-12);
                if let Some(shape) = Shape2::from_cov(c11 + jitter, c21, c22 + jitter) {
                    self.item_shape[j] = shape;
                    self.item_scale[j] = SHAPED_ITEM_SCALE;
                }
            }
            self.windows_since_reset = 0;
        }
    }

    fn record(&mut self, item_accepts: impl Iterator<Item = (usize, bool)>) {
        for (j, acc) in item_accepts {
            if acc {
                if self.frozen {
                    self.item_accepts[j] += 1;
                } else {
                    self.window_item_accepts[j] += 1;
                }
            }
        }
    }
}

fn rescale(scale: f64, rate: f64, step: f64) -> f64 {
    (scale * ((rate - TARGET_ACCEPT) * 2.0 * step).exp()).clamp(MIN_PROPOSAL_SCALE, MAX_PROPOSAL_SCALE)
}

/// Initial state under `rule`; anchors always sit at their pins.
pub fn init_state<R: Rng + ?Sized>(rule: InitRule, problem: &Problem, rng: &mut R) -> Result<LatentState> {
    let (n, m) = (problem.n(), problem.m());
    let priors = &problem.priors;
    let (mu, alpha, beta) = match rule {
        InitRule::BlocSigns => (
            vec![0.0; m],
            vec![0.0; m],
            problem
                .blocs
                .iter()
                .map(|b| if *b == Bloc::Coalition { 1.0 } else { -1.0 })
                .collect(),
        ),
        InitRule::Zeros => (vec![0.0; m], vec![0.0; m], vec![0.0; n]),
        InitRule::PriorDraw => {
            let item = Normal::new(priors.item_mean, priors.item_var.sqrt())
                .map_err(|e| Error::Config(e.to_string()))?;
            let point = Normal::new(priors.beta_mean, priors.beta_var.sqrt())
                .map_err(|e| Error::Config(e.to_string()))?;
            let mu: Vec<f64> = (0..m).map(|_| item.sample(rng)).collect();
            let alpha: Vec<f64> = (0..m).map(|_| item.sample(rng)).collect();
            let beta: Vec<f64> = (0..n).map(|_| point.sample(rng)).collect();
            (mu, alpha, beta)
        }
    };
    let state = LatentState::new(problem, mu, alpha, beta);
    let lp = model::log_posterior(&problem.view, &state.items(), &state.beta, &problem.priors, problem.link)?;
    if !lp.is_finite() {
        return Err(Error::NonFinite("log posterior at initial values".into()));
    }
    Ok(state)
}

/// One exact Gibbs sweep for the probit model: latent utilities, then
/// every item pair, then every free ideal point.
pub fn step_probit_gibbs<R: Rng + ?Sized>(state: &mut LatentState, problem: &Problem, rng: &mut R) {
    let view = &problem.view;
    let priors = &problem.priors;

    for i in 0..view.n() {
        let b = state.beta.get(i);
        let start = state.row_start[i];
        for (offset, &(j, y)) in view.row(i).iter().enumerate() {
            let mean = state.mu[j] + state.alpha[j] * b;
            state.ystar[start + offset] = latent_utility(rng, mean, y);
        }
    }

    let item_prec = 1.0 / priors.item_var;
    for j in 0..view.m() {
        let mut p11 = item_prec;
        let mut p21 = 0.0;
        let mut p22 = item_prec;
        let mut r1 = priors.item_mean * item_prec;
        let mut r2 = priors.item_mean * item_prec;
        for &(i, _, k) in &state.col_cells[j] {
            let b = state.beta.get(i);
            let z = state.ystar[k];
            p11 += 1.0;
            p21 += b;
            p22 += b * b;
            r1 += z;
            r2 += z * b;
        }
        // P = L L^T; mean = P^-1 r; draw = mean + L^-T e
        let l11 = p11.sqrt();
        let l21 = p21 / l11;
        let l22 = (p22 - l21 * l21).sqrt();
        let w1 = r1 / l11;
        let w2 = (r2 - l21 * w1) / l22;
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        let x2 = (w2 + e2) / l22;
        let x1 = (w1 + e1 - l21 * x2) / l11;
        state.mu[j] = x1;
        state.alpha[j] = x2;
    }

    let beta_prec = 1.0 / priors.beta_var;
    for i in 0..view.n() {
        if state.beta.is_anchored(i) {
            continue;
        }
        let mut prec = beta_prec;
        let mut r = priors.beta_mean * beta_prec;
        let start = state.row_start[i];
        for (offset, &(j, _)) in view.row(i).iter().enumerate() {
            let a = state.alpha[j];
            prec += a * a;
            r += a * (state.ystar[start + offset] - state.mu[j]);
        }
        let e: f64 = rng.sample(StandardNormal);
        state.beta.set(i, r / prec + e / prec.sqrt());
    }
    if state.frozen {
        state.sweeps += 1;
    } else {
        state.window_len += 1;
    }
}

/// One random-walk Metropolis-within-Gibbs sweep for the logit model.
pub fn step_logit_mh<R: Rng + ?Sized>(state: &mut LatentState, problem: &Problem, rng: &mut R) {
    let view = &problem.view;
    let priors = &problem.priors;
    let link = problem.link;

    let mut item_acc = Vec::with_capacity(view.m());
    for j in 0..view.m() {
        let (mu, alpha) = (state.mu[j], state.alpha[j]);
        let shape = state.item_shape[j];
        let s = state.item_scale[j];
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        let mu_new = mu + s * shape.l11 * e1;
        let alpha_new = alpha + s * (shape.l21 * e1 + shape.l22 * e2);

        let mut delta = 0.0;
        for &(i, y) in view.col(j) {
            let b = state.beta.get(i);
            delta += link.cell_log_prob(mu_new + alpha_new * b, y) - link.cell_log_prob(mu + alpha * b, y);
        }
        let c = priors.item_mean;
        delta -= ((mu_new - c).powi(2) + (alpha_new - c).powi(2) - (mu - c).powi(2) - (alpha - c).powi(2))
            / (2.0 * priors.item_var);
        let accept = rng.random::<f64>().ln() < delta;
        if accept {
            state.mu[j] = mu_new;
            state.alpha[j] = alpha_new;
        }
        item_acc.push((j, accept));
    }
    state.record(item_acc.into_iter());

    for i in 0..view.n() {
        if state.beta.is_anchored(i) {
            continue;
        }
        let b = state.beta.get(i);
        let e: f64 = rng.sample(StandardNormal);
        let b_new = b + state.beta_scale[i] * e;
        let mut delta = 0.0;
        for &(j, y) in view.row(i) {
            let (mu, alpha) = (state.mu[j], state.alpha[j]);
            delta += link.cell_log_prob(mu + alpha * b_new, y) - link.cell_log_prob(mu + alpha * b, y);
        }
        let c = priors.beta_mean;
        delta -= ((b_new - c).powi(2) - (b - c).powi(2)) / (2.0 * priors.beta_var);
        if rng.random::<f64>().ln() < delta {
            state.beta.set(i, b_new);
            if state.frozen {
                state.beta_accepts[i] += 1;
            } else {
                state.window_beta_accepts[i] += 1;
            }
        }
    }
    if state.frozen {
        state.sweeps += 1;
    } else {
        state.window_len += 1;
    }
}

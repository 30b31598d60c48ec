//! One-dimensional spatial voting model.
//!
//! A legislator with ideal point `beta_i` votes Yes on list `j` with
//! probability `G(mu_j + alpha_j * beta_i)`, where `G` is the logistic or
//! standard normal CDF. Item pairs `(mu_j, alpha_j)` have independent
//! normal priors with common mean and variance; free ideal points have a
//! normal prior. Anchored ideal points are constants and carry no prior.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rollcall::BinaryView;
use crate::stats::{self, CompensatedSum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Link {
    Logit,
    Probit,
}

impl Link {
    pub fn name(self) -> &'static str {
        match self {
            Link::Logit => "logit",
            Link::Probit => "probit",
        }
    }

    /// G(x).
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            Link::Logit => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            Link::Probit => stats::normal_cdf(x),
        }
    }

    /// ln G(x), without underflow for large |x|.
    pub fn ln_cdf(self, x: f64) -> f64 {
        match self {
            // ln σ(x) = -softplus(-x)
            Link::Logit => -((-x).max(0.0) + (-x.abs()).exp().ln_1p()),
            Link::Probit => stats::ln_normal_cdf(x),
        }
    }

    /// d/dx ln G(x).
    pub fn d_ln_cdf(self, x: f64) -> f64 {
        match self {
            Link::Logit => self.cdf(-x),
            Link::Probit => (stats::ln_normal_pdf(x) - stats::ln_normal_cdf(x)).exp(),
        }
    }

    /// Log probability of vote `y` given linear predictor `eta`, using
    /// `1 - G(x) = G(-x)`.
    #[inline]
    pub fn cell_log_prob(self, eta: f64, y: bool) -> f64 {
        if y {
            self.ln_cdf(eta)
        } else {
            self.ln_cdf(-eta)
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logit" => Ok(Link::Logit),
            "probit" => Ok(Link::Probit),
            other => Err(Error::Config(format!("unknown link `{other}` (expected logit or probit)"))),
        }
    }
}

pub fn link_eval(link: Link, x: f64) -> f64 {
    link.cdf(x)
}

/// Approval and discrimination for one vote list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ItemPair {
    pub mu: f64,
    pub alpha: f64,
}

/// Maps the Yes/No outcome locations `p`, `q` and noise scale `sigma` to
/// the identified item parameters.
pub fn reparameterize(p: f64, q: f64, sigma: f64) -> Result<ItemPair> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("noise scale must be positive, got {sigma}")));
    }
    Ok(ItemPair {
        mu: (q * q - p * p) / sigma,
        alpha: 2.0 * (p - q) / sigma,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItemParams {
    pub mu: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl ItemParams {
    pub fn zeros(m: usize) -> Self {
        Self {
            mu: vec![0.0; m],
            alpha: vec![0.0; m],
        }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

/// Ideal points with an anchor mask. Anchored entries always hold their pin.
#[derive(Clone, Debug, PartialEq)]
pub struct IdealPoints {
    values: Vec<f64>,
    pins: Vec<Option<f64>>,
}

impl IdealPoints {
    pub fn new(mut values: Vec<f64>, pins: Vec<Option<f64>>) -> Self {
        assert_eq!(values.len(), pins.len(), "one pin slot per legislator");
        for (v, pin) in values.iter_mut().zip(&pins) {
            if let Some(p) = pin {
                *v = *p;
            }
        }
        Self { values, pins }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn pin(&self, i: usize) -> Option<f64> {
        self.pins[i]
    }

    pub fn pins(&self) -> &[Option<f64>] {
        &self.pins
    }

    pub fn is_anchored(&self, i: usize) -> bool {
        self.pins[i].is_some()
    }

    pub fn free_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(|&i| self.pins[i].is_none())
    }

    /// Sets a free entry. Writes to anchored entries are ignored.
    pub fn set(&mut self, i: usize, value: f64) {
        if self.pins[i].is_none() {
            self.values[i] = value;
        }
    }
}

/// Normal prior hyperparameters: `(mu_j, alpha_j) ~ N(item_mean, item_var I)`
/// and `beta_i ~ N(beta_mean, beta_var)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorSpec {
    pub item_mean: f64,
    pub item_var: f64,
    pub beta_mean: f64,
    pub beta_var: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            item_mean: 0.0,
            item_var: 25.0,
            beta_mean: 0.0,
            beta_var: 1.0,
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.item_var) || !ok(self.beta_var) {
            return Err(Error::Config("prior variances must be positive and finite".into()));
        }
        if !self.item_mean.is_finite() || !self.beta_mean.is_finite() {
            return Err(Error::Config("prior means must be finite".into()));
        }
        Ok(())
    }
}

fn check_dims(view: &BinaryView, items: &ItemParams, points: &IdealPoints) -> Result<()> {
    if items.mu.len() != view.m() || items.alpha.len() != view.m() || points.len() != view.n() {
        return Err(Error::Domain(format!(
            "dimension mismatch: view is {}x{}, got {} ideal points and {} items",
            view.n(),
            view.m(),
            points.len(),
            items.mu.len()
        )));
    }
    Ok(())
}

fn check_finite(items: &ItemParams, points: &IdealPoints) -> Result<()> {
    for j in 0..items.len() {
        if !items.mu[j].is_finite() {
            return Err(Error::NonFinite(format!("mu[{j}]")));
        }
        if !items.alpha[j].is_finite() {
            return Err(Error::NonFinite(format!("alpha[{j}]")));
        }
    }
    for (i, b) in points.values().iter().enumerate() {
        if !b.is_finite() {
            return Err(Error::NonFinite(format!("beta[{i}]")));
        }
    }
    Ok(())
}

pub fn log_likelihood(
    view: &BinaryView,
    items: &ItemParams,
    points: &IdealPoints,
    link: Link,
) -> Result<f64> {
    check_dims(view, items, points)?;
    check_finite(items, points)?;
    Ok(log_likelihood_unchecked(view, &items.mu, &items.alpha, points.values(), link))
}

pub(crate) fn log_likelihood_unchecked(
    view: &BinaryView,
    mu: &[f64],
    alpha: &[f64],
    beta: &[f64],
    link: Link,
) -> f64 {
    let mut acc = CompensatedSum::new();
    for (i, j, y) in view.observed() {
        acc.add(link.cell_log_prob(mu[j] + alpha[j] * beta[i], y));
    }
    acc.value()
}

pub fn log_prior(items: &ItemParams, points: &IdealPoints, priors: &PriorSpec) -> Result<f64> {
    priors.validate()?;
    check_finite(items, points)?;
    Ok(log_prior_unchecked(&items.mu, &items.alpha, points, priors))
}

pub(crate) fn log_prior_unchecked(
    mu: &[f64],
    alpha: &[f64],
    points: &IdealPoints,
    priors: &PriorSpec,
) -> f64 {
    let mut acc = CompensatedSum::new();
    for (m, a) in mu.iter().zip(alpha) {
        acc.add(stats::ln_normal_density(*m, priors.item_mean, priors.item_var));
        acc.add(stats::ln_normal_density(*a, priors.item_mean, priors.item_var));
    }
    for i in points.free_indices() {
        acc.add(stats::ln_normal_density(points.get(i), priors.beta_mean, priors.beta_var));
    }
    acc.value()
}

pub fn log_posterior(
    view: &BinaryView,
    items: &ItemParams,
    points: &IdealPoints,
    priors: &PriorSpec,
    link: Link,
) -> Result<f64> {
    Ok(log_prior(items, points, priors)? + log_likelihood(view, items, points, link)?)
}

/// Gradient of the log posterior. Anchored entries of `beta` are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub mu: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

pub fn grad_log_posterior(
    view: &BinaryView,
    items: &ItemParams,
    points: &IdealPoints,
    priors: &PriorSpec,
    link: Link,
) -> Result<Gradient> {
    check_dims(view, items, points)?;
    check_finite(items, points)?;
    priors.validate()?;
    let mut g = Gradient {
        mu: items.mu.iter().map(|m| -(m - priors.item_mean) / priors.item_var).collect(),
        alpha: items.alpha.iter().map(|a| -(a - priors.item_mean) / priors.item_var).collect(),
        beta: (0..points.len())
            .map(|i| {
                if points.is_anchored(i) {
                    0.0
                } else {
                    -(points.get(i) - priors.beta_mean) / priors.beta_var
                }
            })
            .collect(),
    };
    for (i, j, y) in view.observed() {
        let s = if y { 1.0 } else { -1.0 };
        let beta = points.get(i);
        let eta = items.mu[j] + items.alpha[j] * beta;
        let d = s * link.d_ln_cdf(s * eta);
        g.mu[j] += d;
        g.alpha[j] += d * beta;
        if !points.is_anchored(i) {
            g.beta[i] += d * items.alpha[j];
        }
    }
    Ok(g)
}

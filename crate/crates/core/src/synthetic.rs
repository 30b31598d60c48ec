//! Synthetic roll calls with known truth, an exact quadrature posterior for
//! tiny instances, and a missing-data sensitivity harness.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};
use crate::mcmc::{self, Anchors, McmcConfig, PosteriorDraws, Problem};
use crate::model::{Link, PriorSpec};
use crate::rollcall::{BinaryView, Bloc, LegislatorMeta, VoteMatrix, VoteState};
use crate::stats::{self, CompensatedSum};

/// Largest number of free parameters the quadrature oracle accepts.
pub const MAX_QUADRATURE_FREE: usize = 5;
pub const DEFAULT_GRID_POINTS: usize = 41;
/// Grid half-width in prior standard deviations.
pub const GRID_HALF_WIDTH_SDS: f64 = 6.0;
pub const REFINEMENT_TOLERANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dist {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Dist {
    fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> Result<f64> {
        match self {
            Dist::Normal { mean, sd } => Ok(Normal::new(mean, sd)
                .map_err(|e| Error::Config(format!("normal({mean}, {sd}): {e}")))?
                .sample(rng)),
            Dist::Uniform { lo, hi } => Ok(Uniform::new(lo, hi)
                .map_err(|e| Error::Config(format!("uniform({lo}, {hi}): {e}")))?
                .sample(rng)),
        }
    }

    /// `normal:MEAN:SD` or `uniform:LO:HI`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{t}` in distribution `{s}`")))
        };
        match parts.as_slice() {
            [kind, a, b] if kind.eq_ignore_ascii_case("normal") => Ok(Dist::Normal { mean: num(a)?, sd: num(b)? }),
            [kind, a, b] if kind.eq_ignore_ascii_case("uniform") => Ok(Dist::Uniform { lo: num(a)?, hi: num(b)? }),
            _ => Err(Error::Config(format!("distribution `{s}` is not normal:MEAN:SD or uniform:LO:HI"))),
        }
    }
}

impl std::fmt::Display for Dist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dist::Normal { mean, sd } => write!(f, "normal:{mean}:{sd}"),
            Dist::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub beta: Dist,
    pub mu: Dist,
    pub alpha: Dist,
    pub missing_rate: f64,
    pub link: Link,
    pub seed: u64,
    /// Rows whose true ideal points are fixed at -1 and +1.
    pub anchor_rows: [usize; 2],
}

impl Default for SyntheticSpec {
    /// The recovery fixture: 40 legislators, 120 lists, 20% missing.
    fn default() -> Self {
        Self {
            n: 40,
            m: 120,
            beta: Dist::Normal { mean: 0.0, sd: 1.0 },
            mu: Dist::Normal { mean: 0.0, sd: 0.5 },
            alpha: Dist::Normal { mean: 0.0, sd: 1.5 },
            missing_rate: 0.2,
            link: Link::Logit,
            seed: 20_100_720,
            anchor_rows: [0, 1],
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.m == 0 {
            return Err(Error::Config(format!("need n >= 3 and m >= 1, got n={} m={}", self.n, self.m)));
        }
        if !(0.0..=0.95).contains(&self.missing_rate) {
            return Err(Error::Config(format!("missing rate {} outside [0, 0.95]", self.missing_rate)));
        }
        let [a, b] = self.anchor_rows;
        if a == b || a >= self.n || b >= self.n {
            return Err(Error::Config("anchor rows must be two distinct rows".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Truth {
    pub beta: Vec<f64>,
    pub mu: Vec<f64>,
    pub alpha: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub matrix: VoteMatrix,
    pub roster: Vec<LegislatorMeta>,
    pub truth: Truth,
}

pub fn legislator_id(i: usize) -> String {
    format!("S{:03}", i + 1)
}

pub fn list_id(j: usize) -> String {
    format!("V{:03}", j + 1)
}

/// Draws a roll call from the model. Every cell consumes the same random
/// numbers whatever the missing rate, so masks are nested across rates.
pub fn generate(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut beta = (0..spec.n).map(|_| spec.beta.sample(&mut rng)).collect::<Result<Vec<_>>>()?;
    beta[spec.anchor_rows[0]] = -1.0;
    beta[spec.anchor_rows[1]] = 1.0;
    let mu = (0..spec.m).map(|_| spec.mu.sample(&mut rng)).collect::<Result<Vec<_>>>()?;
    let alpha = (0..spec.m).map(|_| spec.alpha.sample(&mut rng)).collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::with_capacity(spec.n * spec.m);
    for &b in &beta {
        for j in 0..spec.m {
            let yes = rng.random::<f64>() < spec.link.cdf(mu[j] + alpha[j] * b);
            let missing = rng.random::<f64>() < spec.missing_rate;
            cells.push(match (missing, yes) {
                (true, _) => VoteState::Absent,
                (false, true) => VoteState::Yes,
                (false, false) => VoteState::No,
            });
        }
    }
    let ids: Vec<String> = (0..spec.n).map(legislator_id).collect();
    let matrix = VoteMatrix::new(ids.clone(), (0..spec.m).map(list_id).collect(), cells)?;

    let roster = ids
        .into_iter()
        .zip(&beta)
        .enumerate()
        .map(|(i, (id, &b))| {
            let coalition = b > 0.0;
            let flag = rng.random::<f64>() < Link::Logit.cdf(-1.0 + 0.8 * b);
            LegislatorMeta {
                name: format!("Legislator {}", i + 1),
                party: format!("{}{}", if coalition { "C" } else { "O" }, i % 3 + 1),
                bloc: if coalition { Bloc::Coalition } else { Bloc::Opposition },
                attribute_flag: flag,
                anchor: spec.anchor_rows.iter().position(|&r| r == i).map(|k| [-1.0, 1.0][k]),
                id,
            }
        })
        .collect();
    Ok(Synthetic {
        matrix,
        roster,
        truth: Truth { beta, mu, alpha },
    })
}

impl Synthetic {
    /// Truth in draw-column naming: `beta_<id>`, `mu_<list>`, `alpha_<list>`.
    pub fn write_truth_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["parameter", "value"])?;
        for (id, b) in self.matrix.legislator_ids().iter().zip(&self.truth.beta) {
            w.write_record([format!("beta_{id}"), b.to_string()])?;
        }
        for (j, id) in self.matrix.list_ids().iter().enumerate() {
            w.write_record([format!("mu_{id}"), self.truth.mu[j].to_string()])?;
            w.write_record([format!("alpha_{id}"), self.truth.alpha[j].to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn true_beta(&self, id: &str) -> Option<f64> {
        self.matrix
            .legislator_ids()
            .iter()
            .position(|x| x == id)
            .map(|i| self.truth.beta[i])
    }
}

/// A model instance small enough for exhaustive quadrature.
#[derive(Clone, Debug)]
pub struct TinyInstance {
    pub view: BinaryView,
    pub legislator_ids: Vec<String>,
    pub list_ids: Vec<String>,
    pub pins: Vec<Option<f64>>,
    pub priors: PriorSpec,
    pub link: Link,
}

impl TinyInstance {
    /// Three legislators, two lists; rows 0 and 1 anchored at -1 and +1,
    /// unit-variance priors so a +-6 grid covers them.
    pub fn canonical(link: Link) -> Self {
        Self::three_by_two([[Some(false), Some(true)], [Some(true), Some(true)], [Some(true), Some(false)]], link)
    }

    /// Anchors with mirrored votes and a free legislator voting like the
    /// first anchor on one list and the second on the other.
    pub fn symmetric(link: Link) -> Self {
        Self::three_by_two([[Some(true), Some(false)], [Some(false), Some(true)], [Some(true), Some(true)]], link)
    }

    pub fn three_by_two(votes: [[Option<bool>; 2]; 3], link: Link) -> Self {
        Self {
            view: BinaryView::from_cells(3, 2, votes.iter().flatten().copied().collect()),
            legislator_ids: vec!["A".into(), "B".into(), "C".into()],
            list_ids: vec!["L1".into(), "L2".into()],
            pins: vec![Some(-1.0), Some(1.0), None],
            priors: PriorSpec {
                item_mean: 0.0,
                item_var: 1.0,
                beta_mean: 0.0,
                beta_var: 1.0,
            },
            link,
        }
    }

    pub fn n_free(&self) -> usize {
        2 * self.view.m() + self.pins.iter().filter(|p| p.is_none()).count()
    }

    /// Names in draw-column order.
    pub fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.list_ids.iter().map(|id| format!("mu_{id}")).collect();
        names.extend(self.list_ids.iter().map(|id| format!("alpha_{id}")));
        names.extend(
            self.legislator_ids
                .iter()
                .zip(&self.pins)
                .filter(|(_, p)| p.is_none())
                .map(|(id, _)| format!("beta_{id}")),
        );
        names
    }

    /// The same instance as a sampler problem.
    pub fn problem(&self) -> Result<Problem> {
        let anchored: Vec<(usize, f64)> = self
            .pins
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|v| (i, v)))
            .collect();
        let [(r0, p0), (r1, p1)] = anchored.as_slice() else {
            return Err(Error::Config("tiny instance needs exactly two anchors".into()));
        };
        let roster: Vec<LegislatorMeta> = self
            .legislator_ids
            .iter()
            .map(|id| LegislatorMeta {
                id: id.clone(),
                name: id.clone(),
                party: String::new(),
                bloc: Bloc::Independent,
                attribute_flag: false,
                anchor: None,
            })
            .collect();
        Problem::new(
            self.view.clone(),
            self.list_ids.clone(),
            &roster,
            Anchors::new([*r0, *r1], [*p0, *p1])?,
            self.priors,
            self.link,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureResult {
    pub moments: Moments,
    pub grid_points: usize,
    /// Largest moment change when the grid resolution is doubled.
    pub refinement_delta: f64,
}

impl QuadratureResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["parameter", "mean", "sd"])?;
        let m = &self.moments;
        for k in 0..m.names.len() {
            w.write_record([m.names[k].clone(), m.means[k].to_string(), m.sds[k].to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Exact posterior means and SDs on a tensor grid of `DEFAULT_GRID_POINTS`
/// per axis spanning the prior mean +-6 prior SDs, checked against a grid
/// with doubled resolution.
pub fn quadrature_posterior(instance: &TinyInstance) -> Result<QuadratureResult> {
    let coarse = quadrature_moments(instance, DEFAULT_GRID_POINTS)?;
    let fine = quadrature_moments(instance, 2 * DEFAULT_GRID_POINTS - 1)?;
    let refinement_delta = coarse
        .means
        .iter()
        .zip(&fine.means)
        .chain(coarse.sds.iter().zip(&fine.sds))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if refinement_delta >= REFINEMENT_TOLERANCE {
        return Err(Error::Degenerate(format!(
            "quadrature moments moved by {refinement_delta} under grid refinement"
        )));
    }
    Ok(QuadratureResult {
        moments: coarse,
        grid_points: DEFAULT_GRID_POINTS,
        refinement_delta,
    })
}

fn ln_link_cdf(link: Link, x: f64) -> f64 {
    match link {
        // -log(1 + e^-x)
        Link::Logit => -((-x).max(0.0) + (-x.abs()).exp().ln_1p()),
        Link::Probit => stats::ln_normal_cdf(x),
    }
}

fn ln_cell(link: Link, eta: f64, yes: bool) -> f64 {
    if yes {
        ln_link_cdf(link, eta)
    } else {
        ln_link_cdf(link, -eta)
    }
}

fn axis(mean: f64, var: f64, points: usize) -> Vec<f64> {
    let half = GRID_HALF_WIDTH_SDS * var.sqrt();
    let step = 2.0 * half / (points - 1) as f64;
    (0..points).map(|k| mean - half + step * k as f64).collect()
}

/// Weighted first and second moments accumulated in a fixed order.
#[derive(Clone, Default)]
struct Accum {
    w: CompensatedSum,
    s1: CompensatedSum,
    s2: CompensatedSum,
}

impl Accum {
    fn add(&mut self, weight: f64, x: f64) {
        self.w.add(weight);
        self.s1.add(weight * x);
        self.s2.add(weight * x * x);
    }

    fn mean_sd(&self) -> (f64, f64) {
        let w = self.w.value();
        let mean = self.s1.value() / w;
        let var = (self.s2.value() / w - mean * mean).max(0.0);
        (mean, var.sqrt())
    }
}

/// Grid moments at `points` per axis.
///
/// Given the free ideal points the item pairs are conditionally
/// independent, so the tensor-grid sum factorizes into a sum over the
/// ideal-point grid of products of per-item two-dimensional sums. The
/// result equals the full tensor-grid sum.
pub fn quadrature_moments(instance: &TinyInstance, points: usize) -> Result<Moments> {
    let free = instance.n_free();
    if free > MAX_QUADRATURE_FREE {
        return Err(Error::InstanceTooLarge {
            free,
            max: MAX_QUADRATURE_FREE,
        });
    }
    if points < 3 {
        return Err(Error::Config("quadrature needs at least 3 points per axis".into()));
    }
    let (n, m) = (instance.view.n(), instance.view.m());
    let pr = &instance.priors;
    let item_axis = axis(pr.item_mean, pr.item_var, points);
    let beta_axis = axis(pr.beta_mean, pr.beta_var, points);
    let ln_item_prior: Vec<f64> = item_axis
        .iter()
        .map(|&v| stats::ln_normal_density(v, pr.item_mean, pr.item_var))
        .collect();
    let free_rows: Vec<usize> = (0..n).filter(|&i| instance.pins[i].is_none()).collect();
    let k = free_rows.len();

    // per beta grid point: log weight, then per-item conditional moments
    struct Cell {
        ln_w: f64,
        betas: Vec<f64>,
        mu: Vec<(f64, f64)>,
        alpha: Vec<(f64, f64)>,
    }
    let total = points.pow(k as u32);
    let mut cells = Vec::with_capacity(total);
    let mut beta = instance.pins.iter().map(|p| p.unwrap_or(0.0)).collect::<Vec<f64>>();
    for flat in 0..total {
        let mut rest = flat;
        let mut ln_w = 0.0;
        for &row in &free_rows {
            let v = beta_axis[rest % points];
            rest /= points;
            beta[row] = v;
            ln_w += stats::ln_normal_density(v, pr.beta_mean, pr.beta_var);
        }
        let mut mu_m = Vec::with_capacity(m);
        let mut alpha_m = Vec::with_capacity(m);
        let mut logs = vec![0.0; points * points];
        for j in 0..m {
            let col = instance.view.col(j);
            for (a, &mu) in item_axis.iter().enumerate() {
                for (b, &alpha) in item_axis.iter().enumerate() {
                    let mut l = ln_item_prior[a] + ln_item_prior[b];
                    for &(i, y) in col {
                        l += ln_cell(instance.link, mu + alpha * beta[i], y);
                    }
                    logs[a * points + b] = l;
                }
            }
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (mut am, mut aa) = (Accum::default(), Accum::default());
            for (a, &mu) in item_axis.iter().enumerate() {
                for (b, &alpha) in item_axis.iter().enumerate() {
                    let w = (logs[a * points + b] - top).exp();
                    am.add(w, mu);
                    aa.add(w, alpha);
                }
            }
            ln_w += top + am.w.value().ln();
            let (mm, ms) = am.mean_sd();
            let (amn, asd) = aa.mean_sd();
            // conditional first and second raw moments
            mu_m.push((mm, ms * ms + mm * mm));
            alpha_m.push((amn, asd * asd + amn * amn));
        }
        cells.push(Cell {
            ln_w,
            betas: free_rows.iter().map(|&r| beta[r]).collect(),
            mu: mu_m,
            alpha: alpha_m,
        });
    }

    let top = cells.iter().map(|c| c.ln_w).fold(f64::NEG_INFINITY, f64::max);
    let mut wsum = CompensatedSum::new();
    let mut first = vec![CompensatedSum::new(); free];
    let mut second = vec![CompensatedSum::new(); free];
    for c in &cells {
        let w = (c.ln_w - top).exp();
        wsum.add(w);
        let raw = c.mu.iter().chain(&c.alpha).copied().chain(c.betas.iter().map(|&b| (b, b * b)));
        for (p, (r1, r2)) in raw.enumerate() {
            first[p].add(w * r1);
            second[p].add(w * r2);
        }
    }
    let w = wsum.value();
    let means: Vec<f64> = first.iter().map(|s| s.value() / w).collect();
    let sds = second
        .iter()
        .zip(&means)
        .map(|(s, mean)| (s.value() / w - mean * mean).max(0.0).sqrt())
        .collect();
    Ok(Moments {
        names: instance.param_names(),
        means,
        sds,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityRow {
    pub extra_rate: f64,
    /// Legislators compared (free in both fits).
    pub compared: usize,
    pub pearson_base: f64,
    pub spearman_base: f64,
    pub pearson_truth: f64,
    pub spearman_truth: f64,
}

/// Posterior-mean ideal points of free legislators, by id.
pub fn free_beta_means(draws: &PosteriorDraws) -> Vec<(String, f64)> {
    (0..draws.legislator_ids.len())
        .filter_map(|i| {
            draws
                .beta_param(i)
                .map(|p| (draws.legislator_ids[i].clone(), stats::mean(&draws.pooled(p))))
        })
        .collect()
}

/// Fits `synthetic` with anchors from its roster.
pub fn fit_synthetic(
    synthetic: &Synthetic,
    link: Link,
    priors: PriorSpec,
    config: &McmcConfig,
) -> Result<PosteriorDraws> {
    let (problem, _) = Problem::from_matrix(&synthetic.matrix, &synthetic.roster, None, priors, link)?;
    mcmc::run(config, &problem)
}

/// Removes each observed vote independently with probability `rate`.
pub fn mask_extra(matrix: &VoteMatrix, rate: f64, seed: u64) -> VoteMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = matrix.clone();
    for i in 0..matrix.n() {
        for j in 0..matrix.m() {
            let u: f64 = rng.random();
            if matrix.get(i, j).as_binary().is_some() && u < rate {
                out.set(i, j, VoteState::Absent);
            }
        }
    }
    out
}

/// Refits the base data after deleting extra votes at each rate and
/// correlates recovered ideal points with the base fit and the truth.
pub fn missing_sensitivity(
    spec: &SyntheticSpec,
    extra_rates: &[f64],
    priors: PriorSpec,
    config: &McmcConfig,
) -> Result<Vec<SensitivityRow>> {
    if let Some(r) = extra_rates.iter().find(|r| !(0.0..1.0).contains(*r)) {
        return Err(Error::Config(format!("extra missing rate {r} outside [0, 1)")));
    }
    let base_data = generate(spec)?;
    let base: HashMap<String, f64> = free_beta_means(&fit_synthetic(&base_data, spec.link, priors, config)?)
        .into_iter()
        .collect();
    let mut rows = Vec::with_capacity(extra_rates.len());
    for (k, &rate) in extra_rates.iter().enumerate() {
        let masked = Synthetic {
            matrix: mask_extra(&base_data.matrix, rate, spec.seed.wrapping_add(1000 + k as u64)),
            ..base_data.clone()
        };
        let fit = free_beta_means(&fit_synthetic(&masked, spec.link, priors, config)?);
        let common: Vec<&(String, f64)> = fit.iter().filter(|(id, _)| base.contains_key(id)).collect();
        let ours: Vec<f64> = common.iter().map(|(_, v)| *v).collect();
        let theirs: Vec<f64> = common.iter().map(|(id, _)| base[id]).collect();
        let truth: Vec<f64> = common
            .iter()
            .map(|(id, _)| base_data.true_beta(id).expect("id from the generated roster"))
            .collect();
        rows.push(SensitivityRow {
            extra_rate: rate,
            compared: common.len(),
            pearson_base: stats::pearson(&ours, &theirs),
            spearman_base: stats::spearman(&ours, &theirs),
            pearson_truth: stats::pearson(&ours, &truth),
            spearman_truth: stats::spearman(&ours, &truth),
        });
    }
    Ok(rows)
}

pub fn write_sensitivity_csv<W: Write>(rows: &[SensitivityRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "extra_missing_rate",
        "legislators",
        "pearson_vs_base",
        "spearman_vs_base",
        "pearson_vs_truth",
        "spearman_vs_truth",
    ])?;
    for r in rows {
        w.write_record([
            r.extra_rate.to_string(),
            r.compared.to_string(),
            r.pearson_base.to_string(),
            r.spearman_base.to_string(),
            r.pearson_truth.to_string(),
            r.spearman_truth.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

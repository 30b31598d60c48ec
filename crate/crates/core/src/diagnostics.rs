//! Convergence diagnostics: split-chain R-hat, effective sample size,
//! Monte Carlo standard error and coefficient of variation.

use std::io::Write;

use crate::error::{Error, Result};
use crate::mcmc::PosteriorDraws;
use crate::stats;

const MIN_HALF_LENGTH: usize = 10;
/// |mean| below this leaves the coefficient of variation undefined.
pub const CV_MEAN_EPSILON: f64 = 1e-12;

/// Splits every chain in half after trimming all chains to the shortest
/// length. With an odd length the middle draw is dropped.
pub fn split_chains(chains: &[Vec<f64>]) -> Result<Vec<&[f64]>> {
    let len = chains.iter().map(Vec::len).min().unwrap_or(0);
    let half = len / 2;
    if chains.is_empty() || half < MIN_HALF_LENGTH {
        return Err(Error::Domain(format!(
            "split diagnostics need half-chains of at least {MIN_HALF_LENGTH} draws"
        )));
    }
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        out.push(&c[..half]);
        out.push(&c[len - half..len]);
    }
    Ok(out)
}

fn within_between(halves: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let means = halves.iter().map(|h| stats::mean(h)).collect();
    let vars = halves.iter().map(|h| stats::variance(h)).collect();
    (means, vars)
}

fn degenerate(w: f64, halves: &[&[f64]]) -> bool {
    let first = halves[0][0];
    !(w > 0.0) || halves.iter().all(|h| h.iter().all(|&v| v == first))
}

/// Split-chain potential scale reduction factor.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    let halves = split_chains(chains)?;
    let s = halves[0].len() as f64;
    let (means, vars) = within_between(&halves);
    let w = stats::mean(&vars);
    if degenerate(w, &halves) {
        return Err(Error::Degenerate("zero within-chain variance".into()));
    }
    let b_over_s = stats::variance(&means);
    Ok(((s - 1.0) / s + b_over_s / w).sqrt())
}

/// Biased autocovariance at `lag`, matching the FFT-free textbook estimator.
fn autocovariance(x: &[f64], mean: f64, lag: usize) -> f64 {
    let n = x.len();
    let mut acc = stats::CompensatedSum::new();
    for t in 0..n - lag {
        acc.add((x[t] - mean) * (x[t + lag] - mean));
    }
    acc.value() / n as f64
}

/// Effective sample size over split chains: Geyer's initial positive
/// sequence (truncated at the first negative pair sum, then made
/// monotone), combined across chains through the same between/within
/// variance decomposition as R-hat. Capped at the total draw count.
pub fn ess(chains: &[Vec<f64>]) -> Result<f64> {
    let halves = split_chains(chains)?;
    let m = halves.len();
    let n = halves[0].len();
    let (means, vars) = within_between(&halves);
    let w = stats::mean(&vars);
    if degenerate(w, &halves) {
        return Err(Error::Degenerate("constant draws".into()));
    }
    let mut var_plus = w * (n as f64 - 1.0) / n as f64;
    if m > 1 {
        var_plus += stats::variance(&means);
    }
    let rho = |lag: usize| -> f64 {
        let mean_acov = (0..m)
            .map(|c| autocovariance(halves[c], means[c], lag))
            .sum::<f64>()
            / m as f64;
        1.0 - (w - mean_acov) / var_plus
    };

    let mut rho_hat = vec![0.0; n];
    let mut even = 1.0;
    rho_hat[0] = even;
    let mut odd = rho(1);
    rho_hat[1] = odd;
    let mut t = 1;
    while t + 4 < n && even + odd > 0.0 {
        even = rho(t + 1);
        odd = rho(t + 2);
        if even + odd >= 0.0 {
            rho_hat[t + 1] = even;
            rho_hat[t + 2] = odd;
        }
        t += 2;
    }
    let max_t = t;
    if even > 0.0 && max_t + 1 < n {
        rho_hat[max_t + 1] = even;
    }
    // initial monotone sequence
    let mut t = 1;
    while max_t >= 3 && t <= max_t - 3 {
        let next = rho_hat[t + 1] + rho_hat[t + 2];
        let prev = rho_hat[t - 1] + rho_hat[t];
        if next > prev {
            rho_hat[t + 1] = prev / 2.0;
            rho_hat[t + 2] = prev / 2.0;
        }
        t += 2;
    }
    let tail = if max_t + 1 < n { rho_hat[max_t + 1] } else { 0.0 };
    let tau = -1.0 + 2.0 * rho_hat[..max_t].iter().sum::<f64>() + tail;
    let total = (m * n) as f64;
    let total_draws = chains.iter().map(Vec::len).min().unwrap_or(0) * chains.len();
    Ok((total / tau).min(total_draws as f64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDiagnostics {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// `None` with fewer than two chains or for degenerate draws.
    pub rhat: Option<f64>,
    pub ess: Option<f64>,
    pub mcse: Option<f64>,
    pub mcse_over_sd: Option<f64>,
    /// ESS relative to the total number of retained draws.
    pub ess_over_s: Option<f64>,
    /// `100 sd / |mean|`; `None` when the mean is numerically zero.
    pub cv_pct: Option<f64>,
    pub degenerate: bool,
}

pub fn diagnose(name: &str, chains: &[Vec<f64>], with_rhat: bool) -> ParamDiagnostics {
    let pooled: Vec<f64> = chains.concat();
    let mean = stats::mean(&pooled);
    let sd = stats::sd(&pooled);
    let ess = ess(chains);
    let degenerate = matches!(ess, Err(Error::Degenerate(_)));
    let ess = ess.ok();
    let rhat = if with_rhat { split_rhat(chains).ok() } else { None };
    ParamDiagnostics {
        name: name.to_string(),
        mean,
        sd,
        rhat,
        ess,
        mcse: ess.map(|e| sd / e.sqrt()),
        mcse_over_sd: ess.map(|e| 1.0 / e.sqrt()),
        ess_over_s: ess.map(|e| e / pooled.len() as f64),
        cv_pct: cv_pct(mean, sd),
        degenerate,
    }
}

pub fn cv_pct(mean: f64, sd: f64) -> Option<f64> {
    (mean.abs() >= CV_MEAN_EPSILON).then(|| 100.0 * sd / mean.abs())
}

#[derive(Clone, Debug)]
pub struct DiagnosticsReport {
    pub params: Vec<ParamDiagnostics>,
    pub lp: ParamDiagnostics,
    pub lp_trace: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

pub const RHAT_NEEDS_CHAINS: &str = "R-hat requires >= 2 chains";

/// Diagnostics for every sampled parameter (anchors are not sampled and so
/// never appear) plus the log posterior.
pub fn summarize_diagnostics(draws: &PosteriorDraws) -> DiagnosticsReport {
    let with_rhat = draws.n_chains() >= 2;
    let mut warnings = Vec::new();
    if !with_rhat {
        warnings.push(RHAT_NEEDS_CHAINS.to_string());
    }
    let params: Vec<ParamDiagnostics> = (0..draws.n_params())
        .map(|p| diagnose(&draws.params[p].name, &draws.param_chains(p), with_rhat))
        .collect();
    let degenerate = params.iter().filter(|p| p.degenerate).count();
    if degenerate > 0 {
        warnings.push(format!("{degenerate} parameters have constant draws"));
    }
    let lp_trace = draws.lp_chains();
    DiagnosticsReport {
        lp: diagnose("lp", &lp_trace, with_rhat),
        params,
        lp_trace,
        warnings,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl DiagnosticsReport {
    pub fn max_rhat(&self) -> Option<f64> {
        self.params.iter().filter_map(|p| p.rhat).reduce(f64::max)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["parameter", "mean", "sd", "rhat", "ess", "mcse", "mcse_over_sd", "ess_over_s", "cv_pct"])?;
        for p in self.params.iter().chain(std::iter::once(&self.lp)) {
            w.write_record([
                p.name.clone(),
                p.mean.to_string(),
                p.sd.to_string(),
                opt(p.rhat),
                opt(p.ess),
                opt(p.mcse),
                opt(p.mcse_over_sd),
                opt(p.ess_over_s),
                opt(p.cv_pct),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn iid(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Vec<f64> {
        (0..n).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect()
    }

    fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> Vec<f64> {
        let mut x = rng.sample::<f64, _>(StandardNormal) / (1.0 - phi * phi).sqrt();
        (0..n)
            .map(|_| {
                x = phi * x + rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect()
    }

    #[test]
    fn rhat_for_iid_chains_is_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let chains = vec![iid(&mut rng, 5000, 0.0), iid(&mut rng, 5000, 0.0)];
        let r = split_rhat(&chains).unwrap();
        assert!((0.99..=1.02).contains(&r), "rhat {r}");
    }

    #[test]
    fn rhat_flags_offset_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let chains = vec![iid(&mut rng, 5000, 0.0), iid(&mut rng, 5000, 5.0)];
        assert!(split_rhat(&chains).unwrap() > 1.5);
    }

    #[test]
    fn rhat_is_chain_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = iid(&mut rng, 400, 0.0);
        let b = iid(&mut rng, 400, 0.3);
        let c = ar1(&mut rng, 400, 0.5);
        let r1 = split_rhat(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let r2 = split_rhat(&[c.clone(), a.clone(), b.clone()]).unwrap();
        assert!((r1 - r2).abs() < 1e-12);
        let e1 = ess(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let e2 = ess(&[c, a, b]).unwrap();
        assert!((e1 - e2).abs() < 1e-9 * e1);
    }

    #[test]
    fn constant_chains_are_degenerate() {
        let chains = vec![vec![1.0; 100], vec![1.0; 100]];
        assert!(matches!(split_rhat(&chains), Err(Error::Degenerate(_))));
        assert!(matches!(ess(&chains), Err(Error::Degenerate(_))));
        let d = diagnose("anchor", &chains, true);
        assert!(d.degenerate && d.rhat.is_none() && d.ess.is_none());
    }

    #[test]
    fn short_chains_are_rejected() {
        assert!(split_rhat(&[vec![0.0, 1.0, 2.0]]).is_err());
    }

    #[test]
    fn ess_of_iid_chain_is_close_to_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let chain = iid(&mut rng, 10_000, 0.0);
        let e = ess(&[chain]).unwrap() / 10_000.0;
        assert!((0.9..=1.1).contains(&e), "ess/S {e}");
    }

    #[test]
    fn ess_of_ar1_chain_matches_theory() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let s = 200_000;
        let chain = ar1(&mut rng, s, 0.9);
        let ratio = ess(&[chain]).unwrap() / s as f64;
        let expected = (1.0 - 0.9) / (1.0 + 0.9);
        assert!((ratio / expected - 1.0).abs() < 0.5, "ess/S {ratio} vs {expected}");
    }

    #[test]
    fn mcse_identities_and_cv() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let chains = vec![iid(&mut rng, 500, 2.0), iid(&mut rng, 500, 2.0)];
        let d = diagnose("x", &chains, true);
        let ess = d.ess.unwrap();
        assert_eq!(d.mcse.unwrap(), d.sd / ess.sqrt());
        assert_eq!(d.mcse_over_sd.unwrap(), 1.0 / ess.sqrt());
        assert_eq!(cv_pct(2.0, 0.02), Some(1.0));
        assert_eq!(cv_pct(1e-13, 1.0), None);
        assert_eq!(cv_pct(0.0, 1.0), None);
    }
}

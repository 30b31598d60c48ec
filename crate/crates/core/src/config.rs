//! Flat `key = value` run configuration. The echo written into every
//! manifest parses back to the same configuration.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::logistic::BayesConfig;
use crate::mcmc::McmcConfig;
use crate::model::{Link, PriorSpec};
use crate::posterior::Region;
use crate::synthetic::{Dist, SyntheticSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub votes: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    /// Optional `token,state` CSV replacing the default vote tokens.
    pub tokens: Option<PathBuf>,
    pub out: PathBuf,
    pub link: Link,
    pub priors: PriorSpec,
    /// Two `(legislator id, pin)` pairs; `None` uses the meta file's anchor column.
    pub anchors: Option<[(String, f64); 2]>,
    pub mcmc: McmcConfig,
    pub ci_level: f64,
    pub regions: Vec<Region>,
    pub attribute_column: String,
    pub logit_prior_sd: f64,
    pub bayes: BayesConfig,
    pub simulate: SyntheticSpec,
    /// Extra missing-vote rates for the sensitivity harness.
    pub sensitivity_rates: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mcmc = McmcConfig::default();
        Self {
            votes: None,
            meta: None,
            tokens: None,
            out: PathBuf::from("out"),
            link: Link::Logit,
            priors: PriorSpec::default(),
            anchors: None,
            ci_level: 0.95,
            regions: vec![Region::below(-1.0), Region::above(1.0), Region::new(-0.2, 0.2).expect("valid region")],
            attribute_column: "attribute_flag".into(),
            logit_prior_sd: 10.0,
            bayes: BayesConfig {
                seed: mcmc.seed,
                ..BayesConfig::default()
            },
            simulate: SyntheticSpec {
                seed: mcmc.seed,
                ..SyntheticSpec::default()
            },
            sensitivity_rates: Vec::new(),
            mcmc,
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("`{key}`: `{value}` is not {what}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value, what))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s, "a number"))
        .collect()
}

pub fn parse_anchors(value: &str) -> Result<Option<[(String, f64); 2]>> {
    if value.trim().is_empty() {
        return Ok(None);
    }
    let pairs = value
        .split(',')
        .map(|part| {
            let (id, pin) = part
                .trim()
                .rsplit_once(':')
                .ok_or_else(|| bad("anchors", value, "`id:pin,id:pin`"))?;
            Ok((id.trim().to_string(), parse_num("anchors", pin.trim(), "a number")?))
        })
        .collect::<Result<Vec<(String, f64)>>>()?;
    match <[(String, f64); 2]>::try_from(pairs) {
        Ok(pair) => Ok(Some(pair)),
        Err(_) => Err(bad("anchors", value, "exactly two `id:pin` entries")),
    }
}

fn format_list(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn path_or_empty(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    /// Applies every `key = value` line; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, found `{line}`", k + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let count = |v: &str| parse_num::<usize>(key, v, "a non-negative integer");
        let real = |v: &str| parse_num::<f64>(key, v, "a number");
        match key {
            "votes" => self.votes = optional_path(value),
            "meta" => self.meta = optional_path(value),
            "tokens" => self.tokens = optional_path(value),
            "out" => self.out = PathBuf::from(value),
            "link" => self.link = value.parse()?,
            "item_prior_mean" => self.priors.item_mean = real(value)?,
            "item_prior_var" => self.priors.item_var = real(value)?,
            "beta_prior_mean" => self.priors.beta_mean = real(value)?,
            "beta_prior_var" => self.priors.beta_var = real(value)?,
            "anchors" => self.anchors = parse_anchors(value)?,
            "iterations" => self.mcmc.iterations = count(value)?,
            "warmup" => self.mcmc.warmup = count(value)?,
            "thin" => self.mcmc.thin = count(value)?,
            "chains" => self.mcmc.chains = count(value)?,
            "init" => self.mcmc.init = value.parse()?,
            "adapt_window" => self.mcmc.adapt_window = count(value)?,
            "seed" => self.set_seed(parse_num(key, value, "a non-negative integer")?),
            "ci_level" => self.ci_level = real(value)?,
            "regions" => {
                self.regions = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(Region::parse)
                    .collect::<Result<_>>()?
            }
            "attribute_column" => self.attribute_column = value.to_string(),
            "logit_prior_sd" => self.logit_prior_sd = real(value)?,
            "bayes_chains" => self.bayes.chains = count(value)?,
            "bayes_warmup" => self.bayes.warmup = count(value)?,
            "bayes_draws" => self.bayes.draws = count(value)?,
            "sim_n" => self.simulate.n = count(value)?,
            "sim_m" => self.simulate.m = count(value)?,
            "sim_beta" => self.simulate.beta = Dist::parse(value)?,
            "sim_mu" => self.simulate.mu = Dist::parse(value)?,
            "sim_alpha" => self.simulate.alpha = Dist::parse(value)?,
            "sim_missing_rate" => self.simulate.missing_rate = real(value)?,
            "sensitivity_rates" => self.sensitivity_rates = parse_list(key, value)?,
            other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// One seed drives the sampler, the Bayesian logistic fit and the simulator.
    pub fn set_seed(&mut self, seed: u64) {
        self.mcmc.seed = seed;
        self.bayes.seed = seed;
        self.simulate.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.priors.validate()?;
        self.mcmc.validate()?;
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config(format!("ci_level {} must lie in (0, 1)", self.ci_level)));
        }
        if !(self.logit_prior_sd > 0.0) {
            return Err(Error::Config("logit_prior_sd must be positive".into()));
        }
        Ok(())
    }

    /// Every key in a fixed order; [`RunConfig::apply_text`] reads it back.
    pub fn echo(&self) -> String {
        let anchors = self
            .anchors
            .as_ref()
            .map(|[(a, pa), (b, pb)]| format!("{a}:{pa},{b}:{pb}"))
            .unwrap_or_default();
        let regions = self.regions.iter().map(Region::label).collect::<Vec<_>>().join(",");
        let s = &self.simulate;
        let entries: Vec<(&str, String)> = vec![
            ("votes", path_or_empty(&self.votes)),
            ("meta", path_or_empty(&self.meta)),
            ("tokens", path_or_empty(&self.tokens)),
            ("out", self.out.display().to_string()),
            ("link", self.link.name().to_string()),
            ("item_prior_mean", self.priors.item_mean.to_string()),
            ("item_prior_var", self.priors.item_var.to_string()),
            ("beta_prior_mean", self.priors.beta_mean.to_string()),
            ("beta_prior_var", self.priors.beta_var.to_string()),
            ("anchors", anchors),
            ("iterations", self.mcmc.iterations.to_string()),
            ("warmup", self.mcmc.warmup.to_string()),
            ("thin", self.mcmc.thin.to_string()),
            ("chains", self.mcmc.chains.to_string()),
            ("init", self.mcmc.init.name().to_string()),
            ("adapt_window", self.mcmc.adapt_window.to_string()),
            ("seed", self.mcmc.seed.to_string()),
            ("ci_level", self.ci_level.to_string()),
            ("regions", regions),
            ("attribute_column", self.attribute_column.clone()),
            ("logit_prior_sd", self.logit_prior_sd.to_string()),
            ("bayes_chains", self.bayes.chains.to_string()),
            ("bayes_warmup", self.bayes.warmup.to_string()),
            ("bayes_draws", self.bayes.draws.to_string()),
            ("sim_n", s.n.to_string()),
            ("sim_m", s.m.to_string()),
            ("sim_beta", s.beta.to_string()),
            ("sim_mu", s.mu.to_string()),
            ("sim_alpha", s.alpha.to_string()),
            ("sim_missing_rate", s.missing_rate.to_string()),
            ("sensitivity_rates", format_list(&self.sensitivity_rates)),
        ];
        entries.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_documented_values() {
        let c = RunConfig::default();
        assert_eq!((c.priors.item_mean, c.priors.item_var), (0.0, 25.0));
        assert_eq!((c.priors.beta_mean, c.priors.beta_var), (0.0, 1.0));
        assert_eq!(
            (c.mcmc.iterations, c.mcmc.warmup, c.mcmc.thin, c.mcmc.chains),
            (80_000, 16_000, 5, 4)
        );
        assert_eq!(c.ci_level, 0.95);
        assert_eq!(c.regions.len(), 3);
        assert_eq!(c.logit_prior_sd, 10.0);
        c.validate().unwrap();
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.apply_text(
            "# comment\nlink = probit\nanchors = S01:-1, S02:1\nseed = 7\nsensitivity_rates = 0,0.1\n\
             regions = -inf:0, 0:inf\nvotes = data/votes.csv\n",
        )
        .unwrap();
        assert_eq!(c.link, Link::Probit);
        assert_eq!(c.bayes.seed, 7);
        assert_eq!(c.anchors.as_ref().unwrap()[1], ("S02".to_string(), 1.0));
        let mut back = RunConfig::default();
        back.apply_text(&c.echo()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.echo(), c.echo());
    }

    #[test]
    fn bad_input_is_reported() {
        let mut c = RunConfig::default();
        assert!(matches!(c.set("colour", "red"), Err(Error::Config(_))));
        assert!(c.set("thin", "-1").is_err());
        assert!(c.set("anchors", "a:1").is_err());
        assert!(c.apply_text("no equals sign").is_err());
        c.set("warmup", "90000").unwrap();
        assert!(c.validate().is_err());
    }
}

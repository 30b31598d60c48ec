use std::io::{Read, Write};

use super::{McmcConfig, Problem};
use crate::error::{Error, Result};
use crate::model::{Link, PriorSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    /// Approval parameter of vote list `j`.
    Mu(usize),
    /// Discrimination parameter of vote list `j`.
    Alpha(usize),
    /// Ideal point of legislator row `i`.
    Beta(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamInfo {
    pub name: String,
    pub kind: ParamKind,
}

/// Post-warmup Metropolis acceptance rates of one chain.
#[derive(Clone, Debug, PartialEq)]
pub struct AcceptanceRates {
    pub items: Vec<f64>,
    /// Free ideal points only, by row.
    pub betas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainDraws {
    pub seed: u64,
    /// Row-major `retained x params`.
    pub values: Vec<f64>,
    pub lp: Vec<f64>,
    pub acceptance: Option<AcceptanceRates>,
    pub seconds: f64,
}

/// Retained draws of every free parameter for every chain.
#[derive(Clone, Debug)]
pub struct PosteriorDraws {
    pub params: Vec<ParamInfo>,
    pub legislator_ids: Vec<String>,
    pub list_ids: Vec<String>,
    /// `(row, pin)` of each anchored legislator.
    pub anchors: Vec<(usize, f64)>,
    pub chains: Vec<ChainDraws>,
    pub config: McmcConfig,
    pub link: Link,
    pub priors: PriorSpec,
}

impl PosteriorDraws {
    pub(super) fn layout(problem: &Problem) -> Vec<ParamInfo> {
        let mut params = Vec::with_capacity(problem.n_free());
        for (j, id) in problem.list_ids.iter().enumerate() {
            params.push(ParamInfo {
                name: format!("mu_{id}"),
                kind: ParamKind::Mu(j),
            });
        }
        for (j, id) in problem.list_ids.iter().enumerate() {
            params.push(ParamInfo {
                name: format!("alpha_{id}"),
                kind: ParamKind::Alpha(j),
            });
        }
        let pins = problem.pins();
        for (i, id) in problem.legislator_ids.iter().enumerate() {
            if pins[i].is_none() {
                params.push(ParamInfo {
                    name: format!("beta_{id}"),
                    kind: ParamKind::Beta(i),
                });
            }
        }
        params
    }

    pub(super) fn new(
        params: Vec<ParamInfo>,
        problem: &Problem,
        config: McmcConfig,
        chains: Vec<ChainDraws>,
    ) -> Self {
        Self {
            params,
            legislator_ids: problem.legislator_ids.clone(),
            list_ids: problem.list_ids.clone(),
            anchors: problem.anchors.rows.iter().copied().zip(problem.anchors.pins).collect(),
            chains,
            config,
            link: problem.link,
            priors: problem.priors,
        }
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    /// Retained draws per chain.
    pub fn n_draws(&self) -> usize {
        self.chains.first().map_or(0, |c| c.lp.len())
    }

    pub fn column(&self, chain: usize, param: usize) -> Vec<f64> {
        let p = self.n_params();
        self.chains[chain].values.iter().skip(param).step_by(p).copied().collect()
    }

    /// Draws of one parameter, one vector per chain.
    pub fn param_chains(&self, param: usize) -> Vec<Vec<f64>> {
        (0..self.n_chains()).map(|c| self.column(c, param)).collect()
    }

    /// Draws of one parameter pooled across chains, in chain order.
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        self.param_chains(param).concat()
    }

    pub fn lp_chains(&self) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.lp.clone()).collect()
    }

    /// Column index of legislator row `i`, or `None` for anchors.
    pub fn beta_param(&self, i: usize) -> Option<usize> {
        self.params.iter().position(|p| p.kind == ParamKind::Beta(i))
    }

    pub fn anchor_pin(&self, i: usize) -> Option<f64> {
        self.anchors.iter().find(|(r, _)| *r == i).map(|(_, p)| *p)
    }

    /// Pooled draws of legislator `i`'s ideal point; a constant vector for anchors.
    pub fn beta_draws(&self, i: usize) -> Vec<f64> {
        match self.beta_param(i) {
            Some(p) => self.pooled(p),
            None => {
                let pin = self.anchor_pin(i).expect("legislator is neither free nor anchored");
                vec![pin; self.n_draws() * self.n_chains()]
            }
        }
    }

    /// One chain as CSV: parameter columns then `lp`.
    pub fn write_chain_csv<W: Write>(&self, chain: usize, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.params.iter().map(|p| p.name.as_str()).collect();
        header.push("lp");
        w.write_record(&header)?;
        let p = self.n_params();
        let c = &self.chains[chain];
        for (s, lp) in c.lp.iter().enumerate() {
            let row = &c.values[s * p..(s + 1) * p];
            let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            record.push(lp.to_string());
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reassembles draws from chain CSVs written by [`write_chain_csv`].
    ///
    /// `legislator_ids` and `anchors` describe the retained roster the run
    /// was fitted on.
    ///
    /// [`write_chain_csv`]: PosteriorDraws::write_chain_csv
    pub fn read_chain_csvs<R: Read>(
        readers: Vec<R>,
        legislator_ids: Vec<String>,
        list_ids: Vec<String>,
        anchors: Vec<(usize, f64)>,
        config: McmcConfig,
        link: Link,
        priors: PriorSpec,
    ) -> Result<Self> {
        let mut params: Option<Vec<ParamInfo>> = None;
        let mut chains = Vec::new();
        for (c, reader) in readers.into_iter().enumerate() {
            let mut rdr = csv::Reader::from_reader(reader);
            let header = rdr.headers()?.clone();
            let names: Vec<&str> = header.iter().collect();
            if names.last() != Some(&"lp") {
                return Err(Error::Domain(format!("chain {} CSV lacks a trailing `lp` column", c + 1)));
            }
            let parsed = parse_param_names(&names[..names.len() - 1], &legislator_ids, &list_ids)?;
            match &params {
                Some(existing) if *existing != parsed => {
                    return Err(Error::Domain(format!("chain {} has a different column layout", c + 1)))
                }
                _ => params = Some(parsed),
            }
            let width = names.len() - 1;
            let mut values = Vec::new();
            let mut lp = Vec::new();
            for (row, record) in rdr.records().enumerate() {
                let record = record?;
                for (col, field) in record.iter().enumerate() {
                    let v: f64 = field.parse().map_err(|_| Error::Parse {
                        file: format!("chain {}", c + 1),
                        line: row + 2,
                        column: col + 1,
                        message: format!("not a number: `{field}`"),
                    })?;
                    if col < width {
                        values.push(v);
                    } else {
                        lp.push(v);
                    }
                }
            }
            chains.push(ChainDraws {
                seed: config.chain_seed(c),
                values,
                lp,
                acceptance: None,
                seconds: 0.0,
            });
        }
        let params = params.ok_or_else(|| Error::Domain("no chain files".into()))?;
        let n = chains[0].lp.len();
        if chains.iter().any(|c| c.lp.len() != n) {
            return Err(Error::Domain("chains have different lengths".into()));
        }
        Ok(Self {
            params,
            legislator_ids,
            list_ids,
            anchors,
            chains,
            config,
            link,
            priors,
        })
    }
}

fn parse_param_names(names: &[&str], legislator_ids: &[String], list_ids: &[String]) -> Result<Vec<ParamInfo>> {
    names
        .iter()
        .map(|name| {
            let lookup = |ids: &[String], key: &str| ids.iter().position(|id| id == key);
            let kind = if let Some(id) = name.strip_prefix("mu_") {
                lookup(list_ids, id).map(ParamKind::Mu)
            } else if let Some(id) = name.strip_prefix("alpha_") {
                lookup(list_ids, id).map(ParamKind::Alpha)
            } else if let Some(id) = name.strip_prefix("beta_") {
                lookup(legislator_ids, id).map(ParamKind::Beta)
            } else {
                None
            };
            kind.map(|kind| ParamInfo {
                name: name.to_string(),
                kind,
            })
            .ok_or_else(|| Error::Domain(format!("unrecognized draw column `{name}`")))
        })
        .collect()
}

//! Posterior sampling for the anchored spatial voting model.
//!
//! Probit fits use exact Gibbs sweeps over truncated-normal latent
//! utilities; logit fits use adaptive random-walk Metropolis-within-Gibbs
//! with one block per vote-list pair `(mu_j, alpha_j)` and one per free
//! ideal point. Proposals adapt only during warmup.

mod draws;
mod kernel;
pub mod truncnorm;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{IdealPoints, Link, PriorSpec};
use crate::rollcall::{self, BinaryView, Bloc, Filtered, LegislatorMeta, VoteMatrix};

pub use draws::{AcceptanceRates, ChainDraws, ParamInfo, ParamKind, PosteriorDraws};
pub use kernel::{init_state, step_logit_mh, step_probit_gibbs, LatentState, MIN_PROPOSAL_SCALE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitRule {
    /// +1 for coalition members, -1 for everyone else; items at 0.
    BlocSigns,
    /// Every free parameter drawn from its prior.
    PriorDraw,
    Zeros,
}

impl InitRule {
    pub fn name(self) -> &'static str {
        match self {
            InitRule::BlocSigns => "bloc_signs",
            InitRule::PriorDraw => "prior_draw",
            InitRule::Zeros => "zeros",
        }
    }
}

impl fmt::Display for InitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "bloc_signs" | "blocsigns" => Ok(InitRule::BlocSigns),
            "prior_draw" | "priordraw" | "prior" => Ok(InitRule::PriorDraw),
            "zeros" => Ok(InitRule::Zeros),
            other => Err(Error::Config(format!("unknown init rule `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McmcConfig {
    pub iterations: usize,
    pub warmup: usize,
    pub thin: usize,
    pub chains: usize,
    pub seed: u64,
    pub init: InitRule,
    /// Iterations per proposal-scale adaptation window.
    pub adapt_window: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            iterations: 80_000,
            warmup: 16_000,
            thin: 5,
            chains: 4,
            seed: 20_100_720,
            init: InitRule::BlocSigns,
            adapt_window: 50,
        }
    }
}

impl McmcConfig {
    pub const MIN_RETAINED: usize = 100;

    pub fn retained_per_chain(&self) -> usize {
        (self.iterations.saturating_sub(self.warmup)) / self.thin.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.thin == 0 || self.chains == 0 || self.adapt_window == 0 {
            return Err(Error::Config(
                "iterations, thin, chains and adapt_window must be positive".into(),
            ));
        }
        if self.warmup >= self.iterations {
            return Err(Error::Config(format!(
                "warmup ({}) must be smaller than iterations ({})",
                self.warmup, self.iterations
            )));
        }
        if self.retained_per_chain() < Self::MIN_RETAINED {
            return Err(Error::Config(format!(
                "only {} retained draws per chain; at least {} required",
                self.retained_per_chain(),
                Self::MIN_RETAINED
            )));
        }
        Ok(())
    }

    /// RNG seed of chain `chain` (0-based).
    pub fn chain_seed(&self, chain: usize) -> u64 {
        self.seed.wrapping_add(chain as u64)
    }
}

/// Two pinned ideal points, by row index into the retained roster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Anchors {
    pub rows: [usize; 2],
    pub pins: [f64; 2],
}

impl Anchors {
    pub fn new(rows: [usize; 2], pins: [f64; 2]) -> Result<Self> {
        if rows[0] == rows[1] {
            return Err(Error::Config("the two anchors must be different legislators".into()));
        }
        if pins[0] == pins[1] || !pins.iter().all(|p| p.is_finite()) {
            return Err(Error::Config("anchor values must be finite and differ".into()));
        }
        Ok(Self { rows, pins })
    }

    /// Anchors by legislator id.
    pub fn from_ids(roster: &[LegislatorMeta], ids: [(&str, f64); 2]) -> Result<Self> {
        let find = |id: &str| {
            roster
                .iter()
                .position(|l| l.id == id)
                .ok_or_else(|| Error::Config(format!("anchor id `{id}` is not in the retained roster")))
        };
        Self::new([find(ids[0].0)?, find(ids[1].0)?], [ids[0].1, ids[1].1])
    }

    /// Anchors taken from the roster's anchor column; exactly two required.
    pub fn from_roster(roster: &[LegislatorMeta]) -> Result<Self> {
        let found: Vec<(usize, f64)> = roster
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.anchor.map(|a| (i, a)))
            .collect();
        match found.as_slice() {
            [(r0, p0), (r1, p1)] => Self::new([*r0, *r1], [*p0, *p1]),
            _ => Err(Error::Config(format!(
                "exactly 2 anchored legislators are required in the retained roster, found {}",
                found.len()
            ))),
        }
    }

    pub fn pins_for(&self, n: usize) -> Vec<Option<f64>> {
        let mut pins = vec![None; n];
        for (r, p) in self.rows.iter().zip(self.pins) {
            pins[*r] = Some(p);
        }
        pins
    }
}

/// Everything a sampler needs about one dataset.
#[derive(Clone, Debug)]
pub struct Problem {
    pub view: BinaryView,
    pub legislator_ids: Vec<String>,
    pub list_ids: Vec<String>,
    pub blocs: Vec<Bloc>,
    pub anchors: Anchors,
    pub priors: PriorSpec,
    pub link: Link,
}

impl Problem {
    pub fn new(
        view: BinaryView,
        list_ids: Vec<String>,
        roster: &[LegislatorMeta],
        anchors: Anchors,
        priors: PriorSpec,
        link: Link,
    ) -> Result<Self> {
        priors.validate()?;
        if roster.len() != view.n() || list_ids.len() != view.m() {
            return Err(Error::Domain(format!(
                "roster/list sizes ({}, {}) do not match the {}x{} view",
                roster.len(),
                list_ids.len(),
                view.n(),
                view.m()
            )));
        }
        if view.n() < 3 {
            return Err(Error::ModelInfeasible { retained: view.n() });
        }
        if anchors.rows.iter().any(|&r| r >= view.n()) {
            return Err(Error::Config("anchor row out of range".into()));
        }
        Ok(Self {
            view,
            legislator_ids: roster.iter().map(|l| l.id.clone()).collect(),
            list_ids,
            blocs: roster.iter().map(|l| l.bloc).collect(),
            anchors,
            priors,
            link,
        })
    }

    /// Filters `matrix` for the model and builds the problem on the retained
    /// roster. Without explicit `anchors` the roster's anchor column is used.
    pub fn from_matrix(
        matrix: &VoteMatrix,
        roster: &[LegislatorMeta],
        anchors: Option<&[(String, f64); 2]>,
        priors: PriorSpec,
        link: Link,
    ) -> Result<(Self, Filtered)> {
        let filtered = rollcall::filter_for_model(matrix, roster)?;
        let anchors = match anchors {
            Some([(a, pa), (b, pb)]) => Anchors::from_ids(&filtered.roster, [(a.as_str(), *pa), (b.as_str(), *pb)])?,
            None => Anchors::from_roster(&filtered.roster)?,
        };
        let view = rollcall::encode_for_model(&filtered.matrix);
        let problem = Self::new(
            view,
            filtered.matrix.list_ids().to_vec(),
            &filtered.roster,
            anchors,
            priors,
            link,
        )?;
        Ok((problem, filtered))
    }

    pub fn n(&self) -> usize {
        self.view.n()
    }

    pub fn m(&self) -> usize {
        self.view.m()
    }

    /// Number of sampled parameters: `2m + n - 2`.
    pub fn n_free(&self) -> usize {
        2 * self.m() + self.n() - 2
    }

    pub fn pins(&self) -> Vec<Option<f64>> {
        self.anchors.pins_for(self.n())
    }

    pub fn ideal_points(&self, values: Vec<f64>) -> IdealPoints {
        IdealPoints::new(values, self.pins())
    }
}

/// Runs every chain (in parallel threads) and collects retained draws.
pub fn run(config: &McmcConfig, problem: &Problem) -> Result<PosteriorDraws> {
    config.validate()?;
    let layout = PosteriorDraws::layout(problem);
    let chains: Vec<Result<ChainDraws>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.chains)
            .map(|c| scope.spawn(move || run_chain(config, problem, c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    });
    let chains = chains.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(PosteriorDraws::new(layout, problem, config.clone(), chains))
}

/// Runs a single chain with seed `config.seed + chain`.
pub fn run_chain(config: &McmcConfig, problem: &Problem, chain: usize) -> Result<ChainDraws> {
    let started = Instant::now();
    let seed = config.chain_seed(chain);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = init_state(config.init, problem, &mut rng)?;
    let retained = config.retained_per_chain();
    let width = problem.n_free();
    let mut values = Vec::with_capacity(retained * width);
    let mut lp = Vec::with_capacity(retained);
    if config.warmup == 0 {
        state.freeze();
    }

    for it in 0..config.iterations {
        let adapting = it < config.warmup;
        match problem.link {
            Link::Probit => step_probit_gibbs(&mut state, problem, &mut rng),
            Link::Logit => step_logit_mh(&mut state, problem, &mut rng),
        }
        if adapting {
            state.adapt(it, config);
        }
        if it >= config.warmup && (it - config.warmup + 1) % config.thin == 0 {
            state.write_free(problem, &mut values);
            lp.push(state.log_posterior(problem));
        }
        if it + 1 == config.warmup {
            state.freeze();
        }
    }
    debug_assert_eq!(lp.len(), retained);
    Ok(ChainDraws {
        seed,
        values,
        lp,
        acceptance: state.acceptance(problem),
        seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests;

//! Command-line surface: argument definitions and one function per command.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::diagnostics::{self, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::logistic::{self, LogisticData, LogisticFit};
use crate::mcmc::{self, Anchors, PosteriorDraws, Problem};
use crate::model::Link;
use crate::posterior::{self, PosteriorSummary};
use crate::rollcall::{self, GroupStats, LegislatorMeta, ParseOptions, Spread, TokenMap, VoteMatrix, VoteState};
use crate::stats;
use crate::svg;
use crate::synthetic::{self, TinyInstance};

#[derive(Debug, Parser)]
#[command(name = "idealpoint", version, about = "Bayesian ideal point estimation from roll-call votes")]
pub struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every random stream (sampler, simulator, Bayesian logit).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Link function; overrides the config file.
    #[arg(long, global = true, value_name = "logit|probit")]
    pub link: Option<Link>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Participation, attendance and abstention tables and charts.
    Describe(DataArgs),
    /// Sample the posterior and write draws, diagnostics and a manifest.
    Fit(DataArgs),
    /// Posterior summaries, group tables and a caterpillar chart.
    Summarize(RunArgs),
    /// Posterior probabilities of each configured region.
    Probs(RunArgs),
    /// Rank agreement of ideal points between two runs.
    Compare(CompareArgs),
    /// Logistic regression of the attribute flag on posterior-mean ideal points.
    Logit(RunArgs),
    /// Generate a synthetic roll call, optionally with a missing-data sensitivity study.
    Simulate(SimulateArgs),
    /// Exact quadrature moments for the built-in three-legislator instance.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long, value_name = "CSV")]
    pub votes: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub meta: Option<PathBuf>,
    /// `token,state` CSV overriding the default vote tokens.
    #[arg(long, value_name = "CSV")]
    pub tokens: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Output directory of a previous `fit`.
    #[arg(long, value_name = "DIR")]
    pub run: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_name = "DIR")]
    pub run: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub other: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, value_name = "RATE")]
    pub missing_rate: Option<f64>,
    /// Comma-separated extra missing rates for the sensitivity study.
    #[arg(long, value_name = "LIST")]
    pub rates: Option<String>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Use the mirrored-anchor instance instead of the canonical one.
    #[arg(long)]
    pub symmetric: bool,
}

/// Exit status for an error: 3 for numerical failures, 2 otherwise.
pub fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

/// Resolves the configuration (file, then flags) and runs the command.
/// Returns the files written.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    if let Some(out) = cli.out {
        config.out = out;
    }
    if let Some(link) = cli.link {
        config.link = link;
    }
    match cli.command {
        Command::Describe(args) => describe(&with_data(config, args)),
        Command::Fit(args) => fit(&with_data(config, args)),
        Command::Summarize(args) => summarize(&config, &args.run),
        Command::Probs(args) => probs(&config, &args.run),
        Command::Compare(args) => compare(&config, &args.run, &args.other),
        Command::Logit(args) => logit(&config, &args.run),
        Command::Simulate(args) => {
            let mut config = config;
            if let Some(n) = args.n {
                config.simulate.n = n;
            }
            if let Some(m) = args.m {
                config.simulate.m = m;
            }
            if let Some(rate) = args.missing_rate {
                config.simulate.missing_rate = rate;
            }
            if let Some(rates) = &args.rates {
                config.set("sensitivity_rates", rates)?;
            }
            simulate(&config)
        }
        Command::Oracle(args) => oracle(&config, args.symmetric),
    }
}

fn with_data(mut config: RunConfig, args: DataArgs) -> RunConfig {
    if args.votes.is_some() {
        config.votes = args.votes;
    }
    if args.meta.is_some() {
        config.meta = args.meta;
    }
    if args.tokens.is_some() {
        config.tokens = args.tokens;
    }
    config
}

/// Collects written files under one output directory.
struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn bytes(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        self.bytes(name, contents.as_bytes())
    }

    fn csv(&mut self, name: &str, render: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        render(&mut buf)?;
        self.bytes(name, &buf)
    }
}

fn load_data(config: &RunConfig) -> Result<(VoteMatrix, Vec<LegislatorMeta>)> {
    let votes = config
        .votes
        .as_ref()
        .ok_or_else(|| Error::Config("no votes file: set `votes` or pass --votes".into()))?;
    let meta = config
        .meta
        .as_ref()
        .ok_or_else(|| Error::Config("no meta file: set `meta` or pass --meta".into()))?;
    let tokens = match &config.tokens {
        Some(path) => TokenMap::from_file(path)?,
        None => TokenMap::default(),
    };
    let options = ParseOptions {
        tokens,
        attribute_column: config.attribute_column.clone(),
    };
    rollcall::parse_rollcall(votes, meta, &options)
}

const METRICS: [&str; 3] = ["participation", "attendance", "abstention"];

fn metric_values(stats: &rollcall::DescriptiveStats, metric: usize, keep: impl Fn(&rollcall::LegislatorStats) -> bool) -> Vec<f64> {
    stats
        .legislators
        .iter()
        .filter(|l| keep(l))
        .filter_map(|l| match metric {
            0 => Some(l.participation_pct),
            1 => l.attendance_pct,
            _ => l.abstention_pct,
        })
        .collect()
}

fn write_group_stats<W: std::io::Write>(groups: &[GroupStats], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["group", "members", "metric", "count", "min", "q1", "median", "q3", "max"])?;
    for g in groups {
        for (metric, spread) in METRICS.iter().zip([&g.participation, &g.attendance, &g.abstention]) {
            let cells: Vec<String> = match spread {
                Some(Spread {
                    count,
                    min,
                    q1,
                    median,
                    q3,
                    max,
                }) => {
                    let mut v = vec![count.to_string()];
                    v.extend([min, q1, median, q3, max].iter().map(|x| x.to_string()));
                    v
                }
                None => {
                    let mut v = vec!["0".to_string()];
                    v.extend(std::iter::repeat_n("NA".to_string(), 5));
                    v
                }
            };
            let mut record = vec![g.group.clone(), g.members.to_string(), metric.to_string()];
            record.extend(cells);
            w.write_record(&record)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn describe(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let (matrix, roster) = load_data(config)?;
    let stats = rollcall::descriptive_stats(&matrix, &roster);
    let mut out = Output::create(&config.out)?;

    out.csv("legislator_stats.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record([
            "id", "party", "bloc", "attribute_flag", "yes", "no", "abstain", "absent", "not_listed",
            "participation_pct", "attendance_pct", "abstention_pct",
        ])?;
        let opt = |v: Option<f64>| v.map_or("NA".to_string(), |x| x.to_string());
        for l in &stats.legislators {
            let c = &l.counts;
            w.write_record([
                l.id.clone(),
                l.party.clone(),
                l.bloc.name().to_string(),
                (l.attribute_flag as u8).to_string(),
                c.yes.to_string(),
                c.no.to_string(),
                c.abstain.to_string(),
                c.absent.to_string(),
                c.not_listed.to_string(),
                l.participation_pct.to_string(),
                opt(l.attendance_pct),
                opt(l.abstention_pct),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    })?;
    out.csv("summary_overall.csv", |buf| write_group_stats(std::slice::from_ref(&stats.overall), buf))?;
    out.csv("summary_by_party.csv", |buf| write_group_stats(&stats.by_party, buf))?;
    out.csv("summary_by_bloc.csv", |buf| write_group_stats(&stats.by_bloc, buf))?;
    out.csv("summary_by_attribute.csv", |buf| write_group_stats(&stats.by_attribute, buf))?;
    out.csv("list_counts.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["list", "yes", "no", "abstain", "absent", "not_listed"])?;
        for (j, id) in matrix.list_ids().iter().enumerate() {
            let column: Vec<VoteState> = (0..matrix.n()).map(|i| matrix.get(i, j)).collect();
            let c = rollcall::StateCounts::tally(&column);
            w.write_record([
                id.clone(),
                c.yes.to_string(),
                c.no.to_string(),
                c.abstain.to_string(),
                c.absent.to_string(),
                c.not_listed.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    })?;

    let flag = &config.attribute_column;
    for (k, metric) in METRICS.iter().enumerate() {
        let label = format!("{metric} (%)");
        let all = metric_values(&stats, k, |_| true);
        out.text(
            &format!("hist_{metric}.svg"),
            &svg::histogram(&format!("{metric} per legislator"), &label, &all, 10),
        )?;
        let by_party: Vec<(String, Vec<f64>)> = stats
            .by_party
            .iter()
            .map(|g| (g.group.clone(), metric_values(&stats, k, |l| l.party == g.group)))
            .collect();
        out.text(
            &format!("box_party_{metric}.svg"),
            &svg::boxplot(&format!("{metric} by party"), &label, &by_party),
        )?;
        let by_flag: Vec<(String, Vec<f64>)> = [false, true]
            .iter()
            .map(|&f| (format!("{flag} = {}", f as u8), metric_values(&stats, k, |l| l.attribute_flag == f)))
            .collect();
        out.text(
            &format!("box_attribute_{metric}.svg"),
            &svg::boxplot(&format!("{metric} by {flag}"), &label, &by_flag),
        )?;
    }
    println!("{} legislators, {} vote lists", matrix.n(), matrix.m());
    Ok(out.written)
}

fn diagnostics_panel(report: &DiagnosticsReport) -> String {
    let collect = |f: fn(&diagnostics::ParamDiagnostics) -> Option<f64>| -> Vec<f64> {
        report.params.iter().filter_map(f).collect()
    };
    svg::panel(
        "Convergence diagnostics",
        [
            svg::histogram("split R-hat", "R-hat", &collect(|p| p.rhat), 20),
            svg::histogram("ESS / S", "ESS / S", &collect(|p| p.ess_over_s), 20),
            svg::histogram("MCSE / SD", "MCSE / SD", &collect(|p| p.mcse_over_sd), 20),
            svg::histogram("coefficient of variation", "CV (%)", &collect(|p| p.cv_pct), 20),
        ],
    )
}

pub fn fit(config: &RunConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let (matrix, roster) = load_data(config)?;
    let (problem, filtered) = Problem::from_matrix(&matrix, &roster, config.anchors.as_ref(), config.priors, config.link)?;
    let started = std::time::Instant::now();
    let draws = mcmc::run(&config.mcmc, &problem)?;
    eprintln!(
        "sampled {} chains x {} iterations in {:.1}s",
        config.mcmc.chains,
        config.mcmc.iterations,
        started.elapsed().as_secs_f64()
    );
    let report = diagnostics::summarize_diagnostics(&draws);
    let mut out = Output::create(&config.out)?;

    for c in 0..draws.n_chains() {
        out.csv(&format!("chain_{}.csv", c + 1), |buf| draws.write_chain_csv(c, buf))?;
    }
    // the retained roster records the anchors actually used
    let mut retained = filtered.roster.clone();
    for (i, l) in retained.iter_mut().enumerate() {
        l.anchor = draws.anchor_pin(i);
    }
    out.csv("roster.csv", |buf| rollcall::write_meta_csv(&retained, buf))?;
    out.csv("votes.csv", |buf| filtered.matrix.write_csv(buf))?;
    out.csv("dropped.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["id"])?;
        for id in &filtered.dropped {
            w.write_record([id])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    })?;
    out.csv("diagnostics.csv", |buf| report.write_csv(buf))?;
    out.text("diagnostics.svg", &diagnostics_panel(&report))?;
    out.text("lp_trace.svg", &svg::traces("log posterior by chain", "log posterior", &report.lp_trace))?;

    let mut manifest = config.echo();
    let anchors: Vec<String> = problem
        .anchors
        .rows
        .iter()
        .zip(problem.anchors.pins)
        .map(|(&r, p)| format!("{}:{p}", problem.legislator_ids[r]))
        .collect();
    let info = [
        format!("retained_legislators = {}", problem.n()),
        format!("dropped_legislators = {}", filtered.dropped.len()),
        format!("vote_lists = {}", problem.m()),
        format!("observed_votes = {}", problem.view.n_obs()),
        format!("free_parameters = {}", problem.n_free()),
        format!("anchors_used = {}", anchors.join(",")),
        format!("retained_draws_per_chain = {}", config.mcmc.retained_per_chain()),
        format!(
            "chain_seeds = {}",
            (0..config.mcmc.chains)
                .map(|c| config.mcmc.chain_seed(c).to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
        format!("max_rhat = {}", report.max_rhat().map_or("NA".into(), |r| r.to_string())),
    ];
    for line in info.iter().chain(&report.warnings) {
        manifest.push_str(&format!("# {line}\n"));
    }
    out.text("manifest.txt", &manifest)?;

    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(r) = report.max_rhat() {
        if r > 1.1 {
            eprintln!("warning: max R-hat {r:.3} exceeds 1.1");
        }
    }
    println!(
        "{} legislators ({} dropped), {} lists, {} draws per chain",
        problem.n(),
        filtered.dropped.len(),
        problem.m(),
        draws.n_draws()
    );
    Ok(out.written)
}

/// A fitted run read back from its output directory.
pub struct LoadedRun {
    pub config: RunConfig,
    pub roster: Vec<LegislatorMeta>,
    pub draws: PosteriorDraws,
}

pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let manifest = dir.join("manifest.txt");
    let mut config = RunConfig::default();
    config.apply_text(&fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?)?;
    let (matrix, roster) = rollcall::parse_rollcall(&dir.join("votes.csv"), &dir.join("roster.csv"), &ParseOptions::default())?;
    let anchors = Anchors::from_roster(&roster)?;
    let readers = (1..=config.mcmc.chains)
        .map(|c| {
            let path = dir.join(format!("chain_{c}.csv"));
            fs::File::open(&path).map_err(|e| Error::io(&path, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let draws = PosteriorDraws::read_chain_csvs(
        readers,
        matrix.legislator_ids().to_vec(),
        matrix.list_ids().to_vec(),
        anchors.rows.iter().copied().zip(anchors.pins).collect(),
        config.mcmc.clone(),
        config.link,
        config.priors,
    )?;
    Ok(LoadedRun { config, roster, draws })
}

pub fn summarize(config: &RunConfig, run: &Path) -> Result<Vec<PathBuf>> {
    let loaded = load_run(run)?;
    let summary = posterior::summarize(&loaded.draws, config.ci_level)?;
    let groups = posterior::group_table(&summary, &loaded.roster)?;
    let mut out = Output::create(&config.out)?;
    out.csv("posterior_summary.csv", |buf| summary.write_csv(&loaded.roster, buf))?;
    out.csv("item_summary.csv", |buf| summary.write_items_csv(buf))?;
    out.csv("groups_by_party.csv", |buf| posterior::write_group_csv(&groups.by_party, buf))?;
    out.csv("groups_by_bloc.csv", |buf| posterior::write_group_csv(&groups.by_bloc, buf))?;
    out.text("caterpillar.svg", &caterpillar(&summary))?;
    let free = summary.legislators.iter().filter(|l| !l.anchored).count();
    println!(
        "{} of {} free ideal points have {}% intervals excluding zero",
        summary.significant_count(),
        free,
        config.ci_level * 100.0
    );
    Ok(out.written)
}

fn caterpillar(summary: &PosteriorSummary) -> String {
    let mut rows: Vec<(String, f64, f64, f64)> = summary
        .legislators
        .iter()
        .map(|l| {
            let s = &l.summary;
            let (lo, hi) = s.ci.unwrap_or((s.mean, s.mean));
            (l.id.clone(), s.mean, lo, hi)
        })
        .collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    svg::caterpillar(
        &format!("Ideal points with {}% credible intervals", summary.level * 100.0),
        "ideal point",
        &rows,
    )
}

pub fn probs(config: &RunConfig, run: &Path) -> Result<Vec<PathBuf>> {
    if config.regions.is_empty() {
        return Err(Error::Config("no regions configured".into()));
    }
    let loaded = load_run(run)?;
    let draws = &loaded.draws;
    let mut out = Output::create(&config.out)?;
    out.csv("region_probs.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        let mut header = vec!["id".to_string(), "name".into(), "party".into(), "anchored".into()];
        header.extend(config.regions.iter().map(|r| format!("P[{})", r.label())));
        w.write_record(&header)?;
        for (i, l) in loaded.roster.iter().enumerate() {
            let beta = draws.beta_draws(i);
            let mut record = vec![
                l.id.clone(),
                l.name.clone(),
                l.party.clone(),
                (draws.beta_param(i).is_none() as u8).to_string(),
            ];
            record.extend(config.regions.iter().map(|&r| posterior::region_prob(&beta, r).to_string()));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    })?;
    Ok(out.written)
}

pub fn compare(config: &RunConfig, first: &Path, second: &Path) -> Result<Vec<PathBuf>> {
    let a = posterior::summarize(&load_run(first)?.draws, config.ci_level)?;
    let b = posterior::summarize(&load_run(second)?.draws, config.ci_level)?;
    let cmp = posterior::compare_runs(&a, &b)?;
    let mut out = Output::create(&config.out)?;
    out.csv("comparison.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["id", "mean_first", "mean_second"])?;
        for (id, x, y) in &cmp.pairs {
            w.write_record([id.clone(), x.to_string(), y.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    })?;
    out.csv("comparison_stats.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["legislators", "spearman", "pearson"])?;
        w.write_record([cmp.pairs.len().to_string(), cmp.spearman.to_string(), cmp.pearson.to_string()])?;
        w.flush().map_err(|e| Error::io("<csv>", e))
    })?;
    let points: Vec<(f64, f64)> = cmp.pairs.iter().map(|p| (p.1, p.2)).collect();
    out.text(
        "comparison.svg",
        &svg::scatter(
            "Posterior-mean ideal points",
            &first.display().to_string(),
            &second.display().to_string(),
            &points,
            &format!("Spearman = {:.4}", cmp.spearman),
        ),
    )?;
    println!("spearman = {:.4}, pearson = {:.4} over {} legislators", cmp.spearman, cmp.pearson, cmp.pairs.len());
    Ok(out.written)
}

fn report_line(report: &mut String, key: &str, value: impl std::fmt::Display) {
    report.push_str(&format!("{key} = {value}\n"));
}

fn logit_report(config: &RunConfig, fit: &LogisticFit, roc_auc: f64, cooks: &logistic::CooksDistance, bayes: &logistic::BayesLogisticFit) -> String {
    let mut r = String::new();
    r.push_str(&format!(
        "# logistic regression of {} on posterior-mean ideal point\n",
        config.attribute_column
    ));
    report_line(&mut r, "observations", fit.data.len());
    let dev = stats::sorted(&fit.deviance_residuals());
    for (key, p) in [("min", 0.0), ("q1", 0.25), ("median", 0.5), ("q3", 0.75), ("max", 1.0)] {
        report_line(&mut r, &format!("deviance_residuals.{key}"), stats::quantile_sorted(&dev, p));
    }
    let or = fit.odds_ratios();
    for (k, term) in ["intercept", "ideal_point"].iter().enumerate() {
        report_line(&mut r, &format!("{term}.estimate"), fit.coef[k]);
        report_line(&mut r, &format!("{term}.std_error"), fit.se[k]);
        report_line(&mut r, &format!("{term}.z_value"), fit.z[k]);
        report_line(&mut r, &format!("{term}.p_value"), fit.p[k]);
        report_line(&mut r, &format!("{term}.odds_ratio"), or[k]);
    }
    report_line(&mut r, "null_deviance", fit.null_deviance);
    report_line(&mut r, "null_df", fit.null_df());
    report_line(&mut r, "residual_deviance", fit.residual_deviance);
    report_line(&mut r, "residual_df", fit.residual_df());
    report_line(&mut r, "aic", fit.aic);
    report_line(&mut r, "fisher_scoring_iterations", fit.iterations);
    let lrt = logistic::lrt_chisq(fit);
    report_line(&mut r, "lrt.statistic", lrt.statistic);
    report_line(&mut r, "lrt.df", lrt.df);
    report_line(&mut r, "lrt.p_value", lrt.p);
    report_line(&mut r, "auc", roc_auc);
    match logistic::box_tidwell(&fit.data) {
        Ok(bt) => {
            report_line(&mut r, "box_tidwell.coefficient", bt.coefficient);
            report_line(&mut r, "box_tidwell.z_value", bt.statistic);
            report_line(&mut r, "box_tidwell.p_value", bt.p);
            report_line(&mut r, "box_tidwell.linearity_rejected", bt.linearity_rejected(0.05));
        }
        Err(e) => report_line(&mut r, "box_tidwell.error", e),
    }
    report_line(&mut r, "cooks.threshold", cooks.threshold);
    report_line(&mut r, "cooks.influential", cooks.influential.iter().filter(|&&b| b).count());
    report_line(&mut r, "bayes.prior_sd", bayes.prior_sd);
    for (term, p) in [("intercept", &bayes.intercept), ("ideal_point", &bayes.slope), ("log_posterior", &bayes.log_posterior)] {
        let opt = |v: Option<f64>| v.map_or("NA".to_string(), |x| x.to_string());
        report_line(&mut r, &format!("bayes.{term}.mean"), p.mean);
        report_line(&mut r, &format!("bayes.{term}.sd"), p.sd);
        report_line(&mut r, &format!("bayes.{term}.q10"), p.q10);
        report_line(&mut r, &format!("bayes.{term}.q50"), p.q50);
        report_line(&mut r, &format!("bayes.{term}.q90"), p.q90);
        report_line(&mut r, &format!("bayes.{term}.mcse"), opt(p.mcse));
        report_line(&mut r, &format!("bayes.{term}.rhat"), opt(p.rhat));
        report_line(&mut r, &format!("bayes.{term}.n_eff"), opt(p.n_eff));
    }
    r
}

pub fn logit(config: &RunConfig, run: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let loaded = load_run(run)?;
    let summary = posterior::summarize(&loaded.draws, config.ci_level)?;
    let x = summary.means();
    let y: Vec<bool> = loaded.roster.iter().map(|l| l.attribute_flag).collect();
    let data = LogisticData::new(x, y)?;
    let fit = logistic::fit_mle(&data)?;
    let roc = logistic::roc_auc_fit(&fit)?;
    let cooks = logistic::cooks_distance(&fit);
    let bayes = logistic::fit_bayes(&data, config.logit_prior_sd, &config.bayes)?;

    let mut out = Output::create(&config.out)?;
    out.text("logit_report.txt", &logit_report(config, &fit, roc.auc, &cooks, &bayes))?;
    out.csv("coefficients.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["term", "estimate", "std_error", "z_value", "p_value", "odds_ratio"])?;
        let or = fit.odds_ratios();
        for (k, term) in ["(Intercept)", "ideal_point"].iter().enumerate() {
            w.write_record([
                term.to_string(),
                fit.coef[k].to_string(),
                fit.se[k].to_string(),
                fit.z[k].to_string(),
                fit.p[k].to_string(),
                or[k].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    })?;
    out.csv("observations.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["id", "ideal_point", "flag", "fitted", "leverage", "cooks_distance", "influential"])?;
        for (i, l) in loaded.roster.iter().enumerate() {
            w.write_record([
                l.id.clone(),
                data.x()[i].to_string(),
                (data.y()[i] as u8).to_string(),
                fit.fitted[i].to_string(),
                cooks.leverage[i].to_string(),
                cooks.distances[i].to_string(),
                (cooks.influential[i] as u8).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    })?;
    out.csv("roc.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["threshold", "fpr", "tpr"])?;
        w.write_record(["inf".to_string(), "0".into(), "0".into()])?;
        for (t, (fpr, tpr)) in roc.thresholds.iter().zip(roc.points.iter().skip(1)) {
            w.write_record([t.to_string(), fpr.to_string(), tpr.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    })?;
    out.csv("bayes.csv", |buf| bayes.write_csv(buf))?;
    out.text("roc.svg", &svg::roc(&roc.points, roc.auc))?;
    out.text(
        "cooks.svg",
        &svg::stems("Cook's distance", "Cook's distance", &cooks.distances, cooks.threshold),
    )?;
    println!(
        "slope = {:.4} (p = {:.4}), odds ratio = {:.4}, AUC = {:.4}",
        fit.coef[1],
        fit.p[1],
        fit.odds_ratios()[1],
        roc.auc
    );
    Ok(out.written)
}

pub fn simulate(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let spec = SpecWithLink::from(config);
    let data = synthetic::generate(&spec.0)?;
    let mut out = Output::create(&config.out)?;
    out.csv("votes.csv", |buf| data.matrix.write_csv(buf))?;
    out.csv("meta.csv", |buf| rollcall::write_meta_csv(&data.roster, buf))?;
    out.csv("truth.csv", |buf| data.write_truth_csv(buf))?;
    out.text("spec.txt", &config.echo())?;
    if !config.sensitivity_rates.is_empty() {
        config.mcmc.validate()?;
        let rows = synthetic::missing_sensitivity(&spec.0, &config.sensitivity_rates, config.priors, &config.mcmc)?;
        out.csv("sensitivity.csv", |buf| synthetic::write_sensitivity_csv(&rows, buf))?;
        for r in &rows {
            println!(
                "extra missing {:.2}: spearman vs base {:.4}, vs truth {:.4}",
                r.extra_rate, r.spearman_base, r.spearman_truth
            );
        }
    }
    Ok(out.written)
}

/// The simulator uses the run's link.
struct SpecWithLink(synthetic::SyntheticSpec);

impl From<&RunConfig> for SpecWithLink {
    fn from(config: &RunConfig) -> Self {
        Self(synthetic::SyntheticSpec {
            link: config.link,
            ..config.simulate.clone()
        })
    }
}

pub fn oracle(config: &RunConfig, symmetric: bool) -> Result<Vec<PathBuf>> {
    let instance = if symmetric {
        TinyInstance::symmetric(config.link)
    } else {
        TinyInstance::canonical(config.link)
    };
    let result = synthetic::quadrature_posterior(&instance)?;
    let mut out = Output::create(&config.out)?;
    out.csv("oracle_votes.csv", |buf| {
        instance.view.write_csv(&instance.legislator_ids, &instance.list_ids, buf)
    })?;
    out.csv("oracle_moments.csv", |buf| result.write_csv(buf))?;
    println!(
        "{} link, {} points per axis, refinement change {:.2e}",
        config.link.name(),
        result.grid_points,
        result.refinement_delta
    );
    Ok(out.written)
}

/// Flushes stdout so progress lines appear before the file list.
pub fn flush() {
    let _ = std::io::stdout().flush();
}

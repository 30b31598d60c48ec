//! Posterior summaries, region probabilities, group tables and run
//! comparison.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::diagnostics::cv_pct;
use crate::error::{Error, Result};
use crate::mcmc::{ParamKind, PosteriorDraws};
use crate::rollcall::LegislatorMeta;
use crate::stats;

/// Summary of one parameter's retained draws.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    /// Percentile interval; `None` for anchored ideal points.
    pub ci: Option<(f64, f64)>,
}

impl ParamSummary {
    pub fn from_draws(name: &str, draws: &[f64], level: f64) -> Self {
        let sorted = stats::sorted(draws);
        let tail = (1.0 - level) / 2.0;
        Self {
            name: name.to_string(),
            mean: stats::mean(draws),
            sd: stats::sd(draws),
            median: stats::quantile_sorted(&sorted, 0.5),
            ci: Some((
                stats::quantile_sorted(&sorted, tail),
                stats::quantile_sorted(&sorted, 1.0 - tail),
            )),
        }
    }

    fn point_mass(name: &str, value: f64) -> Self {
        Self {
            name: name.to_string(),
            mean: value,
            sd: 0.0,
            median: value,
            ci: None,
        }
    }

    /// True when the interval excludes zero; `None` without an interval.
    pub fn significant(&self) -> Option<bool> {
        self.ci.map(|(lo, hi)| !(lo <= 0.0 && 0.0 <= hi))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LegislatorSummary {
    pub id: String,
    pub anchored: bool,
    pub summary: ParamSummary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSummary {
    pub level: f64,
    /// Every retained legislator in roster order, anchors included.
    pub legislators: Vec<LegislatorSummary>,
    pub items: Vec<ParamSummary>,
}

pub fn summarize(draws: &PosteriorDraws, level: f64) -> Result<PosteriorSummary> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("credible level must lie in (0, 1), got {level}")));
    }
    let legislators = draws
        .legislator_ids
        .iter()
        .enumerate()
        .map(|(i, id)| match draws.beta_param(i) {
            Some(p) => LegislatorSummary {
                id: id.clone(),
                anchored: false,
                summary: ParamSummary::from_draws(&draws.params[p].name, &draws.pooled(p), level),
            },
            None => LegislatorSummary {
                id: id.clone(),
                anchored: true,
                summary: ParamSummary::point_mass(
                    &format!("beta_{id}"),
                    draws.anchor_pin(i).expect("unsampled legislator must be anchored"),
                ),
            },
        })
        .collect();
    let items = draws
        .params
        .iter()
        .enumerate()
        .filter(|(_, p)| !matches!(p.kind, ParamKind::Beta(_)))
        .map(|(idx, p)| ParamSummary::from_draws(&p.name, &draws.pooled(idx), level))
        .collect();
    Ok(PosteriorSummary {
        level,
        legislators,
        items,
    })
}

impl PosteriorSummary {
    pub fn significant_count(&self) -> usize {
        self.legislators
            .iter()
            .filter(|l| l.summary.significant() == Some(true))
            .count()
    }

    pub fn means(&self) -> Vec<f64> {
        self.legislators.iter().map(|l| l.summary.mean).collect()
    }

    pub fn write_csv<W: Write>(&self, roster: &[LegislatorMeta], writer: W) -> Result<()> {
        let meta: HashMap<&str, &LegislatorMeta> = roster.iter().map(|l| (l.id.as_str(), l)).collect();
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "id", "name", "party", "bloc", "attribute_flag", "anchored", "mean", "sd", "median", "ci_low",
            "ci_high", "significant",
        ])?;
        for l in &self.legislators {
            let m = meta.get(l.id.as_str());
            let s = &l.summary;
            let (lo, hi) = s
                .ci
                .map_or(("NA".to_string(), "NA".to_string()), |(a, b)| (a.to_string(), b.to_string()));
            w.write_record([
                l.id.clone(),
                m.map_or(String::new(), |m| m.name.clone()),
                m.map_or(String::new(), |m| m.party.clone()),
                m.map_or(String::new(), |m| m.bloc.name().to_string()),
                m.map_or(String::new(), |m| (m.attribute_flag as u8).to_string()),
                (l.anchored as u8).to_string(),
                s.mean.to_string(),
                s.sd.to_string(),
                s.median.to_string(),
                lo,
                hi,
                s.significant().map_or("NA".to_string(), |b| (b as u8).to_string()),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_items_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["parameter", "mean", "sd", "median", "ci_low", "ci_high"])?;
        for s in &self.items {
            let (lo, hi) = s.ci.expect("item summaries always carry an interval");
            w.write_record([
                s.name.clone(),
                s.mean.to_string(),
                s.sd.to_string(),
                s.median.to_string(),
                lo.to_string(),
                hi.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Half-open interval `[lo, hi)`; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
}

impl Region {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::Config(format!("invalid region [{lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn below(hi: f64) -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi,
        }
    }

    pub fn above(lo: f64) -> Self {
        Self {
            lo,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }

    /// `lo:hi` with `-inf`/`inf` accepted.
    pub fn parse(text: &str) -> Result<Self> {
        let (lo, hi) = text
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("region `{text}` must look like lo:hi")))?;
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid region bound `{s}`")))
        };
        Self::new(num(lo)?, num(hi)?)
    }

    pub fn label(&self) -> String {
        let fmt = |v: f64| {
            if v == f64::INFINITY {
                "inf".to_string()
            } else if v == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                v.to_string()
            }
        };
        format!("{}:{}", fmt(self.lo), fmt(self.hi))
    }
}

/// Fraction of draws falling in `region`.
pub fn region_prob(draws: &[f64], region: Region) -> f64 {
    assert!(!draws.is_empty(), "region probability of empty draws");
    draws.iter().filter(|&&x| region.contains(x)).count() as f64 / draws.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupRow {
    pub group: String,
    pub members: usize,
    pub min: f64,
    pub max: f64,
    /// `None` for single-member groups or a zero mean.
    pub cv_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupTable {
    pub by_party: Vec<GroupRow>,
    pub by_bloc: Vec<GroupRow>,
}

pub fn group_row(group: &str, means: &[f64]) -> GroupRow {
    let sorted = stats::sorted(means);
    GroupRow {
        group: group.to_string(),
        members: means.len(),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        cv_pct: if means.len() >= 2 {
            cv_pct(stats::mean(means), stats::sd(means))
        } else {
            None
        },
    }
}

pub fn group_table(summary: &PosteriorSummary, roster: &[LegislatorMeta]) -> Result<GroupTable> {
    let meta: HashMap<&str, &LegislatorMeta> = roster.iter().map(|l| (l.id.as_str(), l)).collect();
    let mut party: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut bloc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for l in &summary.legislators {
        let m = meta
            .get(l.id.as_str())
            .ok_or_else(|| Error::UnknownLegislator(l.id.clone()))?;
        party.entry(m.party.clone()).or_default().push(l.summary.mean);
        bloc.entry(m.bloc.name().to_string()).or_default().push(l.summary.mean);
    }
    let rows = |groups: BTreeMap<String, Vec<f64>>| groups.iter().map(|(g, v)| group_row(g, v)).collect();
    Ok(GroupTable {
        by_party: rows(party),
        by_bloc: rows(bloc),
    })
}

pub fn write_group_csv<W: Write>(rows: &[GroupRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["group", "members", "min", "max", "cv_pct"])?;
    for r in rows {
        w.write_record([
            r.group.clone(),
            r.members.to_string(),
            r.min.to_string(),
            r.max.to_string(),
            r.cv_pct.map_or("NA".to_string(), |c| c.to_string()),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub spearman: f64,
    pub pearson: f64,
    /// `(id, mean in first run, mean in second run)` in the first run's order.
    pub pairs: Vec<(String, f64, f64)>,
}

/// Rank agreement of legislator posterior means between two runs.
pub fn compare_runs(a: &PosteriorSummary, b: &PosteriorSummary) -> Result<Comparison> {
    let in_b: HashMap<&str, f64> = b.legislators.iter().map(|l| (l.id.as_str(), l.summary.mean)).collect();
    let in_a: HashMap<&str, f64> = a.legislators.iter().map(|l| (l.id.as_str(), l.summary.mean)).collect();
    let only_first: Vec<&str> = a.legislators.iter().map(|l| l.id.as_str()).filter(|id| !in_b.contains_key(id)).collect();
    let only_second: Vec<&str> = b.legislators.iter().map(|l| l.id.as_str()).filter(|id| !in_a.contains_key(id)).collect();
    if !only_first.is_empty() || !only_second.is_empty() {
        return Err(Error::MismatchedSets {
            only_first: only_first.join(", "),
            only_second: only_second.join(", "),
        });
    }
    let pairs: Vec<(String, f64, f64)> = a
        .legislators
        .iter()
        .map(|l| (l.id.clone(), l.summary.mean, in_b[l.id.as_str()]))
        .collect();
    let x: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    Ok(Comparison {
        spearman: stats::spearman(&x, &y),
        pearson: stats::pearson(&x, &y),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn constant_draws_collapse_interval() {
        let s = ParamSummary::from_draws("x", &[2.5; 50], 0.95);
        assert_eq!((s.mean, s.sd, s.ci), (2.5, 0.0, Some((2.5, 2.5))));
        assert_eq!(s.significant(), Some(true));
    }

    #[test]
    fn standard_normal_interval() {
        let s = ParamSummary::from_draws("x", &normals(1, 10_000), 0.95);
        let (lo, hi) = s.ci.unwrap();
        assert!((lo + 1.96).abs() < 0.05 && (hi - 1.96).abs() < 0.05, "({lo}, {hi})");
        assert!(lo <= s.median && s.median <= hi);
    }

    #[test]
    fn region_probabilities() {
        assert_eq!(region_prob(&[-1.5; 10], Region::below(-1.0)), 1.0);
        let d = normals(2, 10_000);
        let p = region_prob(&d, Region::new(-0.2, 0.2).unwrap());
        // Phi(0.2) - Phi(-0.2)
        assert!((p - 0.158519).abs() < 0.01, "{p}");
        assert!(Region::new(1.0, 1.0).is_err());
        assert_eq!(Region::parse("-inf:-1").unwrap(), Region::below(-1.0));
        assert_eq!(Region::parse("1:inf").unwrap().label(), "1:inf");
    }

    #[test]
    fn group_rows() {
        let r = group_row("PDA", &[-1.68, -0.94]);
        assert_eq!((r.min, r.max), (-1.68, -0.94));
        assert!(r.cv_pct.is_some());
        assert_eq!(group_row("AICO", &[0.3]).cv_pct, None);
        let flat = group_row("X", &[2.0, 2.0, 2.0]);
        assert_eq!((flat.min, flat.max, flat.cv_pct), (2.0, 2.0, Some(0.0)));
    }

    fn summary(ids: &[&str], means: &[f64]) -> PosteriorSummary {
        PosteriorSummary {
            level: 0.95,
            legislators: ids
                .iter()
                .zip(means)
                .map(|(id, m)| LegislatorSummary {
                    id: id.to_string(),
                    anchored: false,
                    summary: ParamSummary::point_mass(id, *m),
                })
                .collect(),
            items: vec![],
        }
    }

    #[test]
    fn comparison_extremes_and_errors() {
        let a = summary(&["a", "b", "c", "d"], &[0.1, 0.5, -0.3, 2.0]);
        assert_relative_eq!(compare_runs(&a, &a).unwrap().spearman, 1.0);
        let rev = summary(&["a", "b", "c", "d"], &[-0.1, -0.5, 0.3, -2.0]);
        assert_relative_eq!(compare_runs(&a, &rev).unwrap().spearman, -1.0);
        let other = summary(&["a", "b", "c", "z"], &[0.0, 1.0, 2.0, 3.0]);
        match compare_runs(&a, &other) {
            Err(Error::MismatchedSets { only_first, only_second }) => {
                assert_eq!(only_first, "d");
                assert_eq!(only_second, "z");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn partition_probabilities_sum_to_one(draws in prop::collection::vec(-5.0f64..5.0, 1..200), a in -3.0f64..0.0, b in 0.0f64..3.0) {
            prop_assume!(a < b);
            let total = region_prob(&draws, Region::below(a))
                + region_prob(&draws, Region::new(a, b).unwrap())
                + region_prob(&draws, Region::above(b));
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn comparison_is_symmetric(means in prop::collection::vec(-3.0f64..3.0, 3..30), seed in any::<u64>()) {
            let ids: Vec<String> = (0..means.len()).map(|i| format!("L{i}")).collect();
            let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
            let other: Vec<f64> = normals(seed, means.len());
            let a = summary(&refs, &means);
            let b = summary(&refs, &other);
            let ab = compare_runs(&a, &b).unwrap().spearman;
            let ba = compare_runs(&b, &a).unwrap().spearman;
            prop_assert!((ab - ba).abs() < 1e-12);
        }

        #[test]
        fn significance_agrees_with_sign_probability(shift in -3.0f64..3.0, seed in any::<u64>()) {
            let draws: Vec<f64> = normals(seed, 401).into_iter().map(|z| z + shift).collect();
            prop_assume!(draws.iter().all(|&x| x != 0.0));
            let level = 0.95;
            let s = ParamSummary::from_draws("b", &draws, level);
            let below = region_prob(&draws, Region::below(0.0));
            let tail = (1.0 - level) / 2.0;
            // stay clear of the quantile interpolation boundary
            let gran = 1.0 / draws.len() as f64;
            prop_assume!((below - tail).abs() > gran && (below - (1.0 - tail)).abs() > gran);
            let by_prob = below <= tail || below >= 1.0 - tail;
            prop_assert_eq!(s.significant(), Some(by_prob));
        }
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::rollcall::{BinaryView, Bloc, LegislatorMeta};
use crate::stats;

fn roster(n: usize) -> Vec<LegislatorMeta> {
    (0..n)
        .map(|i| LegislatorMeta {
            id: format!("L{i}"),
            name: format!("Legislator {i}"),
            party: if i % 2 == 0 { "P".into() } else { "Q".into() },
            bloc: if i % 2 == 0 { Bloc::Coalition } else { Bloc::Opposition },
            attribute_flag: false,
            anchor: None,
        })
        .collect()
}

fn random_problem(n: usize, m: usize, link: Link, seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = (0..n * m)
        .map(|_| (rng.random::<f64>() > 0.2).then(|| rng.random::<bool>()))
        .collect();
    let view = BinaryView::from_cells(n, m, cells);
    let list_ids = (0..m).map(|j| format!("V{j}")).collect();
    let anchors = Anchors::new([0, 1], [-1.0, 1.0]).unwrap();
    Problem::new(view, list_ids, &roster(n), anchors, PriorSpec::default(), link).unwrap()
}

fn small_config(iterations: usize, warmup: usize, thin: usize, chains: usize) -> McmcConfig {
    McmcConfig {
        iterations,
        warmup,
        thin,
        chains,
        ..McmcConfig::default()
    }
}

#[test]
fn default_run_retains_12800_draws_per_chain() {
    let c = McmcConfig::default();
    assert_eq!(c.retained_per_chain(), 12_800);
    assert_eq!(c.retained_per_chain() * c.chains, 51_200);
    c.validate().unwrap();
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(small_config(1000, 1000, 1, 1).validate().is_err());
    assert!(small_config(1000, 0, 0, 1).validate().is_err());
    assert!(small_config(1000, 600, 5, 1).validate().is_err());
    assert!(small_config(1000, 500, 5, 1).validate().is_ok());
}

#[test]
fn draw_layout_and_counts() {
    let problem = random_problem(6, 4, Link::Probit, 1);
    let config = small_config(400, 100, 3, 2);
    let draws = run(&config, &problem).unwrap();
    assert_eq!(draws.n_chains(), 2);
    assert_eq!(draws.n_draws(), 100);
    assert_eq!(draws.n_params(), 2 * 4 + 6 - 2);
    assert_eq!(draws.params[0].name, "mu_V0");
    assert_eq!(draws.params[4].name, "alpha_V0");
    assert_eq!(draws.params[8].name, "beta_L2");
    assert_eq!(draws.beta_param(0), None);
    assert_eq!(draws.beta_draws(1), vec![1.0; 200]);
}

#[test]
fn same_seed_same_draws() {
    for link in [Link::Probit, Link::Logit] {
        let problem = random_problem(5, 6, link, 2);
        let config = small_config(300, 100, 1, 2);
        let a = run(&config, &problem).unwrap();
        let b = run(&config, &problem).unwrap();
        for c in 0..2 {
            assert_eq!(a.chains[c].values, b.chains[c].values);
            assert_eq!(a.chains[c].lp, b.chains[c].lp);
        }
        assert_ne!(a.chains[0].values, a.chains[1].values);
    }
}

#[test]
fn anchors_never_move() {
    for link in [Link::Probit, Link::Logit] {
        let problem = random_problem(7, 5, link, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut state = init_state(InitRule::PriorDraw, &problem, &mut rng).unwrap();
        for _ in 0..1000 {
            match link {
                Link::Probit => step_probit_gibbs(&mut state, &problem, &mut rng),
                Link::Logit => step_logit_mh(&mut state, &problem, &mut rng),
            }
        }
        assert_eq!(state.beta.get(0), -1.0);
        assert_eq!(state.beta.get(1), 1.0);
    }
}

#[test]
fn bloc_sign_and_zero_initialization() {
    let problem = random_problem(6, 3, Link::Probit, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let state = init_state(InitRule::BlocSigns, &problem, &mut rng).unwrap();
    // rows 0 and 1 are anchors; the rest follow their bloc
    assert_eq!(state.beta.values(), &[-1.0, 1.0, 1.0, -1.0, 1.0, -1.0]);
    assert!(state.mu.iter().chain(&state.alpha).all(|&v| v == 0.0));

    let state = init_state(InitRule::Zeros, &problem, &mut rng).unwrap();
    assert_eq!(state.beta.values(), &[-1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn unknown_anchor_id_is_a_config_error() {
    let err = Anchors::from_ids(&roster(4), [("L0", -1.0), ("nobody", 1.0)]).unwrap_err();
    assert!(matches!(err, Error::Config(ref msg) if msg.contains("nobody")));
    assert!(Anchors::from_ids(&roster(4), [("L0", 1.0), ("L1", 1.0)]).is_err());
    assert!(Anchors::from_roster(&roster(4)).is_err());
}

#[test]
fn tiny_proposals_are_almost_always_accepted() {
    let problem = random_problem(6, 5, Link::Logit, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut state = init_state(InitRule::BlocSigns, &problem, &mut rng).unwrap();
    state.set_proposal_scales(0.0);
    assert!(state.item_scales().iter().all(|&s| s == MIN_PROPOSAL_SCALE));
    state.freeze();
    for _ in 0..200 {
        step_logit_mh(&mut state, &problem, &mut rng);
    }
    let rates = state.acceptance(&problem).unwrap();
    assert!(rates.items.iter().chain(&rates.betas).all(|&r| r > 0.95), "{rates:?}");
}

#[test]
fn adaptation_stops_after_warmup() {
    let problem = random_problem(6, 5, Link::Logit, 6);
    let config = small_config(600, 200, 1, 1);
    let draws = run(&config, &problem).unwrap();
    let rates = draws.chains[0].acceptance.as_ref().unwrap();
    assert_eq!(rates.items.len(), 5);
    assert_eq!(rates.betas.len(), 4);
    assert!(rates.items.iter().chain(&rates.betas).all(|&r| (0.05..0.95).contains(&r)));
}

/// With every vote missing, both samplers must reproduce the prior.
#[test]
fn empty_data_recovers_the_prior() {
    for link in [Link::Probit, Link::Logit] {
        let (n, m) = (4, 2);
        let view = BinaryView::from_cells(n, m, vec![None; n * m]);
        let anchors = Anchors::new([0, 1], [-1.0, 1.0]).unwrap();
        let ids = vec!["a".to_string(), "b".to_string()];
        let problem = Problem::new(view, ids, &roster(n), anchors, PriorSpec::default(), link).unwrap();
        let config = small_config(42_000, 2_000, 2, 1);
        let draws = run(&config, &problem).unwrap();
        for (p, info) in draws.params.iter().enumerate() {
            let x = draws.pooled(p);
            let var: f64 = match info.kind {
                ParamKind::Beta(_) => 1.0,
                _ => 25.0,
            };
            let mean = stats::mean(&x);
            let v = stats::variance(&x);
            assert!(mean.abs() < 0.15 * var.sqrt(), "{link:?} {}: mean {mean}", info.name);
            assert!((v / var - 1.0).abs() < 0.15, "{link:?} {}: var {v}", info.name);
        }
    }
}

use proptest::prelude::*;
use pubweight::analysis::{
    aggregate_ensemble, hill_exponent, sup_distance, tail_exponent_target, Series,
};
use pubweight::engine::{run, run_ensemble, RunOptions, SimState, Simulator};
use pubweight::limit_continuous::solve_g;
use pubweight::limit_discrete::solve_recursion;
use pubweight::model::{AuthorCountLaw, BonusScheme, Mode, ModelConfig, Truncation, WeightLaw};

fn no_snapshots() -> RunOptions {
    RunOptions {
        checkpoints: Some(vec![]),
        ..RunOptions::default()
    }
}

fn exp_continuous(n_steps: u64) -> ModelConfig {
    ModelConfig {
        mode: Mode::Continuous,
        n_steps,
        x_law: WeightLaw::exponential(1.0),
        bonus: BonusScheme::FullBonus {
            y_law: WeightLaw::exponential(1.0),
        },
        ..ModelConfig::albert_barabasi()
    }
}

#[test]
fn total_weight_grows_linearly() {
    let ab = ModelConfig::albert_barabasi();
    let configs = [
        ModelConfig {
            n_steps: 100_000,
            ..ab.clone()
        },
        ModelConfig {
            n_steps: 100_000,
            nu_law: AuthorCountLaw::constant(2),
            ..ab.clone()
        },
        ModelConfig {
            mode: Mode::Continuous,
            n_steps: 100_000,
            x_law: WeightLaw::exponential(1.0),
            nu_law: AuthorCountLaw::new(&[(1, 0.5), (3, 0.5)]),
            bonus: BonusScheme::EqualSplit {
                z_law: WeightLaw::gamma(2.0, 1.0),
            },
            ..ab
        },
    ];
    for cfg in configs {
        let cfg = cfg.validated().unwrap();
        let rate = cfg.moments().growth_rate();
        for out in run_ensemble(&cfg, &no_snapshots(), 4).unwrap() {
            let ratio = out.total() / out.n() as f64;
            assert!((ratio - rate).abs() < 0.02 * rate, "{ratio} vs {rate}");
        }
    }
}

#[test]
fn compensated_total_tracks_weights() {
    let cfg = exp_continuous(1_000_000);
    let mut sim = Simulator::<f64>::new(&cfg, 0);
    let mut state: SimState<f64> = sim.init_state().unwrap();
    for _ in 0..cfg.n_steps {
        sim.step(&mut state).unwrap();
    }
    // Reference: Kahan sum of the ascending weights.
    let mut w = state.weights().to_vec();
    w.sort_by(f64::total_cmp);
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in w {
        let y = x - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    assert!(((state.total() - s) / s).abs() < 1e-9);
}

#[test]
fn discrete_counts_approach_limit() {
    let cfg = ModelConfig {
        n_steps: 50_000,
        ..ModelConfig::albert_barabasi()
    };
    let lim = solve_recursion(&cfg, 10).unwrap();
    let out = run(&cfg, &no_snapshots(), 0).unwrap();
    let counts = out
        .discrete_state()
        .unwrap()
        .empirical_weight_counts(10)
        .unwrap();
    assert!(sup_distance(&counts[1..], &lim.x).unwrap() < 0.01);
}

#[test]
fn continuous_tail_approaches_limit() {
    let cfg = exp_continuous(100_000);
    let g = solve_g(&cfg, 20.0, 0.01).unwrap();
    let grid = [0.5, 1.0, 2.0, 5.0, 10.0];
    let theory: Vec<f64> = grid.iter().map(|&t| g.at(t)).collect();
    let emp = run(&cfg, &no_snapshots(), 0)
        .unwrap()
        .tail_fraction(&grid)
        .unwrap();
    assert!(sup_distance(&emp, &theory).unwrap() < 0.02);
}

// Pilot over six seeds at n = 1e6: estimates 1.85-1.88 at tail fraction
// 0.01 and 1.90-2.02 at 0.001. The shortfall at 0.01 is the slow approach of
// the integer tail to its power law around j = 14.
#[test]
fn hill_on_simulated_weights() {
    let cfg = ModelConfig {
        n_steps: 1_000_000,
        ..ModelConfig::albert_barabasi()
    };
    let gamma = solve_recursion(&cfg, 10).unwrap().gamma;
    let target = tail_exponent_target(Mode::Discrete, gamma);
    let w = run(&cfg, &no_snapshots(), 0).unwrap().weights_f64();
    for (fraction, tol) in [(0.01, 0.2), (0.001, 0.15)] {
        let est = hill_exponent(&w, fraction).unwrap().value;
        println!("hill tail_fraction={fraction}: {est:.4} (target {target})");
        assert!((est - target).abs() < tol, "{est}");
    }
}

// 32 replicas against four disjoint groups of 8: the standard error should
// halve, within 30%.
#[test]
fn ensemble_standard_error_scales() {
    let cfg = ModelConfig {
        n_steps: 10_000,
        ..ModelConfig::albert_barabasi()
    };
    let series: Vec<Series> = run_ensemble(&cfg, &no_snapshots(), 32)
        .unwrap()
        .iter()
        .map(|o| Series {
            keys: vec![1.0],
            values: vec![
                o.discrete_state()
                    .unwrap()
                    .empirical_weight_counts(1)
                    .unwrap()[1],
            ],
        })
        .collect();
    let se32 = aggregate_ensemble(&series).unwrap().std_error.unwrap()[0];
    let var8: f64 = series
        .chunks(8)
        .map(|g| aggregate_ensemble(g).unwrap().std_error.unwrap()[0].powi(2))
        .sum::<f64>()
        / 4.0;
    let expected = var8.sqrt() / 2.0;
    assert!(
        (se32 - expected).abs() < 0.3 * expected,
        "{se32} vs {expected}"
    );
}

#[test]
fn ensemble_is_reproducible() {
    let cfg = ModelConfig {
        n_steps: 5_000,
        ..exp_continuous(0)
    };
    let a = run_ensemble(&cfg, &RunOptions::default(), 4).unwrap();
    let b = run_ensemble(&cfg, &RunOptions::default(), 4).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.weights_f64(), y.weights_f64());
        assert_eq!(x.snapshots(), y.snapshots());
    }
    assert_ne!(a[0].weights_f64(), a[1].weights_f64());
}

fn small_discrete_config() -> impl Strategy<Value = ModelConfig> {
    (1u32..5, 1u64..3, 1u64..4, any::<bool>(), any::<u64>())
        .prop_map(|(k, x, y, conditional, seed)| ModelConfig {
            n_steps: 200,
            seed,
            x_law: WeightLaw::pmf(&[(x, 0.5), (x + 1, 0.5)]),
            nu_law: AuthorCountLaw {
                truncation: if conditional {
                    Truncation::Conditional
                } else {
                    Truncation::Min
                },
                ..AuthorCountLaw::new(&[(1, 0.5), (k, 0.5)])
            },
            bonus: BonusScheme::FullBonus {
                y_law: WeightLaw::pmf(&[(0, 0.2), (y, 0.8)]),
            },
            ..ModelConfig::albert_barabasi()
        })
        .prop_filter_map("valid config", |cfg| cfg.validated().ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_step_conserves_weight(cfg in small_discrete_config()) {
        let mut sim = Simulator::<u64>::new(&cfg, 0);
        let mut state = sim.init_state().unwrap();
        for step in 0..cfg.n_steps {
            let before = state.total();
            let population = state.population();
            let rec = sim.step(&mut state).unwrap().clone();
            prop_assert!(rec.k >= 1 && rec.k <= population);
            prop_assert_eq!(rec.group.len(), rec.k);
            prop_assert!(rec.group.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(*rec.group.last().unwrap() < population);
            let added: u64 = rec.bonuses.iter().sum::<u64>() + rec.new_weight;
            prop_assert_eq!(state.total(), before + added);
            prop_assert_eq!(state.weights().iter().sum::<u64>(), state.total());
            prop_assert_eq!(state.population() as u64, step + 2);
        }
    }
}

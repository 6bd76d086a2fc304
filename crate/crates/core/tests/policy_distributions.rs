//! Distributional checks of the policies' recommendations.

use std::collections::HashMap;

use pbm_lab::experiment::run_experiment;
use pbm_lab::experiment::{EnvSet, ExperimentConfig};
use pbm_lab::policies::{
    pbmts_draw, perturb_recommendation, EpsGreedyPolicy, GreedyPolicy, KappaMode, PbMhbPolicy, Policy, PolicySpec,
    UniformPolicy,
};
use pbm_lab::sampler::MhConfig;
use pbm_lab::{bundled, ClickStats, PbmParams, Recommendation, RewardVector, RngStream};

/// Upper 0.1% point of chi-squared with 11 degrees of freedom.
const CHI2_11_CRIT: f64 = 31.264;

fn chi_squared_uniform(policy: &mut dyn Policy, draws: usize, seed: u64) -> f64 {
    let mut rng = RngStream::new(seed);
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for _ in 0..draws {
        let rec = policy.choose(1, &mut rng).unwrap();
        *counts.entry(rec.items().to_vec()).or_default() += 1;
    }
    assert_eq!(counts.len(), 12, "all ordered pairs of 4 items appear");
    let expected = draws as f64 / 12.0;
    counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

fn small_env() -> PbmParams {
    PbmParams::new(vec![0.6, 0.4, 0.3, 0.1], vec![1.0, 0.5]).unwrap()
}

#[test]
fn uniform_policy_is_uniform_over_ordered_pairs() {
    let chi2 = chi_squared_uniform(&mut UniformPolicy::new(4, 2), 100_000, 1);
    assert!(chi2 < CHI2_11_CRIT, "chi2 {chi2}");
}

#[test]
fn thompson_policies_start_uniform() {
    let env = small_env();
    let specs = [
        PolicySpec::pb_mhb(MhConfig::default()),
        PolicySpec::BcMpts {
            mode: KappaMode::SemiOracle,
            kappa: None,
        },
        PolicySpec::BcMpts {
            mode: KappaMode::Greedy,
            kappa: None,
        },
        PolicySpec::PbmTs {
            mode: KappaMode::SemiOracle,
            kappa: None,
        },
    ];
    for (k, spec) in specs.iter().enumerate() {
        let mut policy = spec.build(&env).unwrap();
        let chi2 = chi_squared_uniform(policy.as_mut(), 24_000, 10 + k as u64);
        assert!(chi2 < CHI2_11_CRIT, "{}: chi2 {chi2}", spec.label());
    }
}

#[test]
fn pbmts_mean_matches_quadrature() {
    let stats = ClickStats::from_counts(2, 2, vec![5, 2, 1, 3], vec![10, 3, 9, 20]).unwrap();
    let kappa = [1.0, 0.4];
    for item in 0..2 {
        let log_density = |x: f64| {
            (0..2)
                .map(|l| {
                    let p = x * kappa[l];
                    stats.successes(item, l) as f64 * p.ln() + stats.failures(item, l) as f64 * (1.0 - p).ln()
                })
                .sum::<f64>()
        };
        let grid = 100_000;
        let (mut z, mut first) = (0.0, 0.0);
        for k in 0..grid {
            let x = (k as f64 + 0.5) / grid as f64;
            let w = log_density(x).exp();
            z += w;
            first += w * x;
        }
        let oracle = first / z;

        let mut rng = RngStream::new(4 + item as u64);
        let n = 20_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let d = pbmts_draw(&stats, &kappa, item, &mut rng);
            assert!(!d.capped);
            assert!(d.value > 0.0 && d.value <= 1.0);
            sum += d.value;
        }
        let mean = sum / n as f64;
        assert!((mean - oracle).abs() < 0.02, "item {item}: {mean} vs {oracle}");
    }
}

#[test]
fn eps_greedy_replacement_rate() {
    let policy = EpsGreedyPolicy::new(10, 5, 1_000.0).unwrap();
    let eps = policy.epsilon(10_000);
    assert!((eps - 0.1).abs() < 1e-15);

    let rec = Recommendation::new(vec![0, 1, 2, 3, 4]).unwrap();
    let mut rng = RngStream::new(17);
    let rounds = 20_000;
    let mut replaced = 0usize;
    for _ in 0..rounds {
        let (out, flags) = perturb_recommendation(&rec, eps, 10, &mut rng);
        assert_eq!(out.len(), 5);
        for (slot, &f) in flags.iter().enumerate() {
            if !f {
                assert_eq!(out.items()[slot], rec.items()[slot]);
            }
        }
        replaced += flags.iter().filter(|&&f| f).count();
    }
    let n = (rounds * 5) as f64;
    let rate = replaced as f64 / n;
    let se = (eps * (1.0 - eps) / n).sqrt();
    assert!((rate - eps).abs() < 4.0 * se, "rate {rate}");
}

#[test]
fn eps_one_gives_uniform_ordered_subsets() {
    let rec = Recommendation::new(vec![0, 1]).unwrap();
    let mut rng = RngStream::new(2);
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    let draws = 60_000;
    for _ in 0..draws {
        let (out, _) = perturb_recommendation(&rec, 1.0, 4, &mut rng);
        *counts.entry(out.items().to_vec()).or_default() += 1;
    }
    assert_eq!(counts.len(), 12);
    let expected = draws as f64 / 12.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < CHI2_11_CRIT, "chi2 {chi2}");
}

#[test]
fn concentrated_posterior_puts_item_on_top() {
    // Item 2 clicked nearly always at the first position, the others never.
    let mut stats = ClickStats::new(4, 2);
    stats.set(2, 0, 500, 1);
    for i in [0, 1, 3] {
        stats.set(i, 0, 0, 500);
        stats.set(i, 1, 0, 500);
    }
    stats.set(2, 1, 400, 100);
    let mut hits = 0;
    let rounds = 500;
    let mut rng = RngStream::new(6);
    let mut policy = PbMhbPolicy::new(
        4,
        2,
        MhConfig {
            c: 1.0,
            m: 5,
            warm_start: true,
        },
    )
    .unwrap();
    for i in 0..4 {
        for l in 0..2 {
            let (s, f) = (stats.successes(i, l), stats.failures(i, l));
            let rec = if l == 0 {
                Recommendation::new(vec![i, (i + 1) % 4]).unwrap()
            } else {
                Recommendation::new(vec![(i + 1) % 4, i]).unwrap()
            };
            // Replay the counts one display at a time through the feedback
            // path; the partner slot gets a non-click, which is harmless here.
            for k in 0..(s + f) {
                let mut clicks = vec![false, false];
                clicks[l] = k < s;
                policy.feedback(&rec, &RewardVector(clicks)).unwrap();
            }
        }
    }
    // A warm chain at sigma = 0.1 reaches the mode during burn-in.
    for _ in 0..200 {
        policy.choose(100, &mut rng).unwrap();
    }
    for _ in 0..rounds {
        let rec = policy.choose(100, &mut rng).unwrap();
        hits += (rec.items()[0] == 2) as usize;
    }
    assert!(hits as f64 / rounds as f64 > 0.98, "hits {hits}");
}

#[test]
fn greedy_recovers_oracle_from_uniform_play() {
    let env = bundled::simulated_std();
    let oracle = env.best_recommendation();
    let seeds = 20;
    let mut agree = 0;
    for seed in 0..seeds {
        let mut rng = RngStream::new(seed);
        let mut stats = ClickStats::new(10, 5);
        let mut uniform = UniformPolicy::new(10, 5);
        for _ in 0..10_000 {
            let rec = uniform.choose(1, &mut rng).unwrap();
            let rewards = env.draw_rewards(&rec, &mut rng).unwrap();
            stats.update(&rec, &rewards).unwrap();
        }
        let mut greedy = GreedyPolicy::with_stats(stats);
        let rec = greedy.choose(10_001, &mut rng).unwrap();
        // Items with equal theta are interchangeable for the reward.
        agree += (env.expected_reward(&rec).unwrap() >= env.expected_reward(&oracle).unwrap() - 1e-12) as usize;
    }
    assert!(agree as f64 / seeds as f64 >= 0.95, "agree {agree}/{seeds}");
}

fn enumerate_mean_reward(env: &PbmParams) -> f64 {
    fn walk(env: &PbmParams, prefix: &mut Vec<usize>, acc: &mut (f64, u64)) {
        if prefix.len() == env.n_positions() {
            acc.0 += env
                .expected_reward(&Recommendation::new(prefix.clone()).unwrap())
                .unwrap();
            acc.1 += 1;
            return;
        }
        for i in 0..env.n_items() {
            if !prefix.contains(&i) {
                prefix.push(i);
                walk(env, prefix, acc);
                prefix.pop();
            }
        }
    }
    let mut acc = (0.0, 0);
    walk(env, &mut Vec::new(), &mut acc);
    acc.0 / acc.1 as f64
}

#[test]
fn uniform_regret_matches_enumeration() {
    let env = bundled::simulated_std();
    let horizon = 1_000;
    let expected = horizon as f64 * (env.optimal_reward() - enumerate_mean_reward(&env));
    let config = ExperimentConfig {
        name: None,
        env: EnvSet::Single(env),
        policies: vec![PolicySpec::Uniform],
        horizon,
        n_runs: 200,
        base_seed: 0,
        checkpoints: Some(vec![horizon]),
    };
    let traces = run_experiment(&config, 2).unwrap();
    let mean = traces.iter().map(|t| t.final_regret()).sum::<f64>() / traces.len() as f64;
    assert!(
        (mean - expected).abs() <= 0.05 * expected,
        "mean {mean} expected {expected}"
    );
}

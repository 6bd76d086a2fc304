use pbm_lab::experiment::{read_traces, write_traces, RegretTrace};
use pbm_lab::inference::{rank1_triple, svd_rank1_extract, ClickMatrix};
use pbm_lab::sampler::{mh_sample, MhConfig};
use pbm_lab::{ClickStats, PbmParams, Recommendation, RngStream};
use proptest::prelude::*;

fn params_strategy(max_items: usize, max_positions: usize) -> impl Strategy<Value = PbmParams> {
    (1..=max_items)
        .prop_flat_map(move |n| (Just(n), 1..=n.min(max_positions)))
        .prop_flat_map(|(n, l)| {
            (
                prop::collection::vec(0.0..=1.0f64, n),
                prop::collection::vec(0.0..=1.0f64, l - 1),
            )
        })
        .prop_map(|(theta, rest)| {
            let mut kappa = vec![1.0];
            kappa.extend(rest);
            PbmParams::new(theta, kappa).unwrap()
        })
}

/// Every ordered selection of `l` distinct items out of `n`.
fn all_recommendations(n: usize, l: usize) -> Vec<Vec<usize>> {
    if l == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for prefix in all_recommendations(n, l - 1) {
        for i in (0..n).filter(|i| !prefix.contains(i)) {
            let mut next = prefix.clone();
            next.push(i);
            out.push(next);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn best_recommendation_matches_exhaustive_search(params in params_strategy(6, 4)) {
        let best = params.expected_reward(&params.best_recommendation()).unwrap();
        let brute = all_recommendations(params.n_items(), params.n_positions())
            .into_iter()
            .map(|r| params.expected_reward(&Recommendation::new(r).unwrap()).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((best - brute).abs() <= 1e-12, "best {best} brute {brute}");
        prop_assert!((params.optimal_reward() - brute).abs() <= 1e-12);
    }

    #[test]
    fn expected_reward_is_bounded(params in params_strategy(8, 5), seed in any::<u64>()) {
        let mut rng = RngStream::new(seed);
        let mut items: Vec<usize> = (0..params.n_items()).collect();
        rand::seq::SliceRandom::shuffle(items.as_mut_slice(), &mut rng);
        items.truncate(params.n_positions());
        let r = params.expected_reward(&Recommendation::new(items).unwrap()).unwrap();
        prop_assert!((0.0..=params.n_positions() as f64).contains(&r));
    }

    #[test]
    fn svd_factors_compose_back(params in params_strategy(10, 5)) {
        let m = ClickMatrix::outer(&params);
        prop_assume!(m.values().iter().any(|&x| x > 1e-6) && params.theta().iter().any(|&t| t > 1e-6));
        let triple = rank1_triple(&m).unwrap();
        for i in 0..params.n_items() {
            for l in 0..params.n_positions() {
                let recon = triple.sigma * triple.u[i] * triple.v[l];
                prop_assert!((recon - m.get(i, l)).abs() <= 1e-9);
            }
        }
        let extracted = svd_rank1_extract(&m).unwrap();
        for i in 0..params.n_items() {
            for l in 0..params.n_positions() {
                let recon = extracted.theta()[i] * extracted.kappa()[l];
                prop_assert!((recon - m.get(i, l)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn mh_samples_stay_valid(
        counts in prop::collection::vec((0u64..40, 0u64..40), 12),
        t in 1u64..5_000,
        c in 0.01f64..1_000.0,
        seed in any::<u64>(),
    ) {
        let (succ, fail): (Vec<u64>, Vec<u64>) = counts.into_iter().unzip();
        let stats = ClickStats::from_counts(4, 3, succ, fail).unwrap();
        let config = MhConfig { c, m: 3, warm_start: true };
        let mut rng = RngStream::new(seed);
        let first = mh_sample(&stats, &config, t, None, &mut rng).unwrap();
        let second = mh_sample(&stats, &config, t + 1, Some(&first), &mut rng).unwrap();
        for s in [&first, &second] {
            prop_assert_eq!(s.kappa()[0], 1.0);
            prop_assert!(s.theta().iter().chain(s.kappa()).all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn trace_csv_roundtrips_in_any_row_order(
        finals in prop::collection::vec(0.0f64..1e4, 1..6),
        rotate in 0usize..100,
    ) {
        let traces: Vec<RegretTrace> = finals
            .iter()
            .enumerate()
            .map(|(k, &r)| RegretTrace {
                policy: if k % 2 == 0 { "uniform".into() } else { "pb-mhb(c=100,m=1,warm)".into() },
                seed: k as u64,
                points: vec![(1, r / 3.0), (10, r / 2.0), (100, r)],
            })
            .collect();
        let mut bytes = Vec::new();
        write_traces(&traces, &mut bytes).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let header = lines.remove(0);
        let k = rotate % lines.len();
        lines.rotate_left(k);
        lines.reverse();
        let shuffled = format!("{header}\n{}\n", lines.join("\n"));

        let mut back = read_traces(shuffled.as_bytes()).unwrap();
        back.sort_by_key(|t| t.seed);
        prop_assert_eq!(back, traces);
    }
}

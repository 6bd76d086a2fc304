//! Every policy against the "close to real data" setting.
//!
//! ```bash
//! cargo run --release -p pbm-lab --example compare_policies -- 10000 20
//! ```

use pbm_lab::bundled;
use pbm_lab::experiment::{
    aggregate_traces, final_rows, run_experiment_timed, timing_report, EnvSet, ExperimentConfig,
};
use pbm_lab::policies::{KappaMode, PolicySpec};
use pbm_lab::sampler::MhConfig;

fn main() -> pbm_lab::Result<()> {
    let mut args = std::env::args().skip(1);
    let horizon = args.next().and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let n_runs = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);

    let config = ExperimentConfig {
        name: Some("compare".into()),
        env: EnvSet::Single(bundled::simulated_std()),
        policies: vec![
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
            PolicySpec::PbmTs {
                mode: KappaMode::Greedy,
                kappa: None,
            },
            PolicySpec::EpsGreedy { c: 1000.0 },
            PolicySpec::Greedy,
            PolicySpec::Uniform,
            PolicySpec::Oracle { params: None },
        ],
        horizon,
        n_runs,
        base_seed: 0,
        checkpoints: None,
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let run = run_experiment_timed(&config, threads)?;
    let summary = aggregate_traces(&run.traces)?;
    let timings = timing_report(&run.timings);

    println!(
        "{:<26} {:>12} {:>10} {:>10} {:>10} {:>10}",
        "policy", "mean", "std", "median", "q95", "ms/trial"
    );
    for (row, timing) in final_rows(&summary).into_iter().zip(&timings) {
        println!(
            "{:<26} {:>12.1} {:>10.1} {:>10.1} {:>10.1} {:>10.4}",
            row.policy,
            row.mean,
            row.std,
            row.q50,
            row.q95,
            timing.ms_per_trial()
        );
    }
    Ok(())
}

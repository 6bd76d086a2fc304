//! Spread of final regret over many games: PB-MHB against BC-MPTS with an
//! SVD-estimated `kappa`.

use pbm_lab::bundled;
use pbm_lab::experiment::{aggregate_traces, final_rows, run_experiment, EnvSet, ExperimentConfig};
use pbm_lab::policies::{KappaMode, PolicySpec};
use pbm_lab::sampler::MhConfig;

fn main() -> pbm_lab::Result<()> {
    let config = ExperimentConfig {
        name: None,
        env: EnvSet::Single(bundled::simulated_std()),
        policies: vec![
            PolicySpec::pb_mhb(MhConfig::default()),
            PolicySpec::BcMpts {
                mode: KappaMode::Greedy,
                kappa: None,
            },
            PolicySpec::Greedy,
        ],
        horizon: 5_000,
        n_runs: 40,
        base_seed: 0,
        checkpoints: Some(vec![5_000]),
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let summary = aggregate_traces(&run_experiment(&config, threads)?)?;
    println!(
        "{:<26} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "policy", "min", "q25", "median", "q95", "max"
    );
    for r in final_rows(&summary) {
        println!(
            "{:<26} {:>8.1} {:>8.1} {:>8.1} {:>8.1} {:>8.1}",
            r.policy, r.min, r.q25, r.q50, r.q95, r.max
        );
    }
    Ok(())
}

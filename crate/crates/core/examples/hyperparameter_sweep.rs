//! Final regret of PB-MHB over a grid of step widths `c`.

use pbm_lab::bundled;
use pbm_lab::experiment::{aggregate_traces, final_rows, run_experiment, EnvSet, ExperimentConfig};
use pbm_lab::policies::PolicySpec;
use pbm_lab::sampler::MhConfig;

fn main() -> pbm_lab::Result<()> {
    let policies = (0..=4)
        .map(|k| {
            PolicySpec::pb_mhb(MhConfig {
                c: 10f64.powi(k),
                m: 1,
                warm_start: true,
            })
        })
        .collect();
    let config = ExperimentConfig {
        name: None,
        env: EnvSet::Single(bundled::simulated_std()),
        policies,
        horizon: 5_000,
        n_runs: 8,
        base_seed: 0,
        checkpoints: None,
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let summary = aggregate_traces(&run_experiment(&config, threads)?)?;
    for row in final_rows(&summary) {
        println!(
            "{:<28} mean {:>8.1}  q05 {:>8.1}  q95 {:>8.1}",
            row.policy, row.mean, row.q05, row.q95
        );
    }
    Ok(())
}

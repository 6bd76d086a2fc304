//! One warm sweep against several cold sweeps per recommendation.

use pbm_lab::bundled;
use pbm_lab::experiment::{run_experiment_timed, timing_report, EnvSet, ExperimentConfig};
use pbm_lab::policies::PolicySpec;
use pbm_lab::sampler::MhConfig;

fn main() -> pbm_lab::Result<()> {
    let mut policies = vec![PolicySpec::pb_mhb(MhConfig::default())];
    for m in [1, 3, 10] {
        policies.push(PolicySpec::pb_mhb(MhConfig {
            c: 100.0,
            m,
            warm_start: false,
        }));
    }
    let config = ExperimentConfig {
        name: Some("warm-start".into()),
        env: EnvSet::Single(bundled::simulated_std()),
        policies,
        horizon: 5_000,
        n_runs: 8,
        base_seed: 0,
        checkpoints: Some(vec![5_000]),
    };
    let run = run_experiment_timed(&config, 1)?;
    for timing in timing_report(&run.timings) {
        let finals: Vec<f64> = run
            .traces
            .iter()
            .filter(|t| t.policy == timing.policy)
            .map(|t| t.final_regret())
            .collect();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        println!(
            "{:<28} regret {mean:>8.1}  {:.4} ms/trial",
            timing.policy,
            timing.ms_per_trial()
        );
    }
    Ok(())
}

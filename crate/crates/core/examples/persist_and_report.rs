//! Write traces and a summary to disk, then rebuild the summary from the
//! traces file alone.

use pbm_lab::bundled;
use pbm_lab::experiment::{
    aggregate_traces, load_traces, persist_summary, persist_traces, run_experiment, ExperimentConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::from_json(&format!(
        r#"{{"name": "persist", "env": {}, "policies": [{{"policy": "pb-mhb"}}, {{"policy": "eps-greedy", "c": 100}}, {{"policy": "uniform"}}], "horizon": 2000, "n_runs": 4}}"#,
        serde_json::to_string(&bundled::simulated_big())?
    ))?;
    let traces = run_experiment(&config, 2)?;

    let dir = std::env::temp_dir().join("pbm-lab-persist");
    std::fs::create_dir_all(&dir)?;
    persist_traces(&traces, dir.join("traces.csv"))?;
    persist_summary(&aggregate_traces(&traces)?, dir.join("summary.csv"))?;

    let reloaded = load_traces(dir.join("traces.csv"))?;
    assert_eq!(aggregate_traces(&reloaded)?, aggregate_traces(&traces)?);
    println!(
        "{} traces of {:?} written to {}",
        reloaded.len(),
        config.labels(),
        dir.display()
    );
    Ok(())
}

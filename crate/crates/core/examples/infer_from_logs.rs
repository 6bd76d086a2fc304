//! Estimate per-query PBM parameters from a click log by rank-1 SVD.

use pbm_lab::inference::{
    filter_click_logs, parse_click_log, svd_rank1_extract, synthesize_click_log, write_click_log, LogFilter,
};
use pbm_lab::{bundled, RngStream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = RngStream::new(3);
    let mut records = Vec::new();
    for (q, params) in bundled::behavioral().iter().enumerate().take(3) {
        records.extend(synthesize_click_log(&format!("q{}", q + 1), params, 5_000, &mut rng));
    }

    // Round-trip through the tab-separated format the CLI reads.
    let mut log = Vec::new();
    write_click_log(&records, &mut log)?;
    let parsed = parse_click_log(log.as_slice())?;

    let queries = filter_click_logs(&parsed, &LogFilter::default());
    for ((query, qm), truth) in queries.iter().zip(bundled::behavioral()) {
        let est = svd_rank1_extract(&qm.matrix)?;
        let err = est
            .theta()
            .iter()
            .zip(truth.theta())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "{query}: {} ads, kappa {:?}, max theta error {err:.3}",
            qm.ads.len(),
            est.kappa().iter().map(|k| format!("{k:.3}")).collect::<Vec<_>>()
        );
    }
    Ok(())
}

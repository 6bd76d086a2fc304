//! Sample the PBM posterior with Metropolis-Hastings-within-Gibbs and compare
//! warm and cold chains.

use pbm_lab::sampler::{mh_sample, mh_sample_observed, JointSample, MhConfig};
use pbm_lab::{bundled, ClickStats, RngStream};

fn main() -> pbm_lab::Result<()> {
    let env = bundled::simulated_small();
    let mut rng = RngStream::new(1);

    // Ten thousand uniformly random displays.
    let mut stats = ClickStats::new(env.n_items(), env.n_positions());
    let mut items: Vec<usize> = (0..env.n_items()).collect();
    for _ in 0..10_000 {
        rand::seq::SliceRandom::shuffle(items.as_mut_slice(), &mut rng);
        let rec = pbm_lab::Recommendation::new(items[..env.n_positions()].to_vec())?;
        let rewards = env.draw_rewards(&rec, &mut rng)?;
        stats.update(&rec, &rewards)?;
    }

    let t = stats.total() / env.n_positions() as u64;
    let config = MhConfig {
        c: 100.0,
        m: 1,
        warm_start: true,
    };
    let mut state = JointSample::uniform(env.n_items(), env.n_positions(), &mut rng);
    let mut accepted = 0;
    let mut steps = 0;
    let draws = 2_000;
    let mut mean_theta = vec![0.0; env.n_items()];
    for k in 0..(draws * 2) {
        state = mh_sample_observed(&stats, &config, t, Some(&state), &mut rng, |s| {
            steps += 1;
            accepted += s.accepted as usize;
        })?;
        if k >= draws {
            for (m, x) in mean_theta.iter_mut().zip(state.theta()) {
                *m += x / draws as f64;
            }
        }
    }
    println!("warm chain at t={t}: acceptance {:.3}", accepted as f64 / steps as f64);
    println!("{:>5} {:>8} {:>10}", "item", "theta", "posterior");
    for (i, (truth, est)) in env.theta().iter().zip(&mean_theta).enumerate() {
        println!("{i:>5} {truth:>8.3} {est:>10.3}");
    }
    println!(
        "kappa of the last draw {:?}",
        state.kappa().iter().map(|k| format!("{k:.2}")).collect::<Vec<_>>()
    );

    // A cold chain of the same length starts over at every call.
    let cold = MhConfig {
        warm_start: false,
        m: 1,
        ..config
    };
    let one = mh_sample(&stats, &cold, t, None, &mut rng)?;
    println!("one cold sweep leaves theta[0] at {:.3}", one.theta()[0]);
    Ok(())
}

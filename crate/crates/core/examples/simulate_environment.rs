//! Draw clicks from a PBM and compare a few recommendations against the
//! oracle.

use pbm_lab::{bundled, ClickStats, Recommendation, RngStream};

fn main() -> pbm_lab::Result<()> {
    let env = bundled::simulated_std();
    let best = env.best_recommendation();
    println!("oracle {:?}, expected clicks {:.4}", best.items(), env.optimal_reward());

    let mut rng = RngStream::new(7);
    let mut stats = ClickStats::new(env.n_items(), env.n_positions());
    for candidate in [best.items().to_vec(), vec![9, 8, 7, 6, 5], vec![4, 3, 2, 1, 0]] {
        let rec = Recommendation::new(candidate)?;
        let rounds = 20_000;
        let mut clicks = 0;
        for _ in 0..rounds {
            let rewards = env.draw_rewards(&rec, &mut rng)?;
            clicks += rewards.clicks();
            stats.update(&rec, &rewards)?;
        }
        println!(
            "{:?}: expected {:.4}, simulated {:.4} clicks per round",
            rec.items(),
            env.expected_reward(&rec)?,
            clicks as f64 / rounds as f64
        );
    }
    println!("{} displays recorded", stats.total());
    Ok(())
}

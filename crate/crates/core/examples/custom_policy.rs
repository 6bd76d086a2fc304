//! Plug a hand-written policy into the game loop.

use pbm_lab::experiment::{default_checkpoints, play};
use pbm_lab::policies::Policy;
use pbm_lab::{bundled, ClickStats, Recommendation, RewardVector, RngStream};

/// Shows the items with the best raw click-through rate, after one
/// exploration pass in round-robin order.
struct FollowTheLeader {
    stats: ClickStats,
}

impl Policy for FollowTheLeader {
    fn choose(&mut self, t: u64, _rng: &mut RngStream) -> pbm_lab::Result<Recommendation> {
        let (n, l) = (self.stats.n_items(), self.stats.n_positions());
        if t as usize <= n {
            return Recommendation::new((0..l).map(|k| (t as usize - 1 + k) % n).collect());
        }
        let ctr = |i: usize| {
            let (s, d): (u64, u64) = (0..l)
                .map(|p| (self.stats.successes(i, p), self.stats.displays(i, p)))
                .fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            s as f64 / d.max(1) as f64
        };
        let mut items: Vec<usize> = (0..n).collect();
        items.sort_by(|&a, &b| ctr(b).total_cmp(&ctr(a)));
        Recommendation::new(items[..l].to_vec())
    }

    fn feedback(&mut self, rec: &Recommendation, rewards: &RewardVector) -> pbm_lab::Result<()> {
        self.stats.update(rec, rewards)
    }
}

fn main() -> pbm_lab::Result<()> {
    let env = bundled::simulated_std();
    let horizon = 5_000;
    for seed in 0..3 {
        let mut policy = FollowTheLeader {
            stats: ClickStats::new(env.n_items(), env.n_positions()),
        };
        let trace = play(
            &env,
            &mut policy,
            "follow-the-leader",
            horizon,
            seed,
            &default_checkpoints(horizon),
        )?;
        println!("seed {seed}: regret {:.1}", trace.final_regret());
    }
    Ok(())
}

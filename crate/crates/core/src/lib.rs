//! # pbm-lab
//!
//! Multiple-play bandits under the position-based click model (PBM). A user
//! examines position `l` with probability `kappa[l]` and clicks the item
//! shown there with probability `theta[item]`; a recommender picks `L`
//! distinct items per round and observes one click bit per position.
//!
//! The crate provides:
//!
//! * [`pbm`]: the click environment, expected rewards and the oracle.
//! * [`sampler`]: Metropolis-Hastings sampling of `(theta, kappa)` from the
//!   exact posterior with truncated Gaussian random-walk steps.
//! * [`policies`]: PB-MHB (Thompson sampling on that sampler) and the
//!   BC-MPTS, PBM-TS, epsilon-greedy, greedy, uniform and oracle baselines.
//! * [`inference`]: rank-1 SVD extraction of parameters and the click-log
//!   filtering pipeline.
//! * [`experiment`]: replicated games, cumulative pseudo-regret traces,
//!   aggregation and CSV persistence.
//! * [`cli`]: the `pbm-lab` command line.
//!
//! ```
//! use pbm_lab::{bundled, experiment, policies::PolicySpec, sampler::MhConfig};
//!
//! let env = bundled::simulated_std();
//! let spec = PolicySpec::pb_mhb(MhConfig::default());
//! let trace = experiment::run_game(&env, &spec, 200, 7, &[100, 200]).unwrap();
//! assert!(trace.final_regret() >= 0.0);
//! ```

pub mod bundled;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod pbm;
pub mod policies;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use pbm::{ClickStats, PbmParams, Recommendation, RewardVector};
pub use rng::RngStream;

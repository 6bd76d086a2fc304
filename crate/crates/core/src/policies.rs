//! Recommendation policies.
//!
//! Every policy alternates [`Policy::choose`] and [`Policy::feedback`]. The
//! Thompson-style policies differ in how they sample `theta`:
//!
//! * PB-MHB samples `(theta, kappa)` jointly from the exact posterior with
//!   Metropolis-Hastings and learns `kappa` online.
//! * BC-MPTS draws each `theta_i` from a Beta posterior built on the
//!   pseudo-count of examinations implied by `kappa`.
//! * PBM-TS proposes from the Beta posterior of the most-used position and
//!   corrects with rejection sampling toward the exact `theta_i`
//!   conditional.
//!
//! The last two need `kappa`, either the true one (semi-oracle) or an SVD
//! estimate refreshed every time-stamp (greedy).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{click_matrix, svd_rank1_extract};
use crate::pbm::{assign_by_rank, ClickStats, PbmParams, Recommendation, RewardVector};
use crate::rng::RngStream;
use crate::sampler::{mh_sample, JointSample, MhConfig};

/// Rejection attempts per item before PBM-TS gives up and keeps the last
/// in-range proposal.
pub const PBMTS_MAX_ATTEMPTS: usize = 1_000;

/// Grid size used to bound the PBM-TS acceptance ratio.
pub const PBMTS_ENVELOPE_GRID: usize = 1_024;

/// An online recommender.
pub trait Policy: Send {
    /// Recommendation for time-stamp `t` (starting at 1).
    fn choose(&mut self, t: u64, rng: &mut RngStream) -> Result<Recommendation>;

    /// Feedback for the recommendation returned by the last `choose`.
    fn feedback(&mut self, rec: &Recommendation, rewards: &RewardVector) -> Result<()>;
}

/// Source of `kappa` for the policies that do not learn it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaMode {
    /// The true `kappa` of the environment is given.
    SemiOracle,
    /// `kappa` is re-estimated by rank-1 SVD at each time-stamp.
    Greedy,
}

fn semi_oracle() -> KappaMode {
    KappaMode::SemiOracle
}

fn default_c() -> f64 {
    MhConfig::default().c
}

fn default_m() -> usize {
    MhConfig::default().m
}

fn default_warm() -> bool {
    MhConfig::default().warm_start
}

/// Declarative description of a policy, as found in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    PbMhb {
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_m")]
        m: usize,
        #[serde(default = "default_warm")]
        warm_start: bool,
    },
    BcMpts {
        #[serde(default = "semi_oracle")]
        mode: KappaMode,
        /// Overrides the environment's `kappa` in semi-oracle mode.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<Vec<f64>>,
    },
    PbmTs {
        #[serde(default = "semi_oracle")]
        mode: KappaMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<Vec<f64>>,
    },
    EpsGreedy {
        c: f64,
    },
    Greedy,
    Uniform,
    Oracle {
        /// Overrides the environment's parameters.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        params: Option<PbmParams>,
    },
}

impl PolicySpec {
    pub fn pb_mhb(config: MhConfig) -> Self {
        PolicySpec::PbMhb {
            c: config.c,
            m: config.m,
            warm_start: config.warm_start,
        }
    }

    /// Short human-readable name, unique for distinct hyper-parameters.
    pub fn label(&self) -> String {
        fn mode(m: &KappaMode) -> &'static str {
            match m {
                KappaMode::SemiOracle => "semi-oracle",
                KappaMode::Greedy => "greedy",
            }
        }
        match self {
            PolicySpec::PbMhb { c, m, warm_start } => {
                format!("pb-mhb(c={c},m={m},{})", if *warm_start { "warm" } else { "cold" })
            }
            PolicySpec::BcMpts { mode: md, .. } => format!("bc-mpts({})", mode(md)),
            PolicySpec::PbmTs { mode: md, .. } => format!("pbm-ts({})", mode(md)),
            PolicySpec::EpsGreedy { c } => format!("eps-greedy(c={c})"),
            PolicySpec::Greedy => "greedy".into(),
            PolicySpec::Uniform => "uniform".into(),
            PolicySpec::Oracle { .. } => "oracle".into(),
        }
    }

    /// Instantiates the policy for `env`. Semi-oracle and oracle variants
    /// read the environment's true parameters unless overridden.
    pub fn build(&self, env: &PbmParams) -> Result<Box<dyn Policy>> {
        let (n, l) = (env.n_items(), env.n_positions());
        let kappa_source = |mode: &KappaMode, kappa: &Option<Vec<f64>>| -> Result<KappaSource> {
            match mode {
                KappaMode::Greedy => Ok(KappaSource::Inferred),
                KappaMode::SemiOracle => {
                    let k = kappa.clone().unwrap_or_else(|| env.kappa().to_vec());
                    if k.len() != l || k.iter().any(|x| !(0.0..=1.0).contains(x)) {
                        return Err(Error::InvalidConfig(format!(
                            "semi-oracle kappa must hold {l} values in [0,1]"
                        )));
                    }
                    Ok(KappaSource::Fixed(k))
                }
            }
        };
        Ok(match self {
            PolicySpec::PbMhb { c, m, warm_start } => Box::new(PbMhbPolicy::new(
                n,
                l,
                MhConfig {
                    c: *c,
                    m: *m,
                    warm_start: *warm_start,
                },
            )?),
            PolicySpec::BcMpts { mode, kappa } => Box::new(BcMptsPolicy::new(n, l, kappa_source(mode, kappa)?)),
            PolicySpec::PbmTs { mode, kappa } => Box::new(PbmTsPolicy::new(n, l, kappa_source(mode, kappa)?)),
            PolicySpec::EpsGreedy { c } => Box::new(EpsGreedyPolicy::new(n, l, *c)?),
            PolicySpec::Greedy => Box::new(GreedyPolicy::new(n, l)),
            PolicySpec::Uniform => Box::new(UniformPolicy::new(n, l)),
            PolicySpec::Oracle { params } => {
                let p = params.as_ref().unwrap_or(env);
                if p.n_items() != n || p.n_positions() != l {
                    return Err(Error::DimensionMismatch(
                        "oracle params do not match the environment".into(),
                    ));
                }
                Box::new(OraclePolicy::new(p))
            }
        })
    }
}

/// Rank-1 SVD estimate of the parameters from smoothed click rates.
pub fn greedy_estimate(stats: &ClickStats) -> Result<PbmParams> {
    svd_rank1_extract(&click_matrix(stats))
}

/// Where BC-MPTS and PBM-TS get `kappa` from.
#[derive(Debug, Clone, PartialEq)]
pub enum KappaSource {
    Fixed(Vec<f64>),
    Inferred,
}

impl KappaSource {
    fn current(&self, stats: &ClickStats) -> Result<Vec<f64>> {
        match self {
            KappaSource::Fixed(k) => Ok(k.clone()),
            KappaSource::Inferred => Ok(greedy_estimate(stats)?.kappa().to_vec()),
        }
    }
}

/// Thompson sampling with a Metropolis-Hastings posterior sampler.
#[derive(Debug, Clone)]
pub struct PbMhbPolicy {
    stats: ClickStats,
    config: MhConfig,
    last_sample: Option<JointSample>,
}

impl PbMhbPolicy {
    pub fn new(n_items: usize, n_positions: usize, config: MhConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            stats: ClickStats::new(n_items, n_positions),
            config,
            last_sample: None,
        })
    }

    pub fn stats(&self) -> &ClickStats {
        &self.stats
    }

    /// Sample used for the most recent recommendation.
    pub fn last_sample(&self) -> Option<&JointSample> {
        self.last_sample.as_ref()
    }
}

impl Policy for PbMhbPolicy {
    fn choose(&mut self, t: u64, rng: &mut RngStream) -> Result<Recommendation> {
        let start = if self.config.warm_start {
            self.last_sample.as_ref()
        } else {
            None
        };
        let sample = mh_sample(&self.stats, &self.config, t, start, rng)?;
        let rec = assign_by_rank(sample.theta(), sample.kappa(), Some(rng));
        self.last_sample = Some(sample);
        Ok(rec)
    }

    fn feedback(&mut self, rec: &Recommendation, rewards: &RewardVector) -> Result<()> {
        self.stats.update(rec, rewards)
    }
}

/// Beta shape parameters used by BC-MPTS for `item`.
pub fn bcmpts_shape(stats: &ClickStats, kappa: &[f64], item: usize) -> (f64, f64) {
    let clicks: u64 = (0..stats.n_positions()).map(|l| stats.successes(item, l)).sum();
    let pseudo: f64 = kappa
        .iter()
        .enumerate()
        .map(|(l, k)| k * stats.displays(item, l) as f64)
        .sum();
    let alpha = clicks as f64 + 1.0;
    let beta = (pseudo - clicks as f64 + 1.0).max(1.0);
    (alpha, beta)
}

/// BC-MPTS: Beta posterior on examination pseudo-counts.
#[derive(Debug, Clone)]
pub struct BcMptsPolicy {
    stats: ClickStats,
    kappa: KappaSource,
}

impl BcMptsPolicy {
    pub fn new(n_items: usize, n_positions: usize, kappa: KappaSource) -> Self {
        Self {
            stats: ClickStats::new(n_items, n_positions),
            kappa,
        }
    }
}

impl Policy for BcMptsPolicy {
    fn choose(&mut self, _t: u64, rng: &mut RngStream) -> Result<Recommendation> {
        let kappa = self.kappa.current(&self.stats)?;
        let theta: Vec<f64> = (0..self.stats.n_items())
            .map(|i| {
                let (a, b) = bcmpts_shape(&self.stats, &kappa, i);
                Beta::new(a, b).expect("shape parameters are at least 1").sample(rng)
            })
            .collect();
        Ok(assign_by_rank(&theta, &kappa, Some(rng)))
    }

    fn feedback(&mut self, rec: &Recommendation, rewards: &RewardVector) -> Result<()> {
        self.stats.update(rec, rewards)
    }
}

/// Position with the most displays of `item`; ties go to the lowest.
pub fn most_displayed_position(stats: &ClickStats, item: usize) -> usize {
    (0..stats.n_positions())
        .rev()
        .max_by_key(|&l| stats.displays(item, l))
        .unwrap_or(0)
}

/// Log of the rejection weight `target / proposal` up to a constant: the
/// conditional terms of every position other than `l_max`.
fn pbmts_log_weight(stats: &ClickStats, kappa: &[f64], item: usize, l_max: usize, x: f64) -> f64 {
    kappa
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != l_max)
        .map(|(l, &k)| {
            let (s, f) = (stats.successes(item, l), stats.failures(item, l));
            let mut acc = 0.0;
            if s > 0 {
                acc += s as f64 * x.ln();
            }
            if f > 0 {
                acc += f as f64 * (-x * k).ln_1p();
            }
            acc
        })
        .sum()
}

/// Outcome of one PBM-TS rejection-sampling draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbmTsDraw {
    pub value: f64,
    pub attempts: usize,
    pub capped: bool,
}

/// Draws `theta_item` from its conditional given `kappa` by rejection
/// sampling from a scaled Beta proposal.
pub fn pbmts_draw(stats: &ClickStats, kappa: &[f64], item: usize, rng: &mut RngStream) -> PbmTsDraw {
    let l_max = most_displayed_position(stats, item);
    let k_max = kappa[l_max];
    let proposal = Beta::new(
        stats.successes(item, l_max) as f64 + 1.0,
        stats.failures(item, l_max) as f64 + 1.0,
    )
    .expect("Beta shapes are at least 1");

    let envelope = (1..=PBMTS_ENVELOPE_GRID)
        .map(|k| pbmts_log_weight(stats, kappa, item, l_max, k as f64 / PBMTS_ENVELOPE_GRID as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    let flat = kappa.len() == 1 || !envelope.is_finite();

    let mut last_in_range = None;
    for attempt in 1..=PBMTS_MAX_ATTEMPTS {
        let x = proposal.sample(rng) / k_max;
        if !(x > 0.0 && x <= 1.0) {
            continue;
        }
        last_in_range = Some(x);
        if flat {
            return PbmTsDraw {
                value: x,
                attempts: attempt,
                capped: false,
            };
        }
        let log_accept = (pbmts_log_weight(stats, kappa, item, l_max, x) - envelope).min(0.0);
        let u: f64 = rng.random();
        if u.ln() < log_accept {
            return PbmTsDraw {
                value: x,
                attempts: attempt,
                capped: false,
            };
        }
    }
    PbmTsDraw {
        value: last_in_range.unwrap_or(1.0),
        attempts: PBMTS_MAX_ATTEMPTS,
        capped: true,
    }
}

/// PBM-TS: Beta proposal corrected by rejection sampling.
#[derive(Debug, Clone)]
pub struct PbmTsPolicy {
    stats: ClickStats,
    kappa: KappaSource,
    cap_hits: u64,
}

impl PbmTsPolicy {
    pub fn new(n_items: usize, n_positions: usize, kappa: KappaSource) -> Self {
        Self {
            stats: ClickStats::new(n_items, n_positions),
            kappa,
            cap_hits: 0,
        }
    }

    /// Number of draws that exhausted the rejection budget.
    pub fn cap_hits(&self) -> u64 {
        self.cap_hits
    }
}

impl Policy for PbmTsPolicy {
    fn choose(&mut self, t: u64, rng: &mut RngStream) -> Result<Recommendation> {
        let kappa = self.kappa.current(&self.stats)?;
        let mut theta = Vec::with_capacity(self.stats.n_items());
        for i in 0..self.stats.n_items() {
            let draw = pbmts_draw(&self.stats, &kappa, i, rng);
            if draw.capped {
                self.cap_hits += 1;
                log::debug!("pbm-ts rejection cap hit for item {i} at t={t}");
            }
            theta.push(draw.value);
        }
        Ok(assign_by_rank(&theta, &kappa, Some(rng)))
    }

    fn feedback(&mut self, rec: &Recommendation, rewards: &RewardVector) -> Result<()> {
        self.stats.update(rec, rewards)
    }
}

/// Replaces each slot of `rec` independently with probability `epsilon`.
///
/// Kept slots stay; replaced slots are filled in order, each with an item
/// drawn uniformly among those not kept and not already placed. Returns the
/// new recommendation and which slots were replaced.
pub fn perturb_recommendation(
    rec: &Recommendation,
    epsilon: f64,
    n_items: usize,
    rng: &mut RngStream,
) -> (Recommendation, Vec<bool>) {
    let replaced: Vec<bool> = (0..rec.len()).map(|_| rng.random::<f64>() < epsilon).collect();
    let mut out = rec.clone();
    if !replaced.iter().any(|&r| r) {
        return (out, replaced);
    }
    let mut taken = vec![false; n_items];
    for (&item, &r) in rec.items().iter().zip(&replaced) {
        if !r {
            taken[item] = true;
        }
    }
    let mut pool: Vec<usize> = (0..n_items).filter(|&i| !taken[i]).collect();
    for (slot, _) in replaced.iter().enumerate().filter(|(_, &r)| r) {
        let k = rng.random_range(0..pool.len());
        out.items_mut()[slot] = pool.swap_remove(k);
    }
    (out, replaced)
}

/// Greedy recommendation with per-slot random replacement at rate
/// `min(1, c / t)`.
#[derive(Debug, Clone)]
pub struct EpsGreedyPolicy {
    stats: ClickStats,
    c: f64,
}

impl EpsGreedyPolicy {
    pub fn new(n_items: usize, n_positions: usize, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "eps-greedy c must be nonnegative, got {c}"
            )));
        }
        Ok(Self {
            stats: ClickStats::new(n_items, n_positions),
            c,
        })
    }

    pub fn epsilon(&self, t: u64) -> f64 {
        (self.c / t as f64).min(1.0)
    }
}

impl Policy for EpsGreedyPolicy {
    fn choose(&mut self, t: u64, rng: &mut RngStream) -> Result<Recommendation> {
        let greedy = greedy_estimate(&self.stats)?.best_recommendation();
        Ok(perturb_recommendation(&greedy, self.epsilon(t), self.stats.n_items(), rng).0)
    }

    fn feedback(&mut self, rec: &Recommendation, rewards: &RewardVector) -> Result<()> {
        self.stats.update(rec, rewards)
    }
}

/// Best recommendation under the current SVD estimate.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    stats: ClickStats,
}

impl GreedyPolicy {
    pub fn new(n_items: usize, n_positions: usize) -> Self {
        Self {
            stats: ClickStats::new(n_items, n_positions),
        }
    }

    pub fn with_stats(stats: ClickStats) -> Self {
        Self { stats }
    }
}

impl Policy for GreedyPolicy {
    fn choose(&mut self, _t: u64, _rng: &mut RngStream) -> Result<Recommendation> {
        Ok(greedy_estimate(&self.stats)?.best_recommendation())
    }

    fn feedback(&mut self, rec: &Recommendation, rewards: &RewardVector) -> Result<()> {
        self.stats.update(rec, rewards)
    }
}

/// Uniformly random ordered subset at every time-stamp.
#[derive(Debug, Clone)]
pub struct UniformPolicy {
    n_items: usize,
    n_positions: usize,
}

impl UniformPolicy {
    pub fn new(n_items: usize, n_positions: usize) -> Self {
        Self { n_items, n_positions }
    }
}

impl Policy for UniformPolicy {
    fn choose(&mut self, _t: u64, rng: &mut RngStream) -> Result<Recommendation> {
        let mut items: Vec<usize> = (0..self.n_items).collect();
        let (picked, _) = items.partial_shuffle(rng, self.n_positions);
        Ok(Recommendation::from_distinct(picked.to_vec()))
    }

    fn feedback(&mut self, _rec: &Recommendation, _rewards: &RewardVector) -> Result<()> {
        Ok(())
    }
}

/// Always plays the best recommendation of known parameters.
#[derive(Debug, Clone)]
pub struct OraclePolicy {
    rec: Recommendation,
}

impl OraclePolicy {
    pub fn new(params: &PbmParams) -> Self {
        Self {
            rec: params.best_recommendation(),
        }
    }
}

impl Policy for OraclePolicy {
    fn choose(&mut self, _t: u64, _rng: &mut RngStream) -> Result<Recommendation> {
        Ok(self.rec.clone())
    }

    fn feedback(&mut self, _rec: &Recommendation, _rewards: &RewardVector) -> Result<()> {
        Ok(())
    }
}

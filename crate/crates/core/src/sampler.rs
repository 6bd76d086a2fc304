//! Metropolis-Hastings sampling of `(theta, kappa)` from the exact PBM
//! posterior under a uniform prior.
//!
//! The posterior is proportional to
//! `prod_{i,l} (theta_i kappa_l)^S_il (1 - theta_i kappa_l)^F_il`. Each sweep
//! updates every `theta_i`, then every `kappa_l` except the pinned `kappa_0`,
//! with a Gaussian random-walk candidate truncated to `[0, 1]`. Truncation
//! makes the proposal asymmetric, so the acceptance ratio carries the
//! correction `dPhi(current) / dPhi(candidate)` where `dPhi(x)` is the mass
//! of `N(x, sigma)` on `[0, 1]`.
//!
//! All densities are handled in log space.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::pbm::{ClickStats, PbmParams};
use crate::rng::RngStream;

/// Redraws allowed before the truncated step falls back to a uniform draw.
pub const MAX_TRUNCATION_REDRAWS: usize = 1_000;

/// Sampler hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MhConfig {
    /// Random-walk width numerator: the step is `c / sqrt(t)`.
    pub c: f64,
    /// Sweeps per recommendation.
    pub m: usize,
    /// Start each chain from the previous sample instead of a uniform draw.
    pub warm_start: bool,
}

impl Default for MhConfig {
    fn default() -> Self {
        Self {
            c: 100.0,
            m: 1,
            warm_start: true,
        }
    }
}

impl MhConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!("c must be positive, got {}", self.c)));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        Ok(())
    }

    /// Random-walk standard deviation at time-stamp `t`.
    pub fn step_width(&self, t: u64) -> f64 {
        self.c / (t as f64).sqrt()
    }
}

/// A draw of `(theta, kappa)`; `kappa[0]` is always 1.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    theta: Vec<f64>,
    kappa: Vec<f64>,
}

impl JointSample {
    pub fn new(theta: Vec<f64>, kappa: Vec<f64>) -> Result<Self> {
        let p = PbmParams::new(theta, kappa)?;
        Ok(Self {
            theta: p.theta().to_vec(),
            kappa: p.kappa().to_vec(),
        })
    }

    /// Independent uniform coordinates, `kappa[0]` forced to 1.
    pub fn uniform(n_items: usize, n_positions: usize, rng: &mut RngStream) -> Self {
        let theta = (0..n_items).map(|_| rng.random::<f64>()).collect();
        let kappa = std::iter::once(1.0)
            .chain((1..n_positions).map(|_| rng.random::<f64>()))
            .collect();
        Self { theta, kappa }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn into_params(self) -> PbmParams {
        PbmParams::new(self.theta, self.kappa).expect("joint sample keeps params invariants")
    }
}

/// `S log(x) + F log(1 - x k)` with the convention `0 * log(0) = 0`.
#[inline]
fn cell_log_term(s: u64, f: u64, x: f64, k: f64) -> f64 {
    let mut acc = 0.0;
    if s > 0 {
        acc += s as f64 * x.ln();
    }
    if f > 0 {
        acc += f as f64 * (-x * k).ln_1p();
    }
    acc
}

fn check_unit(value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("value {value} outside [0,1]")))
    }
}

fn check_dims(sample: &JointSample, stats: &ClickStats) -> Result<()> {
    if sample.theta.len() != stats.n_items() || sample.kappa.len() != stats.n_positions() {
        return Err(Error::DimensionMismatch(format!(
            "sample is {}x{}, stats are {}x{}",
            sample.theta.len(),
            sample.kappa.len(),
            stats.n_items(),
            stats.n_positions()
        )));
    }
    Ok(())
}

#[inline]
fn theta_target(item: usize, value: f64, kappa: &[f64], stats: &ClickStats) -> f64 {
    kappa
        .iter()
        .enumerate()
        .map(|(l, &k)| cell_log_term(stats.successes(item, l), stats.failures(item, l), value, k))
        .sum()
}

#[inline]
fn kappa_target(position: usize, value: f64, theta: &[f64], stats: &ClickStats) -> f64 {
    theta
        .iter()
        .enumerate()
        .map(|(i, &th)| cell_log_term(stats.successes(i, position), stats.failures(i, position), value, th))
        .sum()
}

/// Log of the conditional density of `theta[item]` given every other
/// coordinate, up to an additive constant. `-inf` outside the support.
pub fn log_conditional_theta(item: usize, value: f64, sample: &JointSample, stats: &ClickStats) -> Result<f64> {
    check_unit(value)?;
    check_dims(sample, stats)?;
    if item >= stats.n_items() {
        return Err(Error::DimensionMismatch(format!("item {item} out of range")));
    }
    Ok(theta_target(item, value, &sample.kappa, stats))
}

/// Log of the conditional density of `kappa[position]`; position 0 is
/// pinned and rejected.
pub fn log_conditional_kappa(position: usize, value: f64, sample: &JointSample, stats: &ClickStats) -> Result<f64> {
    check_unit(value)?;
    check_dims(sample, stats)?;
    if position == 0 {
        return Err(Error::InvalidParams("kappa of the first position is fixed to 1".into()));
    }
    if position >= stats.n_positions() {
        return Err(Error::DimensionMismatch(format!("position {position} out of range")));
    }
    Ok(kappa_target(position, value, &sample.theta, stats))
}

/// `log(Phi(1 | x, sigma) - Phi(0 | x, sigma))` for `x` in `[0, 1]`.
pub fn log_delta_phi(x: f64, sigma: f64) -> f64 {
    // x in [0,1] puts 0 and 1 on opposite sides of the mean, so the mass is
    // a sum of two half-erfs with no cancellation.
    let s = sigma * std::f64::consts::SQRT_2;
    (0.5 * (erf((1.0 - x) / s) + erf(x / s))).ln()
}

/// Draw from `N(current, sigma)` conditioned on `[0, 1]` by redrawing.
pub fn truncated_gauss_step(current: f64, sigma: f64, rng: &mut RngStream) -> f64 {
    for _ in 0..MAX_TRUNCATION_REDRAWS {
        let z: f64 = rng.sample(StandardNormal);
        let x = current + sigma * z;
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
    log::debug!("truncated step hit the redraw cap at current={current}, sigma={sigma}");
    rng.random::<f64>()
}

/// Log Metropolis-Hastings ratio for moving `current -> candidate` under a
/// truncated Gaussian random walk of width `sigma`.
pub fn acceptance_log_ratio(current: f64, candidate: f64, log_target: impl Fn(f64) -> f64, sigma: f64) -> f64 {
    if candidate == current {
        return 0.0;
    }
    log_target(candidate) - log_target(current) + log_delta_phi(current, sigma) - log_delta_phi(candidate, sigma)
}

/// Which coordinate a chain step touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    Theta(usize),
    Kappa(usize),
}

impl std::fmt::Display for Coordinate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coordinate::Theta(i) => write!(f, "theta[{i}]"),
            Coordinate::Kappa(l) => write!(f, "kappa[{l}]"),
        }
    }
}

/// One random-walk transition, reported to chain observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainStep {
    pub sweep: usize,
    pub coordinate: Coordinate,
    /// Value after the transition.
    pub value: f64,
    pub accepted: bool,
}

#[inline]
fn transition(current: f64, sigma: f64, log_target: impl Fn(f64) -> f64, rng: &mut RngStream) -> (f64, bool) {
    let candidate = truncated_gauss_step(current, sigma, rng);
    let log_ratio = acceptance_log_ratio(current, candidate, log_target, sigma);
    let u: f64 = rng.random();
    if u.ln() < log_ratio {
        (candidate, true)
    } else {
        (current, false)
    }
}

/// Runs `config.m` sweeps at time-stamp `t` and returns the final state.
///
/// The chain starts at `start` when given, otherwise at an independent
/// uniform draw.
pub fn mh_sample(
    stats: &ClickStats,
    config: &MhConfig,
    t: u64,
    start: Option<&JointSample>,
    rng: &mut RngStream,
) -> Result<JointSample> {
    mh_sample_observed(stats, config, t, start, rng, |_| {})
}

/// [`mh_sample`] reporting every transition to `observer`.
pub fn mh_sample_observed(
    stats: &ClickStats,
    config: &MhConfig,
    t: u64,
    start: Option<&JointSample>,
    rng: &mut RngStream,
    mut observer: impl FnMut(&ChainStep),
) -> Result<JointSample> {
    config.validate()?;
    if t == 0 {
        return Err(Error::InvalidConfig("time-stamps start at 1".into()));
    }
    let mut state = match start {
        Some(s) => {
            check_dims(s, stats)?;
            s.clone()
        }
        None => JointSample::uniform(stats.n_items(), stats.n_positions(), rng),
    };
    let sigma = config.step_width(t);

    for sweep in 0..config.m {
        for i in 0..state.theta.len() {
            let kappa = &state.kappa;
            let (value, accepted) = transition(state.theta[i], sigma, |x| theta_target(i, x, kappa, stats), rng);
            state.theta[i] = value;
            observer(&ChainStep {
                sweep,
                coordinate: Coordinate::Theta(i),
                value,
                accepted,
            });
        }
        for l in 1..state.kappa.len() {
            let theta = &state.theta;
            let (value, accepted) = transition(state.kappa[l], sigma, |x| kappa_target(l, x, theta, stats), rng);
            state.kappa[l] = value;
            observer(&ChainStep {
                sweep,
                coordinate: Coordinate::Kappa(l),
                value,
                accepted,
            });
        }
    }
    Ok(state)
}

//! Position-based click model: parameters, recommendations, feedback and
//! the per-cell click counters that summarize the history of a game.
//!
//! Items and positions are 0-indexed. Position 0 is the reference position
//! whose examination probability is pinned to 1.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Ground-truth (or sampled) click model parameters.
///
/// `theta[i]` is the probability item `i` is clicked once its position is
/// examined, `kappa[l]` the probability position `l` is examined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct PbmParams {
    theta: Vec<f64>,
    kappa: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    theta: Vec<f64>,
    kappa: Vec<f64>,
}

impl TryFrom<RawParams> for PbmParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        PbmParams::new(raw.theta, raw.kappa)
    }
}

impl From<PbmParams> for RawParams {
    fn from(p: PbmParams) -> Self {
        RawParams {
            theta: p.theta,
            kappa: p.kappa,
        }
    }
}

fn in_unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

impl PbmParams {
    pub fn new(theta: Vec<f64>, kappa: Vec<f64>) -> Result<Self> {
        if kappa.is_empty() {
            return Err(Error::InvalidParams("at least one position is required".into()));
        }
        if theta.len() < kappa.len() {
            return Err(Error::InvalidParams(format!(
                "need at least as many items as positions (N={}, L={})",
                theta.len(),
                kappa.len()
            )));
        }
        if let Some(x) = theta.iter().find(|x| !in_unit(**x)) {
            return Err(Error::InvalidParams(format!("theta value {x} outside [0,1]")));
        }
        if let Some(x) = kappa.iter().find(|x| !in_unit(**x)) {
            return Err(Error::InvalidParams(format!("kappa value {x} outside [0,1]")));
        }
        if kappa[0] != 1.0 {
            return Err(Error::InvalidParams(format!(
                "kappa of the first position must be 1, got {}",
                kappa[0]
            )));
        }
        Ok(Self { theta, kappa })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn n_items(&self) -> usize {
        self.theta.len()
    }

    pub fn n_positions(&self) -> usize {
        self.kappa.len()
    }

    fn check(&self, rec: &Recommendation) -> Result<()> {
        rec.check_dims(self.n_items(), self.n_positions())
    }

    /// Click probability of each displayed item, position by position.
    pub fn click_probabilities(&self, rec: &Recommendation) -> Result<Vec<f64>> {
        self.check(rec)?;
        Ok(rec
            .items()
            .iter()
            .zip(&self.kappa)
            .map(|(&i, &k)| self.theta[i] * k)
            .collect())
    }

    /// One independent Bernoulli draw per position.
    pub fn draw_rewards(&self, rec: &Recommendation, rng: &mut RngStream) -> Result<RewardVector> {
        let probs = self.click_probabilities(rec)?;
        Ok(RewardVector(
            probs.into_iter().map(|p| rng.random::<f64>() < p).collect(),
        ))
    }

    /// Expected number of clicks for `rec`.
    pub fn expected_reward(&self, rec: &Recommendation) -> Result<f64> {
        Ok(self.click_probabilities(rec)?.into_iter().sum())
    }

    /// The assignment maximizing the expected reward: the L most attractive
    /// items, the k-th best placed at the k-th most examined position.
    /// Ties go to the lowest item index and the lowest position index.
    pub fn best_recommendation(&self) -> Recommendation {
        assign_by_rank(&self.theta, &self.kappa, None)
    }

    /// Expected reward of the best recommendation.
    pub fn optimal_reward(&self) -> f64 {
        self.expected_reward(&self.best_recommendation())
            .expect("best recommendation matches its own params")
    }
}

/// L distinct items; entry `l` is displayed at position `l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Recommendation(Vec<usize>);

impl Recommendation {
    /// Fails if two entries are equal.
    pub fn new(items: Vec<usize>) -> Result<Self> {
        let mut seen = items.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParams(format!(
                "recommendation {items:?} repeats an item"
            )));
        }
        Ok(Self(items))
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.contains(&item)
    }

    pub(crate) fn from_distinct(items: Vec<usize>) -> Self {
        debug_assert!(Recommendation::new(items.clone()).is_ok());
        Self(items)
    }

    pub(crate) fn items_mut(&mut self) -> &mut [usize] {
        &mut self.0
    }

    pub fn check_dims(&self, n_items: usize, n_positions: usize) -> Result<()> {
        if self.0.len() != n_positions {
            return Err(Error::DimensionMismatch(format!(
                "recommendation has {} slots, expected {n_positions}",
                self.0.len()
            )));
        }
        if let Some(i) = self.0.iter().find(|&&i| i >= n_items) {
            return Err(Error::DimensionMismatch(format!(
                "item {i} out of range for {n_items} items"
            )));
        }
        Ok(())
    }
}

/// Per-position click feedback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewardVector(pub Vec<bool>);

impl RewardVector {
    pub fn clicks(&self) -> usize {
        self.0.iter().filter(|&&c| c).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Click (`S`) and no-click (`F`) counts per (item, position) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawStats", into = "RawStats")]
pub struct ClickStats {
    n_items: usize,
    n_positions: usize,
    successes: Vec<u64>,
    failures: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawStats {
    successes: Vec<Vec<u64>>,
    failures: Vec<Vec<u64>>,
}

impl TryFrom<RawStats> for ClickStats {
    type Error = Error;

    fn try_from(raw: RawStats) -> Result<Self> {
        let n_items = raw.successes.len();
        let n_positions = raw.successes.first().map_or(0, Vec::len);
        let rect = |m: &[Vec<u64>]| m.len() == n_items && m.iter().all(|r| r.len() == n_positions);
        if n_positions == 0 || !rect(&raw.successes) || !rect(&raw.failures) {
            return Err(Error::DimensionMismatch(
                "successes and failures must be non-empty matrices of equal shape".into(),
            ));
        }
        Ok(Self {
            n_items,
            n_positions,
            successes: raw.successes.into_iter().flatten().collect(),
            failures: raw.failures.into_iter().flatten().collect(),
        })
    }
}

impl From<ClickStats> for RawStats {
    fn from(s: ClickStats) -> Self {
        let rows = |v: &[u64]| v.chunks(s.n_positions).map(<[u64]>::to_vec).collect();
        RawStats {
            successes: rows(&s.successes),
            failures: rows(&s.failures),
        }
    }
}

impl ClickStats {
    pub fn new(n_items: usize, n_positions: usize) -> Self {
        Self {
            n_items,
            n_positions,
            successes: vec![0; n_items * n_positions],
            failures: vec![0; n_items * n_positions],
        }
    }

    /// Builds counters from row-major `n_items x n_positions` matrices.
    pub fn from_counts(n_items: usize, n_positions: usize, successes: Vec<u64>, failures: Vec<u64>) -> Result<Self> {
        let cells = n_items * n_positions;
        if successes.len() != cells || failures.len() != cells {
            return Err(Error::DimensionMismatch(format!(
                "expected {cells} cells for {n_items}x{n_positions} stats"
            )));
        }
        Ok(Self {
            n_items,
            n_positions,
            successes,
            failures,
        })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_positions(&self) -> usize {
        self.n_positions
    }

    #[inline]
    pub fn successes(&self, item: usize, position: usize) -> u64 {
        self.successes[item * self.n_positions + position]
    }

    #[inline]
    pub fn failures(&self, item: usize, position: usize) -> u64 {
        self.failures[item * self.n_positions + position]
    }

    #[inline]
    pub fn displays(&self, item: usize, position: usize) -> u64 {
        self.successes(item, position) + self.failures(item, position)
    }

    pub fn set(&mut self, item: usize, position: usize, successes: u64, failures: u64) {
        let k = item * self.n_positions + position;
        self.successes[k] = successes;
        self.failures[k] = failures;
    }

    /// Total number of observed (item, position) outcomes.
    pub fn total(&self) -> u64 {
        self.successes.iter().sum::<u64>() + self.failures.iter().sum::<u64>()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Records one round of feedback.
    pub fn update(&mut self, rec: &Recommendation, rewards: &RewardVector) -> Result<()> {
        rec.check_dims(self.n_items, self.n_positions)?;
        if rewards.len() != self.n_positions {
            return Err(Error::DimensionMismatch(format!(
                "reward vector has {} entries, expected {}",
                rewards.len(),
                self.n_positions
            )));
        }
        for (position, (&item, &clicked)) in rec.items().iter().zip(&rewards.0).enumerate() {
            let k = item * self.n_positions + position;
            if clicked {
                self.successes[k] += 1;
            } else {
                self.failures[k] += 1;
            }
        }
        Ok(())
    }
}

/// Indices sorted by decreasing score; equal scores keep index order.
fn rank_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Shuffles every run of equal scores inside a ranking.
fn shuffle_ties(order: &mut [usize], scores: &[f64], rng: &mut RngStream) {
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        if end - start > 1 {
            order[start..end].shuffle(rng);
        }
        start = end;
    }
}

/// Displays the `kappa.len()` highest-scoring items, the k-th best at the
/// position with the k-th highest `kappa`. Without an rng ties go to the
/// lowest index; with one they are broken uniformly at random.
pub(crate) fn assign_by_rank(theta: &[f64], kappa: &[f64], ties: Option<&mut RngStream>) -> Recommendation {
    let mut items = rank_desc(theta);
    let mut positions = rank_desc(kappa);
    if let Some(rng) = ties {
        shuffle_ties(&mut items, theta, rng);
        shuffle_ties(&mut positions, kappa, rng);
    }
    let mut slots = vec![0; kappa.len()];
    for (&p, &i) in positions.iter().zip(&items) {
        slots[p] = i;
    }
    Recommendation::from_distinct(slots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_params() -> PbmParams {
        PbmParams::new(
            vec![0.3, 0.2, 0.15, 0.15, 0.15, 0.10, 0.05, 0.05, 0.01, 0.01],
            vec![1.0, 0.75, 0.6, 0.3, 0.1],
        )
        .unwrap()
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(PbmParams::new(vec![0.5], vec![0.9]).is_err());
        assert!(PbmParams::new(vec![0.5], vec![1.0, 0.5]).is_err());
        assert!(PbmParams::new(vec![1.5, 0.1], vec![1.0]).is_err());
        assert!(PbmParams::new(vec![0.5, 0.1], vec![1.0, -0.1]).is_err());
        assert!(PbmParams::new(vec![0.5], vec![]).is_err());
    }

    #[test]
    fn params_json_shape() {
        let p: PbmParams = serde_json::from_str(r#"{"theta":[0.3,0.2],"kappa":[1,0.5]}"#).unwrap();
        assert_eq!(p.theta(), &[0.3, 0.2]);
        let back = serde_json::to_string(&p).unwrap();
        assert_eq!(back, r#"{"theta":[0.3,0.2],"kappa":[1.0,0.5]}"#);
        assert!(serde_json::from_str::<PbmParams>(r#"{"theta":[0.3],"kappa":[0.7]}"#).is_err());
    }

    #[test]
    fn zero_theta_never_clicks() {
        let p = PbmParams::new(vec![0.0; 4], vec![1.0, 0.5]).unwrap();
        let rec = Recommendation::new(vec![2, 0]).unwrap();
        for seed in 0..20 {
            let r = p.draw_rewards(&rec, &mut RngStream::new(seed)).unwrap();
            assert_eq!(r.clicks(), 0);
        }
    }

    #[test]
    fn sure_clicks() {
        let p = PbmParams::new(vec![1.0, 1.0, 0.2], vec![1.0, 1.0]).unwrap();
        let rec = Recommendation::new(vec![1, 0]).unwrap();
        let r = p.draw_rewards(&rec, &mut RngStream::new(3)).unwrap();
        assert_eq!(r.0, vec![true, true]);
    }

    #[test]
    fn draw_rewards_mean_matches_click_probability() {
        let p = std_params();
        let rec = p.best_recommendation();
        let probs = p.click_probabilities(&rec).unwrap();
        let mut rng = RngStream::new(11);
        let n = 100_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            let r = p.draw_rewards(&rec, &mut rng).unwrap();
            for (c, &x) in counts.iter_mut().zip(&r.0) {
                *c += x as usize;
            }
        }
        for (c, q) in counts.iter().zip(probs) {
            let rate = *c as f64 / n as f64;
            let se = (q * (1.0 - q) / n as f64).sqrt();
            assert!((rate - q).abs() < 4.0 * se, "rate {rate} vs {q}");
        }
    }

    #[test]
    fn draw_rewards_rejects_bad_dims() {
        let p = std_params();
        let short = Recommendation::new(vec![0, 1]).unwrap();
        assert!(p.draw_rewards(&short, &mut RngStream::new(0)).is_err());
        let oob = Recommendation::new(vec![0, 1, 2, 3, 10]).unwrap();
        assert!(p.expected_reward(&oob).is_err());
    }

    #[test]
    fn expected_reward_of_std_oracle() {
        let p = std_params();
        let mu = p.expected_reward(&p.best_recommendation()).unwrap();
        let hand = 0.3 * 1.0 + 0.2 * 0.75 + 0.15 * 0.6 + 0.15 * 0.3 + 0.15 * 0.1;
        assert!((mu - hand).abs() < 1e-15);
        assert!((mu - 0.6).abs() < 1e-12);
        let zero = PbmParams::new(vec![0.0; 10], p.kappa().to_vec()).unwrap();
        assert_eq!(zero.expected_reward(&p.best_recommendation()).unwrap(), 0.0);
    }

    #[test]
    fn oracle_is_identity_for_sorted_params() {
        assert_eq!(std_params().best_recommendation().items(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn oracle_follows_shuffled_kappa() {
        let p = PbmParams::new(vec![0.1, 0.9, 0.5, 0.3], vec![1.0, 0.2, 0.6]).unwrap();
        // best item at position 0, next at position 2, third at position 1
        assert_eq!(p.best_recommendation().items(), &[1, 3, 2]);
    }

    #[test]
    fn oracle_ties_pick_lowest_items() {
        let p = PbmParams::new(vec![0.4; 5], vec![1.0, 0.5, 0.5]).unwrap();
        assert_eq!(p.best_recommendation().items(), &[0, 1, 2]);
    }

    #[test]
    fn update_stats_single_round() {
        let mut s = ClickStats::new(3, 2);
        let rec = Recommendation::new(vec![0, 1]).unwrap();
        s.update(&rec, &RewardVector(vec![true, false])).unwrap();
        assert_eq!(s.successes(0, 0), 1);
        assert_eq!(s.failures(1, 1), 1);
        assert_eq!(s.total(), 2);
        assert!(s.update(&rec, &RewardVector(vec![true])).is_err());
    }

    #[test]
    fn stats_json_roundtrip_shape() {
        let s: ClickStats = serde_json::from_str(r#"{"successes":[[1,0],[0,2]],"failures":[[3,0],[0,4]]}"#).unwrap();
        assert_eq!(s.n_items(), 2);
        assert_eq!(s.failures(1, 1), 4);
        let back: ClickStats = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<ClickStats>(r#"{"successes":[[1,0]],"failures":[[3]]}"#).is_err());
    }

    #[test]
    fn replay_matches_recount() {
        let p = std_params();
        let mut rng = RngStream::new(5);
        let mut stats = ClickStats::new(10, 5);
        let mut log = Vec::new();
        for _ in 0..500 {
            let mut items: Vec<usize> = (0..10).collect();
            items.shuffle(&mut rng);
            items.truncate(5);
            let rec = Recommendation::new(items).unwrap();
            let r = p.draw_rewards(&rec, &mut rng).unwrap();
            stats.update(&rec, &r).unwrap();
            log.push((rec, r));
        }
        assert_eq!(stats.total(), 500 * 5);
        for i in 0..10 {
            for l in 0..5 {
                let s = log.iter().filter(|(rec, r)| rec.items()[l] == i && r.0[l]).count() as u64;
                let f = log.iter().filter(|(rec, r)| rec.items()[l] == i && !r.0[l]).count() as u64;
                assert_eq!((stats.successes(i, l), stats.failures(i, l)), (s, f));
            }
        }
    }

    #[test]
    fn random_ties_cover_all_orders() {
        let mut rng = RngStream::new(1);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..200 {
            seen.insert(assign_by_rank(&[0.5, 0.5, 0.5], &[1.0, 0.5], Some(&mut rng)));
        }
        assert_eq!(seen.len(), 6);
    }
}

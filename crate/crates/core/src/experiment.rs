//! Replicated policy-vs-environment games and their regret traces.
//!
//! The recorded regret is the cumulative pseudo-regret: at every round the
//! gap between the optimal expected reward and the expected reward of the
//! played recommendation, both computed from the true parameters.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pbm::PbmParams;
use crate::policies::{Policy, PolicySpec};
use crate::rng::RngStream;

/// Substream of a run seed feeding the environment's click draws.
pub const ENV_STREAM: u64 = 0;
/// Substream of a run seed feeding the policy's internal draws.
pub const POLICY_STREAM: u64 = 1;

/// One environment or several (pooled with equal weight per run).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnvSet {
    Single(PbmParams),
    Pooled(Vec<PbmParams>),
}

impl EnvSet {
    pub fn envs(&self) -> &[PbmParams] {
        match self {
            EnvSet::Single(p) => std::slice::from_ref(p),
            EnvSet::Pooled(v) => v,
        }
    }
}

/// Declarative description of a replicated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub env: EnvSet,
    pub policies: Vec<PolicySpec>,
    pub horizon: u64,
    /// Runs per policy and per environment.
    pub n_runs: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
}

/// 50 log-spaced time-stamps from 10 to `horizon`, plus `horizon`.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let start = 10.min(horizon) as f64;
    let ratio = horizon as f64 / start;
    let mut out: Vec<u64> = (0..50)
        .map(|k| (start * ratio.powf(k as f64 / 49.0)).round() as u64)
        .collect();
    out.push(horizon);
    out.retain(|&t| t >= 1 && t <= horizon);
    out.dedup();
    out
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        if self.n_runs == 0 {
            return Err(Error::InvalidConfig("n_runs must be at least 1".into()));
        }
        if self.env.envs().is_empty() {
            return Err(Error::InvalidConfig("at least one environment is required".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::InvalidConfig("at least one policy is required".into()));
        }
        let mut labels: Vec<String> = self.policies.iter().map(PolicySpec::label).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!("policy `{}` listed twice", w[0])));
        }
        if let Some(cp) = &self.checkpoints {
            if cp.is_empty() || cp[0] == 0 || cp.windows(2).any(|w| w[0] >= w[1]) || cp[cp.len() - 1] > self.horizon {
                return Err(Error::InvalidConfig(
                    "checkpoints must be strictly increasing time-stamps in [1, horizon]".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn checkpoints(&self) -> Vec<u64> {
        self.checkpoints
            .clone()
            .unwrap_or_else(|| default_checkpoints(self.horizon))
    }

    /// Label of each configured policy, in config order.
    pub fn labels(&self) -> Vec<String> {
        self.policies.iter().map(PolicySpec::label).collect()
    }
}

/// Cumulative regret of one game at the checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub policy: String,
    pub seed: u64,
    /// `(t, cumulative regret after round t)`.
    pub points: Vec<(u64, f64)>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }
}

/// Plays `horizon` rounds of `policy` against `env`.
pub fn play(
    env: &PbmParams,
    policy: &mut dyn Policy,
    label: &str,
    horizon: u64,
    seed: u64,
    checkpoints: &[u64],
) -> Result<RegretTrace> {
    let mut env_rng = RngStream::substream(seed, ENV_STREAM);
    let mut policy_rng = RngStream::substream(seed, POLICY_STREAM);
    let optimal = env.optimal_reward();
    let mut regret = 0.0;
    let mut points = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    for t in 1..=horizon {
        let rec = policy.choose(t, &mut policy_rng)?;
        let rewards = env.draw_rewards(&rec, &mut env_rng)?;
        policy.feedback(&rec, &rewards)?;
        regret += (optimal - env.expected_reward(&rec)?).max(0.0);
        if next.peek() == Some(&&t) {
            points.push((t, regret));
            next.next();
        }
    }
    Ok(RegretTrace {
        policy: label.to_string(),
        seed,
        points,
    })
}

/// Builds the policy described by `spec` and plays one game.
pub fn run_game(
    env: &PbmParams,
    spec: &PolicySpec,
    horizon: u64,
    seed: u64,
    checkpoints: &[u64],
) -> Result<RegretTrace> {
    let label = spec.label();
    let wrap = |e: Error| Error::Game {
        policy: label.clone(),
        seed,
        source: Box::new(e),
    };
    let mut policy = spec.build(env).map_err(wrap)?;
    play(env, policy.as_mut(), &label, horizon, seed, checkpoints).map_err(wrap)
}

/// Wall time of one game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameTiming {
    pub policy: String,
    pub seed: u64,
    pub rounds: u64,
    pub elapsed: Duration,
}

/// Traces and timings of a replicated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub traces: Vec<RegretTrace>,
    pub timings: Vec<GameTiming>,
}

/// Runs every (policy, environment, run) game on `parallelism` threads.
///
/// Run `k` of environment `e` uses seed `base_seed + e * n_runs + k`, for
/// every policy. Output order is policy, then environment, then run, and
/// does not depend on `parallelism`.
pub fn run_experiment_timed(config: &ExperimentConfig, parallelism: usize) -> Result<ExperimentRun> {
    config.validate()?;
    let checkpoints = config.checkpoints();
    let envs = config.env.envs();
    let jobs: Vec<(&PolicySpec, &PbmParams, u64)> = config
        .policies
        .iter()
        .flat_map(|spec| {
            envs.iter().enumerate().flat_map(move |(e, env)| {
                (0..config.n_runs).map(move |k| (spec, env, config.base_seed + e as u64 * config.n_runs + k))
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(RegretTrace, GameTiming)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(spec, env, seed)| {
                let start = Instant::now();
                let trace = run_game(env, spec, config.horizon, seed, &checkpoints)?;
                let timing = GameTiming {
                    policy: trace.policy.clone(),
                    seed,
                    rounds: config.horizon,
                    elapsed: start.elapsed(),
                };
                Ok((trace, timing))
            })
            .collect::<Result<_>>()
    })?;
    let (traces, timings) = results.into_iter().unzip();
    Ok(ExperimentRun { traces, timings })
}

pub fn run_experiment(config: &ExperimentConfig, parallelism: usize) -> Result<Vec<RegretTrace>> {
    Ok(run_experiment_timed(config, parallelism)?.traces)
}

/// Per-policy statistics at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: String,
    pub t: u64,
    pub mean: f64,
    /// Population standard deviation (denominator `n`).
    pub std: f64,
    pub min: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn group_by_policy(traces: &[RegretTrace]) -> Vec<(&str, Vec<&RegretTrace>)> {
    let mut groups: Vec<(&str, Vec<&RegretTrace>)> = Vec::new();
    for tr in traces {
        match groups.iter_mut().find(|(p, _)| *p == tr.policy) {
            Some((_, v)) => v.push(tr),
            None => groups.push((&tr.policy, vec![tr])),
        }
    }
    groups
}

/// Mean, spread and quantiles of cumulative regret per policy and
/// checkpoint. Policies keep their order of first appearance.
pub fn aggregate_traces(traces: &[RegretTrace]) -> Result<Vec<SummaryRow>> {
    let Some(first) = traces.first() else {
        return Ok(Vec::new());
    };
    let grid: Vec<u64> = first.points.iter().map(|p| p.0).collect();
    if let Some(bad) = traces
        .iter()
        .find(|tr| !tr.points.iter().map(|p| p.0).eq(grid.iter().copied()))
    {
        return Err(Error::MismatchedCheckpoints(format!(
            "trace `{}` seed {} differs from `{}` seed {}",
            bad.policy, bad.seed, first.policy, first.seed
        )));
    }
    let mut rows = Vec::new();
    for (policy, group) in group_by_policy(traces) {
        for (k, &t) in grid.iter().enumerate() {
            let mut xs: Vec<f64> = group.iter().map(|tr| tr.points[k].1).collect();
            xs.sort_by(f64::total_cmp);
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            rows.push(SummaryRow {
                policy: policy.to_string(),
                t,
                mean,
                std: var.sqrt(),
                min: xs[0],
                q05: quantile(&xs, 0.05),
                q25: quantile(&xs, 0.25),
                q50: quantile(&xs, 0.50),
                q75: quantile(&xs, 0.75),
                q95: quantile(&xs, 0.95),
                max: xs[xs.len() - 1],
            });
        }
    }
    Ok(rows)
}

/// Summary rows of one policy at its last checkpoint.
pub fn final_rows(summary: &[SummaryRow]) -> Vec<&SummaryRow> {
    let mut out: Vec<&SummaryRow> = Vec::new();
    for row in summary {
        match out.iter_mut().find(|r| r.policy == row.policy) {
            Some(r) if row.t > r.t => *r = row,
            Some(_) => {}
            None => out.push(row),
        }
    }
    out
}

/// 17 significant digits.
fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub const TRACE_HEADER: [&str; 4] = ["policy", "seed", "t", "regret"];
pub const SUMMARY_HEADER: [&str; 11] = [
    "policy", "t", "mean", "std", "min", "q05", "q25", "q50", "q75", "q95", "max",
];
/// First line of summary files.
pub const SUMMARY_NOTE: &str =
    "# std: population convention (denominator n); quantiles: linear interpolation; runs weighted equally";

pub fn write_traces(traces: &[RegretTrace], writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for tr in traces {
        for &(t, r) in &tr.points {
            w.write_record([tr.policy.as_str(), &tr.seed.to_string(), &t.to_string(), &fmt_real(r)])?;
        }
    }
    w.flush().map_err(|e| Error::io("<traces>", e))?;
    Ok(())
}

/// Reads traces written by [`write_traces`]; row order does not matter.
pub fn read_traces(reader: impl Read) -> Result<Vec<RegretTrace>> {
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(TRACE_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", TRACE_HEADER.join(",")),
        });
    }
    let mut traces: Vec<RegretTrace> = Vec::new();
    let mut index: HashMap<(String, u64), usize> = HashMap::new();
    for (k, row) in r.records().enumerate() {
        let line = k + 2;
        let row = row?;
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("invalid {what}"),
        };
        if row.len() != 4 {
            return Err(bad("field count"));
        }
        let seed: u64 = row[1].parse().map_err(|_| bad("seed"))?;
        let t: u64 = row[2].parse().map_err(|_| bad("t"))?;
        let regret: f64 = row[3].parse().map_err(|_| bad("regret"))?;
        let key = (row[0].to_string(), seed);
        let slot = *index.entry(key).or_insert_with(|| {
            traces.push(RegretTrace {
                policy: row[0].to_string(),
                seed,
                points: Vec::new(),
            });
            traces.len() - 1
        });
        traces[slot].points.push((t, regret));
    }
    for tr in &mut traces {
        tr.points.sort_by_key(|p| p.0);
        if tr.points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Parse {
                line: 0,
                message: format!("trace `{}` seed {} repeats a time-stamp", tr.policy, tr.seed),
            });
        }
    }
    Ok(traces)
}

pub fn persist_traces(traces: &[RegretTrace], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_traces(traces, std::io::BufWriter::new(file))
}

pub fn load_traces(path: impl AsRef<Path>) -> Result<Vec<RegretTrace>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_traces(std::io::BufReader::new(file))
}

pub fn write_summary(rows: &[SummaryRow], mut writer: impl Write) -> Result<()> {
    writeln!(writer, "{SUMMARY_NOTE}").map_err(|e| Error::io("<summary>", e))?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        let mut rec = vec![r.policy.clone(), r.t.to_string()];
        rec.extend([r.mean, r.std, r.min, r.q05, r.q25, r.q50, r.q75, r.q95, r.max].map(fmt_real));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<summary>", e))?;
    Ok(())
}

pub fn read_summary(reader: impl Read) -> Result<Vec<SummaryRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn persist_summary(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_summary(rows, std::io::BufWriter::new(file))
}

/// Wall time spent by one policy across all of its games.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTiming {
    pub policy: String,
    pub games: usize,
    pub trials: u64,
    pub total: Duration,
}

impl PolicyTiming {
    /// Milliseconds per recommendation.
    pub fn ms_per_trial(&self) -> f64 {
        self.total.as_secs_f64() * 1e3 / self.trials as f64
    }
}

/// Per-policy totals, in order of first appearance.
pub fn timing_report(timings: &[GameTiming]) -> Vec<PolicyTiming> {
    let mut out: Vec<PolicyTiming> = Vec::new();
    for g in timings {
        let entry = match out.iter().position(|p| p.policy == g.policy) {
            Some(k) => &mut out[k],
            None => {
                out.push(PolicyTiming {
                    policy: g.policy.clone(),
                    games: 0,
                    trials: 0,
                    total: Duration::ZERO,
                });
                out.last_mut().unwrap()
            }
        };
        entry.games += 1;
        entry.trials += g.rounds;
        entry.total += g.elapsed;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    fn trace(policy: &str, seed: u64, regrets: &[f64]) -> RegretTrace {
        RegretTrace {
            policy: policy.into(),
            seed,
            points: regrets.iter().enumerate().map(|(k, &r)| (k as u64 + 1, r)).collect(),
        }
    }

    #[test]
    fn checkpoint_grid() {
        let cp = default_checkpoints(10_000);
        assert_eq!(cp[0], 10);
        assert_eq!(*cp.last().unwrap(), 10_000);
        assert!(cp.windows(2).all(|w| w[0] < w[1]));
        assert!(cp.len() >= 45);
        assert_eq!(default_checkpoints(1), vec![1]);
        assert_eq!(default_checkpoints(5), vec![5]);
    }

    #[test]
    fn config_validation() {
        let base = ExperimentConfig {
            name: None,
            env: EnvSet::Single(bundled::simulated_std()),
            policies: vec![PolicySpec::Uniform],
            horizon: 100,
            n_runs: 1,
            base_seed: 0,
            checkpoints: None,
        };
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.checkpoints = Some(vec![10, 5]);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.checkpoints = Some(vec![10, 500]);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.policies.push(PolicySpec::Uniform);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.n_runs = 0;
        assert!(c.validate().is_err());
        let mut c = base;
        c.horizon = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_accepts_single_and_pooled_envs() {
        let single =
            r#"{"env":{"theta":[0.3,0.2],"kappa":[1,0.5]},"policies":[{"policy":"uniform"}],"horizon":10,"n_runs":2}"#;
        let c = ExperimentConfig::from_json(single).unwrap();
        assert_eq!(c.env.envs().len(), 1);
        let pooled = r#"{"env":[{"theta":[0.3,0.2],"kappa":[1,0.5]},{"theta":[0.1,0.2,0.4],"kappa":[1]}],"policies":[{"policy":"oracle"}],"horizon":10,"n_runs":2}"#;
        let c = ExperimentConfig::from_json(pooled).unwrap();
        assert_eq!(c.env.envs().len(), 2);
        let traces = run_experiment(&c, 2).unwrap();
        let seeds: Vec<u64> = traces.iter().map(|t| t.seed).collect();
        assert_eq!(seeds, vec![0, 1, 2, 3]);
        assert!(ExperimentConfig::from_json(
            r#"{"env":{"theta":[0.3],"kappa":[1]},"policies":[],"horizon":1,"n_runs":1}"#
        )
        .is_err());
    }

    #[test]
    fn oracle_has_zero_regret() {
        let env = bundled::simulated_std();
        let tr = run_game(
            &env,
            &PolicySpec::Oracle { params: None },
            500,
            3,
            &default_checkpoints(500),
        )
        .unwrap();
        assert!(tr.points.iter().all(|p| p.1 == 0.0));
    }

    struct Fixed(crate::pbm::Recommendation);

    impl Policy for Fixed {
        fn choose(&mut self, _t: u64, _rng: &mut RngStream) -> Result<crate::pbm::Recommendation> {
            Ok(self.0.clone())
        }
        fn feedback(&mut self, _r: &crate::pbm::Recommendation, _w: &crate::pbm::RewardVector) -> Result<()> {
            Ok(())
        }
    }

    #[test]
    fn fixed_suboptimal_play_is_linear() {
        let env = PbmParams::new(vec![0.5, 0.25, 0.125], vec![1.0, 0.5]).unwrap();
        let rec = crate::pbm::Recommendation::new(vec![1, 0]).unwrap();
        let gap = env.optimal_reward() - env.expected_reward(&rec).unwrap();
        assert_eq!(gap, 0.125);
        let tr = play(&env, &mut Fixed(rec), "fixed", 1000, 0, &[10, 1000]).unwrap();
        assert_eq!(tr.points, vec![(10, 1.25), (1000, 125.0)]);
    }

    #[test]
    fn game_dimension_errors_carry_context() {
        let env = bundled::simulated_std();
        let spec = PolicySpec::Oracle {
            params: Some(PbmParams::new(vec![0.3, 0.2], vec![1.0]).unwrap()),
        };
        match run_game(&env, &spec, 10, 5, &[10]) {
            Err(Error::Game { policy, seed, .. }) => assert_eq!((policy.as_str(), seed), ("oracle", 5)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn aggregate_single_and_pair() {
        let rows = aggregate_traces(&[trace("a", 0, &[1.0, 2.0])]).unwrap();
        assert_eq!(rows[1].mean, 2.0);
        assert_eq!(rows[1].std, 0.0);
        let rows = aggregate_traces(&[trace("a", 0, &[10.0]), trace("a", 1, &[30.0])]).unwrap();
        assert_eq!((rows[0].mean, rows[0].std), (20.0, 10.0));
        assert_eq!((rows[0].min, rows[0].q50, rows[0].max), (10.0, 20.0, 30.0));
    }

    #[test]
    fn aggregate_rejects_mismatched_grids() {
        let a = trace("a", 0, &[1.0, 2.0]);
        let b = trace("b", 0, &[1.0]);
        assert!(matches!(
            aggregate_traces(&[a, b]),
            Err(Error::MismatchedCheckpoints(_))
        ));
    }

    #[test]
    fn quantiles_interpolate() {
        let xs: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(quantile(&xs, 0.05), 5.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
        assert_eq!(quantile(&[7.0], 0.95), 7.0);
    }

    #[test]
    fn final_rows_pick_last_checkpoint() {
        let rows = aggregate_traces(&[trace("a", 0, &[1.0, 2.0]), trace("b", 0, &[3.0, 4.0])]).unwrap();
        let fin = final_rows(&rows);
        assert_eq!(fin.len(), 2);
        assert_eq!((fin[0].mean, fin[1].mean), (2.0, 4.0));
    }

    #[test]
    fn empty_trace_file_is_header_only() {
        let mut buf = Vec::new();
        write_traces(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "policy,seed,t,regret\n");
        assert!(read_traces(buf.as_slice()).unwrap().is_empty());
    }

    #[test]
    fn malformed_trace_files() {
        assert!(read_traces("a,b,c\n".as_bytes()).is_err());
        assert!(read_traces("policy,seed,t,regret\nx,1,2,abc\n".as_bytes()).is_err());
        assert!(read_traces("policy,seed,t,regret\nx,1,2,1.0\nx,1,2,3.0\n".as_bytes()).is_err());
    }

    #[test]
    fn summary_roundtrip() {
        let rows = aggregate_traces(&[trace("a", 0, &[0.1, 0.7]), trace("a", 1, &[1.0 / 3.0, 2.0])]).unwrap();
        let mut buf = Vec::new();
        write_summary(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# std: population"));
        assert!(text.lines().nth(1).unwrap() == "policy,t,mean,std,min,q05,q25,q50,q75,q95,max");
        assert_eq!(read_summary(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn timing_totals() {
        let t = |p: &str, ms: u64| GameTiming {
            policy: p.into(),
            seed: 0,
            rounds: 10,
            elapsed: Duration::from_millis(ms),
        };
        let rep = timing_report(&[t("a", 20), t("b", 5), t("a", 30)]);
        assert_eq!(rep[0].total, Duration::from_millis(50));
        assert_eq!(rep[0].trials, 20);
        assert!((rep[0].ms_per_trial() - 2.5).abs() < 1e-12);
        assert_eq!(rep[1].games, 1);
    }
}

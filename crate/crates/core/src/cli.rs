//! Command-line front end.
//!
//! Every failure prints one line `error[<kind>]: <reason>` and maps to an
//! exit code: 2 for unparsable configs or logs, 1 for anything else.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::Value;

use crate::error::Error;
use crate::experiment::{
    aggregate_traces, final_rows, load_traces, persist_summary, persist_traces, run_experiment_timed, timing_report,
    ExperimentConfig,
};
use crate::inference::{filter_click_logs, parse_click_log, svd_rank1_extract, LogFilter};
use crate::pbm::ClickStats;
use crate::rng::RngStream;
use crate::sampler::{mh_sample_observed, ChainStep, Coordinate, JointSample, MhConfig};

#[derive(Debug, Parser)]
#[command(name = "pbm-lab", version, about = "Position-based-model bandit experiments")]
pub struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutDir {
    /// Output directory.
    #[arg(long, env = "PBM_LAB_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a replicated experiment and write traces.csv and summary.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutDir,
        /// Overrides the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        parallelism: Option<usize>,
        /// Config override such as `policies[0].c=1000` (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Estimate per-query PBM parameters from a tab-separated click log.
    Infer {
        /// Log file with columns query, ad, position, click, impression.
        #[arg(long = "log", visible_alias = "config")]
        log: PathBuf,
        #[command(flatten)]
        out: OutDir,
        #[arg(long, default_value_t = 1000)]
        min_displays: u64,
        #[arg(long, default_value_t = 5)]
        min_ads: usize,
        #[arg(long, default_value_t = 3)]
        positions: usize,
    },
    /// Print the final-regret table of a traces file.
    Report {
        /// Traces file (default: <out>/traces.csv).
        #[arg(long)]
        traces: Option<PathBuf>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Dump Metropolis-Hastings chains for a stats snapshot.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutDir,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Config,
    LogParse,
    Input,
    Runtime,
}

#[derive(Debug)]
struct Failure {
    kind: Kind,
    message: String,
}

impl Failure {
    fn new(kind: Kind, message: impl std::fmt::Display) -> Self {
        Self {
            kind,
            message: message.to_string().replace('\n', " "),
        }
    }

    fn code(&self) -> i32 {
        match self.kind {
            Kind::Config | Kind::LogParse => 2,
            Kind::Input | Kind::Runtime => 1,
        }
    }

    fn tag(&self) -> &'static str {
        match self.kind {
            Kind::Config => "config",
            Kind::LogParse => "log-parse",
            Kind::Input => "input",
            Kind::Runtime => "runtime",
        }
    }
}

type CmdResult = Result<(), Failure>;

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::new(Kind::Runtime, e)
}

/// Entry point for the binary.
pub fn main_from_env() -> i32 {
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run_cli(std::env::args_os(), &mut out, &mut err)
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet {
        "error"
    } else {
        "warn"
    }))
    .is_test(cfg!(test))
    .try_init();

    let mut sink = std::io::sink();
    let out: &mut dyn Write = if cli.quiet { &mut sink } else { out };
    let result = match &cli.command {
        Command::Run {
            config,
            out: dir,
            seed,
            parallelism,
            overrides,
        } => cmd_run(config, &dir.out, *seed, *parallelism, overrides, out),
        Command::Infer {
            log,
            out: dir,
            min_displays,
            min_ads,
            positions,
        } => cmd_infer(
            log,
            &dir.out,
            &LogFilter {
                min_displays: *min_displays,
                min_ads: *min_ads,
                n_positions: *positions,
            },
            out,
            err,
        ),
        Command::Report { traces, out: dir } => {
            let path = traces.clone().unwrap_or_else(|| dir.out.join("traces.csv"));
            cmd_report(&path, out)
        }
        Command::Diagnose { config, out: dir, seed } => cmd_diagnose(config, &dir.out, *seed, out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error[{}]: {}", f.tag(), f.message);
            f.code()
        }
    }
}

#[derive(Debug, PartialEq)]
enum PathToken {
    Key(String),
    Index(usize),
}

fn parse_key_path(key: &str) -> Result<Vec<PathToken>, String> {
    let mut tokens = Vec::new();
    for part in key.split('.') {
        let (name, mut rest) = match part.find('[') {
            Some(k) => (&part[..k], &part[k..]),
            None => (part, ""),
        };
        if name.is_empty() && tokens.is_empty() {
            return Err(format!("override key `{key}` must start with a field name"));
        }
        if !name.is_empty() {
            tokens.push(PathToken::Key(name.to_string()));
        }
        while !rest.is_empty() {
            let close = rest.find(']').ok_or_else(|| format!("unclosed `[` in `{key}`"))?;
            let idx = rest[1..close].parse().map_err(|_| format!("bad index in `{key}`"))?;
            tokens.push(PathToken::Index(idx));
            rest = &rest[close + 1..];
            if !rest.is_empty() && !rest.starts_with('[') {
                return Err(format!("unexpected `{rest}` in `{key}`"));
            }
        }
    }
    Ok(tokens)
}

/// Applies `KEY=VALUE` to a JSON document. VALUE is read as JSON when it
/// parses, as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), String> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("override `{assignment}` is not KEY=VALUE"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let tokens = parse_key_path(key.trim())?;
    let mut cur = doc;
    for token in &tokens {
        cur = match token {
            PathToken::Key(k) => cur
                .as_object_mut()
                .ok_or_else(|| format!("`{key}`: `{k}` is not inside an object"))?
                .entry(k.clone())
                .or_insert(Value::Null),
            PathToken::Index(i) => cur
                .as_array_mut()
                .and_then(|a| a.get_mut(*i))
                .ok_or_else(|| format!("`{key}`: index {i} out of range"))?,
        };
    }
    *cur = value;
    Ok(())
}

fn load_experiment(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::new(Kind::Config, format!("{}: {e}", path.display())))?;
    let parse_err = |e: serde_json::Error| Failure::new(Kind::Config, format!("{}: {e}", path.display()));
    let config: ExperimentConfig = if overrides.is_empty() {
        serde_json::from_str(&text).map_err(parse_err)?
    } else {
        let mut doc: Value = serde_json::from_str(&text).map_err(parse_err)?;
        for o in overrides {
            apply_override(&mut doc, o).map_err(|m| Failure::new(Kind::Config, m))?;
        }
        serde_json::from_value(doc).map_err(parse_err)?
    };
    config
        .validate()
        .map_err(|e| Failure::new(Kind::Config, format!("{}: {e}", path.display())))?;
    Ok(config)
}

fn create_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))
}

fn cmd_run(
    config_path: &Path,
    dir: &Path,
    seed: Option<u64>,
    parallelism: Option<usize>,
    overrides: &[String],
    out: &mut dyn Write,
) -> CmdResult {
    let mut config = load_experiment(config_path, overrides)?;
    if let Some(s) = seed {
        config.base_seed = s;
    }
    let threads = parallelism.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let run = run_experiment_timed(&config, threads).map_err(runtime)?;
    let summary = aggregate_traces(&run.traces).map_err(runtime)?;
    create_dir(dir)?;
    persist_traces(&run.traces, dir.join("traces.csv")).map_err(runtime)?;
    persist_summary(&summary, dir.join("summary.csv")).map_err(runtime)?;

    let _ = writeln!(
        out,
        "{} games, horizon {}, results in {}",
        run.traces.len(),
        config.horizon,
        dir.display()
    );
    let _ = writeln!(
        out,
        "{:<28} {:>14} {:>12} {:>12}",
        "policy", "mean regret", "std", "ms/trial"
    );
    let timings = timing_report(&run.timings);
    for (row, timing) in final_rows(&summary).into_iter().zip(&timings) {
        let _ = writeln!(
            out,
            "{:<28} {:>14.3} {:>12.3} {:>12.4}",
            row.policy,
            row.mean,
            row.std,
            timing.ms_per_trial()
        );
    }
    Ok(())
}

fn file_stem_for(query: &str) -> String {
    query
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn cmd_infer(log: &Path, dir: &Path, filter: &LogFilter, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let file = fs::File::open(log).map_err(|e| Failure::new(Kind::Input, format!("{}: {e}", log.display())))?;
    let records = parse_click_log(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Parse { .. } => Failure::new(Kind::LogParse, format!("{}: {e}", log.display())),
        other => runtime(other),
    })?;
    let queries = filter_click_logs(&records, filter);
    if queries.is_empty() {
        let _ = writeln!(err, "warning: no query passed the filters");
        return Ok(());
    }
    let params_dir = dir.join("params");
    create_dir(&params_dir)?;

    let kappa_cols: Vec<String> = (1..=filter.n_positions).map(|l| format!("kappa_{l}")).collect();
    let mut table = format!("query,N,min_theta,max_theta,{}\n", kappa_cols.join(","));
    let _ = writeln!(
        out,
        "{:<16} {:>4} {:>10} {:>10}  kappa",
        "query", "N", "min theta", "max theta"
    );
    for (query, qm) in &queries {
        let params = match svd_rank1_extract(&qm.matrix) {
            Ok(p) => p,
            Err(e) => {
                let _ = writeln!(err, "warning: query {query} skipped: {e}");
                continue;
            }
        };
        let path = params_dir.join(format!("query_{}.json", file_stem_for(query)));
        let json = serde_json::to_string_pretty(&params).map_err(runtime)?;
        fs::write(&path, json + "\n").map_err(|e| runtime(format!("{}: {e}", path.display())))?;

        let lo = params.theta().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = params.theta().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let kappas: Vec<String> = params.kappa().iter().map(|k| format!("{k:.3}")).collect();
        table.push_str(&format!(
            "{query},{},{lo:.6},{hi:.6},{}\n",
            params.n_items(),
            params
                .kappa()
                .iter()
                .map(|k| format!("{k:.6}"))
                .collect::<Vec<_>>()
                .join(",")
        ));
        let _ = writeln!(
            out,
            "{query:<16} {:>4} {lo:>10.3} {hi:>10.3}  {}",
            params.n_items(),
            kappas.join(" ")
        );
    }
    let table_path = dir.join("table.csv");
    fs::write(&table_path, table).map_err(|e| runtime(format!("{}: {e}", table_path.display())))?;
    Ok(())
}

fn cmd_report(traces_path: &Path, out: &mut dyn Write) -> CmdResult {
    if !traces_path.exists() {
        return Err(Failure::new(
            Kind::Input,
            format!("{}: no such file", traces_path.display()),
        ));
    }
    let traces = load_traces(traces_path).map_err(|e| Failure::new(Kind::Input, e))?;
    if traces.is_empty() {
        return Err(Failure::new(
            Kind::Input,
            format!("{}: no traces", traces_path.display()),
        ));
    }
    let summary = aggregate_traces(&traces).map_err(|e| Failure::new(Kind::Input, e))?;
    let runs = |p: &str| traces.iter().filter(|t| t.policy == p).count();
    let _ = writeln!(
        out,
        "{:<28} {:>5} {:>8} {:>14} {:>12} {:>12} {:>12}",
        "policy", "runs", "T", "mean", "std", "median", "q95"
    );
    for row in final_rows(&summary) {
        let _ = writeln!(
            out,
            "{:<28} {:>5} {:>8} {:>14.1} {:>12.3} {:>12.3} {:>12.3}",
            row.policy,
            runs(&row.policy),
            row.t,
            row.mean,
            row.std,
            row.q50,
            row.q95
        );
    }
    Ok(())
}

fn default_diag_c() -> f64 {
    100.0
}
fn default_diag_m() -> usize {
    20
}
fn default_diag_t() -> u64 {
    1
}
fn default_chains() -> usize {
    1000
}

/// Input of the `diagnose` subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    /// Stats snapshot; when absent, empty stats of the given size.
    #[serde(default)]
    pub stats: Option<ClickStats>,
    #[serde(default)]
    pub n_items: Option<usize>,
    #[serde(default)]
    pub n_positions: Option<usize>,
    #[serde(default = "default_diag_c")]
    pub c: f64,
    #[serde(default = "default_diag_m")]
    pub m: usize,
    #[serde(default = "default_diag_t")]
    pub t: u64,
    /// Independent cold-start chains.
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DiagnoseConfig {
    pub fn resolved_stats(&self) -> crate::Result<ClickStats> {
        match (&self.stats, self.n_items, self.n_positions) {
            (Some(s), _, _) => Ok(s.clone()),
            (None, Some(n), Some(l)) if n >= l && l >= 1 => Ok(ClickStats::new(n, l)),
            _ => Err(Error::InvalidConfig(
                "diagnose needs `stats` or `n_items` >= `n_positions` >= 1".into(),
            )),
        }
    }
}

/// Acceptance statistics and final states of the diagnostic chains.
#[derive(Debug, Clone)]
pub struct DiagnoseReport {
    pub steps: Vec<(usize, ChainStep)>,
    pub finals: Vec<JointSample>,
}

impl DiagnoseReport {
    pub fn acceptance_rate(&self) -> f64 {
        self.steps.iter().filter(|(_, s)| s.accepted).count() as f64 / self.steps.len().max(1) as f64
    }

    pub fn coordinate_rates(&self) -> Vec<(Coordinate, f64)> {
        let mut out: Vec<(Coordinate, usize, usize)> = Vec::new();
        for (_, s) in &self.steps {
            match out.iter_mut().find(|(c, _, _)| *c == s.coordinate) {
                Some(e) => {
                    e.1 += s.accepted as usize;
                    e.2 += 1;
                }
                None => out.push((s.coordinate, s.accepted as usize, 1)),
            }
        }
        out.into_iter().map(|(c, a, n)| (c, a as f64 / n as f64)).collect()
    }

    /// Final values of one coordinate across chains.
    pub fn marginal(&self, coordinate: Coordinate) -> Vec<f64> {
        self.finals
            .iter()
            .map(|s| match coordinate {
                Coordinate::Theta(i) => s.theta()[i],
                Coordinate::Kappa(l) => s.kappa()[l],
            })
            .collect()
    }
}

/// Kolmogorov-Smirnov distance between a sample and the uniform law on
/// `[0, 1]`.
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(k, &x)| (x - k as f64 / n).max((k + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

/// Runs `config.chains` cold-start chains; step iterations are numbered
/// `chain * m + sweep`.
pub fn diagnose(config: &DiagnoseConfig) -> crate::Result<DiagnoseReport> {
    let stats = config.resolved_stats()?;
    let mh = MhConfig {
        c: config.c,
        m: config.m,
        warm_start: false,
    };
    let mut rng = RngStream::new(config.seed);
    let mut steps = Vec::new();
    let mut finals = Vec::with_capacity(config.chains);
    for chain in 0..config.chains {
        let base = chain * config.m;
        let s = mh_sample_observed(&stats, &mh, config.t, None, &mut rng, |step| {
            steps.push((base + step.sweep, *step))
        })?;
        finals.push(s);
    }
    Ok(DiagnoseReport { steps, finals })
}

fn cmd_diagnose(config_path: &Path, dir: &Path, seed: Option<u64>, out: &mut dyn Write) -> CmdResult {
    let text = fs::read_to_string(config_path)
        .map_err(|e| Failure::new(Kind::Input, format!("{}: {e}", config_path.display())))?;
    let mut config: DiagnoseConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::new(Kind::Config, format!("{}: {e}", config_path.display())))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let report = diagnose(&config).map_err(|e| Failure::new(Kind::Config, e))?;

    create_dir(dir)?;
    let path = dir.join("chain.csv");
    let file = fs::File::create(&path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let csv_err = |e: csv::Error| runtime(format!("{}: {e}", path.display()));
    w.write_record(["iteration", "coordinate", "value", "accepted"])
        .map_err(csv_err)?;
    for (iteration, s) in &report.steps {
        w.write_record([
            iteration.to_string(),
            s.coordinate.to_string(),
            format!("{:.16e}", s.value),
            (s.accepted as u8).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| runtime(format!("{}: {e}", path.display())))?;

    let _ = writeln!(out, "overall acceptance rate {:.4}", report.acceptance_rate());
    let _ = writeln!(out, "{:<12} {:>10} {:>10}", "coordinate", "accept", "ks");
    for (coord, rate) in report.coordinate_rates() {
        let ks = ks_uniform(&report.marginal(coord));
        let _ = writeln!(out, "{:<12} {rate:>10.4} {ks:>10.4}", coord.to_string());
    }
    Ok(())
}

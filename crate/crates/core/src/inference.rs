//! Point estimates of `(theta, kappa)` from click data.
//!
//! A click matrix holds the estimated click probability of every
//! (item, position) cell. Under the PBM it is the rank-1 matrix
//! `theta kappa^T`, so the leading singular triple `(zeta, u, v)` recovers
//! `theta = v_0 zeta u` and `kappa = v / v_0`.
//!
//! The same extraction is applied to filtered query logs to build the
//! behavioral environments.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pbm::{ClickStats, PbmParams};
use crate::rng::RngStream;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 10_000;

/// Estimated click probability per (item, position).
#[derive(Debug, Clone, PartialEq)]
pub struct ClickMatrix {
    n_items: usize,
    n_positions: usize,
    values: Vec<f64>,
}

impl ClickMatrix {
    /// Row-major `n_items x n_positions` values in `[0, 1]`.
    pub fn new(n_items: usize, n_positions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_items * n_positions || n_positions == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n_items}x{n_positions} matrix",
                values.len()
            )));
        }
        if let Some(x) = values.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidParams(format!("click probability {x} outside [0,1]")));
        }
        Ok(Self {
            n_items,
            n_positions,
            values,
        })
    }

    /// `theta kappa^T`.
    pub fn outer(params: &PbmParams) -> Self {
        let values = params
            .theta()
            .iter()
            .flat_map(|&t| params.kappa().iter().map(move |&k| t * k))
            .collect();
        Self {
            n_items: params.n_items(),
            n_positions: params.n_positions(),
            values,
        }
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_positions(&self) -> usize {
        self.n_positions
    }

    pub fn get(&self, item: usize, position: usize) -> f64 {
        self.values[item * self.n_positions + position]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_positions..(i + 1) * self.n_positions]
    }
}

/// Add-one smoothed click rates `(S + 1) / (S + F + 2)`.
pub fn click_matrix(stats: &ClickStats) -> ClickMatrix {
    let (n, l) = (stats.n_items(), stats.n_positions());
    let mut values = Vec::with_capacity(n * l);
    for i in 0..n {
        for p in 0..l {
            let s = stats.successes(i, p) as f64;
            let f = stats.failures(i, p) as f64;
            values.push((s + 1.0) / (s + f + 2.0));
        }
    }
    ClickMatrix {
        n_items: n,
        n_positions: l,
        values,
    }
}

/// Leading singular value with its left and right singular vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Triple {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Power iteration on `M^T M`. The returned vectors are unit-norm with the
/// largest-magnitude entry of `v` positive.
pub fn rank1_triple(m: &ClickMatrix) -> Result<Rank1Triple> {
    let (n, l) = (m.n_items, m.n_positions);
    if m.values.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateMatrix("matrix is zero".into()));
    }
    let mut gram = vec![0.0; l * l];
    for i in 0..n {
        let row = m.row(i);
        for a in 0..l {
            for b in 0..l {
                gram[a * l + b] += row[a] * row[b];
            }
        }
    }

    let mut v = vec![1.0 / (l as f64).sqrt(); l];
    let mut next = vec![0.0; l];
    for _ in 0..POWER_MAX_ITERS {
        for a in 0..l {
            next[a] = (0..l).map(|b| gram[a * l + b] * v[b]).sum();
        }
        let len = norm(&next);
        if len == 0.0 {
            return Err(Error::DegenerateMatrix("power iteration collapsed".into()));
        }
        next.iter_mut().for_each(|x| *x /= len);
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        if delta < POWER_TOL {
            break;
        }
    }

    let mut u: Vec<f64> = (0..n)
        .map(|i| m.row(i).iter().zip(&v).map(|(a, b)| a * b).sum())
        .collect();
    let sigma = norm(&u);
    if sigma == 0.0 {
        return Err(Error::DegenerateMatrix("leading singular value is zero".into()));
    }
    u.iter_mut().for_each(|x| *x /= sigma);

    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
        v.iter_mut().for_each(|x| *x = -*x);
    }
    for x in u.iter_mut().chain(v.iter_mut()) {
        if *x < 0.0 && *x > -1e-12 {
            *x = 0.0;
        }
    }
    Ok(Rank1Triple { sigma, u, v })
}

/// Rank-1 estimate of the PBM parameters of `m`, normalized so that
/// `kappa[0] = 1`. Both vectors are clamped to `[0, 1]`.
pub fn svd_rank1_extract(m: &ClickMatrix) -> Result<PbmParams> {
    let Rank1Triple { sigma, u, v } = rank1_triple(m)?;
    let v0 = v[0];
    if v0 <= 0.0 {
        return Err(Error::DegenerateMatrix(
            "first position carries no weight in the leading singular vector".into(),
        ));
    }
    let theta = u.iter().map(|&x| (v0 * sigma * x).clamp(0.0, 1.0)).collect();
    let kappa = v.iter().map(|&x| (x / v0).clamp(0.0, 1.0)).collect();
    PbmParams::new(theta, kappa)
}

/// One line of a query log: an ad shown at a position during one session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickLogRecord {
    pub query: String,
    pub ad: String,
    /// 1-based position.
    pub position: usize,
    pub clicks: u64,
    pub impressions: u64,
}

/// Reads a tab-separated log with columns
/// `query, ad, position, click, impression`. A header line is optional.
pub fn parse_click_log(reader: impl Read) -> Result<Vec<ClickLogRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .flexible(true)
        .quoting(false)
        .from_reader(reader);
    let mut out = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let line = idx + 1;
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(line, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        if row.len() != 5 {
            return Err(Error::Parse {
                line,
                message: format!("expected 5 tab-separated fields, found {}", row.len()),
            });
        }
        let field = |k: usize| row[k].trim();
        if line == 1 && field(2).parse::<usize>().is_err() {
            continue;
        }
        let number = |k: usize, name: &str| {
            field(k).parse::<u64>().map_err(|_| Error::Parse {
                line,
                message: format!("{name} `{}` is not a nonnegative integer", field(k)),
            })
        };
        let position = number(2, "position")? as usize;
        let clicks = number(3, "click")?;
        let impressions = number(4, "impression")?;
        if position == 0 {
            return Err(Error::Parse {
                line,
                message: "positions are 1-based".into(),
            });
        }
        if clicks > impressions {
            return Err(Error::Parse {
                line,
                message: format!("{clicks} clicks exceed {impressions} impressions"),
            });
        }
        out.push(ClickLogRecord {
            query: field(0).to_string(),
            ad: field(1).to_string(),
            position,
            clicks,
            impressions,
        });
    }
    Ok(out)
}

/// Writes records in the format read by [`parse_click_log`], with header.
pub fn write_click_log(records: &[ClickLogRecord], mut writer: impl Write) -> std::io::Result<()> {
    writeln!(writer, "query\tad\tposition\tclick\timpression")?;
    for r in records {
        writeln!(
            writer,
            "{}\t{}\t{}\t{}\t{}",
            r.query, r.ad, r.position, r.clicks, r.impressions
        )?;
    }
    Ok(())
}

/// Thresholds for [`filter_click_logs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogFilter {
    pub min_displays: u64,
    pub min_ads: usize,
    pub n_positions: usize,
}

impl Default for LogFilter {
    fn default() -> Self {
        Self {
            min_displays: 1_000,
            min_ads: 5,
            n_positions: 3,
        }
    }
}

/// Surviving ads of one query and their per-session click rates.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryMatrix {
    pub ads: Vec<String>,
    pub matrix: ClickMatrix,
}

/// Per-position (sessions, clicked sessions) of one ad.
type SessionCounts = Vec<(u64, u64)>;

/// Builds per-query click matrices.
///
/// Every record is one session. A cell is the fraction of sessions with at
/// least one click; impression counts are ignored. Ads shown in fewer than
/// `min_displays` sessions at any of the first `n_positions` positions are
/// dropped, then queries left with fewer than `min_ads` ads.
pub fn filter_click_logs(records: &[ClickLogRecord], filter: &LogFilter) -> BTreeMap<String, QueryMatrix> {
    let l = filter.n_positions;
    let mut counts: BTreeMap<&str, BTreeMap<&str, SessionCounts>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.position <= l) {
        let cells = counts
            .entry(&r.query)
            .or_default()
            .entry(&r.ad)
            .or_insert_with(|| vec![(0, 0); l]);
        let cell = &mut cells[r.position - 1];
        cell.0 += 1;
        cell.1 += (r.clicks > 0) as u64;
    }

    let mut out = BTreeMap::new();
    for (query, ads) in counts {
        let kept: Vec<(&str, Vec<(u64, u64)>)> = ads
            .into_iter()
            .filter(|(_, cells)| cells.iter().all(|&(n, _)| n >= filter.min_displays.max(1)))
            .collect();
        if kept.len() < filter.min_ads {
            continue;
        }
        let values = kept
            .iter()
            .flat_map(|(_, cells)| cells.iter().map(|&(n, c)| c as f64 / n as f64))
            .collect();
        let matrix = ClickMatrix {
            n_items: kept.len(),
            n_positions: l,
            values,
        };
        out.insert(
            query.to_string(),
            QueryMatrix {
                ads: kept.into_iter().map(|(a, _)| a.to_string()).collect(),
                matrix,
            },
        );
    }
    out
}

/// Session records drawn from a PBM: `sessions_per_cell` sessions for every
/// (ad, position) pair. Ads are named `ad0`, `ad1`, ...
pub fn synthesize_click_log(
    query: &str,
    params: &PbmParams,
    sessions_per_cell: u64,
    rng: &mut RngStream,
) -> Vec<ClickLogRecord> {
    let mut out = Vec::new();
    for (i, &theta) in params.theta().iter().enumerate() {
        for (l, &kappa) in params.kappa().iter().enumerate() {
            for _ in 0..sessions_per_cell {
                let clicked = rng.random::<f64>() < theta * kappa;
                out.push(ClickLogRecord {
                    query: query.to_string(),
                    ad: format!("ad{i}"),
                    position: l + 1,
                    clicks: clicked as u64,
                    impressions: 1,
                });
            }
        }
    }
    out
}

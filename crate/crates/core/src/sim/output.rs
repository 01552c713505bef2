//! CSV emission. Every file starts with a `#`-prefixed metadata block,
//! followed by one header row. Reals use Rust's shortest round-trip
//! formatting, so parsing a value back yields the identical float.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::analysis::EpisodeSummary;
use crate::rng::RNG_ALGORITHM;
use crate::scalar::Real;
use crate::sim::config::{CaseId, Scenario, SimConfig};
use crate::sim::engine::Trajectory;
use crate::sim::montecarlo::McSummary;

/// `git describe` of the source tree at build time.
pub const GIT_DESCRIBE: &str = env!("GP_CONSENSUS_GIT_DESCRIBE");

/// Values recorded in every output header.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub delta: f64,
    pub tau: f64,
    pub beta: f64,
    pub eta_bar_lower: f64,
    pub epsilon: f64,
    pub config_hash: String,
    pub extra: Vec<(String, String)>,
}

impl RunMeta {
    pub fn from_scenario<T: Real>(scenario: &Scenario<T>) -> Self {
        Self {
            delta: scenario.config.delta,
            tau: scenario.config.tau,
            beta: scenario.bound.beta.to_f64_lossy(),
            eta_bar_lower: scenario.bound.eta_bar_lower.to_f64_lossy(),
            epsilon: scenario.epsilon.to_f64_lossy(),
            config_hash: scenario.config.hash_hex(),
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    fn write_header(&self, out: &mut String) {
        let _ = writeln!(out, "# delta={}", self.delta);
        let _ = writeln!(out, "# tau={}", self.tau);
        let _ = writeln!(out, "# beta={}", self.beta);
        let _ = writeln!(out, "# eta_lower={}", self.eta_bar_lower);
        let _ = writeln!(out, "# epsilon={}", self.epsilon);
        let _ = writeln!(out, "# git={GIT_DESCRIBE}");
        let _ = writeln!(out, "# config_hash={}", self.config_hash);
        let _ = writeln!(out, "# rng={RNG_ALGORITHM}");
        for (k, v) in &self.extra {
            let _ = writeln!(out, "# {k}={v}");
        }
    }
}

fn push_row(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let mut first = true;
    for f in fields {
        if !first {
            out.push(',');
        }
        out.push_str(&f);
        first = false;
    }
    out.push('\n');
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

pub fn trajectory_header(n: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain(indexed("x", n))
        .chain(indexed("xbar", n))
        .chain(indexed("u", n))
        .chain(indexed("rho", n))
        .chain(indexed("eta", n))
        .chain(indexed("trig", n))
        .chain(indexed("d", n))
        .chain(std::iter::once("err".to_string()))
        .collect()
}

/// `trajectory_<case>.csv` contents.
pub fn trajectory_csv<T: Real>(traj: &Trajectory<T>, meta: &RunMeta) -> String {
    let n = traj.n_agents;
    let mut out = String::new();
    meta.write_header(&mut out);
    push_row(&mut out, trajectory_header(n));
    for r in &traj.records {
        let fields = std::iter::once(r.t.to_string())
            .chain(r.x.iter().map(T::to_string))
            .chain(r.x_bar.iter().map(T::to_string))
            .chain(r.u.iter().map(T::to_string))
            .chain(r.rho.iter().map(T::to_string))
            .chain(r.eta.iter().map(T::to_string))
            .chain(r.fired.iter().map(|&f| u8::from(f).to_string()))
            .chain(r.dataset_sizes.iter().map(usize::to_string))
            .chain(std::iter::once(r.err.to_string()));
        push_row(&mut out, fields);
    }
    out
}

fn summary_header(n: usize) -> Vec<String> {
    ["case", "run", "seed", "status", "final_err"]
        .into_iter()
        .map(String::from)
        .chain(indexed("trig", n))
        .chain(indexed("d", n))
        .chain(
            [
                "epsilon",
                "x_bar_star",
                "domain_containment",
                "stayed_in_domain",
                "gamma_ok",
                "aux_mean_drift",
                "aux_final_err",
                "relaxed_disagreement",
                "max_post_update_std",
                "last_trigger_t",
            ]
            .into_iter()
            .map(String::from),
        )
        .collect()
}

fn summary_fields<T: Real>(s: &EpisodeSummary<T>) -> Vec<String> {
    let opt = |v: Option<T>| v.map(|v| v.to_string()).unwrap_or_default();
    std::iter::once(s.final_error.to_string())
        .chain(s.trigger_counts.iter().map(usize::to_string))
        .chain(s.max_dataset_sizes.iter().map(usize::to_string))
        .chain([
            s.epsilon.to_string(),
            s.x_bar_star.to_string(),
            u8::from(s.domain_containment).to_string(),
            u8::from(s.stayed_in_domain).to_string(),
            u8::from(s.gamma_condition_holds()).to_string(),
            s.aux_mean_drift.to_string(),
            s.aux_final_error.to_string(),
            s.relaxed_disagreement.to_string(),
            opt(s.max_post_update_std),
            opt(s.last_trigger_time),
        ])
        .collect()
}

/// `summary.csv` for a single episode.
pub fn episode_summary_csv<T: Real>(case: &str, seed: u64, s: &EpisodeSummary<T>, meta: &RunMeta) -> String {
    let mut out = String::new();
    meta.write_header(&mut out);
    push_row(&mut out, summary_header(s.trigger_counts.len()));
    push_row(
        &mut out,
        [case.to_string(), "0".into(), seed.to_string(), "ok".into()].into_iter().chain(summary_fields(s)),
    );
    out
}

/// `summary.csv` for a Monte Carlo study; failed runs keep their row with
/// the error message in the status column and empty metrics.
pub fn mc_summary_csv(mc: &McSummary, n_agents: usize, meta: &RunMeta) -> String {
    let mut out = String::new();
    meta.write_header(&mut out);
    let header = summary_header(n_agents);
    let width = header.len();
    push_row(&mut out, header);
    for run in &mc.runs {
        let lead = [run.case.to_string(), run.run.to_string(), run.seed.to_string()];
        match &run.result {
            Ok(r) => push_row(
                &mut out,
                lead.into_iter().chain(std::iter::once("ok".to_string())).chain(summary_fields(&r.summary)),
            ),
            Err(msg) => {
                let status = format!("failed: {}", msg.replace([',', '\n'], ";"));
                let pad = std::iter::repeat(String::new()).take(width - 4);
                push_row(&mut out, lead.into_iter().chain(std::iter::once(status)).chain(pad));
            }
        }
    }
    out
}

/// `montecarlo.csv`: per-run error series, one row per `(case, run, t)`.
pub fn montecarlo_csv(mc: &McSummary, meta: &RunMeta) -> String {
    let mut out = String::new();
    meta.write_header(&mut out);
    push_row(&mut out, ["case", "run", "seed", "t", "err"].map(String::from));
    for run in &mc.runs {
        if let Ok(r) = &run.result {
            for &(t, err) in &r.err_series {
                push_row(
                    &mut out,
                    [run.case.to_string(), run.run.to_string(), run.seed.to_string(), t.to_string(), err.to_string()],
                );
            }
        }
    }
    out
}

/// `montecarlo_stats.csv`: cross-run error statistics per `(case, t)`.
pub fn montecarlo_stats_csv(mc: &McSummary, meta: &RunMeta) -> String {
    let mut out = String::new();
    meta.write_header(&mut out);
    push_row(
        &mut out,
        ["case", "runs", "t", "mean_err", "min_err", "max_err", "std_err", "median_err"].map(String::from),
    );
    for s in &mc.stats {
        for k in 0..s.t.len() {
            push_row(
                &mut out,
                [
                    s.case.to_string(),
                    s.succeeded.to_string(),
                    s.t[k].to_string(),
                    s.mean[k].to_string(),
                    s.min[k].to_string(),
                    s.max[k].to_string(),
                    s.std[k].to_string(),
                    s.median[k].to_string(),
                ],
            );
        }
    }
    out
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    io::Write::write_all(&mut tmp, contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Parsed CSV: metadata pairs, header and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCsv {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ParsedCsv {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Parses an all-numeric CSV produced by this module (`NaN` allowed).
pub fn parse_numeric_csv(text: &str) -> Result<ParsedCsv, String> {
    let mut meta = Vec::new();
    let mut header = None;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if let Some(m) = line.strip_prefix('#') {
            if let Some((k, v)) = m.trim().split_once('=') {
                meta.push((k.to_string(), v.to_string()));
            }
            continue;
        }
        if header.is_none() {
            header = Some(line.split(',').map(String::from).collect::<Vec<_>>());
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.parse::<f64>().map_err(|e| format!("line {}: '{f}': {e}", lineno + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(ParsedCsv { meta, header: header.ok_or("missing header row")?, rows })
}

/// File name for a single-case trajectory.
pub fn trajectory_file_name(case: Option<CaseId>) -> String {
    match case {
        Some(c) => format!("trajectory_{c}.csv"),
        None => "trajectory_custom.csv".to_string(),
    }
}

/// Metadata for Monte Carlo outputs built from the base configuration.
pub fn mc_meta(base: &SimConfig, n_runs: usize) -> Result<RunMeta, crate::sim::config::ConfigError> {
    Ok(RunMeta::from_scenario(&base.scenario::<f64>()?).with("runs", n_runs).with("base_seed", base.seed))
}

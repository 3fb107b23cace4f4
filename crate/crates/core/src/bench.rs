//! Benchmark harness: per-instance records, CSV output, summaries and buckets.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::Method;
use crate::astar::SearchConfig;
use crate::eventlog::{EventLog, Trace};
use crate::io::{read_log, read_model, write_pnml, write_xes, ModelIoError};
use crate::petri::{build_trace_model, PetriNet};
use crate::rational::{format_rational, Rational};
use crate::reach::LimitOverrides;
use crate::selector::{
    hybrid_align, replay_trace, run_astar, run_lp, token_replay_fitness, HybridConfig, RunOutcome, SelectionThresholds,
};
use crate::sync::{build_sync_product, CostConfig};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] ModelIoError),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV output: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMethod {
    Astar,
    Lp,
    Hybrid,
    Both,
}

impl fmt::Display for RunMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunMethod::Astar => "astar",
            RunMethod::Lp => "lp",
            RunMethod::Hybrid => "hybrid",
            RunMethod::Both => "both",
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub method: RunMethod,
    pub cost: CostConfig,
    pub limits: LimitOverrides,
    pub search: SearchConfig,
    pub thresholds: SelectionThresholds,
    pub parallelism: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: RunMethod::Both,
            cost: CostConfig::default(),
            limits: LimitOverrides::default(),
            search: SearchConfig::default(),
            thresholds: SelectionThresholds::default(),
            parallelism: 1,
            seed: 42,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.search.timeout.is_zero() {
            return Err(BenchError::Config("timeout must be positive".into()));
        }
        if self.parallelism == 0 {
            return Err(BenchError::Config("parallelism must be at least 1".into()));
        }
        self.cost.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        self.limits.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(())
    }
}

/// Column order of the benchmark CSV. Times are integer microseconds.
pub const CSV_COLUMNS: [&str; 22] = [
    "case_id",
    "model_id",
    "log_id",
    "trace_length",
    "method",
    "method_outcomes",
    "astar_cost",
    "lp_cost",
    "costs_agree",
    "lp_win",
    "astar_time_us",
    "lp_total_time_us",
    "rg_build_time_us",
    "lp_solve_time_us",
    "rg_nodes",
    "rg_edges",
    "rg_truncated",
    "astar_expansions",
    "heuristic_calls",
    "deviations",
    "fallback",
    "error",
];

/// One (trace, model) instance. Absent values are empty CSV cells.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub case_id: String,
    pub model_id: String,
    pub log_id: String,
    pub trace_length: usize,
    pub method: RunMethod,
    pub astar_outcome: Option<RunOutcome>,
    pub lp_outcome: Option<RunOutcome>,
    pub astar_cost: Option<Rational>,
    pub lp_cost: Option<Rational>,
    pub costs_agree: bool,
    pub lp_win: Option<bool>,
    pub astar_time: Option<Duration>,
    pub lp_total_time: Option<Duration>,
    pub rg_build_time: Option<Duration>,
    pub lp_solve_time: Option<Duration>,
    pub rg_nodes: Option<usize>,
    pub rg_edges: Option<usize>,
    pub rg_truncated: Option<bool>,
    pub astar_expansions: Option<usize>,
    pub heuristic_calls: Option<usize>,
    pub deviations: Option<usize>,
    pub fallback: Option<bool>,
    pub error: Option<String>,
}

impl BenchmarkRecord {
    fn empty(case_id: &str, model_id: &str, log_id: &str, len: usize, method: RunMethod) -> Self {
        BenchmarkRecord {
            case_id: case_id.to_string(),
            model_id: model_id.to_string(),
            log_id: log_id.to_string(),
            trace_length: len,
            method,
            astar_outcome: None,
            lp_outcome: None,
            astar_cost: None,
            lp_cost: None,
            costs_agree: false,
            lp_win: None,
            astar_time: None,
            lp_total_time: None,
            rg_build_time: None,
            lp_solve_time: None,
            rg_nodes: None,
            rg_edges: None,
            rg_truncated: None,
            astar_expansions: None,
            heuristic_calls: None,
            deviations: None,
            fallback: None,
            error: None,
        }
    }

    pub fn method_outcomes(&self) -> String {
        let mut parts = Vec::new();
        if let Some(o) = self.astar_outcome {
            parts.push(format!("ASTAR={}", o.as_str()));
        }
        if let Some(o) = self.lp_outcome {
            parts.push(format!("LP={}", o.as_str()));
        }
        parts.join(";")
    }

    pub fn both_optimal(&self) -> bool {
        self.astar_outcome == Some(RunOutcome::Optimal) && self.lp_outcome == Some(RunOutcome::Optimal)
    }

    /// Outcome of the run that decides the instance: A* for `astar`, LP for
    /// `lp`, whichever ran for `hybrid`, and the worse of the two for `both`.
    pub fn primary_outcome(&self) -> RunOutcome {
        match (self.astar_outcome, self.lp_outcome) {
            (Some(RunOutcome::Optimal), Some(l)) => l,
            (Some(a), _) => a,
            (None, Some(l)) => l,
            (None, None) => RunOutcome::Error,
        }
    }

    pub fn is_completed(&self) -> bool {
        self.primary_outcome() == RunOutcome::Optimal
    }

    pub fn csv_fields(&self) -> Vec<String> {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        let us = |d: &Option<Duration>| d.map(|d| d.as_micros().to_string()).unwrap_or_default();
        let cost = |c: &Option<Rational>| c.as_ref().map(format_rational).unwrap_or_default();
        vec![
            self.case_id.clone(),
            self.model_id.clone(),
            self.log_id.clone(),
            self.trace_length.to_string(),
            self.method.to_string(),
            self.method_outcomes(),
            cost(&self.astar_cost),
            cost(&self.lp_cost),
            self.costs_agree.to_string(),
            opt(&self.lp_win),
            us(&self.astar_time),
            us(&self.lp_total_time),
            us(&self.rg_build_time),
            us(&self.lp_solve_time),
            opt(&self.rg_nodes),
            opt(&self.rg_edges),
            opt(&self.rg_truncated),
            opt(&self.astar_expansions),
            opt(&self.heuristic_calls),
            opt(&self.deviations),
            opt(&self.fallback),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// Runs one trace. `fitness` feeds the hybrid selector and is ignored otherwise.
pub fn run_instance(
    net: &PetriNet,
    model_id: &str,
    log_id: &str,
    trace: &Trace,
    fitness: &Rational,
    cfg: &RunConfig,
) -> BenchmarkRecord {
    let mut rec = BenchmarkRecord::empty(&trace.case_id, model_id, log_id, trace.len(), cfg.method);
    if cfg.method == RunMethod::Hybrid {
        let hcfg = HybridConfig {
            thresholds: cfg.thresholds.clone(),
            cost: cfg.cost.clone(),
            limits: cfg.limits,
            search: cfg.search,
        };
        match hybrid_align(net, trace, fitness, &hcfg) {
            Ok(h) => {
                rec.fallback = Some(h.fallback);
                rec.deviations = h.alignment.as_ref().map(|a| a.deviations());
                let cost = h.alignment.as_ref().map(|a| a.total_cost);
                if h.method_chosen == Method::Lp {
                    rec.lp_outcome = Some(if h.fallback { RunOutcome::Truncated } else { h.outcome });
                    rec.rg_build_time = Some(h.timings.rg_build);
                    rec.lp_solve_time = Some(h.timings.lp_solve);
                    rec.lp_total_time = Some(h.timings.rg_build + h.timings.lp_solve);
                }
                match h.method_used {
                    Method::Lp => rec.lp_cost = cost,
                    Method::Astar => {
                        rec.astar_outcome = Some(h.outcome);
                        rec.astar_cost = cost;
                        rec.astar_time = Some(h.timings.search);
                    }
                }
            }
            Err(e) => {
                rec.error = Some(e.to_string());
                rec.astar_outcome = Some(RunOutcome::Error);
            }
        }
        return rec;
    }

    let sp = match build_sync_product(net, &build_trace_model(trace), &cfg.cost) {
        Ok(sp) => sp,
        Err(e) => {
            rec.error = Some(e.to_string());
            rec.astar_outcome = matches!(cfg.method, RunMethod::Astar | RunMethod::Both).then_some(RunOutcome::Error);
            rec.lp_outcome = matches!(cfg.method, RunMethod::Lp | RunMethod::Both).then_some(RunOutcome::Error);
            return rec;
        }
    };
    let mut errors = Vec::new();
    if matches!(cfg.method, RunMethod::Astar | RunMethod::Both) {
        let t = Instant::now();
        let run = run_astar(&sp, &cfg.search);
        rec.astar_time = Some(t.elapsed());
        rec.astar_outcome = Some(run.outcome);
        rec.astar_cost = run.alignment.as_ref().map(|a| a.total_cost);
        rec.astar_expansions = Some(run.stats.expansions);
        rec.heuristic_calls = Some(run.stats.heuristic_calls);
        rec.deviations = run.alignment.as_ref().map(|a| a.deviations());
    }
    if matches!(cfg.method, RunMethod::Lp | RunMethod::Both) {
        let limits = cfg.limits.resolve(&sp);
        let run = run_lp(&sp, &limits);
        rec.lp_outcome = Some(run.outcome);
        rec.lp_cost = run.alignment.as_ref().map(|a| a.total_cost);
        rec.rg_build_time = Some(run.rg_build);
        rec.lp_solve_time = Some(run.lp_solve);
        rec.lp_total_time = Some(run.rg_build + run.lp_solve);
        rec.rg_nodes = Some(run.rg_nodes);
        rec.rg_edges = Some(run.rg_edges);
        rec.rg_truncated = Some(run.rg_stats.truncated);
        if rec.deviations.is_none() {
            rec.deviations = run.alignment.as_ref().map(|a| a.deviations());
        }
        errors.extend(run.error);
    }
    if rec.both_optimal() {
        rec.costs_agree = rec.astar_cost == rec.lp_cost;
        rec.lp_win = Some(rec.lp_total_time < rec.astar_time);
        if !rec.costs_agree {
            log::error!("cost disagreement on case {}: A* {:?} vs LP {:?}", trace.case_id, rec.astar_cost, rec.lp_cost);
        }
    }
    if !errors.is_empty() {
        rec.error = Some(errors.join("; "));
    }
    rec
}

/// Runs every trace of `log`; rows come back in log order regardless of parallelism.
pub fn run_log(net: &PetriNet, model_id: &str, log: &EventLog, cfg: &RunConfig) -> Result<Vec<BenchmarkRecord>, BenchError> {
    cfg.validate()?;
    let fitness = if cfg.method == RunMethod::Hybrid {
        token_replay_fitness(net, log)
    } else {
        Rational::from_integer(1)
    };
    let log_id = log.source_name.as_str();
    let run = |t: &Trace| run_instance(net, model_id, log_id, t, &fitness, cfg);
    if cfg.parallelism == 1 {
        return Ok(log.traces.iter().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;
    Ok(pool.install(|| log.traces.par_iter().map(run).collect()))
}

/// Per-trace fitness for single-trace hybrid runs.
pub fn trace_fitness(net: &PetriNet, trace: &Trace) -> Rational {
    replay_trace(net, trace).fitness()
}

pub fn write_csv<W: Write>(out: W, records: &[BenchmarkRecord]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.into()))?;
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub instances: usize,
    pub completed: usize,
    pub both_optimal: usize,
    pub agreements: usize,
    pub lp_wins: usize,
    pub timeouts: usize,
    pub truncated: usize,
    pub infeasible: usize,
    pub errors: usize,
    pub fallbacks: usize,
    pub mean_astar_time_us: f64,
    pub mean_lp_total_time_us: f64,
    pub mean_rg_build_time_us: f64,
    pub mean_lp_solve_time_us: f64,
    pub mean_astar_expansions: f64,
    pub mean_rg_nodes: f64,
}

impl Summary {
    pub fn agreement_rate(&self) -> f64 {
        ratio(self.agreements, self.both_optimal)
    }

    pub fn win_rate(&self) -> f64 {
        ratio(self.lp_wins, self.both_optimal)
    }

    /// Mean A* time over mean LP time; 0 when undefined.
    pub fn speedup(&self) -> f64 {
        if self.mean_lp_total_time_us > 0.0 {
            self.mean_astar_time_us / self.mean_lp_total_time_us
        } else {
            0.0
        }
    }

    /// Share of LP time spent building the graph.
    pub fn rg_build_share(&self) -> f64 {
        let total = self.mean_rg_build_time_us + self.mean_lp_solve_time_us;
        if total > 0.0 {
            self.mean_rg_build_time_us / total
        } else {
            0.0
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Times and counts are averaged over completed instances only.
pub fn summarize<'a>(records: impl IntoIterator<Item = &'a BenchmarkRecord>) -> Summary {
    let records: Vec<&BenchmarkRecord> = records.into_iter().collect();
    let mut s = Summary {
        instances: records.len(),
        ..Summary::default()
    };
    for r in &records {
        let outcomes = [r.astar_outcome, r.lp_outcome];
        if r.is_completed() {
            s.completed += 1;
        }
        if r.both_optimal() {
            s.both_optimal += 1;
            s.agreements += usize::from(r.costs_agree);
            s.lp_wins += usize::from(r.lp_win == Some(true));
        }
        let has = |o: RunOutcome| outcomes.contains(&Some(o));
        s.timeouts += usize::from(has(RunOutcome::Timeout));
        s.truncated += usize::from(has(RunOutcome::Truncated));
        s.infeasible += usize::from(has(RunOutcome::Infeasible));
        s.errors += usize::from(has(RunOutcome::Error));
        s.fallbacks += usize::from(r.fallback == Some(true));
    }
    let done: Vec<&&BenchmarkRecord> = records.iter().filter(|r| r.is_completed()).collect();
    let us = |d: Option<Duration>| d.map(|d| d.as_micros() as f64);
    s.mean_astar_time_us = mean(done.iter().filter_map(|r| us(r.astar_time)));
    s.mean_lp_total_time_us = mean(done.iter().filter_map(|r| us(r.lp_total_time)));
    s.mean_rg_build_time_us = mean(done.iter().filter_map(|r| us(r.rg_build_time)));
    s.mean_lp_solve_time_us = mean(done.iter().filter_map(|r| us(r.lp_solve_time)));
    s.mean_astar_expansions = mean(done.iter().filter_map(|r| r.astar_expansions.map(|v| v as f64)));
    s.mean_rg_nodes = mean(done.iter().filter_map(|r| r.rg_nodes.map(|v| v as f64)));
    s
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instances: {}", self.instances)?;
        writeln!(f, "completed: {}", self.completed)?;
        writeln!(f, "both optimal: {}", self.both_optimal)?;
        writeln!(f, "cost agreement: {}/{} ({:.1}%)", self.agreements, self.both_optimal, 100.0 * self.agreement_rate())?;
        writeln!(f, "LP win rate: {:.1}%", 100.0 * self.win_rate())?;
        writeln!(f, "speedup (A* / LP): {:.2}", self.speedup())?;
        writeln!(f, "mean A* time: {:.0} us", self.mean_astar_time_us)?;
        writeln!(
            f,
            "mean LP time: {:.0} us (RG build {:.0} us, LP solve {:.0} us)",
            self.mean_lp_total_time_us, self.mean_rg_build_time_us, self.mean_lp_solve_time_us
        )?;
        writeln!(f, "mean A* expansions: {:.1}", self.mean_astar_expansions)?;
        writeln!(f, "mean RG nodes: {:.1}", self.mean_rg_nodes)?;
        write!(
            f,
            "timeouts: {}, truncated: {}, infeasible: {}, errors: {}, fallbacks: {}",
            self.timeouts, self.truncated, self.infeasible, self.errors, self.fallbacks
        )
    }
}

pub const LENGTH_BUCKETS: [&str; 6] = ["1-10", "11-20", "21-30", "31-50", "51-100", ">100"];
pub const DEVIATION_BUCKETS: [&str; 5] = ["0", "1", "2-4", "5-10", ">10"];

/// Length bucket label; the empty trace falls in the first bucket.
pub fn length_bucket(len: usize) -> &'static str {
    match len {
        0..=10 => LENGTH_BUCKETS[0],
        11..=20 => LENGTH_BUCKETS[1],
        21..=30 => LENGTH_BUCKETS[2],
        31..=50 => LENGTH_BUCKETS[3],
        51..=100 => LENGTH_BUCKETS[4],
        _ => LENGTH_BUCKETS[5],
    }
}

pub fn deviation_bucket(deviations: usize) -> &'static str {
    match deviations {
        0 => DEVIATION_BUCKETS[0],
        1 => DEVIATION_BUCKETS[1],
        2..=4 => DEVIATION_BUCKETS[2],
        5..=10 => DEVIATION_BUCKETS[3],
        _ => DEVIATION_BUCKETS[4],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    pub bucket: String,
    pub summary: Summary,
}

/// Summaries for every label in `labels`, in that order, including empty ones.
pub fn bucketize<F>(records: &[BenchmarkRecord], labels: &[&str], key: F) -> Vec<BucketSummary>
where
    F: Fn(&BenchmarkRecord) -> Option<&'static str>,
{
    labels
        .iter()
        .map(|&label| BucketSummary {
            bucket: label.to_string(),
            summary: summarize(records.iter().filter(|r| key(r) == Some(label))),
        })
        .collect()
}

pub fn length_buckets(records: &[BenchmarkRecord]) -> Vec<BucketSummary> {
    bucketize(records, &LENGTH_BUCKETS, |r| Some(length_bucket(r.trace_length)))
}

/// Records without an optimal alignment carry no deviation count and are left out.
pub fn deviation_buckets(records: &[BenchmarkRecord]) -> Vec<BucketSummary> {
    bucketize(records, &DEVIATION_BUCKETS, |r| r.deviations.map(deviation_bucket))
}

/// Per (model, log) summaries in first-appearance order.
pub fn variant_summaries(records: &[BenchmarkRecord]) -> Vec<BucketSummary> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in records {
        let k = (r.model_id.clone(), r.log_id.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(m, l)| BucketSummary {
            bucket: format!("{m}/{l}"),
            summary: summarize(records.iter().filter(|r| r.model_id == m && r.log_id == l)),
        })
        .collect()
}

pub fn bucket_table(title: &str, buckets: &[BucketSummary]) -> String {
    let mut out = format!(
        "{title}\n{:<16} {:>6} {:>6} {:>8} {:>8} {:>8} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
        "bucket", "n", "done", "agree%", "lpwin%", "speedup", "astar_us", "lp_us", "rg_build_us", "lp_solve_us", "expansions"
    );
    for b in buckets {
        let s = &b.summary;
        out.push_str(&format!(
            "{:<16} {:>6} {:>6} {:>8.1} {:>8.1} {:>8.2} {:>12.0} {:>12.0} {:>12.0} {:>12.0} {:>12.1}\n",
            b.bucket,
            s.instances,
            s.completed,
            100.0 * s.agreement_rate(),
            100.0 * s.win_rate(),
            s.speedup(),
            s.mean_astar_time_us,
            s.mean_lp_total_time_us,
            s.mean_rg_build_time_us,
            s.mean_lp_solve_time_us,
            s.mean_astar_expansions,
        ));
    }
    out
}

/// One model paired with one log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub model_path: PathBuf,
    pub log_path: PathBuf,
    pub model_id: String,
}

fn is_log_file(name: &str) -> bool {
    let n = name.to_ascii_lowercase();
    [".xes", ".xes.gz", ".csv", ".csv.gz"].iter().any(|e| n.ends_with(e))
}

fn strip_log_ext(name: &str) -> &str {
    for e in [".xes.gz", ".csv.gz", ".xes", ".csv"] {
        if name.len() >= e.len() && name[name.len() - e.len()..].eq_ignore_ascii_case(e) {
            return &name[..name.len() - e.len()];
        }
    }
    name
}

/// Walks `root` recursively. In a directory with one `.pnml` model every log
/// pairs with it; with several, a log pairs with the model whose file stem is
/// the longest prefix of the log's name. Output is sorted by path.
pub fn discover_corpus(root: &Path) -> Result<Vec<CorpusEntry>, BenchError> {
    let mut out = Vec::new();
    let mut dirs = vec![root.to_path_buf()];
    while let Some(dir) = dirs.pop() {
        let read = std::fs::read_dir(&dir).map_err(|source| BenchError::File {
            path: dir.display().to_string(),
            source,
        })?;
        let mut models = Vec::new();
        let mut logs = Vec::new();
        for entry in read {
            let entry = entry.map_err(|source| BenchError::File {
                path: dir.display().to_string(),
                source,
            })?;
            let path = entry.path();
            let name = entry.file_name().to_string_lossy().to_string();
            if path.is_dir() {
                dirs.push(path);
            } else if name.to_ascii_lowercase().ends_with(".pnml") {
                models.push(path);
            } else if is_log_file(&name) {
                logs.push(path);
            }
        }
        models.sort();
        logs.sort();
        let stem = |p: &PathBuf| p.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
        for log in logs {
            let log_name = log.file_name().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
            let log_stem = strip_log_ext(&log_name);
            let model = if models.len() == 1 {
                Some(&models[0])
            } else {
                models
                    .iter()
                    .filter(|m| log_stem.starts_with(&stem(m)))
                    .max_by_key(|m| stem(m).len())
            };
            if let Some(m) = model {
                let rel = m.strip_prefix(root).unwrap_or(m).with_extension("");
                out.push(CorpusEntry {
                    model_path: m.clone(),
                    log_path: log.clone(),
                    model_id: rel.to_string_lossy().replace('\\', "/"),
                });
            } else {
                log::warn!("no model for log {}", log.display());
            }
        }
    }
    out.sort_by(|a, b| (&a.model_path, &a.log_path).cmp(&(&b.model_path, &b.log_path)));
    Ok(out)
}

/// Runs a whole corpus. Unreadable files become error rows, never aborts.
pub fn run_corpus(entries: &[CorpusEntry], cfg: &RunConfig) -> Result<Vec<BenchmarkRecord>, BenchError> {
    cfg.validate()?;
    let mut records = Vec::new();
    for e in entries {
        let log_id = e.log_path.file_name().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
        let loaded = read_model(&e.model_path).and_then(|net| Ok((net, read_log(&e.log_path)?)));
        match loaded {
            Ok((net, mut log)) => {
                log.source_name = log_id;
                records.extend(run_log(&net, &e.model_id, &log, cfg)?);
            }
            Err(err) => {
                let mut rec = BenchmarkRecord::empty("", &e.model_id, &log_id, 0, cfg.method);
                rec.error = Some(err.to_string());
                rec.astar_outcome = Some(RunOutcome::Error);
                records.push(rec);
            }
        }
    }
    Ok(records)
}

/// Writes `model.pnml`, `clean.xes` and `noisy.xes` into `dir`.
pub fn write_corpus(dir: &Path, net: &PetriNet, clean: &EventLog, noisy: &EventLog) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir).map_err(|source| BenchError::File {
        path: dir.display().to_string(),
        source,
    })?;
    let files = [
        ("model.pnml", write_pnml(net, "model")),
        ("clean.xes", write_xes(clean)),
        ("noisy.xes", write_xes(noisy)),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|source| BenchError::File {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{acyclic_net, toy_trace};

    fn three_traces() -> EventLog {
        EventLog::new(
            "toy",
            vec![toy_trace(), Trace::new("c2", ["a", "d", "e"]), Trace::new("c3", ["a", "c", "b", "e"])],
        )
    }

    #[test]
    fn both_methods_agree_on_toy_log() {
        let recs = run_log(&acyclic_net(), "toy", &three_traces(), &RunConfig::default()).unwrap();
        assert_eq!(recs.len(), 3);
        assert!(recs.iter().all(|r| r.both_optimal() && r.costs_agree));
        assert_eq!(recs[0].lp_cost, Some(Rational::from_integer(1)));
        assert_eq!(recs[0].rg_nodes, Some(24));
        let s = summarize(&recs);
        assert_eq!(s.agreement_rate(), 1.0);
        assert_eq!(s.completed, 3);
    }

    #[test]
    fn parallel_rows_match_serial_rows() {
        let serial = run_log(&acyclic_net(), "toy", &three_traces(), &RunConfig::default()).unwrap();
        let cfg = RunConfig {
            parallelism: 4,
            ..RunConfig::default()
        };
        let parallel = run_log(&acyclic_net(), "toy", &three_traces(), &cfg).unwrap();
        let strip = |rs: &[BenchmarkRecord]| -> Vec<Vec<String>> {
            rs.iter()
                .map(|r| {
                    let mut f = r.csv_fields();
                    for i in 10..14 {
                        f[i].clear();
                    }
                    f[9].clear();
                    f
                })
                .collect()
        };
        assert_eq!(strip(&serial), strip(&parallel));
    }

    #[test]
    fn empty_log_is_header_only() {
        let recs = run_log(&acyclic_net(), "toy", &EventLog::new("e", vec![]), &RunConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_COLUMNS.join(","));
        assert_eq!(summarize(&recs), Summary::default());
    }

    #[test]
    fn timeout_row_is_flagged() {
        let cfg = RunConfig {
            method: RunMethod::Astar,
            search: SearchConfig {
                max_expansions: 1,
                ..SearchConfig::default()
            },
            ..RunConfig::default()
        };
        let recs = run_log(&acyclic_net(), "toy", &three_traces(), &cfg).unwrap();
        assert_eq!(recs[0].method_outcomes(), "ASTAR=TIMEOUT");
        assert_eq!(summarize(&recs).timeouts, recs.iter().filter(|r| !r.is_completed()).count());
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = RunConfig {
            parallelism: 0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            search: SearchConfig {
                timeout: Duration::ZERO,
                ..SearchConfig::default()
            },
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bucket_edges() {
        let cases = [(1, "1-10"), (10, "1-10"), (11, "11-20"), (30, "21-30"), (31, "31-50"), (100, "51-100"), (101, ">100")];
        for (len, label) in cases {
            assert_eq!(length_bucket(len), label);
        }
        let devs = [(0, "0"), (1, "1"), (2, "2-4"), (4, "2-4"), (5, "5-10"), (10, "5-10"), (11, ">10")];
        for (d, label) in devs {
            assert_eq!(deviation_bucket(d), label);
        }
    }

    #[test]
    fn buckets_partition_records() {
        let recs = run_log(&acyclic_net(), "toy", &three_traces(), &RunConfig::default()).unwrap();
        let lb = length_buckets(&recs);
        assert_eq!(lb.iter().map(|b| b.bucket.as_str()).collect::<Vec<_>>(), LENGTH_BUCKETS);
        assert_eq!(lb.iter().map(|b| b.summary.instances).sum::<usize>(), 3);
        let db = deviation_buckets(&recs);
        assert_eq!(db[0].summary.instances, 2);
        assert_eq!(db[1].summary.instances, 1);
    }

    #[test]
    fn hybrid_records_one_method() {
        let cfg = RunConfig {
            method: RunMethod::Hybrid,
            ..RunConfig::default()
        };
        let recs = run_log(&acyclic_net(), "toy", &three_traces(), &cfg).unwrap();
        for r in &recs {
            assert_eq!(r.astar_outcome, Some(RunOutcome::Optimal));
            assert!(r.lp_outcome.is_none());
            assert_eq!(r.fallback, Some(false));
        }
    }

    #[test]
    fn corpus_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let net = acyclic_net();
        write_corpus(&dir.path().join("m1"), &net, &three_traces(), &EventLog::new("n", vec![toy_trace()])).unwrap();
        let entries = discover_corpus(dir.path()).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].model_id, "m1/model");
        let recs = run_corpus(&entries, &RunConfig::default()).unwrap();
        assert_eq!(recs.len(), 4);
        assert!(recs.iter().all(|r| r.costs_agree));
        assert_eq!(variant_summaries(&recs).len(), 2);
        assert!(discover_corpus(&dir.path().join("missing")).is_err());
    }
}

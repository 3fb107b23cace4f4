//! Token-replay fitness, the LP/A* selection rule and the hybrid runner.

use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::alignment::{Alignment, Method};
use crate::astar::{astar_align, SearchConfig, SearchOutcome, SearchStats};
use crate::eventlog::{EventLog, Trace};
use crate::flow::{assemble_flow_problem, extract_alignment, solve_min_cost_unit_flow, FlowError, FlowStatus};
use crate::petri::{build_trace_model, PetriNet};
use crate::rational::Rational;
use crate::reach::{build_reachability_graph, ExplorationLimits, LimitOverrides, RgStats};
use crate::sync::{build_sync_product, CostConfig, SyncError, SynchronousProduct};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionThresholds {
    pub length_threshold: usize,
    pub deviation_threshold: Rational,
}

impl Default for SelectionThresholds {
    fn default() -> Self {
        SelectionThresholds {
            length_threshold: 20,
            deviation_threshold: Rational::new(3, 2),
        }
    }
}

/// LP iff `L > length_threshold` and `(1 - F) * L > deviation_threshold`.
pub fn select_method(trace_len: usize, fitness: &Rational, th: &SelectionThresholds) -> Method {
    let expected = expected_deviations(trace_len, fitness);
    if trace_len > th.length_threshold && expected > th.deviation_threshold {
        Method::Lp
    } else {
        Method::Astar
    }
}

pub fn expected_deviations(trace_len: usize, fitness: &Rational) -> Rational {
    (Rational::one() - fitness) * Rational::from_integer(trace_len as i128)
}

/// Token counts accumulated by replay.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayCounts {
    pub missing: u64,
    pub consumed: u64,
    pub remaining: u64,
    pub produced: u64,
}

impl ReplayCounts {
    fn add(&mut self, o: &ReplayCounts) {
        self.missing += o.missing;
        self.consumed += o.consumed;
        self.remaining += o.remaining;
        self.produced += o.produced;
    }

    /// `1/2 (1 - m/c) + 1/2 (1 - r/p)`, clamped to `[0, 1]`.
    pub fn fitness(&self) -> Rational {
        let half = Rational::new(1, 2);
        let part = |num: u64, den: u64| {
            if den == 0 {
                Rational::one()
            } else {
                Rational::one() - Rational::new(num as i128, den as i128)
            }
        };
        let f = half * part(self.missing, self.consumed) + half * part(self.remaining, self.produced);
        f.max(Rational::zero()).min(Rational::one())
    }
}

/// Replays one trace. Visible transitions only; among label matches the first
/// enabled one in transition order fires, else the first match fires after its
/// missing tokens are added. Labels unknown to the net count one missing, one
/// consumed, one produced and one remaining token.
pub fn replay_trace(net: &PetriNet, trace: &Trace) -> ReplayCounts {
    let mut m = net.initial_marking().tokens().to_vec();
    let mut k = ReplayCounts {
        produced: m.iter().map(|&v| v as u64).sum(),
        ..ReplayCounts::default()
    };
    for act in &trace.activities {
        let candidates: Vec<usize> = (0..net.num_transitions())
            .filter(|&t| net.label(t).as_activity() == Some(act.as_str()))
            .collect();
        if candidates.is_empty() {
            k.missing += 1;
            k.consumed += 1;
            k.produced += 1;
            k.remaining += 1;
            continue;
        }
        let enabled = candidates
            .iter()
            .copied()
            .find(|&t| net.preset(t).iter().all(|&(p, w)| m[p] >= w));
        let t = enabled.unwrap_or(candidates[0]);
        for &(p, w) in net.preset(t) {
            if m[p] < w {
                k.missing += (w - m[p]) as u64;
                m[p] = w;
            }
            m[p] -= w;
            k.consumed += w as u64;
        }
        for &(p, w) in net.postset(t) {
            m[p] += w;
            k.produced += w as u64;
        }
    }
    for (p, &f) in net.final_marking().tokens().iter().enumerate() {
        if m[p] < f {
            k.missing += (f - m[p]) as u64;
            m[p] = f;
        }
        m[p] -= f;
        k.consumed += f as u64;
    }
    k.remaining += m.iter().map(|&v| v as u64).sum::<u64>();
    k
}

pub fn replay_log(net: &PetriNet, log: &EventLog) -> ReplayCounts {
    let mut total = ReplayCounts::default();
    for trace in &log.traces {
        total.add(&replay_trace(net, trace));
    }
    total
}

/// Log-level fitness; an empty log scores 1.
pub fn token_replay_fitness(net: &PetriNet, log: &EventLog) -> Rational {
    if log.is_empty() {
        log::warn!("token replay on an empty log: fitness defined as 1");
        return Rational::one();
    }
    replay_log(net, log).fitness()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunOutcome {
    Optimal,
    Infeasible,
    Timeout,
    /// Exploration limits stopped the graph before the final marking.
    Truncated,
    Error,
}

impl RunOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunOutcome::Optimal => "OPTIMAL",
            RunOutcome::Infeasible => "INFEASIBLE",
            RunOutcome::Timeout => "TIMEOUT",
            RunOutcome::Truncated => "TRUNCATED",
            RunOutcome::Error => "ERROR",
        }
    }
}

#[derive(Clone, Debug)]
pub struct LpRun {
    pub alignment: Option<Alignment>,
    pub outcome: RunOutcome,
    pub rg_nodes: usize,
    pub rg_edges: usize,
    pub rg_stats: RgStats,
    pub rg_build: Duration,
    pub lp_solve: Duration,
    pub error: Option<String>,
}

/// Graph construction, flow solve and path extraction.
pub fn run_lp(sp: &SynchronousProduct, limits: &ExplorationLimits) -> LpRun {
    let t0 = Instant::now();
    let rg = match build_reachability_graph(sp, limits) {
        Ok(rg) => rg,
        Err(e) => {
            return LpRun {
                alignment: None,
                outcome: RunOutcome::Error,
                rg_nodes: 0,
                rg_edges: 0,
                rg_stats: RgStats::default(),
                rg_build: t0.elapsed(),
                lp_solve: Duration::ZERO,
                error: Some(e.to_string()),
            }
        }
    };
    let rg_build = t0.elapsed();
    let t1 = Instant::now();
    let result = assemble_flow_problem(&rg).and_then(|fp| {
        let sol = solve_min_cost_unit_flow(&fp)?;
        match sol.status {
            FlowStatus::Optimal => extract_alignment(&rg, sp, &sol),
            FlowStatus::Infeasible => Err(FlowError::Unreachable),
            FlowStatus::TruncatedGraph => Err(FlowError::TruncatedGraph),
        }
    });
    let lp_solve = t1.elapsed();
    let (alignment, outcome, error) = match result {
        Ok(al) => (Some(al), RunOutcome::Optimal, None),
        Err(FlowError::TruncatedGraph) => (None, RunOutcome::Truncated, Some(FlowError::TruncatedGraph.to_string())),
        Err(FlowError::Unreachable) => (None, RunOutcome::Infeasible, Some(FlowError::Unreachable.to_string())),
        Err(e) => (None, RunOutcome::Error, Some(e.to_string())),
    };
    LpRun {
        alignment,
        outcome,
        rg_nodes: rg.num_nodes(),
        rg_edges: rg.num_edges(),
        rg_stats: rg.stats,
        rg_build,
        lp_solve,
        error,
    }
}

#[derive(Clone, Debug)]
pub struct AstarRun {
    pub alignment: Option<Alignment>,
    pub outcome: RunOutcome,
    pub stats: SearchStats,
}

pub fn run_astar(sp: &SynchronousProduct, cfg: &SearchConfig) -> AstarRun {
    let (alignment, stats) = astar_align(sp, cfg);
    let outcome = match stats.outcome {
        SearchOutcome::Optimal => RunOutcome::Optimal,
        SearchOutcome::Timeout => RunOutcome::Timeout,
        SearchOutcome::Exhausted => RunOutcome::Infeasible,
    };
    AstarRun {
        alignment,
        outcome,
        stats,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionInputs {
    pub trace_len: usize,
    pub fitness: Rational,
    pub expected_deviations: Rational,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub product: Duration,
    pub rg_build: Duration,
    pub lp_solve: Duration,
    pub search: Duration,
}

#[derive(Clone, Debug)]
pub struct HybridResult {
    pub alignment: Option<Alignment>,
    pub method_chosen: Method,
    /// Method that produced the result; differs from the choice after a fallback.
    pub method_used: Method,
    pub fallback: bool,
    pub outcome: RunOutcome,
    pub inputs: SelectionInputs,
    pub timings: PhaseTimings,
}

#[derive(Clone, Debug, Default)]
pub struct HybridConfig {
    pub thresholds: SelectionThresholds,
    pub cost: CostConfig,
    pub limits: LimitOverrides,
    pub search: SearchConfig,
}

pub fn hybrid_align(net: &PetriNet, trace: &Trace, fitness: &Rational, cfg: &HybridConfig) -> Result<HybridResult, SyncError> {
    let inputs = SelectionInputs {
        trace_len: trace.len(),
        fitness: *fitness,
        expected_deviations: expected_deviations(trace.len(), fitness),
    };
    let method_chosen = select_method(trace.len(), fitness, &cfg.thresholds);
    let t0 = Instant::now();
    let sp = build_sync_product(net, &build_trace_model(trace), &cfg.cost)?;
    let mut timings = PhaseTimings {
        product: t0.elapsed(),
        ..PhaseTimings::default()
    };
    let mut fallback = false;
    if method_chosen == Method::Lp {
        let limits = cfg.limits.resolve(&sp);
        let lp = run_lp(&sp, &limits);
        timings.rg_build = lp.rg_build;
        timings.lp_solve = lp.lp_solve;
        if lp.outcome != RunOutcome::Truncated {
            return Ok(HybridResult {
                alignment: lp.alignment,
                method_chosen,
                method_used: Method::Lp,
                fallback,
                outcome: lp.outcome,
                inputs,
                timings,
            });
        }
        log::info!("reachability graph truncated for case {}; falling back to A*", trace.case_id);
        fallback = true;
    }
    let t1 = Instant::now();
    let run = run_astar(&sp, &cfg.search);
    timings.search = t1.elapsed();
    Ok(HybridResult {
        alignment: run.alignment,
        method_chosen,
        method_used: Method::Astar,
        fallback,
        outcome: run.outcome,
        inputs,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{acyclic_net, toy_trace};

    fn dec(s: &str) -> Rational {
        crate::rational::parse_rational(s).unwrap()
    }

    #[test]
    fn selection_examples() {
        let th = SelectionThresholds::default();
        assert_eq!(select_method(100, &dec("0.99"), &th), Method::Astar);
        assert_eq!(select_method(10, &dec("0.5"), &th), Method::Astar);
        assert_eq!(select_method(30, &dec("0.9"), &th), Method::Lp);
        assert_eq!(select_method(21, &dec("0"), &th), Method::Lp);
        assert_eq!(select_method(20, &dec("0"), &th), Method::Astar);
        // (1 - 0.95) * 30 = 1.5 exactly: strict inequality fails.
        assert_eq!(select_method(30, &dec("0.95"), &th), Method::Astar);
    }

    #[test]
    fn replay_of_model_runs_is_perfect() {
        let net = acyclic_net();
        let log = EventLog::new(
            "runs",
            vec![
                Trace::new("1", ["a", "b", "c", "e"]),
                Trace::new("2", ["a", "c", "b", "e"]),
                Trace::new("3", ["a", "d", "e"]),
            ],
        );
        assert_eq!(token_replay_fitness(&net, &log), Rational::one());
    }

    #[test]
    fn replay_of_abe_is_four_fifths() {
        let k = replay_trace(&acyclic_net(), &toy_trace());
        assert_eq!(
            k,
            ReplayCounts {
                missing: 1,
                consumed: 5,
                remaining: 1,
                produced: 5
            }
        );
        assert_eq!(k.fitness(), Rational::new(4, 5));
    }

    #[test]
    fn unknown_labels_and_empty_logs() {
        let net = acyclic_net();
        let k = replay_trace(&net, &Trace::new("u", ["a", "zzz", "d", "e"]));
        assert_eq!(k.missing, 1);
        assert_eq!(k.remaining, 1);
        assert_eq!(token_replay_fitness(&net, &EventLog::new("empty", vec![])), Rational::one());
    }

    #[test]
    fn duplicating_traces_keeps_fitness() {
        let net = acyclic_net();
        let traces = vec![toy_trace(), Trace::new("x", ["a", "e"])];
        let once = EventLog::new("l", traces.clone());
        let twice = EventLog::new("l", traces.iter().chain(traces.iter()).cloned().collect());
        assert_eq!(token_replay_fitness(&net, &once), token_replay_fitness(&net, &twice));
    }

    #[test]
    fn hybrid_on_toy_uses_astar() {
        let r = hybrid_align(&acyclic_net(), &toy_trace(), &dec("0.5"), &HybridConfig::default()).unwrap();
        assert_eq!(r.method_chosen, Method::Astar);
        assert_eq!(r.outcome, RunOutcome::Optimal);
        assert_eq!(r.alignment.unwrap().total_cost, Rational::one());
    }

    #[test]
    fn hybrid_falls_back_when_graph_is_truncated() {
        let trace = Trace::new("long", vec!["a"; 30]);
        let cfg = HybridConfig {
            limits: LimitOverrides {
                max_depth: Some(3),
                ..LimitOverrides::default()
            },
            ..HybridConfig::default()
        };
        let r = hybrid_align(&acyclic_net(), &trace, &Rational::zero(), &cfg).unwrap();
        assert_eq!(r.method_chosen, Method::Lp);
        assert!(r.fallback);
        assert_eq!(r.method_used, Method::Astar);
        assert_eq!(r.outcome, RunOutcome::Optimal);
        // 29 extra a's as log moves plus d, e (or b, c, e) as model moves.
        assert_eq!(r.alignment.unwrap().total_cost, Rational::from_integer(31));
    }

    #[test]
    fn long_trace_with_low_fitness_uses_lp() {
        let trace = Trace::new("l", vec!["a"; 60]);
        let r = hybrid_align(&acyclic_net(), &trace, &dec("0.9"), &HybridConfig::default()).unwrap();
        assert_eq!(r.method_chosen, Method::Lp);
        assert!(!r.fallback);
        assert_eq!(r.alignment.unwrap().total_cost, Rational::from_integer(61));
    }
}

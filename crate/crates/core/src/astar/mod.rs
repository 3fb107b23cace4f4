//! Best-first optimal alignment search over the synchronous product.

mod heuristic;
pub mod simplex;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::alignment::{Alignment, Method};
use crate::petri::Marking;
use crate::rational::Rational;
use crate::sync::{cost_vector, SynchronousProduct};

pub use heuristic::{marking_equation_heuristic, Estimate, MarkingEquation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HeuristicKind {
    Zero,
    MarkingEquation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub heuristic: HeuristicKind,
    pub timeout: Duration,
    pub max_expansions: usize,
    pub token_cap: u32,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            heuristic: HeuristicKind::MarkingEquation,
            timeout: Duration::from_secs(60),
            max_expansions: 10_000_000,
            token_cap: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SearchOutcome {
    Optimal,
    Timeout,
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub expansions: usize,
    pub heuristic_calls: usize,
    pub queue_peak: usize,
    pub wall_time: Duration,
    pub outcome: SearchOutcome,
}

struct Entry {
    f: Rational,
    g: Rational,
    seq: u64,
    node: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    /// Max-heap order: smallest f, then largest g, then oldest entry first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then_with(|| self.g.cmp(&other.g))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct SearchNode {
    state: usize,
    parent: Option<usize>,
    transition: usize,
}

pub fn astar_align(sp: &SynchronousProduct, cfg: &SearchConfig) -> (Option<Alignment>, SearchStats) {
    let start = Instant::now();
    let net = &sp.net;
    let costs = cost_vector(sp);
    let self_loop: Vec<bool> = (0..net.num_transitions()).map(|t| net.effect(t).is_empty()).collect();
    let mut me = MarkingEquation::new(sp);
    let use_me = cfg.heuristic == HeuristicKind::MarkingEquation;

    let mut states: Vec<Marking> = Vec::new();
    let mut state_index: HashMap<Marking, usize> = HashMap::new();
    let mut best_g: Vec<Rational> = Vec::new();
    let mut estimates: Vec<Option<Estimate>> = Vec::new();
    let mut nodes: Vec<SearchNode> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut stats = SearchStats {
        expansions: 0,
        heuristic_calls: 0,
        queue_peak: 0,
        wall_time: Duration::ZERO,
        outcome: SearchOutcome::Exhausted,
    };

    let finish = |mut stats: SearchStats, outcome, al: Option<Alignment>, me: &MarkingEquation| {
        stats.outcome = outcome;
        stats.heuristic_calls = me.solves();
        stats.wall_time = start.elapsed();
        (al, stats)
    };

    let m0 = sp.initial_marking().clone();
    let h0 = if use_me {
        match me.estimate(&m0) {
            Some(e) => e,
            None => return finish(stats, SearchOutcome::Exhausted, None, &me),
        }
    } else {
        Estimate {
            value: Rational::zero(),
            solution: None,
        }
    };
    heap.push(Entry {
        f: h0.value,
        g: Rational::zero(),
        seq,
        node: 0,
    });
    states.push(m0.clone());
    state_index.insert(m0, 0);
    best_g.push(Rational::zero());
    estimates.push(Some(h0));
    nodes.push(SearchNode {
        state: 0,
        parent: None,
        transition: usize::MAX,
    });
    stats.queue_peak = 1;

    while let Some(entry) = heap.pop() {
        if start.elapsed() >= cfg.timeout {
            return finish(stats, SearchOutcome::Timeout, None, &me);
        }
        let s = nodes[entry.node].state;
        if entry.g > best_g[s] {
            continue;
        }
        if &states[s] == sp.final_marking() {
            let mut seq_t = Vec::new();
            let mut cur = entry.node;
            while let Some(p) = nodes[cur].parent {
                seq_t.push(nodes[cur].transition);
                cur = p;
            }
            seq_t.reverse();
            let al = Alignment::from_transitions(sp, &seq_t, Method::Astar);
            return finish(stats, SearchOutcome::Optimal, Some(al), &me);
        }
        if stats.expansions >= cfg.max_expansions {
            return finish(stats, SearchOutcome::Timeout, None, &me);
        }
        stats.expansions += 1;
        let parent_est = estimates[s].clone();
        for t in 0..net.num_transitions() {
            if self_loop[t] || !net.is_enabled(&states[s], t) {
                continue;
            }
            let succ = net.fire_unchecked(&states[s], t);
            if succ.max_tokens() > cfg.token_cap {
                continue;
            }
            let g = entry.g + costs[t];
            let (s2, fresh) = match state_index.get(&succ) {
                Some(&i) => {
                    if g >= best_g[i] {
                        continue;
                    }
                    best_g[i] = g;
                    (i, false)
                }
                None => {
                    let i = states.len();
                    states.push(succ.clone());
                    state_index.insert(succ, i);
                    best_g.push(g);
                    estimates.push(None);
                    (i, true)
                }
            };
            let h = if !use_me {
                Rational::zero()
            } else {
                if fresh {
                    let derived = parent_est.as_ref().and_then(|pe| me.derive(pe, t, &states[s2]));
                    estimates[s2] = derived.or_else(|| me.estimate(&states[s2]));
                }
                match &estimates[s2] {
                    Some(e) => e.value,
                    None => continue,
                }
            };
            let node = nodes.len();
            nodes.push(SearchNode {
                state: s2,
                parent: Some(entry.node),
                transition: t,
            });
            seq += 1;
            heap.push(Entry { f: g + h, g, seq, node });
        }
        stats.queue_peak = stats.queue_peak.max(heap.len());
    }
    finish(stats, SearchOutcome::Exhausted, None, &me)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::Trace;
    use crate::fixtures::{acyclic_net, cyclic_net, insurance_net, insurance_trace, toy_trace};
    use crate::petri::{build_trace_model, PetriNet};
    use crate::sync::{build_sync_product, CostConfig, MoveKind};

    fn product(net: &PetriNet, trace: &Trace) -> SynchronousProduct {
        build_sync_product(net, &build_trace_model(trace), &CostConfig::default()).unwrap()
    }

    fn cfg(h: HeuristicKind) -> SearchConfig {
        SearchConfig {
            heuristic: h,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn toy_cost_one_under_both_heuristics() {
        let sp = product(&acyclic_net(), &toy_trace());
        for h in [HeuristicKind::Zero, HeuristicKind::MarkingEquation] {
            let (al, stats) = astar_align(&sp, &cfg(h));
            assert_eq!(stats.outcome, SearchOutcome::Optimal);
            let al = al.unwrap();
            assert_eq!(al.total_cost, Rational::from_integer(1));
            assert_eq!(al.trace_projection(), vec!["a", "b", "e"]);
            assert_eq!(al.method, Method::Astar);
        }
    }

    #[test]
    fn fitting_trace_is_all_sync() {
        let sp = product(&acyclic_net(), &Trace::new("c", ["a", "d", "e"]));
        let (al, stats) = astar_align(&sp, &cfg(HeuristicKind::MarkingEquation));
        let al = al.unwrap();
        assert_eq!(al.total_cost, Rational::zero());
        assert!(al.moves.iter().all(|m| m.kind == MoveKind::Sync));
        assert!(stats.expansions <= 4);
    }

    #[test]
    fn cyclic_and_insurance_costs() {
        let sp = product(&cyclic_net(), &Trace::new("c", ["a", "c", "b", "d", "b", "e"]));
        let (al, _) = astar_align(&sp, &cfg(HeuristicKind::MarkingEquation));
        assert_eq!(al.unwrap().total_cost, Rational::from_integer(1));

        let sp = product(&insurance_net(), &insurance_trace());
        let (z, _) = astar_align(&sp, &cfg(HeuristicKind::Zero));
        let (me, _) = astar_align(&sp, &cfg(HeuristicKind::MarkingEquation));
        assert_eq!(z.unwrap().total_cost, me.unwrap().total_cost);
    }

    #[test]
    fn tiny_timeout_reports_timeout() {
        let sp = product(&insurance_net(), &insurance_trace());
        let c = SearchConfig {
            timeout: Duration::from_nanos(1),
            ..cfg(HeuristicKind::Zero)
        };
        let (al, stats) = astar_align(&sp, &c);
        assert!(al.is_none());
        assert_eq!(stats.outcome, SearchOutcome::Timeout);
    }

    #[test]
    fn expansion_cap_reports_timeout() {
        let sp = product(&insurance_net(), &insurance_trace());
        let c = SearchConfig {
            max_expansions: 1,
            ..cfg(HeuristicKind::Zero)
        };
        let (al, stats) = astar_align(&sp, &c);
        assert!(al.is_none());
        assert_eq!(stats.outcome, SearchOutcome::Timeout);
        assert_eq!(stats.expansions, 1);
    }

    #[test]
    fn unreachable_final_is_exhausted() {
        let dead = PetriNet::builder()
            .place("i")
            .place("o")
            .transition("t", crate::petri::Label::activity("a"))
            .arc("o", "t")
            .arc("t", "i")
            .initial("i", 1)
            .final_tokens("o", 1)
            .build()
            .unwrap();
        let sp = product(&dead, &Trace::new("c", ["a"]));
        let (al, stats) = astar_align(&sp, &cfg(HeuristicKind::Zero));
        assert!(al.is_none());
        assert_eq!(stats.outcome, SearchOutcome::Exhausted);
    }

    #[test]
    fn queue_order_prefers_low_f_then_high_g() {
        let mk = |f: i128, g: i128, seq| Entry {
            f: Rational::from_integer(f),
            g: Rational::from_integer(g),
            seq,
            node: 0,
        };
        let mut heap = BinaryHeap::new();
        heap.push(mk(2, 0, 0));
        heap.push(mk(1, 0, 1));
        heap.push(mk(1, 1, 2));
        heap.push(mk(1, 1, 3));
        let order: Vec<u64> = std::iter::from_fn(|| heap.pop().map(|e| e.seq)).collect();
        assert_eq!(order, vec![2, 3, 1, 0]);
    }
}

//! Shared test support: a seeded instance corpus and an alignment-cost oracle
//! that works on the process net and the trace directly, without the
//! synchronous product, the reachability graph or any solver from the crate.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use conformflow::eventlog::Trace;
use conformflow::generate::{activity_names, block_to_net, random_block, simulate_run, Block, BlockShape};
use conformflow::io::{perturb_trace, EditKind};
use conformflow::petri::{ArcDirection, Label, Marking, PetriNet};
use conformflow::rational::Rational;
use conformflow::sync::CostConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub model_id: String,
    pub block: Block,
    pub net: PetriNet,
    pub clean: Trace,
    pub trace: Trace,
    pub edits: usize,
}

pub const ALL_EDITS: [EditKind; 4] = [EditKind::Insert, EditKind::Delete, EditKind::Swap, EditKind::Substitute];

/// `models` random block models with up to 15 activities and `per_model`
/// traces each. Trace `j` of a model gets `j % 9` edits.
pub fn corpus(seed: u64, models: usize, per_model: usize, max_len: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = BlockShape::default();
    let mut out = Vec::with_capacity(models * per_model);
    for m in 0..models {
        let n_acts = 4 + m % 12;
        let acts = activity_names(n_acts);
        let block = random_block(&acts, &shape, &mut rng).expect("non-empty alphabet");
        let net = block_to_net(&block).expect("block nets are well formed");
        let mut j = 0;
        let mut attempts = 0;
        while j < per_model && attempts < 50 * per_model {
            attempts += 1;
            let Some(run) = simulate_run(&net, 4 * max_len, &mut rng) else { continue };
            if run.len() > max_len {
                continue;
            }
            let clean = Trace::new(format!("m{m}-c{j}"), run);
            let edits = j % 9;
            let trace = perturb_trace(&clean, edits, &ALL_EDITS, &acts, &mut rng);
            out.push(Instance {
                model_id: format!("m{m}"),
                block: block.clone(),
                net: net.clone(),
                clean,
                trace,
                edits,
            });
            j += 1;
        }
    }
    out
}

/// Exhaustive state space of (process marking, trace position) with its own
/// firing rule and Bellman-Ford distances to the goal state.
pub struct Oracle {
    pub states: Vec<(Vec<u32>, usize)>,
    pub index: HashMap<(Vec<u32>, usize), usize>,
    pub edges: Vec<(usize, usize, Rational)>,
    /// Cheapest cost from each state to the goal; `None` when unreachable.
    pub to_goal: Vec<Option<Rational>>,
    pub initial: usize,
    pub goal: Option<usize>,
}

impl Oracle {
    pub fn build(net: &PetriNet, trace: &Trace, cost: &CostConfig, token_cap: u32, max_states: usize) -> Option<Oracle> {
        let np = net.num_places();
        let nt = net.num_transitions();
        let mut pre = vec![Vec::new(); nt];
        let mut post = vec![Vec::new(); nt];
        for a in net.arcs() {
            match a.direction {
                ArcDirection::PlaceToTransition => pre[a.transition].push((a.place, a.weight)),
                ArcDirection::TransitionToPlace => post[a.transition].push((a.place, a.weight)),
            }
        }
        let fire = |m: &[u32], t: usize| -> Option<Vec<u32>> {
            let mut next = m.to_vec();
            for &(p, w) in &pre[t] {
                if next[p] < w {
                    return None;
                }
                next[p] -= w;
            }
            for &(p, w) in &post[t] {
                next[p] += w;
            }
            Some(next)
        };
        let n = trace.len();
        let init: Vec<u32> = (0..np).map(|p| net.initial_marking().get(p)).collect();
        let fin: Vec<u32> = (0..np).map(|p| net.final_marking().get(p)).collect();
        let mut o = Oracle {
            states: vec![(init.clone(), 0)],
            index: HashMap::from([((init, 0), 0)]),
            edges: Vec::new(),
            to_goal: Vec::new(),
            initial: 0,
            goal: None,
        };
        let mut queue = VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            let (m, i) = o.states[s].clone();
            let mut succ: Vec<((Vec<u32>, usize), Rational)> = Vec::new();
            if i < n {
                succ.push(((m.clone(), i + 1), cost.deviation_cost));
            }
            for t in 0..nt {
                let Some(next) = fire(&m, t) else { continue };
                if next.iter().any(|&v| v > token_cap) {
                    continue;
                }
                match net.label(t) {
                    Label::Tau => succ.push(((next, i), cost.tau_cost)),
                    Label::Activity(a) => {
                        if i < n && &trace.activities[i] == a {
                            succ.push(((next.clone(), i + 1), Rational::from_integer(0)));
                        }
                        succ.push(((next, i), cost.deviation_cost));
                    }
                }
            }
            for (key, c) in succ {
                if key.0 == m && key.1 == i {
                    continue;
                }
                let target = match o.index.get(&key) {
                    Some(&k) => k,
                    None => {
                        if o.states.len() >= max_states {
                            return None;
                        }
                        let k = o.states.len();
                        o.states.push(key.clone());
                        o.index.insert(key, k);
                        queue.push_back(k);
                        k
                    }
                };
                o.edges.push((s, target, c));
            }
        }
        o.goal = o.index.get(&(fin, n)).copied();
        o.to_goal = vec![None; o.states.len()];
        if let Some(g) = o.goal {
            o.to_goal[g] = Some(Rational::from_integer(0));
            for _ in 0..o.states.len() {
                let mut changed = false;
                for &(u, v, c) in &o.edges {
                    if let Some(dv) = o.to_goal[v] {
                        let cand = dv + c;
                        if o.to_goal[u].is_none_or(|du| cand < du) {
                            o.to_goal[u] = Some(cand);
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
        }
        Some(o)
    }

    pub fn optimal_cost(&self) -> Option<Rational> {
        self.to_goal[self.initial]
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Remaining cost from a marking of the product whose first
    /// `process_places` entries are the process marking.
    pub fn remaining_from_product(&self, m: &Marking, process_places: usize) -> Option<Rational> {
        let tokens = m.tokens();
        let pos = tokens[process_places..].iter().position(|&v| v == 1)?;
        let k = self.index.get(&(tokens[..process_places].to_vec(), pos))?;
        self.to_goal[*k]
    }
}

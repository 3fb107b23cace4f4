//! Bounded breadth-first reachability graph of a synchronous product.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::SparseIntMatrix;
use crate::petri::Marking;
use crate::rational::{format_rational, Rational};
use crate::sync::SynchronousProduct;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReachError {
    #[error("invalid exploration limits: {0}")]
    InvalidLimits(String),
}

/// Resource bounds for graph construction.
///
/// `max_depth` counts BFS layers: nodes at that depth are kept but not expanded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationLimits {
    pub max_depth: usize,
    pub max_nodes: usize,
    pub max_edges: usize,
    pub token_cap: u32,
}

impl ExplorationLimits {
    pub const DEFAULT_MAX_NODES: usize = 2_000_000;
    pub const DEFAULT_MAX_EDGES: usize = 8_000_000;
    pub const DEFAULT_TOKEN_CAP: u32 = 8;

    /// Defaults sized for the product: depth `2 * (|T_SN| + L) + 10`.
    pub fn for_product(sp: &SynchronousProduct) -> Self {
        ExplorationLimits {
            max_depth: 2 * (sp.process_transition_count() + sp.trace_len) + 10,
            max_nodes: Self::DEFAULT_MAX_NODES,
            max_edges: Self::DEFAULT_MAX_EDGES,
            token_cap: Self::DEFAULT_TOKEN_CAP,
        }
    }

    pub fn validate(&self) -> Result<(), ReachError> {
        if self.max_nodes == 0 || self.max_edges == 0 || self.token_cap == 0 {
            return Err(ReachError::InvalidLimits(format!(
                "max_nodes, max_edges and token_cap must be >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Per-field overrides on top of [`ExplorationLimits::for_product`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitOverrides {
    pub max_depth: Option<usize>,
    pub max_nodes: Option<usize>,
    pub max_edges: Option<usize>,
    pub token_cap: Option<u32>,
}

impl LimitOverrides {
    pub fn resolve(&self, sp: &SynchronousProduct) -> ExplorationLimits {
        let d = ExplorationLimits::for_product(sp);
        ExplorationLimits {
            max_depth: self.max_depth.unwrap_or(d.max_depth),
            max_nodes: self.max_nodes.unwrap_or(d.max_nodes),
            max_edges: self.max_edges.unwrap_or(d.max_edges),
            token_cap: self.token_cap.unwrap_or(d.token_cap),
        }
    }

    pub fn validate(&self) -> Result<(), ReachError> {
        if self.max_nodes == Some(0) || self.max_edges == Some(0) || self.token_cap == Some(0) {
            return Err(ReachError::InvalidLimits(format!(
                "max_nodes, max_edges and token_cap must be >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }
}

impl From<ExplorationLimits> for LimitOverrides {
    fn from(l: ExplorationLimits) -> Self {
        LimitOverrides {
            max_depth: Some(l.max_depth),
            max_nodes: Some(l.max_nodes),
            max_edges: Some(l.max_edges),
            token_cap: Some(l.token_cap),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RgEdge {
    pub tail: usize,
    /// Product transition index.
    pub transition: usize,
    pub head: usize,
    pub cost: Rational,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RgStats {
    pub nodes_expanded: usize,
    pub edges_pruned_self_loops: usize,
    pub cap_prunes: usize,
    pub depth_reached: usize,
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct ReachabilityGraph {
    pub nodes: Vec<Marking>,
    pub edges: Vec<RgEdge>,
    pub initial_index: usize,
    pub final_index: Option<usize>,
    pub stats: RgStats,
}

impl ReachabilityGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Outgoing edge indices per node, in edge order.
    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.tail].push(i);
        }
        out
    }

    /// Final marking missing for resource reasons rather than by proof.
    pub fn is_incomplete(&self) -> bool {
        self.stats.truncated || self.stats.cap_prunes > 0
    }

    /// `tail head transition cost` per line.
    pub fn edge_list_text(&self, sp: &SynchronousProduct) -> String {
        let mut s = String::new();
        for e in &self.edges {
            let _ = writeln!(
                s,
                "{} {} {} {}",
                e.tail,
                e.head,
                sp.net.transitions()[e.transition],
                format_rational(&e.cost)
            );
        }
        s
    }
}

pub fn build_reachability_graph(sp: &SynchronousProduct, limits: &ExplorationLimits) -> Result<ReachabilityGraph, ReachError> {
    limits.validate()?;
    let net = &sp.net;
    let m0 = net.initial_marking().clone();
    if m0.max_tokens() > limits.token_cap {
        return Err(ReachError::InvalidLimits(format!(
            "initial marking holds {} tokens in one place, above token_cap {}",
            m0.max_tokens(),
            limits.token_cap
        )));
    }
    let self_loop: Vec<bool> = (0..net.num_transitions())
        .map(|t| net.effect(t).iter().all(|&(_, d)| d == 0))
        .collect();

    let mut nodes = vec![m0.clone()];
    let mut index: HashMap<Marking, usize> = HashMap::new();
    index.insert(m0, 0);
    let mut edges: Vec<RgEdge> = Vec::new();
    let mut stats = RgStats::default();
    let mut frontier = vec![0usize];
    let mut depth = 0usize;

    'layers: while !frontier.is_empty() {
        if depth >= limits.max_depth {
            stats.truncated = frontier.iter().any(|&n| {
                (0..net.num_transitions()).any(|t| !self_loop[t] && net.is_enabled(&nodes[n], t))
            });
            break;
        }
        let mut next = Vec::new();
        for &n in &frontier {
            stats.nodes_expanded += 1;
            for t in 0..net.num_transitions() {
                if !net.is_enabled(&nodes[n], t) {
                    continue;
                }
                if self_loop[t] {
                    stats.edges_pruned_self_loops += 1;
                    continue;
                }
                let succ = net.fire_unchecked(&nodes[n], t);
                if succ.max_tokens() > limits.token_cap {
                    stats.cap_prunes += 1;
                    continue;
                }
                let head = match index.get(&succ) {
                    Some(&h) => h,
                    None => {
                        if nodes.len() >= limits.max_nodes {
                            stats.truncated = true;
                            break 'layers;
                        }
                        let h = nodes.len();
                        index.insert(succ.clone(), h);
                        nodes.push(succ);
                        next.push(h);
                        stats.depth_reached = depth + 1;
                        h
                    }
                };
                if edges.len() >= limits.max_edges {
                    stats.truncated = true;
                    break 'layers;
                }
                edges.push(RgEdge {
                    tail: n,
                    transition: t,
                    head,
                    cost: sp.moves[t].cost,
                });
            }
        }
        frontier = next;
        depth += 1;
    }

    let final_index = index.get(net.final_marking()).copied();
    Ok(ReachabilityGraph {
        nodes,
        edges,
        initial_index: 0,
        final_index,
        stats,
    })
}

/// Sparse node-arc incidence matrix: `+1` at the tail, `-1` at the head.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeArcIncidence {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, i64)>,
}

impl NodeArcIncidence {
    pub fn to_sparse(&self) -> SparseIntMatrix {
        SparseIntMatrix::from_triplets(self.rows, self.cols, self.entries.iter().copied())
    }

    pub fn negated(&self) -> NodeArcIncidence {
        NodeArcIncidence {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&(r, c, v)| (r, c, -v)).collect(),
        }
    }

    /// `row col value` per line, columns in order.
    pub fn triplet_text(&self) -> String {
        let mut s = String::new();
        for (r, c, v) in &self.entries {
            let _ = writeln!(s, "{r} {c} {v}");
        }
        s
    }
}

pub fn node_arc_incidence(rg: &ReachabilityGraph) -> NodeArcIncidence {
    let mut entries = Vec::with_capacity(2 * rg.edges.len());
    for (c, e) in rg.edges.iter().enumerate() {
        entries.push((e.tail, c, 1));
        entries.push((e.head, c, -1));
    }
    NodeArcIncidence {
        rows: rg.nodes.len(),
        cols: rg.edges.len(),
        entries,
    }
}

/// True iff every column holds exactly one `+1`, one `-1` and nothing else.
pub fn check_tu_column_structure(b: &NodeArcIncidence) -> bool {
    let m = b.to_sparse();
    if b.entries.iter().any(|&(r, c, _)| r >= b.rows || c >= b.cols) {
        return false;
    }
    (0..m.cols()).all(|c| {
        let col = m.column(c);
        col.len() == 2 && col.iter().filter(|&&(_, v)| v == 1).count() == 1 && col.iter().filter(|&&(_, v)| v == -1).count() == 1
    })
}

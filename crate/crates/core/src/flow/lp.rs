//! Exact kernel for the unit-flow LP.
//!
//! With one unit of supply, nonnegative costs and unit capacities, an optimal
//! extreme point of the flow polytope is the indicator vector of a shortest
//! source-sink path. The kernel computes exact rational distances to the sink
//! by label-setting, walks tight edges forward choosing the smallest edge
//! index at each node, and then re-certifies optimality through the reduced
//! cost condition `d(tail) <= c + d(head)` on every edge.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_traits::{One, Signed, Zero};

use super::{FlowError, FlowProblem, FlowSolution, FlowStatus};
use crate::alignment::{Alignment, Method};
use crate::reach::ReachabilityGraph;
use crate::rational::Rational;
use crate::sync::SynchronousProduct;

struct Arcs {
    tail: Vec<usize>,
    head: Vec<usize>,
}

fn arcs_of(fp: &FlowProblem) -> Result<Arcs, FlowError> {
    let n = fp.incidence.cols;
    let mut tail = vec![usize::MAX; n];
    let mut head = vec![usize::MAX; n];
    for &(r, c, v) in &fp.incidence.entries {
        let slot = match v {
            1 => &mut tail[c],
            -1 => &mut head[c],
            _ => return Err(FlowError::Invariant(format!("column {c} holds entry {v}"))),
        };
        if *slot != usize::MAX {
            return Err(FlowError::Invariant(format!("column {c} has two entries of sign {v}")));
        }
        *slot = r;
    }
    if tail.contains(&usize::MAX) || head.contains(&usize::MAX) {
        return Err(FlowError::Invariant("incidence column without tail or head".into()));
    }
    Ok(Arcs { tail, head })
}

pub fn solve_min_cost_unit_flow(fp: &FlowProblem) -> Result<FlowSolution, FlowError> {
    let n_edges = fp.incidence.cols;
    let n_nodes = fp.incidence.rows;
    if fp.costs.len() != n_edges {
        return Err(FlowError::Invariant("cost vector length differs from edge count".into()));
    }
    if fp.costs.iter().any(|c| c.is_negative()) {
        return Err(FlowError::Invariant("negative edge cost".into()));
    }
    let zero_x = || vec![Rational::zero(); n_edges];
    if fp.source == fp.sink {
        return Ok(FlowSolution {
            x: zero_x(),
            objective: Rational::zero(),
            status: FlowStatus::Optimal,
        });
    }
    let arcs = arcs_of(fp)?;

    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for e in 0..n_edges {
        incoming[arcs.head[e]].push(e);
        outgoing[arcs.tail[e]].push(e);
    }

    // Distances to the sink.
    let mut dist: Vec<Option<Rational>> = vec![None; n_nodes];
    let mut settled = vec![false; n_nodes];
    let mut heap = BinaryHeap::new();
    dist[fp.sink] = Some(Rational::zero());
    heap.push(Reverse((Rational::zero(), fp.sink)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if settled[v] {
            continue;
        }
        settled[v] = true;
        for &e in &incoming[v] {
            let u = arcs.tail[e];
            let cand = d + fp.costs[e];
            if dist[u].as_ref().is_none_or(|cur| cand < *cur) {
                dist[u] = Some(cand);
                heap.push(Reverse((cand, u)));
            }
        }
    }

    let Some(objective) = dist[fp.source] else {
        return Ok(FlowSolution {
            x: zero_x(),
            objective: Rational::zero(),
            status: FlowStatus::Infeasible,
        });
    };

    let mut x = zero_x();
    let mut v = fp.source;
    let mut path_cost = Rational::zero();
    let mut steps = 0usize;
    while v != fp.sink {
        let dv = dist[v].expect("nodes on a tight walk have finite distance");
        let next = outgoing[v]
            .iter()
            .copied()
            .filter(|&e| dist[arcs.head[e]].is_some_and(|dh| fp.costs[e] + dh == dv))
            .min()
            .ok_or_else(|| FlowError::Invariant(format!("no tight edge leaves node {v}")))?;
        x[next] = Rational::one();
        path_cost += fp.costs[next];
        v = arcs.head[next];
        steps += 1;
        if steps > n_nodes {
            return Err(FlowError::Invariant("tight walk revisits a node".into()));
        }
    }

    // Certificate: distances are feasible potentials and the path attains them.
    for e in 0..n_edges {
        if let (Some(dt), Some(dh)) = (&dist[arcs.tail[e]], &dist[arcs.head[e]]) {
            if *dt > fp.costs[e] + dh {
                return Err(FlowError::Invariant(format!("reduced cost of edge {e} is negative")));
            }
        }
    }
    if path_cost != objective {
        return Err(FlowError::Invariant("path cost differs from the source distance".into()));
    }
    Ok(FlowSolution {
        x,
        objective,
        status: FlowStatus::Optimal,
    })
}

/// True iff every component lies within `tol` of 0 or of 1.
pub fn verify_integrality(sol: &FlowSolution, tol: &Rational) -> bool {
    sol.x
        .iter()
        .all(|v| v.abs() <= *tol || (v - Rational::one()).abs() <= *tol)
}

/// Orders the support of an optimal integral solution into a path and maps it
/// to alignment moves.
pub fn extract_alignment(rg: &ReachabilityGraph, sp: &SynchronousProduct, sol: &FlowSolution) -> Result<Alignment, FlowError> {
    if !sol.is_optimal() {
        return Err(FlowError::NotOptimal(sol.status));
    }
    if sol.x.len() != rg.num_edges() {
        return Err(FlowError::Invariant("solution length differs from edge count".into()));
    }
    if !verify_integrality(sol, &Rational::zero()) {
        return Err(FlowError::Invariant("solution is fractional".into()));
    }
    let chosen = sol.support();
    let Some(sink) = rg.final_index else {
        return Err(FlowError::Invariant("graph has no final node".into()));
    };
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); rg.num_nodes()];
    for &e in &chosen {
        out[rg.edges[e].tail].push(e);
    }
    let mut v = rg.initial_index;
    let mut seq = Vec::with_capacity(chosen.len());
    let mut visited = vec![false; rg.num_nodes()];
    while v != sink {
        if visited[v] {
            return Err(FlowError::Invariant(format!("chosen edges revisit node {v}")));
        }
        visited[v] = true;
        let [e] = out[v][..] else {
            return Err(FlowError::Invariant(format!(
                "node {v} has {} chosen outgoing edges",
                out[v].len()
            )));
        };
        seq.push(rg.edges[e].transition);
        v = rg.edges[e].head;
    }
    if seq.len() != chosen.len() {
        return Err(FlowError::Invariant("chosen edges do not form a single path".into()));
    }
    let alignment = Alignment::from_transitions(sp, &seq, Method::Lp);
    if alignment.total_cost != sol.objective {
        return Err(FlowError::Invariant("alignment cost differs from the objective".into()));
    }
    Ok(alignment)
}

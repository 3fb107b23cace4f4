//! Unit min-cost flow on the reachability graph, plus the step-indexed MILP
//! contrast formulation.

mod lp;
mod milp;
mod witness;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reach::{node_arc_incidence, NodeArcIncidence, ReachabilityGraph};
use crate::rational::Rational;

pub use lp::{extract_alignment, solve_min_cost_unit_flow, verify_integrality};
pub use milp::{build_milp_matrices, MilpMatrices, Sense};
pub use witness::{find_non_tu_witness, search_non_tu_witness, NonTuWitness, WitnessSearch};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("final marking not reached: the reachability graph was truncated by exploration limits")]
    TruncatedGraph,
    #[error("final marking is unreachable from the initial marking")]
    Unreachable,
    #[error("solution is not optimal (status {0:?})")]
    NotOptimal(FlowStatus),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FlowStatus {
    Optimal,
    Infeasible,
    TruncatedGraph,
}

/// `min c x  s.t.  B x = b, 0 <= x <= 1` with `b = e_source - e_sink`.
///
/// When `source == sink` the balance vector is zero and the optimum is the
/// empty flow.
#[derive(Clone, Debug)]
pub struct FlowProblem {
    pub incidence: NodeArcIncidence,
    pub costs: Vec<Rational>,
    pub balance: Vec<i64>,
    pub source: usize,
    pub sink: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowSolution {
    pub x: Vec<Rational>,
    pub objective: Rational,
    pub status: FlowStatus,
}

impl FlowSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == FlowStatus::Optimal
    }

    /// Edge indices with nonzero flow.
    pub fn support(&self) -> Vec<usize> {
        self.x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != Rational::from_integer(0))
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn assemble_flow_problem(rg: &ReachabilityGraph) -> Result<FlowProblem, FlowError> {
    let sink = match rg.final_index {
        Some(f) => f,
        None if rg.is_incomplete() => return Err(FlowError::TruncatedGraph),
        None => return Err(FlowError::Unreachable),
    };
    let source = rg.initial_index;
    let mut balance = vec![0i64; rg.num_nodes()];
    if source != sink {
        balance[source] = 1;
        balance[sink] = -1;
    }
    Ok(FlowProblem {
        incidence: node_arc_incidence(rg),
        costs: rg.edges.iter().map(|e| e.cost).collect(),
        balance,
        source,
        sink,
    })
}

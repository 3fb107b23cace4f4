//! Alignments: move sequences relating a trace to a run of the model.

use std::fmt;
use std::fmt::Write as _;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::petri::PetriNet;
use crate::rational::{format_rational, Rational};
use crate::sync::{CostConfig, MoveKind, MoveLabel, SynchronousProduct};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Lp,
    Astar,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lp => "LP",
            Method::Astar => "ASTAR",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentMove {
    /// Product transition index.
    pub transition: usize,
    pub kind: MoveKind,
    pub model_label: MoveLabel,
    pub log_label: MoveLabel,
    pub process_transition: Option<usize>,
    pub trace_position: Option<usize>,
    pub cost: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub moves: Vec<AlignmentMove>,
    pub total_cost: Rational,
    pub num_sync: usize,
    pub num_model: usize,
    pub num_tau: usize,
    pub num_log: usize,
    pub method: Method,
}

impl Alignment {
    /// Builds an alignment from a sequence of product transitions.
    pub fn from_transitions(sp: &SynchronousProduct, transitions: &[usize], method: Method) -> Self {
        let mut al = Alignment {
            moves: Vec::with_capacity(transitions.len()),
            total_cost: Rational::zero(),
            num_sync: 0,
            num_model: 0,
            num_tau: 0,
            num_log: 0,
            method,
        };
        for &t in transitions {
            let mv = &sp.moves[t];
            match mv.kind {
                MoveKind::Sync => al.num_sync += 1,
                MoveKind::Model => al.num_model += 1,
                MoveKind::ModelTau => al.num_tau += 1,
                MoveKind::Log => al.num_log += 1,
            }
            al.total_cost += mv.cost;
            al.moves.push(AlignmentMove {
                transition: t,
                kind: mv.kind,
                model_label: mv.model_label.clone(),
                log_label: mv.log_label.clone(),
                process_transition: mv.process_transition,
                trace_position: mv.trace_transition,
                cost: mv.cost,
            });
        }
        al
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn deviations(&self) -> usize {
        self.num_model + self.num_log
    }

    /// Log-side projection: the activities of all non-gap log labels.
    pub fn trace_projection(&self) -> Vec<String> {
        self.moves
            .iter()
            .filter_map(|m| match &m.log_label {
                MoveLabel::Activity(a) => Some(a.clone()),
                _ => None,
            })
            .collect()
    }

    /// Model-side projection as process transition indices.
    pub fn model_projection(&self) -> Vec<usize> {
        self.moves.iter().filter_map(|m| m.process_transition).collect()
    }

    pub fn cost_decomposes(&self, cost: &CostConfig) -> bool {
        let expected = cost.deviation_cost * Rational::from_integer(self.deviations() as i128)
            + cost.tau_cost * Rational::from_integer(self.num_tau as i128);
        expected == self.total_cost
    }

    /// One move per line: `kind model log cost`.
    pub fn to_move_table(&self) -> String {
        let mut s = String::new();
        for m in &self.moves {
            let _ = writeln!(s, "{}\t{}\t{}\t{}", m.kind, m.model_label, m.log_label, format_rational(&m.cost));
        }
        let _ = writeln!(s, "# total_cost {}", format_rational(&self.total_cost));
        s
    }

    pub fn to_json(&self, sp: &SynchronousProduct) -> serde_json::Value {
        let moves: Vec<_> = self
            .moves
            .iter()
            .map(|m| {
                json!({
                    "transition": sp.net.transitions()[m.transition],
                    "kind": m.kind.to_string(),
                    "model": m.model_label.to_string(),
                    "log": m.log_label.to_string(),
                    "cost": format_rational(&m.cost),
                })
            })
            .collect();
        json!({
            "method": self.method.to_string(),
            "total_cost": format_rational(&self.total_cost),
            "num_sync": self.num_sync,
            "num_model": self.num_model,
            "num_tau": self.num_tau,
            "num_log": self.num_log,
            "moves": moves,
        })
    }
}

/// True iff `sequence` fires from the initial marking of `net` and ends in its
/// final marking.
pub fn is_complete_firing_sequence(net: &PetriNet, sequence: &[usize]) -> bool {
    let mut m = net.initial_marking().clone();
    for &t in sequence {
        match net.fire(&m, t) {
            Ok(next) => m = next,
            Err(_) => return false,
        }
    }
    &m == net.final_marking()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{acyclic_net, toy_trace};
    use crate::petri::build_trace_model;
    use crate::sync::build_sync_product;

    #[test]
    fn counts_projections_and_cost() {
        let sn = acyclic_net();
        let sp = build_sync_product(&sn, &build_trace_model(&toy_trace()), &CostConfig::default()).unwrap();
        let id = |s: &str| sp.net.transition_index(s).unwrap();
        let seq = [id("(t1,t'1)"), id("(t2,t'2)"), id("(t3,>>)"), id("(t5,t'3)")];
        let al = Alignment::from_transitions(&sp, &seq, Method::Lp);
        assert_eq!((al.num_sync, al.num_model, al.num_log, al.num_tau), (3, 1, 0, 0));
        assert_eq!(al.total_cost, Rational::from_integer(1));
        assert_eq!(al.trace_projection(), vec!["a", "b", "e"]);
        assert!(is_complete_firing_sequence(&sn, &al.model_projection()));
        assert!(al.cost_decomposes(&sp.cost));
        assert!(is_complete_firing_sequence(&sp.net, &seq));
        let table = al.to_move_table();
        assert!(table.starts_with("SYNC\ta\ta\t0\n"));
        assert!(table.contains("MODEL\tc\t>>\t1\n"));
        assert_eq!(al.to_json(&sp)["total_cost"], "1");
    }

    #[test]
    fn incomplete_sequence_is_rejected() {
        let sn = acyclic_net();
        assert!(!is_complete_firing_sequence(&sn, &[0]));
        assert!(!is_complete_firing_sequence(&sn, &[1]));
    }
}

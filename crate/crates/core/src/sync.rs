//! Synchronous product of a process model and a trace model, with move costs.

use std::collections::HashSet;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::pnml::write_pnml_annotated;
use crate::petri::{ArcDirection, Label, NetError, PetriNet, PetriNetBuilder};
use crate::rational::{format_rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MoveKind {
    Sync,
    Model,
    ModelTau,
    Log,
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MoveKind::Sync => "SYNC",
            MoveKind::Model => "MODEL",
            MoveKind::ModelTau => "MODEL_TAU",
            MoveKind::Log => "LOG",
        })
    }
}

/// One side of a move label: an activity, the silent label, or a gap (`>>`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveLabel {
    Activity(String),
    Tau,
    Gap,
}

impl MoveLabel {
    pub fn is_gap(&self) -> bool {
        matches!(self, MoveLabel::Gap)
    }
}

impl From<&Label> for MoveLabel {
    fn from(l: &Label) -> Self {
        match l {
            Label::Tau => MoveLabel::Tau,
            Label::Activity(a) => MoveLabel::Activity(a.clone()),
        }
    }
}

impl fmt::Display for MoveLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MoveLabel::Activity(a) => f.write_str(a),
            MoveLabel::Tau => f.write_str("tau"),
            MoveLabel::Gap => f.write_str(">>"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncMove {
    pub kind: MoveKind,
    /// Index into the process model's transitions.
    pub process_transition: Option<usize>,
    /// Position in the trace (index into the trace model's path order).
    pub trace_transition: Option<usize>,
    pub model_label: MoveLabel,
    pub log_label: MoveLabel,
    pub cost: Rational,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyncError {
    #[error("trace model is not a linear path net")]
    NotATraceModel,
    #[error("invalid cost configuration: {0}")]
    InvalidCost(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Move costs. Synchronous moves always cost zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostConfig {
    pub tau_cost: Rational,
    pub deviation_cost: Rational,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            tau_cost: Rational::new(1, 1_000_000),
            deviation_cost: Rational::from_integer(1),
        }
    }
}

impl CostConfig {
    pub fn new(tau_cost: Rational, deviation_cost: Rational) -> Result<Self, SyncError> {
        let cfg = CostConfig {
            tau_cost,
            deviation_cost,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SyncError> {
        if self.tau_cost <= Rational::zero() || self.tau_cost >= self.deviation_cost {
            return Err(SyncError::InvalidCost(format!(
                "need 0 < tau_cost ({}) < deviation_cost ({})",
                format_rational(&self.tau_cost),
                format_rational(&self.deviation_cost)
            )));
        }
        Ok(())
    }

    pub fn cost_of(&self, kind: MoveKind) -> Rational {
        match kind {
            MoveKind::Sync => Rational::zero(),
            MoveKind::ModelTau => self.tau_cost,
            MoveKind::Model | MoveKind::Log => self.deviation_cost,
        }
    }
}

/// Product net plus the move description of every product transition.
///
/// Places: all process places (in process order) followed by the trace
/// places. Transitions: synchronous moves ordered by trace position then
/// process transition, then model moves in process order, then log moves in
/// trace order.
#[derive(Clone, Debug)]
pub struct SynchronousProduct {
    pub net: PetriNet,
    pub moves: Vec<SyncMove>,
    pub cost: CostConfig,
    pub process_places: usize,
    pub trace_len: usize,
}

impl SynchronousProduct {
    pub fn initial_marking(&self) -> &crate::petri::Marking {
        self.net.initial_marking()
    }

    pub fn final_marking(&self) -> &crate::petri::Marking {
        self.net.final_marking()
    }

    pub fn count(&self, kind: MoveKind) -> usize {
        self.moves.iter().filter(|m| m.kind == kind).count()
    }

    pub fn process_transition_count(&self) -> usize {
        self.count(MoveKind::Model) + self.count(MoveKind::ModelTau)
    }

    /// Debug PNML export with a cost annotation on each transition.
    pub fn to_pnml(&self) -> String {
        write_pnml_annotated(&self.net, "synchronous-product", |t| {
            let mv = &self.moves[t];
            Some(format!(
                "<toolspecific tool=\"conformflow\" version=\"1\" kind=\"{}\" cost=\"{}\"/>",
                mv.kind,
                format_rational(&mv.cost)
            ))
        })
    }
}

/// Per-transition costs in product transition order.
pub fn cost_vector(sp: &SynchronousProduct) -> Vec<Rational> {
    sp.moves.iter().map(|m| m.cost).collect()
}

pub fn build_sync_product(sn: &PetriNet, tn: &PetriNet, cost: &CostConfig) -> Result<SynchronousProduct, SyncError> {
    cost.validate()?;
    let path = tn.path_order().ok_or(SyncError::NotATraceModel)?;

    let mut b = PetriNetBuilder::new();
    let mut used: HashSet<String> = HashSet::new();
    for p in sn.places() {
        b.add_place(p.clone());
        used.insert(p.clone());
    }
    let mut tn_place_ids = Vec::with_capacity(tn.num_places());
    for p in tn.places() {
        let mut id = p.clone();
        while used.contains(&id) {
            id.push('\'');
        }
        used.insert(id.clone());
        b.add_place(id.clone());
        tn_place_ids.push(id);
    }

    let sn_arcs = arcs_by_transition(sn, |p| sn.places()[p].clone());
    let tn_arcs = arcs_by_transition(tn, |p| tn_place_ids[p].clone());

    let mut moves = Vec::new();
    let mut add_move = |b: &mut PetriNetBuilder, mv: SyncMove| {
        let left = mv.process_transition.map_or(">>".to_string(), |t| sn.transitions()[t].clone());
        let right = mv
            .trace_transition
            .map_or(">>".to_string(), |i| tn.transitions()[path[i]].clone());
        let id = format!("({left},{right})");
        let label = match (&mv.model_label, &mv.log_label) {
            (MoveLabel::Activity(a), _) => Label::Activity(a.clone()),
            (_, MoveLabel::Activity(a)) => Label::Activity(a.clone()),
            _ => Label::Tau,
        };
        b.add_transition(id.clone(), label);
        if let Some(t) = mv.process_transition {
            for (src, dst, w) in &sn_arcs[t] {
                add_endpoint_arc(b, src, dst, &id, *w);
            }
        }
        if let Some(i) = mv.trace_transition {
            for (src, dst, w) in &tn_arcs[path[i]] {
                add_endpoint_arc(b, src, dst, &id, *w);
            }
        }
        moves.push(mv);
    };

    for (pos, &tt) in path.iter().enumerate() {
        let trace_label = tn.label(tt);
        for st in 0..sn.num_transitions() {
            if sn.label(st).as_activity().is_some() && sn.label(st) == trace_label {
                add_move(
                    &mut b,
                    SyncMove {
                        kind: MoveKind::Sync,
                        process_transition: Some(st),
                        trace_transition: Some(pos),
                        model_label: MoveLabel::from(sn.label(st)),
                        log_label: MoveLabel::from(trace_label),
                        cost: cost.cost_of(MoveKind::Sync),
                    },
                );
            }
        }
    }
    for st in 0..sn.num_transitions() {
        let kind = if sn.label(st).is_silent() {
            MoveKind::ModelTau
        } else {
            MoveKind::Model
        };
        add_move(
            &mut b,
            SyncMove {
                kind,
                process_transition: Some(st),
                trace_transition: None,
                model_label: MoveLabel::from(sn.label(st)),
                log_label: MoveLabel::Gap,
                cost: cost.cost_of(kind),
            },
        );
    }
    for (pos, &tt) in path.iter().enumerate() {
        add_move(
            &mut b,
            SyncMove {
                kind: MoveKind::Log,
                process_transition: None,
                trace_transition: Some(pos),
                model_label: MoveLabel::Gap,
                log_label: MoveLabel::from(tn.label(tt)),
                cost: cost.cost_of(MoveKind::Log),
            },
        );
    }

    for (p, &n) in sn.initial_marking().tokens().iter().enumerate() {
        if n > 0 {
            b.set_initial(sn.places()[p].clone(), n);
        }
    }
    for (p, &n) in tn.initial_marking().tokens().iter().enumerate() {
        if n > 0 {
            b.set_initial(tn_place_ids[p].clone(), n);
        }
    }
    for (p, &n) in sn.final_marking().tokens().iter().enumerate() {
        if n > 0 {
            b.set_final(sn.places()[p].clone(), n);
        }
    }
    for (p, &n) in tn.final_marking().tokens().iter().enumerate() {
        if n > 0 {
            b.set_final(tn_place_ids[p].clone(), n);
        }
    }
    let net = b.build_in_order()?;
    Ok(SynchronousProduct {
        net,
        moves,
        cost: cost.clone(),
        process_places: sn.num_places(),
        trace_len: path.len(),
    })
}

/// `(source, target, weight)` arcs of each transition with `None` standing for
/// the transition itself.
type EndpointArc = (Option<String>, Option<String>, u32);

fn arcs_by_transition(net: &PetriNet, place_id: impl Fn(usize) -> String) -> Vec<Vec<EndpointArc>> {
    let mut out = vec![Vec::new(); net.num_transitions()];
    for arc in net.arcs() {
        let p = place_id(arc.place);
        out[arc.transition].push(match arc.direction {
            ArcDirection::PlaceToTransition => (Some(p), None, arc.weight),
            ArcDirection::TransitionToPlace => (None, Some(p), arc.weight),
        });
    }
    out
}

fn add_endpoint_arc(b: &mut PetriNetBuilder, src: &Option<String>, dst: &Option<String>, id: &str, w: u32) {
    match (src, dst) {
        (Some(p), None) => b.add_arc(p.clone(), id.to_string(), w),
        (None, Some(p)) => b.add_arc(id.to_string(), p.clone(), w),
        _ => unreachable!("endpoint arcs have exactly one place"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventlog::Trace;
    use crate::fixtures::{acyclic_net, insurance_net, insurance_trace, toy_trace};
    use crate::matrix::IntMatrix;
    use crate::petri::build_trace_model;

    fn product(net: &PetriNet, trace: &Trace) -> SynchronousProduct {
        build_sync_product(net, &build_trace_model(trace), &CostConfig::default()).unwrap()
    }

    #[test]
    fn toy_product_move_counts() {
        let sp = product(&acyclic_net(), &toy_trace());
        assert_eq!(sp.count(MoveKind::Sync), 3);
        assert_eq!(sp.count(MoveKind::Model), 5);
        assert_eq!(sp.count(MoveKind::ModelTau), 0);
        assert_eq!(sp.count(MoveKind::Log), 3);
        assert_eq!(sp.net.num_transitions(), 11);
        assert_eq!(sp.net.num_places(), 10);
        let c = cost_vector(&sp);
        assert_eq!(c.iter().filter(|x| x.is_zero()).count(), 3);
        assert_eq!(c.iter().filter(|x| **x == Rational::from_integer(1)).count(), 8);
    }

    #[test]
    fn empty_trace_product_has_model_moves_only() {
        let sp = product(&acyclic_net(), &Trace::new("e", Vec::<String>::new()));
        assert_eq!(sp.count(MoveKind::Sync), 0);
        assert_eq!(sp.count(MoveKind::Log), 0);
        assert_eq!(sp.process_transition_count(), 5);
    }

    #[test]
    fn insurance_product_reproduces_published_incidence() {
        let sp = product(&insurance_net(), &insurance_trace());
        assert_eq!(sp.net.num_transitions(), 20);
        let ids: Vec<&str> = sp.net.transitions().iter().map(String::as_str).collect();
        assert_eq!(
            &ids[..5],
            &["(t1,t'1)", "(t4,t'2)", "(t1,t'3)", "(t6,t'4)", "(t7,t'5)"]
        );
        #[rustfmt::skip]
        let expected = IntMatrix::from_rows(&[
            vec![-1, 0,-1, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0,  0, 0, 0, 0, 0],
            vec![ 1, 0, 1, 0, 0,  1,-1, 0, 0, 0, 0, 0, 0, 0, 0,  0, 0, 0, 0, 0],
            vec![ 0,-1, 0, 0, 0,  0, 1, 0,-1, 0, 0, 0, 0, 0, 0,  0, 0, 0, 0, 0],
            vec![ 1, 0, 1, 0, 0,  1, 0,-1, 0, 0, 0, 0, 0, 0, 0,  0, 0, 0, 0, 0],
            vec![ 0,-1, 0, 0, 0,  0, 0, 1,-1, 0, 0, 0, 0, 0, 0,  0, 0, 0, 0, 0],
            vec![ 0, 1, 0, 0, 0,  0, 0, 0, 1,-1, 0, 0,-1, 0, 0,  0, 0, 0, 0, 0],
            vec![ 0, 0, 0,-1, 0,  0, 0, 0, 0, 1,-1, 0, 0, 0, 0,  0, 0, 0, 0, 0],
            vec![ 0, 0, 0, 1, 0,  0, 0, 0, 0, 0, 1, 0, 0,-1, 0,  0, 0, 0, 0, 0],
            vec![ 0, 0, 0, 0,-1,  0, 0, 0, 0, 1, 0,-1, 0, 0, 0,  0, 0, 0, 0, 0],
            vec![ 0, 0, 0, 0, 1,  0, 0, 0, 0, 0, 0, 1, 0,-1, 0,  0, 0, 0, 0, 0],
            vec![ 0, 0, 0, 0, 0,  0, 0, 0, 0, 0, 0, 0, 1, 1,-1,  0, 0, 0, 0, 0],
            vec![ 0, 0, 0, 0, 0,  0, 0, 0, 0, 0, 0, 0, 0, 0, 1,  0, 0, 0, 0, 0],
            vec![-1, 0, 0, 0, 0,  0, 0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 0, 0, 0, 0],
            vec![ 1,-1, 0, 0, 0,  0, 0, 0, 0, 0, 0, 0, 0, 0, 0,  1,-1, 0, 0, 0],
            vec![ 0, 1,-1, 0, 0,  0, 0, 0, 0, 0, 0, 0, 0, 0, 0,  0, 1,-1, 0, 0],
            vec![ 0, 0, 1,-1, 0,  0, 0, 0, 0, 0, 0, 0, 0, 0, 0,  0, 0, 1,-1, 0],
            vec![ 0, 0, 0, 1,-1,  0, 0, 0, 0, 0, 0, 0, 0, 0, 0,  0, 0, 0, 1,-1],
            vec![ 0, 0, 0, 0, 1,  0, 0, 0, 0, 0, 0, 0, 0, 0, 0,  0, 0, 0, 0, 1],
        ]);
        assert_eq!(sp.net.incidence_matrices().incidence, expected);

        let eps = Rational::new(1, 1_000_000);
        let one = Rational::from_integer(1);
        let zero = Rational::zero();
        let expected_costs = vec![
            zero, zero, zero, zero, zero, one, one, one, one, eps, one, one, one, eps, one, one, one, one, one, one,
        ];
        assert_eq!(cost_vector(&sp), expected_costs);
    }

    #[test]
    fn product_markings_restrict_to_components() {
        let sn = acyclic_net();
        let tn = build_trace_model(&toy_trace());
        let sp = build_sync_product(&sn, &tn, &CostConfig::default()).unwrap();
        let np = sn.num_places();
        assert_eq!(&sp.initial_marking().tokens()[..np], sn.initial_marking().tokens());
        assert_eq!(&sp.initial_marking().tokens()[np..], tn.initial_marking().tokens());
        assert_eq!(&sp.final_marking().tokens()[..np], sn.final_marking().tokens());
        assert_eq!(&sp.final_marking().tokens()[np..], tn.final_marking().tokens());
    }

    #[test]
    fn duplicate_labels_give_cross_product_syncs() {
        let net = PetriNet::builder()
            .place("i")
            .place("o")
            .transition("x1", Label::activity("a"))
            .transition("x2", Label::activity("a"))
            .arc("i", "x1")
            .arc("x1", "o")
            .arc("i", "x2")
            .arc("x2", "o")
            .initial("i", 1)
            .final_tokens("o", 1)
            .build()
            .unwrap();
        let sp = product(&net, &Trace::new("c", ["a", "b", "a", "a"]));
        assert_eq!(sp.count(MoveKind::Sync), 2 * 3);
    }

    #[test]
    fn colliding_place_ids_are_renamed() {
        let net = PetriNet::builder()
            .place("p'0")
            .place("o")
            .transition("t", Label::activity("a"))
            .arc("p'0", "t")
            .arc("t", "o")
            .initial("p'0", 1)
            .final_tokens("o", 1)
            .build()
            .unwrap();
        let sp = product(&net, &Trace::new("c", ["a"]));
        assert_eq!(sp.net.num_places(), 4);
        assert!(sp.net.place_index("p'0''").is_some() || sp.net.place_index("p'0'").is_some());
    }

    #[test]
    fn rejects_non_path_trace_net_and_bad_costs() {
        let sn = acyclic_net();
        assert_eq!(
            build_sync_product(&sn, &sn, &CostConfig::default()).unwrap_err(),
            SyncError::NotATraceModel
        );
        let tn = build_trace_model(&toy_trace());
        let bad = CostConfig {
            tau_cost: Rational::from_integer(2),
            deviation_cost: Rational::from_integer(1),
        };
        assert!(matches!(build_sync_product(&sn, &tn, &bad), Err(SyncError::InvalidCost(_))));
    }

    #[test]
    fn sync_arcs_are_union_of_constituents() {
        let sn = acyclic_net();
        let tn = build_trace_model(&toy_trace());
        let sp = build_sync_product(&sn, &tn, &CostConfig::default()).unwrap();
        let np = sn.num_places();
        for (t, mv) in sp.moves.iter().enumerate() {
            let mut expected: Vec<(usize, u32)> = Vec::new();
            if let Some(st) = mv.process_transition {
                expected.extend(sn.preset(st).iter().copied());
            }
            if let Some(pos) = mv.trace_transition {
                expected.extend(tn.preset(pos).iter().map(|&(p, w)| (p + np, w)));
            }
            expected.sort_unstable();
            assert_eq!(sp.net.preset(t), expected.as_slice());
        }
    }
}

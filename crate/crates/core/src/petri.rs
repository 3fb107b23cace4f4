//! Labeled marked Petri nets: markings, the firing rule and incidence matrices.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventlog::Trace;
use crate::matrix::IntMatrix;

/// Transition label. Silent transitions carry [`Label::Tau`], never a
/// reserved activity string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Tau,
    Activity(String),
}

impl Label {
    pub fn activity(name: impl Into<String>) -> Self {
        Label::Activity(name.into())
    }

    pub fn is_silent(&self) -> bool {
        matches!(self, Label::Tau)
    }

    pub fn as_activity(&self) -> Option<&str> {
        match self {
            Label::Tau => None,
            Label::Activity(a) => Some(a),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tau => f.write_str("tau"),
            Label::Activity(a) => f.write_str(a),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArcDirection {
    PlaceToTransition,
    TransitionToPlace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Arc {
    pub place: usize,
    pub transition: usize,
    pub direction: ArcDirection,
    pub weight: u32,
}

/// Token vector indexed by the owning net's place order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Marking(Vec<u32>);

impl Marking {
    pub fn new(tokens: Vec<u32>) -> Self {
        Marking(tokens)
    }

    pub fn zeros(places: usize) -> Self {
        Marking(vec![0; places])
    }

    pub fn tokens(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, place: usize) -> u32 {
        self.0[place]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&t| t as u64).sum()
    }

    pub fn max_tokens(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Concatenates two markings (used for product markings).
    pub fn concat(&self, other: &Marking) -> Marking {
        let mut tokens = self.0.clone();
        tokens.extend_from_slice(&other.0);
        Marking(tokens)
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

impl From<Vec<u32>> for Marking {
    fn from(tokens: Vec<u32>) -> Self {
        Marking(tokens)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("duplicate node id {0:?}")]
    DuplicateId(String),
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
    #[error("arc {from:?} -> {to:?} must connect a place and a transition")]
    InvalidArc { from: String, to: String },
    #[error("marking has {found} entries but the net has {expected} places")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("transition {transition:?} is not enabled; deficient places: {deficient:?}")]
    NotEnabled {
        transition: String,
        deficient: Vec<String>,
    },
    #[error("transition index {0} out of range")]
    UnknownTransition(usize),
}

/// Backward (`w_minus`), forward (`w_plus`) and combined incidence matrices,
/// all `|P| x |T|` in the net's canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceTriple {
    pub w_minus: IntMatrix,
    pub w_plus: IntMatrix,
    pub incidence: IntMatrix,
}

/// Compares ids so that embedded numbers sort numerically (`p2 < p10`).
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(cb.iter()) {
        let ord = match (x, y) {
            ((true, dx), (true, dy)) => {
                let tx = dx.trim_start_matches('0');
                let ty = dy.trim_start_matches('0');
                tx.len()
                    .cmp(&ty.len())
                    .then_with(|| tx.cmp(ty))
                    .then_with(|| dx.len().cmp(&dy.len()))
            }
            ((_, sx), (_, sy)) => sx.cmp(sy),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

#[derive(Clone, Debug, Default)]
pub struct PetriNetBuilder {
    places: Vec<String>,
    transitions: Vec<(String, Label)>,
    arcs: Vec<(String, String, u32)>,
    initial: Vec<(String, u32)>,
    final_marking: Vec<(String, u32)>,
}

impl PetriNetBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(mut self, id: impl Into<String>) -> Self {
        self.add_place(id);
        self
    }

    pub fn transition(mut self, id: impl Into<String>, label: Label) -> Self {
        self.add_transition(id, label);
        self
    }

    pub fn arc(mut self, source: impl Into<String>, target: impl Into<String>) -> Self {
        self.add_arc(source, target, 1);
        self
    }

    pub fn initial(mut self, place: impl Into<String>, tokens: u32) -> Self {
        self.set_initial(place, tokens);
        self
    }

    pub fn final_tokens(mut self, place: impl Into<String>, tokens: u32) -> Self {
        self.set_final(place, tokens);
        self
    }

    pub fn add_place(&mut self, id: impl Into<String>) {
        self.places.push(id.into());
    }

    pub fn add_transition(&mut self, id: impl Into<String>, label: Label) {
        self.transitions.push((id.into(), label));
    }

    pub fn add_arc(&mut self, source: impl Into<String>, target: impl Into<String>, weight: u32) {
        self.arcs.push((source.into(), target.into(), weight));
    }

    pub fn set_initial(&mut self, place: impl Into<String>, tokens: u32) {
        self.initial.push((place.into(), tokens));
    }

    pub fn set_final(&mut self, place: impl Into<String>, tokens: u32) {
        self.final_marking.push((place.into(), tokens));
    }

    pub fn has_final_marking(&self) -> bool {
        !self.final_marking.is_empty()
    }

    pub fn place_ids(&self) -> &[String] {
        &self.places
    }

    pub fn arcs(&self) -> &[(String, String, u32)] {
        &self.arcs
    }

    /// Builds with places and transitions sorted by [`natural_cmp`].
    pub fn build(mut self) -> Result<PetriNet, NetError> {
        self.places.sort_by(|a, b| natural_cmp(a, b));
        self.transitions.sort_by(|a, b| natural_cmp(&a.0, &b.0));
        self.build_in_order()
    }

    /// Builds keeping the insertion order of places and transitions.
    pub fn build_in_order(self) -> Result<PetriNet, NetError> {
        let mut place_index = HashMap::with_capacity(self.places.len());
        for (i, p) in self.places.iter().enumerate() {
            if place_index.insert(p.clone(), i).is_some() {
                return Err(NetError::DuplicateId(p.clone()));
            }
        }
        let mut transition_index = HashMap::with_capacity(self.transitions.len());
        for (i, (t, _)) in self.transitions.iter().enumerate() {
            if place_index.contains_key(t) || transition_index.insert(t.clone(), i).is_some() {
                return Err(NetError::DuplicateId(t.clone()));
            }
        }
        let mut arcs = Vec::with_capacity(self.arcs.len());
        for (source, target, weight) in &self.arcs {
            let arc = match (
                place_index.get(source),
                transition_index.get(source),
                place_index.get(target),
                transition_index.get(target),
            ) {
                (Some(&p), _, _, Some(&t)) => Arc {
                    place: p,
                    transition: t,
                    direction: ArcDirection::PlaceToTransition,
                    weight: *weight,
                },
                (_, Some(&t), Some(&p), _) => Arc {
                    place: p,
                    transition: t,
                    direction: ArcDirection::TransitionToPlace,
                    weight: *weight,
                },
                (None, None, _, _) => return Err(NetError::UnknownNode(source.clone())),
                (_, _, None, None) => return Err(NetError::UnknownNode(target.clone())),
                _ => {
                    return Err(NetError::InvalidArc {
                        from: source.clone(),
                        to: target.clone(),
                    })
                }
            };
            arcs.push(arc);
        }
        let marking_of = |entries: &[(String, u32)]| -> Result<Marking, NetError> {
            let mut tokens = vec![0u32; self.places.len()];
            for (p, n) in entries {
                let idx = *place_index.get(p).ok_or_else(|| NetError::UnknownNode(p.clone()))?;
                tokens[idx] += n;
            }
            Ok(Marking(tokens))
        };
        let initial = marking_of(&self.initial)?;
        let final_marking = marking_of(&self.final_marking)?;
        let (transitions, labels) = self.transitions.into_iter().unzip();
        Ok(PetriNet::assemble(
            self.places,
            transitions,
            labels,
            arcs,
            initial,
            final_marking,
            place_index,
            transition_index,
        ))
    }
}

/// A labeled marked Petri net. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PetriNet {
    places: Vec<String>,
    transitions: Vec<String>,
    labels: Vec<Label>,
    arcs: Vec<Arc>,
    initial: Marking,
    final_marking: Marking,
    pre: Vec<Vec<(usize, u32)>>,
    post: Vec<Vec<(usize, u32)>>,
    delta: Vec<Vec<(usize, i64)>>,
    place_index: HashMap<String, usize>,
    transition_index: HashMap<String, usize>,
}

impl PetriNet {
    pub fn builder() -> PetriNetBuilder {
        PetriNetBuilder::new()
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        places: Vec<String>,
        transitions: Vec<String>,
        labels: Vec<Label>,
        arcs: Vec<Arc>,
        initial: Marking,
        final_marking: Marking,
        place_index: HashMap<String, usize>,
        transition_index: HashMap<String, usize>,
    ) -> Self {
        let nt = transitions.len();
        let mut pre_map: Vec<HashMap<usize, u32>> = vec![HashMap::new(); nt];
        let mut post_map: Vec<HashMap<usize, u32>> = vec![HashMap::new(); nt];
        for arc in &arcs {
            let map = match arc.direction {
                ArcDirection::PlaceToTransition => &mut pre_map[arc.transition],
                ArcDirection::TransitionToPlace => &mut post_map[arc.transition],
            };
            *map.entry(arc.place).or_insert(0) += arc.weight;
        }
        let sorted = |m: HashMap<usize, u32>| {
            let mut v: Vec<(usize, u32)> = m.into_iter().filter(|&(_, w)| w > 0).collect();
            v.sort_unstable();
            v
        };
        let pre: Vec<Vec<(usize, u32)>> = pre_map.into_iter().map(sorted).collect();
        let post: Vec<Vec<(usize, u32)>> = post_map.into_iter().map(sorted).collect();
        let delta = (0..nt)
            .map(|t| {
                let mut d: HashMap<usize, i64> = HashMap::new();
                for &(p, w) in &pre[t] {
                    *d.entry(p).or_insert(0) -= w as i64;
                }
                for &(p, w) in &post[t] {
                    *d.entry(p).or_insert(0) += w as i64;
                }
                let mut v: Vec<(usize, i64)> = d.into_iter().filter(|&(_, x)| x != 0).collect();
                v.sort_unstable();
                v
            })
            .collect();
        PetriNet {
            places,
            transitions,
            labels,
            arcs,
            initial,
            final_marking,
            pre,
            post,
            delta,
            place_index,
            transition_index,
        }
    }

    pub fn places(&self) -> &[String] {
        &self.places
    }

    pub fn transitions(&self) -> &[String] {
        &self.transitions
    }

    pub fn num_places(&self) -> usize {
        self.places.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, transition: usize) -> &Label {
        &self.labels[transition]
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn initial_marking(&self) -> &Marking {
        &self.initial
    }

    pub fn final_marking(&self) -> &Marking {
        &self.final_marking
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.place_index.get(id).copied()
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transition_index.get(id).copied()
    }

    /// Input places of `t` with aggregated weights, sorted by place index.
    pub fn preset(&self, t: usize) -> &[(usize, u32)] {
        &self.pre[t]
    }

    pub fn postset(&self, t: usize) -> &[(usize, u32)] {
        &self.post[t]
    }

    /// Nonzero entries of the incidence column of `t`.
    pub fn effect(&self, t: usize) -> &[(usize, i64)] {
        &self.delta[t]
    }

    /// Renders a marking as `[p1,p3:2]` using place ids.
    pub fn format_marking(&self, m: &Marking) -> String {
        let parts: Vec<String> = m
            .tokens()
            .iter()
            .enumerate()
            .filter(|&(_, &n)| n > 0)
            .map(|(p, &n)| {
                if n == 1 {
                    self.places[p].clone()
                } else {
                    format!("{}:{}", self.places[p], n)
                }
            })
            .collect();
        format!("[{}]", parts.join(","))
    }

    /// Builds a marking from `(place id, tokens)` pairs.
    pub fn marking_of<'a>(&self, entries: impl IntoIterator<Item = (&'a str, u32)>) -> Result<Marking, NetError> {
        let mut tokens = vec![0; self.places.len()];
        for (p, n) in entries {
            let idx = self.place_index(p).ok_or_else(|| NetError::UnknownNode(p.to_string()))?;
            tokens[idx] += n;
        }
        Ok(Marking(tokens))
    }

    fn check_dimension(&self, m: &Marking) -> Result<(), NetError> {
        if m.len() != self.places.len() {
            return Err(NetError::DimensionMismatch {
                expected: self.places.len(),
                found: m.len(),
            });
        }
        Ok(())
    }

    /// Enabledness without dimension checks; `m` must be indexed by this net.
    #[inline]
    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        self.pre[t].iter().all(|&(p, w)| m.0[p] >= w)
    }

    /// All transitions enabled at `m`, in canonical order.
    pub fn enabled_transitions(&self, m: &Marking) -> Result<Vec<usize>, NetError> {
        self.check_dimension(m)?;
        Ok((0..self.transitions.len()).filter(|&t| self.is_enabled(m, t)).collect())
    }

    /// Firing rule without enabledness checks. Caller guarantees `t` is enabled.
    #[inline]
    pub fn fire_unchecked(&self, m: &Marking, t: usize) -> Marking {
        let mut tokens = m.0.clone();
        for &(p, d) in &self.delta[t] {
            tokens[p] = (tokens[p] as i64 + d) as u32;
        }
        Marking(tokens)
    }

    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking, NetError> {
        self.check_dimension(m)?;
        if t >= self.transitions.len() {
            return Err(NetError::UnknownTransition(t));
        }
        let deficient: Vec<String> = self.pre[t]
            .iter()
            .filter(|&&(p, w)| m.0[p] < w)
            .map(|&(p, _)| self.places[p].clone())
            .collect();
        if !deficient.is_empty() {
            return Err(NetError::NotEnabled {
                transition: self.transitions[t].clone(),
                deficient,
            });
        }
        Ok(self.fire_unchecked(m, t))
    }

    pub fn incidence_matrices(&self) -> IncidenceTriple {
        let (np, nt) = (self.places.len(), self.transitions.len());
        let mut w_minus = IntMatrix::zeros(np, nt);
        let mut w_plus = IntMatrix::zeros(np, nt);
        for arc in &self.arcs {
            match arc.direction {
                ArcDirection::PlaceToTransition => w_minus.add_to(arc.place, arc.transition, arc.weight as i64),
                ArcDirection::TransitionToPlace => w_plus.add_to(arc.place, arc.transition, arc.weight as i64),
            }
        }
        let mut incidence = IntMatrix::zeros(np, nt);
        for p in 0..np {
            for t in 0..nt {
                incidence.set(p, t, w_plus.get(p, t) - w_minus.get(p, t));
            }
        }
        IncidenceTriple {
            w_minus,
            w_plus,
            incidence,
        }
    }

    /// If this net is a linear path net (a trace model), returns its
    /// transitions in path order.
    pub fn path_order(&self) -> Option<Vec<usize>> {
        if self.places.len() != self.transitions.len() + 1 {
            return None;
        }
        let marked: Vec<usize> = (0..self.places.len()).filter(|&p| self.initial.0[p] > 0).collect();
        if marked.len() != 1 || self.initial.0[marked[0]] != 1 {
            return None;
        }
        let mut consumers: HashMap<usize, Vec<usize>> = HashMap::new();
        for t in 0..self.transitions.len() {
            if self.pre[t].len() != 1 || self.post[t].len() != 1 || self.pre[t][0].1 != 1 || self.post[t][0].1 != 1 {
                return None;
            }
            if self.labels[t].is_silent() {
                return None;
            }
            consumers.entry(self.pre[t][0].0).or_default().push(t);
        }
        let mut order = Vec::with_capacity(self.transitions.len());
        let mut seen = HashSet::new();
        let mut place = marked[0];
        seen.insert(place);
        while let Some(ts) = consumers.get(&place) {
            if ts.len() != 1 {
                return None;
            }
            let t = ts[0];
            order.push(t);
            place = self.post[t][0].0;
            if !seen.insert(place) {
                return None;
            }
        }
        if order.len() != self.transitions.len() {
            return None;
        }
        let mut expected_final = vec![0u32; self.places.len()];
        expected_final[place] = 1;
        (self.final_marking.0 == expected_final).then_some(order)
    }
}

/// Builds the linear trace model of `trace`: places `p'0..p'n`, transitions
/// `t'1..t'n`, one token in `p'0` initially and in `p'n` finally.
pub fn build_trace_model(trace: &Trace) -> PetriNet {
    let n = trace.activities.len();
    let mut b = PetriNetBuilder::new();
    for i in 0..=n {
        b.add_place(format!("p'{i}"));
    }
    for (i, a) in trace.activities.iter().enumerate() {
        let t = format!("t'{}", i + 1);
        b.add_transition(t.clone(), Label::Activity(a.clone()));
        b.add_arc(format!("p'{i}"), t.clone(), 1);
        b.add_arc(t, format!("p'{}", i + 1), 1);
    }
    b.set_initial("p'0", 1);
    b.set_final(format!("p'{n}"), 1);
    b.build_in_order().expect("trace model ids are unique by construction")
}

/// Structural warnings. None of them prevent alignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    UnconnectedPlace(String),
    UnconnectedTransition(String),
    UnreachablePlace(String),
    UnreachableTransition(String),
    MultipleSourcePlaces(Vec<String>),
    MultipleSinkPlaces(Vec<String>),
    ZeroWeightArc { source: String, target: String },
    DuplicateArc { source: String, target: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnconnectedPlace(p) => write!(f, "unconnected place {p}"),
            Diagnostic::UnconnectedTransition(t) => write!(f, "unconnected transition {t}"),
            Diagnostic::UnreachablePlace(p) => write!(f, "place {p} unreachable from the initial marking"),
            Diagnostic::UnreachableTransition(t) => write!(f, "transition {t} unreachable from the initial marking"),
            Diagnostic::MultipleSourcePlaces(ps) => write!(f, "multiple source places: {}", ps.join(", ")),
            Diagnostic::MultipleSinkPlaces(ps) => write!(f, "multiple sink places: {}", ps.join(", ")),
            Diagnostic::ZeroWeightArc { source, target } => write!(f, "zero-weight arc {source} -> {target}"),
            Diagnostic::DuplicateArc { source, target } => write!(f, "duplicate arc {source} -> {target}"),
        }
    }
}

/// Static workflow-net checks. Isolated nodes are reported once as
/// unconnected and skipped by the remaining checks.
pub fn validate_workflow_net(net: &PetriNet) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let np = net.num_places();
    let nt = net.num_transitions();
    let (mut p_in, mut p_out) = (vec![false; np], vec![false; np]);
    let mut t_touched = vec![false; nt];
    let mut seen_arcs = HashSet::new();
    let arc_ends = |arc: &Arc| match arc.direction {
        ArcDirection::PlaceToTransition => (net.places[arc.place].clone(), net.transitions[arc.transition].clone()),
        ArcDirection::TransitionToPlace => (net.transitions[arc.transition].clone(), net.places[arc.place].clone()),
    };
    for arc in &net.arcs {
        match arc.direction {
            ArcDirection::PlaceToTransition => p_out[arc.place] = true,
            ArcDirection::TransitionToPlace => p_in[arc.place] = true,
        }
        t_touched[arc.transition] = true;
        if arc.weight == 0 {
            let (source, target) = arc_ends(arc);
            out.push(Diagnostic::ZeroWeightArc { source, target });
        }
        if !seen_arcs.insert((arc.place, arc.transition, arc.direction)) {
            let (source, target) = arc_ends(arc);
            out.push(Diagnostic::DuplicateArc { source, target });
        }
    }
    let isolated_place: Vec<bool> = (0..np).map(|p| !p_in[p] && !p_out[p]).collect();
    for p in (0..np).filter(|&p| isolated_place[p]) {
        out.push(Diagnostic::UnconnectedPlace(net.places[p].clone()));
    }
    for t in (0..nt).filter(|&t| !t_touched[t]) {
        out.push(Diagnostic::UnconnectedTransition(net.transitions[t].clone()));
    }
    let sources: Vec<String> = (0..np).filter(|&p| !p_in[p] && p_out[p]).map(|p| net.places[p].clone()).collect();
    if sources.len() > 1 {
        out.push(Diagnostic::MultipleSourcePlaces(sources));
    }
    let sinks: Vec<String> = (0..np).filter(|&p| p_in[p] && !p_out[p]).map(|p| net.places[p].clone()).collect();
    if sinks.len() > 1 {
        out.push(Diagnostic::MultipleSinkPlaces(sinks));
    }

    // Forward connectivity from the initially marked places, ignoring synchronisation.
    let mut place_seen = vec![false; np];
    let mut trans_seen = vec![false; nt];
    let mut queue: VecDeque<usize> = (0..np).filter(|&p| net.initial.0[p] > 0).collect();
    for &p in &queue {
        place_seen[p] = true;
    }
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); np];
    for t in 0..nt {
        for &(p, _) in &net.pre[t] {
            consumers[p].push(t);
        }
    }
    while let Some(p) = queue.pop_front() {
        for &t in &consumers[p] {
            if !trans_seen[t] {
                trans_seen[t] = true;
                for &(q, _) in &net.post[t] {
                    if !place_seen[q] {
                        place_seen[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    for p in (0..np).filter(|&p| !place_seen[p] && !isolated_place[p]) {
        out.push(Diagnostic::UnreachablePlace(net.places[p].clone()));
    }
    for t in (0..nt).filter(|&t| !trans_seen[t] && t_touched[t]) {
        out.push(Diagnostic::UnreachableTransition(net.transitions[t].clone()));
    }
    out
}

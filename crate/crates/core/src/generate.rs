//! Block-structured model generation and random simulation.
//!
//! Grammar: `block := name | seq(block, ...) | xor(block, ...) | and(block, ...) | loop(body, redo)`.
//! The activity name `tau` denotes a silent transition.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eventlog::{EventLog, Trace};
use crate::io::noise::{inject_noise, pick_index, NoiseSpec};
use crate::io::ModelIoError;
use crate::petri::{Label, NetError, PetriNet, PetriNetBuilder};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("block spec parse error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },
    #[error("block spec has an empty activity alphabet")]
    EmptyAlphabet,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Noise(#[from] ModelIoError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    Activity(String),
    Seq(Vec<Block>),
    Xor(Vec<Block>),
    And(Vec<Block>),
    Loop(Box<Block>, Box<Block>),
}

impl Block {
    /// Visible activity names in first-occurrence order.
    pub fn alphabet(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_alphabet(&mut out);
        out
    }

    fn collect_alphabet(&self, out: &mut Vec<String>) {
        match self {
            Block::Activity(a) => {
                if a != "tau" && !out.contains(a) {
                    out.push(a.clone());
                }
            }
            Block::Seq(c) | Block::Xor(c) | Block::And(c) => c.iter().for_each(|b| b.collect_alphabet(out)),
            Block::Loop(b, r) => {
                b.collect_alphabet(out);
                r.collect_alphabet(out);
            }
        }
    }

    pub fn has_loop(&self) -> bool {
        match self {
            Block::Activity(_) => false,
            Block::Seq(c) | Block::Xor(c) | Block::And(c) => c.iter().any(Block::has_loop),
            Block::Loop(..) => true,
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, c: &[Block]| {
            write!(f, "{name}(")?;
            for (i, b) in c.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{b}")?;
            }
            write!(f, ")")
        };
        match self {
            Block::Activity(a) => write!(f, "{a}"),
            Block::Seq(c) => list(f, "seq", c),
            Block::Xor(c) => list(f, "xor", c),
            Block::And(c) => list(f, "and", c),
            Block::Loop(b, r) => write!(f, "loop({b}, {r})"),
        }
    }
}

pub fn parse_block_spec(input: &str) -> Result<Block, GenError> {
    let mut p = Parser { s: input.as_bytes(), pos: 0 };
    let block = p.block()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.error("trailing input"));
    }
    if block.alphabet().is_empty() {
        return Err(GenError::EmptyAlphabet);
    }
    Ok(block)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> GenError {
        GenError::Parse {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Result<String, GenError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || b"_-.".contains(&self.s[self.pos])) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an activity or block name"));
        }
        Ok(String::from_utf8_lossy(&self.s[start..self.pos]).into_owned())
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn block(&mut self) -> Result<Block, GenError> {
        let name = self.ident()?;
        if !self.eat(b'(') {
            return Ok(Block::Activity(name));
        }
        let mut children = vec![self.block()?];
        while self.eat(b',') {
            children.push(self.block()?);
        }
        if !self.eat(b')') {
            return Err(self.error("expected ',' or ')'"));
        }
        match name.as_str() {
            "seq" => Ok(Block::Seq(children)),
            "xor" => Ok(Block::Xor(children)),
            "and" => Ok(Block::And(children)),
            "loop" => match <[Block; 2]>::try_from(children) {
                Ok([b, r]) => Ok(Block::Loop(Box::new(b), Box::new(r))),
                Err(_) => Err(self.error("loop takes exactly two blocks (body, redo)")),
            },
            other => Err(self.error(&format!("unknown block operator {other:?}"))),
        }
    }
}

/// Builds a net with source place `source` and sink place `sink`.
///
/// `and` uses silent split and join transitions. `loop(B, R)` gets private
/// entry and exit places joined to the context by silent transitions, so that
/// its redo part cannot interfere with sibling blocks.
pub fn block_to_net(block: &Block) -> Result<PetriNet, GenError> {
    let mut g = NetGen::default();
    g.b.add_place("source");
    g.b.add_place("sink");
    g.emit(block, "source".to_string(), "sink".to_string());
    g.b.set_initial("source", 1);
    g.b.set_final("sink", 1);
    Ok(g.b.build()?)
}

#[derive(Default)]
struct NetGen {
    b: PetriNetBuilder,
    places: usize,
    transitions: usize,
}

impl NetGen {
    fn place(&mut self) -> String {
        self.places += 1;
        let id = format!("p{}", self.places);
        self.b.add_place(id.clone());
        id
    }

    fn transition(&mut self, label: Label, from: &[&str], to: &[&str]) {
        self.transitions += 1;
        let id = format!("t{}", self.transitions);
        self.b.add_transition(id.clone(), label);
        for p in from {
            self.b.add_arc(*p, id.clone(), 1);
        }
        for p in to {
            self.b.add_arc(id.clone(), *p, 1);
        }
    }

    fn emit(&mut self, block: &Block, input: String, output: String) {
        match block {
            Block::Activity(a) => {
                let label = if a == "tau" { Label::Tau } else { Label::activity(a.clone()) };
                self.transition(label, &[&input], &[&output]);
            }
            Block::Seq(children) => {
                let mut cur = input;
                for (i, c) in children.iter().enumerate() {
                    let next = if i + 1 == children.len() { output.clone() } else { self.place() };
                    self.emit(c, cur, next.clone());
                    cur = next;
                }
            }
            Block::Xor(children) => {
                for c in children {
                    self.emit(c, input.clone(), output.clone());
                }
            }
            Block::And(children) => {
                let ins: Vec<String> = children.iter().map(|_| self.place()).collect();
                let outs: Vec<String> = children.iter().map(|_| self.place()).collect();
                let ins_ref: Vec<&str> = ins.iter().map(String::as_str).collect();
                self.transition(Label::Tau, &[&input], &ins_ref);
                for (i, c) in children.iter().enumerate() {
                    self.emit(c, ins[i].clone(), outs[i].clone());
                }
                let outs_ref: Vec<&str> = outs.iter().map(String::as_str).collect();
                self.transition(Label::Tau, &outs_ref, &[&output]);
            }
            Block::Loop(body, redo) => {
                let entry = self.place();
                let exit = self.place();
                self.transition(Label::Tau, &[&input], &[&entry]);
                self.emit(body, entry.clone(), exit.clone());
                self.emit(redo, exit.clone(), entry);
                self.transition(Label::Tau, &[&exit], &[&output]);
            }
        }
    }
}

/// Shape parameters for [`random_block`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockShape {
    pub seq_weight: u32,
    pub xor_weight: u32,
    pub and_weight: u32,
    pub loop_weight: u32,
}

impl Default for BlockShape {
    fn default() -> Self {
        BlockShape {
            seq_weight: 4,
            xor_weight: 2,
            and_weight: 2,
            loop_weight: 1,
        }
    }
}

pub fn activity_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i < 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("a{i}")
            }
        })
        .collect()
}

/// Random block tree using each of `activities` exactly once.
pub fn random_block<R: Rng>(activities: &[String], shape: &BlockShape, rng: &mut R) -> Result<Block, GenError> {
    if activities.is_empty() {
        return Err(GenError::EmptyAlphabet);
    }
    Ok(random_subtree(activities, shape, rng))
}

fn random_subtree<R: Rng>(acts: &[String], shape: &BlockShape, rng: &mut R) -> Block {
    if acts.len() == 1 {
        return Block::Activity(acts[0].clone());
    }
    let weights = [
        shape.seq_weight,
        shape.xor_weight,
        shape.and_weight,
        if acts.len() >= 2 { shape.loop_weight } else { 0 },
    ];
    let total: u32 = weights.iter().sum::<u32>().max(1);
    let mut pick = pick_index(rng, total as usize) as u32;
    let mut op = 0;
    for (i, w) in weights.iter().enumerate() {
        if pick < *w {
            op = i;
            break;
        }
        pick -= w;
    }
    if op == 3 {
        let cut = 1 + pick_index(rng, acts.len() - 1);
        let body = random_subtree(&acts[..cut], shape, rng);
        let redo = random_subtree(&acts[cut..], shape, rng);
        return Block::Loop(Box::new(body), Box::new(redo));
    }
    let parts = (2 + pick_index(rng, 2)).min(acts.len());
    let mut cuts: Vec<usize> = Vec::new();
    while cuts.len() < parts - 1 {
        let c = 1 + pick_index(rng, acts.len() - 1);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let mut children = Vec::with_capacity(parts);
    let mut start = 0;
    for &c in cuts.iter().chain(std::iter::once(&acts.len())) {
        children.push(random_subtree(&acts[start..c], shape, rng));
        start = c;
    }
    match op {
        0 => Block::Seq(children),
        1 => Block::Xor(children),
        _ => Block::And(children),
    }
}

/// Plays the token game with uniform choices until no transition is enabled.
/// Returns the visible labels when the run ends in the final marking within
/// `max_steps` firings.
pub fn simulate_run<R: Rng>(net: &PetriNet, max_steps: usize, rng: &mut R) -> Option<Vec<String>> {
    let mut m = net.initial_marking().clone();
    let mut labels = Vec::new();
    for _ in 0..max_steps {
        let enabled: Vec<usize> = (0..net.num_transitions()).filter(|&t| net.is_enabled(&m, t)).collect();
        if enabled.is_empty() {
            return (&m == net.final_marking()).then_some(labels);
        }
        let t = enabled[pick_index(rng, enabled.len())];
        if let Some(a) = net.label(t).as_activity() {
            labels.push(a.to_string());
        }
        m = net.fire_unchecked(&m, t);
    }
    None
}

/// `count` fitting traces named `case-0`, `case-1`, ...
pub fn simulate_log<R: Rng>(net: &PetriNet, count: usize, max_steps: usize, rng: &mut R) -> Result<EventLog, GenError> {
    let mut traces = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while traces.len() < count {
        attempts += 1;
        if attempts > 100 * count.max(1) {
            return Err(GenError::Invalid(format!(
                "no complete run within {max_steps} steps after {attempts} attempts"
            )));
        }
        if let Some(run) = simulate_run(net, max_steps, rng) {
            traces.push(Trace::new(format!("case-{}", traces.len()), run));
        }
    }
    Ok(EventLog::new("simulated", traces))
}

/// Applies [`inject_noise`] to every trace; trace `i` uses seed `spec.seed + i`.
pub fn noisy_log(clean: &EventLog, spec: &NoiseSpec) -> Result<EventLog, GenError> {
    let mut traces = Vec::with_capacity(clean.len());
    for (i, t) in clean.traces.iter().enumerate() {
        let s = NoiseSpec {
            seed: spec.seed.wrapping_add(i as u64),
            ..spec.clone()
        };
        traces.push(inject_noise(t, &s)?);
    }
    Ok(EventLog::new("noisy", traces))
}

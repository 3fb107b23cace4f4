//! Small reference nets used by the examples, tests and the CLI demo mode.

use crate::eventlog::Trace;
use crate::petri::{Label, PetriNet, PetriNetBuilder};

fn toy_builder(arcs: &[(&str, &str)]) -> PetriNetBuilder {
    let mut b = PetriNetBuilder::new();
    for p in 1..=6 {
        b.add_place(format!("p{p}"));
    }
    for (t, a) in ["a", "b", "c", "d", "e"].iter().enumerate() {
        b.add_transition(format!("t{}", t + 1), Label::activity(*a));
    }
    for (s, t) in arcs {
        b.add_arc(*s, *t, 1);
    }
    b.set_initial("p1", 1);
    b.set_final("p6", 1);
    b
}

/// Acyclic toy model: `a` splits into `b || c`, or `d` does both at once, then `e`.
pub fn acyclic_net() -> PetriNet {
    toy_builder(&[
        ("p1", "t1"),
        ("t1", "p2"),
        ("t1", "p3"),
        ("p2", "t2"),
        ("p2", "t4"),
        ("p3", "t3"),
        ("p3", "t4"),
        ("t2", "p4"),
        ("t3", "p5"),
        ("t4", "p4"),
        ("t4", "p5"),
        ("p4", "t5"),
        ("p5", "t5"),
        ("t5", "p6"),
    ])
    .build()
    .expect("static fixture")
}

/// Cyclic variant: `d` loops back from `{p4,p5}` to `{p2,p3}`.
pub fn cyclic_net() -> PetriNet {
    toy_builder(&[
        ("p1", "t1"),
        ("t1", "p2"),
        ("t1", "p3"),
        ("p2", "t2"),
        ("t4", "p2"),
        ("p3", "t3"),
        ("t4", "p3"),
        ("t2", "p4"),
        ("t3", "p5"),
        ("p4", "t4"),
        ("p5", "t4"),
        ("p4", "t5"),
        ("p5", "t5"),
        ("t5", "p6"),
    ])
    .build()
    .expect("static fixture")
}

/// Insurance-claim model with twelve places, ten transitions and two silent
/// transitions (`t5` and `t9`).
pub fn insurance_net() -> PetriNet {
    let mut b = PetriNetBuilder::new();
    for p in 1..=12 {
        b.add_place(format!("p{p}"));
    }
    let labels = [
        Label::activity("a"),
        Label::activity("b"),
        Label::activity("c"),
        Label::activity("d"),
        Label::Tau,
        Label::activity("e"),
        Label::activity("f"),
        Label::activity("g"),
        Label::Tau,
        Label::activity("h"),
    ];
    for (i, l) in labels.into_iter().enumerate() {
        b.add_transition(format!("t{}", i + 1), l);
    }
    let arcs = [
        ("p1", "t1"),
        ("t1", "p2"),
        ("t1", "p4"),
        ("p2", "t2"),
        ("t2", "p3"),
        ("p4", "t3"),
        ("t3", "p5"),
        ("p3", "t4"),
        ("p5", "t4"),
        ("t4", "p6"),
        ("p6", "t5"),
        ("t5", "p7"),
        ("t5", "p9"),
        ("p7", "t6"),
        ("t6", "p8"),
        ("p9", "t7"),
        ("t7", "p10"),
        ("p6", "t8"),
        ("t8", "p11"),
        ("p8", "t9"),
        ("p10", "t9"),
        ("t9", "p11"),
        ("p11", "t10"),
        ("t10", "p12"),
    ];
    for (s, t) in arcs {
        b.add_arc(s, t, 1);
    }
    b.set_initial("p1", 1);
    b.set_final("p12", 1);
    b.build().expect("static fixture")
}

/// Five-event trace paired with [`insurance_net`]: `a, d, a, e, f`.
pub fn insurance_trace() -> Trace {
    Trace::new("insurance", ["a", "d", "a", "e", "f"])
}

pub fn toy_trace() -> Trace {
    Trace::new("toy", ["a", "b", "e"])
}

//! PNML reader/writer for single-page place/transition nets.
//!
//! Silent transitions are recognised by a missing or empty `<name>` or by a
//! `toolspecific` element with `activity="$invisible$"`. When the file has no
//! `finalmarkings` section the final marking is one token in every sink
//! place (a place with incoming but no outgoing arcs).

use std::fmt::Write as _;

use log::warn;
use roxmltree::{Document, Node};

use super::{decode_utf8, escape_xml, ModelIoError};
use crate::petri::{ArcDirection, Label, NetError, PetriNet, PetriNetBuilder};

const INVISIBLE: &str = "$invisible$";

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name)
}

fn text_of(node: Node) -> Option<String> {
    child(node, "text").and_then(|t| t.text()).map(|s| s.trim().to_string())
}

fn parse_count(raw: &str, what: &str) -> Result<u32, ModelIoError> {
    raw.trim()
        .parse::<u32>()
        .map_err(|_| ModelIoError::Semantic(format!("invalid {what} {raw:?}")))
}

pub fn parse_pnml(input: &[u8]) -> Result<PetriNet, ModelIoError> {
    let text = decode_utf8(input)?;
    let doc = Document::parse(text)?;
    let net = doc
        .descendants()
        .find(|n| n.is_element() && n.tag_name().name() == "net")
        .ok_or_else(|| ModelIoError::Semantic("no <net> element".into()))?;

    let mut builder = PetriNetBuilder::new();
    let mut has_initial = false;
    let mut pages = 0usize;
    let mut final_entries: Option<Vec<(String, u32)>> = None;
    let mut stack: Vec<Node> = net.children().filter(|c| c.is_element()).collect();
    stack.reverse();
    while let Some(node) = stack.pop() {
        match node.tag_name().name() {
            "page" => {
                pages += 1;
                let mut kids: Vec<Node> = node.children().filter(|c| c.is_element()).collect();
                kids.reverse();
                stack.extend(kids);
            }
            "place" => {
                let id = required_id(node, "place")?;
                if let Some(raw) = child(node, "initialMarking").and_then(text_of) {
                    let tokens = parse_count(&raw, "initial marking")?;
                    if tokens > 0 {
                        builder.set_initial(id.clone(), tokens);
                        has_initial = true;
                    }
                }
                builder.add_place(id);
            }
            "transition" => {
                let id = required_id(node, "transition")?;
                let name = child(node, "name").and_then(text_of).unwrap_or_default();
                let invisible = node.children().any(|c| {
                    c.is_element() && c.tag_name().name() == "toolspecific" && c.attribute("activity") == Some(INVISIBLE)
                });
                let label = if invisible || name.is_empty() {
                    Label::Tau
                } else {
                    Label::Activity(name)
                };
                builder.add_transition(id, label);
            }
            "arc" => {
                let source = node
                    .attribute("source")
                    .ok_or_else(|| ModelIoError::Semantic("arc without source".into()))?;
                let target = node
                    .attribute("target")
                    .ok_or_else(|| ModelIoError::Semantic("arc without target".into()))?;
                let weight = match child(node, "inscription").and_then(text_of) {
                    Some(raw) => parse_count(&raw, "arc inscription")?,
                    None => 1,
                };
                builder.add_arc(source, target, weight);
            }
            "finalmarkings" => {
                if let Some(marking) = child(node, "marking") {
                    let mut entries = Vec::new();
                    for p in marking.children().filter(|c| c.is_element() && c.tag_name().name() == "place") {
                        let idref = p
                            .attribute("idref")
                            .ok_or_else(|| ModelIoError::Semantic("final marking place without idref".into()))?;
                        let tokens = match text_of(p) {
                            Some(raw) => parse_count(&raw, "final marking")?,
                            None => 1,
                        };
                        if tokens > 0 {
                            entries.push((idref.to_string(), tokens));
                        }
                    }
                    final_entries = Some(entries);
                }
            }
            "name" | "toolspecific" | "graphics" => {}
            other => warn!("PNML: ignoring unsupported element <{other}>"),
        }
    }
    if pages > 1 {
        warn!("PNML: {pages} pages flattened into one net");
    }
    if !has_initial {
        return Err(ModelIoError::Semantic("no place carries an initial token".into()));
    }
    match final_entries {
        Some(entries) => {
            for (p, n) in entries {
                builder.set_final(p, n);
            }
        }
        None => {
            let sinks = sink_places(&builder);
            if sinks.is_empty() {
                return Err(ModelIoError::Semantic(
                    "no final marking given and no sink place to infer one from".into(),
                ));
            }
            for p in sinks {
                builder.set_final(p, 1);
            }
        }
    }
    builder.build().map_err(|e| match e {
        NetError::UnknownNode(id) => ModelIoError::UnknownNode(id),
        other => ModelIoError::Net(other),
    })
}

fn required_id(node: Node, what: &str) -> Result<String, ModelIoError> {
    node.attribute("id")
        .map(str::to_string)
        .ok_or_else(|| ModelIoError::Semantic(format!("{what} without id")))
}

fn sink_places(builder: &PetriNetBuilder) -> Vec<String> {
    builder
        .place_ids()
        .iter()
        .filter(|p| {
            let has_in = builder.arcs().iter().any(|(_, t, _)| t == *p);
            let has_out = builder.arcs().iter().any(|(s, _, _)| s == *p);
            has_in && !has_out
        })
        .cloned()
        .collect()
}

/// Serializes `net` as PNML. `annotate` may attach extra `toolspecific`
/// content to each transition (used for cost annotations).
pub fn write_pnml_annotated(net: &PetriNet, net_id: &str, annotate: impl Fn(usize) -> Option<String>) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<pnml>\n");
    let _ = writeln!(
        out,
        "  <net id=\"{}\" type=\"http://www.pnml.org/version-2009/grammar/pnmlcoremodel\">",
        escape_xml(net_id)
    );
    out.push_str("    <page id=\"page0\">\n");
    for (p, id) in net.places().iter().enumerate() {
        let _ = write!(out, "      <place id=\"{0}\">\n        <name><text>{0}</text></name>\n", escape_xml(id));
        let tokens = net.initial_marking().get(p);
        if tokens > 0 {
            let _ = writeln!(out, "        <initialMarking><text>{tokens}</text></initialMarking>");
        }
        out.push_str("      </place>\n");
    }
    for (t, id) in net.transitions().iter().enumerate() {
        let _ = writeln!(out, "      <transition id=\"{}\">", escape_xml(id));
        match net.label(t) {
            Label::Activity(a) => {
                let _ = writeln!(out, "        <name><text>{}</text></name>", escape_xml(a));
            }
            Label::Tau => {
                let _ = writeln!(out, "        <name><text>tau</text></name>");
                let _ = writeln!(
                    out,
                    "        <toolspecific tool=\"ProM\" version=\"6.4\" activity=\"{INVISIBLE}\" localNodeID=\"{}\"/>",
                    escape_xml(id)
                );
            }
        }
        if let Some(extra) = annotate(t) {
            let _ = writeln!(out, "        {extra}");
        }
        out.push_str("      </transition>\n");
    }
    for (i, arc) in net.arcs().iter().enumerate() {
        let (s, t) = match arc.direction {
            ArcDirection::PlaceToTransition => (&net.places()[arc.place], &net.transitions()[arc.transition]),
            ArcDirection::TransitionToPlace => (&net.transitions()[arc.transition], &net.places()[arc.place]),
        };
        let _ = write!(
            out,
            "      <arc id=\"arc{i}\" source=\"{}\" target=\"{}\"",
            escape_xml(s),
            escape_xml(t)
        );
        if arc.weight == 1 {
            out.push_str("/>\n");
        } else {
            let _ = write!(
                out,
                ">\n        <inscription><text>{}</text></inscription>\n      </arc>\n",
                arc.weight
            );
        }
    }
    out.push_str("    </page>\n    <finalmarkings>\n      <marking>\n");
    for (p, id) in net.places().iter().enumerate() {
        let tokens = net.final_marking().get(p);
        if tokens > 0 {
            let _ = writeln!(
                out,
                "        <place idref=\"{}\"><text>{tokens}</text></place>",
                escape_xml(id)
            );
        }
    }
    out.push_str("      </marking>\n    </finalmarkings>\n  </net>\n</pnml>\n");
    out
}

pub fn write_pnml(net: &PetriNet, net_id: &str) -> String {
    write_pnml_annotated(net, net_id, |_| None)
}

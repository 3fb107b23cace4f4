//! Minimal XES reader and writer: one trace per `<trace>`, activity taken
//! from the event's `concept:name` string attribute.

use std::fmt::Write as _;

use log::warn;
use roxmltree::{Document, Node};

use super::{decode_utf8, escape_xml, ModelIoError};
use crate::eventlog::{EventLog, Trace};

const CONCEPT_NAME: &str = "concept:name";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct XesImport {
    pub log: EventLog,
    /// Events dropped because they had no `concept:name`.
    pub skipped_events: usize,
}

fn concept_name(node: Node) -> Option<String> {
    node.children()
        .filter(|c| c.is_element() && c.tag_name().name() == "string")
        .find(|c| c.attribute("key") == Some(CONCEPT_NAME))
        .and_then(|c| c.attribute("value"))
        .map(str::to_string)
}

pub fn parse_xes_with_stats(input: &[u8]) -> Result<XesImport, ModelIoError> {
    let text = decode_utf8(input)?;
    let doc = Document::parse(text)?;
    let root = doc.root_element();
    let source_name = concept_name(root).unwrap_or_default();
    let mut traces = Vec::new();
    let mut skipped = 0usize;
    for (i, tnode) in root
        .children()
        .filter(|c| c.is_element() && c.tag_name().name() == "trace")
        .enumerate()
    {
        let case_id = concept_name(tnode).unwrap_or_else(|| format!("case{}", i + 1));
        let mut activities = Vec::new();
        for ev in tnode.children().filter(|c| c.is_element() && c.tag_name().name() == "event") {
            match concept_name(ev) {
                Some(a) => activities.push(a),
                None => skipped += 1,
            }
        }
        traces.push(Trace { case_id, activities });
    }
    if skipped > 0 {
        warn!("XES: skipped {skipped} event(s) without {CONCEPT_NAME}");
    }
    Ok(XesImport {
        log: EventLog { traces, source_name },
        skipped_events: skipped,
    })
}

pub fn parse_xes(input: &[u8]) -> Result<EventLog, ModelIoError> {
    parse_xes_with_stats(input).map(|imp| imp.log)
}

pub fn write_xes(log: &EventLog) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<log xes.version=\"1.0\" xes.features=\"nested-attributes\">\n");
    out.push_str("  <extension name=\"Concept\" prefix=\"concept\" uri=\"http://www.xes-standard.org/concept.xesext\"/>\n");
    if !log.source_name.is_empty() {
        let _ = writeln!(
            out,
            "  <string key=\"{CONCEPT_NAME}\" value=\"{}\"/>",
            escape_xml(&log.source_name)
        );
    }
    for trace in &log.traces {
        out.push_str("  <trace>\n");
        let _ = writeln!(
            out,
            "    <string key=\"{CONCEPT_NAME}\" value=\"{}\"/>",
            escape_xml(&trace.case_id)
        );
        for a in &trace.activities {
            let _ = writeln!(
                out,
                "    <event><string key=\"{CONCEPT_NAME}\" value=\"{}\"/></event>",
                escape_xml(a)
            );
        }
        out.push_str("  </trace>\n");
    }
    out.push_str("</log>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOG: &str = r#"<?xml version="1.0"?>
<log xes.version="1.0">
  <trace>
    <string key="concept:name" value="c1"/>
    <event><string key="concept:name" value="a"/><string key="lifecycle:transition" value="complete"/></event>
    <event><string key="concept:name" value="b"/></event>
    <event><string key="concept:name" value="e"/></event>
  </trace>
  <trace>
    <string key="concept:name" value="c2"/>
    <event><string key="concept:name" value="a"/></event>
    <event><string key="org:resource" value="x"/></event>
  </trace>
  <trace>
    <string key="concept:name" value="c3"/>
  </trace>
</log>"#;

    #[test]
    fn reads_traces_in_order_and_skips_nameless_events() {
        let imp = parse_xes_with_stats(LOG.as_bytes()).unwrap();
        let ids: Vec<&str> = imp.log.traces.iter().map(|t| t.case_id.as_str()).collect();
        assert_eq!(ids, vec!["c1", "c2", "c3"]);
        assert_eq!(imp.log.traces[0].activities, vec!["a", "b", "e"]);
        assert_eq!(imp.log.traces[1].activities, vec!["a"]);
        assert!(imp.log.traces[2].activities.is_empty());
        assert_eq!(imp.skipped_events, 1);
    }

    #[test]
    fn empty_log_is_not_an_error() {
        let log = parse_xes(b"<log/>").unwrap();
        assert!(log.traces.is_empty());
    }

    #[test]
    fn malformed_is_error() {
        assert!(matches!(parse_xes(b"<log><trace></log>"), Err(ModelIoError::Xml { .. })));
    }

    #[test]
    fn writer_output_reads_back() {
        let log = parse_xes(LOG.as_bytes()).unwrap();
        let mut again = parse_xes(write_xes(&log).as_bytes()).unwrap();
        again.source_name = log.source_name.clone();
        assert_eq!(again, log);
    }
}

//! Text formats: the network file, label listings, and DOT export.
//!
//! Network file, one directive per line, `#` starts a comment:
//!
//! ```text
//! flow <flow_id>              opens a flow section
//! entity <name> [<name> ...]
//! channel <src> <dst>
//! bichannel <a> <b>           same as `channel a b` plus `channel b a`
//! split <e1> <e2> [...]       top level, after every flow
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::lattice::{CompletionReport, LatticeReport};
use crate::model::{EntityId, FlowSystem, ModelError, Network};
use crate::order::{LabelTable, Poset};
use crate::policy::ConformanceReport;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormatErrorKind {
    Syntax(String),
    UnknownDirective(String),
    Model(ModelError),
}

impl fmt::Display for FormatErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormatErrorKind::Syntax(m) => f.write_str(m),
            FormatErrorKind::UnknownDirective(d) => write!(f, "unknown directive `{d}`"),
            FormatErrorKind::Model(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct FormatError {
    pub line: usize,
    pub kind: FormatErrorKind,
}

impl FormatError {
    fn syntax(line: usize, message: impl Into<String>) -> Self {
        FormatError {
            line,
            kind: FormatErrorKind::Syntax(message.into()),
        }
    }

    fn model(line: usize, err: ModelError) -> Self {
        FormatError {
            line,
            kind: FormatErrorKind::Model(err),
        }
    }
}

struct Section<'a> {
    flow_id: &'a str,
    line: usize,
    entities: Vec<(&'a str, usize)>,
    channels: Vec<(&'a str, &'a str, usize)>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

pub fn parse_network(text: &str) -> Result<FlowSystem, FormatError> {
    let mut sections: Vec<Section> = Vec::new();
    let mut splits: Vec<(Vec<&str>, usize)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let words: Vec<&str> = strip_comment(raw).split_whitespace().collect();
        let Some((&directive, args)) = words.split_first() else {
            continue;
        };
        if directive == "flow" {
            if !splits.is_empty() {
                return Err(FormatError::syntax(line, "`flow` after `split`"));
            }
            let [id] = args else {
                return Err(FormatError::syntax(line, "expected `flow <flow_id>`"));
            };
            sections.push(Section {
                flow_id: id,
                line,
                entities: Vec::new(),
                channels: Vec::new(),
            });
            continue;
        }
        if directive == "split" {
            splits.push((args.to_vec(), line));
            continue;
        }
        if !matches!(directive, "entity" | "channel" | "bichannel") {
            return Err(FormatError {
                line,
                kind: FormatErrorKind::UnknownDirective(directive.to_string()),
            });
        }
        let Some(section) = sections.last_mut() else {
            return Err(FormatError::syntax(line, format!("`{directive}` before any `flow`")));
        };
        if !splits.is_empty() {
            return Err(FormatError::syntax(line, format!("`{directive}` after `split`")));
        }
        match (directive, args) {
            ("entity", []) => return Err(FormatError::syntax(line, "expected `entity <name> ...`")),
            ("entity", names) => section.entities.extend(names.iter().map(|n| (*n, line))),
            ("channel", [a, b]) => section.channels.push((a, b, line)),
            ("bichannel", [a, b]) => {
                section.channels.push((a, b, line));
                section.channels.push((b, a, line));
            }
            _ => {
                return Err(FormatError::syntax(
                    line,
                    format!("expected `{directive} <src> <dst>`"),
                ))
            }
        }
    }

    let mut networks = Vec::with_capacity(sections.len());
    // entity -> (flow id, declaring line), for cross-flow diagnostics
    let mut declared: BTreeMap<&str, (&str, usize)> = BTreeMap::new();
    for s in &sections {
        let mut local: BTreeMap<&str, usize> = BTreeMap::new();
        for &(name, line) in &s.entities {
            EntityId::new(name).map_err(|e| FormatError::model(line, e))?;
            if local.insert(name, line).is_some() {
                return Err(FormatError::model(
                    line,
                    ModelError::DuplicateEntity(name.to_string()),
                ));
            }
            if let Some(&(first, _)) = declared.get(name) {
                return Err(FormatError::model(
                    line,
                    ModelError::EntityInMultipleFlows {
                        entity: name.to_string(),
                        first: first.to_string(),
                        second: s.flow_id.to_string(),
                    },
                ));
            }
        }
        for &(name, line) in &s.entities {
            declared.insert(name, (s.flow_id, line));
        }
        for &(a, b, line) in &s.channels {
            if let Some(missing) = [a, b].into_iter().find(|e| !local.contains_key(e)) {
                return Err(FormatError::model(
                    line,
                    ModelError::UndeclaredEntity {
                        src: a.to_string(),
                        dst: b.to_string(),
                        missing: missing.to_string(),
                    },
                ));
            }
        }
        let net = Network::build(
            s.flow_id,
            s.entities.iter().map(|(n, _)| *n),
            s.channels.iter().map(|(a, b, _)| (*a, *b)),
        )
        .map_err(|e| FormatError::model(s.line, e))?;
        networks.push(net);
    }

    let mut sys = FlowSystem::build(networks, Vec::<Vec<&str>>::new()).map_err(|e| {
        let line = match &e {
            ModelError::FlowIdCollision(id) => sections
                .iter()
                .filter(|s| s.flow_id == id)
                .nth(1)
                .map_or(0, |s| s.line),
            _ => 0,
        };
        FormatError::model(line, e)
    })?;
    for (group, line) in splits {
        sys.add_split_group(group)
            .map_err(|e| FormatError::model(line, e))?;
    }
    Ok(sys)
}

/// Canonical text for a system: flows in system order, entities on one line,
/// channels sorted one per line, split groups last.
pub fn serialize_network(sys: &FlowSystem) -> String {
    let mut out = String::new();
    for (i, net) in sys.networks().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "flow {}", net.flow_id());
        if !net.is_empty() {
            out.push_str("entity");
            for e in net.entities() {
                let _ = write!(out, " {e}");
            }
            out.push('\n');
        }
        for c in net.channels() {
            let _ = writeln!(out, "channel {} {}", c.src, c.dst);
        }
    }
    if !sys.split_groups().is_empty() {
        if !sys.networks().is_empty() {
            out.push('\n');
        }
        for group in sys.split_groups() {
            out.push_str("split");
            for e in group {
                let _ = write!(out, " {e}");
            }
            out.push('\n');
        }
    }
    out
}

/// One line per entity, `<entity>: {<sorted provenance>}`, sorted by entity.
pub fn render_labels(table: &LabelTable) -> String {
    let mut out = String::new();
    for (entity, label) in table.iter() {
        let _ = writeln!(out, "{entity}: {label}");
    }
    out
}

/// `flow <id>: lattice` or `... not a lattice`, then one line per failing
/// pair, each class rendered as its member set.
pub fn render_lattice_report(flow_id: &str, p: &Poset, report: &LatticeReport) -> String {
    let mut out = String::new();
    let verdict = if report.is_lattice { "lattice" } else { "not a lattice" };
    let _ = writeln!(out, "flow {flow_id}: {verdict}");
    for (kind, pairs) in [
        ("join-failure", &report.join_failures),
        ("meet-failure", &report.meet_failures),
    ] {
        for (a, b) in pairs {
            let _ = writeln!(out, "{kind} {} {}", p.class(*a), p.class(*b));
        }
    }
    out
}

pub fn render_completion(report: &CompletionReport) -> String {
    let mut out = format!(
        "completion: classes={} cuts={} void={}\n",
        report.original_size, report.completed_size, report.void_labels
    );
    for v in &report.void_elements {
        let _ = writeln!(out, "void {v}");
    }
    out
}

pub fn render_conformance(flow_id: &str, report: &ConformanceReport) -> String {
    let mut out = String::new();
    if report.conforms {
        let _ = writeln!(out, "flow {flow_id}: conforms");
        return out;
    }
    let _ = writeln!(out, "flow {flow_id}: does not conform");
    for (a, b) in &report.missing_flows {
        let _ = writeln!(out, "missing {a} -> {b}");
    }
    for (a, b) in &report.forbidden_flows {
        let _ = writeln!(out, "forbidden {a} <-> {b}");
    }
    for (a, b) in &report.extra_flows {
        let _ = writeln!(out, "extra {a} -> {b}");
    }
    out
}

const FLOW_COLORS: [&str; 6] = ["black", "blue", "darkgreen", "red", "purple", "orange"];

/// DOT graph of every flow. The first flow's edges are solid, later flows'
/// dashed, each flow in its own colour. Split groups become dotted same-rank
/// clusters, which tie their members visually without adding edges.
pub fn export_dot(sys: &FlowSystem) -> String {
    let mut out = String::from("digraph flows {\n");
    for (i, net) in sys.networks().iter().enumerate() {
        let style = if i == 0 { "solid" } else { "dashed" };
        let color = FLOW_COLORS[i % FLOW_COLORS.len()];
        let _ = writeln!(out, "  // flow {}", net.flow_id());
        for e in net.entities() {
            let _ = writeln!(out, "  \"{e}\";");
        }
        for c in net.channels() {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [style={style}, color={color}];",
                c.src, c.dst
            );
        }
    }
    for (i, group) in sys.split_groups().iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_split_{i} {{");
        out.push_str("    label=\"split\";\n    style=dotted;\n    rank=same;\n");
        for e in group {
            let _ = writeln!(out, "    \"{e}\";");
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::order::compute_labels;

    #[test]
    fn parses_retail_file() {
        let sys = parse_network(fixtures::NETWORK_FILE).unwrap();
        assert_eq!(sys, fixtures::retail_system());
        assert_eq!(sys.entity_count(), 12);
    }

    #[test]
    fn single_entity_file() {
        let sys = parse_network("flow f\nentity x\n").unwrap();
        assert_eq!(sys.entity_count(), 1);
    }

    #[test]
    fn undeclared_channel_endpoint_reports_its_line() {
        let text = "flow sales\nentity S1 P1\n\nchannel S1 P9\n";
        let err = parse_network(text).unwrap_err();
        assert_eq!(err.line, 4);
        assert!(matches!(
            err.kind,
            FormatErrorKind::Model(ModelError::UndeclaredEntity { ref missing, .. }) if missing == "P9"
        ));
    }

    #[test]
    fn structural_errors_report_lines() {
        let cases = [
            ("entity a\n", 1),
            ("flow f\nentity a\nflow g\nentity a\n", 4),
            ("flow f\nentity a a\n", 2),
            ("flow f\nentity a\nlink a a\n", 3),
            ("flow f\nentity a b\nsplit a b\n", 3),
            ("flow f\nentity a\nsplit a\nflow g\n", 4),
            ("flow f\nentity a\nflow f\nentity b\n", 3),
            ("flow f\nchannel a\n", 2),
            ("flow f\nentity a$\n", 2),
        ];
        for (text, line) in cases {
            let err = parse_network(text).unwrap_err();
            assert_eq!(err.line, line, "{text:?} -> {err}");
        }
    }

    #[test]
    fn serialize_is_canonical() {
        let sys = fixtures::retail_system();
        let text = serialize_network(&sys);
        assert_eq!(parse_network(&text).unwrap(), sys);
        assert!(text.starts_with("flow sales\nentity A1 A2 P1 P2 P3 S1 S2 S3 S4\n"));
        assert!(text.ends_with("\nsplit A1 A1S\nsplit A2 A2S\n"));
        assert_eq!(serialize_network(&parse_network(&text).unwrap()), text);
    }

    #[test]
    fn empty_system_round_trips() {
        let sys = parse_network("").unwrap();
        assert_eq!(serialize_network(&sys), "");
        let sys = parse_network("flow lonely\n").unwrap();
        assert_eq!(parse_network(&serialize_network(&sys)).unwrap(), sys);
    }

    #[test]
    fn stats_labels_render() {
        let t = compute_labels(&fixtures::retail_stats());
        assert_eq!(render_labels(&t), "A1S: {A1S}\nA2S: {A1S,A2S}\nO: {A1S,O}\n");
        let empty = compute_labels(&Network::empty("e").unwrap());
        assert_eq!(render_labels(&empty), "");
    }

    #[test]
    fn sales_p1_and_p2_lines_match() {
        let text = render_labels(&compute_labels(&fixtures::retail_sales()));
        assert_eq!(text.lines().count(), 9);
        let find = |e: &str| {
            text.lines()
                .find(|l| l.starts_with(&format!("{e}:")))
                .unwrap()
                .split_once(':')
                .unwrap()
                .1
                .to_string()
        };
        assert_eq!(find("P1"), find("P2"));
    }

    #[test]
    fn dot_for_retail() {
        let dot = export_dot(&fixtures::retail_system());
        let solid = dot.lines().filter(|l| l.contains("->") && l.contains("style=solid")).count();
        let dashed = dot.lines().filter(|l| l.contains("->") && l.contains("style=dashed")).count();
        assert_eq!((solid, dashed), (9, 2));
        let nodes = dot
            .lines()
            .filter(|l| l.starts_with("  \"") && !l.contains("->"))
            .count();
        assert_eq!(nodes, 12);
        assert!(dot.contains("subgraph cluster_split_0"));
        assert_eq!(dot, export_dot(&fixtures::retail_system()));
    }

    #[test]
    fn lattice_and_completion_rendering() {
        use crate::lattice::{dedekind_macneille, lattice_check};
        use crate::order::condense;
        let p = condense(&fixtures::retail_stats());
        let text = render_lattice_report("stats", &p, &lattice_check(&p));
        assert_eq!(text, "flow stats: not a lattice\njoin-failure {A2S} {O}\n");
        let c = dedekind_macneille(&p).unwrap();
        assert_eq!(
            render_completion(&c),
            "completion: classes=3 cuts=4 void=1\nvoid {A1S,A2S,O}\n"
        );
    }

    #[test]
    fn conformance_rendering() {
        use crate::policy::{parse_policy, verify};
        let spec = parse_policy("flow stats\npermit A1S O\n").unwrap();
        let r = verify(&fixtures::retail_stats(), &spec).unwrap();
        assert_eq!(
            render_conformance("stats", &r),
            "flow stats: does not conform\nextra A1S -> A2S\n"
        );
    }

    #[test]
    fn dot_for_empty_system() {
        let sys = parse_network("").unwrap();
        assert_eq!(export_dot(&sys), "digraph flows {\n}\n");
    }
}

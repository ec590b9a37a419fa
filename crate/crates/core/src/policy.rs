//! Declarative flow policies and conformance checking.
//!
//! A policy lists the flows a network must allow (`permit`, `equiv`) and the
//! pairs that must stay apart (`forbid`). Everything else is denied by
//! default: the network's CanFlow relation must equal the reflexive-transitive
//! closure of the permitted flows, no more and no less.
//!
//! File format, one directive per line, `#` starts a comment:
//!
//! ```text
//! flow <flow_id>
//! permit <src> <dst>
//! equiv <e1> <e2> [<e3> ...]
//! forbid <e1> <e2>
//! ```

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{check_flow_id, EntityId, ModelError, Network};
use crate::order::reachable_from;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown directive `{directive}`")]
    UnknownDirective { line: usize, directive: String },
    #[error("line {line}: {source}")]
    InvalidName { line: usize, source: ModelError },
    #[error("unsatisfiable policy: {a} and {b} are forbidden but the permitted flows connect them")]
    UnsatisfiableSpec { a: String, b: String },
    #[error("policy is for flow `{policy}` but the network is flow `{network}`")]
    FlowMismatch { policy: String, network: String },
    #[error("policy names entity `{0}` which the network does not declare")]
    UnknownEntity(String),
}

/// Only closure mode there is: flows not permitted are forbidden.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ClosureMode {
    #[default]
    DefaultDeny,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicySpec {
    pub flow_id: String,
    pub permits: BTreeSet<(EntityId, EntityId)>,
    pub equivs: Vec<BTreeSet<EntityId>>,
    /// Unordered pairs, stored smaller name first.
    pub forbids: BTreeSet<(EntityId, EntityId)>,
    pub closure_mode: ClosureMode,
}

impl PolicySpec {
    /// Validates that no forbidden pair is connected by the permitted flows.
    pub fn new(
        flow_id: &str,
        permits: BTreeSet<(EntityId, EntityId)>,
        equivs: Vec<BTreeSet<EntityId>>,
        forbids: BTreeSet<(EntityId, EntityId)>,
    ) -> Result<Self, PolicyError> {
        check_flow_id(flow_id).map_err(|source| PolicyError::InvalidName { line: 0, source })?;
        let forbids = forbids
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        let spec = PolicySpec {
            flow_id: flow_id.to_string(),
            permits,
            equivs,
            forbids,
            closure_mode: ClosureMode::DefaultDeny,
        };
        let expected = spec.expected_network(&spec.entities());
        for (a, b) in &spec.forbids {
            let from_a = reachable_from(&expected, a.as_str()).expect("entity is in universe");
            let from_b = reachable_from(&expected, b.as_str()).expect("entity is in universe");
            if a == b || from_a.contains(b) || from_b.contains(a) {
                return Err(PolicyError::UnsatisfiableSpec {
                    a: a.to_string(),
                    b: b.to_string(),
                });
            }
        }
        Ok(spec)
    }

    /// Every entity the policy mentions.
    pub fn entities(&self) -> BTreeSet<EntityId> {
        let mut out = BTreeSet::new();
        for (a, b) in self.permits.iter().chain(&self.forbids) {
            out.insert(a.clone());
            out.insert(b.clone());
        }
        for group in &self.equivs {
            out.extend(group.iter().cloned());
        }
        out
    }

    /// Permits plus both directions of every pair inside each equiv group.
    pub fn required_channels(&self) -> BTreeSet<(EntityId, EntityId)> {
        let mut out = self.permits.clone();
        for group in &self.equivs {
            for a in group {
                for b in group {
                    if a != b {
                        out.insert((a.clone(), b.clone()));
                    }
                }
            }
        }
        out
    }

    /// The network that implements exactly this policy over `universe`.
    fn expected_network(&self, universe: &BTreeSet<EntityId>) -> Network {
        let mut entities = universe.clone();
        entities.extend(self.entities());
        let channels = self
            .required_channels()
            .into_iter()
            .map(|(a, b)| crate::model::Channel::new(a, b))
            .collect();
        Network::from_parts_unchecked(self.flow_id.clone(), entities, channels)
    }
}

fn name(line: usize, s: &str) -> Result<EntityId, PolicyError> {
    EntityId::new(s).map_err(|source| PolicyError::InvalidName { line, source })
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

pub fn parse_policy(text: &str) -> Result<PolicySpec, PolicyError> {
    let mut flow_id: Option<String> = None;
    let mut permits = BTreeSet::new();
    let mut equivs = Vec::new();
    let mut forbids = BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let words: Vec<&str> = strip_comment(raw).split_whitespace().collect();
        let Some((&directive, args)) = words.split_first() else {
            continue;
        };
        let syntax = |message: &str| PolicyError::Syntax {
            line,
            message: message.to_string(),
        };
        if flow_id.is_none() && directive != "flow" {
            return Err(syntax("first directive must be `flow <flow_id>`"));
        }
        match directive {
            "flow" => {
                if flow_id.is_some() {
                    return Err(syntax("`flow` may appear only once"));
                }
                let [id] = args else {
                    return Err(syntax("expected `flow <flow_id>`"));
                };
                check_flow_id(id).map_err(|source| PolicyError::InvalidName { line, source })?;
                flow_id = Some(id.to_string());
            }
            "permit" => {
                let [a, b] = args else {
                    return Err(syntax("expected `permit <src> <dst>`"));
                };
                permits.insert((name(line, a)?, name(line, b)?));
            }
            "equiv" => {
                if args.len() < 2 {
                    return Err(syntax("expected `equiv <e1> <e2> [<e3> ...]`"));
                }
                let group = args
                    .iter()
                    .map(|a| name(line, a))
                    .collect::<Result<BTreeSet<_>, _>>()?;
                equivs.push(group);
            }
            "forbid" => {
                let [a, b] = args else {
                    return Err(syntax("expected `forbid <e1> <e2>`"));
                };
                forbids.insert((name(line, a)?, name(line, b)?));
            }
            other => {
                return Err(PolicyError::UnknownDirective {
                    line,
                    directive: other.to_string(),
                })
            }
        }
    }

    let flow_id = flow_id.ok_or_else(|| PolicyError::Syntax {
        line: text.lines().count().max(1),
        message: "missing `flow <flow_id>`".to_string(),
    })?;
    PolicySpec::new(&flow_id, permits, equivs, forbids)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConformanceReport {
    pub conforms: bool,
    /// `(x, y)` required by the policy's closure but not possible in the network.
    pub missing_flows: Vec<(EntityId, EntityId)>,
    /// Forbidden pairs (smaller name first) connected in some direction.
    pub forbidden_flows: Vec<(EntityId, EntityId)>,
    /// `(x, y)` possible in the network but outside the policy's closure.
    pub extra_flows: Vec<(EntityId, EntityId)>,
}

/// Compares the network's CanFlow with the closure of the policy's permitted
/// flows over the network's entities.
pub fn verify(net: &Network, spec: &PolicySpec) -> Result<ConformanceReport, PolicyError> {
    if spec.flow_id != net.flow_id() {
        return Err(PolicyError::FlowMismatch {
            policy: spec.flow_id.clone(),
            network: net.flow_id().to_string(),
        });
    }
    if let Some(unknown) = spec.entities().into_iter().find(|e| !net.contains(e.as_str())) {
        return Err(PolicyError::UnknownEntity(unknown.to_string()));
    }
    let expected_net = spec.expected_network(net.entities());

    let reach = |n: &Network| -> BTreeMap<EntityId, BTreeSet<EntityId>> {
        n.entities()
            .iter()
            .map(|e| {
                let r = reachable_from(n, e.as_str()).expect("entity is declared");
                (e.clone(), r)
            })
            .collect()
    };
    let actual = reach(net);
    let expected = reach(&expected_net);

    let mut missing_flows = Vec::new();
    let mut extra_flows = Vec::new();
    for x in net.entities() {
        for y in net.entities() {
            if x == y {
                continue;
            }
            let is = actual[x].contains(y);
            let should = expected[x].contains(y);
            if should && !is {
                missing_flows.push((x.clone(), y.clone()));
            } else if is && !should {
                extra_flows.push((x.clone(), y.clone()));
            }
        }
    }
    let forbidden_flows: Vec<(EntityId, EntityId)> = spec
        .forbids
        .iter()
        .filter(|(a, b)| actual[a].contains(b) || actual[b].contains(a))
        .cloned()
        .collect();

    Ok(ConformanceReport {
        conforms: missing_flows.is_empty() && forbidden_flows.is_empty() && extra_flows.is_empty(),
        missing_flows,
        forbidden_flows,
        extra_flows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn id(s: &str) -> EntityId {
        EntityId::new(s).unwrap()
    }

    fn pair(a: &str, b: &str) -> (EntityId, EntityId) {
        (id(a), id(b))
    }

    #[test]
    fn parses_sales_policy() {
        let spec = parse_policy(fixtures::SALES_POLICY).unwrap();
        assert_eq!(spec.flow_id, "sales");
        assert_eq!(spec.permits.len(), 7);
        assert_eq!(spec.equivs.len(), 1);
        assert_eq!(spec.forbids, BTreeSet::from([pair("A1", "A2")]));
        assert_eq!(spec.closure_mode, ClosureMode::DefaultDeny);
    }

    #[test]
    fn header_only_policy_is_empty() {
        let spec = parse_policy("# nothing allowed\nflow f\n").unwrap();
        assert!(spec.permits.is_empty() && spec.equivs.is_empty() && spec.forbids.is_empty());
    }

    #[test]
    fn contradictions_are_unsatisfiable() {
        let err = parse_policy("flow f\npermit X Y\nforbid X Y\n").unwrap_err();
        assert!(matches!(err, PolicyError::UnsatisfiableSpec { .. }));
        // indirect, and in the reverse direction
        let err = parse_policy("flow f\npermit a b\npermit b c\nforbid c a\n").unwrap_err();
        assert!(matches!(err, PolicyError::UnsatisfiableSpec { .. }));
        let err = parse_policy("flow f\nforbid a a\n").unwrap_err();
        assert!(matches!(err, PolicyError::UnsatisfiableSpec { .. }));
    }

    #[test]
    fn syntax_errors_carry_lines() {
        assert_eq!(
            parse_policy("flow f\n\nallow a b\n").unwrap_err(),
            PolicyError::UnknownDirective {
                line: 3,
                directive: "allow".into()
            }
        );
        assert!(matches!(
            parse_policy("permit a b\n").unwrap_err(),
            PolicyError::Syntax { line: 1, .. }
        ));
        assert!(matches!(
            parse_policy("flow f\npermit a\n").unwrap_err(),
            PolicyError::Syntax { line: 2, .. }
        ));
        assert!(matches!(
            parse_policy("flow f\nflow g\n").unwrap_err(),
            PolicyError::Syntax { line: 2, .. }
        ));
        assert!(matches!(
            parse_policy("flow f\nequiv a\n").unwrap_err(),
            PolicyError::Syntax { line: 2, .. }
        ));
        assert!(matches!(parse_policy("").unwrap_err(), PolicyError::Syntax { .. }));
    }

    #[test]
    fn sales_network_conforms() {
        let spec = parse_policy(fixtures::SALES_POLICY).unwrap();
        let r = verify(&fixtures::retail_sales(), &spec).unwrap();
        assert!(r.conforms, "{r:?}");
    }

    #[test]
    fn stats_network_conforms() {
        let spec = parse_policy(fixtures::STATS_POLICY).unwrap();
        assert!(verify(&fixtures::retail_stats(), &spec).unwrap().conforms);
    }

    #[test]
    fn forbidden_channel_is_reported() {
        let spec = parse_policy(fixtures::SALES_POLICY).unwrap();
        let net = fixtures::retail_sales().with_channel(crate::model::Channel::new(id("A1"), id("A2")));
        let r = verify(&net, &spec).unwrap();
        assert!(!r.conforms);
        assert_eq!(r.forbidden_flows, vec![pair("A1", "A2")]);
        assert_eq!(r.extra_flows, vec![pair("A1", "A2")]);
        assert!(r.missing_flows.is_empty());
    }

    #[test]
    fn missing_channel_is_reported() {
        let spec = parse_policy(fixtures::SALES_POLICY).unwrap();
        let net = fixtures::retail_sales()
            .without_channel(&crate::model::Channel::new(id("P3"), id("P2")));
        let r = verify(&net, &spec).unwrap();
        assert!(!r.conforms);
        assert!(r.missing_flows.contains(&pair("S3", "P2")));
        assert!(r.missing_flows.contains(&pair("P3", "A1")));
        assert!(r.forbidden_flows.is_empty() && r.extra_flows.is_empty());
    }

    #[test]
    fn empty_policy_flags_every_flow_as_extra() {
        let spec = parse_policy("flow stats\n").unwrap();
        let r = verify(&fixtures::retail_stats(), &spec).unwrap();
        assert_eq!(r.extra_flows, vec![pair("A1S", "A2S"), pair("A1S", "O")]);
    }

    #[test]
    fn verify_input_errors() {
        let spec = parse_policy(fixtures::SALES_POLICY).unwrap();
        assert!(matches!(
            verify(&fixtures::retail_stats(), &spec).unwrap_err(),
            PolicyError::FlowMismatch { .. }
        ));
        let spec = parse_policy("flow sales\npermit S1 Z9\n").unwrap();
        assert_eq!(
            verify(&fixtures::retail_sales(), &spec).unwrap_err(),
            PolicyError::UnknownEntity("Z9".into())
        );
    }
}

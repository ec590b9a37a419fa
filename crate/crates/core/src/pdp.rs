//! Policy decision point.
//!
//! Labels are the only attributes consulted: a request to move data from `x`
//! to `y` is granted iff `Label(x) ⊆ Label(y)`. The label tables play the role
//! of the policy information point; the raw channel graph is never read here.
//! Every failure is a `Deny` with a diagnostic reason.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Mutex;

use thiserror::Error;

use crate::model::FlowSystem;
use crate::order::{compute_labels, Label, LabelTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Grant,
    Deny,
}

impl Verdict {
    pub fn code(self) -> &'static str {
        match self {
            Verdict::Grant => "GRANT",
            Verdict::Deny => "DENY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    LabelIncluded,
    LabelNotIncluded,
    UnknownEntity,
    UnknownFlow,
    /// Source and destination live in different flows.
    CrossFlow,
    /// The flow's label table no longer matches its network.
    StaleTable,
}

impl Reason {
    pub fn code(self) -> &'static str {
        match self {
            Reason::LabelIncluded => "LABEL_INCLUDED",
            Reason::LabelNotIncluded => "LABEL_NOT_INCLUDED",
            Reason::UnknownEntity => "UNKNOWN_ENTITY",
            Reason::UnknownFlow => "UNKNOWN_FLOW",
            Reason::CrossFlow => "CROSS_FLOW",
            Reason::StaleTable => "STALE_TABLE",
        }
    }
}

/// Outcome of a request. The verdict is derived from the reason, so
/// `Grant` occurs exactly with `LabelIncluded`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decision {
    reason: Reason,
}

impl Decision {
    pub fn from_reason(reason: Reason) -> Self {
        Decision { reason }
    }

    pub fn verdict(&self) -> Verdict {
        if self.reason == Reason::LabelIncluded {
            Verdict::Grant
        } else {
            Verdict::Deny
        }
    }

    pub fn reason(&self) -> Reason {
        self.reason
    }

    pub fn is_grant(&self) -> bool {
        self.verdict() == Verdict::Grant
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "verdict={} reason={}",
            self.verdict().code(),
            self.reason.code()
        )
    }
}

/// A request for an operation that moves data from `src` to `dst`. Names are
/// unchecked strings: anything unknown is denied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub flow_id: String,
    pub src: String,
    pub dst: String,
    pub op_tag: String,
}

impl Request {
    pub fn new(flow_id: &str, src: &str, dst: &str) -> Self {
        Request {
            flow_id: flow_id.to_string(),
            src: src.to_string(),
            dst: dst.to_string(),
            op_tag: String::new(),
        }
    }

    pub fn with_op(mut self, op_tag: &str) -> Self {
        self.op_tag = op_tag.to_string();
        self
    }
}

/// Grants iff both entities are labelled and `Label(x) ⊆ Label(y)`.
pub fn decide(table: &LabelTable, x: &str, y: &str) -> Decision {
    match (table.get(x), table.get(y)) {
        (Some(lx), Some(ly)) if lx.is_subset_of(ly) => Decision::from_reason(Reason::LabelIncluded),
        (Some(_), Some(_)) => Decision::from_reason(Reason::LabelNotIncluded),
        _ => Decision::from_reason(Reason::UnknownEntity),
    }
}

/// Decides a request against a multi-flow system. Cross-flow transfers are
/// always denied: the only link between flows is the trusted component,
/// which sits outside the decision function.
pub fn decide_system(
    sys: &FlowSystem,
    tables: &BTreeMap<String, LabelTable>,
    req: &Request,
) -> Decision {
    let deny = Decision::from_reason;
    let Some(net) = sys.network(&req.flow_id) else {
        return deny(Reason::UnknownFlow);
    };
    let Some(table) = tables.get(&req.flow_id) else {
        return deny(Reason::UnknownFlow);
    };
    for name in [&req.src, &req.dst] {
        if !net.contains(name) {
            return if sys.flow_of(name).is_some() {
                deny(Reason::CrossFlow)
            } else {
                deny(Reason::UnknownEntity)
            };
        }
    }
    if !table.covers(net) {
        return deny(Reason::StaleTable);
    }
    decide(table, &req.src, &req.dst)
}

/// One decision with the labels it was based on, captured at decision time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditRecord {
    pub sequence_no: u64,
    pub request: Request,
    pub decision: Decision,
    pub label_src: Option<Label>,
    pub label_dst: Option<Label>,
}

impl fmt::Display for AuditRecord {
    /// `seq=<n> flow=<id> src=<e> dst=<e> verdict=<GRANT|DENY> reason=<code>`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seq={} flow={} src={} dst={} {}",
            self.sequence_no, self.request.flow_id, self.request.src, self.request.dst, self.decision
        )
    }
}

/// A decision point bound to one flow system, with an append-only audit log.
/// Safe to share across threads; sequence numbers are assigned under the log
/// lock, so they are unique and increase in log order.
#[derive(Debug)]
pub struct PdpSession {
    system: FlowSystem,
    tables: BTreeMap<String, LabelTable>,
    log: Mutex<Vec<AuditRecord>>,
}

impl PdpSession {
    /// Computes a label table for every flow of `system`.
    pub fn new(system: FlowSystem) -> Self {
        let tables = system
            .networks()
            .iter()
            .map(|n| (n.flow_id().to_string(), compute_labels(n)))
            .collect();
        Self::with_tables(system, tables)
    }

    pub fn with_tables(system: FlowSystem, tables: BTreeMap<String, LabelTable>) -> Self {
        PdpSession {
            system,
            tables,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn system(&self) -> &FlowSystem {
        &self.system
    }

    pub fn tables(&self) -> &BTreeMap<String, LabelTable> {
        &self.tables
    }

    pub fn decide(&self, req: &Request) -> Decision {
        decide_system(&self.system, &self.tables, req)
    }

    pub fn evaluate_and_log(&self, req: Request) -> (Decision, AuditRecord) {
        let decision = self.decide(&req);
        let table = self.tables.get(&req.flow_id);
        let label_src = table.and_then(|t| t.get(&req.src)).cloned();
        let label_dst = table.and_then(|t| t.get(&req.dst)).cloned();
        let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
        let record = AuditRecord {
            sequence_no: log.len() as u64 + 1,
            request: req,
            decision,
            label_src,
            label_dst,
        };
        log.push(record.clone());
        (decision, record)
    }

    pub fn audit_log(&self) -> Vec<AuditRecord> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AliasError {
    #[error("alias `{0}` already registered")]
    DuplicateAlias(String),
    #[error("unknown alias `{0}`")]
    UnknownAlias(String),
    #[error("label {label} already has alias `{existing}`")]
    LabelAlreadyAliased { label: String, existing: String },
    #[error("invalid alias name `{0}`")]
    InvalidAliasName(String),
}

/// Short names for long labels, one name per label and one label per name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasStore {
    by_name: BTreeMap<String, Label>,
    by_label: BTreeMap<Label, String>,
}

impl AliasStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, alias_name: &str, label: Label) -> Result<(), AliasError> {
        if alias_name.is_empty() || alias_name.chars().any(char::is_whitespace) {
            return Err(AliasError::InvalidAliasName(alias_name.to_string()));
        }
        if self.by_name.contains_key(alias_name) {
            return Err(AliasError::DuplicateAlias(alias_name.to_string()));
        }
        if let Some(existing) = self.by_label.get(&label) {
            return Err(AliasError::LabelAlreadyAliased {
                label: label.to_string(),
                existing: existing.clone(),
            });
        }
        self.by_label.insert(label.clone(), alias_name.to_string());
        self.by_name.insert(alias_name.to_string(), label);
        Ok(())
    }

    pub fn resolve(&self, alias_name: &str) -> Result<&Label, AliasError> {
        self.by_name
            .get(alias_name)
            .ok_or_else(|| AliasError::UnknownAlias(alias_name.to_string()))
    }

    pub fn alias_of(&self, label: &Label) -> Option<&str> {
        self.by_label.get(label).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }
}

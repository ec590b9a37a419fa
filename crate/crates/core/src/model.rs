//! Entities, channels, and the flows they form.
//!
//! A [`Network`] is one data flow: a set of named entities and the directed
//! channels that let data move between them. A [`FlowSystem`] groups several
//! networks whose entity sets are disjoint, plus optional split groups that
//! record which entities are parts of the same trusted component. Split groups
//! are metadata only and never create channels.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("empty entity name")]
    EmptyEntityName,
    #[error("invalid entity name `{0}`: only [A-Za-z0-9_-] allowed")]
    InvalidEntityName(String),
    #[error("invalid flow id `{0}`: only [A-Za-z0-9_-] allowed")]
    InvalidFlowId(String),
    #[error("entity `{0}` declared more than once")]
    DuplicateEntity(String),
    #[error("channel {src} -> {dst} uses undeclared entity `{missing}`")]
    UndeclaredEntity {
        src: String,
        dst: String,
        missing: String,
    },
    #[error("flow id `{0}` used by more than one network")]
    FlowIdCollision(String),
    #[error("entity `{entity}` appears in flows `{first}` and `{second}`")]
    EntityInMultipleFlows {
        entity: String,
        first: String,
        second: String,
    },
    #[error("split group needs at least two members, got {0}")]
    SplitGroupTooSmall(usize),
    #[error("split group member `{0}` is not an entity of any flow")]
    SplitMemberUnknown(String),
    #[error("split group members `{0}` and `{1}` belong to the same flow")]
    SplitMembersShareFlow(String, String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("unknown flow `{0}`")]
    UnknownFlow(String),
}

fn is_valid_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// Name of a communicating entity. Case-sensitive, drawn from `[A-Za-z0-9_-]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(name: impl Into<String>) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::EmptyEntityName);
        }
        if !is_valid_name(&name) {
            return Err(ModelError::InvalidEntityName(name));
        }
        Ok(EntityId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for EntityId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for EntityId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for EntityId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityId::new(s)
    }
}

/// A direct, permitted data transfer from `src` to `dst`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Channel {
    pub src: EntityId,
    pub dst: EntityId,
}

impl Channel {
    pub fn new(src: EntityId, dst: EntityId) -> Self {
        Channel { src, dst }
    }

    pub fn is_self_loop(&self) -> bool {
        self.src == self.dst
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.src, self.dst)
    }
}

/// One data flow. Immutable once built; all sets are kept sorted so equality
/// and serialization are independent of input order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Network {
    flow_id: String,
    entities: BTreeSet<EntityId>,
    channels: BTreeSet<Channel>,
}

pub(crate) fn check_flow_id(flow_id: &str) -> Result<(), ModelError> {
    if is_valid_name(flow_id) {
        Ok(())
    } else {
        Err(ModelError::InvalidFlowId(flow_id.to_string()))
    }
}

impl Network {
    /// Validates and builds a network. Duplicate channels collapse; self
    /// channels are kept but have no effect on reachability.
    pub fn build<E, C>(flow_id: &str, entities: E, channels: C) -> Result<Self, ModelError>
    where
        E: IntoIterator,
        E::Item: AsRef<str>,
        C: IntoIterator,
        C::Item: ChannelSpec,
    {
        check_flow_id(flow_id)?;
        let mut ents = BTreeSet::new();
        for e in entities {
            let id = EntityId::new(e.as_ref())?;
            if !ents.insert(id.clone()) {
                return Err(ModelError::DuplicateEntity(id.0));
            }
        }
        let mut chans = BTreeSet::new();
        for c in channels {
            let (src, dst) = c.endpoints();
            for end in [src, dst] {
                if !ents.contains(end) {
                    return Err(ModelError::UndeclaredEntity {
                        src: src.to_string(),
                        dst: dst.to_string(),
                        missing: end.to_string(),
                    });
                }
            }
            // Both endpoints are declared, hence valid names.
            chans.insert(Channel::new(
                EntityId(src.to_string()),
                EntityId(dst.to_string()),
            ));
        }
        Ok(Network {
            flow_id: flow_id.to_string(),
            entities: ents,
            channels: chans,
        })
    }

    /// A network with no entities.
    pub fn empty(flow_id: &str) -> Result<Self, ModelError> {
        check_flow_id(flow_id)?;
        Ok(Network {
            flow_id: flow_id.to_string(),
            entities: BTreeSet::new(),
            channels: BTreeSet::new(),
        })
    }

    pub(crate) fn from_parts_unchecked(
        flow_id: String,
        entities: BTreeSet<EntityId>,
        channels: BTreeSet<Channel>,
    ) -> Self {
        debug_assert!(channels
            .iter()
            .all(|c| entities.contains(&c.src) && entities.contains(&c.dst)));
        Network {
            flow_id,
            entities,
            channels,
        }
    }

    pub fn flow_id(&self) -> &str {
        &self.flow_id
    }

    pub fn entities(&self) -> &BTreeSet<EntityId> {
        &self.entities
    }

    pub fn channels(&self) -> &BTreeSet<Channel> {
        &self.channels
    }

    pub fn contains(&self, entity: &str) -> bool {
        self.entities.contains(entity)
    }

    pub fn has_channel(&self, src: &str, dst: &str) -> bool {
        self.channels
            .iter()
            .any(|c| c.src.as_str() == src && c.dst.as_str() == dst)
    }

    pub fn entity(&self, name: &str) -> Result<&EntityId, ModelError> {
        self.entities
            .get(name)
            .ok_or_else(|| ModelError::UnknownEntity(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub(crate) fn with_channel(&self, channel: Channel) -> Network {
        let mut next = self.clone();
        next.channels.insert(channel);
        next
    }

    pub(crate) fn without_channel(&self, channel: &Channel) -> Network {
        let mut next = self.clone();
        next.channels.remove(channel);
        next
    }
}

/// Anything that names a channel's two endpoints.
pub trait ChannelSpec {
    fn endpoints(&self) -> (&str, &str);
}

impl<A: AsRef<str>, B: AsRef<str>> ChannelSpec for (A, B) {
    fn endpoints(&self) -> (&str, &str) {
        (self.0.as_ref(), self.1.as_ref())
    }
}

impl ChannelSpec for Channel {
    fn endpoints(&self) -> (&str, &str) {
        (self.src.as_str(), self.dst.as_str())
    }
}

impl ChannelSpec for &Channel {
    fn endpoints(&self) -> (&str, &str) {
        (self.src.as_str(), self.dst.as_str())
    }
}

/// Several disjoint flows plus split-entity metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSystem {
    networks: Vec<Network>,
    split_groups: BTreeSet<BTreeSet<EntityId>>,
}

impl FlowSystem {
    pub fn build<G, S>(networks: Vec<Network>, split_groups: G) -> Result<Self, ModelError>
    where
        G: IntoIterator<Item = S>,
        S: IntoIterator,
        S::Item: AsRef<str>,
    {
        let mut owner: BTreeMap<&EntityId, &str> = BTreeMap::new();
        let mut flow_ids = BTreeSet::new();
        for net in &networks {
            if !flow_ids.insert(net.flow_id()) {
                return Err(ModelError::FlowIdCollision(net.flow_id.clone()));
            }
            for e in net.entities() {
                if let Some(first) = owner.insert(e, net.flow_id()) {
                    return Err(ModelError::EntityInMultipleFlows {
                        entity: e.to_string(),
                        first: first.to_string(),
                        second: net.flow_id.clone(),
                    });
                }
            }
        }

        let mut sys = FlowSystem {
            networks,
            split_groups: BTreeSet::new(),
        };
        for group in split_groups {
            sys.add_split_group(group)?;
        }
        Ok(sys)
    }

    /// Validates one split group against the flows and records it.
    pub(crate) fn add_split_group<S>(&mut self, group: S) -> Result<(), ModelError>
    where
        S: IntoIterator,
        S::Item: AsRef<str>,
    {
        let mut members = BTreeSet::new();
        let mut seen_flows: BTreeMap<&str, EntityId> = BTreeMap::new();
        for name in group {
            let name = name.as_ref();
            let net = self
                .flow_of(name)
                .ok_or_else(|| ModelError::SplitMemberUnknown(name.to_string()))?;
            let id = net.entity(name)?.clone();
            if !members.insert(id.clone()) {
                continue;
            }
            if let Some(other) = seen_flows.insert(net.flow_id(), id.clone()) {
                return Err(ModelError::SplitMembersShareFlow(
                    other.to_string(),
                    id.to_string(),
                ));
            }
        }
        if members.len() < 2 {
            return Err(ModelError::SplitGroupTooSmall(members.len()));
        }
        self.split_groups.insert(members);
        Ok(())
    }

    pub fn networks(&self) -> &[Network] {
        &self.networks
    }

    pub fn split_groups(&self) -> &BTreeSet<BTreeSet<EntityId>> {
        &self.split_groups
    }

    pub fn network(&self, flow_id: &str) -> Option<&Network> {
        self.networks.iter().find(|n| n.flow_id() == flow_id)
    }

    /// The flow an entity belongs to, if any.
    pub fn flow_of(&self, entity: &str) -> Option<&Network> {
        self.networks.iter().find(|n| n.contains(entity))
    }

    pub fn entity_count(&self) -> usize {
        self.networks.iter().map(Network::len).sum()
    }

    /// The system with the flow of the same id replaced by `net`.
    pub fn with_network(&self, net: Network) -> Result<FlowSystem, ModelError> {
        if self.network(net.flow_id()).is_none() {
            return Err(ModelError::UnknownFlow(net.flow_id.clone()));
        }
        let networks = self
            .networks
            .iter()
            .map(|n| if n.flow_id == net.flow_id { net.clone() } else { n.clone() })
            .collect();
        FlowSystem::build(networks, self.split_groups.iter().cloned())
    }

    /// The same system with split metadata dropped.
    pub fn without_splits(&self) -> FlowSystem {
        FlowSystem {
            networks: self.networks.clone(),
            split_groups: BTreeSet::new(),
        }
    }
}

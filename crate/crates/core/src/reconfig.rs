//! Channel edits with label maintenance.
//!
//! Adding a channel `x → y` can only grow labels: exactly the entities
//! reachable from `y` gain `Label(x)`. That update is applied in place.
//! Removing a channel can shrink labels far from the edit, so it recomputes
//! the table from scratch.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{Channel, EntityId, ModelError, Network};
use crate::order::{compute_labels, reachable_from, LabelTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReconfigError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no channel {0} -> {1}")]
    UnknownChannel(String, String),
}

/// A network together with a label table kept in sync across edits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledNetwork {
    network: Network,
    labels: LabelTable,
}

impl LabeledNetwork {
    pub fn new(network: Network) -> Self {
        let labels = compute_labels(&network);
        LabeledNetwork { network, labels }
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn labels(&self) -> &LabelTable {
        &self.labels
    }

    pub fn into_parts(self) -> (Network, LabelTable) {
        (self.network, self.labels)
    }

    /// Adds `x → y` and propagates `Label(x)` forward from `y`.
    /// Returns `false` when the channel was already present.
    pub fn add_channel(&mut self, x: &str, y: &str) -> Result<bool, ReconfigError> {
        let src = self.network.entity(x)?.clone();
        let dst = self.network.entity(y)?.clone();
        let channel = Channel::new(src.clone(), dst.clone());
        if self.network.channels().contains(&channel) {
            return Ok(false);
        }
        self.network = self.network.with_channel(channel);
        if src == dst {
            return Ok(true);
        }
        let incoming = self.labels.get(x).expect("table covers network").clone();
        // Paths through the new edge end in entities the old graph reached from y.
        let downstream: BTreeSet<EntityId> = reachable_from(&self.network, y)?;
        for z in &downstream {
            self.labels
                .get_mut(z.as_str())
                .expect("table covers network")
                .absorb(&incoming);
        }
        Ok(true)
    }

    /// Removes `x → y` and recomputes every label.
    pub fn remove_channel(&mut self, x: &str, y: &str) -> Result<(), ReconfigError> {
        let channel = self
            .network
            .channels()
            .iter()
            .find(|c| c.src.as_str() == x && c.dst.as_str() == y)
            .cloned()
            .ok_or_else(|| ReconfigError::UnknownChannel(x.to_string(), y.to_string()))?;
        self.network = self.network.without_channel(&channel);
        self.labels = compute_labels(&self.network);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn label(ln: &LabeledNetwork, e: &str) -> String {
        ln.labels().get(e).unwrap().to_string()
    }

    fn assert_fresh(ln: &LabeledNetwork) {
        assert_eq!(ln.labels(), &compute_labels(ln.network()));
    }

    #[test]
    fn add_a1_to_a2() {
        let mut ln = LabeledNetwork::new(fixtures::retail_sales());
        assert!(ln.add_channel("A1", "A2").unwrap());
        assert_eq!(label(&ln, "A2"), "{A1,A2,P1,P2,P3,S1,S2,S3,S4}");
        assert_fresh(&ln);
    }

    #[test]
    fn add_existing_channel_is_a_no_op() {
        let mut ln = LabeledNetwork::new(fixtures::retail_sales());
        let before = ln.clone();
        assert!(!ln.add_channel("S1", "P1").unwrap());
        assert_eq!(ln, before);
    }

    #[test]
    fn add_back_edge_grows_class() {
        let mut ln = LabeledNetwork::new(fixtures::retail_sales());
        ln.add_channel("A2", "P1").unwrap();
        let l = label(&ln, "P1");
        assert_eq!(l, "{A2,P1,P2,P3,S1,S2,S3,S4}");
        assert_eq!(label(&ln, "P2"), l);
        assert_eq!(label(&ln, "A2"), l);
        assert_fresh(&ln);
    }

    #[test]
    fn remove_p3_to_p2() {
        let mut ln = LabeledNetwork::new(fixtures::retail_sales());
        ln.remove_channel("P3", "P2").unwrap();
        assert_eq!(label(&ln, "P1"), "{P1,P2,S1,S2}");
        assert_eq!(label(&ln, "P2"), "{P1,P2,S1,S2}");
    }

    #[test]
    fn remove_p1_to_p2_splits_the_class() {
        let mut ln = LabeledNetwork::new(fixtures::retail_sales());
        ln.remove_channel("P1", "P2").unwrap();
        assert_eq!(label(&ln, "P2"), "{P2,P3,S2,S3,S4}");
        assert_eq!(label(&ln, "P1"), "{P1,P2,P3,S1,S2,S3,S4}");
    }

    #[test]
    fn remove_then_readd_restores_labels() {
        let original = LabeledNetwork::new(fixtures::retail_sales());
        for ch in original.network().channels().clone() {
            let mut ln = original.clone();
            ln.remove_channel(ch.src.as_str(), ch.dst.as_str()).unwrap();
            ln.add_channel(ch.src.as_str(), ch.dst.as_str()).unwrap();
            assert_eq!(ln, original, "round trip on {ch}");
        }
    }

    #[test]
    fn edit_errors() {
        let mut ln = LabeledNetwork::new(fixtures::retail_sales());
        assert_eq!(
            ln.remove_channel("A1", "A2").unwrap_err(),
            ReconfigError::UnknownChannel("A1".into(), "A2".into())
        );
        assert!(matches!(
            ln.add_channel("A1", "ZZ").unwrap_err(),
            ReconfigError::Model(ModelError::UnknownEntity(_))
        ));
    }

    #[test]
    fn self_channel_changes_no_label() {
        let mut ln = LabeledNetwork::new(fixtures::retail_sales());
        let before = ln.labels().clone();
        assert!(ln.add_channel("A1", "A1").unwrap());
        assert_eq!(ln.labels(), &before);
    }
}

//! Partial-order data-flow security.
//!
//! Channel configurations are condensed into a partial order of equivalence
//! classes; every entity gets a provenance label (the set of entities whose
//! data can reach it); transfer requests are granted iff the source label is
//! included in the destination label. The [`lattice`] module measures how far
//! a flow is from being a lattice and what completing it would add.

pub mod fixtures;
pub mod format;
pub mod lattice;
pub mod model;
pub mod order;
pub mod pdp;
pub mod policy;
pub mod reconfig;

pub use model::{Channel, EntityId, FlowSystem, ModelError, Network};
pub use order::{
    can_flow, compute_labels, condense, simulate_propagation, ClassId, EquivClass, Label,
    LabelTable, Poset,
};

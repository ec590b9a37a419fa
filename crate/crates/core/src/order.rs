//! CanFlow, condensation into a partial order of equivalence classes, and
//! provenance labels.
//!
//! `can_flow(x, y)` holds when data leaving `x` can reach `y` along channels,
//! directly or indirectly (and always when `x == y`). Mutually reachable
//! entities collapse into one [`EquivClass`]; the classes under the induced
//! order form a [`Poset`]. Each entity's [`Label`] is the set of entities that
//! can flow to it, so `Label(x) ⊆ Label(y)` exactly when `can_flow(x, y)`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::fmt;

use crate::model::{EntityId, ModelError, Network};

/// Position of a class in its poset. Class ids form a linear extension of the
/// order: `a ≤ b` implies `a.0 <= b.0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub usize);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivClass {
    pub id: ClassId,
    pub members: BTreeSet<EntityId>,
}

impl EquivClass {
    /// Lexicographically smallest member; used as the class's sort key.
    pub fn key(&self) -> &EntityId {
        self.members.iter().next().expect("classes are nonempty")
    }
}

impl fmt::Display for EquivClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_set(f, self.members.iter())
    }
}

/// Renders `{a,b,c}`.
pub(crate) fn write_set<'a, I, T>(f: &mut fmt::Formatter<'_>, items: I) -> fmt::Result
where
    I: IntoIterator<Item = &'a T>,
    T: fmt::Display + 'a,
{
    f.write_str("{")?;
    for (i, item) in items.into_iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{item}")?;
    }
    f.write_str("}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PosetViolation {
    NotReflexive(ClassId),
    NotTransitive(ClassId, ClassId, ClassId),
    NotAntisymmetric(ClassId, ClassId),
}

impl fmt::Display for PosetViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosetViolation::NotReflexive(a) => write!(f, "{a} is not ≤ itself"),
            PosetViolation::NotTransitive(a, b, c) => {
                write!(f, "{a} ≤ {b} ≤ {c} but not {a} ≤ {c}")
            }
            PosetViolation::NotAntisymmetric(a, b) => write!(f, "{a} ≤ {b} ≤ {a} with {a} ≠ {b}"),
        }
    }
}

/// The partial order of equivalence classes of one network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poset {
    classes: Vec<EquivClass>,
    // leq[a][b] is true iff class a ≤ class b
    leq: Vec<Vec<bool>>,
    // direct class-level edges induced by channels between different classes
    edges: BTreeSet<(ClassId, ClassId)>,
    class_of: BTreeMap<EntityId, ClassId>,
}

impl Poset {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[EquivClass] {
        &self.classes
    }

    pub fn class(&self, id: ClassId) -> &EquivClass {
        &self.classes[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ClassId> {
        (0..self.classes.len()).map(ClassId)
    }

    pub fn class_of(&self, entity: &str) -> Option<ClassId> {
        self.class_of.get(entity).copied()
    }

    pub fn leq(&self, a: ClassId, b: ClassId) -> bool {
        self.leq[a.0][b.0]
    }

    pub fn lt(&self, a: ClassId, b: ClassId) -> bool {
        a != b && self.leq(a, b)
    }

    /// Class-level edges induced by the channels, excluding intra-class ones.
    pub fn edges(&self) -> &BTreeSet<(ClassId, ClassId)> {
        &self.edges
    }

    /// All `(a, b)` with `a ≤ b`, reflexive pairs included.
    pub fn order_pairs(&self) -> Vec<(ClassId, ClassId)> {
        let mut out = Vec::new();
        for a in self.ids() {
            for b in self.ids() {
                if self.leq(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn is_minimal(&self, c: ClassId) -> bool {
        self.ids().all(|o| !self.lt(o, c))
    }

    pub fn is_maximal(&self, c: ClassId) -> bool {
        self.ids().all(|o| !self.lt(c, o))
    }

    /// Checks reflexivity, transitivity and antisymmetry of the stored order,
    /// and that class ids are a linear extension (so the strict part is
    /// acyclic).
    pub fn check_invariants(&self) -> Result<(), PosetViolation> {
        let n = self.len();
        for a in 0..n {
            if !self.leq[a][a] {
                return Err(PosetViolation::NotReflexive(ClassId(a)));
            }
        }
        for a in 0..n {
            for b in 0..n {
                if a != b && self.leq[a][b] && self.leq[b][a] {
                    return Err(PosetViolation::NotAntisymmetric(ClassId(a), ClassId(b)));
                }
                if self.leq[a][b] && b < a {
                    // a ≤ b with b before a in the linear extension means a cycle
                    return Err(PosetViolation::NotAntisymmetric(ClassId(a), ClassId(b)));
                }
                if !self.leq[a][b] {
                    continue;
                }
                for c in 0..n {
                    if self.leq[b][c] && !self.leq[a][c] {
                        return Err(PosetViolation::NotTransitive(
                            ClassId(a),
                            ClassId(b),
                            ClassId(c),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Dense view of a network: entities indexed in sorted order.
struct Indexed<'a> {
    names: Vec<&'a EntityId>,
    index: BTreeMap<&'a str, usize>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl<'a> Indexed<'a> {
    fn new(net: &'a Network) -> Self {
        let names: Vec<&EntityId> = net.entities().iter().collect();
        let index: BTreeMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_str(), i))
            .collect();
        let mut succ = vec![Vec::new(); names.len()];
        let mut pred = vec![Vec::new(); names.len()];
        for c in net.channels() {
            if c.is_self_loop() {
                continue;
            }
            let (s, d) = (index[c.src.as_str()], index[c.dst.as_str()]);
            succ[s].push(d);
            pred[d].push(s);
        }
        Indexed {
            names,
            index,
            succ,
            pred,
        }
    }

    fn idx(&self, name: &str) -> Result<usize, ModelError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownEntity(name.to_string()))
    }

    fn reach_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.names.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.succ[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Kosaraju's algorithm with explicit stacks. Returns the component of
    /// every node and the component count.
    fn components(&self) -> (Vec<usize>, usize) {
        let n = self.names.len();
        let mut visited = vec![false; n];
        let mut finish = Vec::with_capacity(n);
        for root in 0..n {
            if visited[root] {
                continue;
            }
            visited[root] = true;
            let mut stack = vec![(root, 0usize)];
            while let Some((u, next)) = stack.last_mut() {
                if let Some(&v) = self.succ[*u].get(*next) {
                    *next += 1;
                    if !visited[v] {
                        visited[v] = true;
                        stack.push((v, 0));
                    }
                } else {
                    finish.push(*u);
                    stack.pop();
                }
            }
        }

        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        for &root in finish.iter().rev() {
            if comp[root] != usize::MAX {
                continue;
            }
            comp[root] = count;
            let mut stack = vec![root];
            while let Some(u) = stack.pop() {
                for &v in &self.pred[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }
}

/// True iff `y` is reachable from `x` along channels, or `x == y`.
pub fn can_flow(net: &Network, x: &str, y: &str) -> Result<bool, ModelError> {
    let ix = Indexed::new(net);
    let (xi, yi) = (ix.idx(x)?, ix.idx(y)?);
    Ok(ix.reach_from(xi)[yi])
}

/// Every entity `y` with `can_flow(net, x, y)`.
pub fn reachable_from(net: &Network, x: &str) -> Result<BTreeSet<EntityId>, ModelError> {
    let ix = Indexed::new(net);
    let seen = ix.reach_from(ix.idx(x)?);
    Ok(ix
        .names
        .iter()
        .zip(seen)
        .filter(|(_, s)| *s)
        .map(|(e, _)| (*e).clone())
        .collect())
}

/// Collapses mutually reachable entities into classes and orders the classes
/// by reachability. Class ids follow a topological order of the condensation,
/// ties broken by smallest member name.
pub fn condense(net: &Network) -> Poset {
    let ix = Indexed::new(net);
    let (comp, count) = ix.components();

    let mut members: Vec<BTreeSet<EntityId>> = vec![BTreeSet::new(); count];
    for (i, &c) in comp.iter().enumerate() {
        members[c].insert(ix.names[i].clone());
    }
    let mut raw_edges = BTreeSet::new();
    for (u, succ) in ix.succ.iter().enumerate() {
        for &v in succ {
            if comp[u] != comp[v] {
                raw_edges.insert((comp[u], comp[v]));
            }
        }
    }

    // Kahn's algorithm, picking the ready class with the smallest key.
    let mut indegree = vec![0usize; count];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); count];
    for &(a, b) in &raw_edges {
        indegree[b] += 1;
        out[a].push(b);
    }
    let key = |c: usize| members[c].iter().next().cloned();
    let mut ready: BinaryHeap<Reverse<(Option<EntityId>, usize)>> = (0..count)
        .filter(|&c| indegree[c] == 0)
        .map(|c| Reverse((key(c), c)))
        .collect();
    let mut position = vec![0usize; count];
    let mut next = 0;
    while let Some(Reverse((_, c))) = ready.pop() {
        position[c] = next;
        next += 1;
        for &d in &out[c] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.push(Reverse((key(d), d)));
            }
        }
    }
    debug_assert_eq!(next, count, "condensation must be acyclic");

    let mut classes: Vec<EquivClass> = Vec::with_capacity(count);
    let mut by_pos: Vec<usize> = vec![0; count];
    for c in 0..count {
        by_pos[position[c]] = c;
    }
    for (pos, &c) in by_pos.iter().enumerate() {
        classes.push(EquivClass {
            id: ClassId(pos),
            members: std::mem::take(&mut members[c]),
        });
    }
    let edges: BTreeSet<(ClassId, ClassId)> = raw_edges
        .iter()
        .map(|&(a, b)| (ClassId(position[a]), ClassId(position[b])))
        .collect();

    // Down-sets in topological order.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); count];
    for &(a, b) in &edges {
        preds[b.0].push(a.0);
    }
    let mut leq = vec![vec![false; count]; count];
    for b in 0..count {
        leq[b][b] = true;
        for &a in &preds[b] {
            for x in 0..=a {
                if leq[x][a] {
                    leq[x][b] = true;
                }
            }
        }
    }

    let class_of = comp
        .iter()
        .enumerate()
        .map(|(i, &c)| (ix.names[i].clone(), ClassId(position[c])))
        .collect();

    Poset {
        classes,
        leq,
        edges,
        class_of,
    }
}

/// Provenance label: the entities whose data can reach the labelled entity.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(BTreeSet<EntityId>);

impl Label {
    pub fn new(provenance: BTreeSet<EntityId>) -> Self {
        Label(provenance)
    }

    pub fn is_subset_of(&self, other: &Label) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn contains(&self, entity: &str) -> bool {
        self.0.contains(entity)
    }

    pub fn provenance(&self) -> &BTreeSet<EntityId> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn absorb(&mut self, other: &Label) -> bool {
        let before = self.0.len();
        self.0.extend(other.0.iter().cloned());
        self.0.len() != before
    }
}

impl FromIterator<EntityId> for Label {
    fn from_iter<T: IntoIterator<Item = EntityId>>(iter: T) -> Self {
        Label(iter.into_iter().collect())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_set(f, self.0.iter())
    }
}

/// The label of every entity of one flow; the policy information point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTable {
    flow_id: String,
    labels: BTreeMap<EntityId, Label>,
}

impl LabelTable {
    pub fn new(flow_id: impl Into<String>, labels: BTreeMap<EntityId, Label>) -> Self {
        LabelTable {
            flow_id: flow_id.into(),
            labels,
        }
    }

    pub fn flow_id(&self) -> &str {
        &self.flow_id
    }

    pub fn get(&self, entity: &str) -> Option<&Label> {
        self.labels.get(entity)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EntityId, &Label)> {
        self.labels.iter()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// True when the table labels exactly the entities of `net`.
    pub fn covers(&self, net: &Network) -> bool {
        self.flow_id == net.flow_id()
            && self.labels.len() == net.len()
            && self.labels.keys().zip(net.entities()).all(|(a, b)| a == b)
    }

    pub(crate) fn get_mut(&mut self, entity: &str) -> Option<&mut Label> {
        self.labels.get_mut(entity)
    }
}

/// Labels every entity bottom-up over the condensation: a class's label is
/// its own members plus the labels of the classes directly below it.
pub fn compute_labels(net: &Network) -> LabelTable {
    let poset = condense(net);
    labels_from_poset(net.flow_id(), &poset)
}

pub(crate) fn labels_from_poset(flow_id: &str, poset: &Poset) -> LabelTable {
    let mut preds: Vec<Vec<ClassId>> = vec![Vec::new(); poset.len()];
    for &(a, b) in poset.edges() {
        preds[b.0].push(a);
    }
    // Ids are topological, so every predecessor is labelled before its successors.
    let mut class_labels: Vec<Label> = Vec::with_capacity(poset.len());
    for class in poset.classes() {
        let mut label: Label = class.members.iter().cloned().collect();
        for p in &preds[class.id.0] {
            label.absorb(&class_labels[p.0]);
        }
        class_labels.push(label);
    }
    let labels = poset
        .classes()
        .iter()
        .flat_map(|c| {
            let label = &class_labels[c.id.0];
            c.members.iter().map(move |e| (e.clone(), label.clone()))
        })
        .collect();
    LabelTable::new(flow_id, labels)
}

/// Token propagation to a fixpoint: inject a token at `source` and copy it
/// across every channel until nothing changes. Deliberately naive; used to
/// cross-check [`can_flow`] and [`compute_labels`].
pub fn simulate_propagation(
    net: &Network,
    source: &str,
) -> Result<BTreeSet<EntityId>, ModelError> {
    let start = net.entity(source)?.clone();
    let mut holding = BTreeSet::from([start]);
    loop {
        let mut changed = false;
        for ch in net.channels() {
            if holding.contains(&ch.src) && !holding.contains(&ch.dst) {
                holding.insert(ch.dst.clone());
                changed = true;
            }
        }
        if !changed {
            return Ok(holding);
        }
    }
}

//! Lattice analysis of flow posets.
//!
//! A poset is a lattice when every pair has a least upper bound (join) and a
//! greatest lower bound (meet). [`lattice_check`] lists the pairs that fail
//! either way; [`dedekind_macneille`] computes the smallest complete lattice
//! the poset embeds into and counts the extra ("void") elements that would
//! have to be invented to get there. [`merge_networks`] and
//! [`induced_subnetwork`] build unions and restrictions, whose condensations
//! are again partial orders.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use crate::model::{Channel, EntityId, ModelError, Network};
use crate::order::{ClassId, Label, Poset};

/// Largest poset [`dedekind_macneille`] accepts; cuts are stored as bitmasks.
pub const MAX_COMPLETION_SIZE: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("unknown class {0}")]
    UnknownClass(ClassId),
    #[error("poset has {0} elements; completion supports at most {MAX_COMPLETION_SIZE}")]
    TooLarge(usize),
    #[error("entity `{0}` exists in both networks")]
    NameCollision(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A finite order given by its elements `0..element_count()` and `≤`.
pub trait FiniteOrder {
    fn element_count(&self) -> usize;
    fn is_leq(&self, a: usize, b: usize) -> bool;
}

impl FiniteOrder for Poset {
    fn element_count(&self) -> usize {
        self.len()
    }

    fn is_leq(&self, a: usize, b: usize) -> bool {
        self.leq(ClassId(a), ClassId(b))
    }
}

fn minimal_among<O: FiniteOrder + ?Sized>(o: &O, set: &[usize]) -> Vec<usize> {
    set.iter()
        .copied()
        .filter(|&m| !set.iter().any(|&other| other != m && o.is_leq(other, m)))
        .collect()
}

fn maximal_among<O: FiniteOrder + ?Sized>(o: &O, set: &[usize]) -> Vec<usize> {
    set.iter()
        .copied()
        .filter(|&m| !set.iter().any(|&other| other != m && o.is_leq(m, other)))
        .collect()
}

/// Minimal elements among the common upper bounds of `a` and `b`.
pub fn minimal_upper_bounds<O: FiniteOrder + ?Sized>(o: &O, a: usize, b: usize) -> Vec<usize> {
    let ub: Vec<usize> = (0..o.element_count())
        .filter(|&u| o.is_leq(a, u) && o.is_leq(b, u))
        .collect();
    minimal_among(o, &ub)
}

/// Maximal elements among the common lower bounds of `a` and `b`.
pub fn maximal_lower_bounds<O: FiniteOrder + ?Sized>(o: &O, a: usize, b: usize) -> Vec<usize> {
    let lb: Vec<usize> = (0..o.element_count())
        .filter(|&l| o.is_leq(l, a) && o.is_leq(l, b))
        .collect();
    maximal_among(o, &lb)
}

fn check_ids(p: &Poset, ids: [ClassId; 2]) -> Result<(), LatticeError> {
    match ids.into_iter().find(|c| c.0 >= p.len()) {
        Some(bad) => Err(LatticeError::UnknownClass(bad)),
        None => Ok(()),
    }
}

/// Minimal upper bounds of two classes: a singleton when their join exists,
/// empty when they have no common upper bound, larger when the candidates are
/// incomparable.
pub fn joins_of(p: &Poset, a: ClassId, b: ClassId) -> Result<BTreeSet<ClassId>, LatticeError> {
    check_ids(p, [a, b])?;
    Ok(minimal_upper_bounds(p, a.0, b.0)
        .into_iter()
        .map(ClassId)
        .collect())
}

/// Dual of [`joins_of`].
pub fn meets_of(p: &Poset, a: ClassId, b: ClassId) -> Result<BTreeSet<ClassId>, LatticeError> {
    check_ids(p, [a, b])?;
    Ok(maximal_lower_bounds(p, a.0, b.0)
        .into_iter()
        .map(ClassId)
        .collect())
}

/// Pairs `(a, b)`, `a < b` by index, lacking a unique join (first) or meet
/// (second).
pub fn order_failures<O: FiniteOrder + ?Sized>(o: &O) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let n = o.element_count();
    let mut joins = Vec::new();
    let mut meets = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if minimal_upper_bounds(o, a, b).len() != 1 {
                joins.push((a, b));
            }
            if maximal_lower_bounds(o, a, b).len() != 1 {
                meets.push((a, b));
            }
        }
    }
    (joins, meets)
}

pub fn is_lattice<O: FiniteOrder + ?Sized>(o: &O) -> bool {
    let (j, m) = order_failures(o);
    j.is_empty() && m.is_empty()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeReport {
    pub is_lattice: bool,
    pub join_failures: Vec<(ClassId, ClassId)>,
    pub meet_failures: Vec<(ClassId, ClassId)>,
}

/// Lists every pair of classes without a unique join or meet. Each pair is
/// written smaller-key first, and the lists are sorted by member names.
pub fn lattice_check(p: &Poset) -> LatticeReport {
    let (joins, meets) = order_failures(p);
    let by_key = |pairs: Vec<(usize, usize)>| {
        let mut out: Vec<(ClassId, ClassId)> = pairs
            .into_iter()
            .map(|(a, b)| {
                let (a, b) = (ClassId(a), ClassId(b));
                if p.class(a).key() <= p.class(b).key() {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        out.sort_by(|x, y| {
            (p.class(x.0).key(), p.class(x.1).key()).cmp(&(p.class(y.0).key(), p.class(y.1).key()))
        });
        out
    };
    let join_failures = by_key(joins);
    let meet_failures = by_key(meets);
    LatticeReport {
        is_lattice: join_failures.is_empty() && meet_failures.is_empty(),
        join_failures,
        meet_failures,
    }
}

/// The cut lattice of a poset. Each cut is identified by its lower set `A`
/// (its upper set is `UB(A)`); cuts are ordered by inclusion of lower sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    lower_sets: Vec<u128>,
    // original element -> index of its principal cut
    embedding: Vec<usize>,
}

impl Completion {
    pub fn len(&self) -> usize {
        self.lower_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower_sets.is_empty()
    }

    /// Lower set of cut `i`, as element indices of the original poset.
    pub fn lower_set(&self, i: usize) -> Vec<usize> {
        bits(self.lower_sets[i])
    }

    pub fn embedding(&self) -> &[usize] {
        &self.embedding
    }

    /// Cuts that are not the image of an original element.
    pub fn void_cuts(&self) -> Vec<usize> {
        let image: HashSet<usize> = self.embedding.iter().copied().collect();
        (0..self.len()).filter(|i| !image.contains(i)).collect()
    }
}

impl FiniteOrder for Completion {
    fn element_count(&self) -> usize {
        self.lower_sets.len()
    }

    fn is_leq(&self, a: usize, b: usize) -> bool {
        self.lower_sets[a] & !self.lower_sets[b] == 0
    }
}

fn bits(mut mask: u128) -> Vec<usize> {
    let mut out = Vec::new();
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        out.push(i);
        mask &= mask - 1;
    }
    out
}

/// Builds the cut lattice of any finite order. The cuts' lower sets are
/// exactly the intersections of principal down-sets (the empty intersection
/// being the whole set), so they are generated by closing `{P}` under
/// intersection with each `↓x`.
pub fn completion_of<O: FiniteOrder + ?Sized>(o: &O) -> Result<Completion, LatticeError> {
    let n = o.element_count();
    if n > MAX_COMPLETION_SIZE {
        return Err(LatticeError::TooLarge(n));
    }
    let full: u128 = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let down: Vec<u128> = (0..n)
        .map(|x| {
            (0..n)
                .filter(|&y| o.is_leq(y, x))
                .fold(0u128, |m, y| m | (1 << y))
        })
        .collect();

    let mut family: Vec<u128> = vec![full];
    let mut seen: HashSet<u128> = HashSet::from([full]);
    for &dx in &down {
        let snapshot = family.len();
        for i in 0..snapshot {
            let meet = family[i] & dx;
            if seen.insert(meet) {
                family.push(meet);
            }
        }
    }
    family.sort_by_key(|m| (m.count_ones(), bits(*m)));

    let position: BTreeMap<u128, usize> = family.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let embedding = down.iter().map(|d| position[d]).collect();
    Ok(Completion {
        lower_sets: family,
        embedding,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionReport {
    pub original_size: usize,
    pub completed_size: usize,
    pub void_labels: usize,
    /// Each void cut rendered as the provenance it would carry: every entity
    /// of every class in its lower set.
    pub void_elements: Vec<Label>,
    pub completion: Completion,
}

/// Dedekind–MacNeille completion of a flow poset.
pub fn dedekind_macneille(p: &Poset) -> Result<CompletionReport, LatticeError> {
    let completion = completion_of(p)?;
    let void_elements = completion
        .void_cuts()
        .into_iter()
        .map(|cut| {
            completion
                .lower_set(cut)
                .into_iter()
                .flat_map(|c| p.class(ClassId(c)).members.iter().cloned())
                .collect::<Label>()
        })
        .collect();
    Ok(CompletionReport {
        original_size: p.len(),
        completed_size: completion.len(),
        void_labels: completion.len() - p.len(),
        void_elements,
        completion,
    })
}

/// Union of two networks under the first one's flow id. With
/// `shared_names_allowed`, entities with the same name are identified;
/// otherwise any shared name is an error.
pub fn merge_networks(
    n1: &Network,
    n2: &Network,
    shared_names_allowed: bool,
) -> Result<Network, LatticeError> {
    if !shared_names_allowed {
        if let Some(shared) = n1.entities().intersection(n2.entities()).next() {
            return Err(LatticeError::NameCollision(shared.to_string()));
        }
    }
    let entities: BTreeSet<EntityId> = n1.entities().union(n2.entities()).cloned().collect();
    let channels: BTreeSet<Channel> = n1.channels().union(n2.channels()).cloned().collect();
    Ok(Network::from_parts_unchecked(
        n1.flow_id().to_string(),
        entities,
        channels,
    ))
}

/// Restriction of `n` to `keep`: channels with both endpoints kept.
pub fn induced_subnetwork<S: AsRef<str>>(n: &Network, keep: &[S]) -> Result<Network, LatticeError> {
    let mut kept = BTreeSet::new();
    for name in keep {
        kept.insert(n.entity(name.as_ref())?.clone());
    }
    let channels = n
        .channels()
        .iter()
        .filter(|c| kept.contains(&c.src) && kept.contains(&c.dst))
        .cloned()
        .collect();
    Ok(Network::from_parts_unchecked(
        n.flow_id().to_string(),
        kept,
        channels,
    ))
}

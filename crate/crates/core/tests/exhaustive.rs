//! Exhaustive checks over every small digraph and every small poset.

mod common;

use std::collections::BTreeSet;

use common::{digraph_from_mask, names};
use poflow_core::lattice::{completion_of, dedekind_macneille, is_lattice, lattice_check, FiniteOrder};
use poflow_core::pdp::decide;
use poflow_core::{can_flow, compute_labels, condense, simulate_propagation, Network, Poset};

#[test]
fn every_four_node_digraph_agrees_with_propagation() {
    let ns = names(4);
    for mask in 0..(1u64 << 12) {
        let net = digraph_from_mask(4, mask, false);
        let table = compute_labels(&net);
        let p = condense(&net);
        assert!(p.check_invariants().is_ok(), "mask {mask:#x}");
        for x in &ns {
            let tokens = simulate_propagation(&net, x).unwrap();
            for y in net.entities() {
                let reached = tokens.contains(y);
                assert_eq!(can_flow(&net, x, y.as_str()).unwrap(), reached, "mask {mask:#x} {x}->{y}");
                assert_eq!(decide(&table, x, y.as_str()).is_grant(), reached, "mask {mask:#x} {x}->{y}");
            }
        }
    }
}

#[test]
fn three_node_digraphs_with_self_loops() {
    // 9 ordered pairs including loops; loops never change anything
    for mask in 0..(1u64 << 9) {
        let net = digraph_from_mask(3, mask, true);
        let without_loops = Network::build(
            "g",
            net.entities().iter().map(|e| e.as_str()),
            net.channels()
                .iter()
                .filter(|c| !c.is_self_loop())
                .map(|c| (c.src.as_str(), c.dst.as_str())),
        )
        .unwrap();
        assert_eq!(compute_labels(&net), compute_labels(&without_loops));
    }
}

/// Naturally labelled posets on `n` elements: transitive closures of DAGs
/// with edges `i → j`, `i < j`. Every poset is isomorphic to one of these.
fn natural_posets(n: usize) -> impl Iterator<Item = Poset> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let ns = names(n);
    (0..(1u64 << pairs.len())).map(move |mask| {
        let chans: Vec<(&str, &str)> = pairs
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, &(a, b))| (ns[a].as_str(), ns[b].as_str()))
            .collect();
        condense(&Network::build("p", &ns, chans).unwrap())
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

fn canonical_form(p: &Poset, perms: &[Vec<usize>]) -> u32 {
    let n = p.len();
    perms
        .iter()
        .map(|perm| {
            let mut code = 0u32;
            for a in 0..n {
                for b in 0..n {
                    if a != b && p.is_leq(perm[a], perm[b]) {
                        code |= 1 << (a * n + b);
                    }
                }
            }
            code
        })
        .min()
        .unwrap()
}

fn upto_iso(n: usize) -> Vec<Poset> {
    let perms = permutations(n);
    let mut seen = BTreeSet::new();
    natural_posets(n)
        .filter(|p| seen.insert(canonical_form(p, &perms)))
        .collect()
}

/// Cut lower sets computed straight from the definition: `LB(UB(S))` for
/// every subset `S`.
fn cuts_by_definition(p: &Poset) -> BTreeSet<Vec<usize>> {
    let n = p.len();
    let mut out = BTreeSet::new();
    for mask in 0..(1u32 << n) {
        let s: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let ub: Vec<usize> = (0..n).filter(|&u| s.iter().all(|&x| p.is_leq(x, u))).collect();
        let lb: Vec<usize> = (0..n).filter(|&l| ub.iter().all(|&u| p.is_leq(l, u))).collect();
        out.insert(lb);
    }
    out
}

#[test]
fn poset_enumeration_is_exhaustive_up_to_isomorphism() {
    let counts: Vec<usize> = (1..=5).map(|n| upto_iso(n).len()).collect();
    // unlabeled posets on 1..5 points
    assert_eq!(counts, [1, 2, 5, 16, 63]);
}

#[test]
fn completion_of_every_small_poset() {
    for n in 1..=5 {
        for p in upto_iso(n) {
            let report = dedekind_macneille(&p).unwrap();
            let c = &report.completion;
            let family: BTreeSet<Vec<usize>> = (0..c.len()).map(|i| c.lower_set(i)).collect();
            assert_eq!(family.len(), c.len());
            assert_eq!(family, cuts_by_definition(&p));

            // meets are intersections and joins are the least cut above the union
            for i in 0..c.len() {
                for j in 0..c.len() {
                    let (a, b) = (c.lower_set(i), c.lower_set(j));
                    let meet: Vec<usize> = a.iter().copied().filter(|x| b.contains(x)).collect();
                    assert!(family.contains(&meet));
                    let join = family
                        .iter()
                        .filter(|s| a.iter().chain(&b).all(|x| s.contains(x)))
                        .min_by_key(|s| s.len())
                        .unwrap();
                    assert!(family
                        .iter()
                        .filter(|s| a.iter().chain(&b).all(|x| s.contains(x)))
                        .all(|s| join.iter().all(|x| s.contains(x))));
                }
            }
            assert!(is_lattice(c));

            for a in p.ids() {
                for b in p.ids() {
                    let (ea, eb) = (c.embedding()[a.0], c.embedding()[b.0]);
                    assert_eq!(p.leq(a, b), c.is_leq(ea, eb));
                }
            }
            assert_eq!(report.void_labels == 0, lattice_check(&p).is_lattice);
            assert_minimal(c);
        }
    }
}

/// No proper subset of the completion that contains the embedded poset is a
/// complete sublattice (closed under binary joins and meets, with top and
/// bottom).
fn assert_minimal(c: &poflow_core::lattice::Completion) {
    let image: BTreeSet<usize> = c.embedding().iter().copied().collect();
    let voids = c.void_cuts();
    let lower: Vec<BTreeSet<usize>> = (0..c.len()).map(|i| c.lower_set(i).into_iter().collect()).collect();
    let join = |i: usize, j: usize| {
        (0..c.len())
            .filter(|&k| lower[i].is_subset(&lower[k]) && lower[j].is_subset(&lower[k]))
            .min_by_key(|&k| lower[k].len())
            .unwrap()
    };
    let meet = |i: usize, j: usize| {
        let m: BTreeSet<usize> = lower[i].intersection(&lower[j]).copied().collect();
        (0..c.len()).find(|&k| lower[k] == m).unwrap()
    };
    let top = (0..c.len()).max_by_key(|&k| lower[k].len()).unwrap();
    let bottom = (0..c.len()).min_by_key(|&k| lower[k].len()).unwrap();
    for keep_mask in 0..(1u32 << voids.len()) - 1 {
        let mut s = image.clone();
        s.extend(voids.iter().enumerate().filter(|(i, _)| keep_mask & (1 << i) != 0).map(|(_, v)| *v));
        let closed = s.contains(&top)
            && s.contains(&bottom)
            && s.iter().all(|&i| s.iter().all(|&j| s.contains(&join(i, j)) && s.contains(&meet(i, j))));
        assert!(!closed, "proper complete sublattice {s:?} contains the image");
    }
}

#[test]
fn completion_accepts_arbitrary_finite_orders() {
    // the completion of a completion adds nothing
    for p in upto_iso(4) {
        let once = completion_of(&p).unwrap();
        let twice = completion_of(&once).unwrap();
        assert_eq!(twice.len(), once.len());
    }
}

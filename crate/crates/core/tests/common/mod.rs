#![allow(dead_code)]

use poflow_core::{EntityId, Network};
use proptest::prelude::*;

pub fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("e{i}")).collect()
}

/// Digraph on `n` nodes from an edge mask over all ordered pairs (self loops
/// included when `loops`).
pub fn digraph_from_mask(n: usize, mask: u64, loops: bool) -> Network {
    let ns = names(n);
    let mut chans = Vec::new();
    let mut bit = 0;
    for a in 0..n {
        for b in 0..n {
            if a == b && !loops {
                continue;
            }
            if mask & (1 << bit) != 0 {
                chans.push((ns[a].clone(), ns[b].clone()));
            }
            bit += 1;
        }
    }
    Network::build("g", &ns, chans).unwrap()
}

pub fn arb_network(max_nodes: usize) -> impl Strategy<Value = Network> {
    (1..=max_nodes).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..=n * 3).prop_map(move |edges| {
            let ns = names(n);
            let chans: Vec<(String, String)> = edges
                .into_iter()
                .map(|(a, b)| (ns[a].clone(), ns[b].clone()))
                .collect();
            Network::build("g", &ns, chans).unwrap()
        })
    })
}

/// Acyclic network: edges only from lower to higher index.
pub fn arb_dag(min_nodes: usize, max_nodes: usize) -> impl Strategy<Value = Network> {
    (min_nodes..=max_nodes).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * n.saturating_sub(1) / 2).prop_map(move |bits| {
            let ns = names(n);
            let mut chans = Vec::new();
            let mut k = 0;
            for a in 0..n {
                for b in a + 1..n {
                    if bits[k] {
                        chans.push((ns[a].clone(), ns[b].clone()));
                    }
                    k += 1;
                }
            }
            Network::build("p", &ns, chans).unwrap()
        })
    })
}

pub fn id(s: &str) -> EntityId {
    EntityId::new(s).unwrap()
}

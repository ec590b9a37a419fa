//! The two-flow company example: a sales flow and a separate statistics flow,
//! with A1/A1S and A2/A2S as split entities.

use crate::model::{FlowSystem, Network};

pub const SALES_ENTITIES: [&str; 9] = ["S1", "S2", "S3", "S4", "P1", "P2", "P3", "A1", "A2"];

pub const SALES_CHANNELS: [(&str, &str); 9] = [
    ("S1", "P1"),
    ("S2", "P2"),
    ("S3", "P3"),
    ("S4", "P3"),
    ("P1", "P2"),
    ("P2", "P1"),
    ("P3", "P2"),
    ("P2", "A1"),
    ("P2", "A2"),
];

pub const STATS_ENTITIES: [&str; 3] = ["A1S", "A2S", "O"];

pub const STATS_CHANNELS: [(&str, &str); 2] = [("A1S", "A2S"), ("A1S", "O")];

pub const NETWORK_FILE: &str = include_str!("../fixtures/retail.net");

pub const SALES_POLICY: &str = include_str!("../fixtures/sales.policy");

pub const STATS_POLICY: &str = include_str!("../fixtures/stats.policy");

pub fn retail_sales() -> Network {
    Network::build("sales", SALES_ENTITIES, SALES_CHANNELS).expect("fixture is valid")
}

pub fn retail_stats() -> Network {
    Network::build("stats", STATS_ENTITIES, STATS_CHANNELS).expect("fixture is valid")
}

pub fn retail_system() -> FlowSystem {
    FlowSystem::build(
        vec![retail_sales(), retail_stats()],
        [["A1", "A1S"], ["A2", "A2S"]],
    )
    .expect("fixture is valid")
}

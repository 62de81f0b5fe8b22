//! Shared fixtures and random-instance samplers for unit tests.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::model::{generate_network, GeneratorSpec, NetworkModel, Topology, UniformRange};

pub fn base_spec(topology: Topology) -> GeneratorSpec {
    GeneratorSpec {
        topology,
        beta: UniformRange::new(0.05, 0.2),
        alpha: UniformRange::new(0.3, 1.0),
        omega: UniformRange::new(0.05, 0.3),
        delta: UniformRange::new(0.3, 0.6),
        delta_prime: UniformRange::new(0.4, 0.7),
        seed_nodes: 1,
        delayed_seed_nodes: 0,
    }
}

/// A random valid instance with decently damped dynamics and at least a few
/// edges; `seed` drives both the shape and the parameters.
pub fn random_instance(seed: u64, max_n: usize) -> NetworkModel {
    for attempt in 0u64.. {
        let mixed = seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9));
        let mut rng = StdRng::seed_from_u64(mixed ^ 0x5dee_ce66);
        let n = rng.random_range(3..=max_n.max(3));
        let p = rng.random_range(0.1..0.4);
        let spec = GeneratorSpec {
            seed_nodes: 1 + n / 8,
            delayed_seed_nodes: usize::from(n > 4),
            ..base_spec(Topology::ErdosRenyi { n, p })
        };
        let model = generate_network(&spec, mixed).unwrap();
        if model.edge_count() >= 4 {
            return model;
        }
    }
    unreachable!()
}

/// The 2-node chain: node 0 infects node 1 with weight 0.3; node 0 starts
/// infected. With alpha = 1 the delayable state is never entered.
pub fn two_node_chain() -> NetworkModel {
    NetworkModel::new(
        2,
        vec![(0, 1, 0.3)],
        vec![1.0; 2],
        vec![0.0; 2],
        vec![0.5; 2],
        vec![0.5; 2],
        vec![1.0, 0.0],
        vec![0.0; 2],
        vec![0.0; 2],
    )
    .unwrap()
}

/// Star with hub 0 infected and leaf weights 0.4, 0.3, 0.2.
pub fn weighted_star() -> NetworkModel {
    NetworkModel::new(
        4,
        vec![(0, 1, 0.4), (0, 2, 0.3), (0, 3, 0.2)],
        vec![0.7; 4],
        vec![0.2; 4],
        vec![0.5; 4],
        vec![0.6; 4],
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0; 4],
        vec![0.0; 4],
    )
    .unwrap()
}

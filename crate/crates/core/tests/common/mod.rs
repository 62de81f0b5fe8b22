//! Shared instance samplers for the integration suites.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use sdir::model::{generate_network, EdgeSet, GeneratorSpec, NetworkModel, Topology, UniformRange};

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

/// Random valid instance with at least `min_edges` edges; the seed drives
/// shape and parameters.
pub fn random_instance(seed: u64, n_lo: usize, n_hi: usize, min_edges: usize) -> NetworkModel {
    for attempt in 0u64.. {
        let mixed = seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9));
        let mut rng = StdRng::seed_from_u64(mixed ^ 0xACCE_17ED);
        let n = rng.random_range(n_lo..=n_hi.max(n_lo));
        let p = rng.random_range(0.08..0.35);
        let spec = GeneratorSpec {
            seed_nodes: 1 + n / 10,
            delayed_seed_nodes: usize::from(n > 4),
            ..base_spec(Topology::ErdosRenyi { n, p })
        };
        let model = generate_network(&spec, mixed).unwrap();
        if model.edge_count() >= min_edges {
            return model;
        }
    }
    unreachable!()
}

/// Uniformly random deletion set of size up to `max_size`.
#[allow(dead_code)]
pub fn random_deletion(model: &NetworkModel, rng: &mut StdRng, max_size: usize) -> EdgeSet {
    let edges = model.edges();
    let mut set = EdgeSet::new();
    if edges.is_empty() {
        return set;
    }
    let size = rng.random_range(0..=max_size.min(edges.len()));
    while set.len() < size {
        set.insert(edges[rng.random_range(0..edges.len())]);
    }
    set
}

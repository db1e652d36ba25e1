//! Shared fixtures for the benchmarks.

use catgraph_core::simbench::{gen_data_with, random_graph_with_edges, GibbsSettings, MrfModel};
use catgraph_core::{CategoricalDataset, SeedStream, UndirectedGraph};

/// Binary data from a random MRF on `p` vertices with `edges` edges.
pub fn mrf_fixture(p: usize, edges: usize, n: usize, seed: u64) -> (UndirectedGraph, CategoricalDataset) {
    let mut rng = SeedStream::new(seed).rng("bench-graph");
    let g = random_graph_with_edges(p, edges, &mut rng).expect("edge count fits");
    let model = MrfModel::random_weights(g.clone(), 0.5, 1.0, seed).expect("valid weight range");
    let gibbs = GibbsSettings { burn_in: 200, thin: 2 };
    let data = gen_data_with(&model, n, seed, gibbs).expect("n > 0");
    (g, data)
}

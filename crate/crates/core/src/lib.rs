//! Structure learning for undirected graphical models over categorical
//! variables, driven by a birth-death Markov chain on graphs scored by
//! marginal pseudo-likelihood.

pub mod analysis;
pub mod data;
pub mod error;
pub mod estimate;
pub mod graph;
pub mod hillclimb;
pub mod rng;
pub mod sampler;
pub mod score;
pub mod simbench;

pub use data::{CategoricalDataset, ConditionalCounts, Level};
pub use error::{Error, Result};
pub use estimate::{
    convergence_trace, edge_inclusion_probs, graph_posterior, median_graph, ConvergencePoint,
    EdgeProbMatrix, GraphPosterior,
};
pub use graph::{all_edges, pair_count, Edge, EdgeMove, GraphPrior, UndirectedGraph};
pub use rng::SeedStream;
pub use sampler::{
    ChainTrace, RateEngine, RateVector, Sampler, SamplerConfig, TraceFormat, TraceRecord,
    UpdateMode,
};
pub use score::{local_log_score, DirichletHyper, Scorer};
pub use analysis::{
    betweenness_centrality, closeness_centrality, degree_centrality, pagerank, top_k, Centrality,
    CentralityReport,
};
pub use hillclimb::{hc_learn, hc_neighborhood, hc_run, Criterion, HcResult};
pub use simbench::{
    f1_score, gen_data, gen_graph, roc_points, run_benchmark, shd, GraphKind, GraphSpec, Method,
    MrfModel, Protocol, RocCurve,
};

use catgraph_core::sampler::{run, run_with_scorer};
use catgraph_core::simbench::{gen_data, MrfModel};
use catgraph_core::{
    all_edges, convergence_trace, edge_inclusion_probs, f1_score, graph_posterior, median_graph, pair_count,
    roc_points, CategoricalDataset, ChainTrace, DirichletHyper, Edge, GraphPrior, SamplerConfig, Scorer,
    TraceFormat, UndirectedGraph, UpdateMode,
};
use proptest::prelude::*;

fn chain_data(p: usize, w: f64, n: usize, seed: u64) -> (UndirectedGraph, CategoricalDataset) {
    let edges: Vec<_> = (0..p - 1).map(|i| (Edge::new(i, i + 1).unwrap(), w)).collect();
    let g = UndirectedGraph::from_edges(p, edges.iter().map(|(e, _)| e.endpoints())).unwrap();
    let model = MrfModel::new(g.clone(), &edges, vec![0.0; p]).unwrap();
    (g, gen_data(&model, n, seed).unwrap())
}

fn enumerate(scorer: &Scorer<'_>, p: usize, prior: &GraphPrior) -> Vec<(UndirectedGraph, f64)> {
    let pairs: Vec<Edge> = all_edges(p).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << pairs.len()) {
        let g = UndirectedGraph::from_edges(p, pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, e)| e.endpoints()))
            .unwrap();
        let lp = scorer.log_posterior(&g, prior).unwrap();
        out.push((g, lp));
    }
    let max = out.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = out.iter().map(|x| (x.1 - max).exp()).sum();
    out.into_iter().map(|(g, lp)| (g, (lp - max).exp() / z)).collect()
}

#[test]
fn sampler_matches_enumerated_posterior() {
    let (_, data) = chain_data(3, 0.15, 150, 5);
    let scorer = Scorer::new(&data, DirichletHyper::default());
    let exact = enumerate(&scorer, 3, &GraphPrior::uniform());
    let trace = run_with_scorer(&scorer, &SamplerConfig::new(60_000).burn_in(1_000).seed(9)).unwrap();
    let est = graph_posterior(&trace, true, false).unwrap();
    assert!(est.total_variation(&exact) < 0.04, "tv {}", est.total_variation(&exact));
}

#[test]
fn strong_chain_is_recovered() {
    let (truth, data) = chain_data(6, 1.0, 1000, 3);
    let trace = run(&data, &SamplerConfig::new(5_000).burn_in(1_000).seed(1)).unwrap();
    let probs = edge_inclusion_probs(&trace, true).unwrap();
    let median = median_graph(&probs, 0.5).unwrap();
    assert_eq!(f1_score(&truth, &median).unwrap(), 1.0);
    let roc = roc_points(&probs, &truth).unwrap();
    assert!((roc.auc() - 1.0).abs() < 1e-12);
}

#[test]
fn trace_files_round_trip() {
    let (_, data) = chain_data(5, 0.6, 300, 8);
    let config = SamplerConfig::new(400).burn_in(100).seed(2).mode(UpdateMode::Multiple { n0: 2 });
    let trace = run(&data, &config).unwrap();
    trace.validate().unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (name, fmt) in [("t.csv", TraceFormat::Csv), ("t.bin", TraceFormat::Binary)] {
        let path = dir.path().join(name);
        trace.save(&path, fmt).unwrap();
        let back = ChainTrace::load(&path).unwrap();
        assert_eq!(back.len(), trace.len());
        assert_eq!(back.burn_in(), 100);
        assert_eq!(back.final_graph(), trace.final_graph());
        let a = edge_inclusion_probs(&trace, true).unwrap();
        let b = edge_inclusion_probs(&back, true).unwrap();
        for (x, y) in a.upper().iter().zip(b.upper()) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn warm_start_continues_from_given_graph() {
    let (truth, data) = chain_data(5, 1.0, 500, 4);
    let trace = run(&data, &SamplerConfig::new(1).initial(truth.clone()).seed(3)).unwrap();
    assert_eq!(trace.initial(), &truth);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chain_summaries_are_consistent(
        rows in prop::collection::vec(prop::collection::vec(0i64..3, 4), 5..40),
        seed in any::<u64>(),
        n0 in 1usize..3,
    ) {
        let data = CategoricalDataset::from_rows(&rows).unwrap();
        let mode = if n0 == 1 { UpdateMode::Single } else { UpdateMode::Multiple { n0 } };
        let trace = run(&data, &SamplerConfig::new(150).seed(seed).mode(mode)).unwrap();
        trace.validate().unwrap();
        let probs = edge_inclusion_probs(&trace, true).unwrap();
        prop_assert_eq!(probs.upper().len(), pair_count(4));
        prop_assert!(probs.upper().iter().all(|x| (0.0..=1.0).contains(x)));
        let conv = convergence_trace(&trace);
        let last = conv.last().unwrap();
        prop_assert!((last.sum_edge_probs - probs.sum()).abs() < 1e-9 * (1.0 + probs.sum()));
        let post = graph_posterior(&trace, true, false).unwrap();
        let marg = post.edge_marginals();
        for (x, y) in marg.upper().iter().zip(probs.upper()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}

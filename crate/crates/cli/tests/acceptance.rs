//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test -p catgraph-cli --test acceptance`.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use catgraph_core::estimate::{convergence_trace, edge_inclusion_probs, graph_posterior};
use catgraph_core::graph::{all_edges, pair_count, Edge, GraphPrior, UndirectedGraph};
use catgraph_core::sampler::{run_with_scorer, RateEngine, SamplerConfig};
use catgraph_core::simbench::{
    gen_data, gen_graph, random_graph_with_edges, run_benchmark, BenchmarkResults, Cell, GraphKind,
    GraphSpec, Method, MrfModel, Protocol,
};
use catgraph_core::{CategoricalDataset, DirichletHyper, Scorer, SeedStream};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ------------------------------------------------------------------ oracles

/// Local score by direct counting over expanded rows.
fn naive_local_score(rows: &[Vec<u16>], card: &[usize], i: usize, nbd: &[usize], alpha: f64) -> f64 {
    let r = card[i];
    let mut table: HashMap<Vec<u16>, Vec<u64>> = HashMap::new();
    for row in rows {
        let key: Vec<u16> = nbd.iter().map(|&v| row[v]).collect();
        table.entry(key).or_insert_with(|| vec![0; r])[row[i] as usize] += 1;
    }
    let ra = r as f64 * alpha;
    table
        .values()
        .map(|counts| {
            let total: u64 = counts.iter().sum();
            ln_gamma(ra) - ln_gamma(ra + total as f64)
                + counts
                    .iter()
                    .map(|&c| ln_gamma(alpha + c as f64) - ln_gamma(alpha))
                    .sum::<f64>()
        })
        .sum()
}

fn graph_from_mask(p: usize, mask: usize) -> UndirectedGraph {
    UndirectedGraph::from_edges(
        p,
        all_edges(p)
            .filter(|e| mask >> e.index(p) & 1 == 1)
            .map(|e| e.endpoints()),
    )
    .unwrap()
}

/// Exact posterior over every graph on `p` vertices, uniform prior.
fn enumerate_posterior(data: &CategoricalDataset, alpha: f64) -> Vec<(UndirectedGraph, f64)> {
    let p = data.p();
    let rows: Vec<Vec<u16>> = data.expand_rows();
    let card = data.cardinalities().to_vec();
    let graphs: Vec<UndirectedGraph> = (0..1usize << pair_count(p)).map(|m| graph_from_mask(p, m)).collect();
    let logs: Vec<f64> = graphs
        .iter()
        .map(|g| (0..p).map(|i| naive_local_score(&rows, &card, i, g.nbrs(i), alpha)).sum())
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    graphs
        .into_iter()
        .zip(logs)
        .map(|(g, l)| (g, (l - max).exp() / z))
        .collect()
}

fn mrf_data(p: usize, edges: &[(usize, usize, f64)], n: usize, seed: u64) -> CategoricalDataset {
    let g = UndirectedGraph::from_edges(p, edges.iter().map(|&(a, b, _)| (a, b))).unwrap();
    let w: Vec<(Edge, f64)> = edges.iter().map(|&(a, b, w)| (Edge::new(a, b).unwrap(), w)).collect();
    gen_data(&MrfModel::new(g, &w, vec![0.0; p]).unwrap(), n, seed).unwrap()
}

fn run_chain(data: &CategoricalDataset, iterations: usize, seed: u64) -> catgraph_core::ChainTrace {
    let hyper = DirichletHyper::default();
    let scorer = Scorer::new(data, hyper);
    let config = SamplerConfig::new(iterations)
        .prior(GraphPrior::uniform())
        .hyper(hyper)
        .seed(seed);
    run_with_scorer(&scorer, &config).unwrap()
}

// ---------------------------------------------------------------- criteria

fn c1_exact_posterior() -> Outcome {
    let t = Instant::now();
    // weak couplings keep the posterior spread over several graphs
    let data = mrf_data(3, &[(0, 1, 0.2), (1, 2, 0.1)], 100, 101);
    let oracle = enumerate_posterior(&data, 0.5);
    let top = oracle.iter().map(|(_, w)| *w).fold(0.0, f64::max);
    let trace = run_chain(&data, 200_000, 11);
    let post = graph_posterior(&trace, false, false).unwrap();
    let tvd = post.total_variation(&oracle);
    let secs = t.elapsed().as_secs_f64();
    outcome(
        tvd < 0.03 && secs < 30.0,
        format!("p=3, 200k iterations: TVD {tvd:.4} (< 0.03), oracle mode mass {top:.3}, {secs:.1} s (< 30 s)"),
    )
}

fn c2_edge_marginals() -> Outcome {
    let t = Instant::now();
    let data = mrf_data(4, &[(0, 1, 0.3), (1, 2, 0.2), (2, 3, 0.1)], 100, 202);
    let oracle = enumerate_posterior(&data, 0.5);
    let trace = run_chain(&data, 200_000, 12);
    let probs = edge_inclusion_probs(&trace, false).unwrap();
    let mut worst: f64 = 0.0;
    let mut exact_all = Vec::new();
    for e in all_edges(4) {
        let exact: f64 = oracle.iter().filter(|(g, _)| g.contains(e)).map(|(_, w)| w).sum();
        worst = worst.max((probs.prob(e) - exact).abs());
        exact_all.push(format!("{exact:.3}"));
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst < 0.02 && secs < 120.0,
        format!(
            "p=4, 6 edges: max |error| {worst:.4} (< 0.02), exact marginals [{}], {secs:.1} s (< 120 s)",
            exact_all.join(", ")
        ),
    )
}

fn c3_incremental_exact() -> Outcome {
    let t = Instant::now();
    let mut mismatched = 0usize;
    let mut checked = 0usize;
    for (k, &p) in [5usize, 20, 50].iter().enumerate() {
        let seeds = SeedStream::new(300 + k as u64);
        let mut rng = seeds.rng("data");
        let rows: Vec<Vec<i64>> = (0..300)
            .map(|_| (0..p).map(|_| i64::from(rng.random::<bool>())).collect())
            .collect();
        let data = CategoricalDataset::from_rows_with_cardinalities(&rows, vec![2; p]).unwrap();
        let scorer = Scorer::new(&data, DirichletHyper::default());
        let engine = RateEngine::new(&scorer, GraphPrior::new(0.3).unwrap(), 1).unwrap();
        let mut g = random_graph_with_edges(p, pair_count(p) / 4, &mut rng).unwrap();
        let mut rates = engine.full_rates(&g).unwrap();
        for _ in 0..1000 {
            let e = Edge::from_index(rng.random_range(0..pair_count(p)), p);
            g.toggle(e);
            rates = engine.incremental_rates(&rates, e, &g).unwrap();
            let full = engine.full_rates(&g).unwrap();
            let same = rates
                .log_rates()
                .iter()
                .zip(full.log_rates())
                .all(|(a, b)| a.to_bits() == b.to_bits());
            checked += 1;
            if !same || !rates.matches(&g) {
                mismatched += 1;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        mismatched == 0 && secs < 60.0,
        format!("{checked} toggles over p in {{5, 20, 50}}: {mismatched} with any ulp difference, {secs:.1} s (< 60 s)"),
    )
}

fn c4_detailed_balance() -> Outcome {
    let p = 6;
    let data = mrf_data(p, &[(0, 1, 0.6), (1, 2, -0.5), (3, 4, 0.7), (4, 5, 0.4)], 300, 404);
    let scorer = Scorer::new(&data, DirichletHyper::default());
    let mut rng = SeedStream::new(4).rng("pairs");
    let mut worst: f64 = 0.0;
    for k in 0..500 {
        let prior = GraphPrior::new([0.5, 0.2, 0.05, 0.8][k % 4]).unwrap();
        let engine = RateEngine::new(&scorer, prior, 1).unwrap();
        let mut minus = random_graph_with_edges(p, rng.random_range(0..pair_count(p)), &mut rng).unwrap();
        let e = Edge::from_index(rng.random_range(0..pair_count(p)), p);
        if minus.contains(e) {
            minus.toggle(e);
        }
        let mut plus = minus.clone();
        plus.toggle(e);
        let lp_minus = scorer.log_posterior(&minus, &prior).unwrap();
        let lp_plus = scorer.log_posterior(&plus, &prior).unwrap();
        let birth = engine.edge_log_rate(&minus, e).unwrap();
        let death = engine.edge_log_rate(&plus, e).unwrap();
        let lhs = lp_minus + birth;
        let rhs = lp_plus + death;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
    }
    outcome(worst <= 1e-10, format!("500 (G, e) pairs: max relative imbalance {worst:.2e} (<= 1e-10)"))
}

/// Hyper-sparse binary table: `cells` distinct patterns over `p` variables.
fn sparse_table(p: usize, cells: usize, seed: u64) -> CategoricalDataset {
    let mut rng = SeedStream::new(seed).rng("table");
    let mut seen: HashSet<Vec<u16>> = HashSet::with_capacity(cells);
    let mut out = Vec::with_capacity(cells);
    while out.len() < cells {
        let mut pattern = vec![0u16; p];
        let ones = 1 + rng.random_range(0..6);
        for _ in 0..ones {
            pattern[rng.random_range(0..p)] = 1;
        }
        if seen.insert(pattern.clone()) {
            let count = 1 + u64::from(rng.random_range(0..4u32) == 0) * rng.random_range(1..20u64);
            out.push((pattern, count));
        }
    }
    CategoricalDataset::from_cells(vec![2; p], out).unwrap()
}

fn c5_speedup() -> Outcome {
    let p = 214;
    let data = sparse_table(p, 55_000, 505);
    // no cache, so both paths pay for every score they request
    let scorer = Scorer::with_cache_capacity(&data, DirichletHyper::default(), 0);
    let prior = GraphPrior::sparse_default(p).unwrap();
    let engine = RateEngine::new(&scorer, prior, 1).unwrap();
    let mut rng = SeedStream::new(5).rng("graph");
    let mut g = random_graph_with_edges(p, 428, &mut rng).unwrap();

    engine.reset_stats();
    let t = Instant::now();
    let mut rates = engine.full_rates(&g).unwrap();
    let full_time = t.elapsed();
    let full_stats = engine.stats();

    let steps = 20;
    let mut incr_time = Duration::ZERO;
    engine.reset_stats();
    for _ in 0..steps {
        let e = Edge::from_index(rng.random_range(0..pair_count(p)), p);
        g.toggle(e);
        let t = Instant::now();
        rates = engine.incremental_rates(&rates, e, &g).unwrap();
        incr_time += t.elapsed();
    }
    let incr_stats = engine.stats();
    let per_incr = incr_time / steps;
    let count_ratio = full_stats.local_scores as f64 / (incr_stats.local_scores as f64 / steps as f64);
    let time_ratio = full_time.as_secs_f64() / per_incr.as_secs_f64();
    let counts_ok = full_stats.local_scores == 2 * 22_791
        && incr_stats.local_scores == steps as u64 * 850
        && (count_ratio - 53.6).abs() < 0.05;
    outcome(
        counts_ok && time_ratio >= 20.0,
        format!(
            "p=214, {} cells: local scores {} full vs {} incremental (ratio {count_ratio:.1}); wall clock {:.0} ms vs {:.1} ms (ratio {time_ratio:.1}, >= 20)",
            data.n_cells(),
            full_stats.local_scores,
            incr_stats.local_scores / steps as u64,
            full_time.as_secs_f64() * 1e3,
            per_incr.as_secs_f64() * 1e3,
        ),
    )
}

fn benchmark_protocol() -> Protocol {
    Protocol {
        kinds: vec![GraphKind::Random],
        ps: vec![10],
        ns: vec![200, 1000],
        replicates: 20,
        iterations: 100_000,
        burn_in: 60_000,
        seed: 2024,
        ..Protocol::default()
    }
}

fn c6_accuracy(res: &BenchmarkResults, secs: f64) -> Outcome {
    let small = Cell { kind: GraphKind::Random, p: 10, n: 200 };
    let large = Cell { kind: GraphKind::Random, p: 10, n: 1000 };
    let a = res.row(small, Method::Bdmcmc).unwrap();
    let b = res.row(large, Method::Bdmcmc).unwrap();
    let pass = (b.mean_f1 - 0.87).abs() <= 0.12 && b.mean_f1 > a.mean_f1 && b.mean_shd < a.mean_shd && secs < 1800.0;
    outcome(
        pass,
        format!(
            "random p=10, 20 replicates: F1 {:.3} (n=200) -> {:.3} (n=1000, band 0.87 +/- 0.12); SHD {:.2} -> {:.2}; {secs:.0} s (< 1800 s)",
            a.mean_f1, b.mean_f1, a.mean_shd, b.mean_shd
        ),
    )
}

fn c7_hc_pattern(res: &BenchmarkResults) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for cell in res.cells() {
        let f = |m| res.row(cell, m).unwrap().mean_f1;
        let (bd, or, and) = (f(Method::Bdmcmc), f(Method::HcOr), f(Method::HcAnd));
        pass &= or >= and && bd >= and;
        parts.push(format!("n={}: BDMCMC {bd:.3}, HC(or) {or:.3}, HC(and) {and:.3}", cell.n));
    }
    outcome(pass, format!("mean F1 {}", parts.join("; ")))
}

fn c8_convergence_basin() -> Outcome {
    let p = 30;
    let truth = gen_graph(&GraphSpec::new(GraphKind::Random, p).beta(0.1).components(1), 808).unwrap();
    let model = MrfModel::random_weights(truth.clone(), 0.5, 1.0, 809).unwrap();
    let data = gen_data(&model, 1000, 810).unwrap();
    let hyper = DirichletHyper::default();
    let scorer = Scorer::new(&data, hyper);
    let mut rng = SeedStream::new(8).rng("starts");
    let mut finals = Vec::new();
    for k in 0..10 {
        let edges = k * 200 / 9;
        let start = random_graph_with_edges(p, edges, &mut rng).unwrap();
        let config = SamplerConfig::new(10_000)
            .prior(GraphPrior::uniform())
            .hyper(hyper)
            .seed(80 + k as u64)
            .initial(start);
        let trace = run_with_scorer(&scorer, &config).unwrap();
        finals.push(convergence_trace(&trace).last().unwrap().sum_edge_probs);
    }
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    let sd = (finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (finals.len() - 1) as f64).sqrt();
    outcome(
        sd < 0.1 * mean,
        format!(
            "p=30, 10 starts with 0..200 edges, 10k iterations: sum of edge probs mean {mean:.2}, sd {sd:.3} (< {:.3}); true graph has {} edges",
            0.1 * mean,
            truth.edge_count()
        ),
    )
}

fn catgraph(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_catgraph"))
        .args(args)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn same_file(a: &Path, b: &Path) -> bool {
    matches!((std::fs::read(a), std::fs::read(b)), (Ok(x), Ok(y)) if x == y)
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s).display().to_string();
    let mut ok = true;
    for out in ["sim1", "sim2"] {
        ok &= catgraph(&["simulate", "--out", &d(out), "--kind", "cluster", "--p", "12", "--n", "400", "--seed", "9"]);
    }
    ok &= same_file(&dir.path().join("sim1/data.csv"), &dir.path().join("sim2/data.csv"));
    ok &= same_file(&dir.path().join("sim1/graph.edges"), &dir.path().join("sim2/graph.edges"));
    let data = d("sim1/data.csv");
    for (out, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        ok &= catgraph(&["sample", "--out", &d(out), "--data", &data, "--iters", "3000", "--seed", "5", "--threads", threads]);
    }
    let sample_same = same_file(&dir.path().join("a/trace.csv"), &dir.path().join("b/trace.csv"));
    let threads_same = same_file(&dir.path().join("a/trace.csv"), &dir.path().join("c/trace.csv"));
    for out in ["ma", "mb"] {
        ok &= catgraph(&["sample", "--out", &d(out), "--data", &data, "--iters", "300", "--n0", "5", "--seed", "6", "--start", "prior", "--trace-format", "bin"]);
    }
    let multi_same = same_file(&dir.path().join("ma/trace.bin"), &dir.path().join("mb/trace.bin"));

    let ds = CategoricalDataset::load(dir.path().join("sim1/data.csv")).unwrap();
    let scorer = Scorer::new(&ds, DirichletHyper::default());
    let g = random_graph_with_edges(12, 20, &mut SeedStream::new(1).rng("g")).unwrap();
    let r1 = RateEngine::new(&scorer, GraphPrior::uniform(), 1).unwrap().full_rates(&g).unwrap();
    let r4 = RateEngine::new(&scorer, GraphPrior::uniform(), 4).unwrap().full_rates(&g).unwrap();
    let rates_same = r1.log_rates().iter().zip(r4.log_rates()).all(|(a, b)| a.to_bits() == b.to_bits());
    outcome(
        ok && sample_same && threads_same && multi_same && rates_same,
        format!(
            "simulate/sample reruns byte-identical: {}; 1 vs 4 threads trace identical: {threads_same}; multi-edge rerun identical: {multi_same}; full rates 1 vs 4 threads: {rates_same}",
            ok && sample_same
        ),
    )
}

fn c10_roc(res: &BenchmarkResults) -> Outcome {
    let cell = Cell { kind: GraphKind::Random, p: 10, n: 1000 };
    let auc = res.mean_auc(cell).unwrap_or(0.0);
    let used = res.for_cell(cell).filter(|r| !r.roc.degenerate).count();
    outcome(auc >= 0.85, format!("random p=10, n=1000: mean AUC {auc:.4} over {used} replicates (>= 0.85)"))
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |id, name, o: Outcome| {
        println!("{} [{id:>2}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };
    record(1, "exact-posterior oracle", c1_exact_posterior());
    record(2, "edge-marginal oracle", c2_edge_marginals());
    record(3, "incremental-rate exactness", c3_incremental_exact());
    record(4, "detailed balance", c4_detailed_balance());
    record(5, "speedup accounting", c5_speedup());
    let t = Instant::now();
    let bench = run_benchmark(&benchmark_protocol()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    record(6, "benchmark F1 and SHD", c6_accuracy(&bench, secs));
    record(7, "HC comparison pattern", c7_hc_pattern(&bench));
    record(8, "convergence basin", c8_convergence_basin());
    record(9, "determinism", c9_determinism());
    record(10, "ROC sanity", c10_roc(&bench));
    let failed = results.iter().filter(|(_, _, o)| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

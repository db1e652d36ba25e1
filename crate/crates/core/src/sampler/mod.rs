//! Birth-death MCMC over undirected graphs.
//!
//! Each iteration computes (or incrementally updates) the rate of toggling
//! every vertex pair, records the expected holding time `1 / Σ R_e` of the
//! current graph, and jumps by toggling one edge chosen with probability
//! proportional to its rate. In multiple-edge mode the `N0` highest-rate
//! edges are toggled together; that variant is a heuristic for finding good
//! starting graphs and does not target the posterior.

mod rates;
mod trace;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rates::{edge_rate, full_rates, RateEngine, RateStats, RateVector};
pub use trace::{ChainTrace, TraceFormat, TraceRecord};

use crate::data::CategoricalDataset;
use crate::error::{Error, Result};
use crate::graph::{pair_count, Edge, EdgeMove, GraphPrior, UndirectedGraph};
use crate::rng::SeedStream;
use crate::score::{DirichletHyper, Scorer, DEFAULT_CACHE_CAPACITY};

/// Substream name for per-iteration jump randomness.
pub const SAMPLE_STREAM: &str = "sample";
/// Substream name for multiple-edge tie breaking.
pub const TIE_BREAK_STREAM: &str = "tie-break";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateMode {
    Single,
    /// Toggle the `n0` highest-rate edges per iteration.
    Multiple { n0: usize },
}

#[derive(Clone, Debug)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub prior: GraphPrior,
    pub hyper: DirichletHyper,
    pub seed: u64,
    pub mode: UpdateMode,
    pub threads: usize,
    /// Starting graph; empty when `None`.
    pub initial: Option<UndirectedGraph>,
    /// Local score cache size in entries; zero disables caching.
    pub cache_capacity: usize,
}

impl SamplerConfig {
    pub fn new(iterations: usize) -> Self {
        SamplerConfig {
            iterations,
            burn_in: 0,
            prior: GraphPrior::uniform(),
            hyper: DirichletHyper::default(),
            seed: 0,
            mode: UpdateMode::Single,
            threads: 1,
            initial: None,
            cache_capacity: DEFAULT_CACHE_CAPACITY,
        }
    }

    pub fn burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn prior(mut self, prior: GraphPrior) -> Self {
        self.prior = prior;
        self
    }

    pub fn hyper(mut self, hyper: DirichletHyper) -> Self {
        self.hyper = hyper;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn mode(mut self, mode: UpdateMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn initial(mut self, g: UndirectedGraph) -> Self {
        self.initial = Some(g);
        self
    }

    pub fn cache_capacity(mut self, capacity: usize) -> Self {
        self.cache_capacity = capacity;
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidParameter(format!(
                "burn-in ({}) must be smaller than the iteration count ({})",
                self.burn_in, self.iterations
            )));
        }
        if p < 2 {
            return Err(Error::InvalidParameter("need at least two variables".into()));
        }
        if let UpdateMode::Multiple { n0 } = self.mode {
            check_n0(n0, p)?;
        }
        if let Some(g) = &self.initial {
            if g.p() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: g.p(),
                });
            }
        }
        Ok(())
    }
}

fn check_n0(n0: usize, p: usize) -> Result<()> {
    if n0 < 2 || n0 > pair_count(p) {
        return Err(Error::InvalidParameter(format!(
            "multiple-edge count must lie in [2, {}], got {n0}",
            pair_count(p)
        )));
    }
    Ok(())
}

/// The chain's current graph with the rates that belong to it.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub graph: UndirectedGraph,
    pub rates: RateVector,
}

impl ChainState {
    pub fn new(engine: &RateEngine<'_, '_>, graph: UndirectedGraph) -> Result<Self> {
        let rates = engine.full_rates(&graph)?;
        Ok(ChainState { graph, rates })
    }
}

/// Outcome of one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    /// Expected holding time of the graph left by this step.
    pub waiting_time: f64,
    /// Edge count of the graph left by this step.
    pub edge_count: usize,
    pub toggles: Vec<(Edge, EdgeMove)>,
}

fn check_state(state: &ChainState) -> Result<()> {
    if !state.rates.matches(&state.graph) {
        return Err(Error::RateMismatch("state rates belong to a different graph".into()));
    }
    Ok(())
}

/// Pick an edge with probability proportional to its rate.
pub fn select_edge<R: Rng + ?Sized>(rates: &RateVector, rng: &mut R) -> Edge {
    let (_, weights) = rates.shifted_weights();
    let total: f64 = weights.iter().sum();
    assert!(total > 0.0, "all birth/death rates vanished");
    let u = rng.random::<f64>() * total;
    let mut cum = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            cum += w;
            last = k;
            if u < cum {
                return Edge::from_index(k, rates.p());
            }
        }
    }
    Edge::from_index(last, rates.p())
}

/// One single-edge birth-death jump. Rates are updated incrementally.
pub fn bd_step<R: Rng + ?Sized>(
    engine: &RateEngine<'_, '_>,
    state: &mut ChainState,
    rng: &mut R,
) -> Result<Step> {
    check_state(state)?;
    let waiting_time = state.rates.waiting_time();
    let edge_count = state.graph.edge_count();
    let e = select_edge(&state.rates, rng);
    let mv = state.graph.toggle(e);
    state.rates = engine.incremental_rates(&state.rates, e, &state.graph)?;
    Ok(Step {
        waiting_time,
        edge_count,
        toggles: vec![(e, mv)],
    })
}

/// Toggle the `n0` highest-rate edges at once. Ties in rate are ordered by a
/// uniform random key drawn per edge from `rng`.
pub fn multi_bd_step<R: Rng + ?Sized>(
    engine: &RateEngine<'_, '_>,
    state: &mut ChainState,
    n0: usize,
    rng: &mut R,
) -> Result<Step> {
    check_state(state)?;
    let p = state.graph.p();
    check_n0(n0, p)?;
    let waiting_time = state.rates.waiting_time();
    let edge_count = state.graph.edge_count();
    let keys: Vec<u64> = (0..state.rates.len()).map(|_| rng.random()).collect();
    let log_rates = state.rates.log_rates();
    let mut order: Vec<usize> = (0..log_rates.len()).collect();
    order.sort_by(|&a, &b| {
        log_rates[b]
            .total_cmp(&log_rates[a])
            .then(keys[a].cmp(&keys[b]))
    });
    let mut chosen: Vec<Edge> = order[..n0].iter().map(|&k| Edge::from_index(k, p)).collect();
    chosen.sort_unstable();
    let toggles: Vec<(Edge, EdgeMove)> = chosen.iter().map(|&e| (e, state.graph.toggle(e))).collect();
    state.rates = engine.rates_after_toggles(&state.rates, &chosen, &state.graph)?;
    Ok(Step {
        waiting_time,
        edge_count,
        toggles,
    })
}

/// A running chain bound to a scorer.
pub struct Sampler<'s, 'a> {
    engine: RateEngine<'s, 'a>,
    state: ChainState,
    seeds: SeedStream,
    mode: UpdateMode,
    iteration: u64,
}

impl<'s, 'a> Sampler<'s, 'a> {
    pub fn new(scorer: &'s Scorer<'a>, config: &SamplerConfig) -> Result<Self> {
        let p = scorer.data().p();
        config.validate(p)?;
        let engine = RateEngine::new(scorer, config.prior, config.threads)?;
        let graph = config
            .initial
            .clone()
            .unwrap_or_else(|| UndirectedGraph::empty(p));
        let state = ChainState::new(&engine, graph)?;
        Ok(Sampler {
            engine,
            state,
            seeds: SeedStream::new(config.seed),
            mode: config.mode,
            iteration: 0,
        })
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.state.graph
    }

    pub fn rates(&self) -> &RateVector {
        &self.state.rates
    }

    pub fn engine(&self) -> &RateEngine<'s, 'a> {
        &self.engine
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn step(&mut self) -> Result<Step> {
        let t = self.iteration;
        let step = match self.mode {
            UpdateMode::Single => {
                let mut rng: ChaCha8Rng = self.seeds.rng_indexed(SAMPLE_STREAM, t);
                bd_step(&self.engine, &mut self.state, &mut rng)?
            }
            UpdateMode::Multiple { n0 } => {
                let mut rng: ChaCha8Rng = self.seeds.rng_indexed(TIE_BREAK_STREAM, t);
                multi_bd_step(&self.engine, &mut self.state, n0, &mut rng)?
            }
        };
        self.iteration += 1;
        Ok(step)
    }

    /// Run `iterations` steps, appending them to `trace`.
    pub fn run_into(&mut self, iterations: usize, trace: &mut ChainTrace) -> Result<()> {
        for _ in 0..iterations {
            let step = self.step()?;
            trace.push(step.waiting_time, step.edge_count, step.toggles)?;
        }
        Ok(())
    }
}

/// Run a chain with a scorer owned by the caller (so caches can be shared).
pub fn run_with_scorer(scorer: &Scorer<'_>, config: &SamplerConfig) -> Result<ChainTrace> {
    let mut sampler = Sampler::new(scorer, config)?;
    let mut trace = ChainTrace::new(sampler.graph().clone(), config.burn_in);
    sampler.run_into(config.iterations, &mut trace)?;
    Ok(trace)
}

/// Run a chain for `config.iterations` iterations.
pub fn run(data: &CategoricalDataset, config: &SamplerConfig) -> Result<ChainTrace> {
    let scorer = Scorer::with_cache_capacity(data, config.hyper, config.cache_capacity);
    run_with_scorer(&scorer, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::all_edges;
    use rand::SeedableRng;

    fn toy_data() -> CategoricalDataset {
        CategoricalDataset::from_rows(&[
            [0, 0, 1],
            [1, 1, 0],
            [1, 1, 1],
            [0, 0, 0],
            [0, 1, 1],
            [1, 1, 0],
            [0, 0, 0],
        ])
        .unwrap()
    }

    fn rates_from(p: usize, log_rates: Vec<f64>) -> RateVector {
        let present = vec![false; log_rates.len()];
        RateVector::from_parts_for_test(p, log_rates, present)
    }

    #[test]
    fn selection_is_proportional_to_rate() {
        let rv = rates_from(3, vec![0.0, 0.25f64.ln(), f64::NEG_INFINITY]);
        assert!((rv.waiting_time() - 0.8).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut hits = [0usize; 3];
        let draws = 200_000;
        for _ in 0..draws {
            hits[select_edge(&rv, &mut rng).index(3)] += 1;
        }
        let share = hits[0] as f64 / draws as f64;
        assert!((share - 0.8).abs() < 0.005, "{share}");
        assert_eq!(hits[2], 0);

        let even = rates_from(3, vec![0.0, 0.0, f64::NEG_INFINITY]);
        assert_eq!(even.waiting_time(), 0.5);
    }

    #[test]
    fn two_vertex_chain_alternates() {
        let data = CategoricalDataset::from_rows(&[[0, 1], [1, 0], [1, 1]]).unwrap();
        let trace = run(&data, &SamplerConfig::new(20).seed(4)).unwrap();
        let mut expected = EdgeMove::Birth;
        for rec in trace.records() {
            assert_eq!(rec.toggles.len(), 1);
            assert_eq!(rec.toggles[0].1, expected);
            expected = if expected == EdgeMove::Birth {
                EdgeMove::Death
            } else {
                EdgeMove::Birth
            };
        }
    }

    #[test]
    fn single_iteration_from_empty() {
        let trace = run(&toy_data(), &SamplerConfig::new(1)).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.records()[0].edge_count, 0);
        assert_eq!(trace.records()[0].toggles[0].1, EdgeMove::Birth);
        assert_eq!(trace.final_graph().edge_count(), 1);
    }

    #[test]
    fn fixed_seed_reproduces_and_threads_do_not_matter() {
        let data = toy_data();
        let config = SamplerConfig::new(500).seed(99).burn_in(100);
        let a = run(&data, &config).unwrap();
        let b = run(&data, &config).unwrap();
        let c = run(&data, &config.clone().threads(3)).unwrap();
        let d = run(&data, &config.clone().cache_capacity(0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a, d);
        a.validate().unwrap();
        let e = run(&data, &config.clone().seed(100)).unwrap();
        assert_ne!(a, e);
    }

    #[test]
    fn config_validation() {
        let data = toy_data();
        assert!(run(&data, &SamplerConfig::new(0)).is_err());
        assert!(run(&data, &SamplerConfig::new(10).burn_in(10)).is_err());
        assert!(run(&data, &SamplerConfig::new(10).mode(UpdateMode::Multiple { n0: 1 })).is_err());
        assert!(run(&data, &SamplerConfig::new(10).mode(UpdateMode::Multiple { n0: 4 })).is_err());
        assert!(run(&data, &SamplerConfig::new(10).initial(UndirectedGraph::empty(4))).is_err());
    }

    #[test]
    fn multi_step_full_toggle_gives_complement() {
        let data = toy_data();
        let scorer = Scorer::new(&data, DirichletHyper::default());
        let engine = RateEngine::new(&scorer, GraphPrior::uniform(), 1).unwrap();
        let g = UndirectedGraph::from_edges(3, [(0, 1)]).unwrap();
        let mut state = ChainState::new(&engine, g.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let step = multi_bd_step(&engine, &mut state, 3, &mut rng).unwrap();
        assert_eq!(step.toggles.len(), 3);
        assert_eq!(state.graph, g.complement());
        assert_eq!(state.rates, engine.full_rates(&state.graph).unwrap());
    }

    #[test]
    fn multi_step_takes_top_ranked() {
        let data = toy_data();
        let scorer = Scorer::new(&data, DirichletHyper::default());
        let engine = RateEngine::new(&scorer, GraphPrior::uniform(), 1).unwrap();
        let g = UndirectedGraph::empty(3);
        let mut state = ChainState::new(&engine, g.clone()).unwrap();
        state.rates = RateVector::from_parts_for_test(3, vec![0.0, 0.5f64.ln(), 0.1f64.ln()], vec![false; 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let step = multi_bd_step(&engine, &mut state, 2, &mut rng).unwrap();
        let toggled: Vec<(usize, usize)> = step.toggles.iter().map(|(e, _)| e.endpoints()).collect();
        assert_eq!(toggled, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn multi_step_ties_are_uniform() {
        // all rates equal: every pair of edges should be chosen sometimes
        let data = CategoricalDataset::from_rows(&[[0i64, 0, 0, 0]]).unwrap();
        let scorer = Scorer::new(&data, DirichletHyper::default());
        let engine = RateEngine::new(&scorer, GraphPrior::uniform(), 1).unwrap();
        let mut seen = std::collections::HashSet::new();
        for seed in 0..200 {
            let mut state = ChainState::new(&engine, UndirectedGraph::empty(4)).unwrap();
            let uniform = RateVector::from_parts_for_test(4, vec![0.0; 6], vec![false; 6]);
            state.rates = uniform;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let step = multi_bd_step(&engine, &mut state, 2, &mut rng).unwrap();
            seen.insert(step.toggles.iter().map(|(e, _)| e.index(4)).collect::<Vec<_>>());
        }
        assert_eq!(seen.len(), 15);
    }

    #[test]
    fn rates_follow_vertex_relabeling() {
        let data = toy_data();
        let perm = [2usize, 0, 1];
        let rows: Vec<Vec<i64>> = data
            .expand_rows()
            .into_iter()
            .map(|r| {
                let mut out = vec![0i64; 3];
                for (v, &x) in r.iter().enumerate() {
                    out[perm[v]] = i64::from(x);
                }
                out
            })
            .collect();
        let permuted = CategoricalDataset::from_rows(&rows).unwrap();
        let g = UndirectedGraph::from_edges(3, [(0, 1)]).unwrap();
        let h = g.relabel(&perm).unwrap();
        let s1 = Scorer::new(&data, DirichletHyper::default());
        let s2 = Scorer::new(&permuted, DirichletHyper::default());
        let r1 = full_rates(&s1, &g, &GraphPrior::uniform()).unwrap();
        let r2 = full_rates(&s2, &h, &GraphPrior::uniform()).unwrap();
        for e in all_edges(3) {
            let f = Edge::new(perm[e.i()], perm[e.j()]).unwrap();
            assert!((r1.log_rate(e) - r2.log_rate(f)).abs() < 1e-12);
        }
    }
}

//! Birth and death rates from marginal pseudo-likelihood ratios.
//!
//! The rate of toggling edge `(i, j)` is
//! `min{ exp(Δ_i + Δ_j + δ log(β/(1-β))), 1 }` where `Δ_v` is the change in
//! the local score of `v` when the other endpoint enters or leaves its
//! neighborhood and `δ = ±1` for a birth or death. Rates are kept in log form
//! (`min{·, 0}`) so that extremely unfavourable moves never underflow to zero.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{all_edges, pair_count, Edge, EdgeMove, GraphPrior, UndirectedGraph};
use crate::score::Scorer;

/// Per-pair log-rates for one graph, in edge-index order.
#[derive(Clone, Debug, PartialEq)]
pub struct RateVector {
    p: usize,
    log_rates: Vec<f64>,
    present: Vec<bool>,
}

impl RateVector {
    #[cfg(test)]
    pub(crate) fn from_parts_for_test(p: usize, log_rates: Vec<f64>, present: Vec<bool>) -> Self {
        assert_eq!(log_rates.len(), pair_count(p));
        RateVector {
            p,
            log_rates,
            present,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.log_rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_rates.is_empty()
    }

    /// `log R_e`, always `<= 0`.
    pub fn log_rate(&self, e: Edge) -> f64 {
        self.log_rates[e.index(self.p)]
    }

    /// `R_e` in `(0, 1]` (may underflow to `0.0` in floating point for hopeless moves).
    pub fn rate(&self, e: Edge) -> f64 {
        self.log_rate(e).exp()
    }

    pub fn log_rates(&self) -> &[f64] {
        &self.log_rates
    }

    /// Birth when the edge is absent from the graph the rates belong to.
    pub fn kind(&self, e: Edge) -> EdgeMove {
        if self.present[e.index(self.p)] {
            EdgeMove::Death
        } else {
            EdgeMove::Birth
        }
    }

    /// Whether these rates were computed for graph `g`.
    pub fn matches(&self, g: &UndirectedGraph) -> bool {
        g.p() == self.p && all_edges(self.p).all(|e| g.contains(e) == self.present[e.index(self.p)])
    }

    /// Largest log-rate together with the shifted weights `exp(log R_e - max)`.
    pub(crate) fn shifted_weights(&self) -> (f64, Vec<f64>) {
        let max = self
            .log_rates
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (max, self.log_rates.iter().map(|&l| (l - max).exp()).collect())
    }

    /// Total rate `Σ_e R_e`, summed in edge-index order.
    pub fn total(&self) -> f64 {
        self.log_rates.iter().map(|l| l.exp()).sum()
    }

    /// Expected holding time `1 / Σ_e R_e`, evaluated with a max shift so the
    /// sum does not underflow when every rate is tiny.
    pub fn waiting_time(&self) -> f64 {
        let (max, weights) = self.shifted_weights();
        let sum: f64 = weights.iter().sum();
        (-max).exp() / sum
    }
}

/// Counters for rate and local-score evaluations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RateStats {
    /// Individual pair rates computed.
    pub rates: u64,
    /// Local scores requested for proposed neighborhoods (two per rate).
    pub local_scores: u64,
}

/// Computes rates against a scorer, optionally in a dedicated thread pool.
///
/// Every rate is a pure function of the graph, so results are identical for
/// any thread count.
pub struct RateEngine<'s, 'a> {
    scorer: &'s Scorer<'a>,
    prior: GraphPrior,
    pool: Option<rayon::ThreadPool>,
    rates: AtomicU64,
    local_scores: AtomicU64,
}

impl<'s, 'a> RateEngine<'s, 'a> {
    /// `threads <= 1` runs sequentially on the caller's thread.
    pub fn new(scorer: &'s Scorer<'a>, prior: GraphPrior, threads: usize) -> Result<Self> {
        let pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(RateEngine {
            scorer,
            prior,
            pool,
            rates: AtomicU64::new(0),
            local_scores: AtomicU64::new(0),
        })
    }

    pub fn scorer(&self) -> &'s Scorer<'a> {
        self.scorer
    }

    pub fn prior(&self) -> GraphPrior {
        self.prior
    }

    pub fn stats(&self) -> RateStats {
        RateStats {
            rates: self.rates.load(Ordering::Relaxed),
            local_scores: self.local_scores.load(Ordering::Relaxed),
        }
    }

    pub fn reset_stats(&self) {
        self.rates.store(0, Ordering::Relaxed);
        self.local_scores.store(0, Ordering::Relaxed);
    }

    fn check(&self, g: &UndirectedGraph) -> Result<()> {
        let p = self.scorer.data().p();
        if g.p() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: g.p(),
            });
        }
        Ok(())
    }

    fn count(&self, rates: usize) {
        self.rates.fetch_add(rates as u64, Ordering::Relaxed);
        self.local_scores.fetch_add(2 * rates as u64, Ordering::Relaxed);
    }

    #[inline]
    fn combine(&self, delta_i: f64, delta_j: f64, mv: EdgeMove) -> f64 {
        (delta_i + delta_j + self.prior.log_prior_ratio(mv)).min(0.0)
    }

    /// `log R_e(G)` for a single edge; touches only the local scores of its endpoints.
    pub fn edge_log_rate(&self, g: &UndirectedGraph, e: Edge) -> Result<f64> {
        self.check(g)?;
        if e.j() >= g.p() {
            return Err(Error::VertexOutOfRange {
                vertex: e.j(),
                p: g.p(),
            });
        }
        self.count(1);
        Ok(self.log_rate_single(g, e))
    }

    fn log_rate_single(&self, g: &UndirectedGraph, e: Edge) -> f64 {
        let (i, j) = e.endpoints();
        let mv = if g.contains(e) {
            EdgeMove::Death
        } else {
            EdgeMove::Birth
        };
        let di = self.scorer.toggle_delta(i, g.nbrs(i), j);
        let dj = self.scorer.toggle_delta(j, g.nbrs(j), i);
        self.combine(di, dj, mv)
    }

    /// `R_e(G)` in `(0, 1]`.
    pub fn edge_rate(&self, g: &UndirectedGraph, e: Edge) -> Result<f64> {
        Ok(self.edge_log_rate(g, e)?.exp())
    }

    fn run<R: Send, F: FnOnce() -> R + Send>(&self, f: F) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    /// Score deltas `Δ_v(u)` for every `u != v`, stored at position `u - (u > v)`.
    fn delta_row(&self, g: &UndirectedGraph, v: usize) -> Vec<f64> {
        let others: Vec<usize> = (0..g.p()).filter(|&u| u != v).collect();
        self.scorer.toggle_deltas(v, g.nbrs(v), &others)
    }

    fn rows_for(&self, g: &UndirectedGraph, vertices: &[usize]) -> Vec<Vec<f64>> {
        let parallel = self.pool.is_some();
        self.run(|| {
            if parallel {
                vertices.par_iter().map(|&v| self.delta_row(g, v)).collect()
            } else {
                vertices.iter().map(|&v| self.delta_row(g, v)).collect()
            }
        })
    }

    /// Rates for every unordered pair of `g`.
    pub fn full_rates(&self, g: &UndirectedGraph) -> Result<RateVector> {
        self.check(g)?;
        let p = g.p();
        let vertices: Vec<usize> = (0..p).collect();
        let rows = self.rows_for(g, &vertices);
        let mut log_rates = Vec::with_capacity(pair_count(p));
        let mut present = Vec::with_capacity(pair_count(p));
        for e in all_edges(p) {
            let (i, j) = e.endpoints();
            let has = g.contains(e);
            let mv = if has { EdgeMove::Death } else { EdgeMove::Birth };
            log_rates.push(self.combine(rows[i][j - 1], rows[j][i], mv));
            present.push(has);
        }
        self.count(log_rates.len());
        Ok(RateVector {
            p,
            log_rates,
            present,
        })
    }

    /// Update `prev` after toggling a single edge to reach `g`. Only the
    /// `2p - 3` pairs incident to an endpoint of `toggled` are recomputed.
    pub fn incremental_rates(
        &self,
        prev: &RateVector,
        toggled: Edge,
        g: &UndirectedGraph,
    ) -> Result<RateVector> {
        self.rates_after_toggles(prev, &[toggled], g)
    }

    /// Update `prev` after toggling every edge in `toggled` to reach `g`.
    /// Pairs incident to any toggled endpoint are recomputed.
    pub fn rates_after_toggles(
        &self,
        prev: &RateVector,
        toggled: &[Edge],
        g: &UndirectedGraph,
    ) -> Result<RateVector> {
        self.check(g)?;
        let p = g.p();
        if prev.p != p {
            return Err(Error::RateMismatch(format!(
                "rates are for {} vertices, graph has {p}",
                prev.p
            )));
        }
        let mut expected = prev.present.clone();
        for e in toggled {
            if e.j() >= p {
                return Err(Error::VertexOutOfRange { vertex: e.j(), p });
            }
            let idx = e.index(p);
            expected[idx] = !expected[idx];
        }
        if all_edges(p).any(|e| g.contains(e) != expected[e.index(p)]) {
            return Err(Error::RateMismatch(
                "graph does not differ from the rate vector's graph by exactly the toggled edges"
                    .into(),
            ));
        }

        let mut affected: Vec<usize> = toggled.iter().flat_map(|e| [e.i(), e.j()]).collect();
        affected.sort_unstable();
        affected.dedup();
        if affected.is_empty() {
            return Ok(prev.clone());
        }
        let rows = self.rows_for(g, &affected);
        let row_of = |v: usize| affected.binary_search(&v).ok().map(|pos| &rows[pos]);

        // Every other vertex only needs deltas toward the affected set, all
        // taken against its unchanged neighborhood.
        let parallel = self.pool.is_some();
        let partial_for = |v: usize| {
            if row_of(v).is_some() {
                Vec::new()
            } else {
                self.scorer.toggle_deltas(v, g.nbrs(v), &affected)
            }
        };
        let partial: Vec<Vec<f64>> = self.run(|| {
            if parallel {
                (0..p).into_par_iter().map(partial_for).collect()
            } else {
                (0..p).map(partial_for).collect()
            }
        });

        let pairs: Vec<Edge> = all_edges(p)
            .filter(|e| affected.binary_search(&e.i()).is_ok() || affected.binary_search(&e.j()).is_ok())
            .collect();
        let delta = |v: usize, u: usize| match row_of(v) {
            Some(row) => row[u - usize::from(u > v)],
            None => partial[v][affected.binary_search(&u).expect("pair touches the affected set")],
        };
        let fresh: Vec<f64> = pairs
            .iter()
            .map(|e| {
                let (i, j) = e.endpoints();
                let mv = if g.contains(*e) {
                    EdgeMove::Death
                } else {
                    EdgeMove::Birth
                };
                self.combine(delta(i, j), delta(j, i), mv)
            })
            .collect();
        let mut next = RateVector {
            p,
            log_rates: prev.log_rates.clone(),
            present: expected,
        };
        for (e, l) in pairs.iter().zip(fresh) {
            next.log_rates[e.index(p)] = l;
        }
        self.count(pairs.len());
        Ok(next)
    }
}

/// Single-edge rate without an engine.
pub fn edge_rate(scorer: &Scorer<'_>, g: &UndirectedGraph, e: Edge, prior: &GraphPrior) -> Result<f64> {
    RateEngine::new(scorer, *prior, 1)?.edge_rate(g, e)
}

/// Full rate vector without an engine, evaluated sequentially.
pub fn full_rates(scorer: &Scorer<'_>, g: &UndirectedGraph, prior: &GraphPrior) -> Result<RateVector> {
    RateEngine::new(scorer, *prior, 1)?.full_rates(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::CategoricalDataset;
    use crate::score::{log_posterior_mpl, DirichletHyper};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform4() -> CategoricalDataset {
        CategoricalDataset::from_rows(&[[0, 0], [0, 1], [1, 0], [1, 1]]).unwrap()
    }

    fn random_data(p: usize, n: usize, seed: u64) -> CategoricalDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<i64>> = (0..n)
            .map(|_| {
                let mut row: Vec<i64> = Vec::with_capacity(p);
                for v in 0..p {
                    // mild chain dependence so scores are not all flat
                    let prev = if v > 0 { row[v - 1] } else { 0 };
                    let flip = rng.random::<f64>() < 0.3;
                    let x = if v > 0 && !flip { prev } else { rng.random_range(0..2) };
                    row.push(x);
                }
                row
            })
            .collect();
        CategoricalDataset::from_rows(&rows).unwrap()
    }

    fn random_graph(p: usize, density: f64, rng: &mut ChaCha8Rng) -> UndirectedGraph {
        let mut g = UndirectedGraph::empty(p);
        for e in all_edges(p) {
            if rng.random::<f64>() < density {
                g.toggle(e);
            }
        }
        g
    }

    #[test]
    fn rate_count_matches_pairs() {
        let data = random_data(3, 30, 1);
        let scorer = Scorer::new(&data, DirichletHyper::default());
        let rates = full_rates(&scorer, &UndirectedGraph::empty(3), &GraphPrior::uniform()).unwrap();
        assert_eq!(rates.len(), 3);
        assert_eq!(pair_count(214), 22791);
    }

    #[test]
    fn independent_uniform_birth_rate_below_one() {
        let data = uniform4();
        let hyper = DirichletHyper::default();
        let scorer = Scorer::new(&data, hyper);
        let g = UndirectedGraph::empty(2);
        let e = Edge::new(0, 1).unwrap();
        let rate = edge_rate(&scorer, &g, e, &GraphPrior::uniform()).unwrap();
        let h = g.toggle_edge(0, 1).unwrap();
        let ratio = (log_posterior_mpl(&data, &h, &hyper, &GraphPrior::uniform()).unwrap()
            - log_posterior_mpl(&data, &g, &hyper, &GraphPrior::uniform()).unwrap())
        .exp();
        assert!(rate < 1.0);
        assert!((rate - ratio).abs() < 1e-12);
        // and the reverse move is favourable, so its rate clamps at one
        assert_eq!(edge_rate(&scorer, &h, e, &GraphPrior::uniform()).unwrap(), 1.0);
    }

    #[test]
    fn min_form_balance_identity() {
        let data = random_data(5, 80, 3);
        let hyper = DirichletHyper::default();
        let prior = GraphPrior::new(0.3).unwrap();
        let scorer = Scorer::new(&data, hyper);
        let engine = RateEngine::new(&scorer, prior, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let g = random_graph(5, 0.4, &mut rng);
            for e in all_edges(5).filter(|e| !g.contains(*e)) {
                let h = g.toggle_edge(e.i(), e.j()).unwrap();
                let lp_g = log_posterior_mpl(&data, &g, &hyper, &prior).unwrap();
                let lp_h = log_posterior_mpl(&data, &h, &hyper, &prior).unwrap();
                let lhs = engine.edge_log_rate(&g, e).unwrap() + lp_g;
                let rhs = engine.edge_log_rate(&h, e).unwrap() + lp_h;
                assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn incremental_equals_full_bitwise() {
        let data = random_data(12, 200, 5);
        let scorer = Scorer::new(&data, DirichletHyper::default());
        let cold = Scorer::with_cache_capacity(&data, DirichletHyper::default(), 0);
        let prior = GraphPrior::new(0.2).unwrap();
        let engine = RateEngine::new(&scorer, prior, 1).unwrap();
        let reference = RateEngine::new(&cold, prior, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut g = random_graph(12, 0.2, &mut rng);
        let mut rates = engine.full_rates(&g).unwrap();
        for _ in 0..100 {
            let a = rng.random_range(0..12);
            let b = (a + rng.random_range(1..12)) % 12;
            let e = Edge::new(a, b).unwrap();
            g.toggle(e);
            engine.reset_stats();
            rates = engine.incremental_rates(&rates, e, &g).unwrap();
            assert_eq!(engine.stats().rates, 2 * 12 - 3);
            let full = reference.full_rates(&g).unwrap();
            let bits = |r: &RateVector| r.log_rates().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&rates), bits(&full));
            assert!(rates.matches(&g));
        }
    }

    #[test]
    fn small_p_recomputes_everything() {
        let data = random_data(3, 40, 2);
        let scorer = Scorer::new(&data, DirichletHyper::default());
        let engine = RateEngine::new(&scorer, GraphPrior::uniform(), 1).unwrap();
        let g = UndirectedGraph::empty(3);
        let rates = engine.full_rates(&g).unwrap();
        let e = Edge::new(0, 1).unwrap();
        let h = g.toggle_edge(0, 1).unwrap();
        engine.reset_stats();
        engine.incremental_rates(&rates, e, &h).unwrap();
        assert_eq!(engine.stats(), RateStats { rates: 3, local_scores: 6 });
    }

    #[test]
    fn incremental_rejects_mismatched_graph() {
        let data = random_data(4, 40, 2);
        let scorer = Scorer::new(&data, DirichletHyper::default());
        let engine = RateEngine::new(&scorer, GraphPrior::uniform(), 1).unwrap();
        let g = UndirectedGraph::empty(4);
        let rates = engine.full_rates(&g).unwrap();
        let e = Edge::new(0, 1).unwrap();
        // graph not toggled
        assert!(matches!(
            engine.incremental_rates(&rates, e, &g),
            Err(Error::RateMismatch(_))
        ));
        let wrong = g.toggle_edge(2, 3).unwrap();
        assert!(engine.incremental_rates(&rates, e, &wrong).is_err());
    }

    #[test]
    fn threads_do_not_change_rates() {
        let data = random_data(15, 300, 8);
        let prior = GraphPrior::new(0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_graph(15, 0.3, &mut rng);
        let s1 = Scorer::new(&data, DirichletHyper::default());
        let s4 = Scorer::new(&data, DirichletHyper::default());
        let single = RateEngine::new(&s1, prior, 1).unwrap().full_rates(&g).unwrap();
        let multi = RateEngine::new(&s4, prior, 4).unwrap().full_rates(&g).unwrap();
        assert_eq!(single, multi);
    }

    #[test]
    fn waiting_time_examples() {
        let rv = RateVector {
            p: 2,
            log_rates: vec![0.0],
            present: vec![false],
        };
        assert_eq!(rv.waiting_time(), 1.0);
        let rv = RateVector {
            p: 3,
            log_rates: vec![0.0, 0.25f64.ln(), -2000.0],
            present: vec![false; 3],
        };
        assert!((rv.waiting_time() - 0.8).abs() < 1e-15);
        let tiny = RateVector {
            p: 3,
            log_rates: vec![-700.0, -701.0, -702.0],
            present: vec![false; 3],
        };
        assert!(tiny.waiting_time().is_finite() && tiny.waiting_time() > 0.0);
    }
}

//! Marginal pseudo-likelihood scores under symmetric Dirichlet priors.
//!
//! The local score of vertex `i` with neighborhood `N` is the log of the
//! Dirichlet-multinomial marginal likelihood of `x_i` given the observed
//! configurations of `x_N`:
//!
//! ```text
//! sum_l [ lnΓ(α_{+l}) - lnΓ(α_{+l} + n_{+l}) + sum_k ( lnΓ(α_{kl} + n_{kl}) - lnΓ(α_{kl}) ) ]
//! ```
//!
//! Only observed configurations `l` are visited; unobserved ones contribute a
//! factor of exactly one.
//!
//! Cells are grouped into neighborhood configurations by successive partition
//! refinement, one conditioning variable at a time. Group labels are assigned
//! in order of first appearance in the cell scan, so the labelling (and hence
//! the summation order) depends only on the partition itself. Scores computed
//! by refining a cached partition are therefore bit-identical to scores built
//! from scratch.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};

use lru::LruCache;
use parking_lot::Mutex;
use statrs::function::gamma::ln_gamma;

use crate::data::{CategoricalDataset, Level};
use crate::error::{Error, Result};
use crate::graph::{GraphPrior, UndirectedGraph};

/// Default number of cached local scores.
pub const DEFAULT_CACHE_CAPACITY: usize = 1 << 20;

/// Symmetric Dirichlet pseudo-count applied to every `α_{i,kl}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirichletHyper {
    alpha: f64,
}

impl DirichletHyper {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Dirichlet pseudo-count must be positive and finite, got {alpha}"
            )));
        }
        Ok(DirichletHyper { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for DirichletHyper {
    fn default() -> Self {
        DirichletHyper { alpha: 0.5 }
    }
}

/// Cells grouped by their configuration over a set of variables.
#[derive(Clone, Debug)]
pub(crate) struct Partition {
    ids: Vec<u32>,
    groups: usize,
}

impl Partition {
    fn trivial(n_cells: usize) -> Self {
        Partition {
            ids: vec![0; n_cells],
            groups: usize::from(n_cells > 0),
        }
    }

    fn refine(&self, column: &[Level], cardinality: usize) -> Self {
        let mut lookup = vec![u32::MAX; self.groups * cardinality];
        let mut ids = Vec::with_capacity(self.ids.len());
        let mut next = 0u32;
        for (&g, &x) in self.ids.iter().zip(column) {
            let slot = &mut lookup[g as usize * cardinality + x as usize];
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
            ids.push(*slot);
        }
        Partition {
            ids,
            groups: next as usize,
        }
    }

    fn build(data: &CategoricalDataset, nbd: &[usize]) -> Self {
        nbd.iter().fold(Partition::trivial(data.n_cells()), |part, &v| {
            part.refine(data.column(v), data.cardinality(v))
        })
    }
}

/// `lnΓ(α + n)` and `lnΓ(r α + n)` for integer `n`, tabulated up to the sample size.
#[derive(Debug)]
struct LogGammaTable {
    alpha: f64,
    level: Vec<f64>,
    // indexed by cardinality
    total: Vec<Vec<f64>>,
}

const MAX_TABLE: u64 = 1 << 24;

impl LogGammaTable {
    fn new(data: &CategoricalDataset, alpha: f64) -> Self {
        let len = data.n().min(MAX_TABLE) as usize + 1;
        let level = (0..len).map(|n| ln_gamma(alpha + n as f64)).collect();
        let max_r = data.cardinalities().iter().copied().max().unwrap_or(0);
        let mut total = vec![Vec::new(); max_r + 1];
        for &r in data.cardinalities() {
            if total[r].is_empty() {
                let a = r as f64 * alpha;
                total[r] = (0..len).map(|n| ln_gamma(a + n as f64)).collect();
            }
        }
        LogGammaTable {
            alpha,
            level,
            total,
        }
    }

    #[inline]
    fn level(&self, n: u64) -> f64 {
        match self.level.get(n as usize) {
            Some(&v) => v,
            None => ln_gamma(self.alpha + n as f64),
        }
    }

    #[inline]
    fn total(&self, r: usize, n: u64) -> f64 {
        match self.total[r].get(n as usize) {
            Some(&v) => v,
            None => ln_gamma(r as f64 * self.alpha + n as f64),
        }
    }
}

trait LogGammaSource {
    fn level(&self, n: u64) -> f64;
    fn total(&self, r: usize, n: u64) -> f64;
}

impl LogGammaSource for LogGammaTable {
    fn level(&self, n: u64) -> f64 {
        LogGammaTable::level(self, n)
    }
    fn total(&self, r: usize, n: u64) -> f64 {
        LogGammaTable::total(self, r, n)
    }
}

struct DirectLogGamma(f64);

impl LogGammaSource for DirectLogGamma {
    fn level(&self, n: u64) -> f64 {
        ln_gamma(self.0 + n as f64)
    }
    fn total(&self, r: usize, n: u64) -> f64 {
        ln_gamma(r as f64 * self.0 + n as f64)
    }
}

fn score_partition<L: LogGammaSource>(
    data: &CategoricalDataset,
    i: usize,
    part: &Partition,
    lg: &L,
) -> f64 {
    let r = data.cardinality(i);
    let mut table = vec![0u64; part.groups * r];
    for ((&g, &x), &count) in part.ids.iter().zip(data.column(i)).zip(data.counts()) {
        table[g as usize * r + x as usize] += count;
    }
    let prior_level = lg.level(0);
    let prior_total = lg.total(r, 0);
    let mut score = 0.0;
    for row in table.chunks_exact(r) {
        let mut n_plus = 0;
        let mut term = 0.0;
        for &n in row {
            if n > 0 {
                term += lg.level(n) - prior_level;
                n_plus += n;
            }
        }
        score += prior_total - lg.total(r, n_plus) + term;
    }
    score
}

/// Log marginal pseudo-likelihood term `log Pr(x_i | x_nbd)`.
pub fn local_log_score(
    data: &CategoricalDataset,
    i: usize,
    nbd: &[usize],
    hyper: &DirichletHyper,
) -> Result<f64> {
    let nbd = data.check_neighborhood(i, nbd)?;
    let part = Partition::build(data, &nbd);
    Ok(score_partition(data, i, &part, &DirectLogGamma(hyper.alpha)))
}

fn check_dims(data: &CategoricalDataset, g: &UndirectedGraph) -> Result<()> {
    if data.p() != g.p() {
        return Err(Error::DimensionMismatch {
            expected: data.p(),
            found: g.p(),
        });
    }
    Ok(())
}

/// Log marginal pseudo-likelihood of a graph: the sum of local scores.
pub fn mpl_log(data: &CategoricalDataset, g: &UndirectedGraph, hyper: &DirichletHyper) -> Result<f64> {
    check_dims(data, g)?;
    (0..g.p())
        .map(|i| local_log_score(data, i, g.nbrs(i), hyper))
        .sum()
}

/// Unnormalized log posterior `mpl_log + |E| log(β / (1 - β))`.
pub fn log_posterior_mpl(
    data: &CategoricalDataset,
    g: &UndirectedGraph,
    hyper: &DirichletHyper,
    prior: &GraphPrior,
) -> Result<f64> {
    Ok(mpl_log(data, g, hyper)? + prior.log_prior(g))
}

/// Counters describing cache use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub len: usize,
}

type CacheKey = (u32, Box<[u32]>);

const SHARDS: usize = 16;

/// Bounded, thread-safe memo of local scores keyed by `(vertex, sorted neighborhood)`.
pub struct LocalScoreCache {
    shards: Vec<Mutex<LruCache<CacheKey, f64>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl LocalScoreCache {
    /// `capacity` must be positive; it is split evenly across internal shards.
    pub fn new(capacity: usize) -> Self {
        let per_shard = NonZeroUsize::new(capacity.div_ceil(SHARDS).max(1)).unwrap();
        LocalScoreCache {
            shards: (0..SHARDS)
                .map(|_| Mutex::new(LruCache::new(per_shard)))
                .collect(),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    fn shard(&self, key: &CacheKey) -> &Mutex<LruCache<CacheKey, f64>> {
        let mut h = DefaultHasher::new();
        key.hash(&mut h);
        &self.shards[h.finish() as usize % SHARDS]
    }

    fn get(&self, key: &CacheKey) -> Option<f64> {
        let found = self.shard(key).lock().get(key).copied();
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    fn insert(&self, key: CacheKey, value: f64) {
        self.shard(&key).lock().put(key, value);
    }

    pub fn len(&self) -> usize {
        self.shards.iter().map(|s| s.lock().len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            len: self.len(),
        }
    }
}

fn key(i: usize, nbd: &[usize]) -> CacheKey {
    (i as u32, nbd.iter().map(|&v| v as u32).collect())
}

/// Scoring context bound to one dataset: tabulated log-Gamma values plus an
/// optional shared cache. Safe to use from many threads at once.
pub struct Scorer<'a> {
    data: &'a CategoricalDataset,
    hyper: DirichletHyper,
    table: LogGammaTable,
    cache: Option<LocalScoreCache>,
    computed: AtomicU64,
}

impl<'a> Scorer<'a> {
    pub fn new(data: &'a CategoricalDataset, hyper: DirichletHyper) -> Self {
        Self::with_cache_capacity(data, hyper, DEFAULT_CACHE_CAPACITY)
    }

    /// A capacity of zero disables caching.
    pub fn with_cache_capacity(data: &'a CategoricalDataset, hyper: DirichletHyper, capacity: usize) -> Self {
        Scorer {
            data,
            hyper,
            table: LogGammaTable::new(data, hyper.alpha),
            cache: (capacity > 0).then(|| LocalScoreCache::new(capacity)),
            computed: AtomicU64::new(0),
        }
    }

    pub fn data(&self) -> &'a CategoricalDataset {
        self.data
    }

    pub fn hyper(&self) -> DirichletHyper {
        self.hyper
    }

    pub fn cache_stats(&self) -> Option<CacheStats> {
        self.cache.as_ref().map(LocalScoreCache::stats)
    }

    /// Number of local scores actually computed (cache misses included).
    pub fn computed(&self) -> u64 {
        self.computed.load(Ordering::Relaxed)
    }

    /// Validated local score.
    pub fn local_log_score(&self, i: usize, nbd: &[usize]) -> Result<f64> {
        let nbd = self.data.check_neighborhood(i, nbd)?;
        Ok(self.score(i, &nbd))
    }

    /// Local score for a sorted, validated neighborhood.
    pub fn score(&self, i: usize, nbd: &[usize]) -> f64 {
        self.cached(i, nbd, || Partition::build(self.data, nbd))
    }

    fn cached<F: FnOnce() -> Partition>(&self, i: usize, nbd: &[usize], partition: F) -> f64 {
        let Some(cache) = &self.cache else {
            return self.compute(i, &partition());
        };
        let k = key(i, nbd);
        if let Some(v) = cache.get(&k) {
            return v;
        }
        let v = self.compute(i, &partition());
        cache.insert(k, v);
        v
    }

    fn compute(&self, i: usize, part: &Partition) -> f64 {
        self.computed.fetch_add(1, Ordering::Relaxed);
        score_partition(self.data, i, part, &self.table)
    }

    /// Change in the local score of `v` when `k` is added to or removed from `nbd`.
    pub fn toggle_delta(&self, v: usize, nbd: &[usize], k: usize) -> f64 {
        let toggled = toggled(nbd, k);
        self.score(v, &toggled) - self.score(v, nbd)
    }

    /// [`toggle_delta`](Self::toggle_delta) for every `k` in `candidates`,
    /// sharing one partition of `nbd` across all additions.
    pub fn toggle_deltas(&self, v: usize, nbd: &[usize], candidates: &[usize]) -> Vec<f64> {
        let base = self.score(v, nbd);
        let mut base_part: Option<Partition> = None;
        candidates
            .iter()
            .map(|&k| {
                let new_nbd = toggled(nbd, k);
                let adding = new_nbd.len() > nbd.len();
                let score = self.cached(v, &new_nbd, || {
                    if adding {
                        base_part
                            .get_or_insert_with(|| Partition::build(self.data, nbd))
                            .refine(self.data.column(k), self.data.cardinality(k))
                    } else {
                        Partition::build(self.data, &new_nbd)
                    }
                });
                score - base
            })
            .collect()
    }

    pub fn mpl_log(&self, g: &UndirectedGraph) -> Result<f64> {
        check_dims(self.data, g)?;
        Ok((0..g.p()).map(|i| self.score(i, g.nbrs(i))).sum())
    }

    pub fn log_posterior(&self, g: &UndirectedGraph, prior: &GraphPrior) -> Result<f64> {
        Ok(self.mpl_log(g)? + prior.log_prior(g))
    }
}

/// Sorted copy of `nbd` with `k` inserted or removed.
pub(crate) fn toggled(nbd: &[usize], k: usize) -> Vec<usize> {
    let mut out = nbd.to_vec();
    match out.binary_search(&k) {
        Ok(pos) => {
            out.remove(pos);
        }
        Err(pos) => out.insert(pos, k),
    }
    out
}

//! Centrality measures on an estimated graph.

use std::collections::VecDeque;
use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;

pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOL: f64 = 1e-10;
const PAGERANK_MAX_ITER: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Centrality {
    Degree,
    Closeness,
    Betweenness,
    PageRank,
}

impl Centrality {
    pub const ALL: [Centrality; 4] = [
        Centrality::Degree,
        Centrality::Closeness,
        Centrality::Betweenness,
        Centrality::PageRank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Centrality::Degree => "degree",
            Centrality::Closeness => "closeness",
            Centrality::Betweenness => "betweenness",
            Centrality::PageRank => "pagerank",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn compute(self, g: &UndirectedGraph) -> Vec<f64> {
        match self {
            Centrality::Degree => degree_centrality(g),
            Centrality::Closeness => closeness_centrality(g),
            Centrality::Betweenness => betweenness_centrality(g),
            Centrality::PageRank => pagerank(g, PAGERANK_DAMPING, PAGERANK_TOL),
        }
    }
}

pub fn degree_centrality(g: &UndirectedGraph) -> Vec<f64> {
    (0..g.p()).map(|v| g.nbrs(v).len() as f64).collect()
}

fn bfs_distances(g: &UndirectedGraph, s: usize, dist: &mut [usize]) {
    dist.fill(usize::MAX);
    dist[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        for &w in g.nbrs(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
}

/// Harmonic closeness: sum of inverse distances to every other reachable
/// vertex, so disconnected graphs are handled without special cases.
pub fn closeness_centrality(g: &UndirectedGraph) -> Vec<f64> {
    let p = g.p();
    let mut dist = vec![0; p];
    (0..p)
        .map(|s| {
            bfs_distances(g, s, &mut dist);
            dist.iter()
                .filter(|&&d| d != 0 && d != usize::MAX)
                .map(|&d| 1.0 / d as f64)
                .sum()
        })
        .collect()
}

/// Unnormalized shortest-path betweenness (Brandes), each unordered pair
/// counted once.
pub fn betweenness_centrality(g: &UndirectedGraph) -> Vec<f64> {
    let p = g.p();
    let mut cb = vec![0.0; p];
    let mut sigma = vec![0.0f64; p];
    let mut dist = vec![-1i64; p];
    let mut delta = vec![0.0; p];
    let mut order = Vec::with_capacity(p);
    let mut queue = VecDeque::new();
    for s in 0..p {
        sigma.fill(0.0);
        dist.fill(-1);
        delta.fill(0.0);
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.nbrs(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                }
            }
        }
        for &w in order.iter().rev() {
            for &v in g.nbrs(w) {
                if dist[v] == dist[w] - 1 {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    cb.iter_mut().for_each(|c| *c /= 2.0);
    cb
}

/// Power-iteration PageRank. Isolated vertices spread their mass uniformly.
pub fn pagerank(g: &UndirectedGraph, damping: f64, tol: f64) -> Vec<f64> {
    pagerank_with_status(g, damping, tol).0
}

/// PageRank plus whether the max-norm change fell below `tol` before the
/// iteration cap. A capped run still returns its last iterate.
pub fn pagerank_with_status(g: &UndirectedGraph, damping: f64, tol: f64) -> (Vec<f64>, bool) {
    let p = g.p();
    if p == 0 {
        return (Vec::new(), true);
    }
    let n = p as f64;
    let mut rank = vec![1.0 / n; p];
    let mut next = vec![0.0; p];
    for _ in 0..PAGERANK_MAX_ITER {
        let dangling: f64 = (0..p).filter(|&v| g.nbrs(v).is_empty()).map(|v| rank[v]).sum();
        let base = (1.0 - damping) / n + damping * dangling / n;
        next.fill(base);
        for v in 0..p {
            let nb = g.nbrs(v);
            if !nb.is_empty() {
                let share = damping * rank[v] / nb.len() as f64;
                for &w in nb {
                    next[w] += share;
                }
            }
        }
        let diff = rank
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut rank, &mut next);
        if diff < tol {
            return (rank, true);
        }
    }
    (rank, false)
}

/// All four measures for one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralityReport {
    pub labels: Vec<String>,
    pub degree: Vec<f64>,
    pub closeness: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub pagerank: Vec<f64>,
    pub pagerank_converged: bool,
}

impl CentralityReport {
    /// Vertices are labelled by index when `labels` is empty.
    pub fn compute(g: &UndirectedGraph, labels: &[String]) -> Result<Self> {
        let labels = if labels.is_empty() {
            (0..g.p()).map(|v| v.to_string()).collect()
        } else if labels.len() == g.p() {
            labels.to_vec()
        } else {
            return Err(Error::DimensionMismatch {
                expected: g.p(),
                found: labels.len(),
            });
        };
        let (pagerank, pagerank_converged) = pagerank_with_status(g, PAGERANK_DAMPING, PAGERANK_TOL);
        Ok(CentralityReport {
            labels,
            degree: degree_centrality(g),
            closeness: closeness_centrality(g),
            betweenness: betweenness_centrality(g),
            pagerank,
            pagerank_converged,
        })
    }

    pub fn values(&self, measure: Centrality) -> &[f64] {
        match measure {
            Centrality::Degree => &self.degree,
            Centrality::Closeness => &self.closeness,
            Centrality::Betweenness => &self.betweenness,
            Centrality::PageRank => &self.pagerank,
        }
    }

    pub fn top_k(&self, measure: Centrality, k: usize) -> Vec<(usize, f64)> {
        top_k(self.values(measure), k)
    }

    /// `vertex,label,degree,closeness,betweenness,pagerank` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["vertex", "label", "degree", "closeness", "betweenness", "pagerank"])?;
        for v in 0..self.labels.len() {
            w.write_record([
                v.to_string(),
                self.labels[v].clone(),
                self.degree[v].to_string(),
                self.closeness[v].to_string(),
                self.betweenness[v].to_string(),
                self.pagerank[v].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The `k` highest-scoring vertices, ties broken by lower vertex index.
pub fn top_k(scores: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.into_iter().take(k).map(|v| (v, scores[v])).collect()
}

//! Posterior summaries of a chain trace.
//!
//! Every sampled graph is weighted by its expected holding time, so the
//! posterior probability of an edge is the share of total waiting time spent
//! in graphs containing it.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::{all_edges, pair_count, Edge, UndirectedGraph};
use crate::sampler::ChainTrace;

/// Largest vertex count accepted by [`graph_posterior`] without an override.
pub const GRAPH_POSTERIOR_SOFT_LIMIT: usize = 25;

/// Symmetric matrix of edge inclusion probabilities with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProbMatrix {
    p: usize,
    upper: Vec<f64>,
}

impl EdgeProbMatrix {
    pub fn zeros(p: usize) -> Self {
        EdgeProbMatrix {
            p,
            upper: vec![0.0; pair_count(p)],
        }
    }

    /// From upper-triangle values in edge-index order.
    pub fn from_upper(p: usize, upper: Vec<f64>) -> Result<Self> {
        if upper.len() != pair_count(p) {
            return Err(Error::DimensionMismatch {
                expected: pair_count(p),
                found: upper.len(),
            });
        }
        if let Some(v) = upper.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidData(format!("probability {v} outside [0, 1]")));
        }
        Ok(EdgeProbMatrix { p, upper })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Entry `(i, j)`; zero on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.upper[Edge::new(i, j).expect("distinct").index(self.p)]
        }
    }

    pub fn prob(&self, e: Edge) -> f64 {
        self.upper[e.index(self.p)]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Sum of the upper triangle, i.e. the expected number of edges.
    pub fn sum(&self) -> f64 {
        self.upper.iter().sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.p)
            .map(|i| (0..self.p).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// `i,j,prob` rows for the upper triangle.
    pub fn write_pairs_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "prob"])?;
        for e in all_edges(self.p) {
            w.write_record([e.i().to_string(), e.j().to_string(), self.prob(e).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read the `i,j,prob` format. Every pair must appear exactly once, which
    /// fixes `p`.
    pub fn read_pairs_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for (k, rec) in reader.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            if rec.len() != 3 {
                return Err(Error::parse(line, "expected i,j,prob"));
            }
            let i: usize = rec[0].trim().parse().map_err(|_| Error::parse(line, "bad vertex"))?;
            let j: usize = rec[1].trim().parse().map_err(|_| Error::parse(line, "bad vertex"))?;
            let prob: f64 = rec[2].trim().parse().map_err(|_| Error::parse(line, "bad probability"))?;
            rows.push((Edge::new(i, j)?, prob));
        }
        let p = rows.iter().map(|(e, _)| e.j() + 1).max().unwrap_or(0);
        let mut upper = vec![f64::NAN; pair_count(p)];
        for (e, prob) in rows {
            let slot = &mut upper[e.index(p)];
            if !slot.is_nan() {
                return Err(Error::InvalidData(format!("pair {e} listed twice")));
            }
            *slot = prob;
        }
        if upper.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidData("edge probability list is missing pairs".into()));
        }
        Self::from_upper(p, upper)
    }

    /// Full `p x p` matrix, one row per line, for heatmaps.
    pub fn write_dense_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for row in self.to_dense() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn effective_start(trace: &ChainTrace, skip_burnin: bool) -> Result<usize> {
    let start = if skip_burnin { trace.burn_in() } else { 0 };
    if start >= trace.len() {
        return Err(Error::EmptyTrace { burn_in: start });
    }
    Ok(start)
}

/// Waiting-time weighted edge inclusion probabilities.
pub fn edge_inclusion_probs(trace: &ChainTrace, skip_burnin: bool) -> Result<EdgeProbMatrix> {
    let start = effective_start(trace, skip_burnin)?;
    let p = trace.p();
    let mut acc = vec![0.0; pair_count(p)];
    let mut total = 0.0;
    let mut t = 0;
    trace.for_each_state(|g, rec| {
        if t >= start {
            total += rec.waiting_time;
            for e in g.edges() {
                acc[e.index(p)] += rec.waiting_time;
            }
        }
        t += 1;
    });
    let upper = acc.into_iter().map(|a| (a / total).min(1.0)).collect();
    Ok(EdgeProbMatrix { p, upper })
}

/// Edges whose probability is strictly above `threshold`.
pub fn median_graph(probs: &EdgeProbMatrix, threshold: f64) -> Result<UndirectedGraph> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    UndirectedGraph::from_edges(
        probs.p,
        all_edges(probs.p)
            .filter(|&e| probs.prob(e) > threshold)
            .map(|e| e.endpoints()),
    )
}

/// Estimated posterior over the distinct graphs visited by a chain.
#[derive(Clone, Debug)]
pub struct GraphPosterior {
    p: usize,
    entries: Vec<(UndirectedGraph, f64)>,
}

impl GraphPosterior {
    /// Graphs ordered by descending probability, ties by edge list.
    pub fn entries(&self) -> &[(UndirectedGraph, f64)] {
        &self.entries
    }

    pub fn probability(&self, g: &UndirectedGraph) -> f64 {
        self.entries
            .iter()
            .find(|(h, _)| h == g)
            .map_or(0.0, |(_, w)| *w)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Marginal inclusion probability of every edge.
    pub fn edge_marginals(&self) -> EdgeProbMatrix {
        let mut upper = vec![0.0; pair_count(self.p)];
        for (g, w) in &self.entries {
            for e in g.edges() {
                upper[e.index(self.p)] += w;
            }
        }
        EdgeProbMatrix {
            p: self.p,
            upper: upper.into_iter().map(|v: f64| v.min(1.0)).collect(),
        }
    }

    /// `edges,prob` rows with edges written as `i-j;i-j`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["edges", "prob"])?;
        for (g, prob) in &self.entries {
            let edges: Vec<String> = g.edges().map(|e| format!("{}-{}", e.i(), e.j())).collect();
            w.write_record([edges.join(";"), prob.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Total variation distance to another distribution over graphs.
    pub fn total_variation(&self, other: &[(UndirectedGraph, f64)]) -> f64 {
        let mut diff: HashMap<&UndirectedGraph, f64> = HashMap::new();
        for (g, w) in &self.entries {
            *diff.entry(g).or_insert(0.0) += w;
        }
        for (g, w) in other {
            *diff.entry(g).or_insert(0.0) -= w;
        }
        0.5 * diff.values().map(|d| d.abs()).sum::<f64>()
    }
}

/// Posterior probability of each visited graph, proportional to its total
/// waiting time. Refuses graphs above [`GRAPH_POSTERIOR_SOFT_LIMIT`]
/// vertices unless `allow_large` is set.
pub fn graph_posterior(trace: &ChainTrace, skip_burnin: bool, allow_large: bool) -> Result<GraphPosterior> {
    let start = effective_start(trace, skip_burnin)?;
    let p = trace.p();
    if p > GRAPH_POSTERIOR_SOFT_LIMIT && !allow_large {
        return Err(Error::InvalidParameter(format!(
            "graph posterior over {p} vertices exceeds the soft limit of {GRAPH_POSTERIOR_SOFT_LIMIT}"
        )));
    }
    let mut weights: HashMap<UndirectedGraph, f64> = HashMap::new();
    let mut total = 0.0;
    let mut t = 0;
    trace.for_each_state(|g, rec| {
        if t >= start {
            total += rec.waiting_time;
            *weights.entry(g.clone()).or_insert(0.0) += rec.waiting_time;
        }
        t += 1;
    });
    let mut entries: Vec<(UndirectedGraph, f64)> =
        weights.into_iter().map(|(g, w)| (g, w / total)).collect();
    entries.sort_by(|(ga, a), (gb, b)| {
        b.total_cmp(a)
            .then_with(|| ga.edges().cmp(gb.edges()))
    });
    Ok(GraphPosterior { p, entries })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergencePoint {
    pub iteration: u64,
    /// Running estimate of the expected edge count (sum of edge probabilities).
    pub sum_edge_probs: f64,
    pub edge_count: usize,
}

/// Running sum of edge inclusion probabilities after each iteration, over the
/// whole trace including burn-in.
pub fn convergence_trace(trace: &ChainTrace) -> Vec<ConvergencePoint> {
    let mut weighted = 0.0;
    let mut total = 0.0;
    trace
        .records()
        .iter()
        .map(|rec| {
            weighted += rec.edge_count as f64 * rec.waiting_time;
            total += rec.waiting_time;
            ConvergencePoint {
                iteration: rec.iteration,
                sum_edge_probs: weighted / total,
                edge_count: rec.edge_count,
            }
        })
        .collect()
}

pub fn write_convergence_csv<W: Write>(points: &[ConvergencePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "sum_edge_probs", "edge_count"])?;
    for pt in points {
        w.write_record([
            pt.iteration.to_string(),
            pt.sum_edge_probs.to_string(),
            pt.edge_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

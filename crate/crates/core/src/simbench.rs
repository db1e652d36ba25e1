//! Synthetic benchmark: graph generators, binary data from a pairwise Markov
//! random field, and recovery metrics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;

use crate::data::CategoricalDataset;
use crate::error::{Error, Result};
use crate::estimate::{edge_inclusion_probs, median_graph, EdgeProbMatrix};
use crate::graph::{all_edges, pair_count, Edge, GraphPrior, UndirectedGraph};
use crate::hillclimb::hc_run;
use crate::rng::SeedStream;
use crate::sampler::{run_with_scorer, SamplerConfig};
use crate::score::{DirichletHyper, Scorer};

pub const SIMULATE_STREAM: &str = "simulate";
const GRAPH_STREAM: &str = "graph";
const WEIGHT_STREAM: &str = "weights";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GraphKind {
    Random,
    Cluster,
    ScaleFree,
}

impl GraphKind {
    pub const ALL: [GraphKind; 3] = [GraphKind::Random, GraphKind::Cluster, GraphKind::ScaleFree];

    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Random => "random",
            GraphKind::Cluster => "cluster",
            GraphKind::ScaleFree => "scalefree",
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(GraphKind::Random),
            "cluster" => Ok(GraphKind::Cluster),
            "scalefree" | "scale-free" => Ok(GraphKind::ScaleFree),
            other => Err(Error::InvalidParameter(format!("unknown graph kind `{other}`"))),
        }
    }
}

/// Generator settings. The vertex set is split into `components` contiguous
/// blocks of near-equal size; edges are drawn inside blocks only.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub p: usize,
    /// Edge probability inside a block (random and cluster kinds).
    pub beta: f64,
    /// Attachment count (scale-free kind).
    pub m: usize,
    pub components: usize,
}

impl GraphSpec {
    /// Defaults of the simulation study: random graphs use β = 0.4, clusters
    /// β = 0.6 in two components, scale-free graphs attach one edge per new
    /// vertex. At p ≥ 20 every kind is split into two components.
    pub fn new(kind: GraphKind, p: usize) -> Self {
        let (beta, components) = match kind {
            GraphKind::Random => (0.4, 1),
            GraphKind::Cluster => (0.6, 2),
            GraphKind::ScaleFree => (0.0, 1),
        };
        GraphSpec {
            kind,
            p,
            beta,
            m: 1,
            components: if p >= 20 { 2 } else { components },
        }
    }

    pub fn beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn components(mut self, components: usize) -> Self {
        self.components = components;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidParameter("p must be positive".into()));
        }
        if self.components == 0 || self.components > self.p {
            return Err(Error::InvalidParameter(format!(
                "components must lie in 1..={}, got {}",
                self.p, self.components
            )));
        }
        match self.kind {
            GraphKind::Random | GraphKind::Cluster if !(0.0..=1.0).contains(&self.beta) => Err(
                Error::InvalidParameter(format!("beta must lie in [0, 1], got {}", self.beta)),
            ),
            GraphKind::ScaleFree if self.m == 0 => {
                Err(Error::InvalidParameter("attachment count m must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Vertex ranges of the blocks.
    pub fn blocks(&self) -> Vec<std::ops::Range<usize>> {
        let base = self.p / self.components;
        let extra = self.p % self.components;
        let mut start = 0;
        (0..self.components)
            .map(|b| {
                let len = base + usize::from(b < extra);
                let r = start..start + len;
                start += len;
                r
            })
            .collect()
    }
}

fn barabasi_albert<R: Rng + ?Sized>(g: &mut UndirectedGraph, block: std::ops::Range<usize>, m: usize, rng: &mut R) {
    let s = block.len();
    if s < 2 {
        return;
    }
    let b = block.start;
    g.add_edge(b, b + 1).expect("distinct");
    // every vertex appears once per incident edge
    let mut ends = vec![b, b + 1];
    for v in 2..s {
        let want = m.min(v);
        let mut targets: Vec<usize> = Vec::with_capacity(want);
        while targets.len() < want {
            let t = ends[rng.random_range(0..ends.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            g.add_edge(b + v, t).expect("distinct");
            ends.push(b + v);
            ends.push(t);
        }
    }
}

pub fn gen_graph(spec: &GraphSpec, seed: u64) -> Result<UndirectedGraph> {
    spec.validate()?;
    let mut rng = SeedStream::new(seed).rng(GRAPH_STREAM);
    let mut g = UndirectedGraph::empty(spec.p);
    for block in spec.blocks() {
        match spec.kind {
            GraphKind::Random | GraphKind::Cluster => {
                for i in block.clone() {
                    for j in i + 1..block.end {
                        if rng.random::<f64>() < spec.beta {
                            g.add_edge(i, j)?;
                        }
                    }
                }
            }
            GraphKind::ScaleFree => barabasi_albert(&mut g, block, spec.m, &mut rng),
        }
    }
    Ok(g)
}

/// A draw from the graph prior: each pair independently present with
/// probability `beta`.
pub fn sample_prior_graph<R: Rng + ?Sized>(p: usize, prior: &GraphPrior, rng: &mut R) -> UndirectedGraph {
    let mut g = UndirectedGraph::empty(p);
    for e in all_edges(p) {
        if rng.random::<f64>() < prior.beta() {
            g.toggle(e);
        }
    }
    g
}

/// A graph with exactly `edges` edges chosen uniformly among all pairs.
pub fn random_graph_with_edges<R: Rng + ?Sized>(p: usize, edges: usize, rng: &mut R) -> Result<UndirectedGraph> {
    let total = pair_count(p);
    if edges > total {
        return Err(Error::InvalidParameter(format!(
            "{edges} edges requested but only {total} pairs exist"
        )));
    }
    let mut g = UndirectedGraph::empty(p);
    for idx in sample_indices(rng, total, edges) {
        g.toggle(Edge::from_index(idx, p));
    }
    Ok(g)
}

/// Pairwise binary Markov random field over spins s ∈ {−1, +1}:
/// P(s) ∝ exp(Σ_{(i,j)∈E} w_ij s_i s_j + Σ_i h_i s_i).
/// Variables are reported as x = (s + 1) / 2.
#[derive(Clone, Debug, PartialEq)]
pub struct MrfModel {
    graph: UndirectedGraph,
    weights: Vec<f64>,
    fields: Vec<f64>,
}

impl MrfModel {
    pub fn new(graph: UndirectedGraph, edge_weights: &[(Edge, f64)], fields: Vec<f64>) -> Result<Self> {
        let p = graph.p();
        if fields.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: fields.len(),
            });
        }
        if edge_weights.len() != graph.edge_count() {
            return Err(Error::InvalidParameter(format!(
                "{} weights given for {} edges",
                edge_weights.len(),
                graph.edge_count()
            )));
        }
        let mut weights = vec![0.0; pair_count(p)];
        let mut seen = vec![false; pair_count(p)];
        for &(e, w) in edge_weights {
            if e.j() >= p || !graph.contains(e) {
                return Err(Error::InvalidParameter(format!("weight given for non-edge {e}")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidParameter(format!("weight of {e} is not finite")));
            }
            if std::mem::replace(&mut seen[e.index(p)], true) {
                return Err(Error::InvalidParameter(format!("duplicate weight for {e}")));
            }
            weights[e.index(p)] = w;
        }
        if fields.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidParameter("fields must be finite".into()));
        }
        Ok(MrfModel { graph, weights, fields })
    }

    /// Weights with magnitude uniform on `[low, high]` and a fair random sign,
    /// zero fields.
    pub fn random_weights(graph: UndirectedGraph, low: f64, high: f64, seed: u64) -> Result<Self> {
        if !(0.0 <= low && low <= high && high.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight range [{low}, {high}] is invalid"
            )));
        }
        let mut rng = SeedStream::new(seed).rng(WEIGHT_STREAM);
        let edge_weights: Vec<(Edge, f64)> = graph
            .edges()
            .map(|e| {
                let mag = low + (high - low) * rng.random::<f64>();
                (e, if rng.random::<bool>() { mag } else { -mag })
            })
            .collect();
        let p = graph.p();
        Self::new(graph, &edge_weights, vec![0.0; p])
    }

    pub fn graph(&self) -> &UndirectedGraph {
        &self.graph
    }

    pub fn weight(&self, e: Edge) -> f64 {
        self.weights[e.index(self.graph.p())]
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GibbsSettings {
    /// Full sweeps discarded before the first sample.
    pub burn_in: usize,
    /// Sweeps between retained samples.
    pub thin: usize,
}

impl Default for GibbsSettings {
    fn default() -> Self {
        GibbsSettings { burn_in: 1000, thin: 10 }
    }
}

pub fn gen_data(model: &MrfModel, n: usize, seed: u64) -> Result<CategoricalDataset> {
    gen_data_with(model, n, seed, GibbsSettings::default())
}

/// Systematic-scan Gibbs sampling of `n` observations.
pub fn gen_data_with(model: &MrfModel, n: usize, seed: u64, gibbs: GibbsSettings) -> Result<CategoricalDataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if gibbs.thin == 0 {
        return Err(Error::InvalidParameter("thinning must be at least 1".into()));
    }
    let p = model.graph.p();
    let adj: Vec<Vec<(usize, f64)>> = (0..p)
        .map(|i| {
            model
                .graph
                .nbrs(i)
                .iter()
                .map(|&j| (j, model.weight(Edge::new(i, j).expect("neighbor"))))
                .collect()
        })
        .collect();
    let mut rng = SeedStream::new(seed).rng(SIMULATE_STREAM);
    let mut s: Vec<f64> = (0..p).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let sweep = |s: &mut [f64], rng: &mut rand_chacha::ChaCha8Rng| {
        for i in 0..p {
            let local = model.fields[i] + adj[i].iter().map(|&(j, w)| w * s[j]).sum::<f64>();
            let p_up = 1.0 / (1.0 + (-2.0 * local).exp());
            s[i] = if rng.random::<f64>() < p_up { 1.0 } else { -1.0 };
        }
    };
    for _ in 0..gibbs.burn_in {
        sweep(&mut s, &mut rng);
    }
    let mut rows: Vec<Vec<i64>> = Vec::with_capacity(n);
    for _ in 0..n {
        for _ in 0..gibbs.thin {
            sweep(&mut s, &mut rng);
        }
        rows.push(s.iter().map(|&v| i64::from(v > 0.0)).collect());
    }
    CategoricalDataset::from_rows_with_cardinalities(&rows, vec![2; p])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

pub fn confusion(true_g: &UndirectedGraph, est_g: &UndirectedGraph) -> Result<Confusion> {
    if true_g.p() != est_g.p() {
        return Err(Error::DimensionMismatch {
            expected: true_g.p(),
            found: est_g.p(),
        });
    }
    let mut c = Confusion::default();
    for e in all_edges(true_g.p()) {
        match (true_g.contains(e), est_g.contains(e)) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

impl Confusion {
    /// 2TP / (2TP + FP + FN); two empty graphs score 1.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }

    pub fn shd(&self) -> usize {
        self.fp + self.fn_
    }
}

pub fn f1_score(true_g: &UndirectedGraph, est_g: &UndirectedGraph) -> Result<f64> {
    Ok(confusion(true_g, est_g)?.f1())
}

pub fn shd(true_g: &UndirectedGraph, est_g: &UndirectedGraph) -> Result<usize> {
    Ok(confusion(true_g, est_g)?.shd())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    /// (FPR, TPR) from (0, 0) to (1, 1).
    pub points: Vec<(f64, f64)>,
    /// The true graph had no edges or no non-edges, so one axis is undefined
    /// and was fixed at zero.
    pub degenerate: bool,
}

impl RocCurve {
    /// Trapezoid-rule area under the curve.
    pub fn auc(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
            .sum()
    }
}

/// Sweep a threshold over the distinct edge probabilities, from highest to
/// lowest, calling an edge positive when its probability reaches the
/// threshold.
pub fn roc_points(probs: &EdgeProbMatrix, true_g: &UndirectedGraph) -> Result<RocCurve> {
    let p = true_g.p();
    if probs.p() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: probs.p(),
        });
    }
    let mut scored: Vec<(f64, bool)> = all_edges(p).map(|e| (probs.prob(e), true_g.contains(e))).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let pos = scored.iter().filter(|s| s.1).count();
    let neg = scored.len() - pos;
    let rate = |k: usize, total: usize| if total == 0 { 0.0 } else { k as f64 / total as f64 };
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0, 0);
    let mut k = 0;
    while k < scored.len() {
        let t = scored[k].0;
        while k < scored.len() && scored[k].0 == t {
            if scored[k].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push((rate(fp, neg), rate(tp, pos)));
    }
    if points.last() != Some(&(1.0, 1.0)) {
        points.push((1.0, 1.0));
    }
    Ok(RocCurve {
        points,
        degenerate: pos == 0 || neg == 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Bdmcmc,
    HcOr,
    HcAnd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Bdmcmc, Method::HcOr, Method::HcAnd];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bdmcmc => "BDMCMC",
            Method::HcOr => "HC(or)",
            Method::HcAnd => "HC(and)",
        }
    }
}

/// Simulation protocol. Graph and weights are shared by every sample size
/// within a replicate; data are drawn afresh per sample size.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    pub kinds: Vec<GraphKind>,
    pub ps: Vec<usize>,
    pub ns: Vec<usize>,
    pub replicates: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub weight_low: f64,
    pub weight_high: f64,
    pub alpha: f64,
    pub gibbs: GibbsSettings,
    pub seed: u64,
    /// Worker threads across replicates; 0 uses the global pool.
    pub threads: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            kinds: GraphKind::ALL.to_vec(),
            ps: vec![10, 20],
            ns: vec![200, 500, 1000],
            replicates: 50,
            iterations: 100_000,
            burn_in: 60_000,
            weight_low: 0.5,
            weight_high: 1.0,
            alpha: 0.5,
            gibbs: GibbsSettings::default(),
            seed: 1,
            threads: 0,
        }
    }
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() || self.ps.is_empty() || self.ns.is_empty() || self.replicates == 0 {
            return Err(Error::InvalidParameter(
                "protocol needs at least one kind, p, n and replicate".into(),
            ));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidParameter(format!(
                "burn-in {} must be below iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if let Some(&p) = self.ps.iter().find(|&&p| p < 2) {
            return Err(Error::InvalidParameter(format!("p must be at least 2, got {p}")));
        }
        DirichletHyper::new(self.alpha)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub kind: GraphKind,
    pub p: usize,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MethodScore {
    pub f1: f64,
    pub shd: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateResult {
    pub cell: Cell,
    pub replicate: usize,
    pub true_edges: usize,
    pub bdmcmc: MethodScore,
    pub hc_or: MethodScore,
    pub hc_and: MethodScore,
    pub roc: RocCurve,
}

impl ReplicateResult {
    pub fn score(&self, method: Method) -> MethodScore {
        match method {
            Method::Bdmcmc => self.bdmcmc,
            Method::HcOr => self.hc_or,
            Method::HcAnd => self.hc_and,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub cell: Cell,
    pub method: Method,
    pub mean_f1: f64,
    pub sd_f1: f64,
    pub mean_shd: f64,
    pub sd_shd: f64,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkResults {
    /// Ordered by kind, p, n, replicate as listed in the protocol.
    pub replicates: Vec<ReplicateResult>,
}

impl BenchmarkResults {
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells: Vec<Cell> = Vec::new();
        for r in &self.replicates {
            if !cells.contains(&r.cell) {
                cells.push(r.cell);
            }
        }
        cells
    }

    pub fn for_cell(&self, cell: Cell) -> impl Iterator<Item = &ReplicateResult> {
        self.replicates.iter().filter(move |r| r.cell == cell)
    }

    /// Mean and (sample) standard deviation per cell and method.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows = Vec::new();
        for cell in self.cells() {
            for method in Method::ALL {
                let scores: Vec<MethodScore> = self.for_cell(cell).map(|r| r.score(method)).collect();
                let (mean_f1, sd_f1) = mean_sd(&scores.iter().map(|s| s.f1).collect::<Vec<_>>());
                let (mean_shd, sd_shd) = mean_sd(&scores.iter().map(|s| s.shd as f64).collect::<Vec<_>>());
                rows.push(SummaryRow {
                    cell,
                    method,
                    mean_f1,
                    sd_f1,
                    mean_shd,
                    sd_shd,
                });
            }
        }
        rows
    }

    pub fn row(&self, cell: Cell, method: Method) -> Option<SummaryRow> {
        self.summary().into_iter().find(|r| r.cell == cell && r.method == method)
    }

    /// Mean ROC area per cell over replicates with a non-degenerate curve.
    pub fn mean_auc(&self, cell: Cell) -> Option<f64> {
        let aucs: Vec<f64> = self
            .for_cell(cell)
            .filter(|r| !r.roc.degenerate)
            .map(|r| r.roc.auc())
            .collect();
        (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64)
    }

    pub fn write_table_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "p", "n", "method", "mean_f1", "sd_f1", "mean_shd", "sd_shd"])?;
        for r in self.summary() {
            w.write_record([
                r.cell.kind.name().to_string(),
                r.cell.p.to_string(),
                r.cell.n.to_string(),
                r.method.name().to_string(),
                format!("{:.4}", r.mean_f1),
                format!("{:.4}", r.sd_f1),
                format!("{:.4}", r.mean_shd),
                format!("{:.4}", r.sd_shd),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One row per ROC point: `kind,p,n,replicate,fpr,tpr`.
    pub fn write_roc_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "p", "n", "replicate", "fpr", "tpr"])?;
        for r in &self.replicates {
            for &(fpr, tpr) in &r.roc.points {
                w.write_record([
                    r.cell.kind.name().to_string(),
                    r.cell.p.to_string(),
                    r.cell.n.to_string(),
                    r.replicate.to_string(),
                    fpr.to_string(),
                    tpr.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Seeds for one replicate: the graph and weights depend on (kind, p,
/// replicate); the data also on n.
fn replicate_streams(root: u64, cell: Cell, replicate: usize) -> (SeedStream, SeedStream) {
    let root = SeedStream::new(root);
    let model = root.child(&format!("{}/{}/{}", cell.kind, cell.p, replicate));
    let data = model.child(&format!("n={}", cell.n));
    (model, data)
}

/// Run one replicate of one cell.
pub fn run_replicate(protocol: &Protocol, cell: Cell, replicate: usize) -> Result<ReplicateResult> {
    let (model_seeds, data_seeds) = replicate_streams(protocol.seed, cell, replicate);
    let truth = gen_graph(&GraphSpec::new(cell.kind, cell.p), model_seeds.derive(GRAPH_STREAM))?;
    let model = MrfModel::random_weights(
        truth.clone(),
        protocol.weight_low,
        protocol.weight_high,
        model_seeds.derive(WEIGHT_STREAM),
    )?;
    let data = gen_data_with(&model, cell.n, data_seeds.derive(SIMULATE_STREAM), protocol.gibbs)?;
    let hyper = DirichletHyper::new(protocol.alpha)?;
    let scorer = Scorer::with_cache_capacity(&data, hyper, 1 << 16);
    let prior = GraphPrior::uniform();
    let config = SamplerConfig::new(protocol.iterations)
        .burn_in(protocol.burn_in)
        .prior(prior)
        .hyper(hyper)
        .seed(data_seeds.derive("sample"))
        .threads(1);
    let trace = run_with_scorer(&scorer, &config)?;
    let probs = edge_inclusion_probs(&trace, true)?;
    let median = median_graph(&probs, 0.5)?;
    let hc = hc_run(&scorer, Some(&prior))?;
    let score = |est: &UndirectedGraph| -> Result<MethodScore> {
        let c = confusion(&truth, est)?;
        Ok(MethodScore { f1: c.f1(), shd: c.shd() })
    };
    Ok(ReplicateResult {
        cell,
        replicate,
        true_edges: truth.edge_count(),
        bdmcmc: score(&median)?,
        hc_or: score(&hc.or_graph)?,
        hc_and: score(&hc.and_graph)?,
        roc: roc_points(&probs, &truth)?,
    })
}

/// Run every (kind, p, n, replicate) job in parallel.
pub fn run_benchmark(protocol: &Protocol) -> Result<BenchmarkResults> {
    protocol.validate()?;
    let mut jobs = Vec::new();
    for &kind in &protocol.kinds {
        for &p in &protocol.ps {
            for &n in &protocol.ns {
                for rep in 0..protocol.replicates {
                    jobs.push((Cell { kind, p, n }, rep));
                }
            }
        }
    }
    let work = || {
        jobs.par_iter()
            .map(|&(cell, rep)| run_replicate(protocol, cell, rep))
            .collect::<Result<Vec<_>>>()
    };
    let replicates = if protocol.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(protocol.threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work)?
    } else {
        work()?
    };
    Ok(BenchmarkResults { replicates })
}

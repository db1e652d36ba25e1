use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use catgraph_core::analysis::{Centrality, CentralityReport};
use catgraph_core::estimate::{
    convergence_trace, edge_inclusion_probs, graph_posterior, median_graph, write_convergence_csv,
    EdgeProbMatrix,
};
use catgraph_core::hillclimb::hc_run;
use catgraph_core::sampler::{run_with_scorer, ChainTrace, SamplerConfig, TraceFormat, UpdateMode};
use catgraph_core::score::DEFAULT_CACHE_CAPACITY;
use catgraph_core::simbench::{
    confusion, gen_data_with, gen_graph, roc_points, run_benchmark, sample_prior_graph,
    GibbsSettings, GraphKind, GraphSpec, Method, MrfModel, Protocol, SIMULATE_STREAM,
};
use catgraph_core::{
    CategoricalDataset, DirichletHyper, GraphPrior, Scorer, SeedStream, UndirectedGraph,
};

use crate::manifest::Run;
use crate::settings::{is_false, merge};

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output directory (created if missing)
    #[arg(long, env = "CATGRAPH_OUT")]
    pub out: PathBuf,
    /// JSON file of settings; explicit flags take precedence
    #[arg(long, env = "CATGRAPH_CONFIG")]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a true graph and a binary dataset drawn from it
    Simulate(SimulateArgs),
    /// Run the birth-death sampler on a dataset
    Sample(SampleArgs),
    /// Greedy hill-climbing baseline
    Hc(HcArgs),
    /// Edge probabilities, median graph and convergence trace from a chain trace
    Estimate(EstimateArgs),
    /// Centrality measures of a graph
    Centrality(CentralityArgs),
    /// Compare an estimate with the true graph
    Metrics(MetricsArgs),
    /// Simulation benchmark over graph kinds, sizes and sample sizes
    Bench(BenchArgs),
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Sample(a) => sample(a),
        Command::Hc(a) => hc(a),
        Command::Estimate(a) => estimate(a),
        Command::Centrality(a) => centrality(a),
        Command::Metrics(a) => metrics(a),
        Command::Bench(a) => bench(a),
    }
}

fn load_graph(path: &Path) -> Result<UndirectedGraph> {
    let file = File::open(path).with_context(|| format!("opening graph {}", path.display()))?;
    UndirectedGraph::read_edge_list(BufReader::new(file))
        .with_context(|| format!("reading graph {}", path.display()))
}

fn load_data(path: &Path) -> Result<CategoricalDataset> {
    CategoricalDataset::load(path).with_context(|| format!("reading data {}", path.display()))
}

fn required<'a>(v: &'a Option<PathBuf>, name: &str) -> Result<&'a Path> {
    v.as_deref().ok_or_else(|| anyhow!("missing required setting `{name}`"))
}

// ---------------------------------------------------------------- simulate

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Graph kind: random, cluster or scalefree
    #[arg(long, env = "CATGRAPH_KIND")]
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[arg(long, env = "CATGRAPH_P")]
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<usize>,
    /// Number of observations
    #[arg(long, env = "CATGRAPH_N")]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Edge probability inside a component (kind default when omitted)
    #[arg(long, env = "CATGRAPH_BETA")]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    /// Attachment count for scale-free graphs
    #[arg(long, env = "CATGRAPH_M")]
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[arg(long, env = "CATGRAPH_COMPONENTS")]
    #[serde(skip_serializing_if = "Option::is_none")]
    components: Option<usize>,
    #[arg(long, env = "CATGRAPH_WEIGHT_LOW")]
    #[serde(skip_serializing_if = "Option::is_none")]
    weight_low: Option<f64>,
    #[arg(long, env = "CATGRAPH_WEIGHT_HIGH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    weight_high: Option<f64>,
    /// Gibbs sweeps discarded before sampling
    #[arg(long, env = "CATGRAPH_GIBBS_BURNIN")]
    #[serde(skip_serializing_if = "Option::is_none")]
    gibbs_burnin: Option<usize>,
    /// Gibbs sweeps between retained observations
    #[arg(long, env = "CATGRAPH_THIN")]
    #[serde(skip_serializing_if = "Option::is_none")]
    thin: Option<usize>,
    /// Dataset format: csv or sparse
    #[arg(long, env = "CATGRAPH_DATA_FORMAT")]
    #[serde(skip_serializing_if = "Option::is_none")]
    data_format: Option<String>,
    #[arg(long, env = "CATGRAPH_SEED")]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(default, deny_unknown_fields)]
struct SimulateSettings {
    kind: String,
    p: usize,
    n: usize,
    beta: Option<f64>,
    m: usize,
    components: Option<usize>,
    weight_low: f64,
    weight_high: f64,
    gibbs_burnin: usize,
    thin: usize,
    data_format: String,
    seed: u64,
}

impl Default for SimulateSettings {
    fn default() -> Self {
        let gibbs = GibbsSettings::default();
        SimulateSettings {
            kind: "random".into(),
            p: 10,
            n: 1000,
            beta: None,
            m: 1,
            components: None,
            weight_low: 0.5,
            weight_high: 1.0,
            gibbs_burnin: gibbs.burn_in,
            thin: gibbs.thin,
            data_format: "csv".into(),
            seed: 1,
        }
    }
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let s: SimulateSettings = merge(&args, args.common.config.as_deref())?;
    let kind: GraphKind = s.kind.parse()?;
    let mut spec = GraphSpec::new(kind, s.p).m(s.m);
    if let Some(beta) = s.beta {
        spec = spec.beta(beta);
    }
    if let Some(c) = s.components {
        spec = spec.components(c);
    }
    spec.validate()?;
    let sparse = match s.data_format.as_str() {
        "csv" => false,
        "sparse" => true,
        other => bail!("unknown data format `{other}` (expected csv or sparse)"),
    };
    let mut run = Run::start(&args.common.out, "simulate", &s, Some(s.seed), &[])?;
    let seeds = SeedStream::new(s.seed);
    let graph = gen_graph(&spec, seeds.derive("graph"))?;
    let model = MrfModel::random_weights(graph.clone(), s.weight_low, s.weight_high, seeds.derive("weights"))?;
    let gibbs = GibbsSettings {
        burn_in: s.gibbs_burnin,
        thin: s.thin,
    };
    let data = gen_data_with(&model, s.n, seeds.derive(SIMULATE_STREAM), gibbs)?;

    let mut w = run.create("graph.edges")?;
    graph.write_edge_list(&mut w)?;
    w.flush()?;
    let mut w = run.create("weights.csv")?;
    writeln!(w, "i,j,weight")?;
    for e in graph.edges() {
        writeln!(w, "{},{},{}", e.i(), e.j(), model.weight(e))?;
    }
    w.flush()?;
    if sparse {
        let mut w = run.create("data.txt")?;
        data.write_sparse_binary(&mut w)?;
        w.flush()?;
    } else {
        let mut w = run.create("data.csv")?;
        data.write_csv(&mut w)?;
        w.flush()?;
    }
    run.set_summary(json!({
        "edges": graph.edge_count(),
        "cells": data.n_cells(),
        "components": spec.components,
        "beta": spec.beta,
    }));
    run.finish()
}

// ------------------------------------------------------------------ sample

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Dataset (dense CSV or sparse pattern file)
    #[arg(long, env = "CATGRAPH_DATA")]
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<PathBuf>,
    #[arg(long, env = "CATGRAPH_ITERS")]
    #[serde(skip_serializing_if = "Option::is_none")]
    iters: Option<usize>,
    /// Leading iterations marked as burn-in in the trace
    #[arg(long, env = "CATGRAPH_BURNIN")]
    #[serde(skip_serializing_if = "Option::is_none")]
    burnin: Option<usize>,
    /// Prior edge inclusion probability
    #[arg(long, env = "CATGRAPH_BETA")]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    /// Dirichlet hyperparameter
    #[arg(long, env = "CATGRAPH_ALPHA")]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    /// Toggle this many edges per iteration (multiple-edge mode)
    #[arg(long, env = "CATGRAPH_N0")]
    #[serde(skip_serializing_if = "Option::is_none")]
    n0: Option<usize>,
    #[arg(long, env = "CATGRAPH_THREADS")]
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
    #[arg(long, env = "CATGRAPH_SEED")]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Starting graph: empty, full, prior, or an edge-list file
    #[arg(long, env = "CATGRAPH_START")]
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<String>,
    /// Trace format: csv or bin
    #[arg(long, env = "CATGRAPH_TRACE_FORMAT")]
    #[serde(skip_serializing_if = "Option::is_none")]
    trace_format: Option<String>,
    /// Local-score cache entries (0 disables the cache)
    #[arg(long, env = "CATGRAPH_CACHE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    cache: Option<usize>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(default, deny_unknown_fields)]
struct SampleSettings {
    data: Option<PathBuf>,
    iters: usize,
    burnin: usize,
    beta: f64,
    alpha: f64,
    n0: Option<usize>,
    threads: usize,
    seed: u64,
    start: String,
    trace_format: String,
    cache: usize,
}

impl Default for SampleSettings {
    fn default() -> Self {
        SampleSettings {
            data: None,
            iters: 10_000,
            burnin: 0,
            beta: 0.5,
            alpha: 0.5,
            n0: None,
            threads: 1,
            seed: 1,
            start: "empty".into(),
            trace_format: "csv".into(),
            cache: DEFAULT_CACHE_CAPACITY,
        }
    }
}

fn start_graph(spec: &str, p: usize, prior: &GraphPrior, seeds: &SeedStream) -> Result<UndirectedGraph> {
    Ok(match spec {
        "empty" => UndirectedGraph::empty(p),
        "full" => UndirectedGraph::complete(p),
        "prior" => sample_prior_graph(p, prior, &mut seeds.rng("start")),
        path => {
            let g = load_graph(Path::new(path))?;
            if g.p() != p {
                bail!("start graph has {} vertices but the data have {p}", g.p());
            }
            g
        }
    })
}

fn sample(args: SampleArgs) -> Result<()> {
    let s: SampleSettings = merge(&args, args.common.config.as_deref())?;
    let data_path = required(&s.data, "data")?;
    let format = match s.trace_format.as_str() {
        "csv" => TraceFormat::Csv,
        "bin" => TraceFormat::Binary,
        other => bail!("unknown trace format `{other}` (expected csv or bin)"),
    };
    let mut inputs = vec![data_path];
    let start_path = PathBuf::from(&s.start);
    if !matches!(s.start.as_str(), "empty" | "full" | "prior") {
        inputs.push(&start_path);
    }
    let mut run = Run::start(&args.common.out, "sample", &s, Some(s.seed), &inputs)?;
    let data = load_data(data_path)?;
    let prior = GraphPrior::new(s.beta)?;
    let hyper = DirichletHyper::new(s.alpha)?;
    let seeds = SeedStream::new(s.seed);
    let initial = start_graph(&s.start, data.p(), &prior, &seeds)?;
    let mode = match s.n0 {
        Some(n0) => UpdateMode::Multiple { n0 },
        None => UpdateMode::Single,
    };
    let config = SamplerConfig::new(s.iters)
        .burn_in(s.burnin)
        .prior(prior)
        .hyper(hyper)
        .seed(s.seed)
        .mode(mode)
        .threads(s.threads)
        .initial(initial)
        .cache_capacity(s.cache);
    let scorer = Scorer::with_cache_capacity(&data, hyper, s.cache);
    let trace = run_with_scorer(&scorer, &config)?;

    let name = match format {
        TraceFormat::Csv => "trace.csv",
        TraceFormat::Binary => "trace.bin",
    };
    let path = run.path(name);
    trace.save(&path, format)?;
    let final_graph = trace.final_graph();
    let mut w = run.create("final.edges")?;
    final_graph.write_edge_list(&mut w)?;
    w.flush()?;
    run.set_summary(json!({
        "p": data.p(),
        "iterations": trace.len(),
        "final_edges": final_graph.edge_count(),
        "jump_time": trace.records().last().map_or(0.0, |r| r.jump_time),
    }));
    run.finish()
}

// ---------------------------------------------------------------------- hc

#[derive(Args, Debug, Serialize)]
pub struct HcArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    #[arg(long, env = "CATGRAPH_DATA")]
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<PathBuf>,
    #[arg(long, env = "CATGRAPH_ALPHA")]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[arg(long, env = "CATGRAPH_BETA")]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    /// Leave the graph prior out of the neighborhood objective
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    no_prior: bool,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(default, deny_unknown_fields)]
struct HcSettings {
    data: Option<PathBuf>,
    alpha: f64,
    beta: f64,
    no_prior: bool,
}

impl Default for HcSettings {
    fn default() -> Self {
        HcSettings {
            data: None,
            alpha: 0.5,
            beta: 0.5,
            no_prior: false,
        }
    }
}

fn hc(args: HcArgs) -> Result<()> {
    let s: HcSettings = merge(&args, args.common.config.as_deref())?;
    let data_path = required(&s.data, "data")?;
    let mut run = Run::start(&args.common.out, "hc", &s, None, &[data_path])?;
    let data = load_data(data_path)?;
    let scorer = Scorer::new(&data, DirichletHyper::new(s.alpha)?);
    let prior = GraphPrior::new(s.beta)?;
    let res = hc_run(&scorer, (!s.no_prior).then_some(&prior))?;
    for (name, g) in [("hc_and.edges", &res.and_graph), ("hc_or.edges", &res.or_graph)] {
        let mut w = run.create(name)?;
        g.write_edge_list(&mut w)?;
        w.flush()?;
    }
    let mut w = run.create("neighborhoods.csv")?;
    writeln!(w, "vertex,neighbors,local_score")?;
    for (v, nbd) in res.neighborhoods.iter().enumerate() {
        let list: Vec<String> = nbd.iter().map(usize::to_string).collect();
        writeln!(w, "{v},{},{}", list.join(";"), res.local_scores[v])?;
    }
    w.flush()?;
    run.set_summary(json!({
        "and_edges": res.and_graph.edge_count(),
        "or_edges": res.or_graph.edge_count(),
    }));
    run.finish()
}

// ---------------------------------------------------------------- estimate

#[derive(Args, Debug, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Chain trace (CSV or binary)
    #[arg(long, env = "CATGRAPH_TRACE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<PathBuf>,
    /// Median-graph threshold
    #[arg(long, env = "CATGRAPH_THRESHOLD")]
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    /// Keep burn-in iterations in the estimates
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    include_burnin: bool,
    /// Also write the posterior over visited graphs
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    graph_posterior: bool,
    /// Allow the graph posterior beyond the small-graph limit
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    allow_large: bool,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(default, deny_unknown_fields)]
struct EstimateSettings {
    trace: Option<PathBuf>,
    threshold: f64,
    include_burnin: bool,
    graph_posterior: bool,
    allow_large: bool,
}

impl Default for EstimateSettings {
    fn default() -> Self {
        EstimateSettings {
            trace: None,
            threshold: 0.5,
            include_burnin: false,
            graph_posterior: false,
            allow_large: false,
        }
    }
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let s: EstimateSettings = merge(&args, args.common.config.as_deref())?;
    let trace_path = required(&s.trace, "trace")?;
    let mut run = Run::start(&args.common.out, "estimate", &s, None, &[trace_path])?;
    let trace = ChainTrace::load(trace_path).with_context(|| format!("reading trace {}", trace_path.display()))?;
    trace.validate()?;
    let skip = !s.include_burnin;
    let probs = edge_inclusion_probs(&trace, skip)?;
    let median = median_graph(&probs, s.threshold)?;
    let posterior = if s.graph_posterior {
        Some(graph_posterior(&trace, skip, s.allow_large)?)
    } else {
        None
    };

    let mut w = run.create("edge_probs.csv")?;
    probs.write_pairs_csv(&mut w)?;
    w.flush()?;
    let mut w = run.create("edge_probs_dense.csv")?;
    probs.write_dense_csv(&mut w)?;
    w.flush()?;
    let mut w = run.create("median.edges")?;
    median.write_edge_list(&mut w)?;
    w.flush()?;
    let mut w = run.create("convergence.csv")?;
    write_convergence_csv(&convergence_trace(&trace), &mut w)?;
    w.flush()?;
    if let Some(post) = posterior {
        let mut w = run.create("graph_posterior.csv")?;
        post.write_csv(&mut w)?;
        w.flush()?;
    }
    run.set_summary(json!({
        "expected_edges": probs.sum(),
        "median_edges": median.edge_count(),
    }));
    run.finish()
}

// -------------------------------------------------------------- centrality

#[derive(Args, Debug, Serialize)]
pub struct CentralityArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Graph in edge-list format
    #[arg(long, env = "CATGRAPH_GRAPH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    graph: Option<PathBuf>,
    /// Vertex labels, one per line
    #[arg(long, env = "CATGRAPH_LABELS")]
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<PathBuf>,
    /// Length of each ranking
    #[arg(long, env = "CATGRAPH_TOP_K")]
    #[serde(skip_serializing_if = "Option::is_none")]
    top_k: Option<usize>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(default, deny_unknown_fields)]
struct CentralitySettings {
    graph: Option<PathBuf>,
    labels: Option<PathBuf>,
    top_k: usize,
}

impl Default for CentralitySettings {
    fn default() -> Self {
        CentralitySettings {
            graph: None,
            labels: None,
            top_k: 10,
        }
    }
}

fn centrality(args: CentralityArgs) -> Result<()> {
    let s: CentralitySettings = merge(&args, args.common.config.as_deref())?;
    let graph_path = required(&s.graph, "graph")?;
    let mut inputs = vec![graph_path];
    if let Some(l) = &s.labels {
        inputs.push(l);
    }
    let mut run = Run::start(&args.common.out, "centrality", &s, None, &inputs)?;
    let g = load_graph(graph_path)?;
    let labels: Vec<String> = match &s.labels {
        Some(path) => BufReader::new(File::open(path)?)
            .lines()
            .map(|l| l.map(|l| l.trim().to_string()))
            .filter(|l| l.as_ref().map_or(true, |l| !l.is_empty()))
            .collect::<std::io::Result<_>>()?,
        None => Vec::new(),
    };
    let report = CentralityReport::compute(&g, &labels)?;
    if s.top_k == 0 || s.top_k > g.p() {
        bail!("top_k must lie in 1..={}", g.p());
    }
    let mut w = run.create("centrality.csv")?;
    report.write_csv(&mut w)?;
    w.flush()?;
    let mut w = run.create("top_k.csv")?;
    writeln!(w, "measure,rank,vertex,label,value")?;
    for m in Centrality::ALL {
        for (rank, (v, value)) in report.top_k(m, s.top_k).into_iter().enumerate() {
            writeln!(w, "{},{},{v},{},{value}", m.name(), rank + 1, report.labels[v])?;
        }
    }
    w.flush()?;
    run.set_summary(json!({ "pagerank_converged": report.pagerank_converged }));
    run.finish()
}

// ----------------------------------------------------------------- metrics

#[derive(Args, Debug, Serialize)]
pub struct MetricsArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// True graph
    #[arg(long, env = "CATGRAPH_TRUTH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<PathBuf>,
    /// Estimated graph
    #[arg(long, env = "CATGRAPH_ESTIMATE")]
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<PathBuf>,
    /// Edge probabilities (i,j,prob) for a ROC curve
    #[arg(long, env = "CATGRAPH_PROBS")]
    #[serde(skip_serializing_if = "Option::is_none")]
    probs: Option<PathBuf>,
}

#[derive(Serialize, Deserialize, Debug, Default)]
#[serde(default, deny_unknown_fields)]
struct MetricsSettings {
    truth: Option<PathBuf>,
    estimate: Option<PathBuf>,
    probs: Option<PathBuf>,
}

fn metrics(args: MetricsArgs) -> Result<()> {
    let s: MetricsSettings = merge(&args, args.common.config.as_deref())?;
    let truth_path = required(&s.truth, "truth")?;
    if s.estimate.is_none() && s.probs.is_none() {
        bail!("metrics needs `estimate`, `probs`, or both");
    }
    let mut inputs = vec![truth_path];
    inputs.extend(s.estimate.as_deref());
    inputs.extend(s.probs.as_deref());
    let mut run = Run::start(&args.common.out, "metrics", &s, None, &inputs)?;
    let truth = load_graph(truth_path)?;
    let mut out = serde_json::Map::new();
    if let Some(path) = &s.estimate {
        let est = load_graph(path)?;
        let c = confusion(&truth, &est)?;
        out.insert("f1".into(), json!(c.f1()));
        out.insert("shd".into(), json!(c.shd()));
        out.insert("tp".into(), json!(c.tp));
        out.insert("fp".into(), json!(c.fp));
        out.insert("fn".into(), json!(c.fn_));
        out.insert("tn".into(), json!(c.tn));
    }
    if let Some(path) = &s.probs {
        let probs = EdgeProbMatrix::read_pairs_csv(File::open(path)?)
            .with_context(|| format!("reading edge probabilities {}", path.display()))?;
        let roc = roc_points(&probs, &truth)?;
        out.insert("auc".into(), json!(roc.auc()));
        out.insert("roc_degenerate".into(), json!(roc.degenerate));
        let mut w = run.create("roc.csv")?;
        writeln!(w, "fpr,tpr")?;
        for (fpr, tpr) in &roc.points {
            writeln!(w, "{fpr},{tpr}")?;
        }
        w.flush()?;
    }
    let mut w = run.create("metrics.json")?;
    serde_json::to_writer_pretty(&mut w, &out)?;
    writeln!(w)?;
    w.flush()?;
    run.set_summary(serde_json::Value::Object(out));
    run.finish()
}

// ------------------------------------------------------------------- bench

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    #[command(flatten)]
    #[serde(skip)]
    common: Common,
    /// Graph kinds, comma separated
    #[arg(long, env = "CATGRAPH_KINDS", value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    kinds: Option<Vec<String>>,
    #[arg(long, env = "CATGRAPH_PS", value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    ps: Option<Vec<usize>>,
    #[arg(long, env = "CATGRAPH_NS", value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    ns: Option<Vec<usize>>,
    #[arg(long, env = "CATGRAPH_REPLICATES")]
    #[serde(skip_serializing_if = "Option::is_none")]
    replicates: Option<usize>,
    #[arg(long, env = "CATGRAPH_ITERS")]
    #[serde(skip_serializing_if = "Option::is_none")]
    iters: Option<usize>,
    #[arg(long, env = "CATGRAPH_BURNIN")]
    #[serde(skip_serializing_if = "Option::is_none")]
    burnin: Option<usize>,
    #[arg(long, env = "CATGRAPH_WEIGHT_LOW")]
    #[serde(skip_serializing_if = "Option::is_none")]
    weight_low: Option<f64>,
    #[arg(long, env = "CATGRAPH_WEIGHT_HIGH")]
    #[serde(skip_serializing_if = "Option::is_none")]
    weight_high: Option<f64>,
    #[arg(long, env = "CATGRAPH_ALPHA")]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[arg(long, env = "CATGRAPH_GIBBS_BURNIN")]
    #[serde(skip_serializing_if = "Option::is_none")]
    gibbs_burnin: Option<usize>,
    #[arg(long, env = "CATGRAPH_THIN")]
    #[serde(skip_serializing_if = "Option::is_none")]
    thin: Option<usize>,
    #[arg(long, env = "CATGRAPH_SEED")]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Worker threads across replicates (0 = all cores)
    #[arg(long, env = "CATGRAPH_THREADS")]
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(default, deny_unknown_fields)]
struct BenchSettings {
    kinds: Vec<String>,
    ps: Vec<usize>,
    ns: Vec<usize>,
    replicates: usize,
    iters: usize,
    burnin: usize,
    weight_low: f64,
    weight_high: f64,
    alpha: f64,
    gibbs_burnin: usize,
    thin: usize,
    seed: u64,
    threads: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        let p = Protocol::default();
        BenchSettings {
            kinds: p.kinds.iter().map(|k| k.name().to_string()).collect(),
            ps: p.ps,
            ns: p.ns,
            replicates: p.replicates,
            iters: p.iterations,
            burnin: p.burn_in,
            weight_low: p.weight_low,
            weight_high: p.weight_high,
            alpha: p.alpha,
            gibbs_burnin: p.gibbs.burn_in,
            thin: p.gibbs.thin,
            seed: p.seed,
            threads: p.threads,
        }
    }
}

fn bench(args: BenchArgs) -> Result<()> {
    let s: BenchSettings = merge(&args, args.common.config.as_deref())?;
    let protocol = Protocol {
        kinds: s.kinds.iter().map(|k| k.parse()).collect::<catgraph_core::Result<_>>()?,
        ps: s.ps.clone(),
        ns: s.ns.clone(),
        replicates: s.replicates,
        iterations: s.iters,
        burn_in: s.burnin,
        weight_low: s.weight_low,
        weight_high: s.weight_high,
        alpha: s.alpha,
        gibbs: GibbsSettings {
            burn_in: s.gibbs_burnin,
            thin: s.thin,
        },
        seed: s.seed,
        threads: s.threads,
    };
    protocol.validate()?;
    let mut run = Run::start(&args.common.out, "bench", &s, Some(s.seed), &[])?;
    let results = run_benchmark(&protocol)?;

    let mut w = run.create("table.csv")?;
    results.write_table_csv(&mut w)?;
    w.flush()?;
    let mut w = run.create("roc.csv")?;
    results.write_roc_csv(&mut w)?;
    w.flush()?;
    let mut w = run.create("replicates.csv")?;
    writeln!(w, "kind,p,n,replicate,true_edges,method,f1,shd,auc")?;
    for r in &results.replicates {
        for m in Method::ALL {
            let sc = r.score(m);
            let auc = if r.roc.degenerate {
                String::new()
            } else {
                r.roc.auc().to_string()
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{auc}",
                r.cell.kind,
                r.cell.p,
                r.cell.n,
                r.replicate,
                r.true_edges,
                m.name(),
                sc.f1,
                sc.shd
            )?;
        }
    }
    w.flush()?;
    let aucs: Vec<_> = results
        .cells()
        .into_iter()
        .map(|c| json!({"kind": c.kind.name(), "p": c.p, "n": c.n, "mean_auc": results.mean_auc(c)}))
        .collect();
    run.set_summary(json!({ "cells": aucs }));
    run.finish()
}

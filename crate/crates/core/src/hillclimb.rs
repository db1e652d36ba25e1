//! Greedy hill-climbing baseline.
//!
//! Each vertex's neighborhood is grown and pruned one vertex at a time to
//! maximize its local score, then the per-vertex estimates are combined into
//! a graph with the "and" or the "or" rule.

use rayon::prelude::*;

use crate::data::CategoricalDataset;
use crate::error::{Error, Result};
use crate::graph::{GraphPrior, UndirectedGraph};
use crate::score::{DirichletHyper, Scorer};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// Keep `(i, j)` only when each endpoint selected the other.
    And,
    /// Keep `(i, j)` when either endpoint selected the other.
    Or,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "and" => Ok(Criterion::And),
            "or" => Ok(Criterion::Or),
            other => Err(Error::InvalidParameter(format!("unknown criterion `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HcResult {
    pub neighborhoods: Vec<Vec<usize>>,
    pub and_graph: UndirectedGraph,
    pub or_graph: UndirectedGraph,
    /// Local score of each vertex at its final neighborhood.
    pub local_scores: Vec<f64>,
}

impl HcResult {
    pub fn graph(&self, criterion: Criterion) -> &UndirectedGraph {
        match criterion {
            Criterion::And => &self.and_graph,
            Criterion::Or => &self.or_graph,
        }
    }
}

/// Greedy neighborhood search for vertex `i`.
///
/// The objective is the local score plus half the prior log-odds per
/// neighbor (each edge is shared by two vertices). Moves are single
/// additions or removals; the first strictly improving candidate in
/// ascending vertex order is taken until none improves.
pub fn hc_neighborhood(scorer: &Scorer<'_>, i: usize, prior: Option<&GraphPrior>) -> Result<Vec<usize>> {
    let p = scorer.data().p();
    if i >= p {
        return Err(Error::VertexOutOfRange { vertex: i, p });
    }
    let half_odds = prior.map_or(0.0, |pr| 0.5 * pr.log_odds());
    let candidates: Vec<usize> = (0..p).filter(|&k| k != i).collect();
    let mut nbd: Vec<usize> = Vec::new();
    loop {
        let deltas = scorer.toggle_deltas(i, &nbd, &candidates);
        let improving = candidates.iter().zip(&deltas).find_map(|(&k, &d)| {
            let sign = if nbd.binary_search(&k).is_ok() { -1.0 } else { 1.0 };
            (d + sign * half_odds > 0.0).then_some(k)
        });
        match improving {
            Some(k) => match nbd.binary_search(&k) {
                Ok(pos) => {
                    nbd.remove(pos);
                }
                Err(pos) => nbd.insert(pos, k),
            },
            None => return Ok(nbd),
        }
    }
}

/// Combine per-vertex neighborhoods into one graph.
pub fn combine(neighborhoods: &[Vec<usize>], criterion: Criterion) -> Result<UndirectedGraph> {
    let p = neighborhoods.len();
    let mut g = UndirectedGraph::empty(p);
    for (i, nbd) in neighborhoods.iter().enumerate() {
        for &j in nbd {
            if j >= p {
                return Err(Error::VertexOutOfRange { vertex: j, p });
            }
            if j == i {
                return Err(Error::SelfLoop(i));
            }
            let mutual = neighborhoods[j].contains(&i);
            if criterion == Criterion::Or || mutual {
                g.add_edge(i, j)?;
            }
        }
    }
    Ok(g)
}

/// Run the per-vertex searches (in parallel) and both combinations.
pub fn hc_run(scorer: &Scorer<'_>, prior: Option<&GraphPrior>) -> Result<HcResult> {
    let p = scorer.data().p();
    let neighborhoods = (0..p)
        .into_par_iter()
        .map(|i| hc_neighborhood(scorer, i, prior))
        .collect::<Result<Vec<_>>>()?;
    let local_scores = neighborhoods
        .iter()
        .enumerate()
        .map(|(i, nbd)| scorer.score(i, nbd))
        .collect();
    Ok(HcResult {
        and_graph: combine(&neighborhoods, Criterion::And)?,
        or_graph: combine(&neighborhoods, Criterion::Or)?,
        neighborhoods,
        local_scores,
    })
}

pub fn hc_learn(
    data: &CategoricalDataset,
    hyper: DirichletHyper,
    prior: Option<&GraphPrior>,
    criterion: Criterion,
) -> Result<UndirectedGraph> {
    let scorer = Scorer::new(data, hyper);
    Ok(hc_run(&scorer, prior)?.graph(criterion).clone())
}
